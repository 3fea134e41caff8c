//! Optimal one-to-one user to antenna mapping on equivalent-channel magnitudes.

use crate::error::{Result, SimError};
use crate::model::{AntennaAssignment, EquivalentChannel};

/// Minimum-cost assignment of every row to a distinct column (`rows <= cols`),
/// shortest-augmenting-path Hungarian method. Returns the column of each row.
fn hungarian(cost: &[Vec<f64>], cols: usize) -> Vec<usize> {
    let n = cost.len();
    let m = cols;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out = vec![0; n];
    for j in 1..=m {
        if p[j] != 0 {
            out[p[j] - 1] = j - 1;
        }
    }
    out
}

/// Best total gain achievable for `users` given that `taken` antennas are off limits.
fn best_gain(gain: &[Vec<f64>], users: &[usize], taken: &[bool]) -> f64 {
    if users.is_empty() {
        return 0.0;
    }
    let free: Vec<usize> = (0..taken.len()).filter(|&m| !taken[m]).collect();
    let cost: Vec<Vec<f64>> = users
        .iter()
        .map(|&k| free.iter().map(|&m| -gain[k][m]).collect())
        .collect();
    hungarian(&cost, free.len())
        .iter()
        .zip(users)
        .map(|(&c, &k)| gain[k][free[c]])
        .sum()
}

/// Maximises `sum_k |full[m(k), k]|` over injective maps.
///
/// Among equally good maps the result is the lexicographically smallest antenna
/// list: user 0 takes the lowest antenna that still admits an optimal
/// completion, then user 1, and so on.
pub fn assign_antennas(eq: &EquivalentChannel) -> Result<AntennaAssignment> {
    let (m, k) = eq.full.shape();
    if m < k {
        return Err(SimError::TooFewAntennas {
            needed: k,
            available: m,
        });
    }
    // gain[user][antenna]
    let gain: Vec<Vec<f64>> = (0..k)
        .map(|u| (0..m).map(|a| eq.full[(a, u)].norm()).collect())
        .collect();
    let all: Vec<usize> = (0..k).collect();
    let optimum = best_gain(&gain, &all, &vec![false; m]);
    let tol = 1e-12 * optimum.abs().max(f64::MIN_POSITIVE);

    let mut taken = vec![false; m];
    let mut fixed_gain = 0.0;
    let mut antenna_of_user = Vec::with_capacity(k);
    for user in 0..k {
        let rest = &all[user + 1..];
        let mut choice = None;
        for a in 0..m {
            if taken[a] {
                continue;
            }
            taken[a] = true;
            let total = fixed_gain + gain[user][a] + best_gain(&gain, rest, &taken);
            taken[a] = false;
            if total >= optimum - tol {
                choice = Some(a);
                break;
            }
        }
        let choice = choice.expect("an optimal completion always exists");
        taken[choice] = true;
        fixed_gain += gain[user][choice];
        antenna_of_user.push(choice);
    }
    AntennaAssignment::new(antenna_of_user, m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::CMat;
    use num_complex::Complex64;

    fn eq_from(rows: &[&[f64]]) -> EquivalentChannel {
        let m = rows.len();
        let k = rows[0].len();
        EquivalentChannel {
            full: CMat::from_fn(m, k, |i, j| Complex64::new(rows[i][j], 0.0)),
            jammer: None,
        }
    }

    #[test]
    fn diagonal_dominant_keeps_identity() {
        let a = assign_antennas(&eq_from(&[&[1.0, 0.1], &[0.2, 2.0]])).unwrap();
        assert_eq!(a.antenna_of_user, vec![0, 1]);
    }

    #[test]
    fn anti_diagonal_swaps() {
        let a = assign_antennas(&eq_from(&[&[0.1, 1.0], &[1.0, 0.1]])).unwrap();
        assert_eq!(a.antenna_of_user, vec![1, 0]);
    }

    #[test]
    fn single_user_takes_argmax_with_low_index_ties() {
        let a = assign_antennas(&eq_from(&[&[0.3], &[0.9], &[0.2]])).unwrap();
        assert_eq!(a.antenna_of_user, vec![1]);
        let a = assign_antennas(&eq_from(&[&[0.3], &[0.9], &[0.9]])).unwrap();
        assert_eq!(a.antenna_of_user, vec![1]);
    }

    #[test]
    fn all_ties_resolve_to_identity() {
        let a = assign_antennas(&eq_from(&[&[1.0, 1.0], &[1.0, 1.0], &[1.0, 1.0]])).unwrap();
        assert_eq!(a.antenna_of_user, vec![0, 1]);
    }

    #[test]
    fn too_few_antennas() {
        assert!(matches!(
            assign_antennas(&eq_from(&[&[1.0, 1.0]])),
            Err(SimError::TooFewAntennas { .. })
        ));
    }
}
