//! Forward model of the stack: fixed channels interleaved with phase layers.
//!
//! Uplink order is `H -> Phi_1 -> W_2 -> Phi_2 -> ... -> Phi_L -> G`.

use num_complex::Complex64;

use crate::channel::ChannelSet;
use crate::error::{Result, SimError};
use crate::phases::PhaseBook;
use crate::{CMat, CVec};

/// Users (and jammer, if present) to every base-station antenna.
#[derive(Clone, Debug, PartialEq)]
pub struct EquivalentChannel {
    /// `M x K`.
    pub full: CMat,
    /// Jammer column, length `M`.
    pub jammer: Option<CVec>,
}

/// Rows of an [`EquivalentChannel`] picked by an antenna assignment, ordered by user.
#[derive(Clone, Debug, PartialEq)]
pub struct SelectedChannel {
    /// `K x K`; entry `(k, i)` couples user `i` into user `k`'s antenna.
    pub matrix: CMat,
    /// Length `K`.
    pub jammer: Option<CVec>,
}

/// One-to-one user to antenna mapping; `antenna_of_user[k]` is 0-based.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AntennaAssignment {
    pub antenna_of_user: Vec<usize>,
}

impl AntennaAssignment {
    pub fn new(antenna_of_user: Vec<usize>, antennas: usize) -> Result<Self> {
        let mut seen = vec![false; antennas];
        for &m in &antenna_of_user {
            if m >= antennas || seen[m] {
                return Err(SimError::InvalidParameter(format!(
                    "assignment {antenna_of_user:?} is not injective into {antennas} antennas"
                )));
            }
            seen[m] = true;
        }
        Ok(Self { antenna_of_user })
    }

    /// Identity mapping user k -> antenna k.
    pub fn identity(k: usize) -> Self {
        Self {
            antenna_of_user: (0..k).collect(),
        }
    }

    pub fn users(&self) -> usize {
        self.antenna_of_user.len()
    }

    /// Picks the assigned entries of an `M`-vector.
    pub fn pick(&self, y: &CVec) -> CVec {
        CVec::from_iterator(self.users(), self.antenna_of_user.iter().map(|&m| y[m]))
    }

    /// Picks the assigned rows of an `M x c` matrix.
    pub fn pick_rows(&self, m: &CMat) -> CMat {
        m.select_rows(self.antenna_of_user.iter())
    }
}

impl EquivalentChannel {
    pub fn select(&self, assignment: &AntennaAssignment) -> SelectedChannel {
        SelectedChannel {
            matrix: assignment.pick_rows(&self.full),
            jammer: self.jammer.as_ref().map(|j| assignment.pick(j)),
        }
    }
}

pub(crate) fn check_dims(ch: &ChannelSet, pb: &PhaseBook) -> Result<()> {
    if pb.layers() != ch.layers() || pb.atoms() != ch.atoms() {
        return Err(SimError::Dimension(format!(
            "phase book is {}x{}, channels expect {}x{}",
            pb.layers(),
            pb.atoms(),
            ch.layers(),
            ch.atoms()
        )));
    }
    Ok(())
}

/// Scales row `n` of `x` by `phase[n]`.
pub(crate) fn scale_rows(x: &mut CMat, phase: &[Complex64]) {
    for (mut row, &p) in x.row_iter_mut().zip(phase) {
        row *= p;
    }
}

/// Pushes the columns of `input` (`N x c`, the field arriving at layer 1)
/// through every layer and on to the antennas. `response(l)` gives the diagonal
/// of layer `l` (0-based); `coupling`, when given, is applied after each phase
/// layer.
pub(crate) fn propagate_with(
    ch: &ChannelSet,
    input: &CMat,
    response: impl Fn(usize) -> Vec<Complex64>,
    coupling: Option<&CMat>,
) -> CMat {
    let mut x = input.clone();
    for l in 0..ch.layers() {
        if l > 0 {
            x = &ch.inter_layer[l - 1] * &x;
        }
        scale_rows(&mut x, &response(l));
        if let Some(c) = coupling {
            x = c * &x;
        }
    }
    &ch.g * &x
}

pub(crate) fn propagate(ch: &ChannelSet, pb: &PhaseBook, input: &CMat, coupling: Option<&CMat>) -> CMat {
    propagate_with(ch, input, |l| pb.layer_response(l), coupling)
}

pub(crate) fn source_field(ch: &ChannelSet, s: &CVec, jam: Option<Complex64>) -> Result<CVec> {
    if s.len() != ch.users() {
        return Err(SimError::Dimension(format!(
            "symbol vector has length {}, expected {}",
            s.len(),
            ch.users()
        )));
    }
    let mut x0 = &ch.h * s;
    if let Some(j) = jam {
        let hj = ch
            .jammer
            .as_ref()
            .ok_or_else(|| SimError::Dimension("jamming sample given but no jammer channel".into()))?;
        x0 += hj * j;
    }
    Ok(x0)
}

/// Noiseless received vector at all `M` antennas.
pub fn forward(ch: &ChannelSet, pb: &PhaseBook, s: &CVec, jam: Option<Complex64>) -> Result<CVec> {
    check_dims(ch, pb)?;
    let x0 = source_field(ch, s, jam)?;
    let x0 = CMat::from_column_slice(x0.len(), 1, x0.as_slice());
    let y = propagate(ch, pb, &x0, None);
    Ok(CVec::from_column_slice(y.as_slice()))
}

pub(crate) fn split_equivalent(ch: &ChannelSet, composite: CMat) -> EquivalentChannel {
    let k = ch.users();
    let jammer = ch.jammer.as_ref().map(|_| composite.column(k).into_owned());
    EquivalentChannel {
        full: composite.columns(0, k).into_owned(),
        jammer,
    }
}

pub fn equivalent_channel(ch: &ChannelSet, pb: &PhaseBook) -> Result<EquivalentChannel> {
    check_dims(ch, pb)?;
    Ok(split_equivalent(ch, propagate(ch, pb, &ch.input_matrix(), None)))
}

/// Entry `l` (0-based) keeps the trained phases of layers `0..=l` and runs
/// every later layer at zero phase, i.e. pure diffraction.
pub fn cumulative_layer_channels(ch: &ChannelSet, pb: &PhaseBook) -> Result<Vec<CMat>> {
    check_dims(ch, pb)?;
    let one = vec![Complex64::new(1.0, 0.0); ch.atoms()];
    Ok((0..ch.layers())
        .map(|upto| {
            propagate_with(
                ch,
                &ch.h,
                |l| if l <= upto { pb.layer_response(l) } else { one.clone() },
                None,
            )
        })
        .collect())
}
