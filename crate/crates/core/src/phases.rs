//! Trainable per-atom phase shifts.

use std::f64::consts::TAU;
use std::fmt::Write as _;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Result, SimError};
use crate::rng::seeded_rng;

/// Maps any finite angle into `[0, 2pi)`.
pub fn wrap_phase(x: f64) -> f64 {
    let w = x.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// `L x N` phase shifts, always stored canonical in `[0, 2pi)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseBook {
    layers: usize,
    atoms: usize,
    values: Vec<f64>,
}

impl PhaseBook {
    pub fn zeros(layers: usize, atoms: usize) -> Self {
        Self {
            layers,
            atoms,
            values: vec![0.0; layers * atoms],
        }
    }

    /// Row-major values (layer-major); each entry is wrapped on the way in.
    pub fn from_values(layers: usize, atoms: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != layers * atoms {
            return Err(SimError::Dimension(format!(
                "{} phases given for a {layers}x{atoms} book",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(SimError::InvalidParameter("non-finite phase".into()));
        }
        Ok(Self {
            layers,
            atoms,
            values: values.into_iter().map(wrap_phase).collect(),
        })
    }

    /// I.i.d. uniform phases on `[0, 2pi)`.
    pub fn random(layers: usize, atoms: usize, seed: u64) -> Self {
        let mut rng = seeded_rng(seed);
        let values = (0..layers * atoms)
            .map(|_| wrap_phase(TAU * rng.random::<f64>()))
            .collect();
        Self {
            layers,
            atoms,
            values,
        }
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn atoms(&self) -> usize {
        self.atoms
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Phases of layer `l` (0-based).
    pub fn layer(&self, l: usize) -> &[f64] {
        &self.values[l * self.atoms..(l + 1) * self.atoms]
    }

    pub fn get(&self, l: usize, n: usize) -> f64 {
        self.values[l * self.atoms + n]
    }

    pub fn set(&mut self, l: usize, n: usize, phase: f64) {
        self.values[l * self.atoms + n] = wrap_phase(phase);
    }

    /// Applies `phi <- wrap(phi + delta)` to a whole layer.
    pub fn shift_layer(&mut self, l: usize, delta: &[f64]) {
        let row = &mut self.values[l * self.atoms..(l + 1) * self.atoms];
        for (p, d) in row.iter_mut().zip(delta) {
            *p = wrap_phase(*p + d);
        }
    }

    /// Diagonal of `Phi_l` as unit-modulus complex numbers.
    pub fn layer_response(&self, l: usize) -> Vec<Complex64> {
        self.layer(l).iter().map(|&p| Complex64::from_polar(1.0, p)).collect()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            layers: self.layers,
            atoms: self.atoms,
            values: self.values.iter().map(|&v| wrap_phase(f(v))).collect(),
        }
    }

    /// `L N` header line, then one phase per line in radians.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.layers, self.atoms);
        for v in &self.values {
            let _ = writeln!(out, "{v:.16e}");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| SimError::Parse("empty phase file".into()))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| SimError::Parse(format!("bad phase header `{header}`: {e}")))?;
        let [layers, atoms] = dims[..] else {
            return Err(SimError::Parse(format!("bad phase header `{header}`")));
        };
        let values = lines
            .map(|l| {
                l.trim()
                    .parse::<f64>()
                    .map_err(|e| SimError::Parse(format!("bad phase `{l}`: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_values(layers, atoms, values)
    }
}
