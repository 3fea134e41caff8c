//! Physical layout of the metasurface stack and the base-station array.
//!
//! Layers are planes normal to `z`. Layer 1 (facing the users) sits at `z = 0`
//! and layer `l` at `z = (l - 1) * D_L`. The receive array is a uniform linear
//! array along `x`, centred on the stack axis, `bs_standoff` behind layer `L`.

use nalgebra::Point3;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

/// Geometry inputs. Lengths other than `wavelength` are in wavelengths.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryParams {
    /// Carrier wavelength in meters.
    pub wavelength: f64,
    pub layers: usize,
    pub atoms_x: usize,
    pub atoms_y: usize,
    #[serde(default = "default_atom_spacing")]
    pub atom_spacing_wl: f64,
    #[serde(default = "default_thickness")]
    pub thickness_wl: f64,
    pub bs_antennas: usize,
    #[serde(default = "default_bs_spacing")]
    pub bs_spacing_wl: f64,
    #[serde(default = "default_bs_standoff")]
    pub bs_standoff_wl: f64,
}

fn default_atom_spacing() -> f64 {
    0.5
}
fn default_thickness() -> f64 {
    10.0
}
fn default_bs_spacing() -> f64 {
    0.5
}
fn default_bs_standoff() -> f64 {
    1.0
}

impl Default for GeometryParams {
    fn default() -> Self {
        Self {
            wavelength: 0.01,
            layers: 5,
            atoms_x: 8,
            atoms_y: 8,
            atom_spacing_wl: default_atom_spacing(),
            thickness_wl: default_thickness(),
            bs_antennas: 8,
            bs_spacing_wl: default_bs_spacing(),
            bs_standoff_wl: default_bs_standoff(),
        }
    }
}

impl GeometryParams {
    /// Square `side x side` layers, everything else default.
    pub fn square(layers: usize, side: usize, bs_antennas: usize) -> Self {
        Self {
            layers,
            atoms_x: side,
            atoms_y: side,
            bs_antennas,
            ..Self::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimGeometry {
    pub wavelength: f64,
    pub layers: usize,
    pub atoms_x: usize,
    pub atoms_y: usize,
    pub atom_spacing: f64,
    pub total_thickness: f64,
    /// Zero when there is a single layer.
    pub layer_spacing: f64,
    pub bs_antennas: usize,
    pub bs_spacing: f64,
    pub bs_standoff: f64,
    /// `atom_positions[l][n]`, layer index 0-based, atom index row-major (`n = iy * atoms_x + ix`).
    pub atom_positions: Vec<Vec<Point3<f64>>>,
    pub antenna_positions: Vec<Point3<f64>>,
}

impl SimGeometry {
    pub fn atoms(&self) -> usize {
        self.atoms_x * self.atoms_y
    }

    /// Effective aperture of one meta-atom.
    pub fn atom_area(&self) -> f64 {
        self.atom_spacing * self.atom_spacing
    }

    pub fn layer_z(&self, layer: usize) -> f64 {
        (layer - 1) as f64 * self.layer_spacing
    }

    pub fn antenna_z(&self) -> f64 {
        self.layer_z(self.layers) + self.bs_standoff
    }
}

pub fn build_geometry(params: &GeometryParams) -> Result<SimGeometry> {
    let bad = |msg: &str| Err(SimError::Geometry(msg.to_string()));
    if !(params.wavelength > 0.0) || !params.wavelength.is_finite() {
        return bad("wavelength must be positive");
    }
    if params.layers == 0 {
        return bad("at least one layer is required");
    }
    if params.atoms_x == 0 || params.atoms_y == 0 {
        return bad("atom grid must be at least 1x1");
    }
    if params.bs_antennas == 0 {
        return bad("at least one base-station antenna is required");
    }
    if !(params.atom_spacing_wl > 0.0) {
        return bad("atom spacing must be positive");
    }
    if !(params.bs_spacing_wl > 0.0) {
        return bad("antenna spacing must be positive");
    }
    if !(params.bs_standoff_wl > 0.0) {
        return bad("antenna standoff must be positive");
    }
    if params.layers >= 2 && !(params.thickness_wl > 0.0) {
        return bad("stack thickness must be positive when there are two or more layers");
    }
    if params.thickness_wl < 0.0 || !params.thickness_wl.is_finite() {
        return bad("stack thickness must be finite and non-negative");
    }

    let lambda = params.wavelength;
    let atom_spacing = params.atom_spacing_wl * lambda;
    let total_thickness = params.thickness_wl * lambda;
    let layer_spacing = if params.layers >= 2 {
        total_thickness / (params.layers - 1) as f64
    } else {
        0.0
    };

    let cx = (params.atoms_x as f64 - 1.0) / 2.0;
    let cy = (params.atoms_y as f64 - 1.0) / 2.0;
    let atom_positions = (0..params.layers)
        .map(|l| {
            let z = l as f64 * layer_spacing;
            let mut layer = Vec::with_capacity(params.atoms_x * params.atoms_y);
            for iy in 0..params.atoms_y {
                for ix in 0..params.atoms_x {
                    layer.push(Point3::new(
                        (ix as f64 - cx) * atom_spacing,
                        (iy as f64 - cy) * atom_spacing,
                        z,
                    ));
                }
            }
            layer
        })
        .collect();

    let bs_spacing = params.bs_spacing_wl * lambda;
    let bs_standoff = params.bs_standoff_wl * lambda;
    let z_bs = (params.layers - 1) as f64 * layer_spacing + bs_standoff;
    let cm = (params.bs_antennas as f64 - 1.0) / 2.0;
    let antenna_positions = (0..params.bs_antennas)
        .map(|m| Point3::new((m as f64 - cm) * bs_spacing, 0.0, z_bs))
        .collect();

    Ok(SimGeometry {
        wavelength: lambda,
        layers: params.layers,
        atoms_x: params.atoms_x,
        atoms_y: params.atoms_y,
        atom_spacing,
        total_thickness,
        layer_spacing,
        bs_antennas: params.bs_antennas,
        bs_spacing,
        bs_standoff,
        atom_positions,
        antenna_positions,
    })
}
