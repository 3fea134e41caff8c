//! Fixed channel synthesis: diffraction links inside the stack and toward the
//! base station, correlated Rician links from users and the jammer.

use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector, Point3, SymmetricEigen, Vector3};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::geometry::SimGeometry;
use crate::rng::{derive_seed, seeded_rng};
use crate::{CMat, CVec};

/// Rayleigh-Sommerfeld gain from a Huygens source at `src` to `dst`.
///
/// `w = (A cos(chi) / r) * (1 / (2 pi r) - j / lambda) * exp(j 2 pi r / lambda)`,
/// with `chi` measured from the layer normal (`z`).
pub fn rs_coefficient(
    src: &Point3<f64>,
    dst: &Point3<f64>,
    atom_area: f64,
    wavelength: f64,
) -> Result<Complex64> {
    rs_from_displacement(&(dst - src), atom_area, wavelength)
}

fn rs_from_displacement(d: &Vector3<f64>, atom_area: f64, wavelength: f64) -> Result<Complex64> {
    let r = d.norm();
    if r == 0.0 {
        return Err(SimError::CoincidentPoints);
    }
    let cos_chi = d.z.abs() / r;
    let amp = atom_area * cos_chi / r;
    let near = Complex64::new(1.0 / (2.0 * PI * r), -1.0 / wavelength);
    Ok(near * amp * Complex64::from_polar(1.0, 2.0 * PI * r / wavelength))
}

/// Diffraction matrix from layer `l - 1` to layer `l` (1-based `l` in `2..=L`).
///
/// Displacements are built from the in-plane offsets and the nominal layer
/// spacing, so every `W_l` of a uniform stack is bit-identical.
pub fn inter_layer_matrix(geom: &SimGeometry, l: usize) -> Result<CMat> {
    if l < 2 || l > geom.layers {
        return Err(SimError::LayerOutOfRange {
            index: l,
            layers: geom.layers,
        });
    }
    let src = &geom.atom_positions[l - 2];
    let dst = &geom.atom_positions[l - 1];
    let n = geom.atoms();
    let area = geom.atom_area();
    let mut w = CMat::zeros(n, n);
    for (i, p_dst) in dst.iter().enumerate() {
        for (j, p_src) in src.iter().enumerate() {
            let d = Vector3::new(p_dst.x - p_src.x, p_dst.y - p_src.y, geom.layer_spacing);
            w[(i, j)] = rs_from_displacement(&d, area, geom.wavelength)?;
        }
    }
    Ok(w)
}

/// Last layer to base-station antennas, `M x N`.
pub fn sim_to_bs_matrix(geom: &SimGeometry) -> Result<CMat> {
    let last = &geom.atom_positions[geom.layers - 1];
    let area = geom.atom_area();
    let mut g = CMat::zeros(geom.bs_antennas, geom.atoms());
    for (m, ant) in geom.antenna_positions.iter().enumerate() {
        for (n, atom) in last.iter().enumerate() {
            let d = Vector3::new(ant.x - atom.x, ant.y - atom.y, geom.bs_standoff);
            g[(m, n)] = rs_from_displacement(&d, area, geom.wavelength)?;
        }
    }
    Ok(g)
}

pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Isotropic-scattering spatial correlation over the layer-1 aperture.
pub fn correlation_matrix(geom: &SimGeometry) -> DMatrix<f64> {
    let pos = &geom.atom_positions[0];
    let n = pos.len();
    let mut r = DMatrix::zeros(n, n);
    for i in 0..n {
        r[(i, i)] = 1.0;
        for j in (i + 1)..n {
            let v = sinc(2.0 * (pos[i] - pos[j]).norm() / geom.wavelength);
            r[(i, j)] = v;
            r[(j, i)] = v;
        }
    }
    r
}

/// Symmetric square root with negative round-off eigenvalues clipped to zero.
pub fn correlation_sqrt(r: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(r.clone());
    let clipped = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    let q = &eig.eigenvectors;
    let s = q * DMatrix::from_diagonal(&clipped) * q.transpose();
    (&s + s.transpose()) * 0.5
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Position {
    /// Radians, measured in the horizontal plane from the stack axis.
    pub azimuth: f64,
    /// Radians above the horizontal plane.
    pub elevation: f64,
    /// Meters from the layer-1 centre.
    pub distance: f64,
}

impl Position {
    /// Unit vector from the stack toward the source (users sit at negative `z`).
    pub fn direction(&self) -> Vector3<f64> {
        let (se, ce) = self.elevation.sin_cos();
        let (sa, ca) = self.azimuth.sin_cos();
        Vector3::new(ce * sa, se, -ce * ca)
    }
}

/// Large-scale and Rician parameters shared by every transmitter in a layout.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkParams {
    /// Linear LoS-to-scatter power ratio; `f64::INFINITY` gives a pure LoS link.
    pub rician_factor: f64,
    pub pathloss_exponent: f64,
    /// Linear power gain at 1 m.
    pub reference_gain: f64,
}

impl Default for LinkParams {
    fn default() -> Self {
        Self {
            rician_factor: 1.0,
            pathloss_exponent: 2.2,
            reference_gain: 1e-3,
        }
    }
}

impl LinkParams {
    pub fn pathloss(&self, distance: f64) -> f64 {
        self.reference_gain * distance.powf(-self.pathloss_exponent)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UserLayout {
    pub users: Vec<Position>,
    pub link: LinkParams,
}

/// Region transmitters are dropped into. Angles in degrees, distance in meters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlacementRegion {
    pub azimuth_deg: (f64, f64),
    pub elevation_deg: (f64, f64),
    pub distance_m: (f64, f64),
}

impl Default for PlacementRegion {
    fn default() -> Self {
        Self {
            azimuth_deg: (-60.0, 60.0),
            elevation_deg: (-30.0, 30.0),
            distance_m: (20.0, 60.0),
        }
    }
}

impl PlacementRegion {
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Position {
        let uni = |rng: &mut R, (lo, hi): (f64, f64)| lo + (hi - lo) * rng.random::<f64>();
        Position {
            azimuth: uni(rng, self.azimuth_deg).to_radians(),
            elevation: uni(rng, self.elevation_deg).to_radians(),
            distance: uni(rng, self.distance_m),
        }
    }
}

impl UserLayout {
    pub fn new(users: Vec<Position>, link: LinkParams) -> Result<Self> {
        if users.is_empty() {
            return Err(SimError::InvalidParameter("layout needs at least one user".into()));
        }
        if users.iter().any(|p| !(p.distance > 0.0)) {
            return Err(SimError::InvalidParameter("user distances must be positive".into()));
        }
        if !(link.rician_factor >= 0.0) {
            return Err(SimError::InvalidParameter("rician factor must be non-negative".into()));
        }
        Ok(Self { users, link })
    }

    pub fn random(k: usize, region: &PlacementRegion, link: LinkParams, seed: u64) -> Result<Self> {
        let mut rng = seeded_rng(seed);
        Self::new((0..k).map(|_| region.sample(&mut rng)).collect(), link)
    }

    pub fn len(&self) -> usize {
        self.users.len()
    }

    pub fn is_empty(&self) -> bool {
        self.users.is_empty()
    }
}

/// Jammer placement; it shares the link model of the users it hides among.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JammerLayout {
    pub position: Position,
    pub link: LinkParams,
}

/// Line-of-sight response of the layer-1 aperture toward `pos`.
pub fn steering_vector(geom: &SimGeometry, pos: &Position) -> CVec {
    let k = 2.0 * PI / geom.wavelength;
    let u = pos.direction();
    CVec::from_iterator(
        geom.atoms(),
        geom.atom_positions[0]
            .iter()
            .map(|p| Complex64::from_polar(1.0, k * p.coords.dot(&u))),
    )
}

/// Correlated Rician sampler with the correlation square root cached.
#[derive(Clone, Debug)]
pub struct RicianSampler<'a> {
    geom: &'a SimGeometry,
    corr_sqrt: DMatrix<f64>,
}

impl<'a> RicianSampler<'a> {
    pub fn new(geom: &'a SimGeometry) -> Self {
        Self {
            geom,
            corr_sqrt: correlation_sqrt(&correlation_matrix(geom)),
        }
    }

    pub fn corr_sqrt(&self) -> &DMatrix<f64> {
        &self.corr_sqrt
    }

    /// `sqrt(beta) * (sqrt(k/(1+k)) a + sqrt(1/(1+k)) R^{1/2} z)`.
    pub fn sample(&self, pos: &Position, link: &LinkParams, seed: u64) -> CVec {
        let n = self.geom.atoms();
        let beta = link.pathloss(pos.distance);
        let kappa = link.rician_factor;
        let (los_w, nlos_w) = if kappa.is_infinite() {
            (1.0, 0.0)
        } else {
            ((kappa / (1.0 + kappa)).sqrt(), (1.0 / (1.0 + kappa)).sqrt())
        };
        let mut h = steering_vector(self.geom, pos) * Complex64::from(los_w);
        if nlos_w > 0.0 {
            let mut rng = seeded_rng(seed);
            let scale = std::f64::consts::FRAC_1_SQRT_2;
            let z = CVec::from_fn(n, |_, _| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(re * scale, im * scale)
            });
            let corr = self.corr_sqrt.map(Complex64::from);
            h += (corr * z) * Complex64::from(nlos_w);
        }
        h * Complex64::from(beta.sqrt())
    }
}

pub fn user_channel(geom: &SimGeometry, layout: &UserLayout, k: usize, seed: u64) -> CVec {
    RicianSampler::new(geom).sample(&layout.users[k], &layout.link, seed)
}

pub fn jammer_channel(geom: &SimGeometry, jammer: &JammerLayout, seed: u64) -> CVec {
    RicianSampler::new(geom).sample(&jammer.position, &jammer.link, seed)
}

/// The fixed part of the system: everything except the programmable phases.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelSet {
    /// Users to layer 1, `N x K`.
    pub h: CMat,
    /// `W_2..W_L`, each `N x N`; `inter_layer[i]` is `W_{i+2}`.
    pub inter_layer: Vec<CMat>,
    /// Layer `L` to antennas, `M x N`.
    pub g: CMat,
    /// Jammer to layer 1, length `N`.
    pub jammer: Option<CVec>,
}

impl ChannelSet {
    pub fn layers(&self) -> usize {
        self.inter_layer.len() + 1
    }
    pub fn atoms(&self) -> usize {
        self.h.nrows()
    }
    pub fn antennas(&self) -> usize {
        self.g.nrows()
    }
    pub fn users(&self) -> usize {
        self.h.ncols()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.atoms();
        if self.g.ncols() != n {
            return Err(SimError::Dimension(format!(
                "G has {} columns, expected {n}",
                self.g.ncols()
            )));
        }
        for (i, w) in self.inter_layer.iter().enumerate() {
            if w.shape() != (n, n) {
                return Err(SimError::Dimension(format!(
                    "W_{} is {:?}, expected ({n}, {n})",
                    i + 2,
                    w.shape()
                )));
            }
        }
        if let Some(j) = &self.jammer {
            if j.len() != n {
                return Err(SimError::Dimension(format!(
                    "jammer vector has length {}, expected {n}",
                    j.len()
                )));
            }
        }
        let finite = |m: &CMat| m.iter().all(|c| c.re.is_finite() && c.im.is_finite());
        if !finite(&self.h)
            || !finite(&self.g)
            || !self.inter_layer.iter().all(finite)
            || !self.jammer.as_ref().map_or(true, |j| j.iter().all(|c| c.is_finite()))
        {
            return Err(SimError::InvalidParameter("non-finite channel entry".into()));
        }
        Ok(())
    }

    /// `[H, h_J]`, the effective input matrix when the jammer is treated as an extra column.
    pub fn input_matrix(&self) -> CMat {
        match &self.jammer {
            Some(j) => {
                let mut m = self.h.clone().insert_column(self.users(), Complex64::new(0.0, 0.0));
                m.set_column(self.users(), j);
                m
            }
            None => self.h.clone(),
        }
    }
}

/// Draws every fixed channel of one realization. User `k` uses the stream
/// `derive_seed(seed, "user", k)`, the jammer `derive_seed(seed, "jammer", 0)`.
pub fn synthesize_channels(
    geom: &SimGeometry,
    layout: &UserLayout,
    jammer: Option<&JammerLayout>,
    seed: u64,
) -> Result<ChannelSet> {
    let sampler = RicianSampler::new(geom);
    let n = geom.atoms();
    let mut h = CMat::zeros(n, layout.len());
    for (k, pos) in layout.users.iter().enumerate() {
        h.set_column(k, &sampler.sample(pos, &layout.link, derive_seed(seed, "user", k as u64)));
    }
    let inter_layer = (2..=geom.layers)
        .map(|l| inter_layer_matrix(geom, l))
        .collect::<Result<Vec<_>>>()?;
    let g = sim_to_bs_matrix(geom)?;
    let jammer = jammer.map(|j| sampler.sample(&j.position, &j.link, derive_seed(seed, "jammer", 0)));
    let set = ChannelSet {
        h,
        inter_layer,
        g,
        jammer,
    };
    set.validate()?;
    Ok(set)
}

/// A channel set plus the metadata needed to replay it.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelDump {
    pub wavelength: f64,
    pub seed: u64,
    pub channels: ChannelSet,
}

const DUMP_MAGIC: &str = "learnable-sim channels v1";

impl ChannelDump {
    /// Text dump: a header, then one `re im` pair per line for each matrix in
    /// row-major order, each matrix preceded by `name rows cols`.
    pub fn to_text(&self) -> String {
        let ch = &self.channels;
        let mut out = String::new();
        let _ = writeln!(out, "{DUMP_MAGIC}");
        let _ = writeln!(out, "wavelength {:.16e}", self.wavelength);
        let _ = writeln!(out, "seed {}", self.seed);
        let _ = writeln!(
            out,
            "dims layers {} atoms {} antennas {} users {} jammer {}",
            ch.layers(),
            ch.atoms(),
            ch.antennas(),
            ch.users(),
            u8::from(ch.jammer.is_some())
        );
        write_matrix(&mut out, "H", &ch.h);
        for (i, w) in ch.inter_layer.iter().enumerate() {
            write_matrix(&mut out, &format!("W{}", i + 2), w);
        }
        write_matrix(&mut out, "G", &ch.g);
        if let Some(j) = &ch.jammer {
            write_matrix(&mut out, "J", &CMat::from_column_slice(j.len(), 1, j.as_slice()));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let perr = |m: &str| SimError::Parse(m.to_string());
        if lines.next().map(str::trim) != Some(DUMP_MAGIC) {
            return Err(perr("missing channel dump header"));
        }
        let mut field = |key: &str| -> Result<Vec<String>> {
            let line = lines.next().ok_or_else(|| perr("truncated header"))?;
            let mut toks = line.split_whitespace();
            if toks.next() != Some(key) {
                return Err(perr(&format!("expected `{key}` line")));
            }
            Ok(toks.map(str::to_string).collect())
        };
        let wavelength: f64 = parse_tok(field("wavelength")?.first())?;
        let seed: u64 = parse_tok(field("seed")?.first())?;
        let dims = field("dims")?;
        if dims.len() != 10 {
            return Err(perr("malformed dims line"));
        }
        let layers: usize = parse_tok(dims.get(1))?;
        let atoms: usize = parse_tok(dims.get(3))?;
        let antennas: usize = parse_tok(dims.get(5))?;
        let users: usize = parse_tok(dims.get(7))?;
        let has_jammer: u8 = parse_tok(dims.get(9))?;
        if layers == 0 {
            return Err(perr("layers must be >= 1"));
        }
        let mut body = lines;
        let h = read_matrix(&mut body, "H", atoms, users)?;
        let inter_layer = (2..=layers)
            .map(|l| read_matrix(&mut body, &format!("W{l}"), atoms, atoms))
            .collect::<Result<Vec<_>>>()?;
        let g = read_matrix(&mut body, "G", antennas, atoms)?;
        let jammer = if has_jammer == 1 {
            let j = read_matrix(&mut body, "J", atoms, 1)?;
            Some(DVector::from_column_slice(j.as_slice()))
        } else {
            None
        };
        let channels = ChannelSet {
            h,
            inter_layer,
            g,
            jammer,
        };
        channels.validate()?;
        Ok(Self {
            wavelength,
            seed,
            channels,
        })
    }
}

fn parse_tok<T: std::str::FromStr>(tok: Option<&String>) -> Result<T> {
    tok.and_then(|t| t.parse().ok())
        .ok_or_else(|| SimError::Parse(format!("bad token {tok:?}")))
}

fn write_matrix(out: &mut String, name: &str, m: &CMat) {
    let _ = writeln!(out, "{name} {} {}", m.nrows(), m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let c = m[(i, j)];
            let _ = writeln!(out, "{:.16e} {:.16e}", c.re, c.im);
        }
    }
}

fn read_matrix<'a>(
    lines: &mut impl Iterator<Item = &'a str>,
    name: &str,
    rows: usize,
    cols: usize,
) -> Result<CMat> {
    let header = lines
        .next()
        .ok_or_else(|| SimError::Parse(format!("missing matrix {name}")))?;
    let expect = format!("{name} {rows} {cols}");
    if header.trim() != expect {
        return Err(SimError::Parse(format!("expected `{expect}`, found `{header}`")));
    }
    let mut m = CMat::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            let line = lines
                .next()
                .ok_or_else(|| SimError::Parse(format!("matrix {name} truncated")))?;
            let mut it = line.split_whitespace().map(str::parse::<f64>);
            match (it.next(), it.next()) {
                (Some(Ok(re)), Some(Ok(im))) => m[(i, j)] = Complex64::new(re, im),
                _ => return Err(SimError::Parse(format!("bad entry in {name}: `{line}`"))),
            }
        }
    }
    Ok(m)
}
