//! Stacked intelligent metasurface (SIM) simulator.
//!
//! A SIM is a stack of transmissive, phase-programmable metasurfaces placed in
//! front of a base-station array. The fixed diffraction links between layers
//! play the role of network weights that cannot change; the per-atom phase
//! shifts are the trainable parameters. This crate synthesizes the channels,
//! trains the phases from uplink pilots, and evaluates multi-user and
//! anti-jamming separation with and without hardware impairments.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub mod assign;
pub mod channel;
pub mod cli;
pub mod config;
pub mod diagonality;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod impairments;
pub mod metrics;
pub mod model;
pub mod phases;
pub mod report;
pub mod rng;
pub mod signals;
pub mod synthetic;
pub mod training;
pub mod validate;


pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub use assign::assign_antennas;
pub use channel::{ChannelSet, JammerLayout, LinkParams, PlacementRegion, Position, UserLayout};
pub use error::{Result, SimError};
pub use geometry::{build_geometry, GeometryParams, SimGeometry};
pub use model::{equivalent_channel, forward, AntennaAssignment, EquivalentChannel, SelectedChannel};
pub use phases::PhaseBook;
pub use training::{train, PilotBatch, TrainConfig, TrainRecord};
