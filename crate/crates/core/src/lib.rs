//! Simulation of strong-field Rabi oscillations between a single ground
//! state and a two-level excited wavepacket, driven by spectrally shaped
//! broadband pulses.
//!
//! The crate is generic over the floating-point scalar (`f32`/`f64`) via
//! the [`Real`] trait; `*64` aliases at the root pin the common choice.
//!
//! Pipeline: [`atomics`] defines the level systems (Rb D1, K D1/D2),
//! [`pulse`] builds shaped spectra and synthesizes temporal envelopes,
//! [`propagator`] integrates the rotating-wave Schrödinger equation,
//! [`oracle`] provides closed-form two-level references, [`observables`]
//! extracts phases, quantum beats, and averaging effects, and [`scan`] /
//! [`config`] drive full parameter scans from declarative TOML files.

pub mod atomics;
pub mod config;
pub mod error;
pub mod num;
pub mod observables;
pub mod oracle;
pub mod propagator;
pub mod pulse;
pub mod scan;
pub mod units;

pub use error::{Error, Result};
pub use num::Real;

pub type LevelSystem64 = atomics::LevelSystem<f64>;
pub type SpectralField64 = pulse::SpectralField<f64>;
pub type TemporalField64 = pulse::TemporalField<f64>;
pub type Mask64 = pulse::Mask<f64>;
pub type WavepacketState64 = propagator::WavepacketState<f64>;
pub type Trajectory64 = propagator::Trajectory<f64>;
pub type TwoLevelParams64 = oracle::TwoLevelParams<f64>;
pub type BeatTrace64 = observables::BeatTrace<f64>;
pub type ProbeModel64 = observables::ProbeModel<f64>;
pub type ScanGrid64 = scan::ScanGrid<f64>;
pub type ScanOutput64 = scan::ScanOutput<f64>;
