//! Simulation and analysis of a single domain wall pinned in an odd
//! antiferromagnetic ring under reverse quantum annealing.
//!
//! The pipeline is `schedule` → `dynamics` → `harness` → `analysis`, with
//! `embed` finding odd rings in hardware graphs. Numerics that do not need
//! complex linear algebra are generic over [`scalar::Scalar`]; the aliases
//! below fix them to `f64`.

pub mod analysis;
pub mod dynamics;
pub mod embed;
pub mod error;
pub mod harness;
pub mod ring;
pub mod scalar;
pub mod schedule;

pub use error::{Error, Result};

pub type ScheduleTable = schedule::ScheduleTable<f64>;
pub type SchedulePoint = schedule::SchedulePoint<f64>;
pub type Waveform = schedule::Waveform<f64>;
pub type EnergyPoint = schedule::EnergyPoint<f64>;
pub type GammaRatio = schedule::GammaRatio<f64>;
pub type WallHistogram = analysis::WallHistogram<f64>;
pub type PointMetrics = analysis::PointMetrics<f64>;
pub type SigmoidFit = analysis::SigmoidFit<f64>;
pub type ScalingFit = analysis::ScalingFit<f64>;
pub type DensityProfile = analysis::DensityProfile<f64>;
