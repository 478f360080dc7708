//! Long-time machinery on top of the integrator: Poincaré sections on
//! sinψ = 0, finite-time Lyapunov indicators, the saddle chart of the
//! aligned rod and reversibility-based multipulse shooting.

mod lyapunov;
mod poincare;
mod saddle;
mod shooting;

pub use lyapunov::lyapunov_indicator;
pub use poincare::{max_curve_distance, poincare_section, Crossing, SectionDataset};
pub use saddle::{saddle_local_chart, SaddleChart};
pub use shooting::{
    find_multipulse, saddle_energy, shoot_multipulse, symmetric_residuals, MultipulseOrbit, MultipulseSample,
    ShootOptions, ShootingReport,
};
