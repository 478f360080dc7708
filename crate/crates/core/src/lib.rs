//! Equilibria of an extensible, shearable, conducting elastic rod in a
//! uniform magnetic field, treated as a Hamiltonian system in arclength:
//! the non-canonical body-frame formulation, its canonical Euler-angle
//! reduction, closed-form homoclinic orbits, the Mel'nikov integral,
//! Poincaré sections and multipulse shooting.

pub mod canonical;
pub mod dynamics;
pub mod error;
pub mod homoclinic;
pub mod kinematics;
pub mod melnikov;
pub mod noncanonical;
pub mod ode;
pub mod params;
pub mod quad;
pub mod verify;

pub use canonical::{CanonicalState, LevelSpec};
pub use error::{Result, RodError};
pub use homoclinic::HomoclinicOrbit;
pub use kinematics::EulerAngles;
pub use melnikov::MelnikovCurve;
pub use noncanonical::BodyState9;
pub use ode::IntegratorConfig;
pub use params::{DimensionlessParameters, ParameterSet, RodParameters};
