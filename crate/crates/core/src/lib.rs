//! Numerical lab for a nonlocal transport model of biological age with
//! rejuvenation and premature-aging jumps.
//!
//! Three representations of the same dynamics live here: an individual-based
//! simulation ([`ibm`]), a finite-volume density solver ([`pde`]) and the
//! moment cascade ([`ode`]). [`analysis`] compares them.

pub mod analysis;
pub mod error;
pub mod ibm;
pub mod initial;
pub mod model;
pub mod moments;
pub mod ode;
pub mod pde;
pub mod quadrature;

pub use error::{Error, Result};
pub use ibm::{Ensemble, Histogram, Population};
pub use initial::{DensityProfile, InitialCondition};
pub use model::{
    validate, ChiShape, DemographyParams, JumpFamily, JumpKind, ModelParams, ValidatedParams,
};
pub use moments::{MomentScale, MomentVector};
pub use ode::{MomentTrajectory, K0};
pub use pde::{DensityState, Grid, JumpOperatorMatrix, PdeSolver};
