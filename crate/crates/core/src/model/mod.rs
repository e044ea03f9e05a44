//! Model parameters, jump maps and every closed-form quantity of the model.

mod chi;
mod gamma;
mod jump;
mod params;

pub use chi::{chi_continuous, chi_derivative, chi_k, chi_table, shape_criterion, x_max, ChiShape};
pub use gamma::{
    gamma_density, gamma_interval_mass, gamma_moment, gamma_survival, ln_gamma_moment,
};
pub use jump::{jump_map_eval, jump_target, JumpFamily, JumpKind};
pub use params::{split_rate, validate, DemographyParams, ModelParams, ValidatedParams};
