//! Fixtures shared by the criterion benches.

use biolage_core::{validate, DensityProfile, InitialCondition, ModelParams, ValidatedParams};

/// `tau_plus = tau_minus = 0.1`, `g_plus = 1.1`, `g_minus = 0.99`.
pub fn reference_params() -> ValidatedParams {
    validate(ModelParams::linear(0.1, 0.1, 1.1, 0.99), None).expect("valid parameters")
}

/// Unit total rate, rejuvenation probability `p`, 10% jumps.
pub fn cohort_params(p: f64) -> ValidatedParams {
    validate(ModelParams::from_deltas(p, 1.0 - p, 0.1, 0.1), None).expect("valid parameters")
}

pub fn parabolic() -> InitialCondition {
    InitialCondition::Density(DensityProfile::standard_parabolic())
}
