//! Moment growth rates `chi_k` and their real-argument extension.
//!
//! With multiplicative jumps the k-th moment obeys
//! `E_k' = k E_{k-1} - chi_k E_k` where
//! `chi_k = tau_plus (1 - g_plus^-k) + tau_minus (1 - g_minus^-k)`.

use serde::{Deserialize, Serialize};

use super::params::ValidatedParams;
use crate::error::{Error, Result};

/// Shape of `x -> chi(x)` on `[0, inf)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "case")]
pub enum ChiShape {
    /// `tau_plus ln g_plus + tau_minus ln g_minus > 0` with both rates positive:
    /// chi rises to a positive maximum at `x_max`, then falls to `-inf`.
    #[serde(rename = "(i)")]
    Unimodal { x_max: f64 },
    /// `tau_plus ln g_plus + tau_minus ln g_minus <= 0`: chi decreases from 0 to `-inf`.
    #[serde(rename = "(ii)")]
    Decreasing,
    /// No premature aging: chi increases monotonically towards `tau_plus`.
    #[serde(rename = "rejuvenation-only")]
    Increasing,
}

fn term(tau: f64, g: f64, x: f64) -> f64 {
    if tau == 0.0 {
        0.0
    } else {
        tau * (1.0 - g.powf(-x))
    }
}

/// `chi(x)` for real `x >= 0`.
pub fn chi_continuous(params: &ValidatedParams, x: f64) -> Result<f64> {
    let (gp, gm) = params.linear_factors()?;
    Ok(term(params.tau_plus(), gp, x) + term(params.tau_minus(), gm, x))
}

/// `chi_k` for integer `k >= 0`; `chi_0 = 0`.
pub fn chi_k(params: &ValidatedParams, k: u32) -> Result<f64> {
    chi_continuous(params, f64::from(k))
}

/// `chi_0 ..= chi_kmax`.
pub fn chi_table(params: &ValidatedParams, k_max: u32) -> Result<Vec<f64>> {
    (0..=k_max).map(|k| chi_k(params, k)).collect()
}

/// `chi'(x)`, analytic.
pub fn chi_derivative(params: &ValidatedParams, x: f64) -> Result<f64> {
    let (gp, gm) = params.linear_factors()?;
    let d = |tau: f64, g: f64| {
        if tau == 0.0 {
            0.0
        } else {
            tau * g.ln() * g.powf(-x)
        }
    };
    Ok(d(params.tau_plus(), gp) + d(params.tau_minus(), gm))
}

/// `tau_plus ln g_plus + tau_minus ln g_minus`, which equals `chi'(0)`.
pub fn shape_criterion(params: &ValidatedParams) -> Result<f64> {
    chi_derivative(params, 0.0)
}

/// Classifies `chi(x)` and returns its maximiser when it has one.
pub fn x_max(params: &ValidatedParams) -> Result<ChiShape> {
    let (gp, gm) = params.linear_factors()?;
    let (tp, tm) = (params.tau_plus(), params.tau_minus());
    if tp == 0.0 && tm == 0.0 {
        return Err(Error::Range(
            "chi is identically zero when both jump rates vanish".into(),
        ));
    }
    if tm == 0.0 {
        return Ok(ChiShape::Increasing);
    }
    if tp == 0.0 || shape_criterion(params)? <= 0.0 {
        return Ok(ChiShape::Decreasing);
    }
    let (lp, lm) = (gp.ln(), gm.ln());
    let x = ((tp * lp).ln() - (-tm * lm).ln()) / (lp - lm);
    Ok(ChiShape::Unimodal { x_max: x })
}
