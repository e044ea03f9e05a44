use serde::{Deserialize, Serialize};

use super::jump::{JumpFamily, JumpKind};
use crate::error::{Error, Result};

/// Jump rates and jump maps of the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Per-individual rejuvenation rate (1/year).
    pub tau_plus: f64,
    /// Per-individual premature-aging rate (1/year).
    pub tau_minus: f64,
    pub rejuvenation: JumpFamily,
    pub aging: JumpFamily,
}

impl ModelParams {
    /// Multiplicative jumps `b -> b / g_plus` and `b -> b / g_minus`.
    pub fn linear(tau_plus: f64, tau_minus: f64, g_plus: f64, g_minus: f64) -> Self {
        ModelParams {
            tau_plus,
            tau_minus,
            rejuvenation: JumpFamily::Linear { g: g_plus },
            aging: JumpFamily::Linear { g: g_minus },
        }
    }

    /// Amplitude form: `g_plus = 1 + delta_plus`, `g_minus = 1 - delta_minus`.
    pub fn from_deltas(tau_plus: f64, tau_minus: f64, delta_plus: f64, delta_minus: f64) -> Self {
        Self::linear(tau_plus, tau_minus, 1.0 + delta_plus, 1.0 - delta_minus)
    }

    /// Probabilistic form: total rate `tau`, rejuvenation probability `p`.
    pub fn from_tau_p(
        tau: f64,
        p: f64,
        rejuvenation: JumpFamily,
        aging: JumpFamily,
    ) -> Result<Self> {
        let (tau_plus, tau_minus) = split_rate(tau, p)?;
        Ok(ModelParams {
            tau_plus,
            tau_minus,
            rejuvenation,
            aging,
        })
    }

    pub fn total_rate(&self) -> f64 {
        self.tau_plus + self.tau_minus
    }

    /// Probability that a jump is a rejuvenation.
    pub fn rejuvenation_probability(&self) -> f64 {
        let total = self.total_rate();
        if total > 0.0 {
            self.tau_plus / total
        } else {
            0.0
        }
    }
}

/// `(tau_plus, tau_minus) = (tau * p, tau * (1 - p))`.
pub fn split_rate(tau: f64, p: f64) -> Result<(f64, f64)> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::Range(format!("tau = {tau} must be > 0")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Range(format!("p = {p} must lie in [0, 1]")));
    }
    Ok((tau * p, tau * (1.0 - p)))
}

/// Constant mortality, constant birth flow and gamma-distributed newborn ages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DemographyParams {
    /// Mortality rate (1/year).
    pub mu: f64,
    /// Birth flow (individuals/year).
    pub beta: f64,
    /// Integer shape of the newborn age distribution.
    pub alpha: u32,
    /// Rate of the newborn age distribution (1/year).
    pub gamma_rate: f64,
}

impl DemographyParams {
    fn check(&self) -> Result<()> {
        if !(self.mu.is_finite() && self.mu > 0.0) {
            return Err(Error::Range(format!("mu = {} must be > 0", self.mu)));
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(Error::Range(format!("beta = {} must be > 0", self.beta)));
        }
        if self.alpha < 1 {
            return Err(Error::Range("gamma shape alpha must be >= 1".into()));
        }
        if !(self.gamma_rate.is_finite() && self.gamma_rate > 0.0) {
            return Err(Error::Range(format!(
                "gamma_rate = {} must be > 0",
                self.gamma_rate
            )));
        }
        Ok(())
    }

    /// Stationary population size `beta / mu`.
    pub fn stationary_mass(&self) -> f64 {
        self.beta / self.mu
    }

    /// Exact solution of `N' = beta - mu N`.
    pub fn expected_mass(&self, n0: f64, t: f64) -> f64 {
        let eq = self.stationary_mass();
        eq + (n0 - eq) * (-self.mu * t).exp()
    }
}

/// Parameters that passed [`validate`]. Immutable; every solver takes these.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValidatedParams {
    model: ModelParams,
    demography: Option<DemographyParams>,
}

impl ValidatedParams {
    pub fn model(&self) -> &ModelParams {
        &self.model
    }

    pub fn demography(&self) -> Option<&DemographyParams> {
        self.demography.as_ref()
    }

    pub fn tau_plus(&self) -> f64 {
        self.model.tau_plus
    }

    pub fn tau_minus(&self) -> f64 {
        self.model.tau_minus
    }

    pub fn mu(&self) -> f64 {
        self.demography.map_or(0.0, |d| d.mu)
    }

    /// `(g_plus, g_minus)` when both families are linear.
    pub fn linear_factors(&self) -> Result<(f64, f64)> {
        match (
            self.model.rejuvenation.linear_factor(),
            self.model.aging.linear_factor(),
        ) {
            (Some(gp), Some(gm)) => Ok((gp, gm)),
            (None, _) => Err(Error::UnsupportedFamily(self.model.rejuvenation.name())),
            (_, None) => Err(Error::UnsupportedFamily(self.model.aging.name())),
        }
    }
}

/// Checks the admissibility inequalities and freezes the parameters.
pub fn validate(
    model: ModelParams,
    demography: Option<DemographyParams>,
) -> Result<ValidatedParams> {
    for (rate, name) in [(model.tau_plus, "tau_plus"), (model.tau_minus, "tau_minus")] {
        if !(rate.is_finite() && rate >= 0.0) {
            return Err(Error::Range(format!("{name} = {rate} must be >= 0")));
        }
    }
    model.rejuvenation.check()?;
    model.aging.check()?;

    if model.tau_plus > 0.0 && model.rejuvenation.kind() != JumpKind::Rejuvenation {
        return Err(match model.rejuvenation {
            JumpFamily::Linear { g } => {
                Error::Range(format!("g_plus = {g} must exceed 1 when tau_plus > 0"))
            }
            other => Error::Range(format!(
                "{} cannot be used as a rejuvenation map",
                other.name()
            )),
        });
    }
    if model.tau_minus > 0.0 && model.aging.kind() != JumpKind::Aging {
        return Err(match model.aging {
            JumpFamily::Linear { g } => Error::Range(format!(
                "g_minus = {g} must lie in (0, 1) when tau_minus > 0"
            )),
            other => Error::Range(format!(
                "{} cannot be used as a premature-aging map",
                other.name()
            )),
        });
    }
    if let Some(d) = &demography {
        d.check()?;
    }
    Ok(ValidatedParams { model, demography })
}
