//! Initial data shared by the particle, PDE and moment solvers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A nonnegative initial density with compact support.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "snake_case")]
pub enum DensityProfile {
    /// `amplitude * max(0, b (1 - b / width))`.
    Parabolic { amplitude: f64, width: f64 },
    /// `density` on `[lo, hi]`.
    Uniform { lo: f64, hi: f64, density: f64 },
    /// Gaussian bump `amplitude * exp(-(b - mean)^2 / (2 sd^2))` cut to `[lo, hi]`.
    TruncatedGaussian {
        mean: f64,
        sd: f64,
        lo: f64,
        hi: f64,
        amplitude: f64,
    },
}

impl DensityProfile {
    /// The parabolic profile `(2/5) max(0, b (1 - b/10))`.
    pub fn standard_parabolic() -> Self {
        DensityProfile::Parabolic {
            amplitude: 0.4,
            width: 10.0,
        }
    }

    pub fn eval(&self, b: f64) -> f64 {
        match *self {
            DensityProfile::Parabolic { amplitude, width } => {
                amplitude * (b * (1.0 - b / width)).max(0.0)
            }
            DensityProfile::Uniform { lo, hi, density } => {
                if b >= lo && b <= hi {
                    density
                } else {
                    0.0
                }
            }
            DensityProfile::TruncatedGaussian {
                mean,
                sd,
                lo,
                hi,
                amplitude,
            } => {
                if b < lo || b > hi {
                    0.0
                } else {
                    let z = (b - mean) / sd;
                    amplitude * (-0.5 * z * z).exp()
                }
            }
        }
    }

    /// `[lo, hi]` outside of which the density vanishes.
    pub fn support(&self) -> (f64, f64) {
        match *self {
            DensityProfile::Parabolic { width, .. } => (0.0, width),
            DensityProfile::Uniform { lo, hi, .. } => (lo, hi),
            DensityProfile::TruncatedGaussian { lo, hi, .. } => (lo, hi),
        }
    }

    pub fn check(&self) -> Result<()> {
        let (lo, hi) = self.support();
        if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo < hi) {
            return Err(Error::Range(format!(
                "density support [{lo}, {hi}] must satisfy 0 <= lo < hi < inf"
            )));
        }
        let positive = match *self {
            DensityProfile::Parabolic { amplitude, .. } => amplitude > 0.0,
            DensityProfile::Uniform { density, .. } => density > 0.0,
            DensityProfile::TruncatedGaussian { sd, amplitude, .. } => sd > 0.0 && amplitude > 0.0,
        };
        if !positive {
            return Err(Error::Range(
                "density amplitude (and sd) must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Initial state of the population.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialCondition {
    /// Every individual at `age`. `mass` is the PDE/ODE total mass.
    DiracCohort { age: f64, mass: f64 },
    /// Individuals distributed according to a density.
    Density(DensityProfile),
}

impl InitialCondition {
    pub fn dirac(age: f64) -> Self {
        InitialCondition::DiracCohort { age, mass: 1.0 }
    }

    pub fn check(&self) -> Result<()> {
        match *self {
            InitialCondition::DiracCohort { age, mass } => {
                if !(age.is_finite() && age >= 0.0) {
                    return Err(Error::Range(format!("Dirac age {age} must be >= 0")));
                }
                if !(mass.is_finite() && mass >= 0.0) {
                    return Err(Error::Range(format!("Dirac mass {mass} must be >= 0")));
                }
                Ok(())
            }
            InitialCondition::Density(p) => p.check(),
        }
    }

    /// Largest age carrying initial mass.
    pub fn support_bound(&self) -> f64 {
        match *self {
            InitialCondition::DiracCohort { age, .. } => age,
            InitialCondition::Density(p) => p.support().1,
        }
    }
}

const SAMPLER_KNOTS: usize = 1 << 16;

/// Inverse-CDF sampler on a table of `2^16` intervals with linear interpolation.
#[derive(Debug, Clone)]
pub struct InverseCdf {
    lo: f64,
    step: f64,
    cdf: Vec<f64>,
}

impl InverseCdf {
    pub fn new(profile: &DensityProfile) -> Result<Self> {
        profile.check()?;
        let (lo, hi) = profile.support();
        let step = (hi - lo) / SAMPLER_KNOTS as f64;
        let mut cdf = Vec::with_capacity(SAMPLER_KNOTS + 1);
        cdf.push(0.0);
        let mut acc = 0.0;
        for i in 0..SAMPLER_KNOTS {
            let a = lo + step * i as f64;
            let b = a + step;
            // Simpson per interval; exact for the quadratic profile.
            acc += step / 6.0
                * (profile.eval(a) + 4.0 * profile.eval(0.5 * (a + b)) + profile.eval(b));
            cdf.push(acc);
        }
        if acc <= 0.0 {
            return Err(Error::Range("density has zero mass".into()));
        }
        for v in &mut cdf {
            *v /= acc;
        }
        Ok(InverseCdf { lo, step, cdf })
    }

    /// Maps `u` in `[0, 1)` to an age.
    pub fn sample(&self, u: f64) -> f64 {
        let i = self
            .cdf
            .partition_point(|&c| c <= u)
            .clamp(1, self.cdf.len() - 1);
        let (c0, c1) = (self.cdf[i - 1], self.cdf[i]);
        let frac = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.5 };
        self.lo + self.step * ((i - 1) as f64 + frac.clamp(0.0, 1.0))
    }
}
