//! Jump maps.
//!
//! A jump family is described by its forward map `f`: an individual whose
//! age is `f(b)` just before a jump lands at age `b` right after it. For
//! rejuvenation `f(b) >= b`, for premature aging `f(b) <= b`. Every family
//! satisfies `f(0) = 0` and `f'(b) >= 0`, which makes the inverse well defined.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ROOT_MAX_ITER: usize = 200;

/// Forward jump map `f` of one jump type.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum JumpFamily {
    /// `f(b) = g * b`; `g > 1` rejuvenates, `0 < g < 1` ages prematurely.
    Linear { g: f64 },
    /// `f(b) = (1 + delta * b^m) * b`.
    PolynomialRejuvenation { delta: f64, exponent: f64 },
    /// `f(b) = (1 - delta / (1 + chi_sat * b^m)) * b`.
    SaturatingAging {
        delta: f64,
        chi_sat: f64,
        exponent: f64,
    },
}

/// Which way a family moves ages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JumpKind {
    Rejuvenation,
    Aging,
    Identity,
}

impl JumpFamily {
    pub fn kind(&self) -> JumpKind {
        match *self {
            JumpFamily::Linear { g } if g > 1.0 => JumpKind::Rejuvenation,
            JumpFamily::Linear { g } if g < 1.0 => JumpKind::Aging,
            JumpFamily::Linear { .. } => JumpKind::Identity,
            JumpFamily::PolynomialRejuvenation { .. } => JumpKind::Rejuvenation,
            JumpFamily::SaturatingAging { .. } => JumpKind::Aging,
        }
    }

    pub fn is_linear(&self) -> bool {
        matches!(self, JumpFamily::Linear { .. })
    }

    /// Multiplicative factor of a linear family.
    pub fn linear_factor(&self) -> Option<f64> {
        match *self {
            JumpFamily::Linear { g } => Some(g),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            JumpFamily::Linear { .. } => "linear",
            JumpFamily::PolynomialRejuvenation { .. } => "polynomial_rejuvenation",
            JumpFamily::SaturatingAging { .. } => "saturating_aging",
        }
    }

    /// Forward map `f(b)`.
    pub fn forward(&self, b: f64) -> f64 {
        self.eval(b).0
    }

    /// `(f(b), f'(b))`, both evaluated analytically.
    pub fn eval(&self, b: f64) -> (f64, f64) {
        match *self {
            JumpFamily::Linear { g } => (g * b, g),
            JumpFamily::PolynomialRejuvenation { delta, exponent } => {
                let bm = b.powf(exponent);
                let f = (1.0 + delta * bm) * b;
                let df = 1.0 + delta * (exponent + 1.0) * bm;
                (f, df)
            }
            JumpFamily::SaturatingAging {
                delta,
                chi_sat,
                exponent,
            } => {
                let x = chi_sat * b.powf(exponent);
                let denom = 1.0 + x;
                let f = (1.0 - delta / denom) * b;
                // d/db [delta * b / (1 + chi b^m)] = delta (1 + (1 - m) chi b^m) / (1 + chi b^m)^2
                let df = 1.0 - delta * (1.0 + (1.0 - exponent) * x) / (denom * denom);
                (f, df)
            }
        }
    }

    /// Post-jump age: the `b` solving `f(b) = pre_jump`.
    pub fn target(&self, pre_jump: f64) -> Result<f64> {
        if pre_jump <= 0.0 {
            return Ok(0.0);
        }
        match *self {
            JumpFamily::Linear { g } => Ok(pre_jump / g),
            // f(b) >= b, so the root lies in [0, pre_jump].
            JumpFamily::PolynomialRejuvenation { .. } => self.invert(pre_jump, 0.0, pre_jump),
            // f(b) >= (1 - delta) b, so the root lies in [pre_jump, pre_jump / (1 - delta)].
            JumpFamily::SaturatingAging { delta, .. } => {
                self.invert(pre_jump, pre_jump, pre_jump / (1.0 - delta))
            }
        }
    }

    /// Safeguarded Newton iteration on `f(b) - y` inside a sign-changing bracket.
    fn invert(&self, y: f64, mut lo: f64, mut hi: f64) -> Result<f64> {
        let tol = 1e-12_f64.max(4.0 * f64::EPSILON * y);
        let mut b = 0.5 * (lo + hi);
        for _ in 0..ROOT_MAX_ITER {
            let (f, df) = self.eval(b);
            let r = f - y;
            if r == 0.0 {
                return Ok(b);
            }
            if r > 0.0 {
                hi = b;
            } else {
                lo = b;
            }
            let newton = b - r / df;
            let next = if df > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if (next - b).abs() <= tol || hi - lo <= tol {
                return Ok(next);
            }
            b = next;
        }
        Err(Error::Convergence {
            target: y,
            iterations: ROOT_MAX_ITER,
        })
    }

    /// Checks the family's own parameter inequalities.
    pub(crate) fn check(&self) -> Result<()> {
        let finite = |v: f64, name: &str| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::Range(format!("{name} must be finite")))
            }
        };
        match *self {
            JumpFamily::Linear { g } => {
                finite(g, "g")?;
                if g <= 0.0 {
                    return Err(Error::Range(format!("jump factor g = {g} must be > 0")));
                }
            }
            JumpFamily::PolynomialRejuvenation { delta, exponent } => {
                finite(delta, "delta_plus")?;
                finite(exponent, "m")?;
                if delta <= 0.0 {
                    return Err(Error::Range(format!("delta_plus = {delta} must be > 0")));
                }
                if exponent < 0.0 {
                    return Err(Error::Range(format!(
                        "exponent m = {exponent} must be >= 0"
                    )));
                }
            }
            JumpFamily::SaturatingAging {
                delta,
                chi_sat,
                exponent,
            } => {
                finite(delta, "delta_minus")?;
                finite(chi_sat, "chi_sat")?;
                finite(exponent, "m")?;
                if !(0.0 <= chi_sat && chi_sat <= delta && delta < 1.0) {
                    return Err(Error::Range(format!(
                        "need 0 <= chi_sat <= delta_minus < 1, got chi_sat = {chi_sat}, delta_minus = {delta}"
                    )));
                }
                if exponent < 0.0 {
                    return Err(Error::Range(format!(
                        "exponent m = {exponent} must be >= 0"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Post-jump age for a pre-jump age `b_pre`.
pub fn jump_target(family: &JumpFamily, b_pre: f64) -> Result<f64> {
    family.target(b_pre)
}

/// `(f(b), f'(b))` for the family.
pub fn jump_map_eval(family: &JumpFamily, b: f64) -> (f64, f64) {
    family.eval(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn families() -> Vec<JumpFamily> {
        vec![
            JumpFamily::Linear { g: 1.1 },
            JumpFamily::Linear { g: 0.9 },
            JumpFamily::PolynomialRejuvenation {
                delta: 0.1,
                exponent: 1.0,
            },
            JumpFamily::PolynomialRejuvenation {
                delta: 0.02,
                exponent: 0.5,
            },
            JumpFamily::SaturatingAging {
                delta: 0.5,
                chi_sat: 0.2,
                exponent: 1.0,
            },
            JumpFamily::SaturatingAging {
                delta: 0.3,
                chi_sat: 0.3,
                exponent: 2.5,
            },
        ]
    }

    #[test]
    fn linear_rejuvenation_divides_by_g() {
        let t = jump_target(&JumpFamily::Linear { g: 1.1 }, 30.0).unwrap();
        assert!((t - 27.272727272727273).abs() < 1e-12);
    }

    #[test]
    fn zero_is_fixed_by_every_family() {
        for f in families() {
            assert_eq!(f.target(0.0).unwrap(), 0.0);
            assert_eq!(f.forward(0.0), 0.0);
        }
    }

    #[test]
    fn polynomial_inverse_recovers_known_point() {
        let fam = JumpFamily::PolynomialRejuvenation {
            delta: 0.1,
            exponent: 1.0,
        };
        assert_eq!(fam.forward(10.0), 20.0);
        let b = fam.target(20.0).unwrap();
        assert!((b - 10.0).abs() < 1e-10);
    }

    #[test]
    fn analytic_values() {
        assert_eq!(JumpFamily::Linear { g: 0.9 }.eval(10.0), (9.0, 0.9));
        let (f, df) = JumpFamily::PolynomialRejuvenation {
            delta: 0.1,
            exponent: 1.0,
        }
        .eval(2.0);
        assert!((f - 2.4).abs() < 1e-14);
        assert!((df - 1.4).abs() < 1e-14);
        let (f, df) = JumpFamily::SaturatingAging {
            delta: 0.5,
            chi_sat: 0.0,
            exponent: 0.0,
        }
        .eval(8.0);
        assert_eq!((f, df), (4.0, 0.5));
    }

    #[test]
    fn direction_of_jumps() {
        for f in families() {
            let t = f.target(50.0).unwrap();
            match f.kind() {
                JumpKind::Rejuvenation => assert!(t <= 50.0),
                JumpKind::Aging => assert!(t >= 50.0),
                JumpKind::Identity => assert_eq!(t, 50.0),
            }
        }
    }

    proptest! {
        #[test]
        fn round_trip_through_inverse(b in 0.0f64..200.0, idx in 0usize..6) {
            let fam = families()[idx];
            let y = fam.forward(b);
            let back = fam.forward(fam.target(y).unwrap());
            prop_assert!((back - y).abs() <= 1e-10 * (1.0 + y));
        }

        #[test]
        fn derivative_matches_central_difference(b in 0.1f64..200.0, idx in 0usize..6) {
            let fam = families()[idx];
            let h = 1e-5 * b.max(1.0);
            let fd = (fam.forward(b + h) - fam.forward(b - h)) / (2.0 * h);
            let (_, df) = fam.eval(b);
            prop_assert!((fd - df).abs() <= 1e-6 * df.abs().max(1e-12));
            prop_assert!(df >= 0.0);
        }
    }
}
