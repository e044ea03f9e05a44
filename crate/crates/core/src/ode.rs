//! The closed moment cascade `E_k' = k E_{k-1} - chi_k E_k` and its
//! birth-death extension
//! `E_k' = beta E_k(Gamma) + k E_{k-1} - (chi_k + mu) E_k`.
//!
//! The system is lower triangular and linear. High orders span hundreds of
//! decades, so every component is integrated as `y_k * exp(s_k)` with a
//! per-component log scale `s_k` that is re-centred whenever `|y_k|` leaves a
//! safe window. For `s_k = 0` this is plain RK4 on `E_k`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{chi_table, ln_gamma_moment, ValidatedParams};
use crate::moments::{encode_ln, MomentScale, MomentVector, LOG_THRESHOLD};
use crate::quadrature;

pub const DEFAULT_DT: f64 = 1e-3;
const STIFFNESS_LIMIT: f64 = 0.5;
const RESCALE_HIGH: f64 = 1e200;
const RESCALE_LOW: f64 = 1e-200;
const QUAD_REL_TOL: f64 = 1e-10;
/// `|chi_k|` at or below this is treated as an exact zero by [`find_k0`].
pub const CHI_ZERO_TOL: f64 = 1e-14;

/// `E_k = int_0^support b^k u0(b) db` for `k = 0..=k_max`.
pub fn moments_of_density<F: Fn(f64) -> f64>(
    u0: F,
    support: f64,
    k_max: usize,
) -> Result<MomentVector> {
    if !(support.is_finite() && support > 0.0) {
        return Err(Error::Range(format!("support bound {support} must be > 0")));
    }
    let ln_support = support.ln();
    let mut out = MomentVector::zeros(0.0, k_max);
    for k in 0..=k_max {
        let kk = k as i32;
        let direct = quadrature::integrate(|b| b.powi(kk) * u0(b), 0.0, support, QUAD_REL_TOL, 0.0);
        let value = match direct {
            Ok(v) if v.is_finite() && v.abs() < LOG_THRESHOLD => v,
            _ => {
                // Integrate (b / support)^k u0 so nothing overflows, then rescale in log space.
                let scaled = quadrature::integrate(
                    |b| (b / support).powi(kk) * u0(b),
                    0.0,
                    support,
                    QUAD_REL_TOL,
                    0.0,
                )?;
                let (v, s) = encode_ln(scaled.ln() + k as f64 * ln_support);
                out.scales[k] = s;
                v
            }
        };
        if value < 0.0 {
            return Err(Error::Range(format!("density has negative moment E_{k}")));
        }
        out.values[k] = value;
    }
    Ok(out)
}

/// One integrated trajectory with its numerical metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentTrajectory {
    pub points: Vec<MomentVector>,
    pub k_max: usize,
    pub dt: f64,
    pub warnings: Vec<String>,
}

impl MomentTrajectory {
    pub fn last(&self) -> &MomentVector {
        self.points
            .last()
            .expect("trajectory holds the initial point")
    }

    /// Point recorded at time `t`, if any.
    pub fn at(&self, t: f64) -> Option<&MomentVector> {
        self.points
            .iter()
            .find(|p| (p.t - t).abs() <= 1e-9 * t.abs().max(1.0))
    }
}

struct Cascade {
    /// `chi_k + mu`.
    decay: Vec<f64>,
    ln_source: Vec<Option<f64>>,
    demography: bool,
    y: Vec<f64>,
    scale: Vec<f64>,
    coupling: Vec<f64>,
    source: Vec<f64>,
}

impl Cascade {
    fn new(params: &ValidatedParams, init: &MomentVector) -> Result<Self> {
        let k_max = init.k_max();
        let chi = chi_table(params, k_max as u32)?;
        let demography = params.demography().copied();
        let mu = demography.map_or(0.0, |d| d.mu);
        let decay = chi.iter().map(|c| c + mu).collect();
        let ln_source = (0..=k_max)
            .map(|k| demography.map(|d| d.beta.ln() + ln_gamma_moment(&d, k as u32)))
            .collect();
        let mut y = Vec::with_capacity(k_max + 1);
        let mut scale = Vec::with_capacity(k_max + 1);
        for k in 0..=k_max {
            match init.scales[k] {
                MomentScale::Linear => {
                    y.push(init.values[k]);
                    scale.push(0.0);
                }
                MomentScale::Log10 => {
                    y.push(1.0);
                    scale.push(init.ln_abs(k));
                }
            }
        }
        let mut c = Cascade {
            decay,
            ln_source,
            demography: demography.is_some(),
            y,
            scale,
            coupling: vec![0.0; k_max + 1],
            source: vec![0.0; k_max + 1],
        };
        c.refresh_factors();
        Ok(c)
    }

    fn refresh_factors(&mut self) {
        for k in 0..self.y.len() {
            self.coupling[k] = if k == 0 {
                0.0
            } else {
                k as f64 * (self.scale[k - 1] - self.scale[k]).exp()
            };
            self.source[k] = self.ln_source[k].map_or(0.0, |l| (l - self.scale[k]).exp());
        }
    }

    fn rhs(&self, y: &[f64], out: &mut [f64]) {
        out[0] = if self.demography {
            self.source[0] - self.decay[0] * y[0]
        } else {
            0.0
        };
        for k in 1..y.len() {
            out[k] = self.coupling[k] * y[k - 1] - self.decay[k] * y[k] + self.source[k];
        }
    }

    fn step(&mut self, h: f64, work: &mut [Vec<f64>; 5]) {
        let n = self.y.len();
        let [k1, k2, k3, k4, tmp] = work;
        self.rhs(&self.y, k1);
        for i in 0..n {
            tmp[i] = self.y[i] + 0.5 * h * k1[i];
        }
        self.rhs(tmp, k2);
        for i in 0..n {
            tmp[i] = self.y[i] + 0.5 * h * k2[i];
        }
        self.rhs(tmp, k3);
        for i in 0..n {
            tmp[i] = self.y[i] + h * k3[i];
        }
        self.rhs(tmp, k4);
        let start = usize::from(!self.demography);
        for i in start..n {
            self.y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        self.rescale();
    }

    fn rescale(&mut self) {
        let mut changed = false;
        for k in 0..self.y.len() {
            let a = self.y[k].abs();
            if a > RESCALE_HIGH || (self.scale[k] != 0.0 && a != 0.0 && a < RESCALE_LOW) {
                self.scale[k] += a.ln();
                self.y[k] = self.y[k].signum();
                changed = true;
            }
        }
        if changed {
            self.refresh_factors();
        }
    }

    fn snapshot(&self, t: f64) -> MomentVector {
        let mut out = MomentVector::from_linear(t, self.y.clone());
        for k in 0..self.y.len() {
            if self.scale[k] != 0.0 {
                let (v, s) = encode_ln(self.y[k].abs().ln() + self.scale[k]);
                out.values[k] = if s == MomentScale::Linear {
                    v.copysign(self.y[k])
                } else {
                    v
                };
                out.scales[k] = s;
            }
        }
        out
    }
}

/// RK4 integration of the cascade from `init` to `t_end`, recording `init`
/// and the state at every output time (and at `t_end`).
///
/// Without demography `E_0` is carried unchanged. Each segment between
/// consecutive output times is split into equal steps no longer than `dt`.
pub fn integrate_moments(
    params: &ValidatedParams,
    init: &MomentVector,
    t_end: f64,
    dt: f64,
    output_times: &[f64],
) -> Result<MomentTrajectory> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Range(format!("dt = {dt} must be > 0")));
    }
    if init.is_empty() {
        return Err(Error::Range("initial moment vector is empty".into()));
    }
    if t_end < init.t {
        return Err(Error::Range(format!(
            "t_end = {t_end} precedes the initial time {}",
            init.t
        )));
    }
    let mut targets: Vec<f64> = output_times
        .iter()
        .copied()
        .filter(|&t| t > init.t && t <= t_end)
        .collect();
    if targets.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Range(
            "output times must be strictly increasing".into(),
        ));
    }
    if targets.last().is_none_or(|&t| t < t_end) && t_end > init.t {
        targets.push(t_end);
    }

    let mut cascade = Cascade::new(params, init)?;
    let mut warnings = Vec::new();
    let stiff = cascade
        .decay
        .iter()
        .skip(1)
        .fold(0.0f64, |m, d| m.max(d.abs()));
    if stiff * dt > STIFFNESS_LIMIT {
        let msg = format!(
            "max |chi_k + mu| * dt = {:.3} exceeds {STIFFNESS_LIMIT}; reduce dt",
            stiff * dt
        );
        log::warn!("{msg}");
        warnings.push(msg);
    }

    let n = cascade.y.len();
    let mut work: [Vec<f64>; 5] = std::array::from_fn(|_| vec![0.0; n]);
    let mut points = vec![init.clone()];
    let mut t = init.t;
    for target in targets {
        let span = target - t;
        let steps = (span / dt * (1.0 - 1e-12)).ceil().max(1.0) as u64;
        let h = span / steps as f64;
        for _ in 0..steps {
            cascade.step(h, &mut work);
        }
        t = target;
        let mut snap = cascade.snapshot(t);
        if !cascade.demography {
            // Carried, not integrated.
            snap.values[0] = init.values[0];
            snap.scales[0] = init.scales[0];
        }
        points.push(snap);
    }
    Ok(MomentTrajectory {
        points,
        k_max: init.k_max(),
        dt,
        warnings,
    })
}

/// `E_bar_k = E_0 prod_{j<=k} j / chi_j` for `k = 0..=k_stop`.
pub fn equilibrium_moments(
    params: &ValidatedParams,
    e0: f64,
    k_stop: usize,
) -> Result<MomentVector> {
    let chi = chi_table(params, k_stop as u32)?;
    let mut ln = Vec::with_capacity(k_stop + 1);
    let mut acc = e0.ln();
    ln.push(acc);
    for (j, &c) in chi.iter().enumerate().skip(1) {
        if c <= 0.0 {
            return Err(Error::Sign {
                index: j as u32,
                value: c,
            });
        }
        acc += (j as f64).ln() - c.ln();
        ln.push(acc);
    }
    let mut out = MomentVector::from_ln(f64::INFINITY, &ln);
    out.values[0] = e0;
    Ok(out)
}

/// Stationary moments with births and deaths:
/// `E_bar_0 = beta / mu`, `E_bar_k = (beta E_k(Gamma) + k E_bar_{k-1}) / (chi_k + mu)`.
pub fn equilibrium_moments_with_demography(
    params: &ValidatedParams,
    k_stop: usize,
) -> Result<MomentVector> {
    let d = *params
        .demography()
        .ok_or_else(|| Error::Range("no demography configured".into()))?;
    let chi = chi_table(params, k_stop as u32)?;
    let mut values = Vec::with_capacity(k_stop + 1);
    values.push(d.beta / d.mu);
    for k in 1..=k_stop {
        let rate = chi[k] + d.mu;
        if rate <= 0.0 {
            return Err(Error::Sign {
                index: k as u32,
                value: rate,
            });
        }
        let src = (d.beta.ln() + ln_gamma_moment(&d, k as u32)).exp();
        values.push((src + k as f64 * values[k - 1]) / rate);
    }
    Ok(MomentVector::from_linear(f64::INFINITY, values))
}

/// Result of scanning the sign pattern of `chi_1 ..= chi_K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "k0", rename_all = "snake_case")]
pub enum K0 {
    /// `chi_k > 0` for `k <= k0` and `chi_k < 0` for `k0 < k <= K`.
    Index(u32),
    /// `chi_k > 0` on the whole scanned range.
    AllPositive,
    /// `chi_k < 0` from `k = 1` on (`k0 = 0`).
    NonePositive,
}

pub fn find_k0(params: &ValidatedParams, k_max: u32) -> Result<K0> {
    if k_max == 0 {
        return Err(Error::Range("scan range must include k = 1".into()));
    }
    let chi = chi_table(params, k_max)?;
    if let Some((k, c)) = chi
        .iter()
        .enumerate()
        .skip(1)
        .find(|(_, c)| c.abs() <= CHI_ZERO_TOL)
    {
        return Err(Error::Pattern(format!(
            "chi_{k} = {c:e} is numerically zero; perturb the parameters"
        )));
    }
    let positive: Vec<bool> = chi.iter().skip(1).map(|&c| c > 0.0).collect();
    let changes = positive.windows(2).filter(|w| w[0] != w[1]).count();
    match (changes, positive[0]) {
        (0, true) => Ok(K0::AllPositive),
        (0, false) => Ok(K0::NonePositive),
        (1, true) => {
            let k0 = positive.iter().take_while(|p| **p).count();
            Ok(K0::Index(k0 as u32))
        }
        _ => Err(Error::Pattern(format!(
            "{changes} sign changes in chi_1..chi_{k_max} (chi_1 {})",
            if positive[0] { "> 0" } else { "< 0" }
        ))),
    }
}

/// Closed-form mean `M(t) = (M0 + 1/c) e^{ct} - 1/c`, `c = tau delta^2 / (1 - delta^2)`,
/// for the symmetric model `tau_plus = tau_minus = tau / 2`, `delta_plus = delta_minus = delta`.
pub fn mean_trajectory_symmetric(tau: f64, delta: f64, m0: f64, t: f64) -> f64 {
    let c = tau * delta * delta / (1.0 - delta * delta);
    let ct = c * t;
    if ct == 0.0 {
        return m0 + t;
    }
    // (e^{ct} - 1) / c written with expm1 so the c -> 0 limit is exact.
    m0 * ct.exp() + t * ct.exp_m1() / ct
}

/// Residuals of the stationary recursion,
/// `r_k = k E_{k-1} - chi_k E_k` (plus `beta E_k(Gamma) - mu E_k` with demography).
/// `r_0` is `beta - mu E_0` with demography and 0 otherwise.
pub fn recursion_residual(e: &MomentVector, params: &ValidatedParams) -> Result<Vec<f64>> {
    let k_max = e.k_max();
    let chi = chi_table(params, k_max as u32)?;
    let d = params.demography().copied();
    let mut r = Vec::with_capacity(k_max + 1);
    r.push(d.map_or(0.0, |d| d.beta - d.mu * e.get(0)));
    for k in 1..=k_max {
        let mut v = k as f64 * e.get(k - 1) - chi[k] * e.get(k);
        if let Some(d) = d {
            v += (d.beta.ln() + ln_gamma_moment(&d, k as u32)).exp() - d.mu * e.get(k);
        }
        r.push(v);
    }
    Ok(r)
}

/// `(k, |r_k|)` of the largest residual.
pub fn max_residual(residuals: &[f64]) -> Option<(usize, f64)> {
    residuals
        .iter()
        .map(|r| r.abs())
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(&b.1))
}
