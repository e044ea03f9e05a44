//! Moment vectors `(E_0, ..., E_K)` shared by all three representations.

use serde::{Deserialize, Serialize};

/// Above this magnitude a component is stored as `log10 |E_k|`.
pub const LOG_THRESHOLD: f64 = 1e300;

/// How a stored component should be read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentScale {
    Linear,
    /// The stored value is `log10 |E_k|`; the sign is positive.
    Log10,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentVector {
    pub t: f64,
    pub values: Vec<f64>,
    pub scales: Vec<MomentScale>,
}

impl MomentVector {
    pub fn from_linear(t: f64, values: Vec<f64>) -> Self {
        let scales = vec![MomentScale::Linear; values.len()];
        MomentVector { t, values, scales }
    }

    /// Builds a vector from natural-log magnitudes, keeping components below
    /// [`LOG_THRESHOLD`] in linear form. `-inf` encodes an exact zero.
    pub fn from_ln(t: f64, ln_values: &[f64]) -> Self {
        let mut values = Vec::with_capacity(ln_values.len());
        let mut scales = Vec::with_capacity(ln_values.len());
        for &l in ln_values {
            let (v, s) = encode_ln(l);
            values.push(v);
            scales.push(s);
        }
        MomentVector { t, values, scales }
    }

    pub fn zeros(t: f64, k_max: usize) -> Self {
        Self::from_linear(t, vec![0.0; k_max + 1])
    }

    /// Highest order `K`.
    pub fn k_max(&self) -> usize {
        self.values.len().saturating_sub(1)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_log(&self, k: usize) -> bool {
        self.scales[k] == MomentScale::Log10
    }

    pub fn any_log(&self) -> bool {
        self.scales.contains(&MomentScale::Log10)
    }

    /// `E_k` as a plain float; `inf` for log-stored components beyond range.
    pub fn get(&self, k: usize) -> f64 {
        match self.scales[k] {
            MomentScale::Linear => self.values[k],
            MomentScale::Log10 => 10f64.powf(self.values[k]),
        }
    }

    /// `ln |E_k|`.
    pub fn ln_abs(&self, k: usize) -> f64 {
        match self.scales[k] {
            MomentScale::Linear => self.values[k].abs().ln(),
            MomentScale::Log10 => self.values[k] * std::f64::consts::LN_10,
        }
    }

    pub fn log10_abs(&self, k: usize) -> f64 {
        self.ln_abs(k) / std::f64::consts::LN_10
    }

    /// `E_k / E_0`, computed in log space when needed.
    pub fn normalized(&self, k: usize) -> f64 {
        if !self.is_log(k) && !self.is_log(0) {
            return self.values[k] / self.values[0];
        }
        (self.ln_abs(k) - self.ln_abs(0)).exp()
    }
}

pub(crate) fn encode_ln(l: f64) -> (f64, MomentScale) {
    if l == f64::NEG_INFINITY {
        return (0.0, MomentScale::Linear);
    }
    let linear = l.exp();
    if linear.is_finite() && linear < LOG_THRESHOLD {
        (linear, MomentScale::Linear)
    } else {
        (l / std::f64::consts::LN_10, MomentScale::Log10)
    }
}

/// `ln sum_i exp(x_i)`, `-inf` for an empty or all-`-inf` input.
pub(crate) fn log_sum_exp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Moments of point masses: `E_k = sum_i w_i x_i^k` (with `0^0 = 1`).
///
/// Falls back to log-sum-exp accumulation for any order whose plain sum is not
/// representable; such components are flagged [`MomentScale::Log10`].
pub fn point_moments<I>(t: f64, points: I, k_max: usize) -> MomentVector
where
    I: Iterator<Item = (f64, f64)> + Clone,
{
    let mut sums = vec![0.0; k_max + 1];
    for (x, w) in points.clone() {
        let mut p = w;
        sums[0] += p;
        for s in sums.iter_mut().skip(1) {
            p *= x;
            *s += p;
        }
    }
    let mut out = MomentVector::from_linear(t, sums);
    for k in 0..=k_max {
        let v = out.values[k];
        if v.is_finite() && v.abs() < LOG_THRESHOLD {
            continue;
        }
        let kf = k as f64;
        let ln = log_sum_exp(
            points
                .clone()
                .filter(|&(x, w)| x > 0.0 && w > 0.0)
                .map(move |(x, w)| w.ln() + kf * x.ln()),
        );
        out.values[k] = ln / std::f64::consts::LN_10;
        out.scales[k] = MomentScale::Log10;
    }
    out
}
