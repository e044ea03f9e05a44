//! Cross-representation comparisons: histogram/density distances, moment
//! agreement reports, support bounds and chi_k summaries.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ibm::{Histogram, Population};
use crate::model::{chi_table, x_max, ChiShape, ValidatedParams};
use crate::moments::MomentVector;
use crate::ode::{find_k0, K0};
use crate::pde::{DensityState, Grid};

/// Probability mass per bin `[i w, (i+1) w)` plus everything beyond the last bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinnedDistribution {
    pub bin_width: f64,
    pub probs: Vec<f64>,
    pub overflow: f64,
}

impl BinnedDistribution {
    pub fn from_histogram(hist: &Histogram) -> Self {
        let total = hist.total().max(1) as f64;
        BinnedDistribution {
            bin_width: hist.bin_width,
            probs: hist.counts.iter().map(|&c| c as f64 / total).collect(),
            overflow: hist.overflow as f64 / total,
        }
    }

    /// Aggregates grid cells into `n_bins` bins of width `bin_width`, which
    /// must be a whole number of cells. Cells past the last bin and the
    /// solver outflow go to the overflow bin.
    pub fn from_density(
        state: &DensityState,
        grid: &Grid,
        bin_width: f64,
        n_bins: usize,
    ) -> Result<Self> {
        let ratio = bin_width / grid.dx();
        let cells = ratio.round();
        if cells < 1.0 || (ratio - cells).abs() > 1e-9 * ratio {
            return Err(Error::BinningMismatch(format!(
                "bin width {bin_width} is not a multiple of the cell width {}",
                grid.dx()
            )));
        }
        let cells = cells as usize;
        let mut probs = vec![0.0; n_bins];
        let mut overflow = state.outflow;
        for (i, &m) in state.masses.iter().enumerate() {
            match probs.get_mut(i / cells) {
                Some(p) => *p += m,
                None => overflow += m,
            }
        }
        let total: f64 = probs.iter().sum::<f64>() + overflow;
        if total > 0.0 {
            for p in &mut probs {
                *p /= total;
            }
            overflow /= total;
        }
        Ok(BinnedDistribution {
            bin_width,
            probs,
            overflow,
        })
    }
}

/// `sum |p - q|` over all bins including overflow; lies in `[0, 2]`.
pub fn l1_between(a: &BinnedDistribution, b: &BinnedDistribution) -> Result<f64> {
    if a.bin_width != b.bin_width || a.probs.len() != b.probs.len() {
        return Err(Error::BinningMismatch(format!(
            "{} bins of width {} vs {} bins of width {}",
            a.probs.len(),
            a.bin_width,
            b.probs.len(),
            b.bin_width
        )));
    }
    let body: f64 = a
        .probs
        .iter()
        .zip(&b.probs)
        .map(|(p, q)| (p - q).abs())
        .sum();
    Ok(body + (a.overflow - b.overflow).abs())
}

/// L1 distance between an IBM histogram and a PDE density integrated over
/// the histogram bins.
pub fn l1_distance(hist: &Histogram, state: &DensityState, grid: &Grid) -> Result<f64> {
    let p = BinnedDistribution::from_histogram(hist);
    let q = BinnedDistribution::from_density(state, grid, hist.bin_width, hist.counts.len())?;
    l1_between(&p, &q)
}

/// Power-of-two bin width close to a quarter of the standard deviation
/// implied by `moments`, and never below `min_width`.
pub fn suggested_bin_width(moments: &MomentVector, min_width: f64) -> f64 {
    let mean = moments.normalized(1);
    let var = (moments.normalized(2) - mean * mean).max(0.0);
    let target = 0.25 * var.sqrt();
    if !(target > min_width) {
        return min_width;
    }
    let w = 2f64.powi(target.log2().floor() as i32);
    w.max(min_width)
}

/// Outcome of a support-bound check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportReport {
    pub within: bool,
    /// Largest observed age (IBM) or right edge of the last occupied cell (PDE).
    pub max_age: f64,
    pub bound: f64,
}

/// Checks every individual age against `b_star + t`.
pub fn support_check_population(pop: &Population, b_star: f64) -> SupportReport {
    let bound = b_star + pop.time();
    let max_age = pop.max_age().unwrap_or(0.0);
    SupportReport {
        within: max_age <= bound,
        max_age,
        bound,
    }
}

/// Checks the last occupied cell against `b_star + t + db`.
pub fn support_check_density(state: &DensityState, grid: &Grid, b_star: f64) -> SupportReport {
    let bound = b_star + state.t + grid.dx();
    let max_age = state.support_edge(grid);
    SupportReport {
        within: max_age <= bound * (1.0 + 1e-12),
        max_age,
        bound,
    }
}

/// How much two normalised moment vectors may differ.
///
/// The allowance for order `k` is `relative * |reference_k| + n_sigma * se_k`,
/// where `se_k` are standard errors of the first vector (if it comes from a
/// simulation).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToleranceProfile {
    pub relative: f64,
    pub n_sigma: f64,
    pub standard_errors: Option<Vec<f64>>,
    /// Largest accepted gap between the two time stamps.
    pub time_tolerance: f64,
}

impl ToleranceProfile {
    pub fn deterministic(relative: f64) -> Self {
        ToleranceProfile {
            relative,
            n_sigma: 0.0,
            standard_errors: None,
            time_tolerance: 1e-9,
        }
    }

    pub fn monte_carlo(relative: f64, n_sigma: f64, standard_errors: Vec<f64>) -> Self {
        ToleranceProfile {
            relative,
            n_sigma,
            standard_errors: Some(standard_errors),
            time_tolerance: 1e-9,
        }
    }

    fn allowance(&self, k: usize, reference: f64) -> f64 {
        let se = self
            .standard_errors
            .as_ref()
            .and_then(|s| s.get(k))
            .copied()
            .unwrap_or(0.0);
        self.relative * reference.abs() + self.n_sigma * se
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub scenario: String,
    pub entries: Vec<ReportEntry>,
    pub provenance: BTreeMap<String, String>,
}

impl ComparisonReport {
    pub fn new(scenario: impl Into<String>) -> Self {
        ComparisonReport {
            scenario: scenario.into(),
            ..Default::default()
        }
    }

    /// Adds an entry that passes when `value <= tolerance`.
    pub fn check(&mut self, name: impl Into<String>, value: f64, tolerance: f64) {
        self.entries.push(ReportEntry {
            name: name.into(),
            value,
            tolerance,
            pass: value <= tolerance,
        });
    }

    pub fn note(&mut self, key: impl Into<String>, value: impl ToString) {
        self.provenance.insert(key.into(), value.to_string());
    }

    pub fn extend(&mut self, other: ComparisonReport) {
        self.entries.extend(other.entries);
        self.provenance.extend(other.provenance);
    }

    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    pub fn first_failure(&self) -> Option<&ReportEntry> {
        self.entries.iter().find(|e| !e.pass)
    }

    /// One line per entry.
    pub fn summary(&self) -> String {
        let mut out = format!(
            "{}: {}\n",
            self.scenario,
            if self.passed() { "PASS" } else { "FAIL" }
        );
        for e in &self.entries {
            out.push_str(&format!(
                "  [{}] {} = {:.6e} (tol {:.6e})\n",
                if e.pass { "ok" } else { "FAIL" },
                e.name,
                e.value,
                e.tolerance
            ));
        }
        out
    }
}

/// Compares `E_k / E_0` for `1 <= k <= k_max`. `b` is the reference side.
pub fn moment_agreement(
    label: &str,
    a: &MomentVector,
    b: &MomentVector,
    k_max: usize,
    profile: &ToleranceProfile,
) -> ComparisonReport {
    let mut report = ComparisonReport::new(label);
    report.check(
        format!("{label} |t_a - t_b|"),
        (a.t - b.t).abs(),
        profile.time_tolerance,
    );
    let k_max = k_max.min(a.k_max()).min(b.k_max());
    for k in 1..=k_max {
        let (x, y) = (a.normalized(k), b.normalized(k));
        let allowance = profile.allowance(k, y);
        let diff = (x - y).abs();
        // Report as a relative difference with the matching relative tolerance.
        let scale = y.abs().max(f64::MIN_POSITIVE);
        let mut entry = ReportEntry {
            name: format!("{label} E_{k}/E_0 t={}", b.t),
            value: diff / scale,
            tolerance: allowance / scale,
            pass: diff <= allowance,
        };
        if !diff.is_finite() {
            entry.pass = false;
        }
        report.entries.push(entry);
    }
    report
}

/// Replicate estimate of the normalised moments `E_k / E_0`.
///
/// Uses the ratio estimator `sum_r E_k^r / sum_r E_0^r`, so replicates with
/// different (or zero) population sizes are weighted by size. Its standard
/// error is the usual linearised one, `sd(E_k^r - R E_0^r) / (sqrt(n) mean(E_0^r))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateSummary {
    pub t: f64,
    pub replicates: usize,
    pub mean: Vec<f64>,
    pub standard_error: Vec<f64>,
}

impl ReplicateSummary {
    pub fn from_moments(samples: &[MomentVector]) -> Result<Self> {
        let first = samples
            .first()
            .ok_or_else(|| Error::Range("no replicates to summarise".into()))?;
        let n = samples.len();
        let len = first.len();
        if samples.iter().any(|s| s.len() != len) {
            return Err(Error::Range("replicates differ in moment order".into()));
        }
        let mass: f64 = samples.iter().map(|s| s.get(0)).sum();
        if !(mass > 0.0) {
            return Err(Error::Range("every replicate is empty".into()));
        }
        let nf = n as f64;
        let mut mean = vec![0.0; len];
        let mut standard_error = vec![0.0; len];
        for k in 0..len {
            let r = samples.iter().map(|s| s.get(k)).sum::<f64>() / mass;
            mean[k] = r;
            if n > 1 {
                let ss: f64 = samples
                    .iter()
                    .map(|s| (s.get(k) - r * s.get(0)).powi(2))
                    .sum();
                standard_error[k] = (ss / (nf * (nf - 1.0))).sqrt() / (mass / nf);
            }
        }
        Ok(ReplicateSummary {
            t: first.t,
            replicates: n,
            mean,
            standard_error,
        })
    }

    /// Mean vector in normalised form (`E_0 = 1`).
    pub fn as_moments(&self) -> MomentVector {
        MomentVector::from_linear(self.t, self.mean.clone())
    }
}

/// `chi_k` table with its shape classification and `k0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiReport {
    pub shape: ChiShape,
    pub criterion: f64,
    pub k0: K0,
    pub chi: Vec<f64>,
}

pub fn chi_report(params: &ValidatedParams, k_max: u32) -> Result<ChiReport> {
    Ok(ChiReport {
        shape: x_max(params)?,
        criterion: crate::model::shape_criterion(params)?,
        k0: find_k0(params, k_max)?,
        chi: chi_table(params, k_max)?,
    })
}
