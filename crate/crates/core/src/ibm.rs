//! Individual-based Monte-Carlo simulation of the jump process.
//!
//! Ages drift at unit speed. Each individual carries independent exponential
//! clocks for rejuvenation (rate `tau_plus`) and premature aging (rate
//! `tau_minus`); they are simulated as one population clock of rate
//! `N (tau_plus + tau_minus)` that picks a uniformly random individual.
//! With demography, births arrive at rate `beta` with gamma-distributed ages
//! and deaths at rate `mu N`. Event times are exact; there is no time step.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::initial::{InitialCondition, InverseCdf};
use crate::model::ValidatedParams;
use crate::moments::{point_moments, MomentVector};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventCounts {
    pub rejuvenation: u64,
    pub aging: u64,
    pub birth: u64,
    pub death: u64,
}

impl EventCounts {
    pub fn jumps(&self) -> u64 {
        self.rejuvenation + self.aging
    }
}

/// Particle state. Ages are stored as offsets `age - t`, so advancing the
/// clock ages everybody at once.
#[derive(Debug, Clone)]
pub struct Population {
    offsets: Vec<f64>,
    t: f64,
    rng: ChaCha8Rng,
    events: EventCounts,
}

impl Population {
    /// Population at `t = 0` with the given ages, drawing from stream
    /// `stream` of the generator seeded by `seed`.
    pub fn from_ages(ages: Vec<f64>, seed: u64, stream: u64) -> Result<Self> {
        if let Some(a) = ages.iter().find(|a| !(a.is_finite() && **a >= 0.0)) {
            return Err(Error::Range(format!("age {a} must be finite and >= 0")));
        }
        Ok(Population {
            offsets: ages,
            t: 0.0,
            rng: replicate_rng(seed, stream),
            events: EventCounts::default(),
        })
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn events(&self) -> EventCounts {
        self.events
    }

    /// Current ages, in storage order.
    pub fn ages(&self) -> impl Iterator<Item = f64> + Clone + '_ {
        let t = self.t;
        self.offsets.iter().map(move |o| (o + t).max(0.0))
    }

    pub fn max_age(&self) -> Option<f64> {
        self.ages().reduce(f64::max)
    }

    pub fn mean_age(&self) -> Option<f64> {
        (!self.is_empty()).then(|| self.ages().sum::<f64>() / self.len() as f64)
    }

    /// Simulates every event in `(t, t_target]` and sets the clock to `t_target`.
    pub fn advance(&mut self, t_target: f64, params: &ValidatedParams) -> Result<()> {
        if t_target < self.t {
            return Err(Error::Range(format!(
                "cannot advance from t = {} back to {t_target}",
                self.t
            )));
        }
        let model = params.model();
        let jump_rate = model.total_rate();
        let p_rejuv = model.rejuvenation_probability();
        let demography = params.demography().copied();
        let newborn = demography
            .map(|d| Gamma::new(f64::from(d.alpha), 1.0 / d.gamma_rate))
            .transpose()
            .map_err(|e| Error::Range(format!("gamma newborn law: {e}")))?;
        let (beta, mu) = demography.map_or((0.0, 0.0), |d| (d.beta, d.mu));

        loop {
            let n = self.offsets.len() as f64;
            let jump_total = n * jump_rate;
            let death_total = n * mu;
            let total = jump_total + beta + death_total;
            if total <= 0.0 {
                break;
            }
            let wait: f64 = Exp1.sample(&mut self.rng);
            let next = self.t + wait / total;
            if next > t_target {
                break;
            }
            self.t = next;

            let u = self.rng.random::<f64>() * total;
            if u < jump_total {
                let idx = self.rng.random_range(0..self.offsets.len());
                let age = (self.offsets[idx] + self.t).max(0.0);
                let new_age = if self.rng.random::<f64>() < p_rejuv {
                    self.events.rejuvenation += 1;
                    model.rejuvenation.target(age)?
                } else {
                    self.events.aging += 1;
                    model.aging.target(age)?
                };
                self.offsets[idx] = new_age - self.t;
            } else if u < jump_total + beta {
                // `newborn` is Some whenever beta > 0.
                if let Some(law) = &newborn {
                    let age = law.sample(&mut self.rng);
                    self.offsets.push(age - self.t);
                    self.events.birth += 1;
                }
            } else if !self.offsets.is_empty() {
                let idx = self.rng.random_range(0..self.offsets.len());
                self.offsets.swap_remove(idx);
                self.events.death += 1;
            }
        }
        self.t = t_target;
        Ok(())
    }
}

/// Generator for replicate `stream` of a run seeded by `seed`.
pub fn replicate_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `n` individuals drawn from `ic` on stream 0 of `seed`.
pub fn init_population(n: usize, ic: &InitialCondition, seed: u64) -> Result<Population> {
    init_replicate(n, ic, seed, 0)
}

/// Like [`init_population`] but on an explicit replicate stream.
pub fn init_replicate(
    n: usize,
    ic: &InitialCondition,
    seed: u64,
    stream: u64,
) -> Result<Population> {
    if n == 0 {
        return Err(Error::Range("population size must be >= 1".into()));
    }
    ic.check()?;
    let mut pop = Population::from_ages(Vec::new(), seed, stream)?;
    pop.offsets = match ic {
        InitialCondition::DiracCohort { age, .. } => vec![*age; n],
        InitialCondition::Density(profile) => {
            let table = InverseCdf::new(profile)?;
            (0..n)
                .map(|_| table.sample(pop.rng.random::<f64>()))
                .collect()
        }
    };
    Ok(pop)
}

/// In-place [`Population::advance`].
pub fn advance(pop: &mut Population, t_target: f64, params: &ValidatedParams) -> Result<()> {
    pop.advance(t_target, params)
}

/// Age histogram with bins `[i w, (i+1) w)` and one overflow bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_width: f64,
    pub counts: Vec<u64>,
    pub overflow: u64,
}

impl Histogram {
    pub fn empty(bin_width: f64, b_max: f64) -> Result<Self> {
        if !(bin_width.is_finite() && bin_width > 0.0) {
            return Err(Error::Range(format!("bin width {bin_width} must be > 0")));
        }
        if !(b_max.is_finite() && b_max > 0.0) {
            return Err(Error::Range(format!("histogram b_max {b_max} must be > 0")));
        }
        let n_bins = (b_max / bin_width).ceil() as usize;
        Ok(Histogram {
            bin_width,
            counts: vec![0; n_bins],
            overflow: 0,
        })
    }

    pub fn add(&mut self, age: f64) {
        let i = (age / self.bin_width).floor();
        if i >= 0.0 && (i as usize) < self.counts.len() {
            self.counts[i as usize] += 1;
        } else {
            self.overflow += 1;
        }
    }

    /// Sums the counts of another histogram with identical binning.
    pub fn merge(&mut self, other: &Histogram) -> Result<()> {
        if self.bin_width != other.bin_width || self.counts.len() != other.counts.len() {
            return Err(Error::BinningMismatch(
                "histograms differ in bin width or bin count".into(),
            ));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.overflow += other.overflow;
        Ok(())
    }

    /// Right edge of the last regular bin.
    pub fn upper(&self) -> f64 {
        self.bin_width * self.counts.len() as f64
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.overflow
    }

    pub fn bin_edges(&self, i: usize) -> (f64, f64) {
        (self.bin_width * i as f64, self.bin_width * (i + 1) as f64)
    }

    /// `count / (N w)` per regular bin.
    pub fn densities(&self) -> Vec<f64> {
        let total = self.total();
        if total == 0 {
            return vec![0.0; self.counts.len()];
        }
        let scale = 1.0 / (total as f64 * self.bin_width);
        self.counts.iter().map(|&c| c as f64 * scale).collect()
    }

    /// Index of the fullest bin.
    pub fn mode_bin(&self) -> Option<usize> {
        self.counts
            .iter()
            .enumerate()
            .max_by_key(|(i, c)| (**c, std::cmp::Reverse(*i)))
            .filter(|(_, c)| **c > 0)
            .map(|(i, _)| i)
    }
}

pub fn histogram(pop: &Population, bin_width: f64, b_max: f64) -> Result<Histogram> {
    let mut h = Histogram::empty(bin_width, b_max)?;
    for a in pop.ages() {
        h.add(a);
    }
    Ok(h)
}

/// Unnormalised moments `E_k = sum_i age_i^k`, so `E_0 = N`.
pub fn sample_moments(pop: &Population, k_max: usize) -> MomentVector {
    point_moments(pop.time(), pop.ages().map(|a| (a, 1.0)), k_max)
}

/// Replicated simulation settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ensemble {
    pub n_individuals: usize,
    pub replicates: usize,
    pub seed: u64,
}

/// Runs every replicate on its own generator stream and records
/// `observe(&population)` at each output time. Results are replicate-major
/// and independent of thread scheduling.
pub fn run_ensemble<T, F>(
    ensemble: &Ensemble,
    ic: &InitialCondition,
    params: &ValidatedParams,
    output_times: &[f64],
    observe: F,
) -> Result<Vec<Vec<T>>>
where
    T: Send,
    F: Fn(&Population) -> T + Sync,
{
    if output_times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Range("output times must be sorted".into()));
    }
    (0..ensemble.replicates)
        .into_par_iter()
        .map(|r| {
            let mut pop = init_replicate(ensemble.n_individuals, ic, ensemble.seed, r as u64)?;
            output_times
                .iter()
                .map(|&t| {
                    pop.advance(t, params)?;
                    Ok(observe(&pop))
                })
                .collect::<Result<Vec<T>>>()
        })
        .collect()
}
