//! Scenario dispatch and output emission.

use std::path::Path;

use biolage_core::analysis::{
    l1_distance, moment_agreement, suggested_bin_width, support_check_density, ComparisonReport,
    ReplicateSummary, ToleranceProfile,
};
use biolage_core::ibm::{histogram, run_ensemble, sample_moments, EventCounts};
use biolage_core::model::{chi_table, shape_criterion, x_max};
use biolage_core::moments::point_moments;
use biolage_core::ode::{
    equilibrium_moments, equilibrium_moments_with_demography, find_k0, integrate_moments,
    moments_of_density, recursion_residual,
};
use biolage_core::pde::{density_moments, DensityTrajectory, Grid, JumpScheme, PdeSolver};
use biolage_core::{
    ChiShape, Ensemble, Histogram, InitialCondition, MomentTrajectory, MomentVector,
    ValidatedParams, K0,
};
use serde::{Deserialize, Serialize};

use crate::config::{RunSpec, Scenario};
use crate::error::CliResult;
use crate::formats;
use crate::manifest::{Manifest, OutputDir};

/// Relative discretisation allowance used by `compare`.
pub const DISCRETISATION_TOL: f64 = 0.01;
pub const N_SIGMA: f64 = 3.0;
pub const L1_TOL: f64 = 0.05;
pub const LEDGER_TOL: f64 = 1e-12;
/// Outflow fraction above which the PDE domain is flagged as too short.
pub const OUTFLOW_WARN: f64 = 1e-6;

#[derive(Debug)]
pub struct RunOutcome {
    pub manifest: Manifest,
    pub report: Option<ComparisonReport>,
    pub summary: String,
}

/// Runs `spec`, writing into `out`. On error everything written is removed.
pub fn execute(spec: &RunSpec, out: &Path) -> CliResult<RunOutcome> {
    let mut dir = OutputDir::create(out)?;
    match run_into(spec, &mut dir) {
        Ok((report, summary)) => {
            let manifest = dir.finish()?;
            Ok(RunOutcome {
                manifest,
                report,
                summary,
            })
        }
        Err(e) => {
            dir.abort();
            Err(e)
        }
    }
}

fn run_into(spec: &RunSpec, dir: &mut OutputDir) -> CliResult<(Option<ComparisonReport>, String)> {
    dir.write_json("run_spec.json", spec)?;
    let params = spec.params()?;
    let mut summary = format!("scenario {}\n", spec.scenario.name());
    let report = match spec.scenario {
        Scenario::AnalyzeChi => {
            let s = analyze_chi(spec, &params, dir)?;
            summary.push_str(&format!(
                "case {}, x_max {:?}, k0 {:?}\n",
                s.case, s.x_max, s.k0
            ));
            None
        }
        Scenario::Moments => {
            let tr = solve_moments(spec, &params)?;
            write_moment_outputs(spec, &params, &tr, dir)?;
            summary.push_str(&format!("moments integrated to t = {}\n", tr.last().t));
            None
        }
        Scenario::Pde => {
            let (grid, tr) = solve_pde(spec, &params)?;
            let ledger = write_pde_outputs(spec, &params, &grid, &tr, dir)?;
            summary.push_str(&format!(
                "pde: {} cells, max ledger error {:.3e}, final outflow fraction {:.3e}\n",
                grid.n_cells, ledger.max_ledger_error, ledger.final_outflow_fraction
            ));
            None
        }
        Scenario::Ibm => {
            let widths = vec![spec.numerics.bin_width; spec.numerics.output_times.len()];
            let run = simulate_ibm(spec, &params, &widths)?;
            write_ibm_outputs(spec, &run, dir)?;
            summary.push_str(&format!(
                "ibm: {} replicates x {} individuals\n",
                spec.numerics.replicates, spec.numerics.n_individuals
            ));
            None
        }
        Scenario::Compare => {
            let report = compare(spec, &params, dir)?;
            summary.push_str(&report.summary());
            Some(report)
        }
    };
    Ok((report, summary))
}

// ---------------------------------------------------------------- moments

pub fn initial_moments(ic: &InitialCondition, k_max: usize) -> CliResult<MomentVector> {
    Ok(match *ic {
        InitialCondition::DiracCohort { age, mass } => {
            point_moments(0.0, std::iter::once((age, mass)), k_max)
        }
        InitialCondition::Density(p) => moments_of_density(|b| p.eval(b), p.support().1, k_max)?,
    })
}

pub fn solve_moments(spec: &RunSpec, params: &ValidatedParams) -> CliResult<MomentTrajectory> {
    let n = &spec.numerics;
    let init = initial_moments(&spec.initial, n.k_max)?;
    Ok(integrate_moments(
        params,
        &init,
        n.t_end,
        n.ode_dt,
        &n.output_times,
    )?)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MomentsSummary {
    pub k0: Option<K0>,
    pub equilibrium: Option<MomentVector>,
    pub final_residuals: Vec<f64>,
    pub notes: Vec<String>,
}

fn write_moment_outputs(
    spec: &RunSpec,
    params: &ValidatedParams,
    tr: &MomentTrajectory,
    dir: &mut OutputDir,
) -> CliResult<()> {
    dir.write("moments.csv", |w| formats::write_moments(w, &tr.points))?;
    let k_max = spec.numerics.k_max;
    let mut notes = tr.warnings.clone();
    let k0 = if k_max >= 1 {
        find_k0(params, k_max as u32)
            .map_err(|e| notes.push(e.to_string()))
            .ok()
    } else {
        None
    };
    let equilibrium = if params.demography().is_some() {
        equilibrium_moments_with_demography(params, k_max)
    } else {
        let e0 = tr.last().get(0);
        match k0 {
            Some(K0::Index(k)) => equilibrium_moments(params, e0, k_max.min(k as usize)),
            Some(K0::AllPositive) => equilibrium_moments(params, e0, k_max),
            _ => equilibrium_moments(params, e0, 0),
        }
    }
    .map_err(|e| notes.push(e.to_string()))
    .ok();
    let summary = MomentsSummary {
        k0,
        equilibrium,
        final_residuals: recursion_residual(tr.last(), params)?,
        notes,
    };
    dir.write_json("moments_summary.json", &summary)
}

// ---------------------------------------------------------------- pde

pub fn solve_pde(spec: &RunSpec, params: &ValidatedParams) -> CliResult<(Grid, DensityTrajectory)> {
    let n = &spec.numerics;
    let grid = Grid::new(n.b_max, n.n_cells)?;
    let tr = run_pde_on(grid, spec, params)?;
    Ok((grid, tr))
}

fn run_pde_on(
    grid: Grid,
    spec: &RunSpec,
    params: &ValidatedParams,
) -> CliResult<DensityTrajectory> {
    let n = &spec.numerics;
    let solver = PdeSolver::with_scheme(grid, params, n.jump_scheme)?;
    let s0 = solver.initial_state(&spec.initial)?;
    Ok(solver.run(s0, &n.output_times, n.dt)?)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LedgerRow {
    pub t: f64,
    pub total_mass: f64,
    pub outflow: f64,
    pub births: f64,
    pub deaths: f64,
    pub ledger_error: f64,
    pub outflow_fraction: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DoublingRow {
    pub t: f64,
    /// Largest relative change of `E_k / E_0` when `b_max` doubles.
    pub max_moment_change: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PdeReport {
    pub grid: Grid,
    pub dt: f64,
    pub jump_scheme: JumpScheme,
    pub snapshots: Vec<LedgerRow>,
    pub max_ledger_error: f64,
    pub final_outflow_fraction: f64,
    /// Set when outflow exceeds the warning level: `b_max` is likely too short.
    pub outflow_warning: bool,
    pub doubling: Option<Vec<DoublingRow>>,
}

fn write_pde_outputs(
    spec: &RunSpec,
    params: &ValidatedParams,
    grid: &Grid,
    tr: &DensityTrajectory,
    dir: &mut OutputDir,
) -> CliResult<PdeReport> {
    let k_max = spec.numerics.k_max;
    if spec.output.density {
        let snaps: Vec<_> = tr.snapshots.iter().map(|s| s.snapshot(grid)).collect();
        dir.write("density.csv", |w| formats::write_density(w, &snaps))?;
    }
    let moments: Vec<_> = tr
        .snapshots
        .iter()
        .map(|s| density_moments(s, grid, k_max))
        .collect();
    dir.write("pde_moments.csv", |w| formats::write_moments(w, &moments))?;
    let rows: Vec<LedgerRow> = tr
        .snapshots
        .iter()
        .map(|s| {
            let reference = s.initial_mass + s.births;
            LedgerRow {
                t: s.t,
                total_mass: s.total_mass(),
                outflow: s.outflow,
                births: s.births,
                deaths: s.deaths,
                ledger_error: s.ledger_error(),
                outflow_fraction: if reference > 0.0 {
                    s.outflow / reference
                } else {
                    0.0
                },
            }
        })
        .collect();
    let final_outflow_fraction = rows.last().map_or(0.0, |r| r.outflow_fraction);
    let doubling = if spec.numerics.doubling_check {
        let wide = Grid::new(2.0 * grid.b_max, 2 * grid.n_cells)?;
        let tr2 = run_pde_on(wide, spec, params)?;
        Some(
            tr.snapshots
                .iter()
                .zip(&tr2.snapshots)
                .map(|(a, b)| {
                    let ma = density_moments(a, grid, k_max);
                    let mb = density_moments(b, &wide, k_max);
                    let change = (1..=k_max)
                        .map(|k| (ma.normalized(k) / mb.normalized(k) - 1.0).abs())
                        .fold(0.0, f64::max);
                    DoublingRow {
                        t: a.t,
                        max_moment_change: change,
                    }
                })
                .collect(),
        )
    } else {
        None
    };
    let report = PdeReport {
        grid: *grid,
        dt: spec.numerics.dt,
        jump_scheme: spec.numerics.jump_scheme,
        max_ledger_error: tr.max_ledger_error(),
        outflow_warning: final_outflow_fraction > OUTFLOW_WARN,
        final_outflow_fraction,
        snapshots: rows,
        doubling,
    };
    if report.outflow_warning {
        log::warn!(
            "outflow fraction {:.3e} exceeds {OUTFLOW_WARN:e}; consider a larger b_max",
            final_outflow_fraction
        );
    }
    dir.write_json("mass_ledger.json", &report)?;
    Ok(report)
}

// ---------------------------------------------------------------- ibm

/// Ensemble output, indexed `[time][replicate]`.
#[derive(Debug, Clone)]
pub struct IbmRun {
    pub times: Vec<f64>,
    /// Histograms merged over replicates.
    pub histograms: Vec<Histogram>,
    pub moments: Vec<Vec<MomentVector>>,
    pub sizes: Vec<Vec<usize>>,
    pub max_ages: Vec<Vec<f64>>,
    pub events: Vec<EventCounts>,
}

struct Observation {
    moments: MomentVector,
    histogram: Histogram,
    size: usize,
    max_age: f64,
    events: EventCounts,
}

pub fn simulate_ibm(
    spec: &RunSpec,
    params: &ValidatedParams,
    bin_widths: &[f64],
) -> CliResult<IbmRun> {
    let n = &spec.numerics;
    let ensemble = Ensemble {
        n_individuals: n.n_individuals,
        replicates: n.replicates,
        seed: n.seed,
    };
    let times = n.output_times.clone();
    let observed = run_ensemble(&ensemble, &spec.initial, params, &times, |pop| {
        let i = times.iter().position(|&t| t == pop.time()).unwrap_or(0);
        Ok::<_, biolage_core::Error>(Observation {
            moments: sample_moments(pop, n.k_max),
            histogram: histogram(pop, bin_widths[i], n.b_max)?,
            size: pop.len(),
            max_age: pop.max_age().unwrap_or(0.0),
            events: pop.events(),
        })
    })?;
    let histograms = bin_widths
        .iter()
        .take(times.len())
        .map(|&w| Histogram::empty(w, n.b_max))
        .collect::<Result<Vec<_>, _>>()?;
    let mut run = IbmRun {
        times: times.clone(),
        histograms,
        moments: vec![Vec::new(); times.len()],
        sizes: vec![Vec::new(); times.len()],
        max_ages: vec![Vec::new(); times.len()],
        events: Vec::new(),
    };
    for replicate in observed {
        let mut last = EventCounts::default();
        for (ti, obs) in replicate.into_iter().enumerate() {
            let obs = obs?;
            run.histograms[ti].merge(&obs.histogram)?;
            run.moments[ti].push(obs.moments);
            run.sizes[ti].push(obs.size);
            run.max_ages[ti].push(obs.max_age);
            last = obs.events;
        }
        run.events.push(last);
    }
    Ok(run)
}

/// Replicate mean of raw moments, averaged in log space so large orders
/// cannot overflow.
pub fn mean_moments(samples: &[MomentVector]) -> MomentVector {
    let Some(first) = samples.first() else {
        return MomentVector::zeros(0.0, 0);
    };
    let ln_r = (samples.len() as f64).ln();
    let ln: Vec<f64> = (0..first.len())
        .map(|k| {
            let xs: Vec<f64> = samples
                .iter()
                .map(|s| {
                    if s.get(k) == 0.0 {
                        f64::NEG_INFINITY
                    } else {
                        s.ln_abs(k)
                    }
                })
                .collect();
            let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if m == f64::NEG_INFINITY {
                m
            } else {
                m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln() - ln_r
            }
        })
        .collect();
    MomentVector::from_ln(first.t, &ln)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IbmTimeSummary {
    pub t: f64,
    pub mean_population: f64,
    pub se_population: f64,
    pub normalized_moments: ReplicateSummary,
    pub max_age: f64,
    pub histogram_file: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IbmSummary {
    pub replicates: usize,
    pub n_individuals: usize,
    pub seed: u64,
    pub times: Vec<IbmTimeSummary>,
    pub events: Vec<EventCounts>,
}

fn mean_se(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = xs.clone().count() as f64;
    let mean = xs.clone().sum::<f64>() / n;
    if n < 2.0 {
        return (mean, 0.0);
    }
    let var = xs.map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn write_ibm_outputs(spec: &RunSpec, run: &IbmRun, dir: &mut OutputDir) -> CliResult<IbmSummary> {
    let means: Vec<_> = run.moments.iter().map(|m| mean_moments(m)).collect();
    dir.write("ibm_moments.csv", |w| formats::write_moments(w, &means))?;
    let mut times = Vec::with_capacity(run.times.len());
    for (i, &t) in run.times.iter().enumerate() {
        let histogram_file = if spec.output.histograms {
            let name = format!("histogram_{i:03}.csv");
            dir.write(&name, |w| formats::write_histogram(w, &run.histograms[i]))?;
            Some(name)
        } else {
            None
        };
        let (mean_population, se_population) = mean_se(run.sizes[i].iter().map(|&n| n as f64));
        times.push(IbmTimeSummary {
            t,
            mean_population,
            se_population,
            normalized_moments: ReplicateSummary::from_moments(&run.moments[i])?,
            max_age: run.max_ages[i].iter().copied().fold(0.0, f64::max),
            histogram_file,
        });
    }
    let summary = IbmSummary {
        replicates: spec.numerics.replicates,
        n_individuals: spec.numerics.n_individuals,
        seed: spec.numerics.seed,
        times,
        events: run.events.clone(),
    };
    dir.write_json("ibm_summary.json", &summary)?;
    Ok(summary)
}

// ---------------------------------------------------------------- chi

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiSummary {
    pub case: String,
    pub x_max: Option<f64>,
    pub criterion: f64,
    pub k0: Option<u32>,
    pub k0_status: K0,
}

fn analyze_chi(
    spec: &RunSpec,
    params: &ValidatedParams,
    dir: &mut OutputDir,
) -> CliResult<ChiSummary> {
    let k_max = spec.numerics.k_max.max(1) as u32;
    let chi = chi_table(params, k_max)?;
    dir.write("chi.csv", |w| formats::write_chi(w, &chi))?;
    let (case, x) = match x_max(params)? {
        ChiShape::Unimodal { x_max } => ("(i)", Some(x_max)),
        ChiShape::Decreasing => ("(ii)", None),
        ChiShape::Increasing => ("rejuvenation-only", None),
    };
    let k0_status = find_k0(params, k_max)?;
    let summary = ChiSummary {
        case: case.to_owned(),
        x_max: x,
        criterion: shape_criterion(params)?,
        k0: match k0_status {
            K0::Index(k) => Some(k),
            K0::NonePositive => Some(0),
            K0::AllPositive => None,
        },
        k0_status,
    };
    dir.write_json("chi_summary.json", &summary)?;
    Ok(summary)
}

// ---------------------------------------------------------------- compare

/// Histogram bin width at each output time: at least `bin_width`, about a
/// quarter of the predicted spread, and a whole number of PDE cells.
pub fn comparison_bin_widths(spec: &RunSpec, predicted: &[MomentVector]) -> Vec<f64> {
    let dx = spec.cell_width();
    predicted
        .iter()
        .map(|m| {
            let w = suggested_bin_width(m, spec.numerics.bin_width);
            (w / dx).ceil() * dx
        })
        .collect()
}

fn compare(
    spec: &RunSpec,
    params: &ValidatedParams,
    dir: &mut OutputDir,
) -> CliResult<ComparisonReport> {
    let n = &spec.numerics;
    let mut report = ComparisonReport::new("compare");
    report.note("seed", n.seed);
    report.note("n_individuals", n.n_individuals);
    report.note("replicates", n.replicates);
    report.note("b_max", n.b_max);
    report.note("n_cells", n.n_cells);
    report.note("dt", n.dt);
    report.note("ode_dt", n.ode_dt);

    let (grid, pde) = solve_pde(spec, params)?;
    write_pde_outputs(spec, params, &grid, &pde, dir)?;
    let pde_moments: Vec<_> = pde
        .snapshots
        .iter()
        .map(|s| density_moments(s, &grid, n.k_max))
        .collect();

    // The moment cascade exists only for multiplicative jumps.
    let ode = if params.linear_factors().is_ok() {
        let tr = solve_moments(spec, params)?;
        write_moment_outputs(spec, params, &tr, dir)?;
        Some(tr)
    } else {
        report.note("ode", "skipped: nonlinear jump family");
        None
    };
    let predicted: Vec<MomentVector> = n
        .output_times
        .iter()
        .zip(&pde_moments)
        .map(|(&t, pm)| {
            ode.as_ref()
                .and_then(|tr| tr.at(t))
                .cloned()
                .unwrap_or_else(|| pm.clone())
        })
        .collect();
    let widths = comparison_bin_widths(spec, &predicted);
    report.note(
        "bin_widths",
        widths
            .iter()
            .map(f64::to_string)
            .collect::<Vec<_>>()
            .join(" "),
    );
    let ibm = simulate_ibm(spec, params, &widths)?;
    write_ibm_outputs(spec, &ibm, dir)?;

    let rejuvenation_only = params.tau_minus() == 0.0 && params.demography().is_none();
    for (i, &t) in n.output_times.iter().enumerate() {
        let state = &pde.snapshots[i];
        report.check(
            format!("pde ledger error t={t}"),
            state.ledger_error(),
            LEDGER_TOL,
        );
        if t > 0.0 {
            report.check(
                format!("L1(ibm, pde) t={t}"),
                l1_distance(&ibm.histograms[i], state, &grid)?,
                L1_TOL,
            );
        }
        let reps = ReplicateSummary::from_moments(&ibm.moments[i])?;
        let ibm_m = reps.as_moments();
        let mc = ToleranceProfile::monte_carlo(DISCRETISATION_TOL, N_SIGMA, reps.standard_error);
        report.extend(moment_agreement(
            "ibm-pde",
            &ibm_m,
            &pde_moments[i],
            n.k_max,
            &mc,
        ));
        if let Some(om) = ode.as_ref().and_then(|tr| tr.at(t)) {
            report.extend(moment_agreement("ibm-ode", &ibm_m, om, n.k_max, &mc));
            report.extend(moment_agreement(
                "pde-ode",
                &pde_moments[i],
                om,
                n.k_max,
                &ToleranceProfile::deterministic(DISCRETISATION_TOL),
            ));
        }
        if rejuvenation_only {
            let b_star = spec.initial.support_bound();
            let pc = support_check_density(state, &grid, b_star);
            report.check(
                format!("pde support - bound t={t}"),
                pc.max_age - pc.bound,
                0.0,
            );
            let bound = b_star + t;
            let max_age = ibm.max_ages[i].iter().copied().fold(0.0, f64::max);
            report.check(format!("ibm support - bound t={t}"), max_age - bound, 0.0);
        }
    }
    dir.write_json("comparison.json", &report)?;
    Ok(report)
}
