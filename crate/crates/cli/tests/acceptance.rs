//! Acceptance suite: one test per criterion, each printing a single
//! `[PASS]` / `[FAIL]` line before asserting.
//!
//! Run with `cargo test -p biolage-cli --test acceptance -- --nocapture`.

use std::path::Path;

use biolage_cli::{execute, parse_config, Format, Scenario};
use biolage_core::analysis::{
    l1_distance, moment_agreement, support_check_density, support_check_population,
    ReplicateSummary, ToleranceProfile,
};
use biolage_core::ibm::{histogram, run_ensemble, sample_moments, Ensemble};
use biolage_core::model::{chi_continuous, gamma_moment, x_max};
use biolage_core::moments::point_moments;
use biolage_core::ode::{
    equilibrium_moments, find_k0, integrate_moments, moments_of_density, recursion_residual,
};
use biolage_core::pde::{density_moments, DensityState, Grid, PdeSolver};
use biolage_core::{
    validate, ChiShape, DemographyParams, DensityProfile, InitialCondition, ModelParams,
    MomentVector, ValidatedParams, K0,
};

fn verdict(n: u32, what: &str, ok: bool, detail: &str) {
    println!(
        "[{}] criterion {n}: {what} ({detail})",
        if ok { "PASS" } else { "FAIL" }
    );
}

/// `tau = 1`, rejuvenation probability `p`, `delta_plus = delta_minus = 0.1`.
fn cohort_params(p: f64) -> ValidatedParams {
    validate(ModelParams::from_deltas(p, 1.0 - p, 0.1, 0.1), None).unwrap()
}

fn reference_params() -> ValidatedParams {
    validate(ModelParams::linear(0.1, 0.1, 1.1, 0.99), None).unwrap()
}

/// Independent evaluation of `tau_plus (1 - g_plus^-x) + tau_minus (1 - g_minus^-x)`.
fn chi_oracle(x: f64) -> f64 {
    0.1 * (1.0 - 1.1f64.powf(-x)) + 0.1 * (1.0 - 0.99f64.powf(-x))
}

/// Closed-form mean of the symmetric model started from a cohort at `m0`.
fn symmetric_mean(m0: f64, t: f64) -> f64 {
    let c = 1.0 / 99.0;
    (m0 + 1.0 / c) * (c * t).exp() - 1.0 / c
}

fn cohort_moments(k_max: usize) -> MomentVector {
    MomentVector::from_linear(0.0, (0..=k_max).map(|k| 20f64.powi(k as i32)).collect())
}

#[test]
fn criterion_1_mass_conservation() {
    let params = cohort_params(0.5);
    let times = [1.0, 10.0, 20.0, 30.0];
    let ic = InitialCondition::dirac(20.0);

    let ens = Ensemble {
        n_individuals: 100_000,
        replicates: 4,
        seed: 11,
    };
    let sizes = run_ensemble(&ens, &ic, &params, &times, |p| p.len()).unwrap();
    let ibm_ok = sizes.iter().flatten().all(|&n| n == 100_000);

    let grid = Grid::new(1024.0, 16384).unwrap();
    let solver = PdeSolver::new(grid, &params).unwrap();
    let mut state = solver.initial_state(&ic).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..(30 * 16) {
        solver.step(&mut state, grid.dx()).unwrap();
        worst = worst.max(state.ledger_error());
    }
    let pde_ok = worst <= 1e-12;

    let init = cohort_moments(4);
    let tr = integrate_moments(&params, &init, 30.0, 1e-3, &times).unwrap();
    let ode_ok = tr
        .points
        .iter()
        .all(|m| m.values[0].to_bits() == 1f64.to_bits());

    let ok = ibm_ok && pde_ok && ode_ok;
    verdict(
        1,
        "mass conservation",
        ok,
        &format!(
            "IBM constant N {ibm_ok}, PDE worst ledger {worst:.2e}, ODE E_0 constant {ode_ok}"
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_2_chi_analysis() {
    let params = reference_params();
    // Root scan with the independent formula.
    let scan = (1..=200)
        .take_while(|&k| chi_oracle(f64::from(k)) > 0.0)
        .count() as u32;
    let k0 = find_k0(&params, 100).unwrap();
    let k0_ok = k0 == K0::Index(scan) && (60..=80).contains(&scan);

    let ChiShape::Unimodal { x_max: xm } = x_max(&params).unwrap() else {
        panic!("reference parameters must be case (i)");
    };
    let h = 1e-4;
    let slope = (chi_continuous(&params, xm + h).unwrap()
        - chi_continuous(&params, xm - h).unwrap())
        / (2.0 * h);
    let stationary_ok = slope.abs() <= 1e-8;

    let cases = [
        (0.1, 0.1, 1.1, 0.99),
        (0.5, 0.5, 1.1, 0.9),
        (0.01, 1.0, 1.01, 0.5),
        (1.0, 0.2, 1.3, 0.8),
        (0.3, 0.7, 1.05, 0.97),
    ];
    let case_ok = cases.iter().all(|&(tp, tm, gp, gm)| {
        let p = validate(ModelParams::linear(tp, tm, gp, gm), None).unwrap();
        let criterion: f64 = tp * f64::ln(gp) + tm * f64::ln(gm);
        let shape = x_max(&p).unwrap();
        match shape {
            ChiShape::Unimodal { .. } => criterion > 0.0,
            ChiShape::Decreasing => criterion <= 0.0,
            ChiShape::Increasing => false,
        }
    });
    let ok = k0_ok && stationary_ok && case_ok;
    verdict(
        2,
        "chi analysis",
        ok,
        &format!("k0 {k0:?} (scan {scan}), chi'(x_max = {xm:.6}) = {slope:.2e}, cases {case_ok}"),
    );
    assert!(ok);
}

#[test]
fn criterion_3_symmetric_mean_law() {
    let params = cohort_params(0.5);
    let times = [1.0, 10.0, 30.0];
    let ens = Ensemble {
        n_individuals: 100_000,
        replicates: 32,
        seed: 3,
    };
    let means = run_ensemble(&ens, &InitialCondition::dirac(20.0), &params, &times, |p| {
        p.mean_age().unwrap()
    })
    .unwrap();
    let mut ok = (symmetric_mean(20.0, 30.0) - 62.13).abs() < 0.01;
    let mut detail = Vec::new();
    for (i, &t) in times.iter().enumerate() {
        let xs: Vec<f64> = means.iter().map(|r| r[i]).collect();
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let se = (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt();
        let target = symmetric_mean(20.0, t);
        let z = (m - target) / se;
        ok &= z.abs() <= 3.0;
        detail.push(format!("t={t}: {m:.4} vs {target:.4}, z={z:.2}"));
    }
    verdict(3, "symmetric mean law", ok, &detail.join("; "));
    assert!(ok);
}

#[test]
fn criterion_4_moment_convergence_and_divergence() {
    let params = reference_params();
    let profile = DensityProfile::standard_parabolic();
    let k_max = 100;
    let init = moments_of_density(|b| profile.eval(b), 10.0, k_max).unwrap();
    let t_end = 1.0e4;
    let tr = integrate_moments(&params, &init, t_end, 1e-2, &[]).unwrap();
    let last = tr.last();

    // Equilibrium products with the independent chi formula.
    let e0 = init.values[0];
    let mut worst: f64 = 0.0;
    let mut prod = e0;
    for k in 1..=10 {
        prod *= k as f64 / chi_oracle(k as f64);
        worst = worst.max((last.get(k) - prod).abs() / prod);
    }
    let lib = equilibrium_moments(&params, e0, 10).unwrap();
    let products_agree = (1..=10).all(|k| {
        let mut p = e0;
        for j in 1..=k {
            p *= j as f64 / chi_oracle(j as f64);
        }
        (lib.get(k) - p).abs() <= 1e-12 * p
    });
    let converged = worst <= 1e-4;

    let K0::Index(k0) = find_k0(&params, k_max as u32).unwrap() else {
        panic!("k0 must exist");
    };
    let ln_1e10 = 10.0 * std::f64::consts::LN_10;
    let min_growth = ((k0 as usize + 1)..=k_max)
        .map(|k| last.ln_abs(k) - init.ln_abs(k))
        .fold(f64::INFINITY, f64::min);
    let diverged = min_growth > ln_1e10;

    let ok = converged && products_agree && diverged;
    verdict(
        4,
        "moment convergence",
        ok,
        &format!(
            "max rel error k<=10 at t={t_end}: {worst:.2e}; min log10 growth for k>{k0}: {:.1}",
            min_growth / std::f64::consts::LN_10
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_5_rejuvenation_only_support() {
    let params = validate(ModelParams::linear(1.0, 0.0, 1.1, 1.0), None).unwrap();
    let ic = InitialCondition::Density(DensityProfile::standard_parabolic());
    let ens = Ensemble {
        n_individuals: 100_000,
        replicates: 4,
        seed: 5,
    };
    let reports = run_ensemble(&ens, &ic, &params, &[30.0], |p| {
        support_check_population(p, 10.0)
    })
    .unwrap();
    let ibm_max = reports.iter().map(|r| r[0].max_age).fold(0.0, f64::max);
    let ibm_ok = reports.iter().all(|r| r[0].within) && ibm_max <= 40.0;

    let grid = Grid::new(64.0, 1024).unwrap();
    let solver = PdeSolver::new(grid, &params).unwrap();
    let tr = solver
        .run(solver.initial_state(&ic).unwrap(), &[30.0], grid.dx())
        .unwrap();
    let pc = support_check_density(&tr.snapshots[0], &grid, 10.0);
    let pde_ok = pc.within && pc.max_age <= 40.0 + grid.dx();

    let ok = ibm_ok && pde_ok;
    verdict(
        5,
        "rejuvenation-only support bound",
        ok,
        &format!("IBM max age {ibm_max:.4}, PDE support edge {}", pc.max_age),
    );
    assert!(ok);
}

/// Histogram bin width for the L1 check: a quarter of the predicted standard
/// deviation rounded down to a power of two, at least one year.
fn l1_bin_width(m: &MomentVector) -> f64 {
    biolage_core::analysis::suggested_bin_width(m, 1.0)
}

#[test]
fn criterion_6_triangle_consistency() {
    let times = [1.0, 10.0, 20.0, 30.0];
    let ic = InitialCondition::dirac(20.0);
    let mut ok = true;
    let mut detail = Vec::new();
    // b_max per set is chosen by doubling until the moments stop moving.
    for (p, b_max) in [(0.5, 1024.0), (0.25, 4096.0), (0.75, 256.0)] {
        let params = cohort_params(p);
        let grid = Grid::new(b_max, (b_max * 16.0) as usize).unwrap();
        let solver = PdeSolver::new(grid, &params).unwrap();
        let pde = solver
            .run(solver.initial_state(&ic).unwrap(), &times, grid.dx())
            .unwrap();
        let ode = integrate_moments(&params, &cohort_moments(4), 30.0, 1e-3, &times).unwrap();
        let widths: Vec<f64> = times
            .iter()
            .map(|&t| l1_bin_width(ode.at(t).unwrap()))
            .collect();
        let ens = Ensemble {
            n_individuals: 100_000,
            replicates: 32,
            seed: 6,
        };
        let obs = run_ensemble(&ens, &ic, &params, &times, |pop| {
            let i = times
                .iter()
                .position(|&t| (t - pop.time()).abs() < 1e-9)
                .unwrap();
            (
                sample_moments(pop, 4),
                histogram(pop, widths[i], b_max).unwrap(),
            )
        })
        .unwrap();
        let mut worst_l1: f64 = 0.0;
        for (i, &t) in times.iter().enumerate() {
            let state = &pde.snapshots[i];
            let l1 = l1_distance(&obs[0][i].1, state, &grid).unwrap();
            worst_l1 = worst_l1.max(l1);
            ok &= l1 <= 0.05;

            let samples: Vec<_> = obs.iter().map(|r| r[i].0.clone()).collect();
            let reps = ReplicateSummary::from_moments(&samples).unwrap();
            let ibm = reps.as_moments();
            let pm = density_moments(state, &grid, 4);
            let om = ode.at(t).unwrap();
            let mc = ToleranceProfile::monte_carlo(0.01, 3.0, reps.standard_error.clone());
            let det = ToleranceProfile::deterministic(0.01);
            for r in [
                moment_agreement("ibm-ode", &ibm, om, 4, &mc),
                moment_agreement("ibm-pde", &ibm, &pm, 4, &mc),
                moment_agreement("pde-ode", &pm, om, 4, &det),
            ] {
                if let Some(f) = r.first_failure() {
                    detail.push(format!(
                        "p={p} {} = {:.3e} > {:.3e}",
                        f.name, f.value, f.tolerance
                    ));
                    ok = false;
                }
            }

            let drift_free = 20.0 + t;
            let mean = reps.mean[1];
            let se = reps.standard_error[1];
            let shape_ok = if p == 0.5 {
                mean >= drift_free - 3.0 * se
                    && (mean - symmetric_mean(20.0, t)).abs() <= 3.0 * se + 0.01 * mean
            } else if p < 0.5 {
                mean > drift_free
            } else {
                mean < drift_free
            };
            if !shape_ok {
                detail.push(format!(
                    "p={p} t={t}: mean {mean:.3} against 20+t = {drift_free}"
                ));
                ok = false;
            }
        }
        detail.push(format!("p={p}: worst L1 {worst_l1:.4}"));
    }
    verdict(6, "triangle consistency", ok, &detail.join("; "));
    assert!(ok);
}

#[test]
fn criterion_7_demography() {
    let d = DemographyParams {
        mu: 0.1,
        beta: 1.0,
        alpha: 3,
        gamma_rate: 0.5,
    };
    let params = validate(ModelParams::linear(0.0, 0.0, 1.1, 0.9), Some(d)).unwrap();

    let grid = Grid::new(256.0, 4096).unwrap();
    let solver = PdeSolver::new(grid, &params).unwrap();
    let pde = solver
        .run(DensityState::zeros(&grid), &[100.0], grid.dx())
        .unwrap();
    let pde_mass = pde.snapshots[0].total_mass();

    let ode = integrate_moments(&params, &MomentVector::zeros(0.0, 2), 100.0, 1e-3, &[]).unwrap();
    let ode_mass = ode.last().get(0);
    let mass_ok = (pde_mass - 10.0).abs() <= 0.01 && (ode_mass - 10.0).abs() <= 0.01;

    // Composite Simpson on [0, 400]; the integrand tail beyond is below 1e-70.
    let simpson = |k: i32| {
        let (n, hi) = (80_000, 400.0);
        let h = hi / n as f64;
        let f = |b: f64| b.powi(k) * b * b * (-0.5 * b).exp() * 0.125 / 2.0;
        let mut s = f(0.0) + f(hi);
        for i in 1..n {
            s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    };
    let gamma_worst = (0..=10)
        .map(|k| {
            let q = simpson(k);
            (gamma_moment(&d, k as u32) - q).abs() / q
        })
        .fold(0.0, f64::max);
    let gamma_ok = gamma_worst <= 1e-8;

    let times = [10.0, 50.0, 100.0];
    let n0 = 5;
    let ens = Ensemble {
        n_individuals: n0,
        replicates: 4000,
        seed: 7,
    };
    let ic = InitialCondition::Density(DensityProfile::Uniform {
        lo: 0.0,
        hi: 10.0,
        density: 0.1,
    });
    let sizes = run_ensemble(&ens, &ic, &params, &times, |p| p.len() as f64).unwrap();
    let mut ibm_ok = true;
    let mut zs = Vec::new();
    for (i, &t) in times.iter().enumerate() {
        let xs: Vec<f64> = sizes.iter().map(|r| r[i]).collect();
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let se = (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt();
        let exact = 10.0 + (n0 as f64 - 10.0) * (-0.1 * t).exp();
        let z = (m - exact) / se;
        ibm_ok &= z.abs() <= 3.0;
        zs.push(format!("{z:.2}"));
    }
    let ok = mass_ok && gamma_ok && ibm_ok;
    verdict(
        7,
        "demography",
        ok,
        &format!(
            "PDE mass {pde_mass:.5}, ODE mass {ode_mass:.5}, gamma moment error {gamma_worst:.1e}, IBM z [{}]",
            zs.join(", ")
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_8_nonexistence_diagnostic() {
    let params = reference_params();
    let K0::Index(k0) = find_k0(&params, 100).unwrap() else {
        panic!("k0 must exist");
    };
    let profiles = [
        DensityProfile::standard_parabolic(),
        DensityProfile::Uniform {
            lo: 2.0,
            hi: 8.0,
            density: 0.5,
        },
        DensityProfile::TruncatedGaussian {
            mean: 5.0,
            sd: 1.5,
            lo: 0.0,
            hi: 10.0,
            amplitude: 1.0,
        },
    ];
    let mut ok = true;
    let mut smallest = f64::INFINITY;
    for p in &profiles {
        let e = moments_of_density(|b| p.eval(b), p.support().1, 100).unwrap();
        let r = recursion_residual(&e, &params).unwrap();
        for (k, &rk) in r.iter().enumerate().skip(k0 as usize + 1) {
            // Independent sign: k E_{k-1} - chi_k E_k with chi_k < 0.
            let oracle = k as f64 * e.get(k - 1) - chi_oracle(k as f64) * e.get(k);
            ok &= rk > 0.0 && oracle > 0.0;
            smallest = smallest.min(rk / e.get(k));
        }
    }
    // Also a positive point-mass vector.
    let e = point_moments(0.0, [(3.0, 1.0), (7.0, 2.0)].into_iter(), 100);
    let r = recursion_residual(&e, &params).unwrap();
    ok &= r.iter().skip(k0 as usize + 1).all(|&x| x > 0.0);
    verdict(
        8,
        "non-existence diagnostic",
        ok,
        &format!("k0 = {k0}; min r_k / E_k over k > k0: {smallest:.3e}"),
    );
    assert!(ok);
}

fn config(scenario: &str, extra: &str) -> String {
    format!(
        r#"
        scenario = "{scenario}"
        [model]
        tau = 1.0
        p = 0.5
        delta_plus = 0.1
        delta_minus = 0.1
        [initial]
        kind = "dirac"
        age = 20.0
        [numerics]
        n_individuals = 2000
        replicates = 4
        seed = 9
        b_max = 128.0
        t_end = 5.0
        output_times = [1.0, 5.0]
        {extra}
        "#
    )
}

fn run_twice(text: &str, root: &Path, tag: &str) -> bool {
    let spec = parse_config(text, Format::Toml).unwrap();
    let a = execute(&spec, &root.join(format!("{tag}-a"))).unwrap();
    let b = execute(&spec, &root.join(format!("{tag}-b"))).unwrap();
    !a.manifest.files.is_empty() && a.manifest == b.manifest
}

#[test]
fn criterion_9_determinism() {
    let tmp = tempfile::tempdir().unwrap();
    let mut results = Vec::new();
    for scenario in [
        Scenario::Ibm,
        Scenario::Pde,
        Scenario::Moments,
        Scenario::Compare,
        Scenario::AnalyzeChi,
    ] {
        let text = config(scenario.name(), "");
        results.push((
            scenario.name(),
            run_twice(&text, tmp.path(), scenario.name()),
        ));
    }
    // Thread count must not matter either.
    let spec = parse_config(&config("ibm", ""), Format::Toml).unwrap();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(3)
        .build()
        .unwrap();
    let threaded = pool.install(|| execute(&spec, &tmp.path().join("ibm-threads")).unwrap());
    let serial = execute(&spec, &tmp.path().join("ibm-serial")).unwrap();
    results.push((
        "ibm across thread counts",
        threaded.manifest == serial.manifest,
    ));

    let ok = results.iter().all(|(_, r)| *r);
    let detail = results
        .iter()
        .map(|(n, r)| format!("{n}: {}", if *r { "identical" } else { "DIFFERENT" }))
        .collect::<Vec<_>>()
        .join(", ");
    verdict(9, "determinism", ok, &detail);
    assert!(ok);
}
