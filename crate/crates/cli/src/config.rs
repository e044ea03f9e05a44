//! Run configuration: TOML (or JSON) documents mapped to a [`RunSpec`]
//! with every default filled in.

use std::path::{Path, PathBuf};

use biolage_core::model::split_rate;
use biolage_core::pde::JumpScheme;
use biolage_core::{
    validate, DemographyParams, DensityProfile, InitialCondition, JumpFamily, ModelParams,
    ValidatedParams,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Default PDE cell width: a power of two so cell edges are exact.
pub const DEFAULT_CELL_WIDTH: f64 = 0.0625;
pub const DEFAULT_ODE_DT: f64 = 1e-3;
pub const DEFAULT_K: usize = 4;
pub const DEFAULT_BIN_WIDTH: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    Ibm,
    Pde,
    Moments,
    Compare,
    AnalyzeChi,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Ibm => "ibm",
            Scenario::Pde => "pde",
            Scenario::Moments => "moments",
            Scenario::Compare => "compare",
            Scenario::AnalyzeChi => "analyze-chi",
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    scenario: Option<Scenario>,
    model: RawModel,
    demography: Option<DemographyParams>,
    initial: Option<RawInitial>,
    #[serde(default)]
    numerics: RawNumerics,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    tau: Option<f64>,
    p: Option<f64>,
    tau_plus: Option<f64>,
    tau_minus: Option<f64>,
    delta_plus: Option<f64>,
    delta_minus: Option<f64>,
    g_plus: Option<f64>,
    g_minus: Option<f64>,
    rejuvenation: Option<JumpFamily>,
    aging: Option<JumpFamily>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawInitial {
    Dirac {
        age: f64,
        mass: Option<f64>,
    },
    Parabolic {
        amplitude: Option<f64>,
        width: Option<f64>,
    },
    Uniform {
        lo: f64,
        hi: f64,
        density: Option<f64>,
    },
    TruncatedGaussian {
        mean: f64,
        sd: f64,
        lo: f64,
        hi: f64,
        amplitude: Option<f64>,
    },
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNumerics {
    n_individuals: Option<usize>,
    replicates: Option<usize>,
    seed: Option<u64>,
    b_max: Option<f64>,
    n_cells: Option<usize>,
    cell_width: Option<f64>,
    dt: Option<f64>,
    ode_dt: Option<f64>,
    #[serde(rename = "K", alias = "k_max")]
    k_max: Option<usize>,
    t_end: Option<f64>,
    output_times: Option<Vec<f64>>,
    bin_width: Option<f64>,
    jump_scheme: Option<JumpScheme>,
    doubling_check: Option<bool>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<PathBuf>,
    density: Option<bool>,
    histograms: Option<bool>,
}

/// Fully resolved numerical settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Numerics {
    pub n_individuals: usize,
    pub replicates: usize,
    pub seed: u64,
    pub b_max: f64,
    pub n_cells: usize,
    /// PDE step; the advection CFL needs `dt <= b_max / n_cells`.
    pub dt: f64,
    /// Moment-cascade step.
    pub ode_dt: f64,
    #[serde(rename = "K")]
    pub k_max: usize,
    pub t_end: f64,
    pub output_times: Vec<f64>,
    pub bin_width: f64,
    pub jump_scheme: JumpScheme,
    /// Re-run the PDE on `[0, 2 b_max]` and report the moment differences.
    pub doubling_check: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputSpec {
    pub dir: Option<PathBuf>,
    pub density: bool,
    pub histograms: bool,
}

/// A parsed, validated and default-complete run description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub scenario: Scenario,
    pub model: ModelParams,
    pub demography: Option<DemographyParams>,
    pub initial: InitialCondition,
    pub numerics: Numerics,
    pub output: OutputSpec,
}

impl RunSpec {
    pub fn params(&self) -> CliResult<ValidatedParams> {
        Ok(validate(self.model, self.demography)?)
    }

    pub fn cell_width(&self) -> f64 {
        self.numerics.b_max / self.numerics.n_cells as f64
    }
}

/// Input syntax of a configuration document.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Toml,
    Json,
}

impl Format {
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Format::Json,
            _ => Format::Toml,
        }
    }
}

pub fn parse_config(text: &str, format: Format) -> CliResult<RunSpec> {
    let raw: RawConfig = match format {
        Format::Toml => toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?,
        Format::Json => serde_json::from_str(text).map_err(|e| {
            CliError::Parse(format!("line {} column {}: {e}", e.line(), e.column()))
        })?,
    };
    resolve(raw)
}

pub fn load_config(path: &Path) -> CliResult<RunSpec> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Parse(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text, Format::from_path(path))
}

fn parse_err(msg: impl Into<String>) -> CliError {
    CliError::Parse(msg.into())
}

fn resolve(raw: RawConfig) -> CliResult<RunSpec> {
    let model = resolve_model(&raw.model)?;
    let initial = resolve_initial(raw.initial)?;
    let numerics = resolve_numerics(&raw.numerics, &initial)?;
    let spec = RunSpec {
        scenario: raw.scenario.unwrap_or(Scenario::Compare),
        model,
        demography: raw.demography,
        initial,
        numerics,
        output: OutputSpec {
            dir: raw.output.dir,
            density: raw.output.density.unwrap_or(true),
            histograms: raw.output.histograms.unwrap_or(true),
        },
    };
    spec.params()?;
    initial.check()?;
    Ok(spec)
}

fn resolve_model(m: &RawModel) -> CliResult<ModelParams> {
    let (tau_plus, tau_minus) = match (m.tau, m.p, m.tau_plus, m.tau_minus) {
        (Some(tau), Some(p), None, None) => split_rate(tau, p)?,
        (None, None, Some(tp), Some(tm)) => (tp, tm),
        _ => {
            return Err(parse_err(
                "model: parameterization rule violated; give exactly one of \
                 (tau, p) or (tau_plus, tau_minus)",
            ))
        }
    };
    let rejuvenation = resolve_family(
        "rejuvenation",
        m.delta_plus.map(|d| 1.0 + d),
        m.g_plus,
        m.rejuvenation,
        tau_plus,
    )?;
    let aging = resolve_family(
        "aging",
        m.delta_minus.map(|d| 1.0 - d),
        m.g_minus,
        m.aging,
        tau_minus,
    )?;
    Ok(ModelParams {
        tau_plus,
        tau_minus,
        rejuvenation,
        aging,
    })
}

fn resolve_family(
    which: &str,
    from_delta: Option<f64>,
    g: Option<f64>,
    family: Option<JumpFamily>,
    rate: f64,
) -> CliResult<JumpFamily> {
    let given = [from_delta.is_some(), g.is_some(), family.is_some()]
        .iter()
        .filter(|x| **x)
        .count();
    if given > 1 {
        return Err(parse_err(format!(
            "model: the {which} jump is given more than once (delta, g and family are exclusive)"
        )));
    }
    match (from_delta.or(g), family) {
        (Some(g), None) => Ok(JumpFamily::Linear { g }),
        (None, Some(f)) => Ok(f),
        _ if rate == 0.0 => Ok(JumpFamily::Linear { g: 1.0 }),
        _ => Err(parse_err(format!(
            "model: the {which} rate is positive but no {which} amplitude is given"
        ))),
    }
}

fn resolve_initial(raw: Option<RawInitial>) -> CliResult<InitialCondition> {
    let raw = raw.ok_or_else(|| parse_err("missing [initial] section"))?;
    Ok(match raw {
        RawInitial::Dirac { age, mass } => InitialCondition::DiracCohort {
            age,
            mass: mass.unwrap_or(1.0),
        },
        RawInitial::Parabolic { amplitude, width } => {
            let DensityProfile::Parabolic {
                amplitude: a0,
                width: w0,
            } = DensityProfile::standard_parabolic()
            else {
                unreachable!()
            };
            InitialCondition::Density(DensityProfile::Parabolic {
                amplitude: amplitude.unwrap_or(a0),
                width: width.unwrap_or(w0),
            })
        }
        RawInitial::Uniform { lo, hi, density } => {
            InitialCondition::Density(DensityProfile::Uniform {
                lo,
                hi,
                density: density.unwrap_or(1.0),
            })
        }
        RawInitial::TruncatedGaussian {
            mean,
            sd,
            lo,
            hi,
            amplitude,
        } => InitialCondition::Density(DensityProfile::TruncatedGaussian {
            mean,
            sd,
            lo,
            hi,
            amplitude: amplitude.unwrap_or(1.0),
        }),
    })
}

/// `10 x` the initial support plus `2 t_end`, rounded up to a whole number of cells.
pub fn default_b_max(initial: &InitialCondition, t_end: f64, cell_width: f64) -> f64 {
    let raw = 10.0 * initial.support_bound().max(1.0) + 2.0 * t_end;
    (raw / cell_width).ceil() * cell_width
}

fn resolve_numerics(n: &RawNumerics, initial: &InitialCondition) -> CliResult<Numerics> {
    let t_end = match (n.t_end, &n.output_times) {
        (Some(t), _) => t,
        (None, Some(ts)) if !ts.is_empty() => ts.iter().copied().fold(f64::MIN, f64::max),
        _ => return Err(parse_err("numerics: t_end or output_times is required")),
    };
    if !(t_end.is_finite() && t_end >= 0.0) {
        return Err(parse_err(format!("numerics.t_end = {t_end} must be >= 0")));
    }
    let output_times = n.output_times.clone().unwrap_or_else(|| vec![t_end]);
    if output_times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(parse_err(
            "numerics.output_times must be strictly increasing",
        ));
    }
    if output_times.iter().any(|&t| !(0.0..=t_end).contains(&t)) {
        return Err(parse_err(
            "numerics.output_times must lie within [0, t_end]",
        ));
    }
    let (b_max, n_cells) = match (n.b_max, n.n_cells, n.cell_width) {
        (_, Some(_), Some(_)) => {
            return Err(parse_err("numerics: give n_cells or cell_width, not both"))
        }
        (Some(b), Some(c), None) => (b, c),
        (b, None, w) => {
            let w = w.unwrap_or(DEFAULT_CELL_WIDTH);
            if !(w > 0.0) {
                return Err(parse_err("numerics.cell_width must be > 0"));
            }
            let b = b.unwrap_or_else(|| default_b_max(initial, t_end, w));
            (b, (b / w).round().max(1.0) as usize)
        }
        (None, Some(_), None) => {
            return Err(parse_err("numerics.n_cells needs numerics.b_max"));
        }
    };
    if !(b_max.is_finite() && b_max > 0.0) {
        return Err(parse_err(format!("numerics.b_max = {b_max} must be > 0")));
    }
    if n_cells < 16 {
        return Err(parse_err(format!(
            "numerics: {n_cells} cells, need at least 16"
        )));
    }
    let numerics = Numerics {
        n_individuals: n.n_individuals.unwrap_or(10_000),
        replicates: n.replicates.unwrap_or(1).max(1),
        seed: n.seed.unwrap_or(0),
        b_max,
        n_cells,
        dt: n.dt.unwrap_or(b_max / n_cells as f64),
        ode_dt: n.ode_dt.unwrap_or(DEFAULT_ODE_DT),
        k_max: n.k_max.unwrap_or(DEFAULT_K),
        t_end,
        output_times,
        bin_width: n.bin_width.unwrap_or(DEFAULT_BIN_WIDTH),
        jump_scheme: n.jump_scheme.unwrap_or_default(),
        doubling_check: n.doubling_check.unwrap_or(false),
    };
    for (name, v) in [
        ("dt", numerics.dt),
        ("ode_dt", numerics.ode_dt),
        ("bin_width", numerics.bin_width),
    ] {
        if !(v.is_finite() && v > 0.0) {
            return Err(parse_err(format!("numerics.{name} = {v} must be > 0")));
        }
    }
    Ok(numerics)
}
