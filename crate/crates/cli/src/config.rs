//! Problem configuration: a TOML file plus matrix files referenced by path.

use std::fmt;
use std::path::{Path, PathBuf};

use blockpert::{ExpRoute, DEFAULT_DYSON_CAP, DEFAULT_MAX_ORDER, DEFAULT_TOL};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Block,
    Rspt,
    Dyson,
    Exact,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Block, Method::Rspt, Method::Dyson, Method::Exact];

    pub fn name(self) -> &'static str {
        match self {
            Method::Block => "block",
            Method::Rspt => "rspt",
            Method::Dyson => "dyson",
            Method::Exact => "exact",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    StateError,
    EnergyError,
    IdentityResidual,
    NormDeviation,
    Slope,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::StateError => "state_error",
            Metric::EnergyError => "energy_error",
            Metric::IdentityResidual => "identity_residual",
            Metric::NormDeviation => "norm_deviation",
            Metric::Slope => "slope",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Problem {
    Oscillator { omega: f64, dimension: usize },
    Custom { h0: PathBuf, v: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialState {
    /// The `n`-th eigenstate of `H0`, levels sorted by energy.
    Level(usize),
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tolerances {
    /// `None` means `1e-8 ×` the spectral range of `H0`.
    pub degeneracy_tol: Option<f64>,
    /// `None` picks enough panels for the largest configured time.
    pub quadrature_panels: Option<usize>,
    pub quadrature_nodes: usize,
    pub exp_tolerance: f64,
    pub hermitian_tol: f64,
    pub block_exp: ExpRoute,
    pub max_order: usize,
    pub dyson_max_order: usize,
    /// Errors at or below this count as numerically zero in slope fits.
    pub floor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            degeneracy_tol: None,
            quadrature_panels: None,
            quadrature_nodes: 4,
            exp_tolerance: DEFAULT_TOL,
            hermitian_tol: DEFAULT_TOL,
            block_exp: ExpRoute::Dense,
            max_order: DEFAULT_MAX_ORDER,
            dyson_max_order: DEFAULT_DYSON_CAP,
            floor: 1e-12,
        }
    }
}

/// A bound the run must satisfy; a breach exits with status 3.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Requirement {
    pub method_a: Method,
    pub method_b: Option<Method>,
    pub metric: Metric,
    #[serde(default)]
    pub order: Option<usize>,
    #[serde(default)]
    pub min: Option<f64>,
    #[serde(default)]
    pub max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProblemConfig {
    pub problem: Problem,
    pub order: usize,
    pub lambda_values: Vec<f64>,
    pub times: Vec<f64>,
    pub initial_state: InitialState,
    pub methods: Vec<Method>,
    pub tolerances: Tolerances,
    pub require: Vec<Requirement>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    problem: String,
    order: usize,
    lambda_values: Vec<f64>,
    times: Vec<f64>,
    #[serde(default)]
    methods: Option<Vec<Method>>,
    oscillator: Option<RawOscillator>,
    custom: Option<RawCustom>,
    initial_state: RawInitial,
    #[serde(default)]
    tolerances: RawTolerances,
    #[serde(default)]
    require: Vec<Requirement>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOscillator {
    omega: f64,
    dimension: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCustom {
    h0: PathBuf,
    v: PathBuf,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInitial {
    level: Option<usize>,
    file: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTolerances {
    degeneracy_tol: Option<f64>,
    quadrature_panels: Option<usize>,
    quadrature_nodes: Option<usize>,
    exp_tolerance: Option<f64>,
    hermitian_tol: Option<f64>,
    block_exp: Option<ExpRoute>,
    max_order: Option<usize>,
    dyson_max_order: Option<usize>,
    floor: Option<f64>,
}

fn field(name: impl Into<String>, message: impl Into<String>) -> CliError {
    CliError::Field {
        field: name.into(),
        message: message.into(),
    }
}

fn positive(name: &str, value: Option<f64>, default: f64) -> Result<f64, CliError> {
    match value {
        None => Ok(default),
        Some(x) if x.is_finite() && x > 0.0 => Ok(x),
        Some(x) => Err(field(name, format!("must be positive and finite, got {x}"))),
    }
}

impl ProblemConfig {
    /// Reads and validates a config; relative paths resolve against the
    /// config file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, CliError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Read {
            path: path.to_path_buf(),
            source: e,
        })?;
        let base = path.parent().unwrap_or_else(|| Path::new(""));
        Self::parse(&text, base)
    }

    pub fn parse(text: &str, base: &Path) -> Result<Self, CliError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
        Self::resolve(raw, base)
    }

    fn resolve(raw: RawConfig, base: &Path) -> Result<Self, CliError> {
        let problem = match raw.problem.as_str() {
            "oscillator" => {
                if raw.custom.is_some() {
                    return Err(field("custom", "not allowed when problem = \"oscillator\""));
                }
                let osc = raw
                    .oscillator
                    .ok_or_else(|| field("oscillator", "table required when problem = \"oscillator\""))?;
                if !(osc.omega.is_finite() && osc.omega > 0.0) {
                    return Err(field(
                        "oscillator.omega",
                        format!("must be positive and finite, got {}", osc.omega),
                    ));
                }
                if osc.dimension < 4 {
                    return Err(field(
                        "oscillator.dimension",
                        format!("must be at least 4, got {}", osc.dimension),
                    ));
                }
                Problem::Oscillator {
                    omega: osc.omega,
                    dimension: osc.dimension,
                }
            }
            "custom" => {
                if raw.oscillator.is_some() {
                    return Err(field("oscillator", "not allowed when problem = \"custom\""));
                }
                let custom = raw
                    .custom
                    .ok_or_else(|| field("custom", "table required when problem = \"custom\""))?;
                Problem::Custom {
                    h0: base.join(custom.h0),
                    v: base.join(custom.v),
                }
            }
            other => {
                return Err(field(
                    "problem",
                    format!("expected \"oscillator\" or \"custom\", got {other:?}"),
                ))
            }
        };

        let t = raw.tolerances;
        let tolerances = Tolerances {
            degeneracy_tol: match t.degeneracy_tol {
                None => None,
                Some(x) => Some(positive("tolerances.degeneracy_tol", Some(x), 0.0)?),
            },
            quadrature_panels: match t.quadrature_panels {
                Some(0) => return Err(field("tolerances.quadrature_panels", "must be at least 1")),
                p => p,
            },
            quadrature_nodes: match t.quadrature_nodes {
                Some(0) => return Err(field("tolerances.quadrature_nodes", "must be at least 1")),
                Some(n) if n > 32 => {
                    return Err(field(
                        "tolerances.quadrature_nodes",
                        format!("at most 32 supported, got {n}"),
                    ))
                }
                Some(n) => n,
                None => Tolerances::default().quadrature_nodes,
            },
            exp_tolerance: positive("tolerances.exp_tolerance", t.exp_tolerance, DEFAULT_TOL)?,
            hermitian_tol: positive("tolerances.hermitian_tol", t.hermitian_tol, DEFAULT_TOL)?,
            block_exp: t.block_exp.unwrap_or_default(),
            max_order: match t.max_order {
                Some(0) => return Err(field("tolerances.max_order", "must be at least 1")),
                Some(m) => m,
                None => DEFAULT_MAX_ORDER,
            },
            dyson_max_order: match t.dyson_max_order {
                Some(0) => return Err(field("tolerances.dyson_max_order", "must be at least 1")),
                Some(m) => m,
                None => DEFAULT_DYSON_CAP,
            },
            floor: positive("tolerances.floor", t.floor, Tolerances::default().floor)?,
        };
        if let (Some(p), n) = (tolerances.quadrature_panels, tolerances.quadrature_nodes) {
            if p * n < 8 {
                return Err(field(
                    "tolerances.quadrature_panels",
                    format!("{p} panels x {n} nodes is below the 8-node minimum"),
                ));
            }
        }

        if raw.order == 0 {
            return Err(field("order", "must be at least 1"));
        }
        if raw.order > tolerances.max_order {
            return Err(field(
                "order",
                format!("{} exceeds tolerances.max_order = {}", raw.order, tolerances.max_order),
            ));
        }

        if raw.lambda_values.is_empty() {
            return Err(field("lambda_values", "must not be empty"));
        }
        for (i, &l) in raw.lambda_values.iter().enumerate() {
            if !(l.is_finite() && l.abs() < 1.0) {
                return Err(field(
                    format!("lambda_values[{i}]"),
                    format!("must satisfy |λ| < 1, got {l}"),
                ));
            }
        }
        if raw.times.is_empty() {
            return Err(field("times", "must not be empty"));
        }
        for (i, &t) in raw.times.iter().enumerate() {
            if !(t.is_finite() && t >= 0.0) {
                return Err(field(
                    format!("times[{i}]"),
                    format!("must be finite and nonnegative, got {t}"),
                ));
            }
        }

        let initial_state = match (raw.initial_state.level, raw.initial_state.file) {
            (Some(n), None) => InitialState::Level(n),
            (None, Some(f)) => InitialState::File(base.join(f)),
            _ => return Err(field("initial_state", "give exactly one of `level` or `file`")),
        };

        let mut methods = raw.methods.unwrap_or_else(|| vec![Method::Block, Method::Exact]);
        if methods.is_empty() {
            return Err(field("methods", "must not be empty"));
        }
        methods.sort();
        methods.dedup();
        if methods.contains(&Method::Rspt) && !matches!(initial_state, InitialState::Level(_)) {
            return Err(field("methods", "rspt needs initial_state.level"));
        }

        let config = Self {
            problem,
            order: raw.order,
            lambda_values: raw.lambda_values,
            times: raw.times,
            initial_state,
            methods,
            tolerances,
            require: raw.require,
        };
        for (i, r) in config.require.iter().enumerate() {
            config.check_requirement(i, r)?;
        }
        Ok(config)
    }

    fn check_requirement(&self, i: usize, r: &Requirement) -> Result<(), CliError> {
        let name = |f: &str| format!("require[{i}].{f}");
        if !self.methods.contains(&r.method_a) {
            return Err(field(
                name("method_a"),
                format!("{} is not among the configured methods", r.method_a),
            ));
        }
        if let Some(b) = r.method_b {
            if !self.methods.contains(&b) {
                return Err(field(
                    name("method_b"),
                    format!("{b} is not among the configured methods"),
                ));
            }
        }
        if r.min.is_none() && r.max.is_none() {
            return Err(field(name("max"), "give `max`, `min`, or both"));
        }
        for (f, v) in [("min", r.min), ("max", r.max)] {
            if let Some(x) = v {
                if !x.is_finite() {
                    return Err(field(name(f), format!("must be finite, got {x}")));
                }
            }
        }
        if let Some(o) = r.order {
            if o == 0 || o > self.order {
                return Err(field(name("order"), format!("must lie in 1..={}, got {o}", self.order)));
            }
        }
        Ok(())
    }

    /// The same config with every applicable method switched on.
    pub fn for_verification(&self) -> Self {
        let mut out = self.clone();
        out.methods = Method::ALL
            .into_iter()
            .filter(|&m| m != Method::Rspt || matches!(self.initial_state, InitialState::Level(_)))
            .collect();
        out
    }

    pub fn has(&self, m: Method) -> bool {
        self.methods.contains(&m)
    }
}
