//! Method comparisons over the `(λ, t)` grid of a config.

use blockpert::operator::{self, read_matrix};
use blockpert::{
    eigendecompose_hermitian, rspt, BlockSystem, Complex64, ComplexMatrix, DysonOracle, FockSpec, OscillatorProblem,
    QuadratureScheme, RsCorrections, StateVector, UnperturbedSolution,
};

use crate::config::{InitialState, Method, Metric, Problem, ProblemConfig, Requirement};
use crate::error::CliError;
use crate::output::{ResultRow, Value};

/// Highest order of the stationary corrections.
pub const RSPT_MAX_ORDER: usize = 2;

/// Inputs after loading matrices and states from disk.
#[derive(Debug, Clone)]
pub struct LoadedProblem {
    pub h0: ComplexMatrix,
    pub v: ComplexMatrix,
    pub psi0: StateVector,
    pub level: Option<usize>,
    pub sol: UnperturbedSolution,
}

fn field(name: &str, err: impl std::fmt::Display) -> CliError {
    CliError::Field {
        field: name.into(),
        message: err.to_string(),
    }
}

fn load_hermitian(name: &str, path: &std::path::Path, tol: f64) -> Result<ComplexMatrix, CliError> {
    let m = read_matrix(path).map_err(|e| field(name, format!("{}: {e}", path.display())))?;
    if m.nrows() != m.ncols() {
        return Err(field(
            name,
            format!("matrix must be square, got {}x{}", m.nrows(), m.ncols()),
        ));
    }
    if !blockpert::hermitize_check(&m, tol).map_err(|e| field(name, e))? {
        let dev = operator::hermitian_deviation(&m).map_err(|e| field(name, e))?;
        return Err(field(
            name,
            format!("matrix is not Hermitian: deviation {dev:e} exceeds {tol:e}"),
        ));
    }
    Ok(m)
}

impl LoadedProblem {
    pub fn load(config: &ProblemConfig) -> Result<Self, CliError> {
        let tol = config.tolerances.hermitian_tol;
        let (h0, v) = match &config.problem {
            Problem::Oscillator { omega, dimension } => {
                let spec = FockSpec::new(*dimension, *omega).map_err(|e| field("oscillator", e))?;
                if let InitialState::Level(n) = config.initial_state {
                    spec.guard_level(n).map_err(|e| field("initial_state.level", e))?;
                }
                OscillatorProblem::new(spec, 0.0)?.hamiltonians()
            }
            Problem::Custom { h0, v } => {
                let h0 = load_hermitian("custom.h0", h0, tol)?;
                let v = load_hermitian("custom.v", v, tol)?;
                if h0.shape() != v.shape() {
                    return Err(field(
                        "custom.v",
                        format!(
                            "dimension {}x{} differs from H0's {}x{}",
                            v.nrows(),
                            v.ncols(),
                            h0.nrows(),
                            h0.ncols()
                        ),
                    ));
                }
                (h0, v)
            }
        };
        let sol = eigendecompose_hermitian(&h0)?;
        let d = h0.nrows();
        let (psi0, level) = match &config.initial_state {
            InitialState::Level(n) => {
                if *n >= d {
                    return Err(field(
                        "initial_state.level",
                        format!("level {n} out of range for dimension {d}"),
                    ));
                }
                (sol.eigenvector(*n)?, Some(*n))
            }
            InitialState::File(path) => {
                let m =
                    read_matrix(path).map_err(|e| field("initial_state.file", format!("{}: {e}", path.display())))?;
                if m.ncols() != 1 || m.nrows() != d {
                    return Err(field(
                        "initial_state.file",
                        format!("expected a {d}x1 column, got {}x{}", m.nrows(), m.ncols()),
                    ));
                }
                let psi = m.column(0).into_owned();
                if (psi.norm() - 1.0).abs() > 1e-8 {
                    return Err(field(
                        "initial_state.file",
                        format!("state norm is {}, expected 1", psi.norm()),
                    ));
                }
                (psi, None)
            }
        };
        Ok(Self {
            h0,
            v,
            psi0,
            level,
            sol,
        })
    }
}

/// Partial sums `ψ0(t) + Σ_{j≤k} λ^j c_j` for `k = 1..=len`.
fn partial_sums(zeroth: &StateVector, corrections: &[StateVector], lambda: f64) -> Vec<StateVector> {
    let mut acc = zeroth.clone();
    let mut weight = 1.0;
    corrections
        .iter()
        .map(|c| {
            weight *= lambda;
            acc += c * Complex64::from(weight);
            acc.clone()
        })
        .collect()
}

/// Per-method state approximations at one `(λ, t)`.
struct Cell {
    /// Partial sums for the series methods, the single exact state otherwise.
    states: Vec<(Method, Vec<StateVector>)>,
}

impl Cell {
    fn get(&self, m: Method) -> Option<&[StateVector]> {
        self.states.iter().find(|(k, _)| *k == m).map(|(_, v)| v.as_slice())
    }
}

struct Engine<'a> {
    config: &'a ProblemConfig,
    problem: &'a LoadedProblem,
    block: Option<BlockSystem>,
    rs: Option<RsCorrections>,
    dyson: Option<DysonOracle>,
    degeneracy_tol: f64,
}

impl<'a> Engine<'a> {
    fn new(config: &'a ProblemConfig, problem: &'a LoadedProblem) -> Result<Self, CliError> {
        let tol = &config.tolerances;
        let degeneracy_tol = tol
            .degeneracy_tol
            .unwrap_or_else(|| rspt::default_degeneracy_tol(&problem.sol));
        let block = if config.has(Method::Block) {
            Some(BlockSystem::assemble_with(
                &problem.h0,
                &problem.v,
                config.order,
                tol.max_order,
                tol.exp_tolerance,
            )?)
        } else {
            None
        };
        let rs = match (config.has(Method::Rspt), problem.level) {
            (true, Some(n)) => Some(rspt::corrections(&problem.sol, &problem.v, n, degeneracy_tol)?),
            _ => None,
        };
        let dyson = if config.has(Method::Dyson) {
            let t_max = config.times.iter().copied().fold(0.0, f64::max);
            let panels = tol
                .quadrature_panels
                .unwrap_or_else(|| auto_panels(&problem.sol, t_max, tol.quadrature_nodes));
            let scheme = QuadratureScheme::new(panels, tol.quadrature_nodes)?;
            Some(DysonOracle::new(&problem.sol, &problem.v, scheme)?.with_max_order(tol.dyson_max_order))
        } else {
            None
        };
        Ok(Self {
            config,
            problem,
            block,
            rs,
            dyson,
            degeneracy_tol,
        })
    }

    fn series_order(&self, m: Method) -> usize {
        match m {
            Method::Block => self.config.order,
            Method::Rspt => self.config.order.min(RSPT_MAX_ORDER),
            Method::Dyson => self.config.order.min(self.config.tolerances.dyson_max_order),
            Method::Exact => usize::MAX,
        }
    }

    /// λ-free corrections per series method at time `t`.
    fn corrections(&self, t: f64) -> Result<Vec<(Method, StateVector, Vec<StateVector>)>, CliError> {
        let p = self.problem;
        let mut out = Vec::new();
        if let Some(block) = &self.block {
            let series = block.evolve_with(&p.psi0, t, self.config.tolerances.block_exp)?;
            out.push((Method::Block, series.zeroth().clone(), series.corrections().to_vec()));
        }
        if let (Some(rs), Some(n)) = (&self.rs, p.level) {
            let terms = rspt::time_dependent_terms(&p.sol, &p.v, n, t, self.degeneracy_tol)?;
            let mut c = vec![rspt::first_order_state(&p.sol, rs, &terms)];
            if self.series_order(Method::Rspt) >= 2 {
                c.push(rspt::second_order_state(&p.sol, rs, &terms));
            }
            out.push((Method::Rspt, p.sol.evolve(&p.psi0, t), c));
        }
        if let Some(dyson) = &self.dyson {
            let terms = dyson.interaction_terms(&p.psi0, t, self.series_order(Method::Dyson))?;
            let c = terms.iter().map(|u| p.sol.evolve(u, t)).collect();
            out.push((Method::Dyson, p.sol.evolve(&p.psi0, t), c));
        }
        Ok(out)
    }

    fn rows(&self) -> Result<Vec<ResultRow>, CliError> {
        let config = self.config;
        let p = self.problem;
        let times = &config.times;

        let corrections: Vec<_> = times.iter().map(|&t| self.corrections(t)).collect::<Result<_, _>>()?;
        let residuals: Vec<Option<f64>> = match (&self.dyson, config.has(Method::Block)) {
            (Some(d), true) => times
                .iter()
                .map(|&t| d.identity_residual(t, self.series_order(Method::Dyson)).map(Some))
                .collect::<Result<_, _>>()?,
            _ => vec![None; times.len()],
        };

        let mut rows = Vec::new();
        for &lambda in &config.lambda_values {
            let full = if config.has(Method::Exact) {
                Some(eigendecompose_hermitian(&(&p.h0 + &p.v * Complex64::from(lambda)))?)
            } else {
                None
            };
            for (ti, &t) in times.iter().enumerate() {
                let mut cell = Cell { states: Vec::new() };
                for (m, zeroth, c) in &corrections[ti] {
                    cell.states.push((*m, partial_sums(zeroth, c, lambda)));
                }
                if let Some(full) = &full {
                    cell.states.push((Method::Exact, vec![full.evolve(&p.psi0, t)]));
                }
                let row = |order: usize, a: Method, b: Option<Method>, metric: Metric, value: f64| ResultRow {
                    lambda: Some(lambda),
                    t,
                    order,
                    method_a: a,
                    method_b: b,
                    metric,
                    value: Value::Number(value),
                };

                for (i, &a) in config.methods.iter().enumerate() {
                    for &b in &config.methods[i + 1..] {
                        let (Some(sa), Some(sb)) = (cell.get(a), cell.get(b)) else {
                            continue;
                        };
                        let top = self.series_order(a).min(self.series_order(b));
                        for k in 1..=top {
                            let xa = &sa[(k - 1).min(sa.len() - 1)];
                            let xb = &sb[(k - 1).min(sb.len() - 1)];
                            rows.push(row(k, a, Some(b), Metric::StateError, (xa - xb).norm()));
                        }
                    }
                }
                for &a in &config.methods {
                    if a == Method::Exact {
                        continue;
                    }
                    if let Some(s) = cell.get(a) {
                        for (k, x) in s.iter().enumerate() {
                            rows.push(row(k + 1, a, None, Metric::NormDeviation, (x.norm() - 1.0).abs()));
                        }
                    }
                }
                if let (Some(rs), Some(full), Some(n)) = (&self.rs, &full, p.level) {
                    let exact = full.energies()[n];
                    let e0 = p.sol.energies()[n];
                    let first = e0 + lambda * rs.delta1;
                    rows.push(row(
                        1,
                        Method::Rspt,
                        Some(Method::Exact),
                        Metric::EnergyError,
                        (first - exact).abs(),
                    ));
                    if self.series_order(Method::Rspt) >= 2 {
                        let second = first + lambda * lambda * rs.delta2;
                        rows.push(row(
                            2,
                            Method::Rspt,
                            Some(Method::Exact),
                            Metric::EnergyError,
                            (second - exact).abs(),
                        ));
                    }
                }
                if let Some(r) = residuals[ti] {
                    rows.push(row(
                        self.series_order(Method::Dyson),
                        Method::Block,
                        Some(Method::Dyson),
                        Metric::IdentityResidual,
                        r,
                    ));
                }
            }
        }
        Ok(rows)
    }
}

/// Panels for the Dyson grid: at least 64, and enough that no panel carries
/// more than about a radian of phase.
fn auto_panels(sol: &UnperturbedSolution, t_max: f64, nodes: usize) -> usize {
    let per_panel = (4.0 / nodes as f64).max(1.0);
    let needed = QuadratureScheme::recommended_panels(sol.spectral_range(), t_max) * per_panel as usize;
    needed.max(64)
}

/// Comparison rows for every `(λ, t)` cell, in config order. Deterministic:
/// the same config always produces the same rows.
pub fn run(config: &ProblemConfig, problem: &LoadedProblem) -> Result<Vec<ResultRow>, CliError> {
    Engine::new(config, problem)?.rows()
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (sx, sy) = points
        .iter()
        .fold((0.0, 0.0), |(a, b), &(x, y)| (a + x.ln(), b + y.ln()));
    let (mx, my) = (sx / n, sy / n);
    let (num, den) = points.iter().fold((0.0, 0.0), |(a, b), &(x, y)| {
        let dx = x.ln() - mx;
        (a + dx * (y.ln() - my), b + dx * dx)
    });
    num / den
}

/// `run` plus one slope row per `(t, order, method pair)` for state errors
/// against the exact propagator, fitted over the nonzero `|λ|`.
pub fn scan_convergence(config: &ProblemConfig, problem: &LoadedProblem) -> Result<Vec<ResultRow>, CliError> {
    let mut strengths: Vec<f64> = config
        .lambda_values
        .iter()
        .map(|l| l.abs())
        .filter(|&l| l > 0.0)
        .collect();
    strengths.sort_by(f64::total_cmp);
    strengths.dedup();
    if strengths.len() < 2 {
        return Err(CliError::Field {
            field: "lambda_values".into(),
            message: "a scan needs at least two distinct nonzero |λ|".into(),
        });
    }
    if !config.has(Method::Exact) {
        return Err(CliError::Field {
            field: "methods".into(),
            message: "a scan fits errors against the exact propagator, add \"exact\"".into(),
        });
    }
    let mut rows = run(config, problem)?;
    let floor = config.tolerances.floor;
    let mut fits = Vec::new();
    for &t in &config.times {
        for &a in &config.methods {
            if a == Method::Exact {
                continue;
            }
            for k in 1..=config.order {
                let samples: Vec<(f64, f64)> = rows
                    .iter()
                    .filter(|r| {
                        r.t == t
                            && r.order == k
                            && r.method_a == a
                            && r.method_b == Some(Method::Exact)
                            && r.metric == Metric::StateError
                            && r.lambda.is_some_and(|l| l != 0.0)
                    })
                    .filter_map(|r| match r.value {
                        Value::Number(v) => Some((r.lambda.unwrap_or(0.0).abs(), v)),
                        Value::Floor => None,
                    })
                    .collect();
                if samples.is_empty() {
                    continue;
                }
                let above: Vec<(f64, f64)> = samples.iter().copied().filter(|&(_, e)| e > floor).collect();
                let value = if above.len() < 2 {
                    Value::Floor
                } else {
                    Value::Number(log_log_slope(&above))
                };
                fits.push(ResultRow {
                    lambda: None,
                    t,
                    order: k,
                    method_a: a,
                    method_b: Some(Method::Exact),
                    metric: Metric::Slope,
                    value,
                });
            }
        }
    }
    rows.extend(fits);
    Ok(rows)
}

/// Built-in agreement bounds checked under `--verify`.
pub fn verification_requirements(config: &ProblemConfig) -> Vec<Requirement> {
    let mut out = Vec::new();
    let mut push = |a, b, metric, max| {
        if config.has(a) && config.has(b) {
            out.push(Requirement {
                method_a: a,
                method_b: Some(b),
                metric,
                order: None,
                min: None,
                max: Some(max),
            });
        }
    };
    push(Method::Block, Method::Rspt, Metric::StateError, 1e-8);
    push(Method::Block, Method::Dyson, Metric::StateError, 1e-7);
    push(Method::Block, Method::Dyson, Metric::IdentityResidual, 1e-7);
    push(Method::Rspt, Method::Dyson, Metric::StateError, 1e-7);
    out
}

/// Outcome of one requirement against a table.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub requirement: Requirement,
    pub matched: usize,
    pub worst: Option<Value>,
    pub passed: bool,
}

fn matches(r: &Requirement, row: &ResultRow) -> bool {
    row.method_a == r.method_a
        && row.method_b == r.method_b
        && row.metric == r.metric
        && r.order.is_none_or(|o| o == row.order)
}

/// Every requirement must match at least one row, and every matching value
/// must lie within `[min, max]`. A floor value passes `max` and fails `min`.
pub fn check_requirements(requirements: &[Requirement], rows: &[ResultRow]) -> Vec<CheckOutcome> {
    requirements
        .iter()
        .map(|r| {
            let hits: Vec<Value> = rows.iter().filter(|row| matches(r, row)).map(|row| row.value).collect();
            let passed = !hits.is_empty()
                && hits.iter().all(|v| match *v {
                    Value::Floor => r.min.is_none(),
                    Value::Number(v) => r.max.is_none_or(|m| v <= m) && r.min.is_none_or(|m| v >= m),
                });
            // a floor sorts below every number
            let key = |v: &Value| match *v {
                Value::Floor => f64::NEG_INFINITY,
                Value::Number(x) => x,
            };
            let worst = if r.max.is_some() {
                hits.iter().copied().max_by(|a, b| key(a).total_cmp(&key(b)))
            } else {
                hits.iter().copied().min_by(|a, b| key(a).total_cmp(&key(b)))
            };
            CheckOutcome {
                requirement: r.clone(),
                matched: hits.len(),
                worst,
                passed,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::Path;

    fn config(text: &str) -> ProblemConfig {
        ProblemConfig::parse(text, Path::new(".")).unwrap()
    }

    fn oscillator(order: usize, lambdas: &str, methods: &str) -> ProblemConfig {
        config(&format!(
            r#"
problem = "oscillator"
order = {order}
lambda_values = {lambdas}
times = [1.0]
methods = {methods}
[oscillator]
omega = 1.0
dimension = 32
[initial_state]
level = 0
"#
        ))
    }

    fn value(rows: &[ResultRow], lambda: f64, order: usize, a: Method, b: Method, metric: Metric) -> f64 {
        let r = rows
            .iter()
            .find(|r| {
                r.lambda == Some(lambda)
                    && r.order == order
                    && r.method_a == a
                    && r.method_b == Some(b)
                    && r.metric == metric
            })
            .expect("row present");
        match r.value {
            Value::Number(v) => v,
            Value::Floor => 0.0,
        }
    }

    #[test]
    fn unperturbed_limit() {
        let c = oscillator(2, "[0.0]", r#"["block", "exact"]"#);
        let p = LoadedProblem::load(&c).unwrap();
        let rows = run(&c, &p).unwrap();
        for r in &rows {
            if let Value::Number(v) = r.value {
                assert!(v <= 1e-10, "{r:?}");
            }
        }
    }

    #[test]
    fn block_error_scales_quadratically_at_first_order() {
        let c = oscillator(1, "[0.01, 0.02]", r#"["block", "exact"]"#);
        let p = LoadedProblem::load(&c).unwrap();
        let rows = run(&c, &p).unwrap();
        let e1 = value(&rows, 0.01, 1, Method::Block, Method::Exact, Metric::StateError);
        let e2 = value(&rows, 0.02, 1, Method::Block, Method::Exact, Metric::StateError);
        assert!((e2 / (4.0 * e1) - 1.0).abs() < 0.25, "{e1} {e2}");
    }

    #[test]
    fn all_methods_agree_on_the_oscillator() {
        let c = oscillator(2, "[0.01]", r#"["block", "rspt", "dyson", "exact"]"#);
        let p = LoadedProblem::load(&c).unwrap();
        let rows = run(&c, &p).unwrap();
        assert!(value(&rows, 0.01, 2, Method::Block, Method::Rspt, Metric::StateError) < 1e-10);
        assert!(value(&rows, 0.01, 2, Method::Block, Method::Dyson, Metric::StateError) < 1e-9);
        assert!(value(&rows, 0.01, 2, Method::Block, Method::Dyson, Metric::IdentityResidual) < 1e-7);
        // Δ¹ = 1/4, Δ² = -1/16 at n = 0; the exact energy is √(1+λ)/2
        let exact = (1.01f64).sqrt() / 2.0;
        let e2 = value(&rows, 0.01, 2, Method::Rspt, Method::Exact, Metric::EnergyError);
        assert!(
            (e2 - (0.5 + 0.0025 - 0.0001 / 16.0 - exact).abs()).abs() < 1e-12,
            "{e2}"
        );
        let checks = check_requirements(&verification_requirements(&c), &rows);
        assert_eq!(checks.len(), 4);
        assert!(checks.iter().all(|c| c.passed), "{checks:?}");
    }

    #[test]
    fn scan_slopes_by_order() {
        let c = oscillator(2, "[0.04, 0.02, 0.01]", r#"["block", "exact"]"#);
        let p = LoadedProblem::load(&c).unwrap();
        let rows = scan_convergence(&c, &p).unwrap();
        let slopes: Vec<f64> = rows
            .iter()
            .filter(|r| r.metric == Metric::Slope)
            .map(|r| match r.value {
                Value::Number(v) => v,
                Value::Floor => f64::NAN,
            })
            .collect();
        assert_eq!(slopes.len(), 2);
        assert!((slopes[0] - 2.0).abs() < 0.2, "{slopes:?}");
        assert!((slopes[1] - 3.0).abs() < 0.3, "{slopes:?}");
    }

    #[test]
    fn scan_needs_two_strengths_and_exact() {
        let c = oscillator(1, "[0.0, 0.01, -0.01]", r#"["block", "exact"]"#);
        let p = LoadedProblem::load(&c).unwrap();
        assert!(matches!(scan_convergence(&c, &p), Err(CliError::Field { ref field, .. }) if field == "lambda_values"));
        let c = oscillator(1, "[0.01, 0.02]", r#"["block"]"#);
        assert!(matches!(scan_convergence(&c, &p), Err(CliError::Field { ref field, .. }) if field == "methods"));
    }

    #[test]
    fn slope_fit() {
        let pts: Vec<(f64, f64)> = [0.01, 0.02, 0.04].iter().map(|&x| (x, 3.0 * x * x * x)).collect();
        assert!((log_log_slope(&pts) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn requirement_outcomes() {
        let row = |v: Value| ResultRow {
            lambda: Some(0.1),
            t: 1.0,
            order: 1,
            method_a: Method::Block,
            method_b: Some(Method::Exact),
            metric: Metric::StateError,
            value: v,
        };
        let rows = vec![row(Value::Number(1e-3)), row(Value::Number(2e-3)), row(Value::Floor)];
        let req = |min, max| Requirement {
            method_a: Method::Block,
            method_b: Some(Method::Exact),
            metric: Metric::StateError,
            order: None,
            min,
            max,
        };
        let out = check_requirements(
            &[req(None, Some(5e-3)), req(None, Some(1.5e-3)), req(Some(1e-4), None)],
            &rows,
        );
        assert!(out[0].passed);
        assert_eq!(out[0].matched, 3);
        assert_eq!(out[0].worst, Some(Value::Number(2e-3)));
        assert!(!out[1].passed);
        assert!(!out[2].passed);
        assert_eq!(out[2].worst, Some(Value::Floor));
        let none = check_requirements(
            &[Requirement {
                order: Some(2),
                ..req(None, Some(1.0))
            }],
            &rows,
        );
        assert!(!none[0].passed && none[0].matched == 0);
    }
}
