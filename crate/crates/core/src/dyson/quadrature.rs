//! Composite Gauss–Legendre rules with cumulative (prefix) integration.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::operator::StateVector;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Chebyshev-like initial guess, refined by Newton on P_n
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    (p1, nf * (x * p1 - p0) / (x * x - 1.0))
}

fn lagrange(nodes: &[f64], j: usize, x: f64) -> f64 {
    nodes
        .iter()
        .enumerate()
        .filter(|&(m, _)| m != j)
        .map(|(_, &xm)| (x - xm) / (nodes[j] - xm))
        .product()
}

/// `n × n` matrix with entries `∫_{-1}^{x_i} ℓ_j(x) dx`, where `ℓ_j` are the
/// Lagrange polynomials on the Gauss nodes.
fn partial_integration_matrix(nodes: &[f64], weights: &[f64]) -> Vec<Vec<f64>> {
    nodes
        .iter()
        .map(|&xi| {
            let half = 0.5 * (xi + 1.0);
            (0..nodes.len())
                .map(|j| {
                    nodes
                        .iter()
                        .zip(weights)
                        .map(|(&s, &w)| w * half * lagrange(nodes, j, -1.0 + half * (s + 1.0)))
                        .sum()
                })
                .collect()
        })
        .collect()
}

/// Composite rule: `panels` equal panels, `nodes_per_panel` Gauss points each.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadratureScheme {
    panels: usize,
    nodes_per_panel: usize,
}

impl Default for QuadratureScheme {
    fn default() -> Self {
        Self {
            panels: 64,
            nodes_per_panel: 4,
        }
    }
}

impl QuadratureScheme {
    pub fn new(panels: usize, nodes_per_panel: usize) -> Result<Self> {
        if panels == 0 || nodes_per_panel == 0 {
            return Err(Error::InvalidArgument(
                "quadrature needs at least one panel and one node".into(),
            ));
        }
        if panels * nodes_per_panel < 8 {
            return Err(Error::InvalidArgument(format!(
                "quadrature needs at least 8 nodes in total, got {panels} x {nodes_per_panel}"
            )));
        }
        Ok(Self {
            panels,
            nodes_per_panel,
        })
    }

    pub fn panels(&self) -> usize {
        self.panels
    }

    pub fn nodes_per_panel(&self) -> usize {
        self.nodes_per_panel
    }

    /// Panels needed to resolve phases up to `spectral_range · t`: at least
    /// 8 per `2π` of accumulated phase.
    pub fn recommended_panels(spectral_range: f64, t: f64) -> usize {
        (8.0 * spectral_range * t.abs() / std::f64::consts::TAU).ceil().max(1.0) as usize
    }

    pub(crate) fn grid(&self, t: f64) -> Grid {
        let (nodes, weights) = gauss_legendre(self.nodes_per_panel);
        let partial = partial_integration_matrix(&nodes, &weights);
        Grid {
            t,
            panels: self.panels,
            nodes,
            weights,
            partial,
        }
    }
}

/// A composite rule laid out on `[0, t]`.
pub(crate) struct Grid {
    t: f64,
    panels: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    partial: Vec<Vec<f64>>,
}

impl Grid {
    fn half_width(&self) -> f64 {
        0.5 * self.t / self.panels as f64
    }

    pub(crate) fn len(&self) -> usize {
        self.panels * self.nodes.len()
    }

    /// Quadrature points, panel by panel.
    pub(crate) fn points(&self) -> Vec<f64> {
        let h = self.half_width();
        (0..self.panels)
            .flat_map(|p| {
                let start = 2.0 * h * p as f64;
                self.nodes.iter().map(move |&x| start + h * (x + 1.0))
            })
            .collect()
    }

    /// Running integrals `∫₀^{s_i} f` at every grid point together with the
    /// full integral `∫₀ᵗ f`, given samples `f(s_i)`.
    ///
    /// Within a panel the partial integral comes from the interpolating
    /// polynomial through that panel's nodes, so the prefix values carry the
    /// same order of accuracy as the rule itself.
    pub(crate) fn cumulative(&self, samples: &[StateVector]) -> (Vec<StateVector>, StateVector) {
        let q = self.nodes.len();
        let h = self.half_width();
        let mut running = StateVector::zeros(samples[0].len());
        let mut prefix = Vec::with_capacity(samples.len());
        for panel in samples.chunks(q) {
            for row in &self.partial {
                let mut acc = running.clone();
                for (f, &s) in panel.iter().zip(row) {
                    acc += f * Complex64::from(s * h);
                }
                prefix.push(acc);
            }
            for (f, &w) in panel.iter().zip(&self.weights) {
                running += f * Complex64::from(w * h);
            }
        }
        (prefix, running)
    }
}
