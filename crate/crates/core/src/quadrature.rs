//! Gauss–Legendre rules and composite integration helpers.

use std::sync::OnceLock;

use thiserror::Error;

/// Number of nodes per panel in the composite rule.
pub const GL_ORDER: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("quadrature did not converge after {panels} panels (last estimates {previous:e}, {current:e})")]
    NonConvergence {
        panels: usize,
        previous: f64,
        current: f64,
    },
}

/// Nodes and weights of an n-point Gauss–Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Newton iteration on P_n started from the Chebyshev-like guesses.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss–Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
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
        Self { nodes, weights }
    }

    /// The shared 16-point rule.
    pub fn standard() -> &'static GaussLegendre {
        static RULE: OnceLock<GaussLegendre> = OnceLock::new();
        RULE.get_or_init(|| GaussLegendre::new(GL_ORDER))
    }

    /// Integrate `f` over `[a, b]` with a single panel.
    pub fn panel<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }

    /// Append the mapped nodes and weights of `[a, b]` to the output vectors.
    pub fn push_panel(&self, a: f64, b: f64, xs: &mut Vec<f64>, ws: &mut Vec<f64>) {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            xs.push(mid + half * x);
            ws.push(w * half);
        }
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite 16-point Gauss–Legendre over `panels` equal panels.
pub fn composite<F: FnMut(f64) -> f64>(a: f64, b: f64, panels: usize, mut f: F) -> f64 {
    let rule = GaussLegendre::standard();
    let width = (b - a) / panels as f64;
    let mut acc = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * width;
        acc += rule.panel(lo, lo + width, &mut f);
    }
    acc
}

/// Nodes and weights of a composite rule, for reuse across many integrands.
pub fn composite_nodes(a: f64, b: f64, panels: usize) -> (Vec<f64>, Vec<f64>) {
    let rule = GaussLegendre::standard();
    let width = (b - a) / panels as f64;
    let mut xs = Vec::with_capacity(panels * GL_ORDER);
    let mut ws = Vec::with_capacity(panels * GL_ORDER);
    for p in 0..panels {
        let lo = a + p as f64 * width;
        rule.push_panel(lo, lo + width, &mut xs, &mut ws);
    }
    (xs, ws)
}

/// Dyadic panel refinement until two successive estimates agree to `rel_tol`.
///
/// The tolerance is measured against ∫|f|, so integrals that cancel to zero
/// (odd moments, say) still terminate.
pub fn adaptive<F: FnMut(f64) -> f64>(
    a: f64,
    b: f64,
    rel_tol: f64,
    max_panels: usize,
    mut f: F,
) -> Result<f64, QuadratureError> {
    let mut panels = 4;
    let (mut previous, _) = composite_with_abs(a, b, panels, &mut f);
    loop {
        panels *= 2;
        let (current, magnitude) = composite_with_abs(a, b, panels, &mut f);
        if (current - previous).abs() <= rel_tol * magnitude || magnitude == 0.0 {
            return Ok(current);
        }
        if panels >= max_panels {
            return Err(QuadratureError::NonConvergence {
                panels,
                previous,
                current,
            });
        }
        previous = current;
    }
}

fn composite_with_abs<F: FnMut(f64) -> f64>(a: f64, b: f64, panels: usize, f: &mut F) -> (f64, f64) {
    let rule = GaussLegendre::standard();
    let width = (b - a) / panels as f64;
    let (mut acc, mut mag) = (0.0, 0.0);
    for p in 0..panels {
        let lo = a + p as f64 * width;
        let mid = lo + 0.5 * width;
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            let v = f(mid + 0.5 * width * x) * w;
            acc += v;
            mag += v.abs();
        }
    }
    (acc * 0.5 * width, mag * 0.5 * width)
}

/// Composite Simpson rule on `panels` (even) subintervals.
pub fn simpson<F: FnMut(f64) -> f64>(a: f64, b: f64, panels: usize, mut f: F) -> f64 {
    let panels = panels + panels % 2;
    let h = (b - a) / panels as f64;
    let mut acc = f(a) + f(b);
    for i in 1..panels {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}
