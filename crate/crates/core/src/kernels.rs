//! Compactly supported test kernels, their rescalings and antiderivative pairs.
//!
//! The working family is built from the bump φ(x) = exp(−c/(1−x²)). Its
//! derivatives are evaluated as φ⁽ⁿ⁾(x) = Pₙ(x)/(1−x²)²ⁿ · φ(x) with polynomial
//! numerators, which stays accurate right up to the edge of the support where
//! finite differences would cancel catastrophically.

use std::fmt;
use std::path::Path;
use std::sync::{Arc, OnceLock};

use thiserror::Error;

use crate::quadrature::{self, QuadratureError};

/// Bump constant used throughout the numerical study.
pub const PAPER_BUMP_C: f64 = 12.0;

/// Highest derivative order tabulated for the bump.
pub const MAX_BUMP_ORDER: usize = 10;

/// Points closer than this to ±1 evaluate to exactly zero.
const EDGE_EPS: f64 = 1e-12;

/// Moments below this are treated as zero when deciding whether K̃ exists.
pub const MOMENT_TOL: f64 = 1e-9;

/// Relative tolerance for norm quadrature.
pub const NORM_TOL: f64 = 1e-10;

const NORM_MAX_PANELS: usize = 1 << 14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("probe of half-width {delta} cannot fit inside (0, 1)")]
    DomainTooSmall { delta: f64 },
    #[error("resolution must be positive and finite, got {0}")]
    InvalidScale(f64),
    #[error("center {0} is not inside (0, 1)")]
    InvalidCenter(f64),
    #[error("kernel has no compactly supported antiderivative pair (moment0 = {moment0:e}, moment1 = {moment1:e})")]
    MomentConditionViolated { moment0: f64, moment1: f64 },
    #[error("derivative order {order} exceeds the supported maximum {max}")]
    OrderTooHigh { order: usize, max: usize },
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error("unknown kernel `{0}` (expected k1, k2 or custom:<path>)")]
    UnknownKernel(String),
    #[error("failed to read kernel table {path}: {message}")]
    Table { path: String, message: String },
}

/// A real function of one variable together with its derivatives.
///
/// Implementations are expected to return 0 outside their support.
pub trait Profile: Send + Sync + fmt::Debug {
    fn derivative(&self, order: usize, x: f64) -> f64;

    fn value(&self, x: f64) -> f64 {
        self.derivative(0, x)
    }
}

/// φ(x) = exp(−c/(1−x²)) on (−1, 1), with derivative numerators precomputed.
#[derive(Debug, Clone)]
pub struct Bump {
    pub c: f64,
    numerators: Vec<Vec<f64>>,
}

impl Bump {
    pub fn new(c: f64) -> Self {
        assert!(c > 0.0, "bump constant must be positive");
        let mut numerators = Vec::with_capacity(MAX_BUMP_ORDER + 1);
        numerators.push(vec![1.0]);
        for n in 0..MAX_BUMP_ORDER {
            let next = next_numerator(&numerators[n], n, c);
            numerators.push(next);
        }
        Self { c, numerators }
    }

    /// The shared bump with c = 12.
    pub fn paper() -> Arc<Bump> {
        static BUMP: OnceLock<Arc<Bump>> = OnceLock::new();
        BUMP.get_or_init(|| Arc::new(Bump::new(PAPER_BUMP_C))).clone()
    }

    /// Numerator polynomial Pₙ, coefficients in ascending powers.
    pub fn numerator(&self, order: usize) -> &[f64] {
        &self.numerators[order]
    }
}

// P_{n+1} = P_n′(1−x²)² + 4n·x(1−x²)P_n − 2c·x·P_n
fn next_numerator(p: &[f64], n: usize, c: f64) -> Vec<f64> {
    let mut out = vec![0.0; p.len() + 4];
    // P_n′ · (1 − 2x² + x⁴)
    for (i, &a) in p.iter().enumerate().skip(1) {
        let d = a * i as f64;
        let k = i - 1;
        out[k] += d;
        out[k + 2] -= 2.0 * d;
        out[k + 4] += d;
    }
    let four_n = 4.0 * n as f64;
    for (i, &a) in p.iter().enumerate() {
        // 4n(x − x³)P_n
        out[i + 1] += four_n * a;
        out[i + 3] -= four_n * a;
        // −2c·x·P_n
        out[i + 1] -= 2.0 * c * a;
    }
    while out.len() > 1 && *out.last().unwrap() == 0.0 {
        out.pop();
    }
    out
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &a| acc * x + a)
}

impl Profile for Bump {
    fn derivative(&self, order: usize, x: f64) -> f64 {
        assert!(
            order <= MAX_BUMP_ORDER,
            "bump derivative order {order} exceeds {MAX_BUMP_ORDER}"
        );
        if !(x.abs() < 1.0 - EDGE_EPS) {
            return 0.0;
        }
        let s = (1.0 - x) * (1.0 + x);
        let log_scale = -self.c / s - 2.0 * order as f64 * s.ln();
        horner(&self.numerators[order], x) * log_scale.exp()
    }
}

/// φ(x) for the c = 12 bump.
pub fn bump(x: f64) -> f64 {
    Bump::paper().derivative(0, x)
}

/// φ⁽ⁿ⁾(x) for the c = 12 bump.
pub fn bump_derivative(order: usize, x: f64) -> Result<f64, KernelError> {
    if order > MAX_BUMP_ORDER {
        return Err(KernelError::OrderTooHigh {
            order,
            max: MAX_BUMP_ORDER,
        });
    }
    Ok(Bump::paper().derivative(order, x))
}

/// x ↦ φ⁽ᵒʳᵈᵉʳ⁾(x) viewed as a profile in its own right.
#[derive(Debug, Clone)]
pub struct BumpDerivative {
    pub bump: Arc<Bump>,
    pub order: usize,
}

impl BumpDerivative {
    pub fn new(bump: Arc<Bump>, order: usize) -> Self {
        Self { bump, order }
    }
}

impl Profile for BumpDerivative {
    fn derivative(&self, order: usize, x: f64) -> f64 {
        self.bump.derivative(self.order + order, x)
    }
}

/// Linear combination Σ cᵢ·fᵢ.
#[derive(Debug, Clone)]
pub struct Combination {
    pub terms: Vec<(f64, Arc<dyn Profile>)>,
}

impl Profile for Combination {
    fn derivative(&self, order: usize, x: f64) -> f64 {
        self.terms
            .iter()
            .map(|(c, f)| c * f.derivative(order, x))
            .sum()
    }
}

/// Natural cubic spline through tabulated points; zero outside the table.
#[derive(Debug, Clone)]
pub struct Spline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    second: Vec<f64>,
}

impl Spline {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self, String> {
        let n = xs.len();
        if n < 3 || ys.len() != n {
            return Err(format!("need at least 3 matching points, got {n}"));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err("abscissae must be strictly increasing".into());
        }
        // tridiagonal system for the interior second derivatives
        let mut second = vec![0.0; n];
        let mut cprime = vec![0.0; n];
        let mut dprime = vec![0.0; n];
        for i in 1..n - 1 {
            let h0 = xs[i] - xs[i - 1];
            let h1 = xs[i + 1] - xs[i];
            let a = h0 / 6.0;
            let b = (h0 + h1) / 3.0;
            let c = h1 / 6.0;
            let d = (ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0;
            let m = b - a * cprime[i - 1];
            cprime[i] = c / m;
            dprime[i] = (d - a * dprime[i - 1]) / m;
        }
        for i in (1..n - 1).rev() {
            second[i] = dprime[i] - cprime[i] * second[i + 1];
        }
        Ok(Self { xs, ys, second })
    }

    pub fn range(&self) -> (f64, f64) {
        (self.xs[0], *self.xs.last().unwrap())
    }
}

impl Spline {
    /// Spline value (or derivative) with `x` clamped into the table range.
    pub fn interpolate(&self, order: usize, x: f64) -> f64 {
        let (lo, hi) = self.range();
        let x = x.clamp(lo, hi);
        let i = match self.xs.partition_point(|&v| v <= x) {
            0 => 0,
            p => (p - 1).min(self.xs.len() - 2),
        };
        let h = self.xs[i + 1] - self.xs[i];
        let a = (self.xs[i + 1] - x) / h;
        let b = (x - self.xs[i]) / h;
        let (m0, m1) = (self.second[i], self.second[i + 1]);
        let (y0, y1) = (self.ys[i], self.ys[i + 1]);
        match order {
            0 => a * y0 + b * y1 + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0,
            1 => (y1 - y0) / h + (-(3.0 * a * a - 1.0) * m0 + (3.0 * b * b - 1.0) * m1) * h / 6.0,
            2 => a * m0 + b * m1,
            3 => (m1 - m0) / h,
            _ => 0.0,
        }
    }
}

impl Profile for Spline {
    fn derivative(&self, order: usize, x: f64) -> f64 {
        let (lo, hi) = self.range();
        if !(x > lo && x < hi) {
            return 0.0;
        }
        self.interpolate(order, x)
    }
}

/// K̃(x) = ∫_{−R}^{x}∫_{−R}^{y} K(u) du dy built by panelwise Gauss–Legendre.
///
/// Cumulative values are stored at panel edges; inside a panel the remaining
/// piece is integrated on the fly, so derivatives of order 0, 1, 2 are all
/// accurate to quadrature precision.
#[derive(Debug, Clone)]
pub struct NumericAntiderivative {
    kernel: Arc<dyn Profile>,
    radius: f64,
    width: f64,
    first: Vec<f64>,
    second: Vec<f64>,
}

const ANTI_PANELS: usize = 1024;

impl NumericAntiderivative {
    pub fn new(kernel: Arc<dyn Profile>, radius: f64) -> Self {
        let width = 2.0 * radius / ANTI_PANELS as f64;
        let mut first = Vec::with_capacity(ANTI_PANELS + 1);
        let mut second = Vec::with_capacity(ANTI_PANELS + 1);
        let (mut f1, mut f2) = (0.0, 0.0);
        first.push(f1);
        second.push(f2);
        let rule = quadrature::GaussLegendre::standard();
        for p in 0..ANTI_PANELS {
            let a = -radius + p as f64 * width;
            let b = a + width;
            let k = kernel.as_ref();
            let i0 = rule.panel(a, b, |u| k.value(u));
            let i1 = rule.panel(a, b, |u| (b - u) * k.value(u));
            f2 += f1 * width + i1;
            f1 += i0;
            first.push(f1);
            second.push(f2);
        }
        Self {
            kernel,
            radius,
            width,
            first,
            second,
        }
    }
}

impl Profile for NumericAntiderivative {
    fn derivative(&self, order: usize, x: f64) -> f64 {
        if !(x.abs() < self.radius) {
            return 0.0;
        }
        if order >= 2 {
            return self.kernel.derivative(order - 2, x);
        }
        let p = (((x + self.radius) / self.width) as usize).min(ANTI_PANELS - 1);
        let a = -self.radius + p as f64 * self.width;
        let rule = quadrature::GaussLegendre::standard();
        let k = self.kernel.as_ref();
        if order == 1 {
            self.first[p] + rule.panel(a, x, |u| k.value(u))
        } else {
            self.second[p] + self.first[p] * (x - a) + rule.panel(a, x, |u| (x - u) * k.value(u))
        }
    }
}

/// Squared L² norms used throughout the asymptotic constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelNorms {
    /// ‖K‖²
    pub k: f64,
    /// ‖K′‖²
    pub dk: f64,
    /// ‖K″‖²
    pub ddk: f64,
    /// ‖K̃′‖² when the antiderivative pair exists
    pub anti_dk: Option<f64>,
}

/// A compactly supported kernel with optional antiderivative pair ΔK̃ = K.
#[derive(Clone)]
pub struct KernelSpec {
    pub name: String,
    pub profile: Arc<dyn Profile>,
    pub antiderivative: Option<Arc<dyn Profile>>,
    pub support_radius: f64,
    pub moment0: f64,
    pub moment1: f64,
    norms: OnceLock<Result<KernelNorms, KernelError>>,
}

impl fmt::Debug for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KernelSpec")
            .field("name", &self.name)
            .field("support_radius", &self.support_radius)
            .field("moment0", &self.moment0)
            .field("moment1", &self.moment1)
            .field("has_antiderivative", &self.antiderivative.is_some())
            .finish()
    }
}

impl KernelSpec {
    /// Wraps a profile and computes its moments by quadrature.
    pub fn new(
        name: impl Into<String>,
        profile: Arc<dyn Profile>,
        support_radius: f64,
    ) -> Result<Self, KernelError> {
        let r = support_radius;
        let p = profile.as_ref();
        let moment0 = integrate(-r, r, |x| p.value(x))?;
        let moment1 = integrate(-r, r, |x| x * p.value(x))?;
        Ok(Self::from_parts(name, profile, None, r, moment0, moment1))
    }

    pub fn from_parts(
        name: impl Into<String>,
        profile: Arc<dyn Profile>,
        antiderivative: Option<Arc<dyn Profile>>,
        support_radius: f64,
        moment0: f64,
        moment1: f64,
    ) -> Self {
        Self {
            name: name.into(),
            profile,
            antiderivative,
            support_radius,
            moment0,
            moment1,
            norms: OnceLock::new(),
        }
    }

    pub fn with_antiderivative(mut self, anti: Arc<dyn Profile>) -> Self {
        self.antiderivative = Some(anti);
        self.norms = OnceLock::new();
        self
    }

    #[inline]
    pub fn derivative(&self, order: usize, x: f64) -> f64 {
        if x.abs() >= self.support_radius {
            0.0
        } else {
            self.profile.derivative(order, x)
        }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        self.derivative(0, x)
    }

    #[inline]
    pub fn deriv1(&self, x: f64) -> f64 {
        self.derivative(1, x)
    }

    #[inline]
    pub fn deriv2(&self, x: f64) -> f64 {
        self.derivative(2, x)
    }

    /// K̃⁽ᵒʳᵈᵉʳ⁾(x), if the pair exists.
    pub fn antiderivative_eval(&self, order: usize, x: f64) -> Option<f64> {
        self.antiderivative.as_ref().map(|a| {
            if x.abs() >= self.support_radius {
                0.0
            } else {
                a.derivative(order, x)
            }
        })
    }

    /// ‖K‖², ‖K′‖², ‖K″‖² and ‖K̃′‖², computed once and cached.
    pub fn norms(&self) -> Result<KernelNorms, KernelError> {
        self.norms
            .get_or_init(|| {
                let r = self.support_radius;
                let p = self.profile.as_ref();
                let k = l2_norm_sq(p, -r, r, 0)?;
                let dk = l2_norm_sq(p, -r, r, 1)?;
                let ddk = l2_norm_sq(p, -r, r, 2)?;
                let anti_dk = match &self.antiderivative {
                    Some(a) => Some(l2_norm_sq(a.as_ref(), -r, r, 1)?),
                    None => None,
                };
                Ok(KernelNorms { k, dk, ddk, anti_dk })
            })
            .clone()
    }

    /// c·K, with the antiderivative scaled alongside.
    pub fn scaled(&self, c: f64) -> KernelSpec {
        let wrap = |p: &Arc<dyn Profile>| -> Arc<dyn Profile> {
            Arc::new(Combination {
                terms: vec![(c, p.clone())],
            })
        };
        KernelSpec::from_parts(
            format!("{}*{c}", self.name),
            wrap(&self.profile),
            self.antiderivative.as_ref().map(wrap),
            self.support_radius,
            c * self.moment0,
            c * self.moment1,
        )
    }

    pub fn has_antiderivative(&self) -> bool {
        self.antiderivative.is_some()
    }
}

fn integrate<F: FnMut(f64) -> f64>(a: f64, b: f64, f: F) -> Result<f64, KernelError> {
    Ok(quadrature::adaptive(a, b, NORM_TOL, NORM_MAX_PANELS, f)?)
}

/// ∫ₐᵇ (f⁽ᵒʳᵈᵉʳ⁾)² by refined composite Gauss–Legendre.
pub fn l2_norm_sq(f: &dyn Profile, a: f64, b: f64, order: usize) -> Result<f64, KernelError> {
    integrate(a, b, |x| {
        let v = f.derivative(order, x);
        v * v
    })
}

/// ‖f⁽ᵒʳᵈᵉʳ⁾‖ on (a, b).
pub fn l2_norm(f: &dyn Profile, a: f64, b: f64, order: usize) -> Result<f64, KernelError> {
    l2_norm_sq(f, a, b, order).map(f64::sqrt)
}

/// K⁽¹⁾ = φ‴ with K̃ = φ′, and K⁽²⁾ = φ′ without a pair.
pub fn make_paper_kernels() -> (KernelSpec, KernelSpec) {
    let bump = Bump::paper();
    let phi_mass = integrate(-1.0, 1.0, |x| bump.value(x)).expect("bump integral converges");
    let k1 = KernelSpec::from_parts(
        "k1",
        Arc::new(BumpDerivative::new(bump.clone(), 3)),
        Some(Arc::new(BumpDerivative::new(bump.clone(), 1))),
        1.0,
        0.0,
        0.0,
    );
    let k2 = KernelSpec::from_parts(
        "k2",
        Arc::new(BumpDerivative::new(bump, 1)),
        None,
        1.0,
        0.0,
        -phi_mass,
    );
    (k1, k2)
}

/// Σ aₙ φ⁽ⁿ⁾ over orders n ≥ 2, paired with K̃ = Σ aₙ φ⁽ⁿ⁻²⁾.
///
/// Every such kernel has vanishing zeroth and first moments.
pub fn bump_combination(name: &str, coeffs: &[(usize, f64)]) -> KernelSpec {
    let bump = Bump::paper();
    let mut terms: Vec<(f64, Arc<dyn Profile>)> = Vec::new();
    let mut anti: Vec<(f64, Arc<dyn Profile>)> = Vec::new();
    let mut all_paired = true;
    for &(order, a) in coeffs {
        terms.push((a, Arc::new(BumpDerivative::new(bump.clone(), order))));
        if order >= 2 {
            anti.push((a, Arc::new(BumpDerivative::new(bump.clone(), order - 2))));
        } else {
            all_paired = false;
        }
    }
    let profile: Arc<dyn Profile> = Arc::new(Combination { terms });
    if all_paired {
        KernelSpec::from_parts(
            name,
            profile,
            Some(Arc::new(Combination { terms: anti })),
            1.0,
            0.0,
            0.0,
        )
    } else {
        KernelSpec::new(name, profile, 1.0).expect("bump combination moments converge")
    }
}

/// K̃ by double integration, provided ∫K = ∫xK = 0.
pub fn antiderivative_pair(k: &KernelSpec) -> Result<Arc<dyn Profile>, KernelError> {
    if k.moment0.abs() >= MOMENT_TOL || k.moment1.abs() >= MOMENT_TOL {
        return Err(KernelError::MomentConditionViolated {
            moment0: k.moment0,
            moment1: k.moment1,
        });
    }
    Ok(Arc::new(NumericAntiderivative::new(
        k.profile.clone(),
        k.support_radius,
    )))
}

/// Resolves "k1", "k2" or "custom:<path>" (two-column x, K(x) table).
pub fn kernel_by_name(name: &str) -> Result<KernelSpec, KernelError> {
    match name {
        "k1" => Ok(make_paper_kernels().0),
        "k2" => Ok(make_paper_kernels().1),
        other => match other.strip_prefix("custom:") {
            Some(path) => load_tabulated(path),
            None => Err(KernelError::UnknownKernel(other.to_string())),
        },
    }
}

/// Reads a whitespace- or comma-separated (x, K(x)) table into a spline kernel.
pub fn load_tabulated(path: impl AsRef<Path>) -> Result<KernelSpec, KernelError> {
    let path = path.as_ref();
    let table_err = |message: String| KernelError::Table {
        path: path.display().to_string(),
        message,
    };
    let text = std::fs::read_to_string(path).map_err(|e| table_err(e.to_string()))?;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty());
        let parse = |s: Option<&str>| -> Result<f64, KernelError> {
            s.ok_or_else(|| table_err(format!("line {}: expected two columns", lineno + 1)))?
                .parse::<f64>()
                .map_err(|e| table_err(format!("line {}: {e}", lineno + 1)))
        };
        xs.push(parse(it.next())?);
        ys.push(parse(it.next())?);
    }
    let spline = Spline::new(xs, ys).map_err(table_err)?;
    let (lo, hi) = spline.range();
    let radius = lo.abs().max(hi.abs());
    let name = format!("custom:{}", path.display());
    let spec = KernelSpec::new(name, Arc::new(spline), radius)?;
    match antiderivative_pair(&spec) {
        Ok(anti) => Ok(spec.with_antiderivative(anti)),
        Err(KernelError::MomentConditionViolated { .. }) => Ok(spec),
        Err(e) => Err(e),
    }
}

/// K_{δ,x₀}(x) = δ^{−1/2} K((x − x₀)/δ).
#[derive(Debug, Clone)]
pub struct RescaledProbe {
    pub kernel: KernelSpec,
    pub delta: f64,
    /// Center after the boundary shift.
    pub x0: f64,
    /// Center as requested by the caller.
    pub requested_x0: f64,
}

impl RescaledProbe {
    /// Probe without any admissibility checks; meant for whole-line computations.
    pub fn unchecked(kernel: KernelSpec, delta: f64, x0: f64) -> Self {
        Self {
            kernel,
            delta,
            x0,
            requested_x0: x0,
        }
    }

    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        self.kernel.eval((x - self.x0) / self.delta) / self.delta.sqrt()
    }

    /// First derivative in x.
    #[inline]
    pub fn gradient(&self, x: f64) -> f64 {
        self.kernel.deriv1((x - self.x0) / self.delta) / (self.delta * self.delta.sqrt())
    }

    /// Δ-probe: δ^{−2}·δ^{−1/2} K″((x − x₀)/δ).
    #[inline]
    pub fn laplacian(&self, x: f64) -> f64 {
        self.kernel.deriv2((x - self.x0) / self.delta) / (self.delta * self.delta * self.delta.sqrt())
    }

    /// Rescaled antiderivative δ^{−1/2}K̃((x − x₀)/δ), if it exists.
    pub fn antiderivative(&self, x: f64) -> Option<f64> {
        self.kernel
            .antiderivative_eval(0, (x - self.x0) / self.delta)
            .map(|v| v / self.delta.sqrt())
    }

    pub fn support(&self) -> (f64, f64) {
        let r = self.kernel.support_radius * self.delta;
        (self.x0 - r, self.x0 + r)
    }
}

/// Rescales `k` to resolution `delta` around `x0`, moving the center inward
/// to `delta` or `1 − delta` when the probe would leave (0, 1).
pub fn rescale(k: &KernelSpec, delta: f64, x0: f64) -> Result<RescaledProbe, KernelError> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(KernelError::InvalidScale(delta));
    }
    if !(x0 > 0.0 && x0 < 1.0) {
        return Err(KernelError::InvalidCenter(x0));
    }
    let half = delta * k.support_radius;
    if half >= 0.5 {
        return Err(KernelError::DomainTooSmall { delta });
    }
    let center = x0.clamp(half, 1.0 - half);
    Ok(RescaledProbe {
        kernel: k.clone(),
        delta,
        x0: center,
        requested_x0: x0,
    })
}
