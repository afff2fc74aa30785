//! Limit constants of the estimators: the Ψ functional, biases μ and
//! variances Σ, confidence intervals and the variance ordering.
//!
//! Heat-semigroup actions are carried out in Fourier space, where e^{sΔ}
//! is multiplication by e^{−sω²}. Transforms are computed by direct
//! Gauss–Legendre quadrature over the compact support.

use std::f64::consts::PI;

use thiserror::Error;

use crate::fd::CoefficientField;
use crate::kernels::{KernelError, KernelSpec};
use crate::quadrature::GaussLegendre;

/// Upper end of the ω grid.
pub const OMEGA_MAX: f64 = 400.0;
const OMEGA_MIN: f64 = 1e-3;
const LOG_PANELS: usize = 255;
/// Relative Parseval tolerance every table must meet.
pub const PARSEVAL_TOL: f64 = 1e-6;
/// |ℱz(0)| above this fraction of ∫|z| counts as a nonzero mean.
pub const ZERO_MODE_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AsymptoticsError {
    #[error("ℱz(0) = {value:e} is not zero; Ψ diverges at ω = 0")]
    ZeroModeDivergence { value: f64 },
    #[error("Parseval check failed: relative error {0:e}")]
    ParsevalViolated(f64),
    #[error("the two bias routes disagree: general {general:e} vs shortcut {shortcut:e}")]
    InternalInconsistency { general: f64, shortcut: f64 },
    #[error("the two Σ^P routes disagree: {a:e} vs {b:e}")]
    RouteDisagreement { a: f64, b: f64 },
    #[error("Ψ(ΔK, ΔK) = {0:e} is not positive")]
    DegeneratePsi(f64),
    #[error("variance ordering violated: Σ^P = {sigma_p:e}, mid = {mid:e}, Σ^A = {sigma_a:e}")]
    OrderingViolated { sigma_p: f64, mid: f64, sigma_a: f64 },
    #[error("confidence level parameter must lie in (0, 1], got {0}")]
    InvalidLevel(f64),
    #[error("interval needs a positive estimate, got {0}")]
    NonPositiveEstimate(f64),
    #[error("kernel `{0}` has no antiderivative pair")]
    MissingAntiderivative(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// Coefficients of the model frozen at x₀.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalCoefficients {
    pub theta0: f64,
    pub grad_theta0: f64,
    pub a0: f64,
    pub sigma0: f64,
    pub grad_sigma2_0: f64,
}

impl LocalCoefficients {
    pub fn constant(theta: f64, sigma: f64) -> Self {
        Self {
            theta0: theta,
            grad_theta0: 0.0,
            a0: 0.0,
            sigma0: sigma,
            grad_sigma2_0: 0.0,
        }
    }

    pub fn from_field(field: &CoefficientField, x0: f64) -> Self {
        Self {
            theta0: field.theta.value(x0),
            grad_theta0: field.theta.gradient(x0),
            a0: field.a.value(x0),
            sigma0: field.sigma.value(x0),
            grad_sigma2_0: field.grad_sigma2(x0),
        }
    }

    /// ∇(σ²/θ)(x₀)
    pub fn grad_sigma2_over_theta(&self) -> f64 {
        let s2 = self.sigma0 * self.sigma0;
        (self.grad_sigma2_0 * self.theta0 - s2 * self.grad_theta0) / (self.theta0 * self.theta0)
    }
}

/// Half-line ω grid shared by all tables: one panel on [0, 10⁻³] and 255
/// geometric panels up to 400, 16 Gauss–Legendre nodes each.
fn standard_grid() -> &'static (Vec<f64>, Vec<f64>) {
    use std::sync::OnceLock;
    static GRID: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    GRID.get_or_init(|| {
        let rule = GaussLegendre::standard();
        let mut xs = Vec::with_capacity(16 * (LOG_PANELS + 1));
        let mut ws = Vec::with_capacity(16 * (LOG_PANELS + 1));
        rule.push_panel(0.0, OMEGA_MIN, &mut xs, &mut ws);
        let ratio = (OMEGA_MAX / OMEGA_MIN).ln() / LOG_PANELS as f64;
        for i in 0..LOG_PANELS {
            let lo = OMEGA_MIN * (ratio * i as f64).exp();
            let hi = OMEGA_MIN * (ratio * (i + 1) as f64).exp();
            rule.push_panel(lo, hi, &mut xs, &mut ws);
        }
        (xs, ws)
    })
}

/// Samples of ℱz(ω) = ∫ z(x)e^{−iωx} dx for a real, compactly supported z.
#[derive(Debug, Clone)]
pub struct FourierTable {
    pub omega: Vec<f64>,
    /// Quadrature weights on the half line.
    pub weight: Vec<f64>,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
    /// ℱz(0) = ∫z
    pub zero_mode: f64,
    /// ∫|z|
    pub abs_mass: f64,
    /// ‖z‖² computed in x-space
    pub l2_sq: f64,
    pub parseval_rel_err: f64,
}

impl FourierTable {
    /// Table on the standard grid; fails if Parseval is off by more than 1e−6.
    pub fn new(z: impl Fn(f64) -> f64, radius: f64) -> Result<Self, AsymptoticsError> {
        let (om, w) = standard_grid();
        let t = Self::on_nodes(z, radius, om.clone(), w.clone());
        if !(t.parseval_rel_err <= PARSEVAL_TOL) {
            return Err(AsymptoticsError::ParsevalViolated(t.parseval_rel_err));
        }
        Ok(t)
    }

    pub fn for_kernel(k: &KernelSpec, order: usize) -> Result<Self, AsymptoticsError> {
        Self::new(|x| k.derivative(order, x), k.support_radius)
    }

    /// Table at caller-supplied nodes (no Parseval enforcement).
    pub fn on_nodes(z: impl Fn(f64) -> f64, radius: f64, omega: Vec<f64>, weight: Vec<f64>) -> Self {
        let rule = GaussLegendre::standard();
        // nested x-grids with 32·2^L panels; each ω uses the coarsest grid whose
        // panels are no wider than π/(4ω)
        let mut levels: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
        let max_omega = omega.iter().cloned().fold(0.0, f64::max);
        let mut panels = 32usize;
        loop {
            let mut xs = Vec::new();
            let mut ws = Vec::new();
            let width = 2.0 * radius / panels as f64;
            for p in 0..panels {
                let lo = -radius + p as f64 * width;
                rule.push_panel(lo, lo + width, &mut xs, &mut ws);
            }
            let vals: Vec<f64> = xs.iter().map(|&x| z(x)).collect();
            let wz: Vec<f64> = vals.iter().zip(&ws).map(|(v, w)| v * w).collect();
            levels.push((xs, wz));
            if width * max_omega <= PI / 4.0 {
                break;
            }
            panels *= 2;
        }
        let finest = levels.last().unwrap();
        let zero_mode: f64 = finest.1.iter().sum();
        // ∫|z| and ‖z‖² on the finest grid need the plain weights back
        let (mut abs_mass, mut l2_sq) = (0.0, 0.0);
        {
            let n = finest.0.len();
            let width = 2.0 * radius / (n / 16) as f64;
            let half = 0.5 * width;
            for (i, &wz) in finest.1.iter().enumerate() {
                let w = rule.weights[i % 16] * half;
                let v = wz / w;
                abs_mass += w * v.abs();
                l2_sq += w * v * v;
            }
        }
        let mut re = Vec::with_capacity(omega.len());
        let mut im = Vec::with_capacity(omega.len());
        for &om in &omega {
            let level = levels
                .iter()
                .find(|(xs, _)| {
                    let width = 2.0 * radius / (xs.len() / 16) as f64;
                    width * om <= PI / 4.0
                })
                .unwrap_or(finest);
            let (mut c, mut s) = (0.0, 0.0);
            for (&x, &wz) in level.0.iter().zip(&level.1) {
                let (sn, cs) = (om * x).sin_cos();
                c += wz * cs;
                s += wz * sn;
            }
            re.push(c);
            im.push(-s);
        }
        let mut t = Self {
            omega,
            weight,
            re,
            im,
            zero_mode,
            abs_mass,
            l2_sq,
            parseval_rel_err: f64::NAN,
        };
        let parseval = t.integrate_line(|_, re, im| re * re + im * im) / (2.0 * PI);
        t.parseval_rel_err = if l2_sq > 0.0 {
            (parseval - l2_sq).abs() / l2_sq
        } else {
            parseval.abs()
        };
        t
    }

    /// ∫_ℝ f(ω, ℱz) dω for integrands even in ω (true for |ℱz|²-type terms of
    /// real z).
    pub fn integrate_line(&self, f: impl Fn(f64, f64, f64) -> f64) -> f64 {
        2.0 * self
            .omega
            .iter()
            .zip(&self.weight)
            .zip(self.re.iter().zip(&self.im))
            .map(|((&om, &w), (&re, &im))| w * f(om, re, im))
            .sum::<f64>()
    }

    fn check_zero_mode(&self) -> Result<(), AsymptoticsError> {
        if self.zero_mode.abs() > ZERO_MODE_TOL * self.abs_mass {
            return Err(AsymptoticsError::ZeroModeDivergence {
                value: self.zero_mode,
            });
        }
        Ok(())
    }
}

/// Ψ(z₁, z₂) = σ₀²(1/2π)∫ ℱz₁·conj(ℱz₂)/(2ω²) dω for B₀ = σ₀·I.
pub fn psi(z1: &FourierTable, z2: &FourierTable, sigma0: f64) -> Result<f64, AsymptoticsError> {
    z1.check_zero_mode()?;
    z2.check_zero_mode()?;
    let integral = 2.0
        * z1
            .omega
            .iter()
            .zip(&z1.weight)
            .enumerate()
            .map(|(i, (&om, &w))| w * (z1.re[i] * z2.re[i] + z1.im[i] * z2.im[i]) / (2.0 * om * om))
            .sum::<f64>();
    Ok(sigma0 * sigma0 * integral / (2.0 * PI))
}

/// Ψ(ΔK, ΔK) through the Fourier route.
pub fn psi_laplacian(k: &KernelSpec, sigma0: f64) -> Result<f64, AsymptoticsError> {
    let t = FourierTable::for_kernel(k, 2)?;
    psi(&t, &t, sigma0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasA {
    pub general: f64,
    pub shortcut: f64,
}

/// μ^A by the Ψ route and by the multiplication-operator shortcut
/// ∫∇θ(x₀)·x|K′|² / ‖K′‖².
pub fn mu_a(k: &KernelSpec, local: &LocalCoefficients) -> Result<BiasA, AsymptoticsError> {
    let g = local.grad_theta0;
    let a = local.a0;
    let r = k.support_radius;
    let lap = FourierTable::for_kernel(k, 2)?;
    // β = Δ(g·x·K) − (g − a)K′ = g(K′ + xK″) + aK′
    let beta = FourierTable::new(
        |x| g * (k.deriv1(x) + x * k.deriv2(x)) + a * k.deriv1(x),
        r,
    )?;
    let denom = psi(&lap, &lap, local.sigma0)?;
    if !(denom > 0.0) {
        return Err(AsymptoticsError::DegeneratePsi(denom));
    }
    let general = psi(&lap, &beta, local.sigma0)? / denom;
    let norms = k.norms()?;
    let weighted = crate::quadrature::adaptive(-r, r, 1e-12, 1 << 14, |x| g * x * k.deriv1(x).powi(2))
        .map_err(KernelError::from)?;
    let shortcut = weighted / norms.dk;
    let scale = general.abs().max(shortcut.abs()).max(g.abs() * 1e-3);
    if (general - shortcut).abs() > 1e-5 * scale {
        return Err(AsymptoticsError::InternalInconsistency { general, shortcut });
    }
    Ok(BiasA { general, shortcut })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaA {
    /// 2‖K‖²/(T‖K′‖²)
    pub closed: f64,
    /// σ₀²‖K‖²/(T·Ψ(ΔK, ΔK))
    pub generic: f64,
}

pub fn sigma_a(k: &KernelSpec, local: &LocalCoefficients, horizon: f64) -> Result<SigmaA, AsymptoticsError> {
    let norms = k.norms()?;
    let psi_val = psi_laplacian(k, local.sigma0)?;
    if !(psi_val > 0.0) {
        return Err(AsymptoticsError::DegeneratePsi(psi_val));
    }
    Ok(SigmaA {
        closed: 2.0 * norms.k / (horizon * norms.dk),
        generic: local.sigma0 * local.sigma0 * norms.k / (horizon * psi_val),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProxyConstants {
    pub mu1: f64,
    pub mu2: f64,
    pub sigma_p: f64,
    /// Σ^P by the s-quadrature route
    pub sigma_p_s_route: f64,
    /// Σ^P by the tensor double integral
    pub sigma_p_tensor_route: f64,
}

/// g(s) = (1/2π)∫ω²e^{−sω²}|ℱK̃|² dω.
fn heat_profile(anti: &FourierTable, s: f64) -> f64 {
    anti.integrate_line(|om, re, im| om * om * (-s * om * om).exp() * (re * re + im * im)) / (2.0 * PI)
}

/// ∫₀^∞ g(s)² ds by trapezoid in u = ln s on [−12, 8] with 2000 nodes plus
/// power-law tails fitted at both ends.
fn s_route(anti: &FourierTable) -> f64 {
    let (u0, u1, n) = (-12.0f64, 8.0f64, 2000usize);
    let du = (u1 - u0) / (n - 1) as f64;
    let g: Vec<f64> = (0..n).map(|i| heat_profile(anti, (u0 + i as f64 * du).exp())).collect();
    let mut body = 0.0;
    for (i, gi) in g.iter().enumerate() {
        let s = (u0 + i as f64 * du).exp();
        let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        body += w * gi * gi * s;
    }
    body *= du;
    // small s: g is flat to leading order, so ∫₀^{s₀} g² ≈ g(s₀)²·s₀ with the
    // local slope folded in
    let s0 = u0.exp();
    let p0 = -((g[1] / g[0]).ln()) / du;
    let head = g[0] * g[0] * s0 / (1.0 - 2.0 * p0);
    // large s: g ~ s^{−p}, ∫_{s₁}^∞ g² = g(s₁)²·s₁/(2p − 1)
    let s1 = u1.exp();
    let p1 = -((g[n - 1] / g[n - 2]).ln()) / du;
    let tail = if 2.0 * p1 > 1.0 {
        g[n - 1] * g[n - 1] * s1 / (2.0 * p1 - 1.0)
    } else {
        f64::INFINITY
    };
    head + body + tail
}

/// (1/2π)²∬ω²ν²|ℱK̃(ω)|²|ℱK̃(ν)|²/(ω² + ν²) dω dν.
fn tensor_route(anti: &FourierTable) -> f64 {
    let a: Vec<f64> = anti
        .omega
        .iter()
        .zip(&anti.weight)
        .enumerate()
        .map(|(i, (&om, &w))| w * om * om * (anti.re[i].powi(2) + anti.im[i].powi(2)))
        .collect();
    let o2: Vec<f64> = anti.omega.iter().map(|o| o * o).collect();
    let mut acc = 0.0;
    for (i, ai) in a.iter().enumerate() {
        if *ai == 0.0 {
            continue;
        }
        let mut row = 0.0;
        for (j, aj) in a.iter().enumerate() {
            let d = o2[i] + o2[j];
            if d > 0.0 {
                row += aj / d;
            }
        }
        acc += ai * row;
    }
    // four quadrants of the even integrand
    4.0 * acc / (4.0 * PI * PI)
}

/// μ₁^P, μ₂^P and Σ^P (both routes, required to agree to 1e−5).
pub fn proxy_constants(
    k: &KernelSpec,
    local: &LocalCoefficients,
    horizon: f64,
) -> Result<ProxyConstants, AsymptoticsError> {
    let anti = k
        .antiderivative
        .as_ref()
        .ok_or_else(|| AsymptoticsError::MissingAntiderivative(k.name.clone()))?;
    let r = k.support_radius;
    let norms = k.norms()?;
    let anti_dk = norms.anti_dk.expect("antiderivative present");
    let s2 = local.sigma0 * local.sigma0;
    let integrate = |f: &dyn Fn(f64) -> f64| {
        crate::quadrature::adaptive(-r, r, 1e-12, 1 << 14, f).map_err(KernelError::from)
    };
    let gq = local.grad_sigma2_over_theta();
    let mu1 = if gq == 0.0 {
        0.0
    } else {
        let m = integrate(&|x| gq * x * anti.derivative(1, x).powi(2))?;
        -(local.theta0 * local.theta0 / s2) * m / anti_dk
    };
    let gs = local.grad_sigma2_0;
    let mu2 = if gs == 0.0 {
        0.0
    } else {
        let m = integrate(&|x| gs * x * k.eval(x).powi(2))?;
        (local.theta0 / s2) * m / norms.k
    };
    let table = FourierTable::new(|x| anti.derivative(0, x), r)?;
    let scale = 4.0 / (horizon * anti_dk * anti_dk);
    let a = scale * s_route(&table);
    let b = scale * tensor_route(&table);
    if (a - b).abs() > 1e-5 * a.abs().max(b.abs()) {
        return Err(AsymptoticsError::RouteDisagreement { a, b });
    }
    Ok(ProxyConstants {
        mu1,
        mu2,
        sigma_p: a,
        sigma_p_s_route: a,
        sigma_p_tensor_route: b,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceOrdering {
    pub sigma_p: f64,
    /// 2‖K̃′‖²/(T‖K‖²)
    pub mid: f64,
    pub sigma_a: f64,
    pub ordered: bool,
}

impl VarianceOrdering {
    /// Σ^P/Σ^A, the efficiency loss of the proxy estimator.
    pub fn ratio(&self) -> f64 {
        self.sigma_p / self.sigma_a
    }
}

/// Σ^P ≥ 2‖K̃′‖²/(T‖K‖²) ≥ Σ^A; a violation signals a quadrature defect.
pub fn variance_ordering(
    k: &KernelSpec,
    local: &LocalCoefficients,
    horizon: f64,
) -> Result<VarianceOrdering, AsymptoticsError> {
    let norms = k.norms()?;
    let anti_dk = norms
        .anti_dk
        .ok_or_else(|| AsymptoticsError::MissingAntiderivative(k.name.clone()))?;
    let sigma_p = proxy_constants(k, local, horizon)?.sigma_p;
    let mid = 2.0 * anti_dk / (horizon * norms.k);
    let sigma_a = sigma_a(k, local, horizon)?.closed;
    let ordered = sigma_p >= mid && mid >= sigma_a;
    if !ordered {
        return Err(AsymptoticsError::OrderingViolated { sigma_p, mid, sigma_a });
    }
    Ok(VarianceOrdering {
        sigma_p,
        mid,
        sigma_a,
        ordered,
    })
}

/// Stand-in for ‖K̃′‖² when K has no compactly supported pair:
/// (1/2π)∫_{|ω|≥π} |ℱK|²/ω² dω, in kernel coordinates.
pub fn proxy_norm_standin(k: &KernelSpec) -> Result<f64, AsymptoticsError> {
    let rule = GaussLegendre::standard();
    let mut om = Vec::new();
    let mut w = Vec::new();
    let panels = 512;
    let ratio = (OMEGA_MAX / PI).ln() / panels as f64;
    for i in 0..panels {
        let lo = PI * (ratio * i as f64).exp();
        let hi = PI * (ratio * (i + 1) as f64).exp();
        rule.push_panel(lo, hi, &mut om, &mut w);
    }
    let t = FourierTable::on_nodes(|x| k.eval(x), k.support_radius, om, w);
    Ok(t.integrate_line(|om, re, im| (re * re + im * im) / (om * om)) / (2.0 * PI))
}

/// σ²(1/2π)∫|ℱK|²(e^{−θω²|t−t′|} − e^{−θω²(t+t′)})/(2θω²) dω, the covariance
/// of the whole-line stochastic heat equation tested against K.
pub fn whole_line_covariance(
    k: &KernelSpec,
    theta: f64,
    sigma: f64,
    t: f64,
    t_prime: f64,
) -> Result<f64, AsymptoticsError> {
    let table = FourierTable::for_kernel(k, 0)?;
    let gap = (t - t_prime).abs();
    let sum = t + t_prime;
    let integral = table.integrate_line(|om, re, im| {
        let o2 = om * om;
        let bracket = if theta * o2 * sum < 1e-8 {
            // expansion of the difference of exponentials near ω = 0
            theta * o2 * (sum - gap)
        } else {
            (-theta * o2 * gap).exp() - (-theta * o2 * sum).exp()
        };
        (re * re + im * im) * bracket / (2.0 * theta * o2)
    });
    Ok(sigma * sigma * integral / (2.0 * PI))
}

/// Standard normal quantile: Acklam's rational approximation polished by one
/// Halley step on the erfc residual.
pub fn normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    if p == 0.5 {
        return 0.0;
    }
    const A: [f64; 6] = [
        -3.969683028665376e1,
        2.209460984245205e2,
        -2.759285104469687e2,
        1.383577518672690e2,
        -3.066479806614716e1,
        2.506628277459239,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e1,
        1.615858368580409e2,
        -1.556989798598866e2,
        6.680131188771972e1,
        -1.328068155288572e1,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-3,
        -3.223964580411365e-1,
        -2.400758277161838,
        -2.549732539343734,
        4.374664141464968,
        2.938163982698783,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-3,
        3.224671290700398e-1,
        2.445134137142996,
        3.754408661907416,
    ];
    const P_LOW: f64 = 0.02425;
    let tail = |q: f64| {
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    let mut x = if p < P_LOW {
        tail((-2.0 * p.ln()).sqrt())
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -tail((-2.0 * (1.0 - p).ln()).sqrt())
    };
    for _ in 0..2 {
        let e = 0.5 * libm::erfc(-x / std::f64::consts::SQRT_2) - p;
        let u = e * (2.0 * PI).sqrt() * (0.5 * x * x).exp();
        x -= u / (1.0 + 0.5 * x * u);
    }
    x
}

/// [θ̂ − δ√(θ̂Σ)q, θ̂ + δ√(θ̂Σ)q] with q the (1 − ᾱ/2)-quantile.
///
/// ᾱ = 1 gives the zero-width interval at θ̂.
pub fn confidence_interval(
    theta_hat: f64,
    delta: f64,
    sigma_const: f64,
    alpha_bar: f64,
) -> Result<(f64, f64), AsymptoticsError> {
    if !(alpha_bar > 0.0 && alpha_bar <= 1.0) {
        return Err(AsymptoticsError::InvalidLevel(alpha_bar));
    }
    if !(theta_hat > 0.0) {
        return Err(AsymptoticsError::NonPositiveEstimate(theta_hat));
    }
    let q = normal_quantile(1.0 - 0.5 * alpha_bar);
    let half = delta * (theta_hat * sigma_const).sqrt() * q;
    Ok((theta_hat - half, theta_hat + half))
}

/// One row of the constants table.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantsRow {
    pub kernel: String,
    pub mu_a: f64,
    pub sigma_a: f64,
    pub mu1_p: Option<f64>,
    pub mu2_p: Option<f64>,
    pub sigma_p: Option<f64>,
    pub ordering_ratio: Option<f64>,
}

pub fn constants_row(
    k: &KernelSpec,
    local: &LocalCoefficients,
    horizon: f64,
) -> Result<ConstantsRow, AsymptoticsError> {
    let mu = mu_a(k, local)?.general;
    let sa = sigma_a(k, local, horizon)?.closed;
    let (mu1, mu2, sp, ratio) = if k.has_antiderivative() {
        let pc = proxy_constants(k, local, horizon)?;
        let ord = variance_ordering(k, local, horizon)?;
        (Some(pc.mu1), Some(pc.mu2), Some(pc.sigma_p), Some(ord.ratio()))
    } else {
        (None, None, None, None)
    };
    Ok(ConstantsRow {
        kernel: k.name.clone(),
        mu_a: mu,
        sigma_a: sa,
        mu1_p: mu1,
        mu2_p: mu2,
        sigma_p: sp,
        ordering_ratio: ratio,
    })
}
