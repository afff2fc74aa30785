//! Exact Gaussian oracle for the constant-coefficient model dX = θΔX dt + σ dW
//! on (0, 1) with Dirichlet boundaries.
//!
//! In the sine basis e_k = √2 sin(kπx) every mode is an independent
//! Ornstein–Uhlenbeck process with rate λ_k = θπ²k², so covariances of probe
//! measurements are explicit series and paths can be sampled without any
//! time-discretisation error.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use rand_xoshiro::Xoshiro256PlusPlus;
use thiserror::Error;

use crate::fd::Recording;
use crate::kernels::{KernelError, KernelSpec, RescaledProbe};
use crate::measurements::{
    analytic_variations, MeasurementError, MeasurementPath, PathFunctionals, PathMeta,
};
use crate::quadrature::{self, GaussLegendre};

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("mode truncation insufficient: relative tail {tail:e} exceeds {tol:e} at k_max = {k_max}")]
    TruncationInsufficient { tail: f64, tol: f64, k_max: usize },
    #[error("model needs θ > 0 and σ ≥ 0, got θ = {theta}, σ = {sigma}")]
    InvalidParameters { theta: f64, sigma: f64 },
    #[error("no probes given")]
    NoProbes,
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Measurement(#[from] MeasurementError),
    #[error("whole-line limit: {0}")]
    Limit(String),
}

/// Which mode truncation to use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Truncation {
    Fixed(usize),
    /// Smallest k_max whose relative variance tail is below `tol` for probe
    /// values and below `laplacian_tol` for Δ-probe values, capped at 16/δ.
    Auto { tol: f64, laplacian_tol: f64 },
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation::Auto {
            tol: 1e-10,
            laplacian_tol: 1e-6,
        }
    }
}

/// Starting law of the modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Start {
    Zero,
    Stationary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObsKind {
    Value,
    Laplacian,
}

/// ⟨X(t), probe⟩ or ⟨X(t), Δ-probe⟩ for one registered probe.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Observable {
    pub probe: usize,
    pub kind: ObsKind,
}

impl Observable {
    pub fn value(probe: usize) -> Self {
        Self {
            probe,
            kind: ObsKind::Value,
        }
    }

    pub fn laplacian(probe: usize) -> Self {
        Self {
            probe,
            kind: ObsKind::Laplacian,
        }
    }
}

/// ∫ f(x)·√2 sin(kπx) dx over `range` for k = 1..=k_max.
pub fn sine_coefficients(
    f: impl Fn(f64) -> f64,
    range: (f64, f64),
    k_max: usize,
) -> Result<Vec<f64>, KernelError> {
    let (lo, hi) = range;
    // at most one wavelength per panel, and never fewer than 32 panels
    let panels = ((k_max as f64 * (hi - lo)).ceil() as usize).max(32);
    let (xs, ws) = quadrature::composite_nodes(lo, hi, panels);
    let mut out = vec![0.0; k_max];
    for (x, w) in xs.iter().zip(&ws) {
        let fx = f(*x) * w * std::f64::consts::SQRT_2;
        if fx == 0.0 {
            continue;
        }
        // sin((k+1)a) = 2cos(a)sin(ka) − sin((k−1)a)
        let a = PI * x;
        let two_cos = 2.0 * a.cos();
        let (mut prev, mut cur) = (0.0, a.sin());
        for c in out.iter_mut() {
            *c += fx * cur;
            let next = two_cos * cur - prev;
            prev = cur;
            cur = next;
        }
    }
    Ok(out)
}

/// c_k = ⟨probe, e_k⟩ for k = 1..=k_max.
pub fn probe_coefficients(probe: &RescaledProbe, k_max: usize) -> Result<Vec<f64>, KernelError> {
    let (lo, hi) = probe.support();
    sine_coefficients(|x| probe.value(x), (lo.max(0.0), hi.min(1.0)), k_max)
}

/// ⟨Δ-probe, e_k⟩ computed by quadrature rather than by −π²k²c_k.
pub fn laplacian_coefficients(probe: &RescaledProbe, k_max: usize) -> Result<Vec<f64>, KernelError> {
    let (lo, hi) = probe.support();
    sine_coefficients(|x| probe.laplacian(x), (lo.max(0.0), hi.min(1.0)), k_max)
}

#[derive(Debug, Clone)]
pub struct OracleModel {
    pub theta: f64,
    pub sigma: f64,
    pub k_max: usize,
    pub probes: Vec<RescaledProbe>,
    /// c_k per probe, k = 1..=k_max.
    coeffs: Vec<Vec<f64>>,
    lambdas: Vec<f64>,
    /// Whether some probe support reaches the boundary.
    pub touches_boundary: bool,
}

impl OracleModel {
    pub fn new(
        theta: f64,
        sigma: f64,
        probes: Vec<RescaledProbe>,
        truncation: Truncation,
    ) -> Result<Self, OracleError> {
        if !(theta > 0.0) || !(sigma >= 0.0) {
            return Err(OracleError::InvalidParameters { theta, sigma });
        }
        if probes.is_empty() {
            return Err(OracleError::NoProbes);
        }
        let touches_boundary = probes.iter().any(|p| {
            let (lo, hi) = p.support();
            lo <= 0.0 || hi >= 1.0
        });
        let k_max = match truncation {
            Truncation::Fixed(k) => k.max(1),
            Truncation::Auto { tol, laplacian_tol } => auto_truncation(&probes, tol, laplacian_tol)?,
        };
        let coeffs = probes
            .iter()
            .map(|p| probe_coefficients(p, k_max))
            .collect::<Result<Vec<_>, _>>()?;
        let lambdas = (1..=k_max)
            .map(|k| theta * PI * PI * (k * k) as f64)
            .collect();
        Ok(Self {
            theta,
            sigma,
            k_max,
            probes,
            coeffs,
            lambdas,
            touches_boundary,
        })
    }

    /// λ_k = θπ²k² for k = 1..=k_max.
    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn coefficients(&self, probe: usize) -> &[f64] {
        &self.coeffs[probe]
    }

    #[inline]
    fn weight(&self, obs: Observable, i: usize) -> f64 {
        let c = self.coeffs[obs.probe][i];
        match obs.kind {
            ObsKind::Value => c,
            ObsKind::Laplacian => {
                let k = (i + 1) as f64;
                -PI * PI * k * k * c
            }
        }
    }

    /// Cov(a(t), b(s)).
    pub fn covariance(&self, t: f64, s: f64, a: Observable, b: Observable, start: Start) -> f64 {
        let s2 = self.sigma * self.sigma;
        let gap = (t - s).abs();
        let sum = t + s;
        let mut acc = 0.0;
        for (i, &lam) in self.lambdas.iter().enumerate() {
            let w = self.weight(a, i) * self.weight(b, i);
            if w == 0.0 {
                continue;
            }
            let mut e = (-lam * gap).exp();
            if start == Start::Zero {
                e -= (-lam * sum).exp();
            }
            acc += w * e / (2.0 * lam);
        }
        s2 * acc
    }

    /// Cov(a(t), b(t)) under the stationary law.
    pub fn stationary_covariance(&self, a: Observable, b: Observable) -> f64 {
        self.covariance(0.0, 0.0, a, b, Start::Stationary)
    }

    /// Relative share of the stationary variance of `obs` carried by modes above k.
    pub fn variance_tail(&self, obs: Observable, k: usize) -> f64 {
        let terms: Vec<f64> = (0..self.k_max)
            .map(|i| self.weight(obs, i).powi(2) / self.lambdas[i])
            .collect();
        let total: f64 = terms.iter().sum();
        terms[k.min(self.k_max)..].iter().sum::<f64>() / total
    }

    /// One path per probe sampled from exact OU transitions on a uniform grid.
    pub fn simulate_exact(
        &self,
        dt: f64,
        n: usize,
        seed: u64,
        start: Start,
        recording: Recording,
    ) -> Result<Vec<MeasurementPath>, OracleError> {
        let np = self.probes.len();
        // modes with no weight in any probe do not need to be sampled
        let scale = self
            .coeffs
            .iter()
            .flat_map(|c| c.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()));
        let active: Vec<usize> = (0..self.k_max)
            .filter(|&i| self.coeffs.iter().any(|c| c[i].abs() > 1e-14 * scale))
            .collect();
        let decay: Vec<f64> = active.iter().map(|&i| (-self.lambdas[i] * dt).exp()).collect();
        let innov: Vec<f64> = active
            .iter()
            .zip(&decay)
            .map(|(&i, a)| self.sigma * ((1.0 - a * a) / (2.0 * self.lambdas[i])).sqrt())
            .collect();
        // contiguous weight rows per probe, value then Laplacian
        let weights: Vec<(Vec<f64>, Vec<f64>)> = (0..np)
            .map(|p| {
                (
                    active.iter().map(|&i| self.weight(Observable::value(p), i)).collect(),
                    active.iter().map(|&i| self.weight(Observable::laplacian(p), i)).collect(),
                )
            })
            .collect();

        let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
        let mut modes: Vec<f64> = match start {
            Start::Zero => vec![0.0; active.len()],
            Start::Stationary => active
                .iter()
                .map(|&i| {
                    let xi: f64 = StandardNormal.sample(&mut rng);
                    self.sigma * xi / (2.0 * self.lambdas[i]).sqrt()
                })
                .collect(),
        };
        let keep = recording == Recording::Full;
        let mut obs = vec![(0.0, 0.0); np];
        let assemble = |modes: &[f64], obs: &mut [(f64, f64)]| {
            for (o, (c, d)) in obs.iter_mut().zip(&weights) {
                *o = (dot(c, modes), dot(d, modes));
            }
        };
        assemble(&modes, &mut obs);
        let mut sums: Vec<PathFunctionals> = obs.iter().map(|&(x, y)| PathFunctionals::start(x, y)).collect();
        let mut series: Vec<(Vec<f64>, Vec<f64>)> = obs
            .iter()
            .map(|&(x, y)| {
                if keep {
                    let mut xs = Vec::with_capacity(n + 1);
                    let mut ys = Vec::with_capacity(n + 1);
                    xs.push(x);
                    ys.push(y);
                    (xs, ys)
                } else {
                    (Vec::new(), Vec::new())
                }
            })
            .collect();
        let mut xi = vec![0.0; modes.len()];
        for _ in 0..n {
            xi.iter_mut().for_each(|z| *z = StandardNormal.sample(&mut rng));
            for (((x, a), s), z) in modes.iter_mut().zip(&decay).zip(&innov).zip(&xi) {
                *x = a * *x + s * z;
            }
            assemble(&modes, &mut obs);
            for ((acc, &(x, y)), (xs, ys)) in sums.iter_mut().zip(&obs).zip(series.iter_mut()) {
                acc.push(x, y);
                if keep {
                    xs.push(x);
                    ys.push(y);
                }
            }
        }

        let horizon = dt * n as f64;
        let sigma = self.sigma;
        self.probes
            .iter()
            .zip(sums)
            .zip(series)
            .map(|((probe, acc), (xs, ys))| {
                let (qv, cv) = analytic_variations(probe, |_| sigma, horizon)?;
                let meta = PathMeta {
                    delta: probe.delta,
                    x0: probe.x0,
                    dt,
                    horizon,
                    seed,
                    kernel: probe.kernel.name.clone(),
                    qv_analytic: Some(qv),
                    cv_analytic: Some(cv),
                };
                Ok(if keep {
                    MeasurementPath::new(meta, xs, ys)?
                } else {
                    MeasurementPath::streamed(meta, acc)?
                })
            })
            .collect()
    }
}

/// Dot product with four independent accumulators so the loop vectorizes.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, ra) = a.as_chunks::<4>();
    let (cb, rb) = b.as_chunks::<4>();
    for (x, y) in ca.iter().zip(cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    let tail: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

fn auto_truncation(probes: &[RescaledProbe], tol: f64, laplacian_tol: f64) -> Result<usize, OracleError> {
    let mut k_needed = 1;
    for p in probes {
        let cap = (16.0 * p.kernel.support_radius / p.delta).ceil() as usize;
        let c = probe_coefficients(p, cap)?;
        let norms = p.kernel.norms()?;
        let d2 = p.delta * p.delta;
        // Parseval: Σ c_k² = ‖probe‖², Σ d_k² = ‖Δ-probe‖²; the unresolved mass
        // beyond the cap bounds the tail after division by (π·cap)².
        let value_terms: Vec<f64> = (1..=cap).map(|k| c[k - 1].powi(2) / (k * k) as f64).collect();
        let lap_terms: Vec<f64> = (1..=cap).map(|k| c[k - 1].powi(2) * (k * k) as f64 * PI.powi(2)).collect();
        let value_rest = (norms.k - c.iter().map(|v| v * v).sum::<f64>()).max(0.0) / (cap * cap) as f64;
        let lap_rest = (norms.ddk / (d2 * d2)
            - (1..=cap).map(|k| (PI * PI * (k * k) as f64 * c[k - 1]).powi(2)).sum::<f64>())
        .max(0.0)
            / (PI * PI * (cap * cap) as f64);
        for (terms, rest, tol) in [(&value_terms, value_rest, tol), (&lap_terms, lap_rest, laplacian_tol)] {
            let total: f64 = terms.iter().sum::<f64>() + rest;
            let mut tail = rest;
            let mut k = cap;
            while k > 0 && tail + terms[k - 1] < tol * total {
                tail += terms[k - 1];
                k -= 1;
            }
            if k == cap && rest >= tol * total {
                return Err(OracleError::TruncationInsufficient {
                    tail: rest / total,
                    tol,
                    k_max: cap,
                });
            }
            k_needed = k_needed.max(k);
        }
    }
    Ok(k_needed)
}

/// 2∬_{[0,T]²} c(t,s)² dt ds for a symmetric covariance c.
///
/// Both the outer variable and the lag are integrated on panels refined
/// geometrically towards 0, so covariances with very short correlation times
/// and fast initial transients are resolved. `levels` controls the grading depth.
pub fn wick_variance_with(cov: impl Fn(f64, f64) -> f64, horizon: f64, levels: usize) -> f64 {
    let rule = GaussLegendre::standard();
    let graded = |len: f64| -> (Vec<f64>, Vec<f64>) {
        let mut xs = Vec::new();
        let mut ws = Vec::new();
        let mut hi = len;
        for _ in 0..levels {
            let lo = 0.5 * hi;
            rule.push_panel(lo, hi, &mut xs, &mut ws);
            hi = lo;
        }
        rule.push_panel(0.0, hi, &mut xs, &mut ws);
        (xs, ws)
    };
    let (ts, wt) = graded(horizon);
    let mut acc = 0.0;
    for (&t, &w) in ts.iter().zip(&wt) {
        // lag u = t − s over [0, t]
        let (us, wu) = graded(t);
        let inner: f64 = us
            .iter()
            .zip(&wu)
            .map(|(&u, &v)| {
                let c = cov(t, t - u);
                v * c * c
            })
            .sum();
        acc += w * inner;
    }
    // the triangle s < t is half the square; Var = 2∬ c²
    4.0 * acc
}

impl OracleModel {
    /// Var(∫₀^T obs(t)² dt) via Wick's formula.
    pub fn wick_variance(&self, horizon: f64, obs: Observable, start: Start, levels: usize) -> f64 {
        wick_variance_with(|t, s| self.covariance(t, s, obs, obs, start), horizon, levels)
    }
}

/// One δ of the Fisher-information check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FisherRow {
    pub delta: f64,
    /// δ²·E[I_δ^A]
    pub value: f64,
    /// Tσ²‖K′‖²/(2θ)
    pub limit: f64,
    pub rel_gap: f64,
}

/// δ²E[∫₀^T X_δ^Δ(t)² dt] from a zero start, compared with its δ → 0 limit.
///
/// The time integral uses composite Simpson, doubling from 1024 panels until
/// successive values agree to 1e−6.
pub fn fisher_limit_check(
    theta: f64,
    sigma: f64,
    kernel: &KernelSpec,
    x0: f64,
    deltas: &[f64],
    horizon: f64,
) -> Result<Vec<FisherRow>, OracleError> {
    let limit = horizon * sigma * sigma * kernel.norms()?.dk / (2.0 * theta);
    deltas
        .iter()
        .map(|&delta| {
            let probe = crate::kernels::rescale(kernel, delta, x0)?;
            let model = OracleModel::new(theta, sigma, vec![probe], Truncation::default())?;
            let obs = Observable::laplacian(0);
            let var = |t: f64| model.covariance(t, t, obs, obs, Start::Zero);
            let mut panels = 1024;
            let mut prev = quadrature::simpson(0.0, horizon, panels, var);
            let value = loop {
                panels *= 2;
                let cur = quadrature::simpson(0.0, horizon, panels, var);
                if (cur - prev).abs() <= 1e-6 * cur.abs() || panels >= 1 << 22 {
                    break cur;
                }
                prev = cur;
            };
            let value = delta * delta * value;
            Ok(FisherRow {
                delta,
                value,
                limit,
                rel_gap: (value - limit).abs() / limit,
            })
        })
        .collect()
}

/// One δ of the scaling-limit check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingRow {
    pub delta: f64,
    pub rescaled: f64,
    pub limit: f64,
    pub gap: f64,
}

/// δ^{−2}Cov(X_δ(tδ²), X_δ(t′δ²)) from a zero start against the whole-line
/// stochastic heat equation limit.
pub fn scaling_limit_check(
    theta: f64,
    sigma: f64,
    kernel: &KernelSpec,
    x0: f64,
    deltas: &[f64],
    t: f64,
    t_prime: f64,
) -> Result<Vec<ScalingRow>, OracleError> {
    let limit = crate::asymptotics::whole_line_covariance(kernel, theta, sigma, t, t_prime)
        .map_err(|e| OracleError::Limit(e.to_string()))?;
    deltas
        .iter()
        .map(|&delta| {
            let probe = crate::kernels::rescale(kernel, delta, x0)?;
            let model = OracleModel::new(theta, sigma, vec![probe], Truncation::default())?;
            let d2 = delta * delta;
            let obs = Observable::value(0);
            let rescaled = model.covariance(t * d2, t_prime * d2, obs, obs, Start::Zero) / d2;
            Ok(ScalingRow {
                delta,
                rescaled,
                limit,
                gap: (rescaled - limit).abs(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{make_paper_kernels, rescale};
    use approx::assert_relative_eq;

    fn k1_model(theta: f64, delta: f64, x0: f64) -> OracleModel {
        let (k1, _) = make_paper_kernels();
        OracleModel::new(theta, 1.0, vec![rescale(&k1, delta, x0).unwrap()], Truncation::default()).unwrap()
    }

    #[test]
    fn stationary_identities() {
        let (k1, _) = make_paper_kernels();
        let n = k1.norms().unwrap();
        let model = k1_model(2.0, 0.1, 0.5);
        let var = model.stationary_covariance(Observable::value(0), Observable::value(0));
        assert_relative_eq!(var, 0.01 * n.anti_dk.unwrap() / 4.0, max_relative = 1e-6);
        let cross = model.stationary_covariance(Observable::laplacian(0), Observable::value(0));
        assert_relative_eq!(cross, -n.k / 4.0, max_relative = 1e-6);
        assert_eq!(model.covariance(0.0, 0.0, Observable::value(0), Observable::value(0), Start::Zero), 0.0);
    }

    #[test]
    fn laplacian_coefficients_match_quadrature() {
        let (k1, _) = make_paper_kernels();
        let probe = rescale(&k1, 0.1, 0.37).unwrap();
        let c = probe_coefficients(&probe, 120).unwrap();
        let d = laplacian_coefficients(&probe, 120).unwrap();
        let scale = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for k in 1..=120 {
            let want = -(PI * k as f64).powi(2) * c[k - 1];
            assert!((d[k - 1] - want).abs() < 1e-8 * scale, "k = {k}");
        }
    }

    #[test]
    fn symmetry_and_truncation_stability() {
        let model = k1_model(1.0, 0.1, 0.4);
        let a = Observable::value(0);
        let b = Observable::laplacian(0);
        assert_eq!(
            model.covariance(0.3, 0.7, a, b, Start::Zero),
            model.covariance(0.7, 0.3, b, a, Start::Zero)
        );
        let (k1, _) = make_paper_kernels();
        let probe = rescale(&k1, 0.1, 0.4).unwrap();
        let doubled = OracleModel::new(1.0, 1.0, vec![probe], Truncation::Fixed(2 * model.k_max)).unwrap();
        let v1 = model.stationary_covariance(a, a);
        let v2 = doubled.stationary_covariance(a, a);
        assert!((v1 - v2).abs() < 1e-10 * v2);
    }

    #[test]
    fn single_mode_is_ou() {
        let (k1, _) = make_paper_kernels();
        let model = OracleModel::new(1.0, 1.0, vec![rescale(&k1, 0.3, 0.4).unwrap()], Truncation::Fixed(1)).unwrap();
        assert_relative_eq!(model.lambdas()[0], PI * PI);
        let a = Observable::value(0);
        let c = model.covariance(0.2, 0.5, a, a, Start::Stationary) / model.stationary_covariance(a, a);
        assert_relative_eq!(c, (-PI * PI * 0.3).exp(), max_relative = 1e-14);
    }

    #[test]
    fn wick_synthetic_and_single_mode() {
        assert_relative_eq!(wick_variance_with(|_, _| 1.0, 1.5, 30), 2.0 * 1.5 * 1.5, max_relative = 1e-12);
        let (k1, _) = make_paper_kernels();
        let model = OracleModel::new(0.4, 1.3, vec![rescale(&k1, 0.3, 0.4).unwrap()], Truncation::Fixed(1)).unwrap();
        let a = Observable::value(0);
        let horizon = 2.0;
        let lam = model.lambdas()[0];
        let v = model.stationary_covariance(a, a);
        // ∬ e^{−2λ|t−s|} = (2/μ²)(μT − 1 + e^{−μT}) with μ = 2λ
        let mu = 2.0 * lam;
        let want = 2.0 * v * v * (2.0 / (mu * mu)) * (mu * horizon - 1.0 + (-mu * horizon).exp());
        let got = model.wick_variance(horizon, a, Start::Stationary, 30);
        assert_relative_eq!(got, want, max_relative = 1e-8);
    }

    #[test]
    fn fisher_information_closed_form() {
        let (k1, _) = make_paper_kernels();
        let rows = fisher_limit_check(1.0, 1.0, &k1, 0.5, &[0.1], 1.0).unwrap();
        // ∫₀^T (1 − e^{−2λt}) dt = T − (1 − e^{−2λT})/(2λ), summed over modes
        let model = k1_model(1.0, 0.1, 0.5);
        let obs = Observable::laplacian(0);
        let exact: f64 = (0..model.k_max)
            .map(|i| {
                let lam = model.lambdas()[i];
                let d = model.weight(obs, i);
                d * d / (2.0 * lam) * (1.0 - (1.0 - (-2.0 * lam).exp()) / (2.0 * lam))
            })
            .sum();
        assert_relative_eq!(rows[0].value, 0.01 * exact, max_relative = 1e-6);
        let doubled = fisher_limit_check(1.0, 1.0, &k1, 0.5, &[0.1], 2.0).unwrap();
        assert_relative_eq!(doubled[0].limit, 2.0 * rows[0].limit, max_relative = 1e-14);
    }

    #[test]
    fn streamed_and_stored_exact_paths_agree() {
        let model = k1_model(1.0, 0.2, 0.5);
        let a = model.simulate_exact(1e-3, 200, 11, Start::Stationary, Recording::Full).unwrap();
        let b = model.simulate_exact(1e-3, 200, 11, Start::Stationary, Recording::Streaming).unwrap();
        assert_eq!(a[0].functionals, b[0].functionals);
        let c = model.simulate_exact(1e-3, 200, 12, Start::Stationary, Recording::Full).unwrap();
        assert_ne!(a[0].x_series, c[0].x_series);
    }
}
