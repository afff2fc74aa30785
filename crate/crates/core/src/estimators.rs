//! Augmented and proxy maximum-likelihood estimators of θ(x₀).

use std::fmt;

use thiserror::Error;

use crate::asymptotics::{self, AsymptoticsError};
use crate::kernels::{KernelError, KernelSpec};
use crate::measurements::{
    ito_integral, path_time_integral_x2, path_time_integral_xlap2, quadratic_variation, ItoRule,
    MeasurementError, MeasurementPath, QvMode,
};

/// Denominators below this are treated as carrying no information.
pub const MIN_INFORMATION: f64 = 1e-14;

#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error("observed information {0:e} is too small to estimate from")]
    DegenerateInformation(f64),
    #[error("non-finite estimate")]
    NonFinite,
    #[error(transparent)]
    Measurement(#[from] MeasurementError),
    #[error(transparent)]
    Asymptotics(#[from] AsymptoticsError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EstimatorKind {
    Augmented,
    Proxy,
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EstimatorKind::Augmented => "augmented",
            EstimatorKind::Proxy => "proxy",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    /// Nominal coverage 1 − ᾱ.
    pub level: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    pub estimator: EstimatorKind,
    pub kernel: String,
    pub theta_hat: f64,
    pub delta: f64,
    pub x0: f64,
    /// ∫(X^Δ)² dt for the augmented MLE, δ^{−2}∫X² dt for the proxy MLE.
    pub fisher_observed: f64,
    /// Quadratic variation that entered the estimate (proxy only).
    pub qv_used: Option<f64>,
    pub ci: Option<Interval>,
    /// (μ, Σ) the interval was built from.
    pub asymptotics: Option<(f64, f64)>,
    /// The kernel lacks a compactly supported antiderivative pair.
    pub assumption_violated: bool,
}

impl EstimateReport {
    /// Attaches θ̂ ± δ√(θ̂Σ)q_{1−ᾱ/2}.
    pub fn with_interval(mut self, mu: f64, sigma_const: f64, alpha_bar: f64) -> Result<Self, EstimatorError> {
        let (lo, hi) = asymptotics::confidence_interval(self.theta_hat, self.delta, sigma_const, alpha_bar)?;
        self.ci = Some(Interval {
            lo,
            hi,
            level: 1.0 - alpha_bar,
        });
        self.asymptotics = Some((mu, sigma_const));
        Ok(self)
    }

    pub const CSV_HEADER: [&'static str; 10] = [
        "estimator",
        "kernel",
        "delta",
        "x0",
        "theta_hat",
        "fisher_observed",
        "qv_used",
        "ci_lo",
        "ci_hi",
        "assumption_violated",
    ];

    pub fn csv_row(&self) -> Vec<String> {
        let opt = |v: Option<f64>| v.map_or_else(String::new, |v| v.to_string());
        vec![
            self.estimator.to_string(),
            self.kernel.clone(),
            self.delta.to_string(),
            self.x0.to_string(),
            self.theta_hat.to_string(),
            self.fisher_observed.to_string(),
            opt(self.qv_used),
            opt(self.ci.map(|c| c.lo)),
            opt(self.ci.map(|c| c.hi)),
            self.assumption_violated.to_string(),
        ]
    }
}

/// θ̂^A = ∫X^Δ dX / ∫(X^Δ)² dt with the left-point Itô sum.
pub fn augmented_mle(path: &MeasurementPath) -> Result<EstimateReport, EstimatorError> {
    augmented_mle_with(path, ItoRule::LeftPoint)
}

/// θ̂^A under a chosen discretisation of the stochastic integral. This is also
/// the least-squares estimator for the drift of X_δ.
pub fn augmented_mle_with(path: &MeasurementPath, rule: ItoRule) -> Result<EstimateReport, EstimatorError> {
    let info = path_time_integral_xlap2(path);
    if !(info > MIN_INFORMATION) {
        return Err(EstimatorError::DegenerateInformation(info));
    }
    let theta_hat = ito_integral(path, rule)? / info;
    if !theta_hat.is_finite() {
        return Err(EstimatorError::NonFinite);
    }
    Ok(EstimateReport {
        estimator: EstimatorKind::Augmented,
        kernel: path.kernel.clone(),
        theta_hat,
        delta: path.delta,
        x0: path.x0,
        fisher_observed: info,
        qv_used: None,
        ci: None,
        asymptotics: None,
        assumption_violated: false,
    })
}

/// The kernel constant ‖K̃′‖²/(2‖K‖²) of the proxy estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProxyScale {
    pub value: f64,
    /// Set when K̃ does not exist and a Fourier stand-in replaced ‖K̃′‖².
    pub assumption_violated: bool,
}

impl ProxyScale {
    pub fn for_kernel(k: &KernelSpec) -> Result<Self, EstimatorError> {
        let norms = k.norms()?;
        Ok(match norms.anti_dk {
            Some(a) => ProxyScale {
                value: a / (2.0 * norms.k),
                assumption_violated: false,
            },
            None => ProxyScale {
                value: asymptotics::proxy_norm_standin(k)? / (2.0 * norms.k),
                assumption_violated: true,
            },
        })
    }
}

/// θ̂^P = (‖K̃′‖²/(2‖K‖²))·⟨X_δ⟩_T / (δ^{−2}∫X_δ² dt).
pub fn proxy_mle(path: &MeasurementPath, kernel: &KernelSpec, qv_mode: QvMode) -> Result<EstimateReport, EstimatorError> {
    proxy_mle_with_scale(path, &ProxyScale::for_kernel(kernel)?, qv_mode)
}

pub fn proxy_mle_with_scale(
    path: &MeasurementPath,
    scale: &ProxyScale,
    qv_mode: QvMode,
) -> Result<EstimateReport, EstimatorError> {
    let x2 = path_time_integral_x2(path);
    if !(x2 > 1e-300) {
        return Err(EstimatorError::DegenerateInformation(x2));
    }
    let qv = quadratic_variation(path, qv_mode)?;
    let info = x2 / (path.delta * path.delta);
    let theta_hat = scale.value * qv / info;
    if !theta_hat.is_finite() {
        return Err(EstimatorError::NonFinite);
    }
    Ok(EstimateReport {
        estimator: EstimatorKind::Proxy,
        kernel: path.kernel.clone(),
        theta_hat,
        delta: path.delta,
        x0: path.x0,
        fisher_observed: info,
        qv_used: Some(qv),
        ci: None,
        asymptotics: None,
        assumption_violated: scale.assumption_violated,
    })
}

/// A fully configured estimator.
#[derive(Debug, Clone, PartialEq)]
pub enum Estimator {
    Augmented { rule: ItoRule },
    Proxy { scale: ProxyScale, qv: QvMode },
}

impl Estimator {
    pub fn kind(&self) -> EstimatorKind {
        match self {
            Estimator::Augmented { .. } => EstimatorKind::Augmented,
            Estimator::Proxy { .. } => EstimatorKind::Proxy,
        }
    }

    pub fn apply(&self, path: &MeasurementPath) -> Result<EstimateReport, EstimatorError> {
        match self {
            Estimator::Augmented { rule } => augmented_mle_with(path, *rule),
            Estimator::Proxy { scale, qv } => proxy_mle_with_scale(path, scale, *qv),
        }
    }
}

/// Independent estimates at each x₀; a failing point does not affect the others.
pub fn estimate_curve(paths: &[MeasurementPath], estimator: &Estimator) -> Vec<Result<EstimateReport, EstimatorError>> {
    paths.iter().map(|p| estimator.apply(p)).collect()
}
