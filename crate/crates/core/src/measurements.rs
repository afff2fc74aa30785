//! Local measurement paths and the pathwise functionals the estimators consume.

use std::io::{BufRead, Write};

use thiserror::Error;

use crate::kernels::{KernelError, RescaledProbe};
use crate::quadrature;

#[derive(Debug, Error)]
pub enum MeasurementError {
    #[error("series lengths differ: x has {x}, xlap has {xlap}")]
    LengthMismatch { x: usize, xlap: usize },
    #[error("path needs at least two samples, got {0}")]
    TooShort(usize),
    #[error("non-finite sample at index {0}")]
    NonFinite(usize),
    #[error("dt·n = {product} does not match horizon {horizon}")]
    InconsistentHorizon { product: f64, horizon: f64 },
    #[error("analytic {0} is not available for this path")]
    AnalyticUnavailable(&'static str),
    #[error("malformed measurement file: {0}")]
    Format(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// Discretisation of ∫X^Δ dX.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ItoRule {
    /// Σ X^Δ(t_k)·(X(t_{k+1}) − X(t_k)), the non-anticipating sum.
    #[default]
    LeftPoint,
    /// Trapezoid (Stratonovich) sum minus half the analytic cross-variation
    /// ⟨X, X^Δ⟩_T. Same limit as the left-point sum, but without its O(dt/δ²)
    /// discretisation bias; needs the cross-variation to be known.
    StratonovichCorrected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QvMode {
    /// Σ (X(t_{k+1}) − X(t_k))².
    #[default]
    Realized,
    /// T·‖σ·K_δ‖², known from the model.
    Analytic,
}

/// Running sums over a path, updated one sample at a time.
///
/// Both the streaming simulators and stored paths go through `push`, so the
/// same path always yields bit-identical functionals.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PathFunctionals {
    pub steps: usize,
    /// Σ Y_k ΔX_k
    pub ito_left: f64,
    /// Σ ½(Y_k + Y_{k+1}) ΔX_k
    pub ito_trapezoid: f64,
    /// Σ_{k<n} X_k²
    pub sum_x2: f64,
    /// Σ_{k<n} Y_k²
    pub sum_xlap2: f64,
    /// Σ (ΔX_k)²
    pub realized_qv: f64,
    pub x_start: f64,
    pub x_end: f64,
    pub xlap_end: f64,
}

impl PathFunctionals {
    pub fn start(x: f64, xlap: f64) -> Self {
        Self {
            x_start: x,
            x_end: x,
            xlap_end: xlap,
            ..Default::default()
        }
    }

    #[inline]
    pub fn push(&mut self, x: f64, xlap: f64) {
        let (px, py) = (self.x_end, self.xlap_end);
        let dx = x - px;
        self.ito_left += py * dx;
        self.ito_trapezoid += 0.5 * (py + xlap) * dx;
        self.sum_x2 += px * px;
        self.sum_xlap2 += py * py;
        self.realized_qv += dx * dx;
        self.x_end = x;
        self.xlap_end = xlap;
        self.steps += 1;
    }
}

/// Scalars describing where and how a path was observed.
#[derive(Debug, Clone, PartialEq)]
pub struct PathMeta {
    pub delta: f64,
    pub x0: f64,
    pub dt: f64,
    pub horizon: f64,
    pub seed: u64,
    pub kernel: String,
    /// T·‖σK_δ‖²
    pub qv_analytic: Option<f64>,
    /// T·⟨σK_δ, σΔK_δ⟩
    pub cv_analytic: Option<f64>,
}

/// (X_δ(t_k), X_δ^Δ(t_k)) for k = 0..n.
///
/// Streamed paths keep only their functionals; the series are then empty.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementPath {
    pub delta: f64,
    pub x0: f64,
    pub dt: f64,
    pub horizon: f64,
    pub seed: u64,
    pub kernel: String,
    pub qv_analytic: Option<f64>,
    pub cv_analytic: Option<f64>,
    pub x_series: Vec<f64>,
    pub xlap_series: Vec<f64>,
    pub functionals: PathFunctionals,
}

impl MeasurementPath {
    pub fn new(meta: PathMeta, x: Vec<f64>, xlap: Vec<f64>) -> Result<Self, MeasurementError> {
        if x.len() != xlap.len() {
            return Err(MeasurementError::LengthMismatch {
                x: x.len(),
                xlap: xlap.len(),
            });
        }
        if x.len() < 2 {
            return Err(MeasurementError::TooShort(x.len()));
        }
        if let Some(i) = x
            .iter()
            .zip(&xlap)
            .position(|(a, b)| !a.is_finite() || !b.is_finite())
        {
            return Err(MeasurementError::NonFinite(i));
        }
        check_horizon(&meta, x.len() - 1)?;
        let mut f = PathFunctionals::start(x[0], xlap[0]);
        for (&a, &b) in x.iter().zip(&xlap).skip(1) {
            f.push(a, b);
        }
        Ok(Self::assemble(meta, x, xlap, f))
    }

    /// A path whose samples were consumed on the fly.
    pub fn streamed(meta: PathMeta, functionals: PathFunctionals) -> Result<Self, MeasurementError> {
        check_horizon(&meta, functionals.steps)?;
        Ok(Self::assemble(meta, Vec::new(), Vec::new(), functionals))
    }

    fn assemble(meta: PathMeta, x: Vec<f64>, xlap: Vec<f64>, functionals: PathFunctionals) -> Self {
        Self {
            delta: meta.delta,
            x0: meta.x0,
            dt: meta.dt,
            horizon: meta.horizon,
            seed: meta.seed,
            kernel: meta.kernel,
            qv_analytic: meta.qv_analytic,
            cv_analytic: meta.cv_analytic,
            x_series: x,
            xlap_series: xlap,
            functionals,
        }
    }

    pub fn meta(&self) -> PathMeta {
        PathMeta {
            delta: self.delta,
            x0: self.x0,
            dt: self.dt,
            horizon: self.horizon,
            seed: self.seed,
            kernel: self.kernel.clone(),
            qv_analytic: self.qv_analytic,
            cv_analytic: self.cv_analytic,
        }
    }

    pub fn steps(&self) -> usize {
        self.functionals.steps
    }

    pub fn is_stored(&self) -> bool {
        !self.x_series.is_empty()
    }

    /// Writes a `#`-prefixed metadata line followed by `t,x,xlap` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<(), MeasurementError> {
        writeln!(
            out,
            "# delta={},x0={},dt={},horizon={},seed={},kernel={},qv_analytic={},cv_analytic={}",
            self.delta,
            self.x0,
            self.dt,
            self.horizon,
            self.seed,
            self.kernel,
            opt_to_string(self.qv_analytic),
            opt_to_string(self.cv_analytic),
        )?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "x", "xlap"])?;
        for (k, (x, y)) in self.x_series.iter().zip(&self.xlap_series).enumerate() {
            let t = k as f64 * self.dt;
            w.write_record([t.to_string(), x.to_string(), y.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: BufRead>(mut input: R) -> Result<Self, MeasurementError> {
        let mut first = String::new();
        input.read_line(&mut first)?;
        let header = first
            .trim()
            .strip_prefix('#')
            .ok_or_else(|| MeasurementError::Format("missing metadata line".into()))?;
        let mut meta = PathMeta {
            delta: f64::NAN,
            x0: f64::NAN,
            dt: f64::NAN,
            horizon: f64::NAN,
            seed: 0,
            kernel: String::new(),
            qv_analytic: None,
            cv_analytic: None,
        };
        for item in header.split(',') {
            let (key, value) = item
                .trim()
                .split_once('=')
                .ok_or_else(|| MeasurementError::Format(format!("bad metadata item `{item}`")))?;
            let num = || {
                value
                    .parse::<f64>()
                    .map_err(|e| MeasurementError::Format(format!("{key}: {e}")))
            };
            match key {
                "delta" => meta.delta = num()?,
                "x0" => meta.x0 = num()?,
                "dt" => meta.dt = num()?,
                "horizon" => meta.horizon = num()?,
                "seed" => {
                    meta.seed = value
                        .parse()
                        .map_err(|e| MeasurementError::Format(format!("seed: {e}")))?
                }
                "kernel" => meta.kernel = value.to_string(),
                "qv_analytic" => meta.qv_analytic = if value == "none" { None } else { Some(num()?) },
                "cv_analytic" => meta.cv_analytic = if value == "none" { None } else { Some(num()?) },
                _ => {}
            }
        }
        let mut reader = csv::Reader::from_reader(input);
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for row in reader.records() {
            let row = row?;
            if row.len() != 3 {
                return Err(MeasurementError::Format(format!(
                    "expected 3 columns, got {}",
                    row.len()
                )));
            }
            let parse = |i: usize| {
                row[i]
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| MeasurementError::Format(e.to_string()))
            };
            xs.push(parse(1)?);
            ys.push(parse(2)?);
        }
        if meta.horizon.is_nan() {
            meta.horizon = meta.dt * xs.len().saturating_sub(1) as f64;
        }
        MeasurementPath::new(meta, xs, ys)
    }
}

fn opt_to_string(v: Option<f64>) -> String {
    v.map_or_else(|| "none".to_string(), |v| v.to_string())
}

fn check_horizon(meta: &PathMeta, steps: usize) -> Result<(), MeasurementError> {
    let product = meta.dt * steps as f64;
    if (product - meta.horizon).abs() > 1e-9 * meta.horizon.abs().max(1.0) {
        return Err(MeasurementError::InconsistentHorizon {
            product,
            horizon: meta.horizon,
        });
    }
    Ok(())
}

/// h·Σ field_j·probe(y_j) over interior nodes of a uniform grid on [0, 1].
pub fn probe_inner_product(field: &[f64], probe: &RescaledProbe) -> f64 {
    let m = field.len() - 1;
    let h = 1.0 / m as f64;
    (1..m)
        .map(|j| field[j] * probe.value(j as f64 * h))
        .sum::<f64>()
        * h
}

/// Precomputed quadrature weights h·K_δ(y_j) and h·ΔK_δ(y_j) on the nodes a
/// probe touches.
#[derive(Debug, Clone)]
pub struct ProbeStencil {
    pub first: usize,
    pub value: Vec<f64>,
    pub laplacian: Vec<f64>,
}

impl ProbeStencil {
    pub fn new(probe: &RescaledProbe, m: usize) -> Self {
        let h = 1.0 / m as f64;
        let (lo, hi) = probe.support();
        let first = ((lo / h).floor().max(1.0)) as usize;
        let last = ((hi / h).ceil() as usize).min(m - 1);
        let mut value = Vec::new();
        let mut laplacian = Vec::new();
        for j in first..=last {
            let y = j as f64 * h;
            value.push(h * probe.value(y));
            laplacian.push(h * probe.laplacian(y));
        }
        Self {
            first,
            value,
            laplacian,
        }
    }

    /// (X_δ, X_δ^Δ) for a nodal field indexed 0..=m.
    #[inline]
    pub fn apply(&self, field: &[f64]) -> (f64, f64) {
        let slice = &field[self.first..self.first + self.value.len()];
        let mut x = 0.0;
        let mut y = 0.0;
        for ((f, v), l) in slice.iter().zip(&self.value).zip(&self.laplacian) {
            x += f * v;
            y += f * l;
        }
        (x, y)
    }
}

/// T·∫σ²K_δ² and T·∫σ²K_δΔK_δ for a noise profile σ.
pub fn analytic_variations(
    probe: &RescaledProbe,
    sigma: impl Fn(f64) -> f64,
    horizon: f64,
) -> Result<(f64, f64), MeasurementError> {
    let (lo, hi) = probe.support();
    let qv = quadrature::adaptive(lo, hi, 1e-10, 1 << 14, |x| {
        let s = sigma(x);
        let v = probe.value(x);
        s * s * v * v
    })
    .map_err(KernelError::from)?;
    let cv = quadrature::adaptive(lo, hi, 1e-10, 1 << 14, |x| {
        let s = sigma(x);
        s * s * probe.value(x) * probe.laplacian(x)
    })
    .map_err(KernelError::from)?;
    Ok((horizon * qv, horizon * cv))
}

/// ∫₀^T X_δ^Δ dX_δ under the chosen discretisation.
pub fn ito_integral(path: &MeasurementPath, rule: ItoRule) -> Result<f64, MeasurementError> {
    match rule {
        ItoRule::LeftPoint => Ok(path.functionals.ito_left),
        ItoRule::StratonovichCorrected => {
            let cv = path
                .cv_analytic
                .ok_or(MeasurementError::AnalyticUnavailable("cross-variation"))?;
            Ok(path.functionals.ito_trapezoid - 0.5 * cv)
        }
    }
}

/// Left-point sum Σ_k X^Δ(t_k)(X(t_{k+1}) − X(t_k)) on raw series.
pub fn ito_sum(x: &[f64], xlap: &[f64]) -> f64 {
    x.windows(2)
        .zip(xlap)
        .map(|(w, y)| y * (w[1] - w[0]))
        .sum()
}

/// Left Riemann sum Σ_{k<n} series(t_k)^power · dt.
pub fn time_integral(series: &[f64], power: u32, dt: f64) -> f64 {
    let n = series.len().saturating_sub(1);
    let body = &series[..n];
    let sum: f64 = match power {
        1 => body.iter().sum(),
        2 => body.iter().map(|v| v * v).sum(),
        p => body.iter().map(|v| v.powi(p as i32)).sum(),
    };
    sum * dt
}

/// ∫₀^T X_δ² dt for a stored or streamed path.
pub fn path_time_integral_x2(path: &MeasurementPath) -> f64 {
    path.functionals.sum_x2 * path.dt
}

/// ∫₀^T (X_δ^Δ)² dt for a stored or streamed path.
pub fn path_time_integral_xlap2(path: &MeasurementPath) -> f64 {
    path.functionals.sum_xlap2 * path.dt
}

pub fn quadratic_variation(path: &MeasurementPath, mode: QvMode) -> Result<f64, MeasurementError> {
    match mode {
        QvMode::Realized => Ok(path.functionals.realized_qv),
        QvMode::Analytic => path
            .qv_analytic
            .ok_or(MeasurementError::AnalyticUnavailable("quadratic variation")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{make_paper_kernels, rescale};
    use approx::assert_relative_eq;

    fn meta(dt: f64, n: usize) -> PathMeta {
        PathMeta {
            delta: 0.1,
            x0: 0.5,
            dt,
            horizon: dt * n as f64,
            seed: 7,
            kernel: "k1".into(),
            qv_analytic: Some(1.5),
            cv_analytic: None,
        }
    }

    #[test]
    fn constant_weight_telescopes() {
        let x: Vec<f64> = (0..11).map(|k| (k as f64 * 0.37).sin()).collect();
        let y = vec![2.5; 11];
        let p = MeasurementPath::new(meta(0.1, 10), x.clone(), y).unwrap();
        let got = ito_integral(&p, ItoRule::LeftPoint).unwrap();
        assert_relative_eq!(got, 2.5 * (x[10] - x[0]), max_relative = 1e-13);
    }

    #[test]
    fn linear_path_riemann_sums() {
        let n = 1000;
        let dt = 1.0 / n as f64;
        let t: Vec<f64> = (0..=n).map(|k| k as f64 * dt).collect();
        let p = MeasurementPath::new(meta(dt, n), t.clone(), t.clone()).unwrap();
        let ito = ito_integral(&p, ItoRule::LeftPoint).unwrap();
        assert!((ito - 0.5).abs() < 2.0 * dt);
        assert!((time_integral(&t, 2, dt) - 1.0 / 3.0).abs() < 2.0 * dt);
        assert_relative_eq!(time_integral(&[3.0; 11], 2, 0.1), 9.0, max_relative = 1e-14);
        // streamed and stored functionals agree exactly
        assert_eq!(path_time_integral_x2(&p), time_integral(&t, 2, dt));
        assert_eq!(p.functionals.ito_left, ito_sum(&t, &t));
        assert!(quadratic_variation(&p, QvMode::Realized).unwrap() < 2.0 * dt);
    }

    #[test]
    fn time_integral_tracks_simpson() {
        let n = 2000;
        let dt = 2.0 / n as f64;
        let s: Vec<f64> = (0..=n).map(|k| (k as f64 * dt).cos()).collect();
        let simpson = quadrature::simpson(0.0, 2.0, n, |t| t.cos().powi(2));
        assert!((time_integral(&s, 2, dt) - simpson).abs() < 2.0 * dt);
    }

    #[test]
    fn trapezoid_identity_is_exact() {
        let x: Vec<f64> = (0..50).map(|k| (k as f64 * 0.3).cos()).collect();
        let y: Vec<f64> = (0..50).map(|k| (k as f64 * 0.11).sin()).collect();
        let p = MeasurementPath::new(meta(0.02, 49), x.clone(), y.clone()).unwrap();
        let forward: f64 = (0..49).map(|k| y[k] * (x[k + 1] - x[k])).sum();
        let backward: f64 = (0..49).map(|k| y[k + 1] * (x[k + 1] - x[k])).sum();
        assert_relative_eq!(2.0 * p.functionals.ito_trapezoid, forward + backward, max_relative = 1e-12);
    }

    #[test]
    fn analytic_quantities_and_errors() {
        let x = vec![0.0, 1.0, 0.5];
        let p = MeasurementPath::new(meta(0.5, 2), x.clone(), x).unwrap();
        assert_eq!(quadratic_variation(&p, QvMode::Analytic).unwrap(), 1.5);
        assert!(matches!(
            ito_integral(&p, ItoRule::StratonovichCorrected),
            Err(MeasurementError::AnalyticUnavailable(_))
        ));
        assert!(matches!(
            MeasurementPath::new(meta(0.5, 2), vec![0.0; 3], vec![0.0; 2]),
            Err(MeasurementError::LengthMismatch { .. })
        ));
        assert!(matches!(
            MeasurementPath::new(meta(0.5, 3), vec![0.0; 3], vec![0.0; 3]),
            Err(MeasurementError::InconsistentHorizon { .. })
        ));
        assert!(matches!(
            MeasurementPath::new(meta(0.5, 2), vec![0.0, f64::NAN, 0.0], vec![0.0; 3]),
            Err(MeasurementError::NonFinite(1))
        ));
    }

    #[test]
    fn probe_quadrature_matches_kernel_norm() {
        let (k1, _) = make_paper_kernels();
        let probe = rescale(&k1, 0.2, 0.5).unwrap();
        let m = 2000;
        let field: Vec<f64> = (0..=m).map(|j| probe.value(j as f64 / m as f64)).collect();
        let norms = k1.norms().unwrap();
        assert_relative_eq!(probe_inner_product(&field, &probe), norms.k, max_relative = 1e-6);
        let stencil = ProbeStencil::new(&probe, m);
        let (x, _) = stencil.apply(&field);
        assert_relative_eq!(x, norms.k, max_relative = 1e-6);
        assert_eq!(probe_inner_product(&vec![0.0; m + 1], &probe), 0.0);
    }

    #[test]
    fn analytic_variations_for_unit_noise() {
        let (k1, _) = make_paper_kernels();
        let probe = rescale(&k1, 0.1, 0.4).unwrap();
        let (qv, cv) = analytic_variations(&probe, |_| 1.0, 2.0).unwrap();
        let norms = k1.norms().unwrap();
        assert_relative_eq!(qv, 2.0 * norms.k, max_relative = 1e-9);
        assert_relative_eq!(cv, -2.0 * norms.dk / 0.01, max_relative = 1e-9);
    }

    #[test]
    fn csv_round_trip() {
        let x: Vec<f64> = (0..21).map(|k| (k as f64).sqrt()).collect();
        let y: Vec<f64> = (0..21).map(|k| -(k as f64) / 3.0).collect();
        let p = MeasurementPath::new(meta(0.05, 20), x, y).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let back = MeasurementPath::read_csv(&buf[..]).unwrap();
        assert_eq!(back, p);
        assert!(MeasurementPath::read_csv(&b"t,x,xlap\n0,1,2\n"[..]).is_err());
    }
}
