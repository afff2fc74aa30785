//! Semi-implicit Euler finite differences for dX = A_θX dt + σ dW on (0, 1)
//! with Dirichlet boundaries.
//!
//! The whole operator A_θ = ∂ₓ(θ∂ₓ·) + a∂ₓ + b is taken implicitly, so one
//! tridiagonal factorisation serves every step. Probes are evaluated on the
//! fly; the field itself is never kept.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::sync::Arc;

use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use rand_xoshiro::Xoshiro256PlusPlus;
use thiserror::Error;

use crate::kernels::{bump, RescaledProbe, Spline};
use crate::measurements::{
    analytic_variations, MeasurementError, MeasurementPath, PathFunctionals, PathMeta,
    ProbeStencil,
};
use crate::spectral;

#[derive(Debug, Error)]
pub enum FdError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("diffusivity must be positive, found {value} at x = {x}")]
    NonPositiveDiffusivity { x: f64, value: f64 },
    #[error("zero pivot in tridiagonal solve at row {0}")]
    ZeroPivot(usize),
    #[error("probe support [{lo}, {hi}] leaves the domain")]
    ProbeOutsideDomain { lo: f64, hi: f64 },
    #[error("unknown coefficient preset `{0}`")]
    UnknownPreset(String),
    #[error("deterministic check needs σ ≡ 0 and constant θ")]
    NotDeterministic,
    #[error(transparent)]
    Measurement(#[from] MeasurementError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Nodes y_j = j/m, j = 0..m; times t_k = kT/n, k = 0..n.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub m: usize,
    pub n: usize,
    pub horizon: f64,
}

impl Grid {
    pub fn new(m: usize, n: usize, horizon: f64) -> Result<Self, FdError> {
        if m < 4 {
            return Err(FdError::InvalidGrid(format!("m = {m} < 4")));
        }
        if n < 1 {
            return Err(FdError::InvalidGrid("n must be at least 1".into()));
        }
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(FdError::InvalidGrid(format!("horizon {horizon} not positive")));
        }
        Ok(Self { m, n, horizon })
    }

    pub fn h(&self) -> f64 {
        1.0 / self.m as f64
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.n as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        j as f64 / self.m as f64
    }
}

/// A scalar coefficient profile on [0, 1] with an analytic gradient.
#[derive(Debug, Clone)]
pub enum Coefficient {
    Constant(f64),
    /// intercept + slope·x
    Linear { intercept: f64, slope: f64 },
    /// low + (high − low)·(1 − tanh((x − center)/width))/2
    TwoLevel {
        low: f64,
        high: f64,
        center: f64,
        width: f64,
    },
    Tabulated(Arc<Spline>),
}

impl Coefficient {
    pub fn value(&self, x: f64) -> f64 {
        match self {
            Coefficient::Constant(c) => *c,
            Coefficient::Linear { intercept, slope } => intercept + slope * x,
            Coefficient::TwoLevel {
                low,
                high,
                center,
                width,
            } => low + (high - low) * 0.5 * (1.0 - ((x - center) / width).tanh()),
            Coefficient::Tabulated(s) => s.interpolate(0, x),
        }
    }

    pub fn gradient(&self, x: f64) -> f64 {
        match self {
            Coefficient::Constant(_) => 0.0,
            Coefficient::Linear { slope, .. } => *slope,
            Coefficient::TwoLevel {
                low,
                high,
                center,
                width,
            } => {
                let sech = 1.0 / ((x - center) / width).cosh();
                -(high - low) * 0.5 * sech * sech / width
            }
            Coefficient::Tabulated(s) => s.interpolate(1, x),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Coefficient::Constant(_))
    }

    /// Parses `constant(c)`, `two-level`, `linear(slope)` or
    /// `linear(slope, value_at_half)`.
    ///
    /// `linear(s)` is 1 + s·(x − 1/2), so `linear(1)` spans [0.5, 1.5].
    pub fn preset(spec: &str) -> Result<Self, FdError> {
        let spec = spec.trim();
        let unknown = || FdError::UnknownPreset(spec.to_string());
        if spec == "two-level" {
            return Ok(Coefficient::TwoLevel {
                low: 0.05,
                high: 0.4,
                center: 0.5,
                width: 0.08,
            });
        }
        let (name, args) = spec
            .strip_suffix(')')
            .and_then(|s| s.split_once('('))
            .ok_or_else(unknown)?;
        let args: Vec<f64> = args
            .split(',')
            .map(|a| a.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| unknown())?;
        match (name.trim(), args.as_slice()) {
            ("constant", [c]) => Ok(Coefficient::Constant(*c)),
            ("linear", [slope]) => Ok(Coefficient::Linear {
                intercept: 1.0 - 0.5 * slope,
                slope: *slope,
            }),
            ("linear", [slope, mid]) => Ok(Coefficient::Linear {
                intercept: mid - 0.5 * slope,
                slope: *slope,
            }),
            _ => Err(unknown()),
        }
    }
}

/// θ, a, b and σ of the model.
#[derive(Debug, Clone)]
pub struct CoefficientField {
    pub theta: Coefficient,
    pub a: Coefficient,
    pub b: Coefficient,
    pub sigma: Coefficient,
}

impl CoefficientField {
    /// θΔ driven by σ·(space-time white noise).
    pub fn constant(theta: f64, sigma: f64) -> Self {
        Self::heat(Coefficient::Constant(theta), sigma)
    }

    /// ∂ₓ(θ∂ₓ·) with constant noise level.
    pub fn heat(theta: Coefficient, sigma: f64) -> Self {
        Self {
            theta,
            a: Coefficient::Constant(0.0),
            b: Coefficient::Constant(0.0),
            sigma: Coefficient::Constant(sigma),
        }
    }

    /// ∇σ²(x) = 2σσ′.
    pub fn grad_sigma2(&self, x: f64) -> f64 {
        2.0 * self.sigma.value(x) * self.sigma.gradient(x)
    }

    pub fn is_noiseless(&self) -> bool {
        matches!(self.sigma, Coefficient::Constant(s) if s == 0.0)
    }
}

/// Interior rows of A_θ, indices 0..m−1 standing for nodes 1..m−1.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalOperator {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl TridiagonalOperator {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// A·z for an interior vector z.
    pub fn apply(&self, z: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut v = self.diag[i] * z[i];
                if i > 0 {
                    v += self.lower[i] * z[i - 1];
                }
                if i + 1 < n {
                    v += self.upper[i] * z[i + 1];
                }
                v
            })
            .collect()
    }

    /// I − dt·A
    pub fn implicit_system(&self, dt: f64) -> TridiagonalOperator {
        TridiagonalOperator {
            lower: self.lower.iter().map(|v| -dt * v).collect(),
            diag: self.diag.iter().map(|v| 1.0 - dt * v).collect(),
            upper: self.upper.iter().map(|v| -dt * v).collect(),
        }
    }
}

/// Flux-form discretisation with arithmetic-mean half-point diffusivities,
/// centred drift and a pointwise zero-order term.
pub fn build_operator(coeffs: &CoefficientField, grid: &Grid) -> Result<TridiagonalOperator, FdError> {
    let m = grid.m;
    let h = grid.h();
    let h2 = h * h;
    let theta: Vec<f64> = (0..=m).map(|j| coeffs.theta.value(grid.node(j))).collect();
    let mut lower = vec![0.0; m - 1];
    let mut diag = vec![0.0; m - 1];
    let mut upper = vec![0.0; m - 1];
    for j in 1..m {
        let i = j - 1;
        let tm = 0.5 * (theta[j - 1] + theta[j]);
        let tp = 0.5 * (theta[j] + theta[j + 1]);
        for (t, x) in [(tm, grid.node(j) - 0.5 * h), (tp, grid.node(j) + 0.5 * h)] {
            if !(t > 0.0) {
                return Err(FdError::NonPositiveDiffusivity { x, value: t });
            }
        }
        let y = grid.node(j);
        let a = coeffs.a.value(y);
        let b = coeffs.b.value(y);
        lower[i] = if i > 0 { tm / h2 - a / (2.0 * h) } else { 0.0 };
        upper[i] = if j + 1 < m { tp / h2 + a / (2.0 * h) } else { 0.0 };
        diag[i] = -(tm + tp) / h2 + b;
    }
    Ok(TridiagonalOperator { lower, diag, upper })
}

/// LU factors of a tridiagonal system, reusable across right-hand sides.
#[derive(Debug, Clone)]
pub struct ThomasFactor {
    lower: Vec<f64>,
    c_prime: Vec<f64>,
    inv_pivot: Vec<f64>,
}

impl ThomasFactor {
    pub fn new(sys: &TridiagonalOperator) -> Result<Self, FdError> {
        let n = sys.len();
        let mut c_prime = vec![0.0; n];
        let mut inv_pivot = vec![0.0; n];
        let mut prev_c = 0.0;
        for i in 0..n {
            let pivot = sys.diag[i] - if i > 0 { sys.lower[i] * prev_c } else { 0.0 };
            if pivot.abs() < 1e-300 || !pivot.is_finite() {
                return Err(FdError::ZeroPivot(i));
            }
            inv_pivot[i] = 1.0 / pivot;
            prev_c = sys.upper[i] * inv_pivot[i];
            c_prime[i] = prev_c;
        }
        Ok(Self {
            lower: sys.lower.clone(),
            c_prime,
            inv_pivot,
        })
    }

    #[inline]
    pub fn solve_in_place(&self, rhs: &mut [f64]) {
        let n = self.inv_pivot.len();
        debug_assert_eq!(rhs.len(), n);
        rhs[0] *= self.inv_pivot[0];
        for i in 1..n {
            rhs[i] = (rhs[i] - self.lower[i] * rhs[i - 1]) * self.inv_pivot[i];
        }
        for i in (0..n - 1).rev() {
            rhs[i] -= self.c_prime[i] * rhs[i + 1];
        }
    }
}

/// Solves a tridiagonal system in O(n).
pub fn thomas_solve(sys: &TridiagonalOperator, rhs: &[f64]) -> Result<Vec<f64>, FdError> {
    let factor = ThomasFactor::new(sys)?;
    let mut x = rhs.to_vec();
    factor.solve_in_place(&mut x);
    Ok(x)
}

/// Initial field X₀.
#[derive(Debug, Clone)]
pub enum InitialCondition {
    Zero,
    /// height·φ((x − c)/width)/φ(0) at c = 0.2 and c = 0.8.
    TwoPeaks { height: f64, width: f64 },
    /// amplitude·sin(kπx)
    Sine { k: usize, amplitude: f64 },
    Tabulated(Arc<Spline>),
}

impl InitialCondition {
    pub fn default_peaks() -> Self {
        InitialCondition::TwoPeaks {
            height: 5.0,
            width: 0.05,
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        match self {
            InitialCondition::Zero => 0.0,
            InitialCondition::TwoPeaks { height, width } => {
                let peak = bump(0.0);
                height * (bump((x - 0.2) / width) + bump((x - 0.8) / width)) / peak
            }
            InitialCondition::Sine { k, amplitude } => {
                amplitude * (*k as f64 * std::f64::consts::PI * x).sin()
            }
            InitialCondition::Tabulated(s) => s.interpolate(0, x),
        }
    }

    /// Nodal values with the boundary pinned to zero.
    pub fn nodal(&self, grid: &Grid) -> Vec<f64> {
        let mut v: Vec<f64> = (0..=grid.m).map(|j| self.value(grid.node(j))).collect();
        v[0] = 0.0;
        v[grid.m] = 0.0;
        v
    }
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub grid: Grid,
    pub coeffs: CoefficientField,
    pub initial: InitialCondition,
    pub seed: u64,
}

/// What `simulate` keeps of each probe's path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Recording {
    /// Full series of X_δ and X_δ^Δ.
    #[default]
    Full,
    /// Only the running functionals.
    Streaming,
}

#[derive(Debug, Clone, Default)]
pub struct SimOptions {
    pub recording: Recording,
    /// Binary dump of the field every n/100 steps.
    pub snapshot: Option<PathBuf>,
}

/// Per-step generator: step k draws its node noise from a fresh stream keyed
/// by (seed, k), so the noise never depends on how work is scheduled.
fn step_rng(seed: u64, step: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(crate::harness::seed::mix(seed ^ 0x5eed_f1e1_d000_0000, step))
}

/// Runs the scheme and returns one path per probe, in probe order.
pub fn simulate(
    config: &SimConfig,
    probes: &[RescaledProbe],
    options: &SimOptions,
) -> Result<Vec<MeasurementPath>, FdError> {
    let grid = config.grid;
    let m = grid.m;
    let dt = grid.dt();
    let h = grid.h();
    for p in probes {
        let (lo, hi) = p.support();
        if lo < 0.0 || hi > 1.0 {
            return Err(FdError::ProbeOutsideDomain { lo, hi });
        }
    }
    let op = build_operator(&config.coeffs, &grid)?;
    let factor = ThomasFactor::new(&op.implicit_system(dt))?;
    let noise_scale: Vec<f64> = (1..m)
        .map(|j| config.coeffs.sigma.value(grid.node(j)) * (dt / h).sqrt())
        .collect();
    let noiseless = noise_scale.iter().all(|&s| s == 0.0);
    let stencils: Vec<ProbeStencil> = probes.iter().map(|p| ProbeStencil::new(p, m)).collect();

    let mut field = config.initial.nodal(&grid);
    let keep = options.recording == Recording::Full;
    let mut series: Vec<(Vec<f64>, Vec<f64>)> = stencils
        .iter()
        .map(|_| {
            if keep {
                (Vec::with_capacity(grid.n + 1), Vec::with_capacity(grid.n + 1))
            } else {
                (Vec::new(), Vec::new())
            }
        })
        .collect();
    let mut sums: Vec<PathFunctionals> = stencils
        .iter()
        .zip(series.iter_mut())
        .map(|(s, (xs, ys))| {
            let (x, y) = s.apply(&field);
            if keep {
                xs.push(x);
                ys.push(y);
            }
            PathFunctionals::start(x, y)
        })
        .collect();

    let mut snap = match &options.snapshot {
        Some(path) => Some(BufWriter::new(File::create(path)?)),
        None => None,
    };
    let snap_every = (grid.n / 100).max(1);
    if let Some(w) = snap.as_mut() {
        write_row(w, &field)?;
    }

    for step in 0..grid.n {
        let interior = &mut field[1..m];
        if !noiseless {
            let mut rng = step_rng(config.seed, step as u64);
            for (v, s) in interior.iter_mut().zip(&noise_scale) {
                let xi: f64 = StandardNormal.sample(&mut rng);
                *v += s * xi;
            }
        }
        factor.solve_in_place(interior);
        for ((stencil, acc), (xs, ys)) in stencils.iter().zip(sums.iter_mut()).zip(series.iter_mut()) {
            let (x, y) = stencil.apply(&field);
            acc.push(x, y);
            if keep {
                xs.push(x);
                ys.push(y);
            }
        }
        if let Some(w) = snap.as_mut() {
            if (step + 1) % snap_every == 0 {
                write_row(w, &field)?;
            }
        }
    }
    if let Some(mut w) = snap {
        w.flush()?;
    }

    let sigma = &config.coeffs.sigma;
    probes
        .iter()
        .zip(sums)
        .zip(series)
        .map(|((probe, acc), (xs, ys))| {
            let (qv, cv) = analytic_variations(probe, |x| sigma.value(x), grid.horizon)?;
            let meta = PathMeta {
                delta: probe.delta,
                x0: probe.x0,
                dt,
                horizon: grid.horizon,
                seed: config.seed,
                kernel: probe.kernel.name.clone(),
                qv_analytic: Some(qv),
                cv_analytic: Some(cv),
            };
            let path = if keep {
                MeasurementPath::new(meta, xs, ys)?
            } else {
                MeasurementPath::streamed(meta, acc)?
            };
            Ok(path)
        })
        .collect()
}

fn write_row<W: Write>(w: &mut W, field: &[f64]) -> std::io::Result<()> {
    for v in field {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Reads a snapshot dump back as rows of m + 1 values.
pub fn read_snapshots(path: &std::path::Path, m: usize) -> Result<Vec<Vec<f64>>, FdError> {
    let bytes = std::fs::read(path)?;
    let row = (m + 1) * 8;
    if bytes.len() % row != 0 {
        return Err(FdError::InvalidGrid(format!(
            "snapshot size {} is not a multiple of the row size {row}",
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(row)
        .map(|r| {
            r.chunks_exact(8)
                .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
                .collect()
        })
        .collect())
}

/// One row of the deterministic comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatCheckRow {
    pub t: f64,
    pub fd: f64,
    pub spectral: f64,
}

/// Noise-free propagation of X₀ tested against `probe`, next to the spectral
/// sum Σ_k e^{−θπ²k²t}⟨X₀, e_k⟩⟨e_k, probe⟩. Rows every `every` steps.
pub fn deterministic_heat_check(
    config: &SimConfig,
    probe: &RescaledProbe,
    every: usize,
) -> Result<Vec<HeatCheckRow>, FdError> {
    let theta = match config.coeffs.theta {
        Coefficient::Constant(t) if config.coeffs.is_noiseless() => t,
        _ => return Err(FdError::NotDeterministic),
    };
    let path = simulate(config, std::slice::from_ref(probe), &SimOptions::default())?
        .pop()
        .expect("one probe in, one path out");
    let k_max = (config.grid.m / 2).clamp(64, 2048);
    let x0_coeffs = spectral::sine_coefficients(|x| config.initial.value(x), (0.0, 1.0), k_max)
        .map_err(|e| FdError::InvalidGrid(e.to_string()))?;
    let probe_coeffs = spectral::probe_coefficients(probe, k_max)
        .map_err(|e| FdError::InvalidGrid(e.to_string()))?;
    let pi2 = std::f64::consts::PI.powi(2);
    let dt = config.grid.dt();
    let every = every.max(1);
    Ok((0..=config.grid.n)
        .step_by(every)
        .map(|k| {
            let t = k as f64 * dt;
            let spectral = x0_coeffs
                .iter()
                .zip(&probe_coeffs)
                .enumerate()
                .map(|(i, (a, c))| {
                    let kk = (i + 1) as f64;
                    (-theta * pi2 * kk * kk * t).exp() * a * c
                })
                .sum();
            HeatCheckRow {
                t,
                fd: path.x_series[k],
                spectral,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{make_paper_kernels, rescale};
    use approx::assert_relative_eq;
    use rand::Rng;

    #[test]
    fn constant_stencil() {
        let grid = Grid::new(8, 10, 1.0).unwrap();
        let op = build_operator(&CoefficientField::constant(0.5, 1.0), &grid).unwrap();
        let s = 0.5 * 64.0;
        for i in 0..7 {
            assert_relative_eq!(op.diag[i], -2.0 * s);
            if i > 0 {
                assert_relative_eq!(op.lower[i], s);
            }
            if i < 6 {
                assert_relative_eq!(op.upper[i], s);
            }
        }
    }

    #[test]
    fn discrete_sine_spectrum() {
        let grid = Grid::new(40, 10, 1.0).unwrap();
        let theta = 0.7;
        let op = build_operator(&CoefficientField::constant(theta, 1.0), &grid).unwrap();
        let h = grid.h();
        for k in [1usize, 3, 17] {
            let v: Vec<f64> = (1..40)
                .map(|j| (k as f64 * std::f64::consts::PI * j as f64 * h).sin())
                .collect();
            let av = op.apply(&v);
            let mu = -theta * 4.0 / (h * h) * (k as f64 * std::f64::consts::PI * h / 2.0).sin().powi(2);
            for (a, b) in av.iter().zip(&v) {
                assert!((a - mu * b).abs() < 1e-9 * mu.abs());
            }
        }
    }

    #[test]
    fn variable_diffusivity_matches_dense_flux_assembly() {
        let grid = Grid::new(4, 1, 1.0).unwrap();
        let field = CoefficientField::heat(Coefficient::Linear { intercept: 1.0, slope: 1.0 }, 1.0);
        let op = build_operator(&field, &grid).unwrap();
        // dense: (Az)_j = (θ_{j+½}(z_{j+1} − z_j) − θ_{j−½}(z_j − z_{j−1}))/h²
        let h = 0.25;
        let theta = |x: f64| 1.0 + x;
        let half = |j: f64| 0.5 * (theta(j * h) + theta((j + 1.0) * h));
        let mut dense = [[0.0; 3]; 3];
        for r in 0..3 {
            let j = (r + 1) as f64;
            let tp = half(j);
            let tm = half(j - 1.0);
            dense[r][r] = -(tp + tm) / (h * h);
            if r > 0 {
                dense[r][r - 1] = tm / (h * h);
            }
            if r < 2 {
                dense[r][r + 1] = tp / (h * h);
            }
        }
        for r in 0..3 {
            assert_relative_eq!(op.diag[r], dense[r][r], max_relative = 1e-14);
            if r > 0 {
                assert_relative_eq!(op.lower[r], dense[r][r - 1], max_relative = 1e-14);
            }
            if r < 2 {
                assert_relative_eq!(op.upper[r], dense[r][r + 1], max_relative = 1e-14);
            }
        }
        let sym = build_operator(&field, &Grid::new(30, 1, 1.0).unwrap()).unwrap();
        for i in 0..28 {
            assert_relative_eq!(sym.upper[i], sym.lower[i + 1], max_relative = 1e-14);
        }
    }

    #[test]
    fn non_positive_diffusivity_is_rejected() {
        let grid = Grid::new(10, 1, 1.0).unwrap();
        let field = CoefficientField::heat(Coefficient::Linear { intercept: -0.2, slope: 1.0 }, 1.0);
        assert!(matches!(
            build_operator(&field, &grid),
            Err(FdError::NonPositiveDiffusivity { .. })
        ));
    }

    fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for col in 0..n {
            let piv = (col..n)
                .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
                .unwrap();
            a.swap(col, piv);
            b.swap(col, piv);
            for r in col + 1..n {
                let f = a[r][col] / a[col][col];
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
        let mut x = vec![0.0; n];
        for r in (0..n).rev() {
            let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
            x[r] = (b[r] - s) / a[r][r];
        }
        x
    }

    #[test]
    fn thomas_matches_dense_elimination() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(3);
        let n = 64;
        let lower: Vec<f64> = (0..n).map(|i| if i > 0 { rng.gen_range(-1.0..1.0) } else { 0.0 }).collect();
        let upper: Vec<f64> = (0..n).map(|i| if i + 1 < n { rng.gen_range(-1.0..1.0) } else { 0.0 }).collect();
        let diag: Vec<f64> = (0..n).map(|i| 2.5 + lower[i].abs() + upper[i].abs() + rng.gen_range(0.0..1.0)).collect();
        let rhs: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let sys = TridiagonalOperator { lower, diag, upper };
        let mut dense = vec![vec![0.0; n]; n];
        for i in 0..n {
            dense[i][i] = sys.diag[i];
            if i > 0 {
                dense[i][i - 1] = sys.lower[i];
            }
            if i + 1 < n {
                dense[i][i + 1] = sys.upper[i];
            }
        }
        let x = thomas_solve(&sys, &rhs).unwrap();
        let y = dense_solve(dense, rhs);
        let err = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-10, "max abs error {err:e}");
    }

    #[test]
    fn identity_and_round_trip() {
        let n = 20;
        let id = TridiagonalOperator {
            lower: vec![0.0; n],
            diag: vec![1.0; n],
            upper: vec![0.0; n],
        };
        let r: Vec<f64> = (0..n).map(|i| i as f64 * 0.3 - 1.0).collect();
        assert_eq!(thomas_solve(&id, &r).unwrap(), r);
        let grid = Grid::new(n + 1, 10, 1.0).unwrap();
        let op = build_operator(&CoefficientField::constant(0.8, 1.0), &grid).unwrap();
        let sys = op.implicit_system(1e-3);
        let back = thomas_solve(&sys, &sys.apply(&r)).unwrap();
        for (a, b) in back.iter().zip(&r) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn noiseless_eigenvector_decay() {
        let (k1, _) = make_paper_kernels();
        let m = 100;
        let n = 50;
        let theta = 0.3;
        let grid = Grid::new(m, n, 0.05).unwrap();
        let config = SimConfig {
            grid,
            coeffs: CoefficientField::constant(theta, 0.0),
            initial: InitialCondition::Sine { k: 2, amplitude: 1.0 },
            seed: 1,
        };
        let probe = rescale(&k1, 0.1, 0.37).unwrap();
        let path = simulate(&config, &[probe], &SimOptions::default()).unwrap().pop().unwrap();
        let h = grid.h();
        let mu = theta * 4.0 / (h * h) * (2.0 * std::f64::consts::PI * h / 2.0).sin().powi(2);
        let factor = 1.0 / (1.0 + grid.dt() * mu);
        for k in [1usize, 10, 50] {
            assert_relative_eq!(path.x_series[k], path.x_series[0] * factor.powi(k as i32), max_relative = 1e-10);
        }
    }

    #[test]
    fn same_seed_same_path_and_boundaries_stay_zero() {
        let (k1, _) = make_paper_kernels();
        let grid = Grid::new(50, 200, 0.1).unwrap();
        let config = SimConfig {
            grid,
            coeffs: CoefficientField::heat(Coefficient::preset("two-level").unwrap(), 1.0),
            initial: InitialCondition::default_peaks(),
            seed: 99,
        };
        let probes = [rescale(&k1, 0.1, 0.3).unwrap(), rescale(&k1, 0.2, 0.6).unwrap()];
        let dir = tempfile::tempdir().unwrap();
        let snap = dir.path().join("snap.bin");
        let opts = SimOptions {
            recording: Recording::Full,
            snapshot: Some(snap.clone()),
        };
        let a = simulate(&config, &probes, &opts).unwrap();
        let b = simulate(&config, &probes, &SimOptions::default()).unwrap();
        assert_eq!(a, b);
        let streamed = simulate(
            &config,
            &probes,
            &SimOptions {
                recording: Recording::Streaming,
                snapshot: None,
            },
        )
        .unwrap();
        assert_eq!(streamed[1].functionals, a[1].functionals);
        let rows = read_snapshots(&snap, 50).unwrap();
        assert_eq!(rows.len(), 101);
        for r in &rows {
            assert_eq!(r[0], 0.0);
            assert_eq!(r[50], 0.0);
        }
    }

    #[test]
    fn noiseless_linearity() {
        let (k1, _) = make_paper_kernels();
        let grid = Grid::new(60, 100, 0.05).unwrap();
        let probe = rescale(&k1, 0.15, 0.5).unwrap();
        let run = |ic: InitialCondition| {
            let cfg = SimConfig {
                grid,
                coeffs: CoefficientField::heat(Coefficient::preset("linear(1)").unwrap(), 0.0),
                initial: ic,
                seed: 0,
            };
            simulate(&cfg, std::slice::from_ref(&probe), &SimOptions::default())
                .unwrap()
                .pop()
                .unwrap()
        };
        let u = run(InitialCondition::Sine { k: 1, amplitude: 1.0 });
        let v = run(InitialCondition::default_peaks());
        let xs: Vec<f64> = (0..=60).map(|j| {
            let x = j as f64 / 60.0;
            InitialCondition::Sine { k: 1, amplitude: 1.0 }.value(x) + InitialCondition::default_peaks().value(x)
        }).collect();
        let spline = Spline::new((0..=60).map(|j| j as f64 / 60.0).collect(), xs).unwrap();
        let w = run(InitialCondition::Tabulated(Arc::new(spline)));
        for k in 0..=100 {
            assert!((w.x_series[k] - u.x_series[k] - v.x_series[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn presets() {
        assert_eq!(Coefficient::preset("constant(0.5)").unwrap().value(0.3), 0.5);
        let two = Coefficient::preset("two-level").unwrap();
        assert!(two.value(0.1) > two.value(0.9));
        let lin = Coefficient::preset("linear(1)").unwrap();
        assert_eq!(lin.gradient(0.2), 1.0);
        assert_relative_eq!(lin.value(0.5), 1.0);
        assert!(matches!(Coefficient::preset("wiggly"), Err(FdError::UnknownPreset(_))));
        // analytic gradient of the tanh profile
        let h = 1e-6;
        let fd = (two.value(0.6 + h) - two.value(0.6 - h)) / (2.0 * h);
        assert_relative_eq!(two.gradient(0.6), fd, max_relative = 1e-6);
    }

    #[test]
    fn zero_start_zero_noise_stays_zero() {
        let (k1, _) = make_paper_kernels();
        let grid = Grid::new(40, 20, 0.1).unwrap();
        let config = SimConfig {
            grid,
            coeffs: CoefficientField::constant(1.0, 0.0),
            initial: InitialCondition::Zero,
            seed: 0,
        };
        let rows = deterministic_heat_check(&config, &rescale(&k1, 0.2, 0.5).unwrap(), 5).unwrap();
        assert!(rows.iter().all(|r| r.fd == 0.0 && r.spectral == 0.0));
    }
}
