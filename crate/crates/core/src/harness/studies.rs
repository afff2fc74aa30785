//! The canned studies and the simulate/estimate pipeline.

use std::collections::HashMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::checks;
use super::config::{Backend, ConfigError, ExperimentConfig, Study};
use super::output::{fmt_f64, fmt_opt, CsvTable, Manifest, OutputError, RunWriter};
use super::par::{map_indexed, thread_count, Progress};
use super::seed::derive_seed;
use crate::asymptotics::{constants_row, proxy_constants, AsymptoticsError, LocalCoefficients};
use crate::estimators::{EstimateReport, Estimator, EstimatorError, ProxyScale};
use crate::fd::{simulate, CoefficientField, FdError, InitialCondition, Recording, SimConfig, SimOptions};
use crate::kernels::{kernel_by_name, rescale, KernelError, KernelSpec, RescaledProbe};
use crate::measurements::{MeasurementError, MeasurementPath};
use crate::spectral::{OracleError, OracleModel, Start, Truncation};

/// Stream tag for path noise.
pub const TAG_PATH: u64 = 0x5041_5448;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Output(#[from] OutputError),
    #[error(transparent)]
    Fd(#[from] FdError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error(transparent)]
    Asymptotics(#[from] AsymptoticsError),
    #[error(transparent)]
    Measurement(#[from] MeasurementError),
    #[error("{0}")]
    Input(String),
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub study: String,
    pub dir: PathBuf,
    pub manifest: Manifest,
    pub warnings: Vec<String>,
    /// Replications or checks that did not finish with status ok.
    pub failed: usize,
}

/// One rescaled probe of a study.
#[derive(Debug, Clone)]
pub struct ProbeSlot {
    pub kernel: usize,
    pub delta: f64,
    pub requested_x0: f64,
    pub probe: RescaledProbe,
}

/// Probes in kernel-major, then δ, then x₀ order.
pub fn probe_slots(kernels: &[KernelSpec], deltas: &[f64], x0s: &[f64]) -> Result<Vec<ProbeSlot>, KernelError> {
    let mut out = Vec::with_capacity(kernels.len() * deltas.len() * x0s.len());
    for (ki, k) in kernels.iter().enumerate() {
        for &d in deltas {
            for &x in x0s {
                out.push(ProbeSlot {
                    kernel: ki,
                    delta: d,
                    requested_x0: x,
                    probe: rescale(k, d, x)?,
                });
            }
        }
    }
    Ok(out)
}

/// One estimator bound to one kernel, with its asymptotic variance if known.
#[derive(Debug, Clone)]
pub struct EstimatorSlot {
    pub kernel: usize,
    pub estimator: Estimator,
    pub sigma: Option<f64>,
}

/// Augmented then proxy, each over all kernels.
pub fn estimator_slots(cfg: &ExperimentConfig, kernels: &[KernelSpec]) -> Result<Vec<EstimatorSlot>, HarnessError> {
    let t = cfg.grid.horizon;
    let mut out = Vec::new();
    for (ki, k) in kernels.iter().enumerate() {
        let n = k.norms()?;
        out.push(EstimatorSlot {
            kernel: ki,
            estimator: Estimator::Augmented { rule: cfg.ito_rule },
            sigma: Some(2.0 * n.k / (t * n.dk)),
        });
    }
    for (ki, k) in kernels.iter().enumerate() {
        let sigma = if k.has_antiderivative() {
            Some(proxy_constants(k, &LocalCoefficients::constant(1.0, 1.0), t)?.sigma_p)
        } else {
            None
        };
        out.push(EstimatorSlot {
            kernel: ki,
            estimator: Estimator::Proxy {
                scale: ProxyScale::for_kernel(k)?,
                qv: cfg.qv_mode,
            },
            sigma,
        });
    }
    Ok(out)
}

/// Draws measurement paths for a fixed probe set.
pub enum Sampler {
    Fd(SimConfig),
    Oracle {
        model: Box<OracleModel>,
        dt: f64,
        n: usize,
        start: Start,
    },
}

impl Sampler {
    pub fn new(
        cfg: &ExperimentConfig,
        field: &CoefficientField,
        initial: InitialCondition,
        probes: &[RescaledProbe],
    ) -> Result<Self, HarnessError> {
        Ok(match cfg.backend {
            Backend::Fd => Sampler::Fd(SimConfig {
                grid: cfg.grid,
                coeffs: field.clone(),
                initial,
                seed: 0,
            }),
            Backend::Oracle => {
                let theta = field.theta.value(0.5);
                let model = OracleModel::new(theta, cfg.sigma, probes.to_vec(), Truncation::default())?;
                Sampler::Oracle {
                    model: Box::new(model),
                    dt: cfg.grid.dt(),
                    n: cfg.grid.n,
                    start: cfg.start,
                }
            }
        })
    }

    pub fn sample(&self, probes: &[RescaledProbe], seed: u64, recording: Recording) -> Result<Vec<MeasurementPath>, String> {
        match self {
            Sampler::Fd(base) => {
                let mut c = base.clone();
                c.seed = seed;
                simulate(
                    &c,
                    probes,
                    &SimOptions {
                        recording,
                        snapshot: None,
                    },
                )
                .map_err(|e| e.to_string())
            }
            Sampler::Oracle { model, dt, n, start } => model
                .simulate_exact(*dt, *n, seed, *start, recording)
                .map_err(|e| e.to_string()),
        }
    }
}

/// Outcome of one estimator on one probe of one replication.
#[derive(Debug, Clone)]
pub struct Cell {
    pub probe: usize,
    pub estimator: usize,
    pub result: Result<EstimateReport, String>,
}

/// Everything a replication produced; a failure in sampling marks every cell.
#[derive(Debug, Clone)]
pub struct Replicate {
    pub index: usize,
    pub seed: u64,
    pub cells: Vec<Cell>,
}

fn panic_message(p: Box<dyn std::any::Any + Send>) -> String {
    p.downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| p.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "panic".into())
}

/// Runs `reps` isolated replications in parallel.
pub fn run_replicates(
    sampler: &Sampler,
    slots: &[ProbeSlot],
    estimators: &[EstimatorSlot],
    reps: usize,
    master_seed: u64,
    threads: usize,
) -> Vec<Replicate> {
    let probes: Vec<RescaledProbe> = slots.iter().map(|s| s.probe.clone()).collect();
    let pairs: Vec<(usize, usize)> = slots
        .iter()
        .enumerate()
        .flat_map(|(pi, s)| {
            estimators
                .iter()
                .enumerate()
                .filter(move |(_, e)| e.kernel == s.kernel)
                .map(move |(ei, _)| (pi, ei))
        })
        .collect();
    let progress = Progress::default();
    map_indexed(reps, threads, &progress, |r| {
        let seed = derive_seed(master_seed, r as u64, TAG_PATH);
        let attempt = catch_unwind(AssertUnwindSafe(|| {
            let paths = sampler.sample(&probes, seed, Recording::Streaming)?;
            Ok::<_, String>(
                pairs
                    .iter()
                    .map(|&(pi, ei)| Cell {
                        probe: pi,
                        estimator: ei,
                        result: estimators[ei].estimator.apply(&paths[pi]).map_err(|e| e.to_string()),
                    })
                    .collect::<Vec<_>>(),
            )
        }));
        let cells = match attempt.map_err(panic_message).and_then(|r| r) {
            Ok(cells) => cells,
            Err(msg) => pairs
                .iter()
                .map(|&(pi, ei)| Cell {
                    probe: pi,
                    estimator: ei,
                    result: Err(format!("replication failed: {msg}")),
                })
                .collect(),
        };
        Replicate { index: r, seed, cells }
    })
}

fn replications_table(reps: &[Replicate], slots: &[ProbeSlot], estimators: &[EstimatorSlot], kernels: &[KernelSpec]) -> (CsvTable, usize) {
    let mut t = CsvTable::new(&["replicate", "seed", "kernel", "delta", "x0", "estimator", "theta_hat", "status"]);
    let mut failed = 0;
    for r in reps {
        let mut rep_failed = false;
        for c in &r.cells {
            let s = &slots[c.probe];
            let (theta, status) = match &c.result {
                Ok(rep) => (fmt_f64(rep.theta_hat), "ok".to_string()),
                Err(e) => {
                    rep_failed = true;
                    (String::new(), format!("error: {e}"))
                }
            };
            t.push(vec![
                r.index.to_string(),
                r.seed.to_string(),
                kernels[s.kernel].name.clone(),
                fmt_f64(s.delta),
                fmt_f64(s.requested_x0),
                estimators[c.estimator].estimator.kind().to_string(),
                theta,
                status,
            ]);
        }
        failed += rep_failed as usize;
    }
    (t, failed)
}

/// rmse, bias and (population) standard deviation of estimates around `truth`.
pub fn error_summary(values: &[f64], truth: f64) -> (f64, f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let mse = values.iter().map(|v| (v - truth).powi(2)).sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mse.sqrt(), mean - truth, var.sqrt())
}

/// Validates, runs the configured study and writes its artifacts.
pub fn run(cfg: &ExperimentConfig) -> Result<RunSummary, HarnessError> {
    let warnings = cfg.validate()?;
    let threads = thread_count(cfg.thread_cap);
    let mut w = RunWriter::new(&cfg.output_dir, Manifest::for_config(cfg))?;
    let failed = match cfg.study {
        Study::FigHeatmap => heatmap(cfg, &mut w)?,
        Study::FigCenter => center(cfg, &mut w, threads)?,
        Study::FigRmse => rmse(cfg, &mut w, threads)?,
        Study::Coverage => coverage(cfg, &mut w, threads)?,
        Study::ValidateOracle => validate_oracle(cfg, &mut w, threads)?,
        Study::AsymptoticsTable => asymptotics_table(cfg, &mut w)?,
    };
    let manifest = w.finish()?;
    Ok(RunSummary {
        study: cfg.study.to_string(),
        dir: cfg.output_dir.clone(),
        manifest,
        warnings,
        failed,
    })
}

fn heatmap(cfg: &ExperimentConfig, w: &mut RunWriter) -> Result<usize, HarnessError> {
    if cfg.backend != Backend::Fd {
        return Err(HarnessError::Input("fig-heatmap needs the fd backend".into()));
    }
    let name = "snapshots.bin";
    let tmp = w.dir().join(format!(".{name}.partial"));
    let sim = SimConfig {
        grid: cfg.grid,
        coeffs: cfg.coefficient_field()?,
        initial: cfg.initial_condition()?,
        seed: derive_seed(cfg.seed, 0, TAG_PATH),
    };
    simulate(
        &sim,
        &[],
        &SimOptions {
            recording: Recording::Streaming,
            snapshot: Some(tmp.clone()),
        },
    )?;
    std::fs::rename(&tmp, w.dir().join(name)).map_err(|source| OutputError::Io { path: tmp, source })?;
    w.register(name)?;
    let every = (cfg.grid.n / 100).max(1);
    let mut times = CsvTable::new(&["row", "t"]);
    let rows = 1 + cfg.grid.n / every;
    for r in 0..rows {
        times.push(vec![r.to_string(), fmt_f64((r * every) as f64 * cfg.grid.dt())]);
    }
    w.write_table("snapshot_times.csv", &times)?;
    w.note("snapshot_columns", cfg.grid.m + 1);
    w.note("snapshot_rows", rows);
    w.note("snapshot_format", "little-endian f64, one row per time, nodes j/m for j = 0..m");
    Ok(0)
}

fn center(cfg: &ExperimentConfig, w: &mut RunWriter, threads: usize) -> Result<usize, HarnessError> {
    let kernels = cfg.kernel_specs()?;
    let field = cfg.coefficient_field()?;
    let slots = probe_slots(&kernels, &cfg.deltas[..1], &cfg.x0.points())?;
    let estimators = estimator_slots(cfg, &kernels)?;
    let probes: Vec<_> = slots.iter().map(|s| s.probe.clone()).collect();
    let sampler = Sampler::new(cfg, &field, cfg.initial_condition()?, &probes)?;
    let reps = run_replicates(&sampler, &slots, &estimators, cfg.replications.min(1), cfg.seed, threads);
    let mut curve = CsvTable::new(&["x0", "estimator", "kernel", "theta_hat", "ci_lo", "ci_hi", "theta_true"]);
    if let Some(rep) = reps.first() {
        for (ei, e) in estimators.iter().enumerate() {
            for c in rep.cells.iter().filter(|c| c.estimator == ei) {
                let s = &slots[c.probe];
                let truth = field.theta.value(s.probe.x0);
                let (theta, lo, hi) = match &c.result {
                    Ok(r) => {
                        let ci = e
                            .sigma
                            .and_then(|sig| r.clone().with_interval(0.0, sig, cfg.alpha).ok())
                            .and_then(|r| r.ci);
                        (fmt_f64(r.theta_hat), fmt_opt(ci.map(|c| c.lo)), fmt_opt(ci.map(|c| c.hi)))
                    }
                    Err(_) => (String::new(), String::new(), String::new()),
                };
                curve.push(vec![
                    fmt_f64(s.probe.x0),
                    e.estimator.kind().to_string(),
                    kernels[e.kernel].name.clone(),
                    theta,
                    lo,
                    hi,
                    fmt_f64(truth),
                ]);
            }
        }
    }
    w.write_table("curve.csv", &curve)?;
    let (table, failed) = replications_table(&reps, &slots, &estimators, &kernels);
    w.write_table("replications.csv", &table)?;
    Ok(failed)
}

/// (estimator slot, probe slot) → successful estimates.
fn collect(reps: &[Replicate]) -> HashMap<(usize, usize), Vec<EstimateReport>> {
    let mut by: HashMap<(usize, usize), Vec<EstimateReport>> = HashMap::new();
    for r in reps {
        for c in &r.cells {
            let entry = by.entry((c.estimator, c.probe)).or_default();
            if let Ok(rep) = &c.result {
                entry.push(rep.clone());
            }
        }
    }
    by
}

fn rmse(cfg: &ExperimentConfig, w: &mut RunWriter, threads: usize) -> Result<usize, HarnessError> {
    let kernels = cfg.kernel_specs()?;
    let field = cfg.coefficient_field()?;
    let x0s = cfg.x0.points();
    let slots = probe_slots(&kernels, &cfg.deltas, &x0s)?;
    let estimators = estimator_slots(cfg, &kernels)?;
    let probes: Vec<_> = slots.iter().map(|s| s.probe.clone()).collect();
    let sampler = Sampler::new(cfg, &field, cfg.initial_condition()?, &probes)?;
    let reps = run_replicates(&sampler, &slots, &estimators, cfg.replications, cfg.seed, threads);
    let by = collect(&reps);
    let mut table = CsvTable::new(&["delta", "estimator", "kernel", "x0", "rmse", "bias", "sd", "n_ok"]);
    if cfg.replications > 0 {
        for (ei, e) in estimators.iter().enumerate() {
            for &x in &x0s {
                for &d in &cfg.deltas {
                    let pi = slots
                        .iter()
                        .position(|s| s.kernel == e.kernel && s.delta == d && s.requested_x0 == x)
                        .expect("slot exists");
                    let truth = field.theta.value(slots[pi].probe.x0);
                    let vals: Vec<f64> = by.get(&(ei, pi)).map_or_else(Vec::new, |v| v.iter().map(|r| r.theta_hat).collect());
                    let (rmse, bias, sd) = error_summary(&vals, truth);
                    table.push(vec![
                        fmt_f64(d),
                        e.estimator.kind().to_string(),
                        kernels[e.kernel].name.clone(),
                        fmt_f64(x),
                        fmt_f64(rmse),
                        fmt_f64(bias),
                        fmt_f64(sd),
                        vals.len().to_string(),
                    ]);
                }
            }
        }
    }
    w.write_table("rmse.csv", &table)?;
    let (rt, failed) = replications_table(&reps, &slots, &estimators, &kernels);
    w.write_table("replications.csv", &rt)?;
    Ok(failed)
}

/// Coverage and standardised-error statistics for one (δ, estimator).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverageStats {
    pub covered_fraction: f64,
    pub z_mean: f64,
    pub z_var: f64,
    pub n: usize,
}

/// z = (θ̂ − θ)/(δ√(θΣ)); covered when θ lies in θ̂ ± δ√(θ̂Σ)q.
pub fn coverage_stats(reports: &[EstimateReport], truth: f64, sigma: f64, alpha: f64) -> CoverageStats {
    let n = reports.len();
    if n == 0 {
        return CoverageStats {
            covered_fraction: f64::NAN,
            z_mean: f64::NAN,
            z_var: f64::NAN,
            n,
        };
    }
    let mut covered = 0usize;
    let mut zs = Vec::with_capacity(n);
    for r in reports {
        if let Ok(with) = r.clone().with_interval(0.0, sigma, alpha) {
            if with.ci.is_some_and(|c| c.contains(truth)) {
                covered += 1;
            }
        }
        zs.push((r.theta_hat - truth) / (r.delta * (truth * sigma).sqrt()));
    }
    let mean = zs.iter().sum::<f64>() / n as f64;
    let var = if n > 1 {
        zs.iter().map(|z| (z - mean).powi(2)).sum::<f64>() / (n - 1) as f64
    } else {
        f64::NAN
    };
    CoverageStats {
        covered_fraction: covered as f64 / n as f64,
        z_mean: mean,
        z_var: var,
        n,
    }
}

fn coverage(cfg: &ExperimentConfig, w: &mut RunWriter, threads: usize) -> Result<usize, HarnessError> {
    let kernels = cfg.kernel_specs()?;
    let kernels = &kernels[..1];
    let field = cfg.coefficient_field()?;
    let x0 = cfg.x0.points()[0];
    let slots = probe_slots(kernels, &cfg.deltas, &[x0])?;
    let estimators: Vec<EstimatorSlot> = estimator_slots(cfg, kernels)?.into_iter().filter(|e| e.sigma.is_some()).collect();
    let probes: Vec<_> = slots.iter().map(|s| s.probe.clone()).collect();
    let sampler = Sampler::new(cfg, &field, cfg.initial_condition()?, &probes)?;
    let reps = run_replicates(&sampler, &slots, &estimators, cfg.replications, cfg.seed, threads);
    let by = collect(&reps);
    let mut cov = CsvTable::new(&["delta", "estimator", "level", "covered_fraction", "n"]);
    let mut z = CsvTable::new(&["delta", "estimator", "z_mean", "z_var", "n"]);
    if cfg.replications > 0 {
        for (ei, e) in estimators.iter().enumerate() {
            for (pi, s) in slots.iter().enumerate() {
                let truth = field.theta.value(s.probe.x0);
                let empty = Vec::new();
                let reports = by.get(&(ei, pi)).unwrap_or(&empty);
                let st = coverage_stats(reports, truth, e.sigma.expect("filtered"), cfg.alpha);
                let kind = e.estimator.kind().to_string();
                cov.push(vec![
                    fmt_f64(s.delta),
                    kind.clone(),
                    fmt_f64(1.0 - cfg.alpha),
                    fmt_f64(st.covered_fraction),
                    st.n.to_string(),
                ]);
                z.push(vec![fmt_f64(s.delta), kind, fmt_f64(st.z_mean), fmt_f64(st.z_var), st.n.to_string()]);
            }
        }
    }
    w.write_table("coverage.csv", &cov)?;
    w.write_table("standardized.csv", &z)?;
    let (rt, failed) = replications_table(&reps, &slots, &estimators, kernels);
    w.write_table("replications.csv", &rt)?;
    Ok(failed)
}

fn validate_oracle(cfg: &ExperimentConfig, w: &mut RunWriter, threads: usize) -> Result<usize, HarnessError> {
    let rows = checks::all(cfg.replications.max(2), cfg.seed, threads);
    let mut t = CsvTable::new(&["check_name", "value", "reference", "rel_err", "pass"]);
    let mut failed = 0;
    for r in &rows {
        failed += (!r.pass) as usize;
        t.push(vec![
            r.name.clone(),
            fmt_f64(r.value),
            fmt_f64(r.reference),
            fmt_f64(r.rel_err),
            r.pass.to_string(),
        ]);
    }
    w.write_table("oracle.csv", &t)?;
    Ok(failed)
}

pub const ASYMPTOTICS_HEADER: [&str; 7] = ["kernel", "mu_A", "sigma_A", "mu1_P", "mu2_P", "sigma_P", "ordering_ratio"];

fn asymptotics_table(cfg: &ExperimentConfig, w: &mut RunWriter) -> Result<usize, HarnessError> {
    let kernels = cfg.kernel_specs()?;
    let field = cfg.coefficient_field()?;
    let local = LocalCoefficients::from_field(&field, cfg.x0.points()[0]);
    let mut t = CsvTable::new(&ASYMPTOTICS_HEADER);
    let mut failed = 0;
    for k in &kernels {
        match constants_row(k, &local, cfg.grid.horizon) {
            Ok(r) => t.push(vec![
                r.kernel,
                fmt_f64(r.mu_a),
                fmt_f64(r.sigma_a),
                fmt_opt(r.mu1_p),
                fmt_opt(r.mu2_p),
                fmt_opt(r.sigma_p),
                fmt_opt(r.ordering_ratio),
            ]),
            Err(e) => {
                failed += 1;
                w.note(&format!("error_{}", k.name), e);
                t.push(vec![k.name.clone(), String::new(), String::new(), String::new(), String::new(), String::new(), String::new()]);
            }
        }
    }
    w.write_table("asymptotics.csv", &t)?;
    Ok(failed)
}

/// Samples one replication with full series and writes one CSV per probe
/// under `paths/`, indexed by `paths.csv`.
pub fn simulate_paths(cfg: &ExperimentConfig) -> Result<RunSummary, HarnessError> {
    let warnings = cfg.validate()?;
    let kernels = cfg.kernel_specs()?;
    let field = cfg.coefficient_field()?;
    let slots = probe_slots(&kernels, &cfg.deltas, &cfg.x0.points())?;
    let probes: Vec<_> = slots.iter().map(|s| s.probe.clone()).collect();
    let sampler = Sampler::new(cfg, &field, cfg.initial_condition()?, &probes)?;
    let paths = sampler
        .sample(&probes, derive_seed(cfg.seed, 0, TAG_PATH), Recording::Full)
        .map_err(HarnessError::Input)?;
    let mut manifest = Manifest::for_config(cfg);
    manifest.study = "simulate".into();
    let mut w = RunWriter::new(&cfg.output_dir, manifest)?;
    let mut index = CsvTable::new(&["file", "kernel", "delta", "x0", "x0_used"]);
    for (i, (s, p)) in slots.iter().zip(&paths).enumerate() {
        let name = format!("paths/path_{i:03}.csv");
        let mut buf = Vec::new();
        p.write_csv(&mut buf)?;
        w.write_bytes(&name, &buf)?;
        index.push(vec![
            name,
            kernels[s.kernel].name.clone(),
            fmt_f64(s.delta),
            fmt_f64(s.requested_x0),
            fmt_f64(s.probe.x0),
        ]);
    }
    w.write_table("paths.csv", &index)?;
    let manifest = w.finish()?;
    Ok(RunSummary {
        study: "simulate".into(),
        dir: cfg.output_dir.clone(),
        manifest,
        warnings,
        failed: 0,
    })
}

/// Estimates every path listed in `input/paths.csv` with both estimators and
/// writes `estimates.csv` to the configured output directory.
pub fn estimate_paths(cfg: &ExperimentConfig, input: &Path) -> Result<RunSummary, HarnessError> {
    let warnings = cfg.validate()?;
    let kernels = cfg.kernel_specs()?;
    let index = CsvTable::read(&input.join("paths.csv"))?;
    let files = index.column("file").ok_or_else(|| HarnessError::Input("paths.csv lacks a file column".into()))?;
    let mut header: Vec<&str> = EstimateReport::CSV_HEADER.to_vec();
    header.push("status");
    let mut out = CsvTable::new(&header);
    let mut failed = 0;
    let mut cache: HashMap<String, Vec<EstimatorSlot>> = HashMap::new();
    for f in files {
        let file = std::fs::File::open(input.join(f)).map_err(|source| OutputError::Io { path: input.join(f), source })?;
        let path = MeasurementPath::read_csv(std::io::BufReader::new(file))?;
        if !cache.contains_key(&path.kernel) {
            let k = match kernels.iter().find(|k| k.name == path.kernel) {
                Some(k) => k.clone(),
                None => kernel_by_name(&path.kernel)?,
            };
            cache.insert(path.kernel.clone(), estimator_slots(cfg, std::slice::from_ref(&k))?);
        }
        for e in &cache[&path.kernel] {
            let res = e.estimator.apply(&path).and_then(|r| match e.sigma {
                Some(s) if r.theta_hat > 0.0 => r.with_interval(0.0, s, cfg.alpha),
                _ => Ok(r),
            });
            match res {
                Ok(r) => {
                    let mut row = r.csv_row();
                    row.push("ok".into());
                    out.push(row);
                }
                Err(err) => {
                    failed += 1;
                    let mut row = vec![String::new(); EstimateReport::CSV_HEADER.len()];
                    row[0] = e.estimator.kind().to_string();
                    row[1] = path.kernel.clone();
                    row[2] = fmt_f64(path.delta);
                    row[3] = fmt_f64(path.x0);
                    row.push(format!("error: {err}"));
                    out.push(row);
                }
            }
        }
    }
    let mut manifest = Manifest::for_config(cfg);
    manifest.study = "estimate".into();
    let mut w = RunWriter::new(&cfg.output_dir, manifest)?;
    w.note("input", input.display());
    w.write_table("estimates.csv", &out)?;
    let manifest = w.finish()?;
    Ok(RunSummary {
        study: "estimate".into(),
        dir: cfg.output_dir.clone(),
        manifest,
        warnings,
        failed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(study: Study, dir: &Path) -> ExperimentConfig {
        let mut c = ExperimentConfig::defaults(study);
        c.grid.m = 40;
        c.grid.n = 400;
        c.grid.horizon = 0.2;
        c.deltas = vec![0.15, 0.3];
        c.replications = 4;
        c.output_dir = dir.to_path_buf();
        c.seed = 11;
        c
    }

    #[test]
    fn error_summary_decomposes() {
        let (rmse, bias, sd) = error_summary(&[1.0, 2.0, 3.0], 1.5);
        assert!((rmse * rmse - (bias * bias + sd * sd)).abs() < 1e-14);
        assert!((bias - 0.5).abs() < 1e-15);
        assert!(error_summary(&[], 1.0).0.is_nan());
    }

    #[test]
    fn rmse_study_is_thread_count_invariant() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let mut ca = small(Study::FigRmse, a.path());
        ca.thread_cap = Some(1);
        let mut cb = small(Study::FigRmse, b.path());
        cb.thread_cap = Some(3);
        let sa = run(&ca).unwrap();
        run(&cb).unwrap();
        assert_eq!(sa.failed, 0);
        for f in ["rmse.csv", "replications.csv", "manifest.ini"] {
            assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
        }
        let t = CsvTable::read(&a.path().join("rmse.csv")).unwrap();
        assert_eq!(t.header, ["delta", "estimator", "kernel", "x0", "rmse", "bias", "sd", "n_ok"]);
        // 2 estimators × 2 kernels × 2 deltas
        assert_eq!(t.rows.len(), 8);
        assert!(t.column("n_ok").unwrap().iter().all(|n| *n == "4"));
    }

    #[test]
    fn zero_replications_give_header_only() {
        let d = tempfile::tempdir().unwrap();
        let mut c = small(Study::FigRmse, d.path());
        c.replications = 0;
        run(&c).unwrap();
        assert_eq!(
            std::fs::read_to_string(d.path().join("rmse.csv")).unwrap(),
            "delta,estimator,kernel,x0,rmse,bias,sd,n_ok\n"
        );
    }

    #[test]
    fn failing_replication_is_isolated() {
        let (k1, _) = crate::kernels::make_paper_kernels();
        let slots = probe_slots(std::slice::from_ref(&k1), &[0.2], &[0.5]).unwrap();
        let mut cfg = ExperimentConfig::defaults(Study::FigRmse);
        cfg.kernels = vec!["k1".into()];
        let est = estimator_slots(&cfg, std::slice::from_ref(&k1)).unwrap();
        // noiseless zero field: every estimate is degenerate, but the study completes
        let sampler = Sampler::Fd(SimConfig {
            grid: crate::fd::Grid::new(20, 10, 0.1).unwrap(),
            coeffs: CoefficientField::constant(1.0, 0.0),
            initial: InitialCondition::Zero,
            seed: 0,
        });
        let reps = run_replicates(&sampler, &slots, &est, 2, 0, 1);
        assert_eq!(reps.len(), 2);
        let (t, failed) = replications_table(&reps, &slots, &est, std::slice::from_ref(&k1));
        assert_eq!(failed, 2);
        assert!(t.column("status").unwrap().iter().all(|s| s.starts_with("error")));
    }

    #[test]
    fn heatmap_and_center_artifacts() {
        let d = tempfile::tempdir().unwrap();
        let c = small(Study::FigHeatmap, d.path());
        let s = run(&c).unwrap();
        let snaps = crate::fd::read_snapshots(&d.path().join("snapshots.bin"), 40).unwrap();
        assert_eq!(snaps.len(), 101);
        assert!(s.manifest.files.iter().any(|(n, _)| n == "snapshots.bin"));

        let d = tempfile::tempdir().unwrap();
        let mut c = small(Study::FigCenter, d.path());
        c.deltas = vec![0.1];
        c.x0 = super::super::config::X0Spec::Grid(5);
        run(&c).unwrap();
        let t = CsvTable::read(&d.path().join("curve.csv")).unwrap();
        assert_eq!(t.rows.len(), 4 * 5);
        // K^(2) has no proxy variance, so no interval
        let rows: Vec<_> = t.rows.iter().filter(|r| r[1] == "proxy" && r[2] == "k2").collect();
        assert!(rows.iter().all(|r| r[4].is_empty()));
    }

    #[test]
    fn simulate_then_estimate() {
        let d = tempfile::tempdir().unwrap();
        let mut c = small(Study::FigRmse, &d.path().join("sim"));
        c.kernels = vec!["k1".into()];
        simulate_paths(&c).unwrap();
        let input = c.output_dir.clone();
        c.output_dir = d.path().join("est");
        let s = estimate_paths(&c, &input).unwrap();
        let t = CsvTable::read(&d.path().join("est/estimates.csv")).unwrap();
        assert_eq!(t.rows.len(), 2 * 2);
        assert_eq!(s.failed, t.column("status").unwrap().iter().filter(|s| **s != "ok").count());
    }
}
