//! Declarative experiment configuration.
//!
//! ```ini
//! [study]
//! name = fig-rmse          ; fig-heatmap | fig-center | fig-rmse | coverage | validate-oracle | asymptotics-table
//! replications = 200
//! seed = 20240601
//! backend = fd             ; fd | oracle
//! start = zero             ; zero | stationary (oracle backend)
//! qv_mode = realized       ; realized | analytic
//! ito_rule = left          ; left | stratonovich
//! alpha = 0.05
//! output_dir = out
//! threads = 4              ; optional cap
//!
//! [grid]
//! m = 500
//! n = 250000
//! T = 1
//!
//! [coefficients]
//! theta = two-level        ; constant(c) | linear(s) | linear(s, mid) | two-level | tabulated:<file>
//! sigma = 1
//! a = 0
//! b = 0
//! initial = two-peaks      ; zero | two-peaks | sine(k, amplitude) | tabulated:<file>
//!
//! [kernels]
//! names = k1, k2           ; k1 | k2 | custom:<file>
//! deltas = 0.05, 0.08, 0.12, 0.2, 0.3
//! x0 = 0.6                 ; or x0_grid = 33
//! ```

use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use ini::Ini;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::fd::{Coefficient, CoefficientField, Grid, InitialCondition};
use crate::kernels::{kernel_by_name, load_tabulated, rescale, KernelSpec, Spline};
use crate::measurements::{ItoRule, QvMode};
use crate::spectral::Start;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("[{section}] {key}: {message}")]
    Field {
        section: &'static str,
        key: &'static str,
        message: String,
    },
    #[error("config syntax: {0}")]
    Syntax(String),
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

fn field(section: &'static str, key: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Field {
        section,
        key,
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Study {
    FigHeatmap,
    FigCenter,
    FigRmse,
    Coverage,
    ValidateOracle,
    AsymptoticsTable,
}

impl Study {
    pub const ALL: [Study; 6] = [
        Study::FigHeatmap,
        Study::FigCenter,
        Study::FigRmse,
        Study::Coverage,
        Study::ValidateOracle,
        Study::AsymptoticsTable,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Study::FigHeatmap => "fig-heatmap",
            Study::FigCenter => "fig-center",
            Study::FigRmse => "fig-rmse",
            Study::Coverage => "coverage",
            Study::ValidateOracle => "validate-oracle",
            Study::AsymptoticsTable => "asymptotics-table",
        }
    }
}

impl FromStr for Study {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Study::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| format!("unknown study `{s}`"))
    }
}

impl fmt::Display for Study {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Path generator used for Monte Carlo studies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    /// Semi-implicit finite differences.
    Fd,
    /// Exact spectral Gaussian sampler; constant θ only.
    Oracle,
}

#[derive(Debug, Clone)]
pub enum X0Spec {
    List(Vec<f64>),
    /// `count` equispaced interior points i/(count + 1).
    Grid(usize),
}

impl X0Spec {
    pub fn points(&self) -> Vec<f64> {
        match self {
            X0Spec::List(v) => v.clone(),
            X0Spec::Grid(k) => (1..=*k).map(|i| i as f64 / (*k + 1) as f64).collect(),
        }
    }
}

/// Everything needed to run one study. Built from an INI file or in code.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub study: Study,
    pub backend: Backend,
    pub start: Start,
    pub grid: Grid,
    pub theta: String,
    pub sigma: f64,
    pub a: String,
    pub b: String,
    pub initial: String,
    pub kernels: Vec<String>,
    pub deltas: Vec<f64>,
    pub x0: X0Spec,
    pub replications: usize,
    pub seed: u64,
    pub qv_mode: QvMode,
    pub ito_rule: ItoRule,
    pub alpha: f64,
    pub output_dir: PathBuf,
    pub thread_cap: Option<usize>,
    /// Directory relative `tabulated:`/`custom:` paths are resolved against.
    pub base_dir: PathBuf,
}

impl ExperimentConfig {
    /// Desk-scale defaults for a study.
    pub fn defaults(study: Study) -> Self {
        Self {
            study,
            backend: if study == Study::Coverage { Backend::Oracle } else { Backend::Fd },
            start: if study == Study::Coverage { Start::Stationary } else { Start::Zero },
            grid: Grid {
                m: 500,
                n: 250_000,
                horizon: 1.0,
            },
            theta: if study == Study::Coverage { "constant(1)".into() } else { "two-level".into() },
            sigma: 1.0,
            a: "constant(0)".into(),
            b: "constant(0)".into(),
            initial: if study == Study::Coverage { "zero".into() } else { "two-peaks".into() },
            kernels: vec!["k1".into(), "k2".into()],
            deltas: match study {
                Study::FigCenter => vec![0.05],
                Study::Coverage => vec![0.05],
                _ => vec![0.05, 0.08, 0.12, 0.2, 0.3],
            },
            x0: match study {
                Study::FigCenter => X0Spec::Grid(33),
                _ => X0Spec::List(vec![0.6]),
            },
            replications: match study {
                Study::FigRmse => 200,
                Study::Coverage => 1000,
                Study::ValidateOracle => 500,
                _ => 1,
            },
            seed: 1,
            qv_mode: QvMode::Realized,
            ito_rule: ItoRule::LeftPoint,
            alpha: 0.05,
            output_dir: PathBuf::from("out"),
            thread_cap: None,
            base_dir: PathBuf::from("."),
        }
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Self::parse(&text)?;
        if let Some(dir) = path.parent() {
            cfg.base_dir = dir.to_path_buf();
        }
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let ini = Ini::load_from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
        // `;` or `#` after whitespace starts an inline comment
        let get = |section: &str, key: &str| {
            ini.section(Some(section)).and_then(|s| s.get(key)).map(|v| {
                let cut = [" ;", " #", "\t;", "\t#"].iter().filter_map(|p| v.find(p)).min().unwrap_or(v.len());
                v[..cut].trim()
            })
        };
        let study_name = get("study", "name").ok_or_else(|| field("study", "name", "missing"))?;
        let study = study_name.parse().map_err(|e: String| field("study", "name", e))?;
        let mut cfg = Self::defaults(study);

        for (sec, keys) in [
            ("study", &["name", "replications", "seed", "backend", "start", "qv_mode", "ito_rule", "alpha", "output_dir", "threads"][..]),
            ("grid", &["m", "n", "T"][..]),
            ("coefficients", &["theta", "sigma", "a", "b", "initial"][..]),
            ("kernels", &["names", "deltas", "x0", "x0_grid"][..]),
        ] {
            if let Some(s) = ini.section(Some(sec)) {
                for (k, _) in s.iter() {
                    if !keys.contains(&k) {
                        return Err(ConfigError::Syntax(format!("[{sec}] unknown key `{k}`")));
                    }
                }
            }
        }
        for (name, _) in ini.iter() {
            if let Some(name) = name {
                if !["study", "grid", "coefficients", "kernels"].contains(&name) {
                    return Err(ConfigError::Syntax(format!("unknown section [{name}]")));
                }
            }
        }

        fn num<T: FromStr>(v: Option<&str>, sec: &'static str, key: &'static str, dflt: T) -> Result<T, ConfigError> {
            match v {
                None => Ok(dflt),
                Some(s) => s.parse().map_err(|_| field(sec, key, format!("cannot parse `{s}`"))),
            }
        }
        fn list(v: &str, sec: &'static str, key: &'static str) -> Result<Vec<f64>, ConfigError> {
            v.split(',')
                .filter(|s| !s.trim().is_empty())
                .map(|s| s.trim().parse().map_err(|_| field(sec, key, format!("cannot parse `{}`", s.trim()))))
                .collect()
        }

        cfg.replications = num(get("study", "replications"), "study", "replications", cfg.replications)?;
        cfg.seed = num(get("study", "seed"), "study", "seed", cfg.seed)?;
        if let Some(b) = get("study", "backend") {
            cfg.backend = match b {
                "fd" => Backend::Fd,
                "oracle" => Backend::Oracle,
                _ => return Err(field("study", "backend", format!("expected fd or oracle, got `{b}`"))),
            };
        }
        if let Some(s) = get("study", "start") {
            cfg.start = match s {
                "zero" => Start::Zero,
                "stationary" => Start::Stationary,
                _ => return Err(field("study", "start", format!("expected zero or stationary, got `{s}`"))),
            };
        }
        if let Some(q) = get("study", "qv_mode") {
            cfg.qv_mode = match q {
                "realized" => QvMode::Realized,
                "analytic" => QvMode::Analytic,
                _ => return Err(field("study", "qv_mode", format!("expected realized or analytic, got `{q}`"))),
            };
        }
        if let Some(r) = get("study", "ito_rule") {
            cfg.ito_rule = match r {
                "left" => ItoRule::LeftPoint,
                "stratonovich" => ItoRule::StratonovichCorrected,
                _ => return Err(field("study", "ito_rule", format!("expected left or stratonovich, got `{r}`"))),
            };
        }
        cfg.alpha = num(get("study", "alpha"), "study", "alpha", cfg.alpha)?;
        if let Some(o) = get("study", "output_dir") {
            cfg.output_dir = PathBuf::from(o);
        }
        if let Some(t) = get("study", "threads") {
            cfg.thread_cap = Some(t.parse().map_err(|_| field("study", "threads", format!("cannot parse `{t}`")))?);
        }

        cfg.grid.m = num(get("grid", "m"), "grid", "m", cfg.grid.m)?;
        cfg.grid.n = num(get("grid", "n"), "grid", "n", cfg.grid.n)?;
        cfg.grid.horizon = num(get("grid", "T"), "grid", "T", cfg.grid.horizon)?;

        if let Some(t) = get("coefficients", "theta") {
            cfg.theta = t.to_string();
        }
        cfg.sigma = num(get("coefficients", "sigma"), "coefficients", "sigma", cfg.sigma)?;
        if let Some(a) = get("coefficients", "a") {
            cfg.a = a.to_string();
        }
        if let Some(b) = get("coefficients", "b") {
            cfg.b = b.to_string();
        }
        if let Some(i) = get("coefficients", "initial") {
            cfg.initial = i.to_string();
        }

        if let Some(k) = get("kernels", "names") {
            cfg.kernels = k.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
        }
        if let Some(d) = get("kernels", "deltas") {
            cfg.deltas = list(d, "kernels", "deltas")?;
        }
        match (get("kernels", "x0"), get("kernels", "x0_grid")) {
            (Some(_), Some(_)) => return Err(field("kernels", "x0", "give x0 or x0_grid, not both")),
            (Some(x), None) => cfg.x0 = X0Spec::List(list(x, "kernels", "x0")?),
            (None, Some(g)) => cfg.x0 = X0Spec::Grid(g.parse().map_err(|_| field("kernels", "x0_grid", format!("cannot parse `{g}`")))?),
            (None, None) => {}
        }
        Ok(cfg)
    }

    /// Checks every field; returns the non-fatal warnings.
    pub fn validate(&self) -> Result<Vec<String>, ConfigError> {
        let mut warnings = Vec::new();
        Grid::new(self.grid.m, self.grid.n, self.grid.horizon).map_err(|e| field("grid", "m", e.to_string()))?;
        let m2 = (self.grid.m * self.grid.m) as f64;
        if (self.grid.n as f64) < m2 / 8.0 {
            warnings.push(format!(
                "n = {} is below m²/8 = {:.0}; the scheme needs n of order m² to resolve the noise",
                self.grid.n,
                m2 / 8.0
            ));
        }
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(field("coefficients", "sigma", "must be non-negative"));
        }
        let field_ = self.coefficient_field()?;
        for i in 0..=200 {
            let x = i as f64 / 200.0;
            let v = field_.theta.value(x);
            if !(v > 0.0) {
                return Err(field("coefficients", "theta", format!("θ({x}) = {v} is not positive")));
            }
        }
        if self.backend == Backend::Oracle && !(field_.theta.is_constant() && field_.a.is_constant() && field_.b.is_constant()) {
            return Err(field("study", "backend", "the oracle backend needs constant θ and a = b = 0"));
        }
        self.initial_condition()?;
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(field("study", "alpha", "must lie in (0, 1]"));
        }
        if self.thread_cap == Some(0) {
            return Err(field("study", "threads", "must be at least 1"));
        }
        let kernels = self.kernel_specs()?;
        if kernels.is_empty() {
            return Err(field("kernels", "names", "at least one kernel is required"));
        }
        if self.deltas.is_empty() {
            return Err(field("kernels", "deltas", "at least one δ is required"));
        }
        let x0s = self.x0.points();
        if x0s.is_empty() {
            return Err(field("kernels", "x0", "at least one x₀ is required"));
        }
        for &x in &x0s {
            if !(x > 0.0 && x < 1.0) {
                return Err(field("kernels", "x0", format!("{x} is outside (0, 1)")));
            }
        }
        for k in &kernels {
            for &d in &self.deltas {
                for &x in &x0s {
                    let p = rescale(k, d, x).map_err(|e| field("kernels", "deltas", format!("{} at δ = {d}: {e}", k.name)))?;
                    if (p.x0 - x).abs() > 1e-12 && self.study != Study::FigCenter {
                        warnings.push(format!("{} at δ = {d}: x₀ = {x} shifted to {}", k.name, p.x0));
                    }
                }
            }
        }
        if self.study == Study::Coverage && kernels.len() > 1 {
            warnings.push(format!("coverage uses only the first kernel ({})", kernels[0].name));
        }
        Ok(warnings)
    }

    fn resolve(&self, p: &str) -> PathBuf {
        let p = Path::new(p);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    fn coefficient(&self, spec: &str, key: &'static str) -> Result<Coefficient, ConfigError> {
        if let Some(path) = spec.strip_prefix("tabulated:") {
            return Ok(Coefficient::Tabulated(Arc::new(self.spline(path, "coefficients", key)?)));
        }
        if let Ok(c) = spec.parse::<f64>() {
            return Ok(Coefficient::Constant(c));
        }
        Coefficient::preset(spec).map_err(|e| field("coefficients", key, e.to_string()))
    }

    fn spline(&self, path: &str, sec: &'static str, key: &'static str) -> Result<Spline, ConfigError> {
        let path = self.resolve(path.trim());
        let text = std::fs::read_to_string(&path).map_err(|e| field(sec, key, format!("{}: {e}", path.display())))?;
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            let mut it = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty());
            let (Some(x), Some(y)) = (it.next(), it.next()) else {
                return Err(field(sec, key, format!("bad table line `{line}`")));
            };
            match (x.parse::<f64>(), y.parse::<f64>()) {
                (Ok(x), Ok(y)) => {
                    xs.push(x);
                    ys.push(y);
                }
                // tolerate a header row
                _ if xs.is_empty() => continue,
                _ => return Err(field(sec, key, format!("bad table line `{line}`"))),
            }
        }
        Spline::new(xs, ys).map_err(|e| field(sec, key, e))
    }

    pub fn coefficient_field(&self) -> Result<CoefficientField, ConfigError> {
        Ok(CoefficientField {
            theta: self.coefficient(&self.theta, "theta")?,
            a: self.coefficient(&self.a, "a")?,
            b: self.coefficient(&self.b, "b")?,
            sigma: Coefficient::Constant(self.sigma),
        })
    }

    pub fn initial_condition(&self) -> Result<InitialCondition, ConfigError> {
        let s = self.initial.trim();
        if let Some(path) = s.strip_prefix("tabulated:") {
            return Ok(InitialCondition::Tabulated(Arc::new(self.spline(path, "coefficients", "initial")?)));
        }
        match s {
            "zero" => return Ok(InitialCondition::Zero),
            "two-peaks" => return Ok(InitialCondition::default_peaks()),
            _ => {}
        }
        let bad = || field("coefficients", "initial", format!("unknown initial condition `{s}`"));
        let args = s.strip_prefix("sine(").and_then(|r| r.strip_suffix(')')).ok_or_else(bad)?;
        let parts: Vec<&str> = args.split(',').map(str::trim).collect();
        match parts.as_slice() {
            [k, a] => Ok(InitialCondition::Sine {
                k: k.parse().map_err(|_| bad())?,
                amplitude: a.parse().map_err(|_| bad())?,
            }),
            _ => Err(bad()),
        }
    }

    pub fn kernel_specs(&self) -> Result<Vec<KernelSpec>, ConfigError> {
        self.kernels
            .iter()
            .map(|name| {
                let resolved = match name.strip_prefix("custom:") {
                    Some(p) => match load_tabulated(self.resolve(p)) {
                        Ok(k) => return Ok(k),
                        Err(e) => return Err(field("kernels", "names", format!("{name}: {e}"))),
                    },
                    None => name.clone(),
                };
                kernel_by_name(&resolved).map_err(|e| field("kernels", "names", format!("{name}: {e}")))
            })
            .collect()
    }

    /// Normalised INI text of the effective configuration. Hashing this, not
    /// the input file, makes comments and key order irrelevant.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
        let _ = writeln!(s, "[study]");
        let _ = writeln!(s, "name = {}", self.study);
        let _ = writeln!(s, "replications = {}", self.replications);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "backend = {}", match self.backend { Backend::Fd => "fd", Backend::Oracle => "oracle" });
        let _ = writeln!(s, "start = {}", match self.start { Start::Zero => "zero", Start::Stationary => "stationary" });
        let _ = writeln!(s, "qv_mode = {}", match self.qv_mode { QvMode::Realized => "realized", QvMode::Analytic => "analytic" });
        let _ = writeln!(s, "ito_rule = {}", match self.ito_rule { ItoRule::LeftPoint => "left", ItoRule::StratonovichCorrected => "stratonovich" });
        let _ = writeln!(s, "alpha = {}", self.alpha);
        let _ = writeln!(s, "\n[grid]");
        let _ = writeln!(s, "m = {}", self.grid.m);
        let _ = writeln!(s, "n = {}", self.grid.n);
        let _ = writeln!(s, "T = {}", self.grid.horizon);
        let _ = writeln!(s, "\n[coefficients]");
        let _ = writeln!(s, "theta = {}", self.theta);
        let _ = writeln!(s, "sigma = {}", self.sigma);
        let _ = writeln!(s, "a = {}", self.a);
        let _ = writeln!(s, "b = {}", self.b);
        let _ = writeln!(s, "initial = {}", self.initial);
        let _ = writeln!(s, "\n[kernels]");
        let _ = writeln!(s, "names = {}", self.kernels.join(", "));
        let _ = writeln!(s, "deltas = {}", join(&self.deltas));
        match &self.x0 {
            X0Spec::List(v) => {
                let _ = writeln!(s, "x0 = {}", join(v));
            }
            X0Spec::Grid(k) => {
                let _ = writeln!(s, "x0_grid = {k}");
            }
        }
        s
    }

    /// Hex SHA-256 of [`canonical`](Self::canonical).
    pub fn hash(&self) -> String {
        hex(&Sha256::digest(self.canonical().as_bytes()))
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().fold(String::with_capacity(bytes.len() * 2), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const RMSE: &str = "
[study]
name = fig-rmse   ; inline comment
replications = 3
seed = 7
[grid]
m = 40
n = 400
T = 0.5
[coefficients]
theta = two-level
[kernels]
names = k1, k2
deltas = 0.1, 0.2
x0 = 0.6
";

    #[test]
    fn parses_and_round_trips() {
        let c = ExperimentConfig::parse(RMSE).unwrap();
        assert_eq!(c.study, Study::FigRmse);
        assert_eq!(c.grid.m, 40);
        assert_eq!(c.deltas, vec![0.1, 0.2]);
        assert_eq!(c.validate().unwrap().len(), 0);
        let again = ExperimentConfig::parse(&c.canonical()).unwrap();
        assert_eq!(again.canonical(), c.canonical());
        assert_eq!(again.hash(), c.hash());
    }

    #[test]
    fn field_level_errors() {
        let bad = RMSE.replace("m = 40", "m = forty");
        let e = ExperimentConfig::parse(&bad).unwrap_err().to_string();
        assert!(e.contains("[grid] m"), "{e}");
        let bad = RMSE.replace("deltas = 0.1, 0.2", "deltas = 0.1, 0.6");
        let e = ExperimentConfig::parse(&bad).unwrap().validate().unwrap_err().to_string();
        assert!(e.contains("[kernels] deltas"), "{e}");
        let bad = RMSE.replace("theta = two-level", "theta = wiggly");
        assert!(ExperimentConfig::parse(&bad).unwrap().validate().is_err());
        let bad = RMSE.replace("seed = 7", "seed = 7\ncolour = red");
        assert!(matches!(ExperimentConfig::parse(&bad), Err(ConfigError::Syntax(_))));
        let bad = RMSE.replace("fig-rmse", "fig-nothing");
        assert!(ExperimentConfig::parse(&bad).is_err());
        let bad = RMSE.replace("[coefficients]", "[coefficients]\n").replace("theta = two-level", "theta = two-level\n[study2]\nx = 1");
        assert!(ExperimentConfig::parse(&bad).is_err());
    }

    #[test]
    fn coarse_time_grid_warns() {
        let c = ExperimentConfig::parse(&RMSE.replace("n = 400", "n = 100")).unwrap();
        let w = c.validate().unwrap();
        assert_eq!(w.len(), 1);
        assert!(w[0].contains("m²/8"));
    }

    #[test]
    fn oracle_backend_needs_constant_theta() {
        let c = ExperimentConfig::parse(&RMSE.replace("seed = 7", "seed = 7\nbackend = oracle")).unwrap();
        assert!(c.validate().is_err());
        let c = ExperimentConfig::parse(
            &RMSE
                .replace("seed = 7", "seed = 7\nbackend = oracle")
                .replace("two-level", "constant(0.5)"),
        )
        .unwrap();
        c.validate().unwrap();
    }

    #[test]
    fn x0_grid_and_initial_conditions() {
        let mut c = ExperimentConfig::defaults(Study::FigCenter);
        assert_eq!(c.x0.points().len(), 33);
        assert!((c.x0.points()[16] - 0.5).abs() < 1e-15);
        c.initial = "sine(2, 0.5)".into();
        assert!(matches!(c.initial_condition().unwrap(), InitialCondition::Sine { k: 2, .. }));
        c.initial = "sine(2)".into();
        assert!(c.initial_condition().is_err());
        c.theta = "0.7".into();
        assert_eq!(c.coefficient_field().unwrap().theta.value(0.1), 0.7);
    }

    #[test]
    fn tabulated_coefficient_from_file() {
        let dir = tempfile::tempdir().unwrap();
        let table: String = (0..=20).map(|i| format!("{},{}\n", i as f64 / 20.0, 1.0 + i as f64 / 20.0)).collect();
        std::fs::write(dir.path().join("theta.csv"), format!("x,theta\n{table}")).unwrap();
        let cfg_path = dir.path().join("run.ini");
        std::fs::write(&cfg_path, RMSE.replace("two-level", "tabulated:theta.csv")).unwrap();
        let c = ExperimentConfig::from_file(&cfg_path).unwrap();
        c.validate().unwrap();
        let f = c.coefficient_field().unwrap();
        assert!((f.theta.value(0.5) - 1.5).abs() < 1e-12);
    }
}
