//! CSV tables, atomic file writes and the run manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use ini::Ini;
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::config::{hex, ExperimentConfig};

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("manifest {path}: {message}")]
    Manifest { path: PathBuf, message: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> OutputError + '_ {
    move |source| OutputError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes through a temporary sibling and renames it into place, so readers
/// never observe a half-written file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), OutputError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp).map_err(io_err(&tmp))?;
        f.write_all(bytes).map_err(io_err(&tmp))?;
        f.sync_all().map_err(io_err(&tmp))?;
    }
    fs::rename(&tmp, path).map_err(io_err(path))
}

/// A header plus rows of already formatted cells.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, OutputError> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| OutputError::Io {
            path: PathBuf::from("<memory>"),
            source: e.into_error(),
        })
    }

    pub fn read(path: &Path) -> Result<Self, OutputError> {
        let mut r = csv::Reader::from_path(path)?;
        let header = r.headers()?.iter().map(str::to_string).collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|r| r.iter().map(str::to_string).collect()))
            .collect::<Result<_, _>>()?;
        Ok(Self { header, rows })
    }

    /// Column by name.
    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i].as_str()).collect())
    }
}

/// Shortest representation that parses back to the same f64, switching to
/// exponent form for very small or large magnitudes; NaN as empty.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v:?}")
    }
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, fmt_f64)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

/// What produced a run directory: the effective configuration, its hash, the
/// seed and the hash of each artifact.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub study: String,
    pub seed: u64,
    pub config_hash: String,
    pub version: String,
    pub config: String,
    /// (file name, sha256) in write order.
    pub files: Vec<(String, String)>,
    /// Study specific facts, e.g. snapshot geometry.
    pub extra: Vec<(String, String)>,
}

pub const MANIFEST_NAME: &str = "manifest.ini";

impl Manifest {
    pub fn for_config(cfg: &ExperimentConfig) -> Self {
        Self {
            study: cfg.study.to_string(),
            seed: cfg.seed,
            config_hash: cfg.hash(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: cfg.canonical(),
            files: Vec::new(),
            extra: Vec::new(),
        }
    }

    pub fn render(&self) -> String {
        let mut ini = Ini::new();
        ini.with_section(Some("run"))
            .set("study", &self.study)
            .set("seed", self.seed.to_string())
            .set("config_hash", &self.config_hash)
            .set("version", &self.version);
        {
            let mut files = ini.with_section(Some("files"));
            for (name, hash) in &self.files {
                files.set(name, hash);
            }
        }
        {
            let mut extra = ini.with_section(Some("extra"));
            for (k, v) in &self.extra {
                extra.set(k, v);
            }
        }
        let mut out = Vec::new();
        ini.write_to(&mut out).expect("writing to memory");
        let mut s = String::from_utf8(out).expect("ini output is utf-8");
        // the configuration is embedded verbatim, one commented line each, so
        // the manifest alone reconstructs the run
        s.push_str("\n; --- config ---\n");
        for line in self.config.lines() {
            s.push_str(";| ");
            s.push_str(line);
            s.push('\n');
        }
        s
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self, OutputError> {
        let bad = |message: String| OutputError::Manifest {
            path: path.to_path_buf(),
            message,
        };
        let ini = Ini::load_from_str(text).map_err(|e| bad(e.to_string()))?;
        let run = ini.section(Some("run")).ok_or_else(|| bad("missing [run]".into()))?;
        let get = |k: &str| run.get(k).map(str::to_string).ok_or_else(|| bad(format!("missing {k}")));
        let pairs = |sec: &str| {
            ini.section(Some(sec))
                .map(|s| s.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect())
                .unwrap_or_default()
        };
        let config: String = text
            .lines()
            .filter_map(|l| l.strip_prefix(";| ").or_else(|| (l == ";|").then_some("")))
            .fold(String::new(), |mut s, l| {
                s.push_str(l);
                s.push('\n');
                s
            });
        Ok(Self {
            study: get("study")?,
            seed: get("seed")?.parse().map_err(|_| bad("bad seed".into()))?,
            config_hash: get("config_hash")?,
            version: get("version")?,
            config,
            files: pairs("files"),
            extra: pairs("extra"),
        })
    }

    pub fn read(dir: &Path) -> Result<Self, OutputError> {
        let path = dir.join(MANIFEST_NAME);
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        Self::parse(&text, &path)
    }
}

/// Collects artifacts of one run and writes them with the manifest last.
pub struct RunWriter {
    dir: PathBuf,
    manifest: Manifest,
}

impl RunWriter {
    pub fn new(dir: &Path, manifest: Manifest) -> Result<Self, OutputError> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            manifest,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf, OutputError> {
        let path = self.dir.join(name);
        write_atomic(&path, bytes)?;
        self.manifest.files.push((name.to_string(), sha256_hex(bytes)));
        Ok(path)
    }

    pub fn write_table(&mut self, name: &str, table: &CsvTable) -> Result<PathBuf, OutputError> {
        let bytes = table.to_bytes()?;
        self.write_bytes(name, &bytes)
    }

    /// Records a file that was produced in place (e.g. a streamed snapshot).
    pub fn register(&mut self, name: &str) -> Result<(), OutputError> {
        let path = self.dir.join(name);
        let bytes = fs::read(&path).map_err(io_err(&path))?;
        self.manifest.files.push((name.to_string(), sha256_hex(&bytes)));
        Ok(())
    }

    pub fn note(&mut self, key: &str, value: impl ToString) {
        self.manifest.extra.push((key.to_string(), value.to_string()));
    }

    pub fn finish(self) -> Result<Manifest, OutputError> {
        let text = self.manifest.render();
        write_atomic(&self.dir.join(MANIFEST_NAME), text.as_bytes())?;
        Ok(self.manifest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::Study;

    #[test]
    fn table_round_trip_and_quoting() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = CsvTable::new(&["a", "status"]);
        t.push(vec![fmt_f64(0.1), "error: x, y".into()]);
        t.push(vec![fmt_f64(f64::NAN), "ok".into()]);
        let p = dir.path().join("t.csv");
        write_atomic(&p, &t.to_bytes().unwrap()).unwrap();
        assert_eq!(CsvTable::read(&p).unwrap(), t);
        assert_eq!(t.column("a").unwrap(), vec!["0.1", ""]);
        // no temporary files left behind
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn header_only_table() {
        let t = CsvTable::new(&["x", "y"]);
        assert_eq!(t.to_bytes().unwrap(), b"x,y\n");
    }

    #[test]
    fn manifest_reconstructs_config() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig::defaults(Study::FigRmse);
        let mut w = RunWriter::new(dir.path(), Manifest::for_config(&cfg)).unwrap();
        w.write_bytes("a.csv", b"x\n1\n").unwrap();
        w.note("rows", 3);
        let written = w.finish().unwrap();
        let back = Manifest::read(dir.path()).unwrap();
        assert_eq!(back, written);
        assert_eq!(back.files[0].1, sha256_hex(b"x\n1\n"));
        let cfg2 = ExperimentConfig::parse(&back.config).unwrap();
        assert_eq!(cfg2.hash(), back.config_hash);
    }
}
