//! Point files, provenance-stamped CSV tables, JSON summaries and the kernel cache.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use dmaps_core::density::Sample;
use dmaps_core::kernel::{KernelMatrix, KernelMode};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::hex;

pub const TOOL: &str = concat!("dmaps ", env!("CARGO_PKG_VERSION"));

/// Row-major points read from a headerless CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct Points {
    pub dim: usize,
    pub values: Vec<f64>,
}

impl Points {
    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub fn read_points(path: &Path) -> Result<Points> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    parse_points(file).with_context(|| format!("reading {}", path.display()))
}

/// Parse one point per row; blank lines and `#` comments are skipped.
pub fn parse_points<R: Read>(reader: R) -> Result<Points> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let mut dim = 0;
    let mut values = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        if dim == 0 {
            dim = rec.len();
        } else if rec.len() != dim {
            bail!("row {} has {} columns, expected {dim}", row + 1, rec.len());
        }
        for (col, field) in rec.iter().enumerate() {
            let v: f64 = field.parse().with_context(|| format!("row {}, column {}: `{field}`", row + 1, col + 1))?;
            ensure!(v.is_finite(), "row {}, column {}: non-finite value", row + 1, col + 1);
            values.push(v);
        }
    }
    ensure!(dim > 0, "no points");
    Ok(Points { dim, values })
}

/// Provenance stamped on the first row of every CSV table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub tool: String,
    pub config_sha256: String,
    pub seed: u64,
}

impl Provenance {
    pub fn new(config_sha256: String, seed: u64) -> Self {
        Self { tool: TOOL.into(), config_sha256, seed }
    }

    fn record(&self) -> [String; 3] {
        [
            format!("# tool={}", self.tool),
            format!("config_sha256={}", self.config_sha256),
            format!("seed={}", self.seed),
        ]
    }
}

/// Shortest round-trip representation; empty for missing values.
pub fn fmt_f64(x: Option<f64>) -> String {
    match x {
        Some(v) => format!("{v}"),
        None => String::new(),
    }
}

/// A CSV table: provenance row, header, then rows.
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn write(&self, path: &Path, prov: &Provenance) -> Result<()> {
        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        let mut w = csv::WriterBuilder::new().flexible(true).from_writer(BufWriter::new(file));
        w.write_record(prov.record())?;
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// A table as read back from disk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoredTable {
    pub provenance: Vec<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

/// Read a table written by [`Table::write`].
pub fn read_table(path: &Path) -> Result<StoredTable> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_path(path)?;
    let mut all = rdr
        .records()
        .map(|r| Ok(r?.iter().map(String::from).collect()))
        .collect::<Result<Vec<Vec<String>>>>()?
        .into_iter();
    let provenance = all.next().context("missing provenance row")?;
    let header = all.next().context("missing header row")?;
    Ok(StoredTable { provenance, header, rows: all.collect() })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

const CACHE_MAGIC: &[u8; 8] = b"DMAPSK01";

/// On-disk cache of dense kernel matrices keyed by points, `eps` and kernel mode.
#[derive(Debug, Clone)]
pub struct KernelCache {
    dir: PathBuf,
}

impl KernelCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn key(sample: &Sample, eps: f64, mode: &KernelMode) -> String {
        let mut h = Sha256::new();
        h.update((sample.dim as u64).to_le_bytes());
        for p in &sample.points {
            h.update(p.to_le_bytes());
        }
        h.update(eps.to_le_bytes());
        match mode {
            KernelMode::Periodic { domain, images } => {
                h.update(b"periodic");
                h.update(domain.side().to_le_bytes());
                h.update((*images as u64).to_le_bytes());
            }
            KernelMode::Euclidean { .. } => h.update(b"euclidean"),
        }
        hex(&h.finalize())
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.kernel"))
    }

    /// Cached matrix if present and consistent, otherwise build and store it.
    pub fn get_or_build(&self, sample: &Sample, eps: f64, mode: KernelMode) -> Result<(KernelMatrix, bool)> {
        let path = self.path(&Self::key(sample, eps, &mode));
        if path.exists() {
            let entries = read_entries(&path, sample.len(), sample.dim, eps)?;
            return Ok((KernelMatrix::from_parts(sample.clone(), eps, mode, entries)?, true));
        }
        let k = KernelMatrix::build(sample, eps, mode)?;
        std::fs::create_dir_all(&self.dir)?;
        // write to a temporary name so readers never see a partial file
        let tmp = path.with_extension("tmp");
        write_entries(&tmp, &k)?;
        std::fs::rename(&tmp, &path)?;
        Ok((k, false))
    }
}

fn write_entries(path: &Path, k: &KernelMatrix) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(CACHE_MAGIC)?;
    w.write_all(&(k.len() as u64).to_le_bytes())?;
    w.write_all(&(k.sample().dim as u64).to_le_bytes())?;
    w.write_all(&k.eps().to_le_bytes())?;
    for e in k.entries() {
        w.write_all(&e.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn read_entries(path: &Path, m: usize, dim: usize, eps: f64) -> Result<Vec<f64>> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    ensure!(bytes.len() == 32 + 8 * m * m && &bytes[..8] == CACHE_MAGIC, "{}: corrupt kernel cache", path.display());
    let word = |i: usize| <[u8; 8]>::try_from(&bytes[8 + 8 * i..16 + 8 * i]).unwrap();
    ensure!(
        u64::from_le_bytes(word(0)) == m as u64
            && u64::from_le_bytes(word(1)) == dim as u64
            && f64::from_le_bytes(word(2)) == eps,
        "{}: kernel cache header does not match the sample",
        path.display()
    );
    Ok(bytes[32..].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
}
