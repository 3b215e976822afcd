//! File formats: comma-separated samples, JSON manifests, edge lists and
//! dense matrices. Every write goes through a temporary file in the target
//! directory followed by a rename.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use fglasso::{BlockLayout, BlockMatrix, GraphEstimate, SampleSet, Scheme};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Layout description plus pointers to the sample and truth files. Relative
/// paths are resolved against the manifest's directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub samples: PathBuf,
    pub p: usize,
    pub sizes: Vec<usize>,
    pub schemes: Vec<Scheme>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<PathBuf>,
}

impl DatasetManifest {
    pub fn from_layout(layout: &BlockLayout, samples: PathBuf, truth: Option<PathBuf>) -> Self {
        Self {
            samples,
            p: layout.p(),
            sizes: layout.sizes().to_vec(),
            schemes: layout.schemes().to_vec(),
            truth,
        }
    }

    pub fn layout(&self) -> fglasso::Result<BlockLayout> {
        if self.sizes.len() != self.p {
            return Err(fglasso::Error::InvalidLayout(format!(
                "manifest declares p = {} but lists {} sizes",
                self.p,
                self.sizes.len()
            )));
        }
        BlockLayout::new(self.sizes.clone(), self.schemes.clone())
    }
}

/// A manifest together with the directory its relative paths refer to.
pub struct LoadedManifest {
    pub manifest: DatasetManifest,
    pub base: PathBuf,
}

impl LoadedManifest {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("cannot read manifest {}", path.display()))?;
        let manifest: DatasetManifest =
            serde_json::from_str(&text).with_context(|| format!("cannot parse manifest {}", path.display()))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(Self { manifest, base })
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    pub fn samples(&self) -> anyhow::Result<SampleSet> {
        let layout = self.manifest.layout()?;
        let path = self.resolve(&self.manifest.samples);
        let data = read_matrix_rows(&path)?;
        if data.ncols() != layout.dim() {
            bail!(
                "{}: {} columns, but the manifest declares K = {}",
                path.display(),
                data.ncols(),
                layout.dim()
            );
        }
        Ok(SampleSet::new(layout, data)?)
    }

    pub fn truth(&self) -> anyhow::Result<Option<GraphEstimate>> {
        match &self.manifest.truth {
            None => Ok(None),
            Some(t) => read_edges(&self.resolve(t), self.manifest.p).map(Some),
        }
    }
}

fn reader(path: &Path) -> anyhow::Result<csv::Reader<fs::File>> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("cannot open {}", path.display()))
}

/// Reads a headerless comma-separated matrix, one row per line.
pub fn read_matrix_rows(path: &Path) -> anyhow::Result<DMatrix<f64>> {
    let mut values = Vec::new();
    let mut ncols = None;
    let mut nrows = 0;
    for (line, record) in reader(path)?.records().enumerate() {
        let record = record.with_context(|| format!("{}: malformed line {}", path.display(), line + 1))?;
        if ncols.is_some_and(|c| c != record.len()) {
            bail!(
                "{}: line {} has {} fields, expected {}",
                path.display(),
                line + 1,
                record.len(),
                ncols.unwrap()
            );
        }
        ncols = Some(record.len());
        for field in record.iter() {
            let v: f64 = field
                .parse()
                .with_context(|| format!("{}: line {}: not a number: {field:?}", path.display(), line + 1))?;
            values.push(v);
        }
        nrows += 1;
    }
    let ncols = ncols.with_context(|| format!("{}: no rows", path.display()))?;
    Ok(DMatrix::from_row_slice(nrows, ncols, &values))
}

/// Reads a matrix written by [`write_matrix`]: a line with `K`, then `K`
/// rows.
pub fn read_block_matrix(path: &Path) -> anyhow::Result<DMatrix<f64>> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let (head, body) = text.split_once('\n').unwrap_or((&text, ""));
    let k: usize = head
        .trim()
        .parse()
        .with_context(|| format!("{}: bad header {head:?}", path.display()))?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(body.as_bytes());
    let mut values = Vec::with_capacity(k * k);
    for record in rdr.records() {
        for field in record?.iter() {
            values.push(
                field
                    .parse::<f64>()
                    .with_context(|| format!("{}: not a number", path.display()))?,
            );
        }
    }
    if values.len() != k * k {
        bail!("{}: expected {} entries, found {}", path.display(), k * k, values.len());
    }
    Ok(DMatrix::from_row_slice(k, k, &values))
}

/// Reads an "i,j" edge list with 1-based node labels.
pub fn read_edges(path: &Path, p: usize) -> anyhow::Result<GraphEstimate> {
    let mut edges = Vec::new();
    for (line, record) in reader(path)?.records().enumerate() {
        let record = record.with_context(|| format!("{}: malformed line {}", path.display(), line + 1))?;
        if record.len() != 2 {
            bail!("{}: line {} is not an i,j pair", path.display(), line + 1);
        }
        let parse = |s: &str| -> anyhow::Result<usize> {
            let v: usize = s
                .parse()
                .with_context(|| format!("{}: line {}: bad node {s:?}", path.display(), line + 1))?;
            if v == 0 {
                bail!("{}: line {}: node labels are 1-based", path.display(), line + 1);
            }
            Ok(v - 1)
        };
        edges.push((parse(&record[0])?, parse(&record[1])?));
    }
    Ok(GraphEstimate::from_edges(p, edges)?)
}

/// Writes `bytes` to `path` through a temporary sibling file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("cannot write in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

fn csv_bytes(rows: impl IntoIterator<Item = Vec<String>>) -> anyhow::Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    for row in rows {
        w.write_record(&row)?;
    }
    Ok(w.into_inner()?)
}

pub fn write_samples(path: &Path, data: &DMatrix<f64>) -> anyhow::Result<()> {
    let rows = data.row_iter().map(|r| r.iter().map(f64::to_string).collect());
    write_atomic(path, &csv_bytes(rows)?)
}

/// Edges as 1-based "i,j" lines, `i < j`, sorted.
pub fn write_edges(path: &Path, graph: &GraphEstimate) -> anyhow::Result<()> {
    let rows = graph
        .edges()
        .into_iter()
        .map(|(i, j)| vec![(i + 1).to_string(), (j + 1).to_string()]);
    write_atomic(path, &csv_bytes(rows)?)
}

/// Dense matrix with a one-line header giving `K`.
pub fn write_matrix(path: &Path, m: &BlockMatrix) -> anyhow::Result<()> {
    let data = m.data();
    let mut out = format!("{}\n", data.nrows()).into_bytes();
    out.extend(csv_bytes(
        data.row_iter().map(|r| r.iter().map(f64::to_string).collect()),
    )?);
    write_atomic(path, &out)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

pub fn write_table(path: &Path, header: &[&str], rows: Vec<Vec<String>>) -> anyhow::Result<()> {
    let head = std::iter::once(header.iter().map(|s| s.to_string()).collect());
    write_atomic(path, &csv_bytes(head.chain(rows))?)
}
