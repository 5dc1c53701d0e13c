//! Task-appropriateness of a representation: how well the classes of a task
//! separate under squared-error distortion.
//!
//! For class `i` with centroid `μ_i` and intra-class distortion
//! `D_i = E‖x − μ_i‖²`, the pair score is `ρ_ij = ‖μ_i − μ_j‖² / √(D_i D_j)`,
//! the class score is `ρ_i = min_{j≠i} ρ_ij`, and the overall score weights
//! class scores by class frequency.
//!
//! Every sum here runs over its terms in sorted order, so reports do not
//! depend on sample order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const LFS_MAGIC: &[u8; 4] = b"LFSV";
pub const LFS_VERSION: u8 = 1;

/// Feature vectors with class labels in `0..class_count`.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledFeatureSet {
    dimension: usize,
    class_count: usize,
    /// Row-major `count × dimension`.
    features: Vec<f64>,
    labels: Vec<u32>,
    metadata: String,
}

impl LabeledFeatureSet {
    pub fn new(dimension: usize, class_count: usize, features: Vec<f64>, labels: Vec<u32>) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::FeatureSet("dimension must be positive".into()));
        }
        if class_count < 2 {
            return Err(Error::FeatureSet(format!("need at least 2 classes, got {class_count}")));
        }
        if features.len() != labels.len() * dimension {
            return Err(Error::FeatureSet(format!(
                "{} feature values do not fill {} rows of dimension {dimension}",
                features.len(),
                labels.len()
            )));
        }
        if let Some(i) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::FeatureSet(format!(
                "non-finite feature in sample {} at coordinate {}",
                i / dimension,
                i % dimension
            )));
        }
        let mut counts = vec![0usize; class_count];
        for (n, &label) in labels.iter().enumerate() {
            match counts.get_mut(label as usize) {
                Some(c) => *c += 1,
                None => {
                    return Err(Error::FeatureSet(format!(
                        "sample {n} has label {label}, outside 0..{class_count}"
                    )))
                }
            }
        }
        if let Some(class) = counts.iter().position(|&c| c < 2) {
            return Err(Error::FeatureSet(format!(
                "class {class} has {} samples, need at least 2",
                counts[class]
            )));
        }
        Ok(Self {
            dimension,
            class_count,
            features,
            labels,
            metadata: String::new(),
        })
    }

    pub fn with_metadata(mut self, metadata: impl Into<String>) -> Self {
        self.metadata = metadata.into();
        self
    }

    pub fn count(&self) -> usize {
        self.labels.len()
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn metadata(&self) -> &str {
        &self.metadata
    }

    pub fn sample(&self, n: usize) -> &[f64] {
        &self.features[n * self.dimension..(n + 1) * self.dimension]
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    /// Squared Euclidean distance.
    #[default]
    Mse,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AppropriatenessReport {
    pub rho: f64,
    pub class_scores: Vec<f64>,
    /// `ρ_ij`; the diagonal is `None`.
    pub pair_scores: Vec<Vec<Option<f64>>>,
    pub class_priors: Vec<f64>,
    pub intra_distortions: Vec<f64>,
    pub centroids: Vec<Vec<f64>>,
}

fn sorted_sum(mut terms: Vec<f64>) -> f64 {
    terms.sort_by(f64::total_cmp);
    terms.into_iter().sum()
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    sorted_sum(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).collect())
}

pub fn compute_report(data: &LabeledFeatureSet, metric: Metric) -> Result<AppropriatenessReport> {
    let Metric::Mse = metric;
    let d = data.dimension();
    let classes = data.class_count();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); classes];
    for (n, &label) in data.labels().iter().enumerate() {
        members[label as usize].push(n);
    }

    let stats: Vec<(Vec<f64>, f64)> = members
        .par_iter()
        .map(|rows| {
            let size = rows.len() as f64;
            let centroid: Vec<f64> = (0..d)
                .map(|k| sorted_sum(rows.iter().map(|&n| data.sample(n)[k]).collect()) / size)
                .collect();
            let intra = sorted_sum(rows.iter().map(|&n| squared_distance(data.sample(n), &centroid)).collect()) / size;
            (centroid, intra)
        })
        .collect();
    let (centroids, intra): (Vec<Vec<f64>>, Vec<f64>) = stats.into_iter().unzip();
    if let Some(class) = intra.iter().position(|&v| v <= 0.0) {
        return Err(Error::DegenerateCluster { class });
    }

    let total = data.count() as f64;
    let priors: Vec<f64> = members.iter().map(|m| m.len() as f64 / total).collect();
    let pair_scores: Vec<Vec<Option<f64>>> = (0..classes)
        .map(|i| {
            (0..classes)
                .map(|j| (i != j).then(|| squared_distance(&centroids[i], &centroids[j]) / (intra[i] * intra[j]).sqrt()))
                .collect()
        })
        .collect();
    let class_scores: Vec<f64> = pair_scores
        .iter()
        .map(|row| row.iter().flatten().copied().fold(f64::INFINITY, f64::min))
        .collect();
    let rho = sorted_sum(priors.iter().zip(&class_scores).map(|(p, r)| p * r).collect());
    Ok(AppropriatenessReport {
        rho,
        class_scores,
        pair_scores,
        class_priors: priors,
        intra_distortions: intra,
        centroids,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DepthRow {
    pub name: String,
    pub report: AppropriatenessReport,
    /// Whether ρ did not decrease from the previous set; `None` for the first.
    pub monotone_vs_prev: Option<bool>,
}

/// Reports for a sequence of representations of the same task, in order.
pub fn depth_sweep(sets: &[(String, LabeledFeatureSet)]) -> Result<Vec<DepthRow>> {
    if let Some((first_name, first)) = sets.first() {
        for (name, set) in &sets[1..] {
            if set.class_count() != first.class_count() {
                return Err(Error::ClassCountMismatch {
                    first: first_name.clone(),
                    first_classes: first.class_count(),
                    second: name.clone(),
                    second_classes: set.class_count(),
                });
            }
        }
    }
    let mut rows: Vec<DepthRow> = Vec::with_capacity(sets.len());
    for (name, set) in sets {
        let report = compute_report(set, Metric::Mse)?;
        let monotone_vs_prev = rows.last().map(|prev| report.rho >= prev.report.rho);
        rows.push(DepthRow {
            name: name.clone(),
            report,
            monotone_vs_prev,
        });
    }
    Ok(rows)
}

/// Load an LFS file, or a labeled CSV when the extension is `.csv`.
pub fn load_feature_set(path: &Path) -> Result<LabeledFeatureSet> {
    let is_csv = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv {
        read_csv(File::open(path)?)
    } else {
        read_lfs(BufReader::new(File::open(path)?))
    }
}

pub fn save_lfs(path: &Path, set: &LabeledFeatureSet) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_lfs(&mut out, set)?;
    out.flush()?;
    Ok(())
}

/// Write the LFS container: magic, version byte, `u32` N, d, C, `u16`
/// metadata length and metadata, then N records of `u32` label and d `f32`
/// features. All integers little-endian.
pub fn write_lfs<W: Write>(out: &mut W, set: &LabeledFeatureSet) -> Result<()> {
    let metadata = set.metadata().as_bytes();
    let meta_len = u16::try_from(metadata.len())
        .map_err(|_| Error::FeatureSet(format!("metadata is {} bytes, limit is {}", metadata.len(), u16::MAX)))?;
    let header_u32 = |v: usize, what: &str| {
        u32::try_from(v).map_err(|_| Error::FeatureSet(format!("{what} {v} does not fit in u32")))
    };
    out.write_all(LFS_MAGIC)?;
    out.write_all(&[LFS_VERSION])?;
    out.write_all(&header_u32(set.count(), "count")?.to_le_bytes())?;
    out.write_all(&header_u32(set.dimension(), "dimension")?.to_le_bytes())?;
    out.write_all(&header_u32(set.class_count(), "class count")?.to_le_bytes())?;
    out.write_all(&meta_len.to_le_bytes())?;
    out.write_all(metadata)?;
    let mut record = Vec::with_capacity(4 + 4 * set.dimension());
    for n in 0..set.count() {
        record.clear();
        record.extend_from_slice(&set.labels()[n].to_le_bytes());
        for &v in set.sample(n) {
            record.extend_from_slice(&(v as f32).to_le_bytes());
        }
        out.write_all(&record)?;
    }
    Ok(())
}

struct OffsetReader<R> {
    inner: R,
    offset: u64,
}

impl<R: Read> OffsetReader<R> {
    fn bytes<const N: usize>(&mut self, what: &str) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        self.fill(&mut buf, what)?;
        Ok(buf)
    }

    fn fill(&mut self, buf: &mut [u8], what: &str) -> Result<()> {
        self.inner.read_exact(buf).map_err(|e| match e.kind() {
            std::io::ErrorKind::UnexpectedEof => Error::Format {
                offset: self.offset,
                message: format!("truncated while reading {what}"),
            },
            _ => Error::Io(e),
        })?;
        self.offset += buf.len() as u64;
        Ok(())
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes(what)?))
    }
}

pub fn read_lfs<R: Read>(input: R) -> Result<LabeledFeatureSet> {
    let mut r = OffsetReader { inner: input, offset: 0 };
    let magic: [u8; 4] = r.bytes("magic")?;
    if &magic != LFS_MAGIC {
        return Err(Error::Format {
            offset: 0,
            message: format!("bad magic {magic:?}, expected \"LFSV\""),
        });
    }
    let [version] = r.bytes::<1>("version")?;
    if version != LFS_VERSION {
        return Err(Error::Format {
            offset: 4,
            message: format!("unsupported version {version}"),
        });
    }
    let count = r.u32("sample count")? as usize;
    let dimension = r.u32("dimension")? as usize;
    let class_count = r.u32("class count")? as usize;
    let meta_len = u16::from_le_bytes(r.bytes("metadata length")?) as usize;
    let meta_offset = r.offset;
    let mut meta = vec![0u8; meta_len];
    r.fill(&mut meta, "metadata")?;
    let metadata = String::from_utf8(meta).map_err(|e| Error::Format {
        offset: meta_offset + e.utf8_error().valid_up_to() as u64,
        message: "metadata is not valid UTF-8".into(),
    })?;
    if dimension == 0 {
        return Err(Error::Format {
            offset: 9,
            message: "dimension is zero".into(),
        });
    }

    let mut labels = Vec::with_capacity(count.min(1 << 20));
    let mut features = Vec::with_capacity((count * dimension).min(1 << 24));
    let mut record = vec![0u8; 4 * dimension];
    for n in 0..count {
        let record_offset = r.offset;
        let label = r.u32("record label")?;
        if label as usize >= class_count {
            return Err(Error::Format {
                offset: record_offset,
                message: format!("sample {n} has label {label}, outside 0..{class_count}"),
            });
        }
        r.fill(&mut record, "record features")?;
        for (k, chunk) in record.chunks_exact(4).enumerate() {
            let v = f32::from_le_bytes(chunk.try_into().expect("chunk of 4"));
            if !v.is_finite() {
                return Err(Error::Format {
                    offset: record_offset + 4 + 4 * k as u64,
                    message: format!("non-finite feature in sample {n} at coordinate {k}"),
                });
            }
            features.push(f64::from(v));
        }
        labels.push(label);
    }
    let mut trailing = [0u8; 1];
    if r.inner.read(&mut trailing)? != 0 {
        return Err(Error::Format {
            offset: r.offset,
            message: "trailing bytes after the last record".into(),
        });
    }
    Ok(LabeledFeatureSet::new(dimension, class_count, features, labels)?.with_metadata(metadata))
}

/// Read a CSV with header `label,f0,...,f{d-1}`. The class count is the
/// largest label plus one.
pub fn read_csv<R: Read>(input: R) -> Result<LabeledFeatureSet> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header = reader.headers()?.clone();
    if header.get(0) != Some("label") || header.len() < 2 {
        return Err(Error::Parse {
            row: 1,
            message: "header must be label,f0,...".into(),
        });
    }
    let dimension = header.len() - 1;
    let mut labels = Vec::new();
    let mut features = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 2;
        let record = record?;
        if record.len() != header.len() {
            return Err(Error::Parse {
                row,
                message: format!("expected {} fields, found {}", header.len(), record.len()),
            });
        }
        let label: u32 = record[0].parse().map_err(|_| Error::Parse {
            row,
            message: format!("invalid label {:?}", &record[0]),
        })?;
        labels.push(label);
        for field in record.iter().skip(1) {
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                row,
                message: format!("invalid feature {field:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row,
                    message: format!("non-finite feature {field:?}"),
                });
            }
            features.push(v);
        }
    }
    let class_count = labels.iter().max().map_or(0, |&m| m as usize + 1);
    LabeledFeatureSet::new(dimension, class_count, features, labels)
}
