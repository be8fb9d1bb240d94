//! On-disk formats.
//!
//! Matrices use the MAT1 layout: the ASCII magic `MAT1`, a little-endian
//! `u32` version (currently 1), `u64` row and column counts, then the
//! row-major `f64` payload, all little-endian. Metadata lives in a JSON
//! sidecar next to the matrix, named `<file>.meta.json`. Every file is
//! written to a temporary file in the target directory and renamed into
//! place.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::corpus::{Trigram, TrigramSample, Vocabulary};
use crate::error::{Error, Result};
use crate::linalg;
use crate::svdstack::{Objects, Provenance, Representation};

pub const MAGIC: &[u8; 4] = b"MAT1";
pub const VERSION: u32 = 1;
const HEADER_LEN: u64 = 4 + 4 + 8 + 8;

/// Sidecar metadata for a MAT1 file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MatrixMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<String>,
    /// Row label file, relative to the matrix file's directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub row_labels: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, serde_json::Value>,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

/// Writes `bytes` to `path` through a temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn encode_matrix(m: ArrayView2<f64>) -> Result<Vec<u8>> {
    linalg::check_finite(m)?;
    let (rows, cols) = m.dim();
    let mut out = Vec::with_capacity(HEADER_LEN as usize + rows * cols * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(rows as u64).to_le_bytes());
    out.extend_from_slice(&(cols as u64).to_le_bytes());
    for v in m.iter() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_matrix(bytes: &[u8], path: &Path) -> Result<Array2<f64>> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(Error::BadMagic { path: path.to_path_buf() });
    }
    if bytes.len() < HEADER_LEN as usize {
        return Err(Error::LengthMismatch {
            path: path.to_path_buf(),
            expected: HEADER_LEN,
            found: bytes.len() as u64,
        });
    }
    let word = |at: usize, n: usize| &bytes[at..at + n];
    let version = u32::from_le_bytes(word(4, 4).try_into().expect("4 bytes"));
    if version != VERSION {
        return Err(Error::VersionMismatch { path: path.to_path_buf(), found: version });
    }
    let rows = u64::from_le_bytes(word(8, 8).try_into().expect("8 bytes"));
    let cols = u64::from_le_bytes(word(16, 8).try_into().expect("8 bytes"));
    let payload = &bytes[HEADER_LEN as usize..];
    let expected = rows.checked_mul(cols).and_then(|n| n.checked_mul(8));
    if expected != Some(payload.len() as u64) {
        return Err(Error::LengthMismatch {
            path: path.to_path_buf(),
            expected: expected.unwrap_or(u64::MAX),
            found: payload.len() as u64,
        });
    }
    let data = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Array2::from_shape_vec((rows as usize, cols as usize), data)
        .map_err(|e| Error::Shape(e.to_string()))
}

/// Writes a MAT1 file and its sidecar. Refuses non-finite entries.
pub fn write_matrix(m: ArrayView2<f64>, meta: &MatrixMeta, path: &Path) -> Result<()> {
    let bytes = encode_matrix(m)?;
    write_atomic(path, &bytes)?;
    write_json(&sidecar_path(path), meta)
}

/// Reads and validates a MAT1 file, with its sidecar when one exists.
pub fn read_matrix(path: &Path) -> Result<(Array2<f64>, Option<MatrixMeta>)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let m = decode_matrix(&bytes, path)?;
    let side = sidecar_path(path);
    let meta = if side.exists() { Some(read_json(&side)?) } else { None };
    Ok((m, meta))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Json { path: path.to_path_buf(), source: e })?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Json { path: path.to_path_buf(), source: e })
}

/// `word<TAB>freq<TAB>rank`, one line per word in rank order.
pub fn vocab_tsv(vocab: &Vocabulary) -> String {
    let mut out = String::new();
    for (i, (w, f)) in vocab.words().iter().zip(vocab.freqs()).enumerate() {
        out.push_str(&format!("{w}\t{f}\t{}\n", i + 1));
    }
    out
}

pub fn write_vocab(vocab: &Vocabulary, path: &Path) -> Result<()> {
    write_atomic(path, vocab_tsv(vocab).as_bytes())
}

fn tsv_fields<'a>(path: &Path, line_no: usize, line: &'a str, n: usize) -> Result<Vec<&'a str>> {
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != n {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: line_no,
            message: format!("expected {n} tab-separated fields, found {}", fields.len()),
        });
    }
    Ok(fields)
}

pub fn read_vocab(path: &Path) -> Result<Vocabulary> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut entries = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let f = tsv_fields(path, i + 1, line, 3)?;
        let freq = f[1].parse::<u64>().map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        entries.push((f[0].to_string(), freq));
    }
    let vocab = Vocabulary::from_counts(entries);
    // Ranks in the file must match the recomputed ones.
    for (i, line) in text.lines().enumerate() {
        let f = tsv_fields(path, i + 1, line, 3)?;
        if vocab.rank(f[0]).map(|r| r.to_string()).as_deref() != Some(f[2]) {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: format!("rank {} of `{}` is inconsistent", f[2], f[0]),
            });
        }
    }
    Ok(vocab)
}

/// `w1<TAB>w2<TAB>w3`, one line per trigram in sample order.
pub fn trigrams_tsv(sample: &TrigramSample) -> String {
    let mut out = String::new();
    for t in &sample.trigrams {
        out.push_str(&t.join("\t"));
        out.push('\n');
    }
    out
}

pub fn write_trigrams(sample: &TrigramSample, path: &Path) -> Result<()> {
    write_atomic(path, trigrams_tsv(sample).as_bytes())
}

/// Reads a trigram TSV. Seed and requested count are not stored in the
/// file; callers that need them take them from the run manifest.
pub fn read_trigrams(path: &Path) -> Result<TrigramSample> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let trigrams: Vec<Trigram> = text
        .lines()
        .enumerate()
        .map(|(i, line)| {
            let f = tsv_fields(path, i + 1, line, 3)?;
            Ok([f[0].to_string(), f[1].to_string(), f[2].to_string()])
        })
        .collect::<Result<_>>()?;
    let requested = trigrams.len();
    Ok(TrigramSample { trigrams, seed: 0, requested })
}

/// Writes a representation; `row_labels` names the TSV holding its row
/// labels, relative to `path`'s directory.
pub fn write_representation(
    rep: &Representation,
    path: &Path,
    row_labels: &str,
    seed: u64,
    params: BTreeMap<String, serde_json::Value>,
) -> Result<()> {
    let meta = MatrixMeta {
        provenance: Some(rep.provenance),
        k: Some(rep.k()),
        seed: Some(seed),
        state: Some("row-normalized".into()),
        row_labels: Some(row_labels.to_string()),
        params,
    };
    write_matrix(rep.matrix.view(), &meta, path)
}

/// Reads a representation and its row labels.
pub fn read_representation(path: &Path) -> Result<(Representation, MatrixMeta)> {
    let (matrix, meta) = read_matrix(path)?;
    let meta = meta.ok_or_else(|| Error::io(sidecar_path(path), std::io::ErrorKind::NotFound.into()))?;
    let provenance = meta.provenance.ok_or_else(|| Error::Parse {
        path: sidecar_path(path),
        line: 0,
        message: "missing provenance".into(),
    })?;
    let row_labels = match &meta.row_labels {
        Some(rel) => {
            let labels_path = path.parent().unwrap_or(Path::new(".")).join(rel);
            match provenance.objects {
                Objects::Trigrams => read_trigrams(&labels_path)?.labels(),
                Objects::Words => read_vocab(&labels_path)?.words().to_vec(),
            }
        }
        None => Vec::new(),
    };
    if !row_labels.is_empty() && row_labels.len() != matrix.nrows() {
        return Err(Error::Shape(format!(
            "{} has {} rows but {} row labels",
            path.display(),
            matrix.nrows(),
            row_labels.len()
        )));
    }
    Ok((Representation { matrix, provenance, row_labels }, meta))
}
