//! Exact JSON persistence: series files with string rationals (never
//! floats), canonical term ordering, a content checksum, and the
//! boundary-index convention stamped into the header so files from a
//! different convention cannot be silently mixed.

use crate::correlator::CorrelatorRow;
use crate::npoly::{NPoly, Rational};
use crate::tau::{SeriesKind, TauSeries};
use crate::tpoly::{TMonomial, TPoly};
use crate::CONVENTION;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::Path;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported format version {0}")]
    Version(u32),
    #[error("file uses convention {found:?}, engine expects {expected:?}")]
    Convention { found: String, expected: String },
    #[error("checksum mismatch: file is corrupt or was edited")]
    Checksum,
    #[error("malformed series data: {0}")]
    Data(String),
}

/// One stored term: exponent map and coefficient (rational strings ascending
/// in `N`-power).
#[derive(Serialize, Deserialize, Clone, Debug)]
pub struct TermJson {
    pub exps: BTreeMap<u32, u32>,
    pub coeff: Vec<String>,
}

/// Constraint indices used to determine one layer (the per-layer manifest of
/// the linear engine).
#[derive(Serialize, Deserialize, Clone, Debug, PartialEq, Eq)]
pub struct LayerRanges {
    pub layer: u32,
    pub l_ks: Vec<i64>,
    pub m_ks: Vec<i64>,
}

#[derive(Serialize, Deserialize, Clone, Debug)]
pub struct TauFile {
    pub format_version: u32,
    pub convention: String,
    pub kind: String,
    pub gmax: u32,
    pub engine: String,
    pub n_eval: Option<String>,
    pub constraint_ranges: Option<Vec<LayerRanges>>,
    pub checksum: String,
    pub layers: Vec<Vec<TermJson>>,
}

fn layer_to_json(layer: &TPoly) -> Vec<TermJson> {
    layer
        .iter()
        .map(|(m, c)| TermJson {
            exps: m.exps().iter().copied().collect(),
            coeff: c.to_strings(),
        })
        .collect()
}

fn layer_from_json(terms: &[TermJson]) -> Result<TPoly, StoreError> {
    let mut layer = TPoly::zero();
    for t in terms {
        let mono = TMonomial::from_exps(t.exps.iter().map(|(&v, &e)| (v, e)));
        let coeff = NPoly::from_strings(&t.coeff).map_err(StoreError::Data)?;
        if coeff.is_zero() {
            return Err(StoreError::Data(format!("stored zero coefficient at {mono}")));
        }
        layer.insert_add(mono, coeff);
    }
    Ok(layer)
}

fn checksum_of(layers: &[Vec<TermJson>]) -> String {
    let blob = serde_json::to_string(layers).expect("layers serialize");
    let mut h = Sha256::new();
    h.update(blob.as_bytes());
    hex::encode(h.finalize())
}

/// Package a series for writing.
pub fn to_file(series: &TauSeries, engine: &str, ranges: Option<Vec<LayerRanges>>) -> TauFile {
    let layers: Vec<Vec<TermJson>> = series.layers().iter().map(layer_to_json).collect();
    TauFile {
        format_version: FORMAT_VERSION,
        convention: CONVENTION.to_string(),
        kind: match series.kind() {
            SeriesKind::Tau => "tau".into(),
            SeriesKind::FreeEnergy => "free-energy".into(),
        },
        gmax: series.g_max() as u32,
        engine: engine.to_string(),
        n_eval: series.n_eval().map(|n| n.to_string()),
        constraint_ranges: ranges,
        checksum: checksum_of(&layers),
        layers,
    }
}

/// Validate and unpack a file into a series.
pub fn from_file(file: &TauFile) -> Result<TauSeries, StoreError> {
    if file.format_version != FORMAT_VERSION {
        return Err(StoreError::Version(file.format_version));
    }
    if file.convention != CONVENTION {
        return Err(StoreError::Convention {
            found: file.convention.clone(),
            expected: CONVENTION.to_string(),
        });
    }
    if file.checksum != checksum_of(&file.layers) {
        return Err(StoreError::Checksum);
    }
    let kind = match file.kind.as_str() {
        "tau" => SeriesKind::Tau,
        "free-energy" => SeriesKind::FreeEnergy,
        other => return Err(StoreError::Data(format!("unknown kind {other:?}"))),
    };
    if file.layers.len() != file.gmax as usize + 1 {
        return Err(StoreError::Data(format!(
            "gmax {} does not match {} stored layers",
            file.gmax,
            file.layers.len()
        )));
    }
    let n_eval = match &file.n_eval {
        None => None,
        Some(s) => Some(
            s.parse::<Rational>()
                .map_err(|e| StoreError::Data(format!("bad n_eval {s:?}: {e}")))?,
        ),
    };
    let mut layers = Vec::with_capacity(file.layers.len());
    for (g, terms) in file.layers.iter().enumerate() {
        let layer = layer_from_json(terms)?;
        if !(layer.is_homogeneous_of(3 * g as i64) || layer.is_zero()) {
            return Err(StoreError::Data(format!(
                "layer {g} is not weight-{} homogeneous",
                3 * g
            )));
        }
        layers.push(layer);
    }
    Ok(TauSeries::new(kind, layers, n_eval))
}

pub fn write_path(path: &Path, file: &TauFile) -> Result<(), StoreError> {
    let body = serde_json::to_string_pretty(file)? + "\n";
    std::fs::write(path, body).map_err(|source| StoreError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_path(path: &Path) -> Result<TauFile, StoreError> {
    let body = std::fs::read_to_string(path).map_err(|source| StoreError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(serde_json::from_str(&body)?)
}

/// Serialized correlator table row.
#[derive(Serialize, Deserialize, Clone, Debug)]
pub struct RowJson {
    pub alphas: Vec<u32>,
    pub betas: Vec<u32>,
    pub h: i64,
    pub b: i64,
    pub value: String,
}

pub fn table_to_json(rows: &[CorrelatorRow]) -> Vec<RowJson> {
    rows.iter()
        .map(|r| RowJson {
            alphas: r.key.alphas.clone(),
            betas: r.key.betas.clone(),
            h: r.key.h,
            b: r.key.b,
            value: r.value.to_string(),
        })
        .collect()
}

/// Verification report serialization (for `verify --report`).
#[derive(Serialize, Deserialize, Clone, Debug)]
pub struct ReportJson {
    pub suite: String,
    pub pass: bool,
    pub entries: Vec<ReportEntryJson>,
}

#[derive(Serialize, Deserialize, Clone, Debug)]
pub struct ReportEntryJson {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tau::compute_tau_cutjoin;

    #[test]
    fn round_trip_is_byte_identical() {
        let tau = compute_tau_cutjoin(2);
        let file = to_file(&tau, "cutjoin", None);
        let body1 = serde_json::to_string_pretty(&file).unwrap();
        let parsed: TauFile = serde_json::from_str(&body1).unwrap();
        let series = from_file(&parsed).unwrap();
        assert_eq!(&series, &tau);
        let body2 = serde_json::to_string_pretty(&to_file(&series, "cutjoin", None)).unwrap();
        assert_eq!(body1, body2);
    }

    #[test]
    fn checksum_detects_tampering() {
        let tau = compute_tau_cutjoin(1);
        let mut file = to_file(&tau, "cutjoin", None);
        // flip a sign in a stored coefficient
        file.layers[1][0].coeff[0] = format!("-{}", file.layers[1][0].coeff[0]);
        assert!(matches!(from_file(&file), Err(StoreError::Checksum)));
    }

    #[test]
    fn convention_is_enforced() {
        let tau = compute_tau_cutjoin(1);
        let mut file = to_file(&tau, "cutjoin", None);
        file.convention = "d0=N".into();
        assert!(matches!(from_file(&file), Err(StoreError::Convention { .. })));
    }
}
