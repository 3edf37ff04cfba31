//! Field persistence, run configuration and manifests.
//!
//! A field is stored as little-endian `f64` pairs `(re, im)` in row-major
//! order with nothing before them. The sidecar `<stem>.meta.json` carries the
//! grid, the problem scalars and the SHA-256 of the payload.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{PotentialSpec, ProblemConfig};
use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::GridSpec;
use crate::operators::QuadratureOptions;
use crate::problem::LimitDiscretization;
use crate::solver::SolverOptions;

/// Serde adapter writing non-finite floats as `"nan"`, `"inf"` or `"-inf"`.
pub mod real {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "nan" => Ok(f64::NAN),
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                other => Err(serde::de::Error::custom(format!("not a number: {other}"))),
            },
        }
    }
}

/// [`real`] for vectors.
pub mod real_vec {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Wrap(#[serde(with = "super::real")] f64);

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|&x| Wrap(x)).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Ok(Vec::<Wrap>::deserialize(d)?.into_iter().map(|w| w.0).collect())
    }
}

/// A float as a JSON value, with the same conventions as [`real`].
pub fn real_value(v: f64) -> serde_json::Value {
    if v.is_finite() {
        serde_json::json!(v)
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Sidecar metadata of a stored field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldMeta {
    pub dims: Vec<usize>,
    #[serde(rename = "L")]
    pub extent: f64,
    pub s: f64,
    pub mu: f64,
    pub eps: f64,
    /// How the global phase was fixed, e.g. `"argmax_real_positive"`.
    pub phase_gauge: String,
    pub sha256: String,
}

impl FieldMeta {
    pub fn grid(&self) -> Result<GridSpec> {
        let points = *self
            .dims
            .first()
            .ok_or_else(|| Error::InvalidGrid("empty dims".into()))?;
        if self.dims.iter().any(|&d| d != points) {
            return Err(Error::InvalidGrid(format!("non-cubic dims {:?}", self.dims)));
        }
        GridSpec::new(self.dims.len(), self.extent, points)
    }
}

pub const PHASE_GAUGE: &str = "argmax_real_positive";

pub fn sidecar_path(path: &Path) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}.meta.json"))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn encode_field(field: &Field) -> Vec<u8> {
    let mut out = Vec::with_capacity(field.len() * 16);
    for v in &field.values {
        out.extend_from_slice(&v.re.to_le_bytes());
        out.extend_from_slice(&v.im.to_le_bytes());
    }
    out
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Problem scalars recorded next to a field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldContext {
    pub s: f64,
    pub mu: f64,
    pub eps: f64,
}

pub fn save_field(path: &Path, field: &Field, ctx: FieldContext) -> Result<FieldMeta> {
    let payload = encode_field(field);
    let meta = FieldMeta {
        dims: field.grid.dims(),
        extent: field.grid.extent,
        s: ctx.s,
        mu: ctx.mu,
        eps: ctx.eps,
        phase_gauge: PHASE_GAUGE.into(),
        sha256: sha256_hex(&payload),
    };
    write_atomic(path, &payload)?;
    write_atomic(&sidecar_path(path), serde_json::to_string_pretty(&meta)?.as_bytes())?;
    Ok(meta)
}

pub fn load_field(path: &Path) -> Result<(Field, FieldMeta)> {
    let meta: FieldMeta = serde_json::from_slice(&fs::read(sidecar_path(path))?)?;
    let grid = meta.grid()?;
    let payload = fs::read(path)?;
    let expected = grid.len() * 16;
    if payload.len() < expected {
        return Err(Error::UnexpectedEof);
    }
    if payload.len() > expected {
        return Err(Error::DimsMismatch {
            dims: meta.dims.clone(),
            samples: payload.len() / 16,
        });
    }
    let actual = sha256_hex(&payload);
    if actual != meta.sha256 {
        return Err(Error::ChecksumMismatch {
            expected: meta.sha256.clone(),
            actual,
        });
    }
    let values = payload
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
            Complex64::new(re, im)
        })
        .collect();
    Ok((Field::from_values(grid, values), meta))
}

/// Quadrature settings as they appear in a run configuration.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureConfig {
    pub image_shells: Option<usize>,
    /// `R_cut`; the full box when absent.
    pub cutoff: Option<f64>,
}

impl QuadratureConfig {
    pub fn options(&self) -> QuadratureOptions {
        QuadratureOptions {
            image_shells: self.image_shells,
            cutoff: self.cutoff,
            near_field: true,
        }
    }
}

/// The single JSON document describing a run. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    pub potentials: PotentialSpec,
    pub grid: GridSpec,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    #[serde(default)]
    pub limit: LimitDiscretization,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_list: Option<Vec<f64>>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Canonical serialization; its SHA-256 is the config hash.
    pub fn canonical_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn hash(&self) -> Result<String> {
        Ok(sha256_hex(self.canonical_json()?.as_bytes()))
    }
}

/// Provenance record written next to every run's artifacts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    /// SHA-256 of the stored `config.json`.
    pub config_hash: String,
    pub seed: u64,
    pub started: String,
    pub finished: String,
    /// Paths relative to the run directory.
    pub artifacts: Vec<String>,
    pub tool_version: String,
}
