//! JSON documents for matrices, channels and jobs, plus the command-line
//! matrix shorthands `diag(a,b,…)` and `Eij(n,i,j)`.
//!
//! Floats are written with the shortest decimal that round-trips, and parsed
//! with correctly rounded conversion, so `parse(serialize(M)) == M` bit for
//! bit.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channels::KrausChannel;
use crate::error::{Error, Result};
use crate::linalg::{diag, matrix_unit, CMat};
use crate::Complex64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatrixTag {
    Hermitian,
    Density,
    KrausOp,
}

/// Row-major matrix with `[re, im]` entries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixDocument {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tag: Option<MatrixTag>,
}

impl MatrixDocument {
    pub fn from_matrix(m: &CMat, tag: Option<MatrixTag>) -> Self {
        let (rows, cols) = m.shape();
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                let z = m[(i, j)];
                data.push([z.re, z.im]);
            }
        }
        Self { rows, cols, data, tag }
    }

    pub fn to_matrix(&self) -> Result<CMat> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::InvalidDocument("matrix dimensions must be positive".into()));
        }
        if self.data.len() != self.rows * self.cols {
            return Err(Error::InvalidDocument(format!(
                "expected {} entries for a {}x{} matrix, found {}",
                self.rows * self.cols,
                self.rows,
                self.cols,
                self.data.len()
            )));
        }
        if self.data.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidDocument("non-finite entry".into()));
        }
        Ok(CMat::from_fn(self.rows, self.cols, |i, j| {
            let [re, im] = self.data[i * self.cols + j];
            Complex64::new(re, im)
        }))
    }
}

pub fn matrix_value(m: &CMat) -> serde_json::Value {
    serde_json::to_value(MatrixDocument::from_matrix(m, None)).unwrap_or(serde_json::Value::Null)
}

pub fn matrix_from_value(v: &serde_json::Value) -> Result<CMat> {
    MatrixDocument::deserialize(v)?.to_matrix()
}

pub fn matrix_to_json(m: &CMat) -> Result<String> {
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidDocument("non-finite entry".into()));
    }
    Ok(serde_json::to_string(&MatrixDocument::from_matrix(m, None))?)
}

pub fn matrix_from_json(s: &str) -> Result<CMat> {
    serde_json::from_str::<MatrixDocument>(s)?.to_matrix()
}

/// Kraus list `T(X) = Σ Aᵢ X Bᵢ*`; `right_kraus` is omitted when `Bᵢ = Aᵢ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelDocument {
    pub in_dim: usize,
    pub out_dim: usize,
    pub kraus: Vec<MatrixDocument>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub right_kraus: Option<Vec<MatrixDocument>>,
}

impl ChannelDocument {
    pub fn from_channel(ch: &KrausChannel) -> Self {
        let doc = |ms: &[CMat]| {
            ms.iter()
                .map(|m| MatrixDocument::from_matrix(m, Some(MatrixTag::KrausOp)))
                .collect::<Vec<_>>()
        };
        Self {
            in_dim: ch.in_dim(),
            out_dim: ch.out_dim(),
            kraus: doc(ch.left_ops()),
            right_kraus: ch.right_ops().map(doc),
        }
    }

    pub fn to_channel(&self) -> Result<KrausChannel> {
        let mats = |ds: &[MatrixDocument]| ds.iter().map(|d| d.to_matrix()).collect::<Result<Vec<_>>>();
        let left = mats(&self.kraus)?;
        let ch = match &self.right_kraus {
            None => KrausChannel::new(self.in_dim, self.out_dim, left)?,
            Some(r) => KrausChannel::with_pairs(self.in_dim, self.out_dim, left, mats(r)?)?,
        };
        Ok(ch)
    }
}

pub fn channel_value(ch: &KrausChannel) -> serde_json::Value {
    serde_json::to_value(ChannelDocument::from_channel(ch)).unwrap_or(serde_json::Value::Null)
}

pub fn channel_from_value(v: &serde_json::Value) -> Result<KrausChannel> {
    ChannelDocument::deserialize(v)?.to_channel()
}

/// `#[serde(with = "matrix_serde")]` for `CMat` fields.
pub mod matrix_serde {
    use super::*;
    use serde::{de::Error as _, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &CMat, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixDocument::from_matrix(m, None).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<CMat, D::Error> {
        MatrixDocument::deserialize(d)?.to_matrix().map_err(D::Error::custom)
    }
}

/// `#[serde(with = "channel_serde")]` for `KrausChannel` fields.
pub mod channel_serde {
    use super::*;
    use serde::{de::Error as _, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(ch: &KrausChannel, s: S) -> std::result::Result<S::Ok, S::Error> {
        ChannelDocument::from_channel(ch).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<KrausChannel, D::Error> {
        ChannelDocument::deserialize(d)?.to_channel().map_err(D::Error::custom)
    }
}

/// A matrix input: inline document, shorthand string, or path to a document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixInput {
    Inline(MatrixDocument),
    Reference(String),
}

impl MatrixInput {
    pub fn resolve(&self, base: Option<&Path>) -> Result<CMat> {
        match self {
            MatrixInput::Inline(d) => d.to_matrix(),
            MatrixInput::Reference(s) => parse_matrix_arg(s, base),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JobCommand {
    Eval,
    ValidateChannel,
    Verify,
    Demo,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricKind {
    #[default]
    Cptni,
    Petz,
    Kumagai,
}

/// Batch job description; unknown fields are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobDocument {
    pub command: JobCommand,
    #[serde(default)]
    pub metric: Option<MetricKind>,
    #[serde(default)]
    pub f_name: Option<String>,
    /// Named matrices `rho`, `x` and optionally `y`, for `eval`.
    #[serde(default)]
    pub inputs: BTreeMap<String, MatrixInput>,
    /// Channel document or path, for `validate-channel`.
    #[serde(default)]
    pub channel: Option<serde_json::Value>,
    #[serde(default)]
    pub suites: Vec<String>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub trials: Option<usize>,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub b: Option<f64>,
    #[serde(default)]
    pub c: Option<f64>,
    #[serde(default)]
    pub cross_check: bool,
    #[serde(default)]
    pub trace_mode: Option<crate::metrics::TraceMode>,
    /// Dimension range for `verify`, as `"2-5"` or a single size.
    #[serde(default)]
    pub dims: Option<String>,
    /// Functions for `verify`; defaults to the whole monotone catalog.
    #[serde(default)]
    pub f_names: Vec<String>,
}

impl JobDocument {
    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

fn parse_numbers(args: &str) -> Result<Vec<f64>> {
    args.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidDocument(format!("bad number `{s}`")))
        })
        .collect()
}

/// Parses `diag(a,b,…)` or `Eij(n,i,j)` (one-based `i, j`).
pub fn parse_shorthand(s: &str) -> Option<Result<CMat>> {
    let s = s.trim();
    let inner = |prefix: &str| {
        s.strip_prefix(prefix)
            .and_then(|r| r.strip_prefix('('))
            .and_then(|r| r.strip_suffix(')'))
    };
    if let Some(args) = inner("diag") {
        return Some(parse_numbers(args).and_then(|v| {
            if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
                Err(Error::InvalidDocument(format!("bad diagonal `{s}`")))
            } else {
                Ok(diag(&v))
            }
        }));
    }
    if let Some(args) = inner("Eij").or_else(|| inner("E")) {
        return Some(parse_numbers(args).and_then(|v| match v.as_slice() {
            [n, i, j]
                if n.fract() == 0.0
                    && i.fract() == 0.0
                    && j.fract() == 0.0
                    && *i >= 1.0
                    && *j >= 1.0
                    && *i <= *n
                    && *j <= *n =>
            {
                Ok(matrix_unit(*n as usize, *i as usize - 1, *j as usize - 1))
            }
            _ => Err(Error::InvalidDocument(format!("bad matrix unit `{s}`"))),
        }));
    }
    None
}

/// `"2-5"`, `"2..=5"` or `"3"` as an inclusive dimension range.
pub fn parse_dims(s: &str) -> Result<(usize, usize)> {
    let bad = || Error::InvalidDocument(format!("bad dimension range `{s}`"));
    let num = |t: &str| t.trim().parse::<usize>().map_err(|_| bad());
    let s = s.trim();
    let (lo, hi) = if let Some((a, b)) = s.split_once("..=") {
        (num(a)?, num(b)?)
    } else if let Some((a, b)) = s.split_once('-') {
        (num(a)?, num(b)?)
    } else {
        let n = num(s)?;
        (n, n)
    };
    if lo == 0 || lo > hi {
        return Err(bad());
    }
    Ok((lo, hi))
}

/// Shorthand, or a path (resolved against `base`) to a [`MatrixDocument`].
pub fn parse_matrix_arg(s: &str, base: Option<&Path>) -> Result<CMat> {
    if let Some(m) = parse_shorthand(s) {
        return m;
    }
    let path = match base {
        Some(b) if Path::new(s).is_relative() => b.join(s),
        _ => Path::new(s).to_path_buf(),
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| Error::InvalidDocument(format!("cannot read `{}`: {e}", path.display())))?;
    matrix_from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{complex_gaussian, rng_for};
    use proptest::prelude::*;

    #[test]
    fn shorthands() {
        assert_eq!(parse_shorthand("diag(0.5, 0.25)").unwrap().unwrap(), diag(&[0.5, 0.25]));
        assert_eq!(parse_shorthand("Eij(2,1,2)").unwrap().unwrap(), matrix_unit(2, 0, 1));
        assert!(parse_shorthand("Eij(2,3,1)").unwrap().is_err());
        assert!(parse_shorthand("diag()").unwrap().is_err());
        assert!(parse_shorthand("rho.json").is_none());
    }

    #[test]
    fn dimension_ranges() {
        assert_eq!(parse_dims("2-5").unwrap(), (2, 5));
        assert_eq!(parse_dims("2..=6").unwrap(), (2, 6));
        assert_eq!(parse_dims(" 3 ").unwrap(), (3, 3));
        for bad in ["5-2", "0", "x", "2-"] {
            assert!(parse_dims(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn rejects_bad_documents() {
        assert!(matrix_from_json(r#"{"rows":2,"cols":2,"data":[[1,0]]}"#).is_err());
        assert!(matrix_from_json(r#"{"rows":1,"cols":1,"data":[[1,0]],"extra":1}"#).is_err());
        assert!(JobDocument::from_json(r#"{"command":"eval","bogus":true}"#).is_err());
        let job = JobDocument::from_json(
            r#"{"command":"eval","f_name":"sld","inputs":{"rho":"diag(0.5,0.25)","x":"Eij(2,1,2)"}}"#,
        )
        .unwrap();
        assert_eq!(job.inputs["rho"].resolve(None).unwrap(), diag(&[0.5, 0.25]));
    }

    #[test]
    fn awkward_floats_round_trip() {
        let vals = [0.1, 1.0 / 3.0, f64::MIN_POSITIVE, 5e-324, 1.7976931348623157e308, -0.0];
        let m = CMat::from_fn(2, 3, |i, j| Complex64::new(vals[i * 3 + j], -vals[(i * 3 + j + 1) % 6]));
        let back = matrix_from_json(&matrix_to_json(&m).unwrap()).unwrap();
        for (a, b) in m.iter().zip(back.iter()) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
    }

    proptest! {
        #[test]
        fn matrix_round_trip_is_bit_exact(seed in any::<u64>(), r in 1usize..5, cc in 1usize..5, scale in -300.0f64..300.0) {
            let m = complex_gaussian(r, cc, &mut rng_for(seed, 0)) * Complex64::new(10f64.powf(scale / 30.0), 0.0);
            let back = matrix_from_json(&matrix_to_json(&m).unwrap()).unwrap();
            prop_assert!(m.iter().zip(back.iter()).all(|(a, b)| a.re.to_bits() == b.re.to_bits() && a.im.to_bits() == b.im.to_bits()));
        }
    }
}
