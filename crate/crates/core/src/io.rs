//! File formats: space JSON, operator-family binaries, decomposition JSON.
//!
//! A family file is the magic `HOMOGFAM`, a little-endian `u64` header length,
//! a JSON header, then the `P_k` matrices as row-major little-endian `f64`.

use crate::decompose::AtomicDecomposition;
use crate::error::{HardyError, Result};
use crate::kernels::{FamilyKind, FamilyParams, IATIDiagnostics, OperatorFamily};
use crate::space::QuasiMetricSpace;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

pub const FAMILY_MAGIC: &[u8; 8] = b"HOMOGFAM";

/// Serde helper for `f64` fields that may be infinite: non-finite values are
/// written as the strings `"inf"`, `"-inf"`, `"nan"`.
pub mod extended_f64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, ser: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            ser.serialize_f64(*v)
        } else if v.is_nan() {
            ser.serialize_str("nan")
        } else if *v > 0.0 {
            ser.serialize_str("inf")
        } else {
            ser.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<f64, D::Error> {
        match Repr::deserialize(de)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "inf" | "infinity" => Ok(f64::INFINITY),
                "-inf" | "-infinity" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!("not a number: {other}"))),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DistanceSpec {
    Matrix(Vec<Vec<f64>>),
    Generated(GeneratedDistance),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GeneratedDistance {
    /// Integer lattice points `0..dims[i]` (row-major, last axis fastest) times `spacing`.
    EuclideanGrid {
        dims: Vec<usize>,
        #[serde(default = "unit")]
        spacing: f64,
    },
}

fn unit() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceFile {
    #[serde(rename = "A0")]
    pub a0: f64,
    pub mu: Vec<f64>,
    pub d: DistanceSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

impl SpaceFile {
    pub fn from_space(s: &QuasiMetricSpace) -> Self {
        let rows = (0..s.n()).map(|x| s.row(x).to_vec()).collect();
        Self { a0: s.a0(), mu: s.masses().to_vec(), d: DistanceSpec::Matrix(rows), labels: s.labels().map(<[String]>::to_vec) }
    }

    pub fn into_space(self) -> Result<QuasiMetricSpace> {
        let s = match self.d {
            DistanceSpec::Matrix(rows) => QuasiMetricSpace::from_rows(rows, self.mu, self.a0)?,
            DistanceSpec::Generated(GeneratedDistance::EuclideanGrid { dims, spacing }) => {
                let n: usize = dims.iter().product();
                if n != self.mu.len() {
                    return Err(HardyError::Shape { expected: n, got: self.mu.len() });
                }
                let coords: Vec<Vec<f64>> = (0..n)
                    .map(|mut i| {
                        let mut c = vec![0.0; dims.len()];
                        for (axis, &len) in dims.iter().enumerate().rev() {
                            c[axis] = (i % len) as f64 * spacing;
                            i /= len;
                        }
                        c
                    })
                    .collect();
                QuasiMetricSpace::from_fn(n, self.mu, self.a0, |x, y| {
                    coords[x].iter().zip(&coords[y]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
                })?
            }
        };
        match self.labels {
            Some(labels) => s.with_labels(labels),
            None => Ok(s),
        }
    }
}

pub fn space_from_json(text: &str) -> Result<QuasiMetricSpace> {
    serde_json::from_str::<SpaceFile>(text)?.into_space()
}

pub fn space_to_json(s: &QuasiMetricSpace) -> Result<String> {
    Ok(serde_json::to_string(&SpaceFile::from_space(s))?)
}

pub fn load_space(path: impl AsRef<Path>) -> Result<QuasiMetricSpace> {
    space_from_json(&std::fs::read_to_string(path)?)
}

pub fn save_space(path: impl AsRef<Path>, s: &QuasiMetricSpace) -> Result<()> {
    std::fs::write(path, space_to_json(s)?)?;
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct FamilyHeader {
    kind: FamilyKind,
    params: FamilyParams,
    n: usize,
    levels: usize,
    mu: Vec<f64>,
    marginal_error: f64,
    iterations: Vec<usize>,
    diagnostics: Option<IATIDiagnostics>,
}

pub fn write_family(mut w: impl Write, fam: &OperatorFamily) -> Result<()> {
    let header = FamilyHeader {
        kind: fam.kind,
        params: fam.params,
        n: fam.n(),
        levels: fam.levels(),
        mu: fam.masses().to_vec(),
        marginal_error: fam.marginal_error,
        iterations: fam.iterations.clone(),
        diagnostics: fam.diagnostics,
    };
    let json = serde_json::to_vec(&header)?;
    w.write_all(FAMILY_MAGIC)?;
    w.write_all(&(json.len() as u64).to_le_bytes())?;
    w.write_all(&json)?;
    for k in 0..fam.levels() {
        let bytes: Vec<u8> = fam.p_matrix(k).iter().flat_map(|v| v.to_le_bytes()).collect();
        w.write_all(&bytes)?;
    }
    Ok(())
}

pub fn read_family(mut r: impl Read) -> Result<OperatorFamily> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != FAMILY_MAGIC {
        return Err(HardyError::Format("not a family file (bad magic)".into()));
    }
    let mut len = [0u8; 8];
    r.read_exact(&mut len)?;
    let len = u64::from_le_bytes(len) as usize;
    let mut json = vec![0u8; len];
    r.read_exact(&mut json)?;
    let header: FamilyHeader = serde_json::from_slice(&json)?;
    if header.mu.len() != header.n {
        return Err(HardyError::Format(format!("header lists {} masses for n = {}", header.mu.len(), header.n)));
    }
    let mut p = Vec::with_capacity(header.levels);
    let mut buf = vec![0u8; header.n * header.n * 8];
    for _ in 0..header.levels {
        r.read_exact(&mut buf)?;
        p.push(buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8"))).collect());
    }
    let mut fam = OperatorFamily::from_parts(header.kind, header.params, header.mu, p)?;
    fam.iterations = header.iterations;
    fam.diagnostics = header.diagnostics;
    Ok(fam)
}

pub fn save_family(path: impl AsRef<Path>, fam: &OperatorFamily) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    write_family(&mut w, fam)?;
    w.flush()?;
    Ok(())
}

pub fn load_family(path: impl AsRef<Path>) -> Result<OperatorFamily> {
    read_family(std::io::BufReader::new(std::fs::File::open(path)?))
}

pub fn save_decomposition(path: impl AsRef<Path>, dec: &AtomicDecomposition) -> Result<()> {
    std::fs::write(path, serde_json::to_string(dec)?)?;
    Ok(())
}

pub fn load_decomposition(path: impl AsRef<Path>) -> Result<AtomicDecomposition> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_spec() {
        let text = r#"{"A0": 1.0, "mu": [1,1,1,1,1,1], "d": {"kind": "euclidean-grid", "dims": [2, 3]}}"#;
        let s = space_from_json(text).unwrap();
        assert_eq!(s.n(), 6);
        assert_eq!(s.d(0, 2), 2.0);
        assert_eq!(s.d(0, 3), 1.0);
        assert!((s.d(0, 5) - 5f64.sqrt()).abs() < 1e-15);
        let back = space_from_json(&space_to_json(&s).unwrap()).unwrap();
        assert_eq!(back.distances(), s.distances());
    }

    #[test]
    fn infinite_exponent_round_trip() {
        let dec = AtomicDecomposition::empty(0.5, f64::INFINITY);
        let text = serde_json::to_string(&dec).unwrap();
        assert!(text.contains("\"inf\""));
        let back: AtomicDecomposition = serde_json::from_str(&text).unwrap();
        assert_eq!(back.q, f64::INFINITY);
    }
}
