use std::fs::File;
use std::io::{BufReader, BufWriter, ErrorKind, Read, Write};
use std::path::Path;
use std::str::FromStr;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use rand::Rng;
use rand_distr::{Distribution as _, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::core::{Collection, Error, Result};
use crate::util::rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Distribution {
    /// N(0, 1).
    GaussianStd,
    /// U[−√12/2, √12/2], unit variance.
    UniformCentered,
    /// U[0, √12].
    UniformPositive,
    /// Exponential with rate 1.
    Exponential,
}

impl Distribution {
    pub fn name(&self) -> &'static str {
        match self {
            Distribution::GaussianStd => "gaussian",
            Distribution::UniformCentered => "uniform",
            Distribution::UniformPositive => "uniform-positive",
            Distribution::Exponential => "exponential",
        }
    }

    fn draw<R: Rng + ?Sized>(&self, r: &mut R) -> f32 {
        let w = 12f64.sqrt();
        let v: f64 = match self {
            Distribution::GaussianStd => StandardNormal.sample(r),
            Distribution::UniformCentered => r.random_range(-w / 2.0..w / 2.0),
            Distribution::UniformPositive => r.random_range(0.0..w),
            Distribution::Exponential => Exp1.sample(r),
        };
        v as f32
    }
}

impl FromStr for Distribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => Ok(Distribution::GaussianStd),
            "uniform" | "uniform-centered" => Ok(Distribution::UniformCentered),
            "uniform-positive" | "positive" => Ok(Distribution::UniformPositive),
            "exponential" | "exp" => Ok(Distribution::Exponential),
            other => Err(Error::InvalidParameter(format!("unknown distribution `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub distribution: Distribution,
    pub m: usize,
    pub d: usize,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn new(distribution: Distribution, m: usize, d: usize, seed: u64) -> Self {
        Self { distribution, m, d, seed }
    }
}

/// m×d iid draws, row-major, from a single seeded stream.
pub fn generate(spec: &SyntheticSpec) -> Result<Collection> {
    let mut r = rng(spec.seed);
    let data: Vec<f32> = (0..spec.m * spec.d).map(|_| spec.distribution.draw(&mut r)).collect();
    Collection::from_flat(spec.d, data)
}

/// Reads `.fvecs` records: a little-endian i32 dimension followed by that many f32 values.
pub fn read_vecs<R: Read>(reader: R) -> Result<Collection> {
    let mut reader = BufReader::new(reader);
    let mut dim: Option<usize> = None;
    let mut data = Vec::new();
    loop {
        let d = match reader.read_i32::<LittleEndian>() {
            Ok(d) => d,
            Err(e) if e.kind() == ErrorKind::UnexpectedEof => break,
            Err(e) => return Err(e.into()),
        };
        if d <= 0 {
            return Err(Error::InvalidVector(format!("record dimension {d}")));
        }
        let d = d as usize;
        match dim {
            None => dim = Some(d),
            Some(expected) if expected != d => return Err(Error::DimensionMismatch { expected, got: d }),
            _ => {}
        }
        let start = data.len();
        data.resize(start + d, 0.0);
        reader.read_f32_into::<LittleEndian>(&mut data[start..]).map_err(|e| {
            if e.kind() == ErrorKind::UnexpectedEof {
                Error::Format("truncated record".into())
            } else {
                e.into()
            }
        })?;
    }
    match dim {
        Some(d) => Collection::from_flat(d, data),
        None => Err(Error::EmptyCollection),
    }
}

pub fn write_vecs<W: Write>(writer: W, x: &Collection) -> Result<()> {
    let mut w = BufWriter::new(writer);
    for row in x.rows() {
        w.write_i32::<LittleEndian>(row.len() as i32)?;
        for &v in row {
            w.write_f32::<LittleEndian>(v)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load_vecs(path: impl AsRef<Path>) -> Result<Collection> {
    read_vecs(File::open(path)?)
}

pub fn save_vecs(path: impl AsRef<Path>, x: &Collection) -> Result<()> {
    write_vecs(File::create(path)?, x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_vector_layout() {
        let x = Collection::from_rows(&[[1.0f32, 2.0]]).unwrap();
        let mut buf = Vec::new();
        write_vecs(&mut buf, &x).unwrap();
        assert_eq!(buf.len(), 12);
        assert_eq!(&buf[..4], &[2, 0, 0, 0]);
        assert_eq!(&buf[4..8], &1.0f32.to_le_bytes());
        assert_eq!(&buf[8..], &2.0f32.to_le_bytes());
    }

    #[test]
    fn malformed_inputs() {
        assert!(matches!(read_vecs(&[][..]), Err(Error::EmptyCollection)));
        let mut buf = Vec::new();
        buf.extend_from_slice(&2i32.to_le_bytes());
        buf.extend_from_slice(&1.0f32.to_le_bytes());
        assert!(read_vecs(&buf[..]).is_err());
        let mut mixed = Vec::new();
        write_vecs(&mut mixed, &Collection::from_rows(&[[1.0f32, 2.0]]).unwrap()).unwrap();
        write_vecs(&mut mixed, &Collection::from_rows(&[[1.0f32]]).unwrap()).unwrap();
        assert!(matches!(read_vecs(&mixed[..]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn positive_support() {
        let x = generate(&SyntheticSpec::new(Distribution::UniformPositive, 100, 8, 1)).unwrap();
        assert!(x.as_flat().unwrap().iter().all(|&v| v >= 0.0));
    }
}
