//! Binary container for generated regression problems.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! magic   5 bytes  "ACGD1"
//! n       u64      number of rows, >= 1
//! d       u64      number of columns, >= 1
//! p       u64      residual exponent, 1 or 2
//! flags   u64      bit 0: planted point present; other bits reserved (0)
//! A       n*d f64  row-major matrix
//! b       n   f64  targets
//! x_nat   d   f64  planted point, only when flag bit 0 is set
//! ```
//!
//! The encoding is canonical: decode/encode round-trips byte-exactly.

use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, DenseVector, RowMatrix};
use crate::problems::{PNorm, RegressionProblem};

pub const CONTAINER_MAGIC: &[u8; 5] = b"ACGD1";

const FLAG_PLANTED: u64 = 1;

pub fn encode_problem(problem: &RegressionProblem) -> Result<Vec<u8>> {
    let matrix = match problem.matrix() {
        RowMatrix::Dense(m) => m,
        RowMatrix::Sparse { .. } => {
            return Err(Error::InvalidArgument(
                "container encoding supports dense matrices only".into(),
            ))
        }
    };
    let n = matrix.nrows() as u64;
    let d = matrix.ncols() as u64;
    let flags = if problem.planted_point().is_some() {
        FLAG_PLANTED
    } else {
        0
    };

    let mut out = Vec::new();
    out.extend_from_slice(CONTAINER_MAGIC);
    out.extend_from_slice(&n.to_le_bytes());
    out.extend_from_slice(&d.to_le_bytes());
    out.extend_from_slice(&problem.p().exponent().to_le_bytes());
    out.extend_from_slice(&flags.to_le_bytes());
    for v in matrix.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for v in problem.targets() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    if let Some(x) = problem.planted_point() {
        for v in x.iter() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn write_problem(problem: &RegressionProblem, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_problem(problem)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_problem(path: impl AsRef<Path>) -> Result<RegressionProblem> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_problem(&bytes)
}

struct Reader<'a> {
    bytes: &'a [u8],
    offset: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        let end = self
            .offset
            .checked_add(len)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| {
                Error::Container(format!(
                    "truncated: need {len} bytes at offset {}, have {}",
                    self.offset,
                    self.bytes.len().saturating_sub(self.offset)
                ))
            })?;
        let slice = &self.bytes[self.offset..end];
        self.offset = end;
        Ok(slice)
    }

    fn u64(&mut self) -> Result<u64> {
        let raw = self.take(8)?;
        Ok(u64::from_le_bytes(raw.try_into().unwrap()))
    }

    fn f64_vec(&mut self, count: usize, what: &str) -> Result<Vec<f64>> {
        let byte_len = count
            .checked_mul(8)
            .ok_or_else(|| Error::Container(format!("{what} length overflow")))?;
        let raw = self.take(byte_len)?;
        let mut out = Vec::with_capacity(count);
        for chunk in raw.chunks_exact(8) {
            let v = f64::from_le_bytes(chunk.try_into().unwrap());
            if !v.is_finite() {
                return Err(Error::Container(format!("non-finite value in {what}")));
            }
            out.push(v);
        }
        Ok(out)
    }
}

pub fn decode_problem(bytes: &[u8]) -> Result<RegressionProblem> {
    let mut reader = Reader { bytes, offset: 0 };
    let magic = reader.take(CONTAINER_MAGIC.len())?;
    if magic != CONTAINER_MAGIC {
        return Err(Error::Container("bad magic bytes".into()));
    }
    let n = reader.u64()?;
    let d = reader.u64()?;
    let p = reader.u64()?;
    let flags = reader.u64()?;

    if n == 0 || d == 0 {
        return Err(Error::Container("dimensions must be >= 1".into()));
    }
    if usize::try_from(n).is_err() || usize::try_from(d).is_err() {
        return Err(Error::Container("dimensions exceed address space".into()));
    }
    let n = n as usize;
    let d = d as usize;
    let p = PNorm::from_exponent(p).map_err(|e| Error::Container(e.to_string()))?;
    if flags & !FLAG_PLANTED != 0 {
        return Err(Error::Container(format!("unknown flag bits {flags:#x}")));
    }
    let has_planted = flags & FLAG_PLANTED != 0;

    // Validate the advertised payload size before any large allocation.
    let a_count = n
        .checked_mul(d)
        .ok_or_else(|| Error::Container("matrix size overflow".into()))?;
    let payload = a_count
        .checked_add(n)
        .and_then(|c| c.checked_add(if has_planted { d } else { 0 }))
        .and_then(|c| c.checked_mul(8))
        .ok_or_else(|| Error::Container("payload size overflow".into()))?;
    let expected_len = CONTAINER_MAGIC.len() + 4 * 8 + payload;
    if bytes.len() != expected_len {
        return Err(Error::Container(format!(
            "length mismatch: header promises {expected_len} bytes, file has {}",
            bytes.len()
        )));
    }

    let a = DenseMatrix::new(n, d, reader.f64_vec(a_count, "matrix")?)
        .map_err(|e| Error::Container(e.to_string()))?;
    let b = reader.f64_vec(n, "targets")?;
    let problem = RegressionProblem::new(RowMatrix::Dense(a), b, p)
        .map_err(|e| Error::Container(e.to_string()))?;
    if has_planted {
        let x = DenseVector::new(reader.f64_vec(d, "planted point")?)
            .map_err(|e| Error::Container(e.to_string()))?;
        problem
            .with_planted_point(x)
            .map_err(|e| Error::Container(e.to_string()))
    } else {
        Ok(problem)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::Objective;
    use proptest::prelude::*;

    #[test]
    fn round_trips_a_generated_problem() {
        let problem = RegressionProblem::generate(4, 3, 1e-2, PNorm::One, 9).unwrap();
        let bytes = encode_problem(&problem).unwrap();
        let decoded = decode_problem(&bytes).unwrap();
        assert_eq!(decoded.targets(), problem.targets());
        assert_eq!(decoded.planted_point(), problem.planted_point());
        assert_eq!(decoded.p(), problem.p());
        let x = DenseVector::new(vec![0.1, -0.2, 0.3]).unwrap();
        assert_eq!(decoded.value(&x), problem.value(&x));
        // Canonical encoding: re-encoding reproduces the bytes.
        assert_eq!(encode_problem(&decoded).unwrap(), bytes);
    }

    #[test]
    fn rejects_bad_magic_truncation_and_trailing_bytes() {
        let problem = RegressionProblem::generate(2, 2, 0.0, PNorm::Two, 1).unwrap();
        let bytes = encode_problem(&problem).unwrap();

        let mut bad_magic = bytes.clone();
        bad_magic[0] = b'X';
        assert!(decode_problem(&bad_magic).is_err());

        assert!(decode_problem(&bytes[..bytes.len() - 1]).is_err());
        assert!(decode_problem(&[]).is_err());

        let mut trailing = bytes.clone();
        trailing.push(0);
        assert!(decode_problem(&trailing).is_err());
    }

    #[test]
    fn rejects_non_finite_payload() {
        let problem = RegressionProblem::generate(2, 2, 0.0, PNorm::Two, 1).unwrap();
        let mut bytes = encode_problem(&problem).unwrap();
        let nan = f64::NAN.to_le_bytes();
        bytes[37..45].copy_from_slice(&nan);
        assert!(decode_problem(&bytes).is_err());
    }

    #[test]
    fn rejects_absurd_header_dimensions() {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(CONTAINER_MAGIC);
        bytes.extend_from_slice(&u64::MAX.to_le_bytes());
        bytes.extend_from_slice(&u64::MAX.to_le_bytes());
        bytes.extend_from_slice(&2u64.to_le_bytes());
        bytes.extend_from_slice(&0u64.to_le_bytes());
        assert!(decode_problem(&bytes).is_err());
    }

    proptest! {
        #[test]
        fn decode_never_panics_on_mutated_input(
            seed in 0u64..20,
            flips in proptest::collection::vec((0usize..200, 0u8..=255), 0..8)
        ) {
            let problem = RegressionProblem::generate(2, 2, 1e-2, PNorm::Two, seed).unwrap();
            let mut bytes = encode_problem(&problem).unwrap();
            for (pos, val) in flips {
                let len = bytes.len();
                bytes[pos % len] = val;
            }
            let _ = decode_problem(&bytes);
        }
    }
}
