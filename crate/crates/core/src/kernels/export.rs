//! Binary matrix files: a 32-byte header (N: u64, kind: u64 with 0 = real and
//! 1 = complex, Γ0: f64, k0: f64) followed by the lower triangle in row-major
//! order as little-endian f64, complex entries interleaved as (re, im).

use super::{DissipativeMatrix, MatrixEntries};
use crate::error::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;
use std::io::{Read, Write};

pub fn write_matrix_binary<W: Write>(matrix: &DissipativeMatrix, mut out: W) -> Result<()> {
    let n = matrix.dim();
    let kind: u64 = match matrix.entries {
        MatrixEntries::Real(_) => 0,
        MatrixEntries::Complex(_) => 1,
    };
    out.write_all(&(n as u64).to_le_bytes())?;
    out.write_all(&kind.to_le_bytes())?;
    out.write_all(&matrix.gamma_0.to_le_bytes())?;
    out.write_all(&matrix.k0.to_le_bytes())?;
    let mut buf = Vec::with_capacity(16 * n);
    for i in 0..n {
        buf.clear();
        for j in 0..=i {
            match &matrix.entries {
                MatrixEntries::Real(m) => buf.extend_from_slice(&m[(i, j)].to_le_bytes()),
                MatrixEntries::Complex(m) => {
                    buf.extend_from_slice(&m[(i, j)].re.to_le_bytes());
                    buf.extend_from_slice(&m[(i, j)].im.to_le_bytes());
                }
            }
        }
        out.write_all(&buf)?;
    }
    out.flush()?;
    Ok(())
}

fn read_u64<R: Read>(input: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    input.read_exact(&mut b).map_err(truncated)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(input: &mut R) -> Result<f64> {
    read_u64(input).map(f64::from_bits)
}

fn truncated(e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::InvalidData("matrix file is truncated".into())
    } else {
        Error::Io(e)
    }
}

/// Reads a matrix written by [`write_matrix_binary`], restoring the upper triangle.
pub fn read_matrix_binary<R: Read>(mut input: R) -> Result<DissipativeMatrix> {
    let n = read_u64(&mut input)? as usize;
    let kind = read_u64(&mut input)?;
    let gamma_0 = read_f64(&mut input)?;
    let k0 = read_f64(&mut input)?;
    let entries = match kind {
        0 => {
            let mut m = DMatrix::zeros(n, n);
            for i in 0..n {
                for j in 0..=i {
                    let v = read_f64(&mut input)?;
                    m[(i, j)] = v;
                    m[(j, i)] = v;
                }
            }
            MatrixEntries::Real(m)
        }
        1 => {
            let mut m = DMatrix::zeros(n, n);
            for i in 0..n {
                for j in 0..=i {
                    let v = Complex64::new(read_f64(&mut input)?, read_f64(&mut input)?);
                    m[(i, j)] = v;
                    m[(j, i)] = v.conj();
                }
            }
            MatrixEntries::Complex(m)
        }
        other => return Err(Error::InvalidData(format!("unknown matrix kind {other}"))),
    };
    let mut rest = [0u8; 1];
    if input.read(&mut rest)? != 0 {
        return Err(Error::InvalidData("trailing bytes after matrix data".into()));
    }
    Ok(DissipativeMatrix { entries, gamma_0, k0 })
}
