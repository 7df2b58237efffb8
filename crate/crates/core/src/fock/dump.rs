//! Binary dump of a density matrix.
//!
//! Layout (little endian): the 8 magic bytes `FOCKRHO1`, `u32` mode count,
//! `u32` cutoff, then `dim * dim` complex entries in row-major order, each as
//! two `f64` (real, imaginary).

use nalgebra::DMatrix;

use super::{FockDensityMatrix, C64};
use crate::{Error, Result};

pub const DUMP_MAGIC: &[u8; 8] = b"FOCKRHO1";
const HEADER_LEN: usize = 16;
/// Largest joint dimension accepted by the decoder.
const MAX_DIM: usize = 4096;
/// Density-matrix entries satisfy `|rho_ij| <= 1`; anything far beyond is corrupt.
const MAX_ENTRY: f64 = 1.0 + 1e-6;

pub fn encode_dump(rho: &FockDensityMatrix) -> Vec<u8> {
    let dim = rho.dim();
    let mut out = Vec::with_capacity(HEADER_LEN + 16 * dim * dim);
    out.extend_from_slice(DUMP_MAGIC);
    out.extend_from_slice(&(rho.modes() as u32).to_le_bytes());
    out.extend_from_slice(&(rho.cutoff() as u32).to_le_bytes());
    for i in 0..dim {
        for j in 0..dim {
            let z = rho.matrix()[(i, j)];
            out.extend_from_slice(&z.re.to_le_bytes());
            out.extend_from_slice(&z.im.to_le_bytes());
        }
    }
    out
}

/// Parses a dump, validating the header, the payload length and the
/// density-matrix invariants (Hermitian, positive semidefinite). The trace is
/// not required to be 1 so that leaky intermediate states can be inspected.
pub fn decode_dump(bytes: &[u8]) -> Result<FockDensityMatrix> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Decode(format!("dump is {} bytes, shorter than the header", bytes.len())));
    }
    let (header, payload) = bytes.split_at(HEADER_LEN);
    if &header[..8] != DUMP_MAGIC {
        return Err(Error::Decode("bad magic".into()));
    }
    let modes = u32::from_le_bytes(header[8..12].try_into().expect("4 bytes")) as usize;
    let cutoff = u32::from_le_bytes(header[12..16].try_into().expect("4 bytes")) as usize;
    if !(1..=2).contains(&modes) {
        return Err(Error::Decode(format!("mode count {modes} not in {{1, 2}}")));
    }
    if cutoff == 0 {
        return Err(Error::Decode("cutoff is zero".into()));
    }
    let dim = if modes == 1 { Some(cutoff) } else { cutoff.checked_mul(cutoff) }
        .filter(|&d| d <= MAX_DIM)
        .ok_or_else(|| Error::Decode(format!("dimension for cutoff {cutoff} exceeds {MAX_DIM}")))?;
    let expected = 16 * dim * dim;
    if payload.len() != expected {
        return Err(Error::Decode(format!("payload is {} bytes, expected {expected}", payload.len())));
    }

    let mut entries = Vec::with_capacity(dim * dim);
    for chunk in payload.chunks_exact(16) {
        let re = f64::from_le_bytes(chunk[..8].try_into().expect("8 bytes"));
        let im = f64::from_le_bytes(chunk[8..].try_into().expect("8 bytes"));
        if !(re.is_finite() && im.is_finite()) || re.abs() > MAX_ENTRY || im.abs() > MAX_ENTRY {
            return Err(Error::Decode(format!("entry {re}+{im}i is not a density-matrix element")));
        }
        entries.push(C64::new(re, im));
    }
    let rho = DMatrix::from_row_slice(dim, dim, &entries);
    FockDensityMatrix::from_parts(modes, cutoff, rho).map_err(|e| Error::Decode(e.to_string()))
}
