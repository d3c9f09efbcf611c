//! Field snapshots as `θ φ value` text or a little-endian binary grid.
//!
//! Binary layout: the 8-byte magic `SPHXFLD1`, `n_theta` and `n_phi` as
//! `u64`, then `n_theta · n_phi` `f64` values ring by ring (north to south,
//! increasing `φ` within a ring). Every number is little-endian.

use std::io::{Read, Write};

use super::{PixelField, SphereGrid};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"SPHXFLD1";

pub fn write_text<W: Write>(field: &PixelField, grid: &SphereGrid, mut out: W) -> Result<()> {
    field.matches(grid)?;
    writeln!(out, "theta phi value")?;
    for (n, v) in field.values().iter().enumerate() {
        let (th, ph) = grid.node(n);
        writeln!(out, "{th:.17e} {ph:.17e} {v:.17e}")?;
    }
    Ok(())
}

pub fn write_binary<W: Write>(field: &PixelField, mut out: W) -> Result<()> {
    out.write_all(MAGIC)?;
    out.write_all(&(field.n_theta() as u64).to_le_bytes())?;
    out.write_all(&(field.n_phi() as u64).to_le_bytes())?;
    for v in field.values() {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_binary<R: Read>(mut input: R) -> Result<PixelField> {
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Invalid("not a field snapshot (bad magic)".into()));
    }
    let mut word = [0u8; 8];
    input.read_exact(&mut word)?;
    let n_theta = u64::from_le_bytes(word) as usize;
    input.read_exact(&mut word)?;
    let n_phi = u64::from_le_bytes(word) as usize;
    let len = n_theta
        .checked_mul(n_phi)
        .filter(|&n| n < (1 << 32))
        .ok_or_else(|| Error::Invalid(format!("implausible grid {n_theta}×{n_phi}")))?;
    let mut values = Vec::with_capacity(len);
    for _ in 0..len {
        input.read_exact(&mut word)?;
        values.push(f64::from_le_bytes(word));
    }
    Ok(PixelField::new(n_theta, n_phi, values))
}
