//! `SAE1` weight container.
//!
//! Layout (little-endian, no padding):
//! magic `"SAE1"`, u32 d, u32 m, then f32 arrays W_enc (d*m, row-major),
//! b_enc (m), W_dec (m*d, row-major), b_dec (d).

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use crate::error::{Error, Result};
use crate::numerics::{Matrix, Vector};
use crate::tensor_io::{
    expect_eof, expect_magic, read_f32_array, read_u32, write_f32_array, write_magic, write_u32,
};

use super::SaeParams;

pub const SAE_MAGIC: [u8; 4] = *b"SAE1";

/// Serialize SAE weights; values are quantized to f32 on disk.
pub fn save_sae<P: AsRef<Path>>(sae: &SaeParams, path: P) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_magic(&mut w, &SAE_MAGIC)?;
    write_u32(&mut w, sae.d() as u32)?;
    write_u32(&mut w, sae.m() as u32)?;
    write_f32_array(&mut w, sae.w_enc.as_slice())?;
    write_f32_array(&mut w, sae.b_enc.as_slice())?;
    write_f32_array(&mut w, sae.w_dec.as_slice())?;
    write_f32_array(&mut w, sae.b_dec.as_slice())?;
    Ok(())
}

/// Load SAE weights saved by [`save_sae`]. Bad magic, truncation, and shape
/// inconsistencies are rejected distinctly.
pub fn load_sae<P: AsRef<Path>>(path: P) -> Result<SaeParams> {
    let mut r = BufReader::new(File::open(path)?);
    expect_magic(&mut r, &SAE_MAGIC)?;
    let d = read_u32(&mut r)? as usize;
    let m = read_u32(&mut r)? as usize;
    if d == 0 || m == 0 {
        return Err(Error::FileShape(format!("degenerate sizes d={d}, m={m}")));
    }
    let w_enc = Matrix::from_vec(d, m, read_f32_array(&mut r, d * m)?)?;
    let b_enc = Vector::new(read_f32_array(&mut r, m)?);
    let w_dec = Matrix::from_vec(m, d, read_f32_array(&mut r, m * d)?)?;
    let b_dec = Vector::new(read_f32_array(&mut r, d)?);
    expect_eof(&mut r, "SAE1")?;
    SaeParams::new(w_enc, b_enc, w_dec, b_dec)
}
