//! Little-endian binary helpers shared by the SAE and toy-model weight
//! containers. Tensors are stored as 32-bit floats and widened to f64 on
//! load.

use std::io::{Read, Write};

use crate::error::{Error, Result};

pub(crate) fn write_magic<W: Write>(w: &mut W, magic: &[u8; 4]) -> Result<()> {
    w.write_all(magic)?;
    Ok(())
}

pub(crate) fn expect_magic<R: Read>(r: &mut R, expected: &[u8; 4]) -> Result<()> {
    let mut found = [0u8; 4];
    r.read_exact(&mut found).map_err(|_| Error::Truncated {
        expected: 4,
        found: 0,
    })?;
    if &found != expected {
        return Err(Error::BadMagic {
            expected: *expected,
            found,
        });
    }
    Ok(())
}

pub(crate) fn write_u32<W: Write>(w: &mut W, value: u32) -> Result<()> {
    w.write_all(&value.to_le_bytes())?;
    Ok(())
}

pub(crate) fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf).map_err(|_| Error::Truncated {
        expected: 4,
        found: 0,
    })?;
    Ok(u32::from_le_bytes(buf))
}

/// Write a f64 slice as consecutive little-endian f32 values.
pub(crate) fn write_f32_array<W: Write>(w: &mut W, values: &[f64]) -> Result<()> {
    let mut buf = Vec::with_capacity(values.len() * 4);
    for &v in values {
        buf.extend_from_slice(&(v as f32).to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

/// Read `len` little-endian f32 values, widened to f64.
pub(crate) fn read_f32_array<R: Read>(r: &mut R, len: usize) -> Result<Vec<f64>> {
    let mut buf = vec![0u8; len * 4];
    let mut filled = 0;
    while filled < buf.len() {
        let n = r.read(&mut buf[filled..])?;
        if n == 0 {
            return Err(Error::Truncated {
                expected: buf.len(),
                found: filled,
            });
        }
        filled += n;
    }
    let mut out = Vec::with_capacity(len);
    for chunk in buf.chunks_exact(4) {
        let v = f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]);
        if !v.is_finite() {
            return Err(Error::NonFinite("weight file payload"));
        }
        out.push(v as f64);
    }
    Ok(out)
}

/// Error if any bytes remain unread.
pub(crate) fn expect_eof<R: Read>(r: &mut R, context: &str) -> Result<()> {
    let mut probe = [0u8; 1];
    match r.read(&mut probe)? {
        0 => Ok(()),
        _ => Err(Error::FileShape(format!(
            "{context}: trailing bytes after declared payload"
        ))),
    }
}
