//! Minimal little-endian binary codec shared by the feature-store snapshot
//! and the model checkpoint. Every record is length- or count-prefixed so the
//! formats stay self-describing.

use std::io::{Read, Write};

use crate::error::{Error, Result};

pub(crate) fn write_u8<W: Write>(w: &mut W, v: u8) -> Result<()> {
    w.write_all(&[v])?;
    Ok(())
}

pub(crate) fn write_u16<W: Write>(w: &mut W, v: u16) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

pub(crate) fn write_u32<W: Write>(w: &mut W, v: u32) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

pub(crate) fn write_u64<W: Write>(w: &mut W, v: u64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

pub(crate) fn write_f64<W: Write>(w: &mut W, v: f64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn read_exact<R: Read, const N: usize>(r: &mut R, corrupt: &'static str) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)
        .map_err(|_| Error::CorruptSnapshot(format!("truncated {corrupt}")))?;
    Ok(buf)
}

pub(crate) fn read_u8<R: Read>(r: &mut R, what: &'static str) -> Result<u8> {
    Ok(read_exact::<R, 1>(r, what)?[0])
}

pub(crate) fn read_u16<R: Read>(r: &mut R, what: &'static str) -> Result<u16> {
    Ok(u16::from_le_bytes(read_exact::<R, 2>(r, what)?))
}

pub(crate) fn read_u32<R: Read>(r: &mut R, what: &'static str) -> Result<u32> {
    Ok(u32::from_le_bytes(read_exact::<R, 4>(r, what)?))
}

pub(crate) fn read_u64<R: Read>(r: &mut R, what: &'static str) -> Result<u64> {
    Ok(u64::from_le_bytes(read_exact::<R, 8>(r, what)?))
}

pub(crate) fn read_f64<R: Read>(r: &mut R, what: &'static str) -> Result<f64> {
    Ok(f64::from_le_bytes(read_exact::<R, 8>(r, what)?))
}

pub(crate) fn expect_magic<R: Read>(r: &mut R, magic: &[u8]) -> Result<()> {
    let mut buf = vec![0u8; magic.len()];
    r.read_exact(&mut buf)
        .map_err(|_| Error::CorruptSnapshot("file shorter than magic header".into()))?;
    if buf != magic {
        return Err(Error::CorruptSnapshot(format!(
            "bad magic header {:?}, expected {:?}",
            String::from_utf8_lossy(&buf),
            String::from_utf8_lossy(magic)
        )));
    }
    Ok(())
}
