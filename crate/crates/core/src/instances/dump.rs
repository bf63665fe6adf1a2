//! Binary replay format.
//!
//! A 32-byte little-endian header (`magic[8]`, `version: u32`, `reserved: u32`,
//! `n: u64`, `λ: f64`) is followed by `M`, `W` and the spike as row-major `f64`,
//! then the instance seed as `u64`.

use std::io::{Read, Write};

use ndarray::Array2;

use super::{with_noise, SpikedInstance, SpinConfiguration};
use crate::{Error, Result};

pub const DUMP_MAGIC: [u8; 8] = *b"SWLABINS";
pub const DUMP_VERSION: u32 = 1;

fn put_f64s<W: Write>(w: &mut W, values: impl Iterator<Item = f64>) -> Result<()> {
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn write_instance<W: Write>(inst: &SpikedInstance, mut w: W) -> Result<()> {
    w.write_all(&DUMP_MAGIC)?;
    w.write_all(&DUMP_VERSION.to_le_bytes())?;
    w.write_all(&0u32.to_le_bytes())?;
    w.write_all(&(inst.n as u64).to_le_bytes())?;
    w.write_all(&inst.lambda.to_le_bytes())?;
    put_f64s(&mut w, inst.m_matrix.iter().copied())?;
    put_f64s(&mut w, inst.noise.iter().copied())?;
    put_f64s(&mut w, inst.spike.as_slice().iter().map(|&s| s as f64))?;
    w.write_all(&inst.seed.to_le_bytes())?;
    w.flush()?;
    Ok(())
}

fn take8<R: Read>(r: &mut R) -> Result<[u8; 8]> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(b)
}

fn take_matrix<R: Read>(r: &mut R, n: usize) -> Result<Array2<f64>> {
    let mut data = Vec::with_capacity(n * n);
    for _ in 0..n * n {
        data.push(f64::from_le_bytes(take8(r)?));
    }
    Array2::from_shape_vec((n, n), data).map_err(|e| Error::input(e.to_string()))
}

/// Reads an instance written by [`write_instance`] and checks that the stored
/// `M` equals the one rebuilt from the stored noise and spike.
pub fn read_instance<R: Read>(mut r: R) -> Result<SpikedInstance> {
    if take8(&mut r)? != DUMP_MAGIC {
        return Err(Error::input("not an instance dump (bad magic)"));
    }
    let head = take8(&mut r)?;
    let version = u32::from_le_bytes(head[..4].try_into().unwrap());
    if version != DUMP_VERSION {
        return Err(Error::input(format!("unsupported dump version {version}")));
    }
    let n = u64::from_le_bytes(take8(&mut r)?) as usize;
    let lambda = f64::from_le_bytes(take8(&mut r)?);
    if n == 0 || n > 1 << 16 {
        return Err(Error::input(format!("implausible dimension {n} in dump")));
    }
    let m = take_matrix(&mut r, n)?;
    let noise = take_matrix(&mut r, n)?;
    let mut spike = Vec::with_capacity(n);
    for _ in 0..n {
        let v = f64::from_le_bytes(take8(&mut r)?);
        spike.push(if v == 1.0 { 1 } else if v == -1.0 { -1 } else { 0 });
    }
    let spike = SpinConfiguration::new(spike)?;
    let seed = u64::from_le_bytes(take8(&mut r)?);
    let inst = with_noise(spike, noise, lambda, seed)?;
    if inst.m_matrix != m {
        return Err(Error::input("stored measurement matrix disagrees with noise + spike"));
    }
    Ok(inst)
}
