//! Binary field snapshots.
//!
//! Little-endian layout: magic `DIRT3SPN`, `u32` version (1), `u32` K,
//! `3 × u32` grid dims, `f64` m, `f64` a, `f64` eps, then every coefficient
//! as an `(re, im)` pair of `f64` in (mode, component) order.

use std::io::{Read, Write};

use num_complex::Complex64;

use super::{SpinorField, SpinorSpace};
use crate::clifford::Spinor4;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"DIRT3SPN";
pub const VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SnapshotHeader {
    pub k: u32,
    pub grid: [u32; 3],
    pub mass: f64,
    pub frequency: f64,
    pub eps: f64,
}

impl SnapshotHeader {
    pub fn for_space(space: &SpinorSpace, frequency: f64, eps: f64) -> Self {
        SnapshotHeader {
            k: space.lattice().k as u32,
            grid: space.grid().map(|n| n as u32),
            mass: space.mass(),
            frequency,
            eps,
        }
    }

    pub fn mode_count(&self) -> usize {
        (2 * self.k as usize + 1).pow(3)
    }
}

pub fn write_snapshot(w: &mut impl Write, header: &SnapshotHeader, field: &SpinorField) -> Result<()> {
    if field.len() != header.mode_count() {
        return Err(Error::DimensionMismatch {
            expected: header.mode_count(),
            found: field.len(),
        });
    }
    let mut buf = Vec::with_capacity(56 + field.len() * 64);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&header.k.to_le_bytes());
    for n in header.grid {
        buf.extend_from_slice(&n.to_le_bytes());
    }
    for x in [header.mass, header.frequency, header.eps] {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    for c in &field.coeffs {
        for z in c.0 {
            buf.extend_from_slice(&z.re.to_le_bytes());
            buf.extend_from_slice(&z.im.to_le_bytes());
        }
    }
    w.write_all(&buf)?;
    Ok(())
}

fn take<const N: usize>(bytes: &[u8], pos: &mut usize) -> Result<[u8; N]> {
    let end = *pos + N;
    let out = bytes
        .get(*pos..end)
        .ok_or_else(|| Error::Snapshot(format!("truncated at byte {}", *pos)))?
        .try_into()
        .expect("slice has length N");
    *pos = end;
    Ok(out)
}

pub fn read_snapshot(r: &mut impl Read) -> Result<(SnapshotHeader, SpinorField)> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let mut pos = 0;
    if &take::<8>(&bytes, &mut pos)? != MAGIC {
        return Err(Error::Snapshot("bad magic".into()));
    }
    let version = u32::from_le_bytes(take(&bytes, &mut pos)?);
    if version != VERSION {
        return Err(Error::Snapshot(format!("unsupported version {version}")));
    }
    let k = u32::from_le_bytes(take(&bytes, &mut pos)?);
    let mut grid = [0u32; 3];
    for g in grid.iter_mut() {
        *g = u32::from_le_bytes(take(&bytes, &mut pos)?);
    }
    let mut reals = [0.0; 3];
    for x in reals.iter_mut() {
        *x = f64::from_le_bytes(take(&bytes, &mut pos)?);
    }
    let header = SnapshotHeader {
        k,
        grid,
        mass: reals[0],
        frequency: reals[1],
        eps: reals[2],
    };
    let n = header.mode_count();
    let expected = pos + n * 64;
    if bytes.len() != expected {
        return Err(Error::Snapshot(format!(
            "expected {expected} bytes for K = {k}, found {}",
            bytes.len()
        )));
    }
    let mut coeffs = Vec::with_capacity(n);
    for _ in 0..n {
        let mut s = Spinor4::ZERO;
        for z in s.0.iter_mut() {
            let re = f64::from_le_bytes(take(&bytes, &mut pos)?);
            let im = f64::from_le_bytes(take(&bytes, &mut pos)?);
            *z = Complex64::new(re, im);
        }
        coeffs.push(s);
    }
    Ok((header, SpinorField { coeffs }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::LatticeSpec;

    #[test]
    fn round_trip_is_bit_exact() {
        let space = SpinorSpace::new(LatticeSpec::unit(2), [6, 6, 6], 1.0).unwrap();
        let mut rng = crate::rng::stream(1, "snapshot");
        let f = space.random_field(&mut rng, 0.0);
        let h = SnapshotHeader::for_space(&space, 0.5, 0.125);
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &h, &f).unwrap();
        assert_eq!(&buf[..8], MAGIC);
        assert_eq!(buf.len(), 8 + 4 * 5 + 8 * 3 + 125 * 64);
        let (h2, g) = read_snapshot(&mut buf.as_slice()).unwrap();
        assert_eq!(h, h2);
        assert_eq!(f, g);
    }

    #[test]
    fn corrupt_input_is_rejected() {
        let mut bad = b"NOTMAGIC".to_vec();
        bad.extend_from_slice(&[0; 40]);
        assert!(read_snapshot(&mut bad.as_slice()).is_err());
        let space = SpinorSpace::new(LatticeSpec::unit(1), [3, 3, 3], 1.0).unwrap();
        let h = SnapshotHeader::for_space(&space, 0.5, 0.0);
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &h, &space.zeros()).unwrap();
        buf.pop();
        assert!(read_snapshot(&mut buf.as_slice()).is_err());
    }
}
