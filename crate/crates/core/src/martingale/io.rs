//! Flat records for martingales: a little-endian binary form that round-trips
//! bit-exactly, and a JSON form for inspection.

use std::io::{Read, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{checked_pow, PAdicMartingale};
use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"PADM";
const VERSION: u32 = 1;

pub fn write_binary<W: Write>(m: &PAdicMartingale, mut w: W) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(m.base() as u64).to_le_bytes())?;
    w.write_all(&(m.depth() as u64).to_le_bytes())?;
    w.write_all(&m.jump_bound().to_bits().to_le_bytes())?;
    w.write_all(&[m.seed().is_some() as u8])?;
    w.write_all(&m.seed().unwrap_or(0).to_le_bytes())?;
    for z in m.levels().iter().flatten() {
        w.write_all(&z.re.to_bits().to_le_bytes())?;
        w.write_all(&z.im.to_bits().to_le_bytes())?;
    }
    Ok(())
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(u64::from_le_bytes(b))
}

fn truncated(e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::Corrupt("truncated martingale record".into())
    } else {
        Error::Io(e)
    }
}

pub fn read_binary<R: Read>(mut r: R) -> Result<PAdicMartingale> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(truncated)?;
    if &magic != MAGIC {
        return Err(Error::Corrupt("bad magic".into()));
    }
    let mut v = [0u8; 4];
    r.read_exact(&mut v).map_err(truncated)?;
    if u32::from_le_bytes(v) != VERSION {
        return Err(Error::Corrupt(format!("unsupported version {}", u32::from_le_bytes(v))));
    }
    let base = read_u64(&mut r)? as usize;
    let depth = read_u64(&mut r)? as usize;
    let jump_bound = f64::from_bits(read_u64(&mut r)?);
    let mut flag = [0u8; 1];
    r.read_exact(&mut flag).map_err(truncated)?;
    let seed_raw = read_u64(&mut r)?;
    if base < 2 || depth > 64 {
        return Err(Error::Corrupt(format!("implausible header p={base} depth={depth}")));
    }
    let mut levels = Vec::with_capacity(depth + 1);
    for k in 0..=depth {
        let len = checked_pow(base, k).map_err(|_| Error::Corrupt("level too large".into()))?;
        let mut lv = Vec::with_capacity(len);
        for _ in 0..len {
            let re = f64::from_bits(read_u64(&mut r)?);
            let im = f64::from_bits(read_u64(&mut r)?);
            lv.push(Complex64::new(re, im));
        }
        levels.push(lv);
    }
    let seed = (flag[0] != 0).then_some(seed_raw);
    let m = PAdicMartingale::from_levels_unchecked(base, levels, jump_bound, seed);
    m.check_averaging(1e-10)
        .map_err(|e| Error::Corrupt(format!("record violates averaging: {e}")))?;
    Ok(m)
}

/// JSON form: header plus level-major `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MartingaleRecord {
    pub base: usize,
    pub depth: usize,
    pub jump_bound: f64,
    pub seed: Option<u64>,
    pub levels: Vec<Vec<[f64; 2]>>,
}

impl From<&PAdicMartingale> for MartingaleRecord {
    fn from(m: &PAdicMartingale) -> Self {
        Self {
            base: m.base(),
            depth: m.depth(),
            jump_bound: m.jump_bound(),
            seed: m.seed(),
            levels: m
                .levels()
                .iter()
                .map(|lv| lv.iter().map(|z| [z.re, z.im]).collect())
                .collect(),
        }
    }
}

impl TryFrom<MartingaleRecord> for PAdicMartingale {
    type Error = Error;
    fn try_from(r: MartingaleRecord) -> Result<Self> {
        if r.levels.len() != r.depth + 1 {
            return Err(Error::ShapeMismatch(format!(
                "{} levels for depth {}",
                r.levels.len(),
                r.depth
            )));
        }
        let levels = r
            .levels
            .into_iter()
            .map(|lv| lv.into_iter().map(|[a, b]| Complex64::new(a, b)).collect())
            .collect();
        Ok(PAdicMartingale::from_levels(r.base, levels, r.jump_bound)?.with_seed(r.seed))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::martingale::{random_martingale, JumpLaw};

    #[test]
    fn binary_round_trip_is_bit_exact() {
        let m = random_martingale(17, 3, 6, &JumpLaw::UniformComplex { radius: 0.8 }).unwrap();
        let mut buf = Vec::new();
        write_binary(&m, &mut buf).unwrap();
        let back = read_binary(buf.as_slice()).unwrap();
        assert_eq!(back.seed(), Some(17));
        assert_eq!(back.jump_bound().to_bits(), m.jump_bound().to_bits());
        for (a, b) in m.levels().iter().flatten().zip(back.levels().iter().flatten()) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
        let mut again = Vec::new();
        write_binary(&back, &mut again).unwrap();
        assert_eq!(buf, again);
    }

    #[test]
    fn truncated_and_garbled_records_are_corrupt() {
        let m = random_martingale(1, 2, 4, &JumpLaw::Rademacher).unwrap();
        let mut buf = Vec::new();
        write_binary(&m, &mut buf).unwrap();
        assert!(matches!(read_binary(&buf[..buf.len() - 3]), Err(Error::Corrupt(_))));
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(read_binary(bad.as_slice()), Err(Error::Corrupt(_))));
        let mut broken = buf;
        let n = broken.len();
        broken[n - 9] ^= 0x40;
        assert!(matches!(read_binary(broken.as_slice()), Err(Error::Corrupt(_))));
    }

    #[test]
    fn json_round_trip() {
        let m = random_martingale(2, 2, 5, &JumpLaw::UnitRoots).unwrap();
        let text = serde_json::to_string(&MartingaleRecord::from(&m)).unwrap();
        let rec: MartingaleRecord = serde_json::from_str(&text).unwrap();
        let back = PAdicMartingale::try_from(rec).unwrap();
        assert_eq!(back.levels(), m.levels());
        assert_eq!(back.seed(), m.seed());
    }
}
