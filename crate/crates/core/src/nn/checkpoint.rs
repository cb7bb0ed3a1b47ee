//! Versioned binary checkpoint container.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "LMOE"                  magic
//! u32                     format version
//! u8                      payload kind
//! u32 n, u32 x n          integer metadata
//! u32 n, (u32 len, utf8)  names
//! u32 n, (u32 k, u32 x k) MLP layer widths, one block per network
//! u64 n, f64 x n          parameters, network by network, layer order
//! u64 n, f64 x n          auxiliary reals (normalization statistics)
//! ```

use std::io::{Read, Write};

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"LMOE";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub kind: u8,
    pub meta: Vec<u32>,
    pub names: Vec<String>,
    pub shapes: Vec<Vec<usize>>,
    pub params: Vec<f64>,
    pub aux: Vec<f64>,
}

fn put_u32(out: &mut Vec<u8>, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| Error::Checkpoint(format!("{v} does not fit in u32")))?;
    out.extend_from_slice(&v.to_le_bytes());
    Ok(())
}

fn put_reals(out: &mut Vec<u8>, xs: &[f64]) {
    out.extend_from_slice(&(xs.len() as u64).to_le_bytes());
    for x in xs {
        out.extend_from_slice(&x.to_le_bytes());
    }
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::with_capacity(64 + 8 * (self.params.len() + self.aux.len()));
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.push(self.kind);
        put_u32(&mut out, self.meta.len())?;
        for &m in &self.meta {
            out.extend_from_slice(&m.to_le_bytes());
        }
        put_u32(&mut out, self.names.len())?;
        for name in &self.names {
            put_u32(&mut out, name.len())?;
            out.extend_from_slice(name.as_bytes());
        }
        put_u32(&mut out, self.shapes.len())?;
        for dims in &self.shapes {
            put_u32(&mut out, dims.len())?;
            for &d in dims {
                put_u32(&mut out, d)?;
            }
        }
        put_reals(&mut out, &self.params);
        put_reals(&mut out, &self.aux);
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Checkpoint> {
        let mut cur = Cursor { bytes, pos: 0 };
        if cur.take(4)? != MAGIC {
            return Err(Error::Checkpoint("missing LMOE magic".into()));
        }
        let version = cur.u32()?;
        if version != FORMAT_VERSION {
            return Err(Error::Checkpoint(format!("unsupported format version {version}")));
        }
        let kind = cur.take(1)?[0];
        let n_meta = cur.u32()? as usize;
        let meta = (0..n_meta).map(|_| cur.u32()).collect::<Result<_>>()?;
        let n_names = cur.u32()? as usize;
        let mut names = Vec::with_capacity(n_names.min(1024));
        for _ in 0..n_names {
            let len = cur.u32()? as usize;
            let raw = cur.take(len)?;
            names.push(String::from_utf8(raw.to_vec()).map_err(|_| Error::Checkpoint("name is not utf-8".into()))?);
        }
        let n_shapes = cur.u32()? as usize;
        let mut shapes = Vec::with_capacity(n_shapes.min(64));
        for _ in 0..n_shapes {
            let k = cur.u32()? as usize;
            shapes.push((0..k).map(|_| cur.u32().map(|d| d as usize)).collect::<Result<_>>()?);
        }
        let params = cur.reals()?;
        let aux = cur.reals()?;
        if cur.pos != bytes.len() {
            return Err(Error::Checkpoint(format!("{} trailing bytes", bytes.len() - cur.pos)));
        }
        Ok(Checkpoint {
            kind,
            meta,
            names,
            shapes,
            params,
            aux,
        })
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&self.to_bytes()?)
            .map_err(|e| Error::Checkpoint(e.to_string()))
    }

    pub fn read<R: Read>(mut r: R) -> Result<Checkpoint> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)
            .map_err(|e| Error::Checkpoint(e.to_string()))?;
        Checkpoint::from_bytes(&bytes)
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Checkpoint("truncated checkpoint".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn reals(&mut self) -> Result<Vec<f64>> {
        let n = u64::from_le_bytes(self.take(8)?.try_into().unwrap()) as usize;
        let raw = self.take(
            n.checked_mul(8)
                .ok_or_else(|| Error::Checkpoint("parameter count overflows".into()))?,
        )?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Checkpoint {
        Checkpoint {
            kind: 1,
            meta: vec![0, 3],
            names: vec!["cn".into(), "ncn".into(), "mlp".into()],
            shapes: vec![vec![8, 16, 16], vec![32, 3]],
            params: vec![0.5, -1.25, f64::MIN_POSITIVE, 3.0e10],
            aux: vec![1.0, 2.0],
        }
    }

    #[test]
    fn header_layout() {
        let bytes = sample().to_bytes().unwrap();
        assert_eq!(&bytes[..4], b"LMOE");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
        assert_eq!(bytes[8], 1);
        let tail = &bytes[bytes.len() - 16..];
        assert_eq!(f64::from_le_bytes(tail[..8].try_into().unwrap()), 1.0);
        assert_eq!(f64::from_le_bytes(tail[8..].try_into().unwrap()), 2.0);
    }

    #[test]
    fn decode_inverts_encode() {
        let ck = sample();
        assert_eq!(Checkpoint::from_bytes(&ck.to_bytes().unwrap()).unwrap(), ck);
    }

    #[test]
    fn rejects_corruption() {
        let bytes = sample().to_bytes().unwrap();
        assert!(Checkpoint::from_bytes(&bytes[..bytes.len() - 3]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(Checkpoint::from_bytes(&bad).is_err());
        let mut bad = bytes.clone();
        bad[4] = 9;
        assert!(Checkpoint::from_bytes(&bad).is_err());
        let mut long = bytes;
        long.push(0);
        assert!(Checkpoint::from_bytes(&long).is_err());
    }
}
