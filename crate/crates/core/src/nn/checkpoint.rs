//! Binary checkpoint format.
//!
//! A single network is stored as
//!
//! | bytes | content |
//! |-------|---------|
//! | 8     | magic `AARISNN\0` |
//! | 4     | format version, `u32` little endian |
//! | 4     | number of layer widths `n`, `u32` LE |
//! | 8·n   | layer widths, `u64` LE |
//! | 8·p   | parameters, `f64` LE, in [`Mlp::params`] order |
//!
//! A bundle (used for agent and meta checkpoints) is the magic `AARISBD\0`,
//! the version, a length-prefixed UTF-8 metadata string (JSON by
//! convention), a `u32` entry count and then, per entry, a length-prefixed
//! name followed by one network blob as above.

use std::io::{Read, Write};

use super::mlp::{param_count, Mlp};
use crate::error::{Error, Result};

pub const NET_MAGIC: &[u8; 8] = b"AARISNN\0";
pub const BUNDLE_MAGIC: &[u8; 8] = b"AARISBD\0";
pub const FORMAT_VERSION: u32 = 1;

const MAX_LAYERS: usize = 1 << 10;
const MAX_STRING: usize = 1 << 24;

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_header<R: Read>(r: &mut R, magic: &[u8; 8]) -> Result<()> {
    let mut m = [0u8; 8];
    r.read_exact(&mut m)?;
    if &m != magic {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let v = read_u32(r)?;
    if v != FORMAT_VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {v}, expected {FORMAT_VERSION}")));
    }
    Ok(())
}

fn write_string<W: Write>(w: &mut W, s: &str) -> Result<()> {
    w.write_all(&(s.len() as u32).to_le_bytes())?;
    w.write_all(s.as_bytes())?;
    Ok(())
}

fn read_string<R: Read>(r: &mut R) -> Result<String> {
    let n = read_u32(r)? as usize;
    if n > MAX_STRING {
        return Err(Error::Checkpoint(format!("string of {n} bytes is too long")));
    }
    let mut buf = vec![0u8; n];
    r.read_exact(&mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Checkpoint(e.to_string()))
}

pub fn write_mlp<W: Write>(w: &mut W, net: &Mlp) -> Result<()> {
    w.write_all(NET_MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&(net.dims().len() as u32).to_le_bytes())?;
    for &d in net.dims() {
        w.write_all(&(d as u64).to_le_bytes())?;
    }
    for p in net.params() {
        w.write_all(&p.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_mlp<R: Read>(r: &mut R) -> Result<Mlp> {
    read_header(r, NET_MAGIC)?;
    let n = read_u32(r)? as usize;
    if !(2..=MAX_LAYERS).contains(&n) {
        return Err(Error::Checkpoint(format!("implausible layer count {n}")));
    }
    let dims = (0..n).map(|_| read_u64(r).map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
    let count = param_count(&dims);
    let mut params = Vec::with_capacity(count);
    let mut b = [0u8; 8];
    for _ in 0..count {
        r.read_exact(&mut b)?;
        params.push(f64::from_le_bytes(b));
    }
    Mlp::from_params(&dims, params)
}

pub fn mlp_to_bytes(net: &Mlp) -> Vec<u8> {
    let mut buf = Vec::new();
    write_mlp(&mut buf, net).expect("writing to a Vec cannot fail");
    buf
}

pub fn mlp_from_bytes(bytes: &[u8]) -> Result<Mlp> {
    let mut r = bytes;
    let net = read_mlp(&mut r)?;
    if !r.is_empty() {
        return Err(Error::Checkpoint(format!("{} trailing bytes", r.len())));
    }
    Ok(net)
}

/// Named networks plus free-form metadata.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Bundle {
    pub metadata: String,
    pub nets: Vec<(String, Mlp)>,
}

impl Bundle {
    pub fn get(&self, name: &str) -> Option<&Mlp> {
        self.nets.iter().find(|(n, _)| n == name).map(|(_, m)| m)
    }

    pub fn require(&self, name: &str) -> Result<&Mlp> {
        self.get(name).ok_or_else(|| Error::Checkpoint(format!("missing network `{name}`")))
    }

    pub fn write<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(BUNDLE_MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        write_string(w, &self.metadata)?;
        w.write_all(&(self.nets.len() as u32).to_le_bytes())?;
        for (name, net) in &self.nets {
            write_string(w, name)?;
            write_mlp(w, net)?;
        }
        Ok(())
    }

    pub fn read<R: Read>(r: &mut R) -> Result<Self> {
        read_header(r, BUNDLE_MAGIC)?;
        let metadata = read_string(r)?;
        let n = read_u32(r)? as usize;
        let mut nets = Vec::new();
        for _ in 0..n {
            let name = read_string(r)?;
            nets.push((name, read_mlp(r)?));
        }
        Ok(Self { metadata, nets })
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write(&mut f)?;
        f.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
        Self::read(&mut f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trip_is_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net = Mlp::new(&[3, 5, 2], &mut rng).unwrap();
        let bytes = mlp_to_bytes(&net);
        assert_eq!(&bytes[..8], NET_MAGIC);
        assert_eq!(bytes.len(), 8 + 4 + 4 + 3 * 8 + net.num_params() * 8);
        assert_eq!(mlp_from_bytes(&bytes).unwrap(), net);
    }

    #[test]
    fn corrupt_blobs_are_rejected() {
        let net = Mlp::zeros(&[2, 2]).unwrap();
        let mut bytes = mlp_to_bytes(&net);
        assert!(mlp_from_bytes(&bytes[..bytes.len() - 1]).is_err());
        bytes[8] = 99;
        assert!(matches!(mlp_from_bytes(&bytes), Err(Error::Checkpoint(_))));
        bytes[0] = b'X';
        assert!(mlp_from_bytes(&bytes).is_err());
    }

    #[test]
    fn bundle_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let b = Bundle {
            metadata: r#"{"tasks":2}"#.into(),
            nets: vec![
                ("actor".into(), Mlp::new(&[4, 3, 2], &mut rng).unwrap()),
                ("critic".into(), Mlp::new(&[6, 1], &mut rng).unwrap()),
            ],
        };
        let mut buf = Vec::new();
        b.write(&mut buf).unwrap();
        let back = Bundle::read(&mut buf.as_slice()).unwrap();
        assert_eq!(back, b);
        assert!(back.require("critic").is_ok());
        assert!(back.require("missing").is_err());
    }
}
