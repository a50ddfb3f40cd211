//! Flat binary output: `SIGRTBIN`, a little-endian `u32` header length, a
//! JSON metadata header, a `u64` value count, then little-endian `f64`s.

use std::io::{self, Write};
use std::path::Path;

use serde_json::Value;

use crate::KernelError;

pub const MAGIC: &[u8; 8] = b"SIGRTBIN";

pub fn write_values(mut w: impl Write, meta: &Value, data: &[f64]) -> io::Result<()> {
    let header = serde_json::to_vec(meta)?;
    w.write_all(MAGIC)?;
    w.write_all(&(header.len() as u32).to_le_bytes())?;
    w.write_all(&header)?;
    w.write_all(&(data.len() as u64).to_le_bytes())?;
    for v in data {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()
}

pub fn write_values_file(path: &Path, meta: &Value, data: &[f64]) -> io::Result<()> {
    let f = std::fs::File::create(path)?;
    write_values(io::BufWriter::new(f), meta, data)
}

pub fn read_values(bytes: &[u8]) -> Result<(Value, Vec<f64>), KernelError> {
    let bad = |m: &str| KernelError::Format(m.to_string());
    let rest = bytes.strip_prefix(MAGIC.as_slice()).ok_or_else(|| bad("missing magic"))?;
    let (len, rest) = rest.split_first_chunk::<4>().ok_or_else(|| bad("truncated header length"))?;
    let len = u32::from_le_bytes(*len) as usize;
    if rest.len() < len {
        return Err(bad("truncated header"));
    }
    let meta: Value = serde_json::from_slice(&rest[..len]).map_err(|e| bad(&e.to_string()))?;
    let (count, rest) = rest[len..].split_first_chunk::<8>().ok_or_else(|| bad("truncated count"))?;
    let count = u64::from_le_bytes(*count) as usize;
    if rest.len() != count * 8 {
        return Err(bad("value count does not match payload"));
    }
    let data = rest.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok((meta, data))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn round_trip() {
        let mut buf = Vec::new();
        let meta = json!({"bench": "mc", "n": 3});
        write_values(&mut buf, &meta, &[1.5, -2.0, f64::INFINITY]).unwrap();
        let (m, d) = read_values(&buf).unwrap();
        assert_eq!(m, meta);
        assert_eq!(d, vec![1.5, -2.0, f64::INFINITY]);
    }

    #[test]
    fn rejects_garbage() {
        assert!(read_values(b"nope").is_err());
        let mut buf = Vec::new();
        write_values(&mut buf, &json!({}), &[1.0]).unwrap();
        buf.pop();
        assert!(read_values(&buf).is_err());
    }
}
