//! Binary model persistence.
//!
//! Layout, all integers and floats little-endian:
//!
//! | field                | encoding                                  |
//! |----------------------|-------------------------------------------|
//! | magic                | `COINMLP1` (8 bytes)                      |
//! | version              | u32, currently 1                          |
//! | normalized features  | u8, 0 or 1                                |
//! | size count `L`       | u32, input plus every layer               |
//! | sizes                | `L` × u32                                 |
//! | per layer            | weights (row-major f64) then biases (f64) |
//! | denomination table   | 14 × u8 rupee values, class order         |

use std::path::Path;

use crate::classifier::{denomination_of, ClassLabel, Layer, MlpModel, NUM_CLASSES};
use crate::{Error, Result};

pub const MAGIC: &[u8; 8] = b"COINMLP1";
pub const VERSION: u32 = 1;

/// A trained model plus the feature scaling it was trained with.
#[derive(Debug, Clone, PartialEq)]
pub struct SavedModel {
    pub model: MlpModel,
    pub normalized: bool,
}

pub fn encode(saved: &SavedModel) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(saved.normalized as u8);
    let sizes = saved.model.layer_sizes();
    out.extend_from_slice(&(sizes.len() as u32).to_le_bytes());
    for s in &sizes {
        out.extend_from_slice(&(*s as u32).to_le_bytes());
    }
    for layer in saved.model.layers() {
        for p in layer.weights.iter().chain(&layer.biases) {
            out.extend_from_slice(&p.to_le_bytes());
        }
    }
    out.extend(ClassLabel::all().map(|c| denomination_of(c).value()));
    out
}

struct Reader<'a> {
    data: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.data.len() < n {
            return Err(Error::BadModelFile("unexpected end of file".into()));
        }
        let (head, tail) = self.data.split_at(n);
        self.data = tail;
        Ok(head)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let bytes = self.take(n.checked_mul(8).ok_or_else(|| Error::BadModelFile("size overflow".into()))?)?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

pub fn decode(data: &[u8]) -> Result<SavedModel> {
    let mut r = Reader { data };
    if r.take(8).ok() != Some(MAGIC.as_slice()) {
        return Err(Error::BadModelFile("bad magic".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::BadModelFile(format!("unsupported version {version}")));
    }
    let normalized = match r.take(1)?[0] {
        0 => false,
        1 => true,
        other => return Err(Error::BadModelFile(format!("bad normalization flag {other}"))),
    };
    let count = r.u32()? as usize;
    if !(3..=64).contains(&count) {
        return Err(Error::BadModelFile(format!("implausible layer count {count}")));
    }
    let sizes = (0..count)
        .map(|_| r.u32().map(|s| s as usize))
        .collect::<Result<Vec<_>>>()?;
    let mut layers = Vec::with_capacity(count - 1);
    for pair in sizes.windows(2) {
        let (fan_in, fan_out) = (pair[0], pair[1]);
        let n = fan_in
            .checked_mul(fan_out)
            .ok_or_else(|| Error::BadModelFile("size overflow".into()))?;
        let weights = r.f64s(n)?;
        let biases = r.f64s(fan_out)?;
        layers.push(Layer {
            fan_in,
            fan_out,
            weights,
            biases,
        });
    }
    let table = r.take(NUM_CLASSES)?;
    for (c, &v) in ClassLabel::all().zip(table) {
        if denomination_of(c).value() != v {
            return Err(Error::BadModelFile(format!("class {c} maps to unknown denomination {v}")));
        }
    }
    if !r.data.is_empty() {
        return Err(Error::BadModelFile(format!("{} trailing bytes", r.data.len())));
    }
    let model = MlpModel::from_layers(layers).map_err(|e| Error::BadModelFile(e.to_string()))?;
    Ok(SavedModel { model, normalized })
}

pub fn save(saved: &SavedModel, path: &Path) -> Result<()> {
    std::fs::write(path, encode(saved))?;
    Ok(())
}

pub fn load(path: &Path) -> Result<SavedModel> {
    let data = std::fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::BadModelFile(format!("{} not found", path.display())),
        _ => Error::Io(e),
    })?;
    decode(&data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::init_model;

    fn saved() -> SavedModel {
        SavedModel {
            model: init_model(&[400, 25, 14], 3).unwrap(),
            normalized: true,
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let s = saved();
        let bytes = encode(&s);
        assert_eq!(&bytes[..8], b"COINMLP1");
        assert_eq!(bytes.len(), 8 + 4 + 1 + 4 + 3 * 4 + (400 * 25 + 25 + 25 * 14 + 14) * 8 + 14);
        assert_eq!(decode(&bytes).unwrap(), s);
    }

    #[test]
    fn rejects_damage() {
        let bytes = encode(&saved());
        let mut bad_magic = bytes.clone();
        bad_magic[0] = b'X';
        assert!(matches!(decode(&bad_magic), Err(Error::BadModelFile(_))));
        assert!(decode(&bytes[..bytes.len() - 1]).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(decode(&extra).is_err());
        let mut bad_table = bytes.clone();
        let last = bad_table.len() - 1;
        bad_table[last] = 5;
        assert!(decode(&bad_table).is_err());
        let mut bad_version = bytes;
        bad_version[8] = 2;
        assert!(decode(&bad_version).is_err());
    }
}
