//! Precomputed contextual vectors in the CTXV container.
//!
//! Layout (little-endian):
//!
//! ```text
//! magic "CTXV" | version u32 = 1 | L u32 | D u32 | sentence_count u64
//! per sentence: key_len u32 | key (UTF-8) | forms_checksum u64 | N u32 | f32[N*L*D]
//! ```
//!
//! Values are ordered token, then layer, then dimension. Keys are the
//! 0-based decimal index of the sentence in its CoNLL-U file and the
//! checksum is FNV-1a 64 over the token forms joined by byte 0x01.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use ndarray::{Array3, ArrayView3};

use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"CTXV";
const VERSION: u32 = 1;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv_update(hash: u64, bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(hash, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

/// FNV-1a 64 of a byte string.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    fnv_update(FNV_OFFSET, bytes)
}

/// FNV-1a 64 of the forms joined by 0x01.
pub fn forms_checksum<'a>(forms: impl IntoIterator<Item = &'a str>) -> u64 {
    let mut hash = FNV_OFFSET;
    for (i, form) in forms.into_iter().enumerate() {
        if i > 0 {
            hash = fnv_update(hash, &[0x01]);
        }
        hash = fnv_update(hash, form.as_bytes());
    }
    hash
}

#[derive(Clone, Debug, PartialEq)]
struct Entry {
    checksum: u64,
    tensor: Array3<f32>,
}

/// Per-sentence `N × L × D` tensors keyed by sentence index.
#[derive(Clone, Debug, PartialEq)]
pub struct ContextualStore {
    layers: usize,
    dim: usize,
    keys: Vec<String>,
    entries: HashMap<String, Entry>,
}

impl ContextualStore {
    pub fn new(layers: usize, dim: usize) -> Self {
        ContextualStore {
            layers,
            dim,
            keys: Vec::new(),
            entries: HashMap::new(),
        }
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    /// Keys in insertion (file) order.
    pub fn keys(&self) -> &[String] {
        &self.keys
    }

    /// Add or replace the tensor for `key`; its checksum is taken from `forms`.
    pub fn insert<'a>(
        &mut self,
        key: impl Into<String>,
        forms: impl IntoIterator<Item = &'a str>,
        tensor: Array3<f32>,
    ) -> Result<()> {
        let (_, l, d) = tensor.dim();
        if l != self.layers || d != self.dim {
            return Err(Error::Dimension {
                op: "contextual tensor",
                expected: self.layers * self.dim,
                found: l * d,
            });
        }
        let key = key.into();
        let entry = Entry {
            checksum: forms_checksum(forms),
            tensor: tensor.as_standard_layout().into_owned(),
        };
        if self.entries.insert(key.clone(), entry).is_none() {
            self.keys.push(key);
        }
        Ok(())
    }

    /// Tensor for `key`, after checking that it was produced for `forms`.
    pub fn query<'a>(&self, key: &str, forms: impl IntoIterator<Item = &'a str>) -> Result<ArrayView3<'_, f32>> {
        let entry = self
            .entries
            .get(key)
            .ok_or_else(|| Error::MissingKey(key.to_owned()))?;
        let forms: Vec<&str> = forms.into_iter().collect();
        if entry.checksum != forms_checksum(forms.iter().copied()) || entry.tensor.dim().0 != forms.len() {
            return Err(Error::Checksum { key: key.to_owned() });
        }
        Ok(entry.tensor.view())
    }

    /// Tensor for `key` without any alignment check.
    pub fn get(&self, key: &str) -> Option<ArrayView3<'_, f32>> {
        self.entries.get(key).map(|e| e.tensor.view())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.layers as u32).to_le_bytes());
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        out.extend_from_slice(&(self.keys.len() as u64).to_le_bytes());
        for key in &self.keys {
            let entry = &self.entries[key];
            out.extend_from_slice(&(key.len() as u32).to_le_bytes());
            out.extend_from_slice(key.as_bytes());
            out.extend_from_slice(&entry.checksum.to_le_bytes());
            out.extend_from_slice(&(entry.tensor.dim().0 as u32).to_le_bytes());
            for v in entry.tensor.iter() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(container("bad magic"));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(container(format!("unsupported version {version}")));
        }
        let layers = r.u32()? as usize;
        let dim = r.u32()? as usize;
        let count = r.u64()?;
        let mut store = ContextualStore::new(layers, dim);
        for _ in 0..count {
            let key_len = r.u32()? as usize;
            let key = std::str::from_utf8(r.take(key_len)?)
                .map_err(|_| container("key is not UTF-8"))?
                .to_owned();
            let checksum = r.u64()?;
            let n = r.u32()? as usize;
            let raw = r.take(n * layers * dim * 4)?;
            let data = raw
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().expect("chunk of 4")))
                .collect();
            let tensor = Array3::from_shape_vec((n, layers, dim), data).expect("length computed from shape");
            if store.entries.insert(key.clone(), Entry { checksum, tensor }).is_some() {
                return Err(container(format!("duplicate key {key:?}")));
            }
            store.keys.push(key);
        }
        if r.pos != bytes.len() {
            return Err(container("trailing bytes after last sentence"));
        }
        Ok(store)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }
}

pub fn load_contextual_store(path: impl AsRef<Path>) -> Result<ContextualStore> {
    ContextualStore::from_bytes(&fs::read(path)?)
}

fn container(message: impl Into<String>) -> Error {
    Error::Container {
        kind: "CTXV",
        message: message.into(),
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| container("truncated"))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ContextualStore {
        let mut store = ContextualStore::new(3, 4);
        let tensor = Array3::from_shape_fn((2, 3, 4), |(t, l, d)| (t * 100 + l * 10 + d) as f32 + 0.5);
        store.insert("0", ["a", "b"], tensor).unwrap();
        store
    }

    #[test]
    fn round_trip_is_bit_identical() {
        let store = sample();
        let bytes = store.to_bytes();
        let back = ContextualStore::from_bytes(&bytes).unwrap();
        assert_eq!(back, store);
        let t = back.query("0", ["a", "b"]).unwrap();
        assert_eq!(t.len(), 24);
        assert_eq!(t[[1, 2, 3]], 123.5);
        assert_eq!(back.to_bytes(), bytes);
    }

    #[test]
    fn missing_key_and_misalignment() {
        let store = sample();
        assert!(matches!(store.query("1", ["a", "b"]), Err(Error::MissingKey(_))));
        assert!(matches!(store.query("0", ["a", "c"]), Err(Error::Checksum { .. })));
    }

    #[test]
    fn bad_containers() {
        let bytes = sample().to_bytes();
        assert!(ContextualStore::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(ContextualStore::from_bytes(&bad).is_err());
        let mut bad = bytes;
        bad[4] = 2;
        assert!(ContextualStore::from_bytes(&bad).is_err());
    }

    #[test]
    fn checksum_separates_tokens() {
        assert_ne!(forms_checksum(["ab", "c"]), forms_checksum(["a", "bc"]));
        assert_eq!(forms_checksum([""]), 0xcbf2_9ce4_8422_2325);
    }
}
