//! Per-token contextual vectors: the binary store written by the exporter,
//! and a deterministic stand-in used for tests and toy runs.
//!
//! File layout (little-endian): magic `DDUT`, `u32` version (1), `u32` dim,
//! then repeated document blocks of `u16` byte length + UTF-8 doc id,
//! `u32` token count and `token_count * dim` `f32` values, row-major.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::corpus::Document;
use crate::error::{Error, Result};

pub const EMBEDDING_MAGIC: &[u8; 4] = b"DDUT";
pub const EMBEDDING_VERSION: u32 = 1;

/// Dense row-major `f32` matrix, one row per token.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f32>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f32>) -> Self {
        assert_eq!(
            rows * cols,
            data.len(),
            "matrix shape does not match data length"
        );
        Matrix { rows, cols, data }
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
}

/// Source of token vectors. Model code only sees this trait.
pub trait EmbeddingProvider: Sync {
    fn dim(&self) -> usize;

    /// One row per token of `doc`, ordered by (utterance, token offset).
    fn embed(&self, doc: &Document) -> Result<Matrix>;
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingStore {
    dim: usize,
    docs: BTreeMap<String, Matrix>,
}

impl EmbeddingStore {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "embedding dim must be positive");
        EmbeddingStore {
            dim,
            docs: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, doc_id: impl Into<String>, matrix: Matrix) -> Result<()> {
        let doc_id = doc_id.into();
        if matrix.cols != self.dim {
            return Err(Error::DimMismatch {
                model: self.dim,
                provided: matrix.cols,
            });
        }
        if matrix.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation(doc_id, "non-finite embedding value"));
        }
        if self.docs.contains_key(&doc_id) {
            return Err(Error::validation(doc_id, "duplicate embedding block"));
        }
        self.docs.insert(doc_id, matrix);
        Ok(())
    }

    pub fn get(&self, doc_id: &str) -> Option<&Matrix> {
        self.docs.get(doc_id)
    }

    pub fn doc_ids(&self) -> impl Iterator<Item = &str> {
        self.docs.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(EMBEDDING_MAGIC);
        out.extend_from_slice(&EMBEDDING_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        for (id, m) in &self.docs {
            out.extend_from_slice(&(id.len() as u16).to_le_bytes());
            out.extend_from_slice(id.as_bytes());
            out.extend_from_slice(&(m.rows as u32).to_le_bytes());
            for v in &m.data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let err = |offset: usize, message: String| Error::EmbeddingFormat {
            offset: offset as u64,
            message,
        };
        let mut r = ByteReader::new(bytes);
        let magic = r.take(4).map_err(|o| err(o, "truncated header".into()))?;
        if magic != EMBEDDING_MAGIC {
            return Err(err(0, format!("bad magic {magic:?}")));
        }
        let version = r.u32().map_err(|o| err(o, "truncated header".into()))?;
        if version != EMBEDDING_VERSION {
            return Err(err(4, format!("unsupported version {version}")));
        }
        let dim = r.u32().map_err(|o| err(o, "truncated header".into()))? as usize;
        if dim == 0 {
            return Err(err(8, "dim must be positive".into()));
        }
        let mut store = EmbeddingStore::new(dim);
        while !r.at_end() {
            let block_start = r.pos;
            let id_len = r
                .u16()
                .map_err(|o| err(o, "truncated doc id length".into()))?
                as usize;
            let id = r
                .take(id_len)
                .map_err(|o| err(o, "truncated doc id".into()))?;
            let id = std::str::from_utf8(id)
                .map_err(|_| err(block_start + 2, "doc id is not UTF-8".into()))?
                .to_string();
            let rows = r
                .u32()
                .map_err(|o| err(o, format!("truncated token count for {id}")))?
                as usize;
            let mut data = Vec::with_capacity(rows * dim);
            for _ in 0..rows * dim {
                let v = r
                    .f32()
                    .map_err(|o| err(o, format!("truncated payload for {id}")))?;
                data.push(v);
            }
            if store.docs.contains_key(&id) {
                return Err(err(block_start, format!("duplicate doc_id {id}")));
            }
            store
                .insert(id, Matrix::new(rows, dim, data))
                .map_err(|e| err(block_start, e.to_string()))?;
        }
        Ok(store)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        EmbeddingStore::from_bytes(&bytes)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }
}

impl EmbeddingProvider for EmbeddingStore {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, doc: &Document) -> Result<Matrix> {
        let m = self
            .docs
            .get(&doc.doc_id)
            .ok_or_else(|| Error::MissingEmbeddings(doc.doc_id.clone()))?;
        if m.rows != doc.token_count() {
            return Err(Error::validation(
                &doc.doc_id,
                format!(
                    "embedding has {} rows but document has {} tokens",
                    m.rows,
                    doc.token_count()
                ),
            ));
        }
        Ok(m.clone())
    }
}

/// Little-endian cursor; errors carry the offset where reading failed.
pub(crate) struct ByteReader<'a> {
    bytes: &'a [u8],
    pub pos: usize,
}

impl<'a> ByteReader<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        ByteReader { bytes, pos: 0 }
    }

    pub fn at_end(&self) -> bool {
        self.pos >= self.bytes.len()
    }

    pub fn take(&mut self, n: usize) -> std::result::Result<&'a [u8], usize> {
        if self.bytes.len() - self.pos < n {
            return Err(self.pos);
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub fn u8(&mut self) -> std::result::Result<u8, usize> {
        Ok(self.take(1)?[0])
    }

    pub fn u16(&mut self) -> std::result::Result<u16, usize> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    pub fn u32(&mut self) -> std::result::Result<u32, usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn f32(&mut self) -> std::result::Result<f32, usize> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

/// Hash-mixed token identity plus a sinusoidal position signal, in [-1, 1].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DeterministicEmbeddings {
    pub dim: usize,
    pub seed: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(*b)).wrapping_mul(0x0100_0000_01b3)
    })
}

impl DeterministicEmbeddings {
    pub fn new(dim: usize, seed: u64) -> Self {
        assert!(dim >= 1, "embedding dim must be at least 1");
        DeterministicEmbeddings { dim, seed }
    }

    /// Token-identity component for coordinate `j`, in [-1, 1].
    pub fn token_component(&self, text: &str, j: usize) -> f64 {
        let h = splitmix64(
            fnv1a(text.as_bytes())
                ^ splitmix64(self.seed)
                ^ (j as u64).wrapping_mul(0x2545_f491_4f6c_dd1d),
        );
        (h >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    }

    /// Position component for coordinate `j`, in [-1, 1].
    pub fn position_component(&self, position: usize, j: usize) -> f64 {
        let freq = 1.0 / 10_000f64.powf((2 * (j / 2)) as f64 / self.dim as f64);
        let angle = position as f64 * freq;
        if j.is_multiple_of(2) {
            angle.sin()
        } else {
            angle.cos()
        }
    }

    pub fn row(&self, text: &str, position: usize) -> Vec<f32> {
        (0..self.dim)
            .map(|j| {
                (0.5 * self.token_component(text, j) + 0.5 * self.position_component(position, j))
                    as f32
            })
            .collect()
    }

    /// Materializes a store for a set of documents.
    pub fn store_for<'a>(
        &self,
        docs: impl IntoIterator<Item = &'a Document>,
    ) -> Result<EmbeddingStore> {
        let mut store = EmbeddingStore::new(self.dim);
        for doc in docs {
            store.insert(doc.doc_id.clone(), self.embed(doc)?)?;
        }
        Ok(store)
    }
}

impl EmbeddingProvider for DeterministicEmbeddings {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, doc: &Document) -> Result<Matrix> {
        let mut data = Vec::with_capacity(doc.token_count() * self.dim);
        let mut position = 0;
        for u in &doc.utterances {
            for t in &u.tokens {
                data.extend(self.row(&t.text, position));
                position += 1;
            }
        }
        Ok(Matrix::new(position, self.dim, data))
    }
}
