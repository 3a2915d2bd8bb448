//! Versioned binary model file.
//!
//! Layout, little-endian throughout:
//!
//! ```text
//! "DDMP"  u32 version  u32 tensor-count
//! per tensor: u16 name-len, name, u8 rank, u32 dims[rank], f32 payload
//! hyperparameters: u32 count, then (u16 len, key) (u16 len, value) pairs
//! anaphor lexicon: u32 count, then (u16 len, space-joined form)
//! filter lexicon:  u32 count + strings for filling words, same for reporting verbs
//! ```
//!
//! Values are stored as `f32`; training rounds its final parameters to `f32`
//! so that writing and reading a trained model is lossless.

use std::collections::BTreeSet;
use std::path::Path;

use super::{Hyperparams, Model, ModelParams, Tensor};
use crate::candidates::AnaphorLexicon;
use crate::corpus::FilterLexicon;
use crate::embeddings::ByteReader;
use crate::error::{Error, Result};

pub const MODEL_MAGIC: &[u8; 4] = b"DDMP";
pub const MODEL_VERSION: u32 = 1;

fn put_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u16).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

fn put_strings<'a>(out: &mut Vec<u8>, items: impl ExactSizeIterator<Item = &'a str>) {
    out.extend_from_slice(&(items.len() as u32).to_le_bytes());
    for s in items {
        put_str(out, s);
    }
}

pub fn to_bytes(model: &Model) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MODEL_MAGIC);
    out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
    out.extend_from_slice(&(model.params.tensors.len() as u32).to_le_bytes());
    for t in &model.params.tensors {
        put_str(&mut out, &t.name);
        out.push(t.shape.len() as u8);
        for &d in &t.shape {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for &v in &t.data {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    let entries = model.hp.entries();
    out.extend_from_slice(&(entries.len() as u32).to_le_bytes());
    for (k, v) in &entries {
        put_str(&mut out, k);
        put_str(&mut out, v);
    }
    let forms: Vec<String> = model.anaphor_lexicon.forms().map(|f| f.join(" ")).collect();
    put_strings(&mut out, forms.iter().map(String::as_str));
    let lex = &model.filter_lexicon;
    put_strings(&mut out, lex.filling_words.iter().map(String::as_str));
    put_strings(&mut out, lex.reporting_verbs.iter().map(String::as_str));
    out
}

struct Reader<'a>(ByteReader<'a>);

impl<'a> Reader<'a> {
    fn fail(offset: usize, message: impl Into<String>) -> Error {
        Error::ModelFormat {
            offset: offset as u64,
            message: message.into(),
        }
    }

    fn truncated(offset: usize) -> Error {
        Self::fail(offset, "unexpected end of file")
    }

    fn u8(&mut self) -> Result<u8> {
        self.0.u8().map_err(Self::truncated)
    }

    fn u32(&mut self) -> Result<u32> {
        self.0.u32().map_err(Self::truncated)
    }

    fn string(&mut self) -> Result<String> {
        let at = self.0.pos;
        let n = self.0.u16().map_err(Self::truncated)?;
        let bytes = self.0.take(n as usize).map_err(Self::truncated)?;
        String::from_utf8(bytes.to_vec()).map_err(|_| Self::fail(at, "string is not UTF-8"))
    }

    fn strings(&mut self) -> Result<Vec<String>> {
        let n = self.u32()?;
        (0..n).map(|_| self.string()).collect()
    }
}

pub fn from_bytes(bytes: &[u8]) -> Result<Model> {
    let mut r = Reader(ByteReader::new(bytes));
    let magic = r.0.take(4).map_err(Reader::truncated)?;
    if magic != MODEL_MAGIC {
        return Err(Reader::fail(0, "bad magic, not a model file"));
    }
    let version = r.u32()?;
    if version != MODEL_VERSION {
        return Err(Reader::fail(4, format!("unsupported version {version}")));
    }
    let count = r.u32()?;
    let mut tensors = Vec::with_capacity(count as usize);
    let mut starts = Vec::with_capacity(count as usize);
    for _ in 0..count {
        starts.push(r.0.pos);
        let name = r.string()?;
        let rank = r.u8()?;
        let shape = (0..rank)
            .map(|_| r.u32().map(|d| d as usize))
            .collect::<Result<Vec<_>>>()?;
        let n: usize = shape.iter().product();
        let mut data = Vec::with_capacity(n);
        for _ in 0..n {
            let at = r.0.pos;
            let v = r.0.f32().map_err(Reader::truncated)?;
            if !v.is_finite() {
                return Err(Reader::fail(at, format!("non-finite value in {name}")));
            }
            data.push(v as f64);
        }
        tensors.push(Tensor { name, shape, data });
    }

    let hp_at = r.0.pos;
    let mut hp = Hyperparams::default();
    let n = r.u32()?;
    for _ in 0..n {
        let key = r.string()?;
        let value = r.string()?;
        hp.set(&key, &value)
            .map_err(|e| Reader::fail(hp_at, e.to_string()))?;
    }
    hp.validate()
        .map_err(|e| Reader::fail(hp_at, e.to_string()))?;

    let lex_at = r.0.pos;
    let forms = r.strings()?;
    let anaphor_lexicon = AnaphorLexicon::from_forms(&forms);
    if anaphor_lexicon.is_empty() {
        return Err(Reader::fail(lex_at, "empty anaphor lexicon"));
    }
    let filter_at = r.0.pos;
    let filling: BTreeSet<String> = r.strings()?.into_iter().collect();
    let reporting: BTreeSet<String> = r.strings()?.into_iter().collect();
    let filter_lexicon = FilterLexicon::new(filling, reporting)
        .map_err(|e| Reader::fail(filter_at, e.to_string()))?;
    if !r.0.at_end() {
        return Err(Reader::fail(r.0.pos, "trailing bytes"));
    }

    let (expected, layout) = ModelParams::expected_shapes(&hp);
    if expected.len() != tensors.len() {
        return Err(Reader::fail(
            8,
            format!(
                "expected {} tensors for these hyperparameters, found {}",
                expected.len(),
                tensors.len()
            ),
        ));
    }
    for ((name, shape), (t, &at)) in expected.iter().zip(tensors.iter().zip(&starts)) {
        if *name != t.name || *shape != t.shape {
            return Err(Reader::fail(
                at,
                format!(
                    "expected tensor {name} {shape:?}, found {} {:?}",
                    t.name, t.shape
                ),
            ));
        }
    }
    Ok(Model {
        hp,
        params: ModelParams { tensors, layout },
        anaphor_lexicon,
        filter_lexicon,
    })
}

pub fn save(model: &Model, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, to_bytes(model)).map_err(|e| Error::io(path, e))
}

pub fn load(path: impl AsRef<Path>) -> Result<Model> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    from_bytes(&bytes)
}
