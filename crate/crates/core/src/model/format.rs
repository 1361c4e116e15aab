//! Single-file binary model container.
//!
//! All integers and floats are little-endian. Strings are a `u32` byte
//! length followed by UTF-8 bytes.
//!
//! ```text
//! magic        8 bytes   "NWMODEL\0"
//! version      u32       MODEL_FORMAT_VERSION
//! fingerprint  32 bytes  SHA-256 of the CONF payload
//! sections     repeated  tag (4 ASCII bytes), length (u64), payload
//! checksum     32 bytes  SHA-256 of every preceding byte
//! ```
//!
//! Sections, in write order:
//!
//! * `CONF`: family bits (u8), min_df (u64), l2_lambda (f64), syllable
//!   heuristic version (u32), standardized feature clip (f64), lexicon
//!   count (u32) and lexicons, then the
//!   five nela lexicons (negations, first, second and third person, swear)
//!   and the stopword list (u32 count, strings). A lexicon is its name, an
//!   entry count (u32) and the entries in file form.
//! * `VOCW` / `VOCC`: word and character vectorizers, only when fitted:
//!   kind code (u8), min_df (u64), fitted_on (string), term count (u64),
//!   terms.
//! * `IDFW` / `IDFC`: count (u64) and idf values (f64).
//! * `STAT`: count (u64), means (f64), standard deviations (f64).
//! * `WGHT`: bias (f64), count (u64), weights (f64).

use std::fs;
use std::io::ErrorKind;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::Model;
use crate::error::{Error, Result};
use crate::features::lexicon::Lexicon;
use crate::features::nela::NelaLexicons;
use crate::features::stylometry::SYLLABLE_HEURISTIC_VERSION;
use crate::features::tfidf::{Vectorizer, VectorizerKind};
use crate::features::STANDARDIZED_CLIP;
use crate::features::{FamilyFlags, FeatureConfig, FeaturePipeline, Standardizer};

pub const MODEL_FORMAT_VERSION: u32 = 1;

const MAGIC: &[u8; 8] = b"NWMODEL\0";
const HASH_LEN: usize = 32;
const HEADER_LEN: usize = MAGIC.len() + 4 + HASH_LEN;

#[derive(Default)]
struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn str(&mut self, s: &str) {
        self.u32(s.len() as u32);
        self.0.extend_from_slice(s.as_bytes());
    }
    fn f64s(&mut self, vs: &[f64]) {
        self.u64(vs.len() as u64);
        vs.iter().for_each(|v| self.f64(*v));
    }
    fn lexicon(&mut self, lex: &Lexicon) {
        self.str(lex.name());
        let entries = lex.entries();
        self.u32(entries.len() as u32);
        entries.iter().for_each(|e| self.str(e));
    }
    fn section(&mut self, tag: &[u8; 4], payload: &[u8]) {
        self.0.extend_from_slice(tag);
        self.u64(payload.len() as u64);
        self.0.extend_from_slice(payload);
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8], path: &'a Path) -> Self {
        Reader { buf, pos: 0, path }
    }

    fn fail<T>(&self, reason: impl Into<String>) -> Result<T> {
        Err(format_error(self.path, reason))
    }

    fn bytes(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return self.fail(format!("unexpected end of data at byte {}", self.pos));
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.bytes(1)?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes(4)?.try_into().expect("4 bytes")))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes(8)?.try_into().expect("8 bytes")))
    }
    fn len(&mut self) -> Result<usize> {
        let n = self.u64()?;
        usize::try_from(n).or_else(|_| self.fail(format!("length {n} does not fit in memory")))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.bytes(8)?.try_into().expect("8 bytes")))
    }
    fn str(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        let raw = self.bytes(n)?;
        String::from_utf8(raw.to_vec()).or_else(|_| self.fail("string is not UTF-8"))
    }
    fn f64s(&mut self) -> Result<Vec<f64>> {
        let n = self.len()?;
        if n > (self.buf.len() - self.pos) / 8 {
            return self.fail(format!("array of {n} values exceeds section size"));
        }
        (0..n).map(|_| self.f64()).collect()
    }
    fn lexicon(&mut self) -> Result<Lexicon> {
        let name = self.str()?;
        let n = self.u32()?;
        let entries: Vec<String> = (0..n).map(|_| self.str()).collect::<Result<_>>()?;
        Lexicon::new(name, entries).or_else(|e| self.fail(e.to_string()))
    }
    fn finished(&self) -> bool {
        self.pos == self.buf.len()
    }
}

fn format_error(path: &Path, reason: impl Into<String>) -> Error {
    Error::ModelFormat {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

fn config_payload(model: &Model) -> Vec<u8> {
    let pipeline = &model.pipeline;
    let mut w = Writer::default();
    w.u8(pipeline.config.flags.bits());
    w.u64(pipeline.config.min_df as u64);
    w.f64(model.l2_lambda);
    w.u32(SYLLABLE_HEURISTIC_VERSION);
    w.f64(STANDARDIZED_CLIP);
    w.u32(pipeline.lexicons.len() as u32);
    pipeline.lexicons.iter().for_each(|l| w.lexicon(l));
    let nela = &pipeline.nela;
    for lex in [
        &nela.negations,
        &nela.first_person,
        &nela.second_person,
        &nela.third_person,
        &nela.swear,
    ] {
        w.lexicon(lex);
    }
    w.u32(nela.stopwords.len() as u32);
    nela.stopwords.iter().for_each(|s| w.str(s));
    w.0
}

pub(super) fn config_fingerprint(model: &Model) -> String {
    hex::encode(Sha256::digest(config_payload(model)))
}

pub(super) fn content_fingerprint(model: &Model) -> String {
    hex::encode(Sha256::digest(encode(model)))
}

fn vocabulary_payload(v: &Vectorizer) -> (Vec<u8>, Vec<u8>) {
    let mut voc = Writer::default();
    voc.u8(v.kind().code());
    voc.u64(v.min_df() as u64);
    voc.str(v.fitted_on());
    voc.u64(v.terms().len() as u64);
    v.terms().iter().for_each(|t| voc.str(t));
    let mut idf = Writer::default();
    idf.f64s(v.idf());
    (voc.0, idf.0)
}

pub(super) fn encode(model: &Model) -> Vec<u8> {
    let conf = config_payload(model);
    let mut out = Writer::default();
    out.0.extend_from_slice(MAGIC);
    out.u32(MODEL_FORMAT_VERSION);
    out.0.extend_from_slice(&Sha256::digest(&conf));
    out.section(b"CONF", &conf);

    let pipeline = &model.pipeline;
    if let Some(v) = &pipeline.word {
        let (voc, idf) = vocabulary_payload(v);
        out.section(b"VOCW", &voc);
        out.section(b"IDFW", &idf);
    }
    if let Some(v) = &pipeline.chars {
        let (voc, idf) = vocabulary_payload(v);
        out.section(b"VOCC", &voc);
        out.section(b"IDFC", &idf);
    }
    if let Some(s) = &pipeline.standardizer {
        let mut stat = Writer::default();
        stat.u64(s.mean.len() as u64);
        s.mean.iter().for_each(|v| stat.f64(*v));
        s.std.iter().for_each(|v| stat.f64(*v));
        out.section(b"STAT", &stat.0);
    }
    let mut weights = Writer::default();
    weights.f64(model.bias);
    weights.f64s(&model.weights);
    out.section(b"WGHT", &weights.0);

    let checksum = Sha256::digest(&out.0);
    out.0.extend_from_slice(&checksum);
    out.0
}

/// Writes the model atomically: a sibling temporary file is renamed over
/// `path`.
pub fn save_model(model: &Model, path: &Path) -> Result<()> {
    let bytes = encode(model);
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(&tmp, &bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<Model> {
    let bytes = fs::read(path).map_err(|e| match e.kind() {
        ErrorKind::NotFound => Error::MissingModel(path.to_path_buf()),
        _ => Error::io(path, e),
    })?;
    decode(&bytes, path)
}

struct Sections<'a> {
    conf: Option<&'a [u8]>,
    vocw: Option<&'a [u8]>,
    idfw: Option<&'a [u8]>,
    vocc: Option<&'a [u8]>,
    idfc: Option<&'a [u8]>,
    stat: Option<&'a [u8]>,
    wght: Option<&'a [u8]>,
}

pub(super) fn decode<'a>(bytes: &'a [u8], path: &'a Path) -> Result<Model> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(format_error(path, "not a newswatch model file (bad magic)"));
    }
    if bytes.len() < HEADER_LEN + HASH_LEN {
        return Err(format_error(path, format!("file is truncated ({} bytes)", bytes.len())));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
    if version != MODEL_FORMAT_VERSION {
        return Err(format_error(
            path,
            format!("unsupported format version {version}, this build reads version {MODEL_FORMAT_VERSION}"),
        ));
    }
    let (body, checksum) = bytes.split_at(bytes.len() - HASH_LEN);
    if Sha256::digest(body).as_slice() != checksum {
        return Err(format_error(
            path,
            "checksum mismatch, the file is truncated or corrupt",
        ));
    }
    let fingerprint = &body[12..HEADER_LEN];

    let mut r = Reader::new(&body[HEADER_LEN..], path);
    let mut s = Sections {
        conf: None,
        vocw: None,
        idfw: None,
        vocc: None,
        idfc: None,
        stat: None,
        wght: None,
    };
    while !r.finished() {
        let tag: [u8; 4] = r.bytes(4)?.try_into().expect("4 bytes");
        let len = r.len()?;
        let payload = r.bytes(len)?;
        let slot = match &tag {
            b"CONF" => &mut s.conf,
            b"VOCW" => &mut s.vocw,
            b"IDFW" => &mut s.idfw,
            b"VOCC" => &mut s.vocc,
            b"IDFC" => &mut s.idfc,
            b"STAT" => &mut s.stat,
            b"WGHT" => &mut s.wght,
            other => {
                return Err(format_error(
                    path,
                    format!("unknown section {:?}", String::from_utf8_lossy(other)),
                ))
            }
        };
        if slot.replace(payload).is_some() {
            return Err(format_error(
                path,
                format!("duplicate section {:?}", String::from_utf8_lossy(&tag)),
            ));
        }
    }
    let require = |section: Option<&'a [u8]>, name: &str| {
        section.ok_or_else(|| format_error(path, format!("missing {name} section")))
    };

    let conf = require(s.conf, "CONF")?;
    if Sha256::digest(conf).as_slice() != fingerprint {
        return Err(format_error(path, "config fingerprint does not match CONF section"));
    }
    let mut c = Reader::new(conf, path);
    let flags = FamilyFlags::from_bits(c.u8()?);
    let min_df = c.len()?;
    let l2_lambda = c.f64()?;
    let syllable_version = c.u32()?;
    if syllable_version != SYLLABLE_HEURISTIC_VERSION {
        return Err(format_error(
            path,
            format!(
                "model uses syllable heuristic version {syllable_version}, this build has {SYLLABLE_HEURISTIC_VERSION}"
            ),
        ));
    }
    let clip = c.f64()?;
    if clip != STANDARDIZED_CLIP {
        return Err(format_error(
            path,
            format!("model clips standardized features at {clip}, this build at {STANDARDIZED_CLIP}"),
        ));
    }
    let n_lex = c.u32()?;
    let lexicons: Vec<Lexicon> = (0..n_lex).map(|_| c.lexicon()).collect::<Result<_>>()?;
    let negations = c.lexicon()?;
    let first_person = c.lexicon()?;
    let second_person = c.lexicon()?;
    let third_person = c.lexicon()?;
    let swear = c.lexicon()?;
    let n_stop = c.u32()?;
    let stopwords = (0..n_stop).map(|_| c.str()).collect::<Result<_>>()?;
    if !c.finished() {
        return Err(format_error(path, "trailing bytes in CONF section"));
    }

    let vectorizer = |voc: Option<&[u8]>, idf: Option<&[u8]>, name: &str| -> Result<Option<Vectorizer>> {
        let (voc, idf) = match (voc, idf) {
            (None, None) => return Ok(None),
            (Some(v), Some(i)) => (v, i),
            _ => return Err(format_error(path, format!("{name} vocabulary without idf values"))),
        };
        let mut v = Reader::new(voc, path);
        let code = v.u8()?;
        let kind = VectorizerKind::from_code(code)
            .ok_or_else(|| format_error(path, format!("unknown vectorizer kind {code}")))?;
        let min_df = v.len()?;
        let fitted_on = v.str()?;
        let n = v.len()?;
        let terms: Vec<String> = (0..n).map(|_| v.str()).collect::<Result<_>>()?;
        let mut i = Reader::new(idf, path);
        let idf = i.f64s()?;
        if !v.finished() || !i.finished() {
            return Err(format_error(path, format!("trailing bytes in {name} sections")));
        }
        Vectorizer::from_parts(kind, min_df, terms, idf, fitted_on)
            .map(Some)
            .map_err(|e| format_error(path, e.to_string()))
    };
    let word = vectorizer(s.vocw, s.idfw, "word")?;
    let chars = vectorizer(s.vocc, s.idfc, "character")?;

    let standardizer = match s.stat {
        None => None,
        Some(stat) => {
            let mut st = Reader::new(stat, path);
            let n = st.len()?;
            if n > stat.len() / 16 {
                return Err(format_error(path, "STAT count exceeds section size"));
            }
            let mean = (0..n).map(|_| st.f64()).collect::<Result<_>>()?;
            let std = (0..n).map(|_| st.f64()).collect::<Result<_>>()?;
            if !st.finished() {
                return Err(format_error(path, "trailing bytes in STAT section"));
            }
            Some(Standardizer { mean, std })
        }
    };

    let mut wr = Reader::new(require(s.wght, "WGHT")?, path);
    let bias = wr.f64()?;
    let weights = wr.f64s()?;
    if !wr.finished() {
        return Err(format_error(path, "trailing bytes in WGHT section"));
    }

    let pipeline = FeaturePipeline {
        config: FeatureConfig { flags, min_df },
        word,
        chars,
        lexicons,
        nela: NelaLexicons {
            negations,
            first_person,
            second_person,
            third_person,
            swear,
            stopwords,
        },
        standardizer,
    };
    Model::new(pipeline, weights, bias, l2_lambda).map_err(|e| format_error(path, e.to_string()))
}
