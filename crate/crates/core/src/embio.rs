//! Embedding interchange files.
//!
//! Binary layout: one ASCII header line `simcal-emb v1 <d> <n> 32\n`, then `n`
//! records, each a UTF-8 id terminated by `\t` followed by `d` little-endian
//! binary32 components. The JSONL variant holds one `{"id", "vector"}` object
//! per line and round-trips binary32 values exactly.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, EmbeddingRecord};

pub const MAGIC: &str = "simcal-emb";
pub const VERSION: &str = "v1";
pub const FLOAT_WIDTH: u32 = 32;

/// A set of embeddings sharing one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    dimension: usize,
    records: Vec<EmbeddingRecord>,
}

impl EmbeddingSet {
    pub fn new(dimension: usize, records: Vec<EmbeddingRecord>) -> Result<Self> {
        if let Some(r) = records.iter().find(|r| r.dimension() != dimension) {
            return Err(Error::DimensionMismatch { expected: dimension, found: r.dimension() });
        }
        Ok(EmbeddingSet { dimension, records })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn records(&self) -> &[EmbeddingRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Id → index map. The first occurrence of a duplicated id wins.
    pub fn index(&self) -> HashMap<&str, usize> {
        let mut map = HashMap::with_capacity(self.records.len());
        for (i, r) in self.records.iter().enumerate() {
            map.entry(r.id.as_str()).or_insert(i);
        }
        map
    }

    pub fn get(&self, id: &str) -> Option<&EmbeddingRecord> {
        self.records.iter().find(|r| r.id == id)
    }

    /// Normalizes every record in place.
    pub fn normalize(&mut self) -> Result<()> {
        for r in &mut self.records {
            r.vector = geometry::normalize(&r.vector)?;
        }
        Ok(())
    }
}

pub fn write_binary<W: Write>(set: &EmbeddingSet, mut w: W) -> Result<()> {
    writeln!(w, "{MAGIC} {VERSION} {} {} {FLOAT_WIDTH}", set.dimension, set.records.len())?;
    for r in &set.records {
        if r.id.contains('\t') || r.id.contains('\n') {
            return Err(Error::Format(format!("id {:?} contains a tab or newline", r.id)));
        }
        w.write_all(r.id.as_bytes())?;
        w.write_all(b"\t")?;
        for &x in &r.vector {
            w.write_all(&(x as f32).to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_binary<R: BufRead>(mut r: R) -> Result<EmbeddingSet> {
    let mut header = String::new();
    r.read_line(&mut header)?;
    let fields: Vec<&str> = header.trim_end_matches('\n').split(' ').collect();
    let [magic, version, d, n, width] = fields[..] else {
        return Err(Error::Format(format!("malformed header {:?}", header.trim_end())));
    };
    if magic != MAGIC || version != VERSION {
        return Err(Error::Format(format!("unsupported header {magic} {version}")));
    }
    let parse = |s: &str, what: &str| {
        s.parse::<usize>().map_err(|_| Error::Format(format!("bad {what} {s:?} in header")))
    };
    let (d, n) = (parse(d, "dimension")?, parse(n, "count")?);
    if width != "32" && width != "float-width=32" {
        return Err(Error::Format(format!("unsupported float width {width:?}")));
    }
    if d == 0 {
        return Err(Error::Format("dimension must be positive".into()));
    }
    let mut records = Vec::with_capacity(n);
    let mut buf = vec![0u8; 4 * d];
    for k in 0..n {
        let mut id = Vec::new();
        r.read_until(b'\t', &mut id)?;
        if id.pop() != Some(b'\t') {
            return Err(Error::Format(format!("record {k}: truncated id")));
        }
        let id = String::from_utf8(id)
            .map_err(|_| Error::Format(format!("record {k}: id is not UTF-8")))?;
        r.read_exact(&mut buf)
            .map_err(|_| Error::Format(format!("record {k} ({id}): truncated vector")))?;
        let vector = buf
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect();
        records.push(EmbeddingRecord { id, vector });
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Format(format!("trailing bytes after {n} records")));
    }
    EmbeddingSet::new(d, records)
}

#[derive(Serialize, Deserialize)]
struct JsonRecord {
    id: String,
    vector: Vec<f32>,
}

pub fn write_jsonl<W: Write>(set: &EmbeddingSet, mut w: W) -> Result<()> {
    for r in &set.records {
        let rec = JsonRecord {
            id: r.id.clone(),
            vector: r.vector.iter().map(|&x| x as f32).collect(),
        };
        serde_json::to_writer(&mut w, &rec)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_jsonl<R: BufRead>(r: R) -> Result<EmbeddingSet> {
    let mut records = Vec::new();
    let mut dimension = None;
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: JsonRecord =
            serde_json::from_str(&line).map_err(|e| Error::parse(i + 1, e.to_string()))?;
        let d = *dimension.get_or_insert(rec.vector.len());
        if rec.vector.len() != d {
            return Err(Error::parse(
                i + 1,
                format!("dimension {} differs from {d}", rec.vector.len()),
            ));
        }
        records.push(EmbeddingRecord {
            id: rec.id,
            vector: rec.vector.into_iter().map(f64::from).collect(),
        });
    }
    let dimension = dimension.ok_or(Error::EmptyInput("embedding file"))?;
    EmbeddingSet::new(dimension, records)
}

/// Reads either format, sniffing the binary magic.
pub fn read_any<R: BufRead>(mut r: R) -> Result<EmbeddingSet> {
    let head = r.fill_buf()?;
    if head.starts_with(MAGIC.as_bytes()) {
        read_binary(r)
    } else {
        read_jsonl(r)
    }
}

pub fn load(path: &std::path::Path) -> Result<EmbeddingSet> {
    let f = std::fs::File::open(path)?;
    read_any(std::io::BufReader::new(f))
}
