//! Binary layout (little-endian): magic `WSIX`, `u32` version, `u64` n,
//! `u64` d, n length-prefixed UTF-8 ids, then the `n × d` single-precision
//! rows.

use std::path::Path;

use super::RetrievalIndex;
use crate::binio::{read_file, ByteReader, ByteWriter};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"WSIX";
const VERSION: u32 = 1;

fn encode(index: &RetrievalIndex) -> ByteWriter {
    let mut w = ByteWriter::new(MAGIC, VERSION);
    w.len(index.len());
    w.len(index.dim());
    for id in index.ids() {
        w.str(id);
    }
    w.f32s(index.raw_rows());
    w
}

pub fn write_index(index: &RetrievalIndex) -> Vec<u8> {
    encode(index).into_bytes()
}

pub fn save_index(index: &RetrievalIndex, path: impl AsRef<Path>) -> Result<()> {
    encode(index).write_to(path.as_ref())
}

pub fn load_index(path: impl AsRef<Path>) -> Result<RetrievalIndex> {
    read_index(&read_file(path.as_ref())?)
}

pub fn read_index(bytes: &[u8]) -> Result<RetrievalIndex> {
    let mut r = ByteReader::open(bytes, MAGIC, VERSION)?;
    let n = r.len()?;
    let d = r.len()?;
    let mut ids = Vec::with_capacity(n.min(1 << 20));
    for _ in 0..n {
        ids.push(r.str()?);
    }
    let rows = r.f32s()?;
    r.finish()?;
    RetrievalIndex::from_parts(ids, d, rows).map_err(|e| Error::Format(e.to_string()))
}
