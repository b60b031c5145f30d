//! Binary time-tag file format ("PTT1", version 1).
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic            4 bytes  "PTT1"
//! version          u16      currently 1
//! channel_count    u16      currently always 3
//! duration_ps      u64
//! rng_seed         u64
//! algo_len         u16      length of the RNG algorithm name
//! algo             algo_len bytes, UTF-8
//! collapsed        u64      duplicate timestamps collapsed during simulation
//! channel headers  channel_count × (u8 channel id, u64 event count)
//! bodies           per channel, count × u64 timestamps in picoseconds
//! ```
//!
//! Timestamps must be strictly increasing within each channel and smaller
//! than `duration_ps`; the reader re-validates this, so a successful read
//! always yields well-formed [`DetectionStream`]s. Writing the same
//! streams twice produces byte-identical files.

use std::fs;
use std::io::Write;
use std::path::Path;

use thiserror::Error;

use crate::sim::{DetectionStream, SimOutput};

/// File magic for time-tag files.
pub const MAGIC: [u8; 4] = *b"PTT1";
/// Format version written by this crate.
pub const VERSION: u16 = 1;

/// Errors from reading or writing tag files.
#[derive(Debug, Error)]
pub enum TagFileError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a time-tag file (bad magic)")]
    BadMagic,
    #[error("unsupported version {0}")]
    UnsupportedVersion(u16),
    #[error("expected 3 channels, file has {0}")]
    BadChannelCount(u16),
    #[error("malformed file: {0}")]
    Malformed(String),
}

/// Acquisition-level metadata stored in the header.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TagMeta {
    pub duration_ps: u64,
    pub rng_seed: u64,
    pub rng_algorithm: String,
    /// Total duplicate timestamps collapsed across all channels.
    pub collapsed: u64,
}

/// A parsed tag file: header metadata plus the three validated streams.
#[derive(Debug, Clone, PartialEq)]
pub struct TagFileContents {
    pub meta: TagMeta,
    pub streams: [DetectionStream; 3],
}

/// Serialize three streams and their metadata into tag-file bytes.
pub fn to_bytes(streams: &[DetectionStream; 3], meta: &TagMeta) -> Result<Vec<u8>, TagFileError> {
    let algo = meta.rng_algorithm.as_bytes();
    if algo.len() > u16::MAX as usize {
        return Err(TagFileError::Malformed(
            "RNG algorithm name too long".into(),
        ));
    }
    for s in streams {
        if s.duration_ps() != meta.duration_ps {
            return Err(TagFileError::Malformed(format!(
                "stream duration {} ps does not match header {} ps",
                s.duration_ps(),
                meta.duration_ps
            )));
        }
    }
    let body_len: usize = streams.iter().map(|s| s.len() * 8).sum();
    let mut out = Vec::with_capacity(4 + 2 + 2 + 8 + 8 + 2 + algo.len() + 8 + 3 * 9 + body_len);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&3u16.to_le_bytes());
    out.extend_from_slice(&meta.duration_ps.to_le_bytes());
    out.extend_from_slice(&meta.rng_seed.to_le_bytes());
    out.extend_from_slice(&(algo.len() as u16).to_le_bytes());
    out.extend_from_slice(algo);
    out.extend_from_slice(&meta.collapsed.to_le_bytes());
    for s in streams {
        out.push(s.channel());
        out.extend_from_slice(&(s.len() as u64).to_le_bytes());
    }
    for s in streams {
        for &t in s.timestamps() {
            out.extend_from_slice(&t.to_le_bytes());
        }
    }
    Ok(out)
}

/// Write three streams and their metadata to a tag file.
pub fn write_streams<P: AsRef<Path>>(
    path: P,
    streams: &[DetectionStream; 3],
    meta: &TagMeta,
) -> Result<(), TagFileError> {
    let bytes = to_bytes(streams, meta)?;
    let mut file = fs::File::create(path)?;
    file.write_all(&bytes)?;
    Ok(())
}

/// Write a simulation result to a tag file, filling the metadata from it.
pub fn write_sim_output<P: AsRef<Path>>(path: P, output: &SimOutput) -> Result<(), TagFileError> {
    let meta = TagMeta {
        duration_ps: output.streams[0].duration_ps(),
        rng_seed: output.rng_seed,
        rng_algorithm: output.rng_algorithm.to_string(),
        collapsed: output.total_collapsed(),
    };
    write_streams(path, &output.streams, &meta)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], TagFileError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| TagFileError::Malformed("file truncated".into()))?;
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn u8(&mut self) -> Result<u8, TagFileError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, TagFileError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, TagFileError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }
}

/// Parse tag-file bytes, validating every stream invariant.
pub fn from_bytes(bytes: &[u8]) -> Result<TagFileContents, TagFileError> {
    let mut cur = Cursor { bytes, pos: 0 };
    if cur.take(4)? != MAGIC {
        return Err(TagFileError::BadMagic);
    }
    let version = cur.u16()?;
    if version != VERSION {
        return Err(TagFileError::UnsupportedVersion(version));
    }
    let channel_count = cur.u16()?;
    if channel_count != 3 {
        return Err(TagFileError::BadChannelCount(channel_count));
    }
    let duration_ps = cur.u64()?;
    let rng_seed = cur.u64()?;
    let algo_len = cur.u16()? as usize;
    let algo = std::str::from_utf8(cur.take(algo_len)?)
        .map_err(|_| TagFileError::Malformed("RNG algorithm name is not UTF-8".into()))?
        .to_owned();
    let collapsed = cur.u64()?;
    let mut headers = Vec::with_capacity(3);
    for _ in 0..3 {
        let channel = cur.u8()?;
        let count = cur.u64()?;
        headers.push((channel, count));
    }
    let total: u64 = headers.iter().map(|&(_, c)| c).sum();
    let body_bytes = total
        .checked_mul(8)
        .ok_or_else(|| TagFileError::Malformed("event count overflow".into()))?;
    if body_bytes != cur.remaining() as u64 {
        return Err(TagFileError::Malformed(format!(
            "body length mismatch: header promises {total} events, {} bytes remain",
            cur.remaining()
        )));
    }
    let mut streams = Vec::with_capacity(3);
    for (i, &(channel, count)) in headers.iter().enumerate() {
        if channel != i as u8 + 1 {
            return Err(TagFileError::Malformed(format!(
                "expected channel {} header, found {channel}",
                i + 1
            )));
        }
        let raw = cur.take(count as usize * 8)?;
        let tags: Vec<u64> = raw
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let stream = DetectionStream::new(channel, duration_ps, tags)
            .map_err(|e| TagFileError::Malformed(format!("channel {channel}: {e}")))?;
        streams.push(stream);
    }
    let streams: [DetectionStream; 3] = streams.try_into().expect("exactly three streams");
    Ok(TagFileContents {
        meta: TagMeta {
            duration_ps,
            rng_seed,
            rng_algorithm: algo,
            collapsed,
        },
        streams,
    })
}

/// Read and validate a tag file.
pub fn read_streams<P: AsRef<Path>>(path: P) -> Result<TagFileContents, TagFileError> {
    let bytes = fs::read(path)?;
    from_bytes(&bytes)
}
