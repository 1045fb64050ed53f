//! Index persistence: a small versioned binary format.
//!
//! Layout: magic `FFIX`, u32 version, u32 dim, u32 founder count, u32 idea
//! count, u64 payload length, 32-byte SHA-256 of the payload, then the
//! payload itself — length-prefixed records with vectors stored as
//! little-endian f32. Loading verifies magic, version, checksum, and every
//! categorical field, so a corrupt or truncated file never produces a
//! half-valid index.

use std::io::{Read, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

use super::{EmbeddedFounder, EmbeddedIdea, IndexError, SimilarityIndex};
use crate::embed::EmbeddingVector;
use crate::records::{FounderProfile, FounderRecord, IdeaRecord, Outcome};

const MAGIC: &[u8; 4] = b"FFIX";
const VERSION: u32 = 1;

pub fn save_index(index: &SimilarityIndex, path: &Path) -> Result<(), IndexError> {
    let io_err = |e: std::io::Error| IndexError::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    };
    let payload = encode_payload(index);
    let digest = Sha256::digest(&payload);
    let mut file = std::io::BufWriter::new(std::fs::File::create(path).map_err(io_err)?);
    file.write_all(MAGIC).map_err(io_err)?;
    file.write_all(&VERSION.to_le_bytes()).map_err(io_err)?;
    file.write_all(&(index.dim() as u32).to_le_bytes())
        .map_err(io_err)?;
    file.write_all(&(index.founders().len() as u32).to_le_bytes())
        .map_err(io_err)?;
    file.write_all(&(index.ideas().len() as u32).to_le_bytes())
        .map_err(io_err)?;
    file.write_all(&(payload.len() as u64).to_le_bytes())
        .map_err(io_err)?;
    file.write_all(&digest).map_err(io_err)?;
    file.write_all(&payload).map_err(io_err)?;
    file.flush().map_err(io_err)
}

/// Loads an index. When `expected_dim` is given, a file with any other
/// dimension is rejected up front.
pub fn load_index(path: &Path, expected_dim: Option<usize>) -> Result<SimilarityIndex, IndexError> {
    let display = path.display().to_string();
    let io_err = |e: std::io::Error| IndexError::Io {
        path: display.clone(),
        reason: e.to_string(),
    };
    let corrupt = |reason: &str| IndexError::CorruptFile {
        path: display.clone(),
        reason: reason.to_string(),
    };
    let mut file = std::io::BufReader::new(std::fs::File::open(path).map_err(io_err)?);

    let mut magic = [0u8; 4];
    file.read_exact(&mut magic)
        .map_err(|_| corrupt("file shorter than header"))?;
    if &magic != MAGIC {
        return Err(corrupt("bad magic bytes"));
    }
    let version = read_u32(&mut file).map_err(|_| corrupt("file shorter than header"))?;
    if version != VERSION {
        return Err(IndexError::VersionMismatch {
            found: version,
            supported: VERSION,
        });
    }
    let dim = read_u32(&mut file).map_err(|_| corrupt("file shorter than header"))? as usize;
    if dim == 0 {
        return Err(corrupt("zero dimension"));
    }
    if let Some(expected) = expected_dim {
        if expected != dim {
            return Err(IndexError::DimensionMismatch {
                left: expected,
                right: dim,
                index_dim: dim,
            });
        }
    }
    let n_founders = read_u32(&mut file).map_err(|_| corrupt("file shorter than header"))?;
    let n_ideas = read_u32(&mut file).map_err(|_| corrupt("file shorter than header"))?;
    let payload_len = {
        let mut buf = [0u8; 8];
        file.read_exact(&mut buf)
            .map_err(|_| corrupt("file shorter than header"))?;
        u64::from_le_bytes(buf)
    };
    let mut stored_digest = [0u8; 32];
    file.read_exact(&mut stored_digest)
        .map_err(|_| corrupt("file shorter than header"))?;
    let mut payload = Vec::new();
    file.read_to_end(&mut payload).map_err(io_err)?;
    if payload.len() as u64 != payload_len {
        return Err(corrupt("payload length does not match header (truncated?)"));
    }
    if Sha256::digest(&payload).as_slice() != stored_digest {
        return Err(corrupt("payload checksum mismatch"));
    }

    let mut cursor = Cursor {
        data: &payload,
        pos: 0,
    };
    let mut index = SimilarityIndex::new(dim);
    for _ in 0..n_founders {
        let founder = decode_founder(&mut cursor, dim).map_err(|r| corrupt(&r))?;
        founder
            .record
            .profile
            .validate()
            .map_err(|r| corrupt(&format!("invalid founder record: {r}")))?;
        index.add_founder(founder)?;
    }
    for _ in 0..n_ideas {
        let idea = decode_idea(&mut cursor, dim).map_err(|r| corrupt(&r))?;
        index.add_idea(idea)?;
    }
    if cursor.pos != payload.len() {
        return Err(corrupt("trailing bytes after last record"));
    }
    Ok(index)
}

fn encode_payload(index: &SimilarityIndex) -> Vec<u8> {
    let mut out = Vec::new();
    for f in index.founders() {
        encode_string(&mut out, &f.record.profile.id);
        encode_string(&mut out, &f.record.profile.description);
        out.push(f.record.profile.highest_degree);
        out.push(f.record.profile.top_institution as u8);
        out.push(f.record.profile.majors.len() as u8);
        out.extend(f.record.profile.majors.iter());
        encode_string(&mut out, &f.record.profile.prior_jobs);
        out.push(encode_outcome(f.record.outcome));
        encode_vector(&mut out, &f.desc_vec);
        encode_vector(&mut out, &f.jobs_vec);
    }
    for i in index.ideas() {
        encode_string(&mut out, &i.record.id);
        encode_string(&mut out, &i.record.description);
        out.push(encode_outcome(i.record.outcome));
        encode_vector(&mut out, &i.desc_vec);
    }
    out
}

fn encode_string(out: &mut Vec<u8>, s: &str) {
    out.extend((s.len() as u32).to_le_bytes());
    out.extend(s.as_bytes());
}

fn encode_vector(out: &mut Vec<u8>, v: &EmbeddingVector) {
    for x in v.values() {
        out.extend(x.to_le_bytes());
    }
}

fn encode_outcome(outcome: Outcome) -> u8 {
    match outcome {
        Outcome::Success => 1,
        Outcome::Failure => 0,
    }
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], String> {
        if self.pos + n > self.data.len() {
            return Err("record extends past end of payload".into());
        }
        let slice = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u8(&mut self) -> Result<u8, String> {
        Ok(self.take(1)?[0])
    }

    fn string(&mut self) -> Result<String, String> {
        let len = u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize;
        let bytes = self.take(len)?;
        String::from_utf8(bytes.to_vec()).map_err(|_| "string is not UTF-8".into())
    }

    fn vector(&mut self, dim: usize) -> Result<EmbeddingVector, String> {
        let bytes = self.take(dim * 4)?;
        let values = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        EmbeddingVector::new(values).map_err(|e| e.to_string())
    }
}

fn decode_outcome(byte: u8) -> Result<Outcome, String> {
    match byte {
        1 => Ok(Outcome::Success),
        0 => Ok(Outcome::Failure),
        other => Err(format!("invalid outcome byte {other}")),
    }
}

fn decode_founder(cursor: &mut Cursor, dim: usize) -> Result<EmbeddedFounder, String> {
    let id = cursor.string()?;
    let description = cursor.string()?;
    let highest_degree = cursor.u8()?;
    let top_institution = match cursor.u8()? {
        0 => false,
        1 => true,
        other => return Err(format!("invalid boolean byte {other}")),
    };
    let major_count = cursor.u8()? as usize;
    let majors = cursor.take(major_count)?.iter().copied().collect();
    let prior_jobs = cursor.string()?;
    let outcome = decode_outcome(cursor.u8()?)?;
    let desc_vec = cursor.vector(dim)?;
    let jobs_vec = cursor.vector(dim)?;
    Ok(EmbeddedFounder {
        record: FounderRecord {
            profile: FounderProfile {
                id,
                description,
                highest_degree,
                top_institution,
                majors,
                prior_jobs,
            },
            outcome,
        },
        desc_vec,
        jobs_vec,
    })
}

fn decode_idea(cursor: &mut Cursor, dim: usize) -> Result<EmbeddedIdea, String> {
    let id = cursor.string()?;
    let description = cursor.string()?;
    let outcome = decode_outcome(cursor.u8()?)?;
    let desc_vec = cursor.vector(dim)?;
    Ok(EmbeddedIdea {
        record: IdeaRecord {
            id,
            description,
            outcome,
        },
        desc_vec,
    })
}

fn read_u32(r: &mut impl Read) -> std::io::Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}
