//! Binary chain archive.
//!
//! ```text
//! magic    8 bytes  "FGMCHAIN"
//! version  u32 LE
//! hlen     u64 LE   length of the JSON header
//! header   hlen bytes
//! payload  f64 LE   packed samples, then the scalar trace
//! sha256   32 bytes over everything above
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::posterior::{Chain, ChainMeta};

pub const MAGIC: &[u8; 8] = b"FGMCHAIN";
pub const VERSION: u32 = 1;
const DIGEST_LEN: usize = 32;

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    p: usize,
    m: usize,
    n: usize,
    samples: usize,
    packed_len: usize,
    trace_name: String,
    meta: ChainMeta,
}

pub fn encode_chain(chain: &Chain) -> Vec<u8> {
    let header = Header {
        p: chain.p(),
        m: chain.m(),
        n: chain.n(),
        samples: chain.len(),
        packed_len: crate::posterior::packed_len(chain.dim()),
        trace_name: chain.trace_name().to_string(),
        meta: chain.meta().clone(),
    };
    let json = serde_json::to_vec(&header).expect("header serializes");
    let mut out = Vec::with_capacity(20 + json.len() + 8 * (chain.raw_samples().len() + chain.len()) + DIGEST_LEN);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    for v in chain.raw_samples().iter().chain(chain.trace()) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest);
    out
}

pub fn decode_chain(bytes: &[u8]) -> Result<Chain> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(Error::Archive("not a chain archive (bad magic)".into()));
    }
    let version_bytes = bytes
        .get(8..12)
        .ok_or_else(|| Error::Checksum("archive truncated before the version field".into()))?;
    let found = u32::from_le_bytes(version_bytes.try_into().expect("4 bytes"));
    if found != VERSION {
        return Err(Error::ArchiveVersion { found, expected: VERSION });
    }
    if bytes.len() < 20 + DIGEST_LEN {
        return Err(Error::Checksum("archive truncated".into()));
    }
    let (body, digest) = bytes.split_at(bytes.len() - DIGEST_LEN);
    if Sha256::digest(body).as_slice() != digest {
        return Err(Error::Checksum("digest does not match contents (truncated or corrupted)".into()));
    }

    let hlen = u64::from_le_bytes(body[12..20].try_into().expect("8 bytes")) as usize;
    let json = body
        .get(20..20usize.saturating_add(hlen))
        .ok_or_else(|| Error::Archive("header length exceeds archive".into()))?;
    let header: Header = serde_json::from_slice(json).map_err(|e| Error::Archive(format!("header: {e}")))?;
    let payload = &body[20 + hlen..];
    let expected = header
        .samples
        .checked_mul(header.packed_len + 1)
        .and_then(|v| v.checked_mul(8))
        .ok_or_else(|| Error::Archive("header sizes overflow".into()))?;
    if payload.len() != expected {
        return Err(Error::Archive(format!(
            "payload holds {} bytes, header implies {expected}",
            payload.len()
        )));
    }
    let mut values: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    let trace = values.split_off(header.samples * header.packed_len);
    Chain::from_parts(header.p, header.m, header.n, header.trace_name, header.meta, values, trace)
}

pub fn save_chain(chain: &Chain, path: &Path) -> Result<()> {
    std::fs::write(path, encode_chain(chain)).map_err(|e| Error::io(path, e))
}

pub fn load_chain(path: &Path) -> Result<Chain> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_chain(&bytes)
}
