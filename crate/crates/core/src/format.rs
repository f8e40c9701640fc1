//! Sketch file container: magic (4 bytes) | format version (u16 LE) |
//! header length (u32 LE) | header JSON | payload.
//!
//! The header carries the full config, the oracle version and a 64-bit hash
//! of the canonical config JSON.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::randomness::ORACLE_VERSION;

pub const FORMAT_VERSION: u16 = 1;

pub(crate) const TOWER_MAGIC: [u8; 4] = *b"LVTW";
pub(crate) const KILLED_MAGIC: [u8; 4] = *b"LVKT";
pub(crate) const STABLE_MAGIC: [u8; 4] = *b"LVST";

const PREAMBLE: usize = 4 + 2 + 4;

#[derive(Serialize, Deserialize)]
struct Header<C> {
    config: C,
    oracle_version: u16,
    config_hash: String,
}

/// First 8 bytes (big-endian) of the SHA-256 of the canonical config JSON.
pub(crate) fn config_hash<C: Serialize>(config: &C) -> u64 {
    let json = serde_json::to_vec(config).expect("config serializes");
    let digest = Sha256::digest(&json);
    u64::from_be_bytes(digest[..8].try_into().unwrap())
}

pub(crate) fn encode<C: Serialize>(magic: [u8; 4], config: &C, payload: &[u8]) -> Vec<u8> {
    let header = Header {
        config,
        oracle_version: ORACLE_VERSION,
        config_hash: format!("{:016x}", config_hash(config)),
    };
    let header = serde_json::to_vec(&header).expect("header serializes");
    let mut out = Vec::with_capacity(PREAMBLE + header.len() + payload.len());
    out.extend_from_slice(&magic);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(&header);
    out.extend_from_slice(payload);
    out
}

pub(crate) fn peek_magic(bytes: &[u8]) -> Result<[u8; 4]> {
    bytes
        .get(..4)
        .map(|m| m.try_into().unwrap())
        .ok_or_else(|| Error::Format("file shorter than the magic".into()))
}

/// Splits a container into its verified config and raw payload.
pub(crate) fn decode<C: DeserializeOwned + Serialize>(bytes: &[u8], magic: [u8; 4]) -> Result<(C, &[u8])> {
    if bytes.len() < PREAMBLE {
        return Err(Error::Format("truncated preamble".into()));
    }
    if bytes[..4] != magic {
        return Err(Error::Format(format!(
            "bad magic {:?}, expected {:?}",
            String::from_utf8_lossy(&bytes[..4]),
            String::from_utf8_lossy(&magic)
        )));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported format version {version}")));
    }
    let len = u32::from_le_bytes(bytes[6..10].try_into().unwrap()) as usize;
    let header_bytes = bytes
        .get(PREAMBLE..PREAMBLE + len)
        .ok_or_else(|| Error::Format("truncated header".into()))?;
    let header: Header<C> = serde_json::from_slice(header_bytes)?;
    if header.oracle_version != ORACLE_VERSION {
        return Err(Error::Format(format!(
            "sketch was built with oracle version {}, this build uses {ORACLE_VERSION}",
            header.oracle_version
        )));
    }
    let stored = u64::from_str_radix(&header.config_hash, 16)
        .map_err(|_| Error::Format(format!("malformed config hash {:?}", header.config_hash)))?;
    let computed = config_hash(&header.config);
    if stored != computed {
        return Err(Error::ConfigHashMismatch { stored, computed });
    }
    Ok((header.config, &bytes[PREAMBLE + len..]))
}

pub(crate) fn f64s_to_bytes(xs: &[f64]) -> Vec<u8> {
    xs.iter().flat_map(|x| x.to_le_bytes()).collect()
}

pub(crate) fn bytes_to_f64s(bytes: &[u8], expected: usize) -> Result<Vec<f64>> {
    if bytes.len() != expected * 8 {
        return Err(Error::Format(format!("payload has {} bytes, expected {}", bytes.len(), expected * 8)));
    }
    Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
}
