//! Router model container.
//!
//! ```text
//! followcast-router
//! version 1
//! sha256 <hex digest of the payload bytes>
//! <payload: the RouterModel as one line of JSON>
//! ```
//!
//! Floats are written with round-trip precision, so a reloaded router
//! produces bit-identical probabilities.

use std::fs;
use std::path::Path;

use followcast_core::router::RouterModel;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const MAGIC: &str = "followcast-router";
pub const MODEL_VERSION: u32 = 1;

pub fn encode_router(model: &RouterModel) -> Result<Vec<u8>> {
    model.validate()?;
    let payload = serde_json::to_vec(model).map_err(|e| Error::format("router", e.to_string()))?;
    let digest = hex::encode(Sha256::digest(&payload));
    let mut out = format!("{MAGIC}\nversion {MODEL_VERSION}\nsha256 {digest}\n").into_bytes();
    out.extend_from_slice(&payload);
    out.push(b'\n');
    Ok(out)
}

fn split_line<'a>(bytes: &'a [u8], what: &str, source_name: &str) -> Result<(&'a str, &'a [u8])> {
    let end = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::format(source_name, format!("truncated before the {what} line ended")))?;
    let line = std::str::from_utf8(&bytes[..end]).map_err(|_| Error::format(source_name, format!("{what} line is not UTF-8")))?;
    Ok((line, &bytes[end + 1..]))
}

pub fn decode_router(bytes: &[u8], source_name: &str) -> Result<RouterModel> {
    let (magic, rest) = split_line(bytes, "magic", source_name)?;
    if magic != MAGIC {
        return Err(Error::format(source_name, "not a followcast router file"));
    }
    let (version, rest) = split_line(rest, "version", source_name)?;
    let version: u32 = version
        .strip_prefix("version ")
        .and_then(|v| v.trim().parse().ok())
        .ok_or_else(|| Error::format(source_name, format!("bad version line {version:?}")))?;
    if version != MODEL_VERSION {
        return Err(Error::format(
            source_name,
            format!("unsupported router version {version} (this build reads version {MODEL_VERSION})"),
        ));
    }
    let (digest, rest) = split_line(rest, "sha256", source_name)?;
    let digest = digest
        .strip_prefix("sha256 ")
        .ok_or_else(|| Error::format(source_name, "missing sha256 line"))?;
    let payload = rest
        .strip_suffix(b"\n")
        .ok_or_else(|| Error::format(source_name, "truncated payload"))?;
    if hex::encode(Sha256::digest(payload)) != digest {
        return Err(Error::format(source_name, "payload does not match its sha256 (file corrupt or truncated)"));
    }
    let model: RouterModel =
        serde_json::from_slice(payload).map_err(|e| Error::format(source_name, format!("bad payload: {e}")))?;
    model.validate().map_err(|e| Error::format(source_name, e.to_string()))?;
    Ok(model)
}

pub fn save_router(path: &Path, model: &RouterModel) -> Result<()> {
    fs::write(path, encode_router(model)?).map_err(|e| Error::io(path, e))
}

pub fn load_router(path: &Path) -> Result<RouterModel> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_router(&bytes, &path.display().to_string())
}
