//! Versioned binary weight files.
//!
//! Layout: 8-byte magic, `u32` format version, `u32` header length, a JSON
//! header (architecture, its SHA-256, dimensions), a `u64` parameter count,
//! then the parameters in declaration order as little-endian `f64`.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::network::{Architecture, Network};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"GNASWGT\0";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    spec_hash: String,
    input_len: usize,
    output_len: usize,
    param_count: usize,
    stage_params: Vec<usize>,
    architecture: Architecture,
}

pub fn architecture_hash(arch: &Architecture) -> String {
    let json = serde_json::to_vec(arch).expect("architecture serializes");
    hex(&Sha256::digest(&json))
}

/// SHA-256 over the little-endian parameter bytes.
pub fn params_fingerprint(params: &[f64]) -> String {
    let mut h = Sha256::new();
    for p in params {
        h.update(p.to_le_bytes());
    }
    hex(&h.finalize())
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn write_weights<W: Write>(net: &Network, mut out: W) -> Result<()> {
    let arch = net.architecture();
    let header = Header {
        spec_hash: architecture_hash(arch),
        input_len: net.input_len(),
        output_len: net.output_len(),
        param_count: net.param_count(),
        stage_params: arch.stages.iter().map(|s| s.param_count()).collect(),
        architecture: arch.clone(),
    };
    let json = serde_json::to_vec(&header)?;
    out.write_all(MAGIC)?;
    out.write_all(&FORMAT_VERSION.to_le_bytes())?;
    out.write_all(&(json.len() as u32).to_le_bytes())?;
    out.write_all(&json)?;
    out.write_all(&(net.param_count() as u64).to_le_bytes())?;
    for p in net.params() {
        out.write_all(&p.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_weights<R: Read>(mut input: R) -> Result<Network> {
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("not a weight file (bad magic)".into()));
    }
    let mut word = [0u8; 4];
    input.read_exact(&mut word)?;
    let version = u32::from_le_bytes(word);
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported weight file version {version}")));
    }
    input.read_exact(&mut word)?;
    let mut json = vec![0u8; u32::from_le_bytes(word) as usize];
    input.read_exact(&mut json)?;
    let header: Header = serde_json::from_slice(&json)?;
    if architecture_hash(&header.architecture) != header.spec_hash {
        return Err(Error::Format("architecture hash mismatch".into()));
    }
    let arch = Architecture::new(header.architecture.input_len, header.architecture.stages)?;
    let mut count = [0u8; 8];
    input.read_exact(&mut count)?;
    let count = u64::from_le_bytes(count) as usize;
    if count != header.param_count || count != arch.param_count() {
        return Err(Error::Format(format!(
            "parameter count {count} disagrees with architecture ({})",
            arch.param_count()
        )));
    }
    let mut params = Vec::with_capacity(count);
    let mut buf = [0u8; 8];
    for _ in 0..count {
        input.read_exact(&mut buf)?;
        params.push(f64::from_le_bytes(buf));
    }
    Network::from_params(arch, params)
}

pub fn save_weights(net: &Network, path: &Path) -> Result<()> {
    let mut bytes = Vec::new();
    write_weights(net, &mut bytes)?;
    std::fs::write(path, bytes)?;
    Ok(())
}

pub fn load_weights(path: &Path) -> Result<Network> {
    let bytes = std::fs::read(path)?;
    read_weights(bytes.as_slice())
}
