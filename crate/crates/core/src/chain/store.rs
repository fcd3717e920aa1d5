//! Chain file persistence.
//!
//! Layout (all integers big-endian):
//!
//! ```text
//! header : magic "ALBKCHN\0" (8 bytes) | version u8 = 1 | genesis block hash (32 bytes)
//! record : length u32 | encoded block (length bytes)      -- repeated, genesis first
//! block  : height u64 | prev_hash 32 | timestamp u64 | tx count u32
//!          | (length u32 | encoded tx) * count | block_hash 32
//! tx     : tx_id 32 | sender 20 | public_key 32 | operation u8 | value u128
//!          | payload (length u32 | bytes) | sequence u64 | signature 64
//! ```
//!
//! Records are appended one per sealed block and synced before the append
//! returns, so a file that was not mid-write always loads.

use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use super::{Block, Chain, ChainError};
use crate::codec::Decoder;
use crate::primitives::Digest;

pub const MAGIC: &[u8; 8] = b"ALBKCHN\0";
pub const FORMAT_VERSION: u8 = 1;
const HEADER_LEN: usize = 8 + 1 + 32;

pub fn encode_header(genesis_hash: &Digest) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN);
    out.extend_from_slice(MAGIC);
    out.push(FORMAT_VERSION);
    out.extend_from_slice(genesis_hash.as_bytes());
    out
}

pub fn encode_record(block: &Block) -> Vec<u8> {
    let body = block.encode();
    let mut out = Vec::with_capacity(4 + body.len());
    out.extend_from_slice(&(body.len() as u32).to_be_bytes());
    out.extend_from_slice(&body);
    out
}

/// Full file image of `chain`.
pub fn encode_file(chain: &Chain) -> Vec<u8> {
    let mut out = encode_header(&chain.genesis_hash());
    for block in chain.blocks() {
        out.extend_from_slice(&encode_record(block));
    }
    out
}

/// Parses and re-verifies a chain file image.
pub fn decode_file(bytes: &[u8]) -> Result<Chain, ChainError> {
    let corrupt = |msg: String| ChainError::CorruptFile(msg);
    let mut dec = Decoder::new(bytes);
    let magic: [u8; 8] = dec.array().map_err(|e| corrupt(e.to_string()))?;
    if &magic != MAGIC {
        return Err(corrupt("bad magic".into()));
    }
    let version = dec.u8().map_err(|e| corrupt(e.to_string()))?;
    if version != FORMAT_VERSION {
        return Err(corrupt(format!("unsupported format version {version}")));
    }
    let genesis_hash = Digest(dec.array().map_err(|e| corrupt(e.to_string()))?);
    let mut blocks = Vec::new();
    while dec.remaining() > 0 {
        let body = dec.bytes().map_err(|e| corrupt(format!("record {}: {e}", blocks.len())))?;
        let block = Block::decode(body).map_err(|e| corrupt(format!("block {}: {e}", blocks.len())))?;
        blocks.push(block);
    }
    match blocks.first() {
        None => return Err(corrupt("no genesis block".into())),
        Some(g) if g.block_hash != genesis_hash => {
            return Err(corrupt("header genesis hash does not match genesis block".into()))
        }
        Some(_) => {}
    }
    Chain::from_blocks(blocks)
}

/// Writes the whole chain, replacing `path` atomically.
pub fn save(chain: &Chain, path: &Path) -> Result<(), ChainError> {
    let tmp = path.with_extension("tmp");
    {
        let mut file = File::create(&tmp)?;
        file.write_all(&encode_file(chain))?;
        file.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load(path: &Path) -> Result<Chain, ChainError> {
    decode_file(&fs::read(path)?)
}

/// An append-mode handle on a chain file.
#[derive(Debug)]
pub struct ChainStore {
    path: PathBuf,
    file: File,
}

impl ChainStore {
    /// Opens `path`, loading and verifying it if present, or creating it
    /// with a fresh genesis chain.
    pub fn open(path: &Path) -> Result<(Self, Chain), ChainError> {
        let chain = match fs::read(path) {
            Ok(bytes) => decode_file(&bytes)?,
            Err(e) if e.kind() == io::ErrorKind::NotFound => {
                let chain = Chain::genesis();
                if let Some(parent) = path.parent() {
                    if !parent.as_os_str().is_empty() {
                        fs::create_dir_all(parent)?;
                    }
                }
                save(&chain, path)?;
                chain
            }
            Err(e) => return Err(e.into()),
        };
        let file = OpenOptions::new().append(true).open(path)?;
        Ok((
            ChainStore {
                path: path.to_path_buf(),
                file,
            },
            chain,
        ))
    }

    pub fn append(&mut self, block: &Block) -> Result<(), ChainError> {
        self.file.write_all(&encode_record(block))?;
        self.file.sync_data()?;
        Ok(())
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn flush(&mut self) -> Result<(), ChainError> {
        self.file.sync_all()?;
        Ok(())
    }
}
