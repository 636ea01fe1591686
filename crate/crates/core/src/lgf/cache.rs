//! Binary cache for LGF tables.
//!
//! Layout (little-endian): magic `LGF3`, version `u32`, sigma `f64`,
//! extent `u32`, 32-byte SHA-256 of the evaluation config, then the `f64`
//! entries in tetrahedral-index order.

use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::table::{canonical_count, LgfTable};
use super::LgfEvalConfig;
use crate::error::{Error, Result};

pub const CACHE_MAGIC: &[u8; 4] = b"LGF3";
pub const CACHE_VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 8 + 4 + 32;

fn config_digest(cfg: &LgfEvalConfig) -> [u8; 32] {
    let d = Sha256::digest(cfg.digest_source().as_bytes());
    let mut out = [0u8; 32];
    out.copy_from_slice(&d);
    out
}

/// File name keyed by `(σ, extent, config)`.
pub fn cache_file_name(sigma: f64, extent: usize, cfg: &LgfEvalConfig) -> String {
    let digest = config_digest(cfg);
    let short: String = digest[..6].iter().map(|b| format!("{b:02x}")).collect();
    format!("lgf_s{:016x}_e{extent}_{short}.bin", sigma.to_bits())
}

pub fn encode(table: &LgfTable, cfg: &LgfEvalConfig) -> Vec<u8> {
    let mut buf = Vec::with_capacity(HEADER_LEN + 8 * table.values().len());
    buf.extend_from_slice(CACHE_MAGIC);
    buf.extend_from_slice(&CACHE_VERSION.to_le_bytes());
    buf.extend_from_slice(&table.sigma().to_le_bytes());
    buf.extend_from_slice(&(table.extent() as u32).to_le_bytes());
    buf.extend_from_slice(&config_digest(cfg));
    for v in table.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf
}

pub fn decode(bytes: &[u8], sigma: f64, extent: usize, cfg: &LgfEvalConfig) -> Result<LgfTable> {
    let corrupt = |msg: &str| Error::Config(format!("corrupt LGF cache: {msg}"));
    if bytes.len() < HEADER_LEN {
        return Err(corrupt("truncated header"));
    }
    if &bytes[0..4] != CACHE_MAGIC {
        return Err(corrupt("bad magic"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    if u32_at(4) != CACHE_VERSION {
        return Err(corrupt("unsupported version"));
    }
    let stored_sigma = f64::from_le_bytes(bytes[8..16].try_into().unwrap());
    if stored_sigma.to_bits() != sigma.to_bits() {
        return Err(corrupt("sigma mismatch"));
    }
    if u32_at(16) as usize != extent {
        return Err(corrupt("extent mismatch"));
    }
    if bytes[20..52] != config_digest(cfg) {
        return Err(corrupt("config digest mismatch"));
    }
    let n = canonical_count(extent);
    if bytes.len() != HEADER_LEN + 8 * n {
        return Err(corrupt("payload length mismatch"));
    }
    let values: Vec<f64> = bytes[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(corrupt("non-finite entry"));
    }
    LgfTable::from_values(sigma, extent, values)
}

pub fn write_cache(path: &Path, table: &LgfTable, cfg: &LgfEvalConfig) -> Result<()> {
    let tmp = path.with_extension("bin.tmp");
    fs::write(&tmp, encode(table, cfg)).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn read_cache(path: &Path, sigma: f64, extent: usize, cfg: &LgfEvalConfig) -> Result<LgfTable> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes, sigma, extent, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> LgfTable {
        let vals = (0..canonical_count(4)).map(|i| 0.25 / (1.0 + i as f64)).collect();
        LgfTable::from_values(0.0, 4, vals).unwrap()
    }

    #[test]
    fn save_load_save_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = LgfEvalConfig::default();
        let t = sample();
        let p = dir.path().join(cache_file_name(0.0, 4, &cfg));
        write_cache(&p, &t, &cfg).unwrap();
        let first = fs::read(&p).unwrap();
        let back = read_cache(&p, 0.0, 4, &cfg).unwrap();
        assert_eq!(back, t);
        write_cache(&p, &back, &cfg).unwrap();
        assert_eq!(fs::read(&p).unwrap(), first);
        assert_eq!(&first[0..4], b"LGF3");
    }

    #[test]
    fn corruption_is_detected() {
        let cfg = LgfEvalConfig::default();
        let bytes = encode(&sample(), &cfg);
        assert!(decode(&bytes[..bytes.len() - 3], 0.0, 4, &cfg).is_err());
        let mut flipped = bytes.clone();
        flipped[0] = b'X';
        assert!(decode(&flipped, 0.0, 4, &cfg).is_err());
        let other = LgfEvalConfig { quad_tol: 1e-9, ..cfg.clone() };
        assert!(decode(&bytes, 0.0, 4, &other).is_err());
        assert!(decode(&bytes, 0.0, 5, &cfg).is_err());
        let mut nan = bytes.clone();
        let end = nan.len();
        nan[end - 8..].copy_from_slice(&f64::NAN.to_le_bytes());
        assert!(decode(&nan, 0.0, 4, &cfg).is_err());
    }
}
