//! Versioned binary cache for spectral bases.
//!
//! Layout: magic, mesh content hash, `n`, `k`, eigenvalues, eigenvectors
//! (row-major), then an FNV-1a checksum of everything before it. Loaded
//! caches are re-validated against the basis invariants by the caller
//! before use.

use std::io::Write;
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::SpectralBasis;
use crate::hash::Fnv1a64;

const MAGIC: &[u8; 8] = b"MSCSPEC1";

#[derive(Debug, Error)]
pub enum CacheError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {what}")]
    Format { path: PathBuf, what: String },
    #[error("{path}: checksum mismatch, the cache file is corrupted")]
    Corrupted { path: PathBuf },
}

/// Raw cache payload; pair it with vertex areas to rebuild a basis.
#[derive(Debug, Clone)]
pub struct CacheContents {
    pub mesh_hash: u64,
    pub n: usize,
    pub k: usize,
    pub eigenvalues: Vec<f64>,
    pub phi_rows: Vec<f64>,
}

impl CacheContents {
    /// Reassembles a basis. The caller still owns invariant validation.
    pub fn into_basis(self, da: Vec<f64>) -> SpectralBasis {
        assert_eq!(da.len(), self.n);
        SpectralBasis::from_parts(self.eigenvalues, self.phi_rows, da)
    }
}

pub fn save_basis_cache(
    path: &Path,
    mesh_hash: u64,
    basis: &SpectralBasis,
) -> Result<(), CacheError> {
    let mut bytes = Vec::with_capacity(32 + 8 * (basis.k() + basis.n() * basis.k()));
    bytes.extend_from_slice(MAGIC);
    bytes.extend_from_slice(&mesh_hash.to_le_bytes());
    bytes.extend_from_slice(&(basis.n() as u64).to_le_bytes());
    bytes.extend_from_slice(&(basis.k() as u64).to_le_bytes());
    for &l in basis.eigenvalues() {
        bytes.extend_from_slice(&l.to_le_bytes());
    }
    for &p in basis.phi_raw() {
        bytes.extend_from_slice(&p.to_le_bytes());
    }
    let mut h = Fnv1a64::new();
    h.write(&bytes);
    bytes.extend_from_slice(&h.finish().to_le_bytes());

    let io_err = |source| CacheError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut file = std::fs::File::create(path).map_err(io_err)?;
    file.write_all(&bytes).map_err(io_err)?;
    Ok(())
}

pub fn load_basis_cache(path: &Path) -> Result<CacheContents, CacheError> {
    let bytes = std::fs::read(path).map_err(|source| CacheError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let format = |what: &str| CacheError::Format {
        path: path.to_path_buf(),
        what: what.to_string(),
    };
    if bytes.len() < 40 {
        return Err(format("file too short to be a spectral cache"));
    }
    if &bytes[0..8] != MAGIC {
        return Err(format("bad magic; not a spectral cache or wrong version"));
    }
    let body = &bytes[..bytes.len() - 8];
    let mut h = Fnv1a64::new();
    h.write(body);
    let stored = u64::from_le_bytes(bytes[bytes.len() - 8..].try_into().unwrap());
    if stored != h.finish() {
        return Err(CacheError::Corrupted {
            path: path.to_path_buf(),
        });
    }

    let read_u64 = |off: usize| u64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
    let mesh_hash = read_u64(8);
    let n = read_u64(16) as usize;
    let k = read_u64(24) as usize;
    let expected = 32 + 8 * (k + n * k) + 8;
    if bytes.len() != expected {
        return Err(format("length does not match the declared dimensions"));
    }
    let mut off = 32;
    let mut read_f64s = |count: usize| {
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            out.push(f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap()));
            off += 8;
        }
        out
    };
    let eigenvalues = read_f64s(k);
    let phi_rows = read_f64s(n * k);
    Ok(CacheContents {
        mesh_hash,
        n,
        k,
        eigenvalues,
        phi_rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_basis() -> SpectralBasis {
        // Two-vertex chain with identity mass: λ = {0, 2}.
        let s = 1.0 / 2f64.sqrt();
        SpectralBasis::from_parts(vec![0.0, 2.0], vec![s, s, s, -s], vec![1.0, 1.0])
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("basis.spec");
        let basis = toy_basis();
        save_basis_cache(&path, 0xabcd, &basis).unwrap();
        let loaded = load_basis_cache(&path).unwrap();
        assert_eq!(loaded.mesh_hash, 0xabcd);
        assert_eq!(loaded.n, 2);
        assert_eq!(loaded.k, 2);
        let rebuilt = loaded.into_basis(vec![1.0, 1.0]);
        assert_eq!(rebuilt, basis);
    }

    #[test]
    fn corruption_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("basis.spec");
        save_basis_cache(&path, 7, &toy_basis()).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        let mid = bytes.len() / 2;
        bytes[mid] ^= 0xff;
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(
            load_basis_cache(&path),
            Err(CacheError::Corrupted { .. })
        ));
    }

    #[test]
    fn bad_magic_is_a_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("file.bin");
        std::fs::write(&path, vec![0u8; 64]).unwrap();
        assert!(matches!(
            load_basis_cache(&path),
            Err(CacheError::Format { .. })
        ));
    }
}
