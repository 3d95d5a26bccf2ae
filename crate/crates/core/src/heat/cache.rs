//! Binary spectra cache keyed by the space content hash.
//!
//! Layout: magic, little-endian `u64` header length, JSON header, then the
//! eigenvalues and the column-major eigenvector matrix as `f64` LE.

use std::path::Path;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::spectral::SpectralHeatModel;
use crate::error::{Error, Result};
use crate::space::io::write_atomic;
use crate::space::FiniteMMSpace;

const MAGIC: &[u8; 8] = b"MMLSPEC1";

#[derive(Serialize, Deserialize)]
struct Header {
    n: usize,
    bandwidth: f64,
    space_hash: String,
    reconstruction_residual: f64,
}

pub fn save_spectra(model: &SpectralHeatModel, path: &Path) -> Result<()> {
    let header = serde_json::to_vec(&Header {
        n: model.len(),
        bandwidth: model.bandwidth,
        space_hash: model.space_hash.clone(),
        reconstruction_residual: model.reconstruction_residual,
    })?;
    let n = model.len();
    let mut bytes = Vec::with_capacity(16 + header.len() + 8 * n * (n + 1));
    bytes.extend_from_slice(MAGIC);
    bytes.extend_from_slice(&(header.len() as u64).to_le_bytes());
    bytes.extend_from_slice(&header);
    for v in model.eigvals.iter().chain(model.eigvecs.as_slice()) {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    write_atomic(path, &bytes)
}

/// Loads spectra for `space`, refusing files computed for another space.
pub fn load_spectra(space: &Arc<FiniteMMSpace>, path: &Path) -> Result<SpectralHeatModel> {
    let bytes = std::fs::read(path)?;
    let corrupt = |what: &str| Error::CacheMismatch(format!("{}: {what}", path.display()));
    if bytes.len() < 16 || &bytes[..8] != MAGIC {
        return Err(corrupt("not a spectra file"));
    }
    let hlen = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let body = bytes.get(16 + hlen..).ok_or_else(|| corrupt("truncated header"))?;
    let header: Header = serde_json::from_slice(&bytes[16..16 + hlen])?;
    let hash = space.content_hash();
    if header.space_hash != hash || header.n != space.len() {
        return Err(Error::CacheMismatch(format!(
            "{} was computed for space {}, not {hash}",
            path.display(),
            header.space_hash
        )));
    }
    let n = header.n;
    if body.len() != 8 * n * (n + 1) {
        return Err(corrupt("payload length does not match the header"));
    }
    let floats: Vec<f64> = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok(SpectralHeatModel {
        space: space.clone(),
        eigvals: floats[..n].to_vec(),
        eigvecs: DMatrix::from_column_slice(n, n, &floats[n..]),
        bandwidth: header.bandwidth,
        space_hash: header.space_hash,
        reconstruction_residual: header.reconstruction_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heat::{build_dirichlet_graph, spectral_decompose, Bandwidth};
    use crate::space::{build_model_space, ModelFamily};

    #[test]
    fn round_trip_and_mismatch() {
        let s = Arc::new(build_model_space(ModelFamily::Circle, 24, 1.0).unwrap());
        let m = spectral_decompose(&build_dirichlet_graph(&s, Bandwidth::Auto).unwrap()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.spec");
        save_spectra(&m, &path).unwrap();
        let back = load_spectra(&s, &path).unwrap();
        assert_eq!(back.eigvals(), m.eigvals());
        assert_eq!(back.eigvecs(), m.eigvecs());
        let other = Arc::new(build_model_space(ModelFamily::Circle, 24, 2.0).unwrap());
        assert!(matches!(load_spectra(&other, &path), Err(Error::CacheMismatch(_))));
    }
}
