//! Binary checkpoints.
//!
//! Layout, all little-endian: magic `TWV1`, `u8` dim, `u32` cutoff `n`,
//! `u32` points per axis `M`, `f64` time, then `(2n+1)^d` pairs `(re, im)` of
//! `f64` for `u` followed by the same for `u_t`, in mode order.

use std::fs;
use std::io::Write;
use std::path::Path;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::fourier::{SpectralField, TorusGrid};
use crate::galerkin::SolverState;
use crate::scalar::Real;

pub const MAGIC: &[u8; 4] = b"TWV1";
const HEADER_LEN: usize = 4 + 1 + 4 + 4 + 8;

pub fn encode_checkpoint<T: Real>(state: &SolverState<T>) -> Vec<u8> {
    let g = state.grid();
    let mut out = Vec::with_capacity(HEADER_LEN + 32 * g.num_modes());
    out.extend_from_slice(MAGIC);
    out.push(g.dim() as u8);
    out.extend_from_slice(&(g.cutoff() as u32).to_le_bytes());
    out.extend_from_slice(&(g.points() as u32).to_le_bytes());
    out.extend_from_slice(&state.t.as_f64().to_le_bytes());
    for c in state.u.coeffs().iter().chain(state.v.coeffs()) {
        out.extend_from_slice(&c.re.as_f64().to_le_bytes());
        out.extend_from_slice(&c.im.as_f64().to_le_bytes());
    }
    out
}

pub fn decode_checkpoint<T: Real>(bytes: &[u8]) -> Result<SolverState<T>> {
    let bad = |msg: &str| Error::Checkpoint(msg.to_owned());
    if bytes.len() < HEADER_LEN || &bytes[..4] != MAGIC {
        return Err(bad("not a checkpoint (bad magic or truncated header)"));
    }
    let dim = bytes[4] as usize;
    let n = u32::from_le_bytes(bytes[5..9].try_into().expect("4 bytes")) as usize;
    let m = u32::from_le_bytes(bytes[9..13].try_into().expect("4 bytes")) as usize;
    let t = f64::from_le_bytes(bytes[13..21].try_into().expect("8 bytes"));
    let grid = TorusGrid::with_points(dim, n, m).map_err(|e| Error::Checkpoint(format!("bad grid header: {e}")))?;
    let modes = grid.num_modes();
    if bytes.len() != HEADER_LEN + 32 * modes {
        return Err(Error::Checkpoint(format!(
            "expected {} bytes for {modes} modes, found {}",
            HEADER_LEN + 32 * modes,
            bytes.len()
        )));
    }
    let mut vals = bytes[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| T::lit(f64::from_le_bytes(c.try_into().expect("8 bytes"))));
    let mut field = || -> Vec<Complex<T>> {
        (0..modes)
            .map(|_| {
                let re = vals.next().expect("length checked");
                let im = vals.next().expect("length checked");
                Complex::new(re, im)
            })
            .collect()
    };
    let u = SpectralField::from_coeffs(&grid, field())?;
    let v = SpectralField::from_coeffs(&grid, field())?;
    SolverState::new(T::lit(t), u, v)
}

/// Writes `bytes` to a sibling temporary file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let name = path.file_name().ok_or_else(|| Error::InvalidArgument(format!("not a file path: {}", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp", name.to_string_lossy()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_checkpoint<T: Real>(path: &Path, state: &SolverState<T>) -> Result<()> {
    write_atomic(path, &encode_checkpoint(state))
}

pub fn read_checkpoint<T: Real>(path: &Path) -> Result<SolverState<T>> {
    let bytes = fs::read(path).map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))?;
    decode_checkpoint(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let g = TorusGrid::new(2, 3, 2.0).unwrap();
        let mut u = SpectralField::<f64>::cosine_mode(&g, [1, 2, 0], 0.1 + 1e-17).unwrap();
        u.coeffs_mut()[0] = Complex::new(f64::MIN_POSITIVE, -0.0);
        let v = SpectralField::cosine_mode(&g, [0, 3, 0], 1.0 / 3.0).unwrap();
        let s = SolverState::new(0.7, u, v).unwrap();
        let bytes = encode_checkpoint(&s);
        assert_eq!(bytes.len(), HEADER_LEN + 32 * 49);
        let back: SolverState<f64> = decode_checkpoint(&bytes).unwrap();
        assert_eq!(encode_checkpoint(&back), bytes);
        assert_eq!(back.grid(), s.grid());
    }

    #[test]
    fn corrupt_input_is_rejected() {
        let g = TorusGrid::new(1, 2, 2.0).unwrap();
        let bytes = encode_checkpoint(&SolverState::<f64>::zeros(&g));
        assert!(decode_checkpoint::<f64>(&bytes[..bytes.len() - 1]).is_err());
        let mut wrong = bytes.clone();
        wrong[0] = b'X';
        assert!(decode_checkpoint::<f64>(&wrong).is_err());
        assert!(decode_checkpoint::<f64>(&[]).is_err());
    }
}
