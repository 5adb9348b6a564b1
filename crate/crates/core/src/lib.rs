//! Discrete Wigner functions for N-state systems on an N x N phase-space grid.
//!
//! The crate builds the displacement operators D(q, p), enumerates the
//! isotropic lines of Z_N x Z_N with their SL(2, Z_N) orbit structure, solves
//! the GF(2) system that the line-marginal conditions impose on the signs
//! S(q, p), and from an admissible sign assignment constructs the phase-point
//! operators W(q, p), Wigner functions, line projectors and a tomographic
//! frame. For even N the signs form a family; [`spectra`] tallies the distinct
//! spectra of W(0, 0) over that family.
//!
//! Wigner functions are normalized as `W(sigma) = Tr(rho W(sigma)) / N`, so
//! sums along a line bundle are Born probabilities.

pub mod error;
pub mod gf2;
pub mod lines;
pub mod matrix;
pub mod phase;
pub mod ring;
pub mod signs;
pub mod spectra;
pub mod tomography;
pub mod verify;
pub mod wigner;

pub use error::{Error, Result};

/// Smallest supported grid size.
pub const MIN_N: u32 = 2;
/// Default upper bound on N; override with `FW_MAX_N`.
pub const DEFAULT_MAX_N: u32 = 64;

/// Current bound on N, from `FW_MAX_N` when set and parseable.
pub fn max_n() -> u32 {
    std::env::var("FW_MAX_N")
        .ok()
        .and_then(|v| v.trim().parse::<u32>().ok())
        .filter(|&v| v >= MIN_N)
        .unwrap_or(DEFAULT_MAX_N)
}

pub fn check_dimension(n: u32) -> Result<()> {
    let max = max_n();
    if (MIN_N..=max).contains(&n) {
        Ok(())
    } else {
        Err(Error::DimensionOutOfRange { n, min: MIN_N, max })
    }
}
