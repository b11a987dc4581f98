//! Deterministic fixtures shared by the kernel benchmarks.

use cvrc_core::{CMatrix, ComplexRaster};
use num_complex::Complex64;

/// Cheap deterministic pseudo-random complex entry in the unit disc.
pub fn entry(i: usize, j: usize) -> Complex64 {
    let t = (i as f64 * 12.9898 + j as f64 * 78.233).sin() * 43_758.545;
    let r = t - t.floor();
    Complex64::from_polar(r, 7.0 * t)
}

pub fn matrix(rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, entry)
}

/// Unit-modulus phase-difference raster with a smooth ramp plus jitter.
pub fn diff_raster(width: usize, height: usize) -> ComplexRaster {
    ComplexRaster::from_fn(width, height, |r, c| {
        Complex64::from_polar(1.0, 0.02 * c as f64 + 0.3 * entry(r, c).im)
    })
    .expect("nonempty raster")
}
