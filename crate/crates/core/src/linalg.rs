//! Fixed-size matrix aliases shared across the crate.

use nalgebra::{SMatrix, SVector};

pub type Vec2 = SVector<f64, 2>;
pub type Vec4 = SVector<f64, 4>;
pub type Vec6 = SVector<f64, 6>;
pub type Vec8 = SVector<f64, 8>;
pub type Vec12 = SVector<f64, 12>;

pub type Mat2 = SMatrix<f64, 2, 2>;
pub type Mat6 = SMatrix<f64, 6, 6>;
pub type Mat6x2 = SMatrix<f64, 6, 2>;
pub type Mat8 = SMatrix<f64, 8, 8>;
pub type Mat8x4 = SMatrix<f64, 8, 4>;
pub type Mat8x12 = SMatrix<f64, 8, 12>;
pub type Mat4x8 = SMatrix<f64, 4, 8>;
pub type Mat4x12 = SMatrix<f64, 4, 12>;
pub type Mat2x8 = SMatrix<f64, 2, 8>;
pub type Mat12 = SMatrix<f64, 12, 12>;
pub type Mat12x8 = SMatrix<f64, 12, 8>;
pub type Mat12x4 = SMatrix<f64, 12, 4>;
pub type Mat12x2 = SMatrix<f64, 12, 2>;

/// Spectral radius of a square matrix.
pub fn spectral_radius<const N: usize>(m: &SMatrix<f64, N, N>) -> f64 {
    nalgebra::DMatrix::from_column_slice(N, N, m.as_slice())
        .complex_eigenvalues()
        .iter()
        .map(|l| l.norm())
        .fold(0.0, f64::max)
}
