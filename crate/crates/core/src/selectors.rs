//! Constant selector matrices relating the full state to relative
//! coordinates.
//!
//! State layout of `q` (12 entries): positions of swing foot, pelvis and
//! stance foot followed by their velocities, each as a (sagittal, lateral)
//! pair. Relative coordinates `s` (8 entries) are `s1 = swing - stance`,
//! `s2 = pelvis - stance` and their derivatives, again as pairs.

use crate::linalg::*;

pub const SWING: usize = 0;
pub const PELVIS: usize = 1;
pub const STANCE: usize = 2;
pub const SAGITTAL: usize = 0;
pub const LATERAL: usize = 1;

/// Index of a body position coordinate inside `q`.
pub const fn pos(body: usize, axis: usize) -> usize {
    2 * body + axis
}

/// Index of a body velocity coordinate inside `q`.
pub const fn vel(body: usize, axis: usize) -> usize {
    6 + 2 * body + axis
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectorMatrices {
    /// Feet exchange at phase switch.
    pub s: Mat12,
    /// Relative-coordinate extractor.
    pub m: Mat8x12,
    /// Swing and stance foot velocity selector.
    pub n: Mat4x12,
    /// Lateral mirror of relative coordinates.
    pub o: Mat8,
    /// Distributes a relative error onto the full state, stance foot at rest
    /// in the origin.
    pub mhat: Mat12x8,
    /// Selects the relative swing-foot velocity from an error vector.
    pub chat: Mat2x8,
}

impl Default for SelectorMatrices {
    fn default() -> Self {
        Self::new()
    }
}

impl SelectorMatrices {
    pub fn new() -> Self {
        let mut s = Mat12::zeros();
        for block in 0..2 {
            let off = 6 * block;
            for a in 0..2 {
                s[(off + a, off + 4 + a)] = 1.0;
                s[(off + 2 + a, off + 2 + a)] = 1.0;
                s[(off + 4 + a, off + a)] = 1.0;
            }
        }

        let mut m = Mat8x12::zeros();
        for block in 0..2 {
            let (r, c) = (4 * block, 6 * block);
            for a in 0..2 {
                m[(r + a, c + a)] = 1.0;
                m[(r + a, c + 4 + a)] = -1.0;
                m[(r + 2 + a, c + 2 + a)] = 1.0;
                m[(r + 2 + a, c + 4 + a)] = -1.0;
            }
        }

        let mut n = Mat4x12::zeros();
        for a in 0..2 {
            n[(a, vel(SWING, a))] = 1.0;
            n[(2 + a, vel(STANCE, a))] = 1.0;
        }

        let o = Mat8::from_diagonal(&Vec8::from_fn(|i, _| if i % 2 == 0 { 1.0 } else { -1.0 }));

        let mut mhat = Mat12x8::zeros();
        for block in 0..2 {
            for i in 0..4 {
                mhat[(6 * block + i, 4 * block + i)] = 1.0;
            }
        }

        let mut chat = Mat2x8::zeros();
        chat[(0, 4)] = 1.0;
        chat[(1, 5)] = 1.0;

        Self {
            s,
            m,
            n,
            o,
            mhat,
            chat,
        }
    }
}

/// Lateral mirror acting on the full state.
pub fn mirror_q() -> Mat12 {
    Mat12::from_diagonal(&Vec12::from_fn(|i, _| if i % 2 == 0 { 1.0 } else { -1.0 }))
}

/// Lateral mirror acting on an input vector `(u_c, u_r)`.
pub fn mirror_u() -> SMatrix4 {
    SMatrix4::from_diagonal(&Vec4::new(1.0, -1.0, 1.0, -1.0))
}

type SMatrix4 = nalgebra::SMatrix<f64, 4, 4>;
