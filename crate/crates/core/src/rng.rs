//! Seeded random number generation.
//!
//! All randomness in the crate flows through [`SeededRng`], a ChaCha8 stream
//! keyed by a caller supplied 64-bit seed. ChaCha8 output is specified
//! independently of platform and word size, so a given seed yields the same
//! problem instance everywhere. Gaussian draws use the Box–Muller transform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::{DenseMatrix, Vector};

#[derive(Clone, Debug)]
pub struct SeededRng {
    inner: ChaCha8Rng,
    spare: Option<f64>,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: ChaCha8Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    /// Uniform draw from `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.gen::<f64>()
    }

    /// Uniform draw from the open interval `(0, 1)`.
    fn uniform_open(&mut self) -> f64 {
        loop {
            let u = self.uniform();
            if u > 0.0 {
                return u;
            }
        }
    }

    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Standard normal draw (Box–Muller, both variates used).
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = self.uniform_open();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }

    pub fn normal_vector(&mut self, n: usize) -> Vector {
        (0..n).map(|_| self.normal()).collect()
    }

    pub fn uniform_vector(&mut self, n: usize) -> Vector {
        (0..n).map(|_| self.uniform()).collect()
    }

    pub fn normal_matrix(&mut self, rows: usize, cols: usize) -> DenseMatrix {
        let data = (0..rows * cols).map(|_| self.normal()).collect();
        DenseMatrix::from_row_major(rows, cols, data).expect("sized by construction")
    }

    /// Uniform draw from the open probability simplex (flat Dirichlet).
    pub fn simplex_point(&mut self, n: usize) -> Vector {
        let mut v: Vector = (0..n).map(|_| -self.uniform_open().ln()).collect();
        let s = v.sum();
        v.scale_mut(1.0 / s);
        v
    }

    /// Uniform index in `0..n`.
    pub fn index(&mut self, n: usize) -> usize {
        self.inner.gen_range(0..n)
    }
}
