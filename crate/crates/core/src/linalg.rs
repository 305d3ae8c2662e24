//! Dense linear algebra for iterates and problem data.
//!
//! Everything here is plain `f64` arithmetic on row-major storage. The
//! matrices in this crate are small (hundreds of rows at most), so no attempt
//! is made at blocking or BLAS-style tuning.

use std::ops::{Add, Deref, DerefMut, Index, IndexMut, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SeededRng;

/// A dense vector of reals.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn zeros(n: usize) -> Self {
        Vector(vec![0.0; n])
    }

    pub fn filled(n: usize, value: f64) -> Self {
        Vector(vec![value; n])
    }

    pub fn basis(n: usize, i: usize) -> Self {
        let mut v = Self::zeros(n);
        v[i] = 1.0;
        v
    }

    pub fn from_fn(n: usize, f: impl FnMut(usize) -> f64) -> Self {
        Vector((0..n).map(f).collect())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        debug_assert_eq!(self.len(), other.len());
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        if self.0.is_empty() {
            0.0
        } else {
            self.sum() / self.len() as f64
        }
    }

    pub fn norm_l1(&self) -> f64 {
        self.0.iter().map(|v| v.abs()).sum()
    }

    pub fn norm_l2(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm_linf(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// The `p`-norm for `p >= 1`.
    pub fn norm_lp(&self, p: f64) -> f64 {
        self.0.iter().map(|v| v.abs().powf(p)).sum::<f64>().powf(1.0 / p)
    }

    pub fn norms(&self) -> Norms {
        Norms {
            l1: self.norm_l1(),
            l2: self.norm_l2(),
            linf: self.norm_linf(),
            l4: self.norm_lp(4.0),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    /// `self += a * x`
    pub fn axpy(&mut self, a: f64, x: &Vector) {
        debug_assert_eq!(self.len(), x.len());
        for (s, v) in self.0.iter_mut().zip(&x.0) {
            *s += a * v;
        }
    }

    pub fn scale_mut(&mut self, a: f64) {
        self.0.iter_mut().for_each(|v| *v *= a);
    }

    pub fn scaled(&self, a: f64) -> Vector {
        self.map(|v| a * v)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Vector {
        Vector(self.0.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &Vector, f: impl Fn(f64, f64) -> f64) -> Vector {
        debug_assert_eq!(self.len(), other.len());
        Vector(self.0.iter().zip(&other.0).map(|(&a, &b)| f(a, b)).collect())
    }

    /// `a * x + b * y`
    pub fn lincomb(a: f64, x: &Vector, b: f64, y: &Vector) -> Vector {
        x.zip_map(y, |u, v| a * u + b * v)
    }

    pub fn dist_l2(&self, other: &Vector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn dist_l1(&self, other: &Vector) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b).abs()).sum()
    }

    pub(crate) fn check_len(&self, op: &'static str, expected: usize) -> Result<()> {
        if self.len() != expected {
            return Err(Error::Dimension {
                op,
                expected,
                got: self.len(),
            });
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Norms {
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
    pub l4: f64,
}

impl Deref for Vector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for Vector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for Vector {
    fn from(v: Vec<f64>) -> Self {
        Vector(v)
    }
}

impl From<&[f64]> for Vector {
    fn from(v: &[f64]) -> Self {
        Vector(v.to_vec())
    }
}

impl FromIterator<f64> for Vector {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        Vector(iter.into_iter().collect())
    }
}

impl<'a> Add<&'a Vector> for &'a Vector {
    type Output = Vector;
    fn add(self, rhs: &Vector) -> Vector {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl<'a> Sub<&'a Vector> for &'a Vector {
    type Output = Vector;
    fn sub(self, rhs: &Vector) -> Vector {
        self.zip_map(rhs, |a, b| a - b)
    }
}

impl Mul<f64> for &Vector {
    type Output = Vector;
    fn mul(self, rhs: f64) -> Vector {
        self.scaled(rhs)
    }
}

impl Neg for &Vector {
    type Output = Vector;
    fn neg(self) -> Vector {
        self.map(|v| -v)
    }
}

/// Anything that acts linearly on a [`Vector`].
pub trait LinearMap {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;

    /// `M v`, failing on a dimension mismatch.
    fn matvec(&self, v: &Vector) -> Result<Vector>;
}

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension {
                op: "DenseMatrix::from_row_major",
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::Dimension {
                    op: "DenseMatrix::from_rows",
                    expected: cols,
                    got: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Self::from_row_major(rows.len(), cols, data)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vector {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut t = DenseMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// `Mᵀ v`
    pub fn matvec_transpose(&self, v: &Vector) -> Result<Vector> {
        v.check_len("matvec_transpose", self.rows)?;
        let mut out = Vector::zeros(self.cols);
        for i in 0..self.rows {
            let vi = v[i];
            if vi == 0.0 {
                continue;
            }
            for (o, m) in out.iter_mut().zip(self.row(i)) {
                *o += m * vi;
            }
        }
        Ok(out)
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(Error::Dimension {
                op: "matmul",
                expected: self.cols,
                got: other.rows,
            });
        }
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let orow = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `MᵀM`
    pub fn gram(&self) -> DenseMatrix {
        self.transpose()
            .matmul(self)
            .expect("transpose has matching inner dimension")
    }

    /// `M Mᵀ`
    pub fn outer_gram(&self) -> DenseMatrix {
        self.matmul(&self.transpose())
            .expect("transpose has matching inner dimension")
    }

    pub fn scaled(&self, a: f64) -> DenseMatrix {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| a * v).collect(),
        }
    }

    pub fn add(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Dimension {
                op: "DenseMatrix::add",
                expected: self.rows * self.cols,
                got: other.rows * other.cols,
            });
        }
        Ok(DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn add_identity(&self, a: f64) -> DenseMatrix {
        let mut m = self.clone();
        for i in 0..self.rows.min(self.cols) {
            m[(i, i)] += a;
        }
        m
    }

    pub fn diagonal(&self) -> Vector {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        if !self.is_square() {
            return false;
        }
        let scale = self.max_abs_entry().max(1.0);
        (0..self.rows).all(|i| (0..i).all(|j| (self[(i, j)] - self[(j, i)]).abs() <= tol * scale))
    }

    /// Cholesky factorization `M = L Lᵀ` of a symmetric positive definite
    /// matrix. Fails with a configuration error if a pivot is not positive.
    pub fn cholesky(&self) -> Result<Cholesky> {
        if !self.is_square() {
            return Err(Error::config("Cholesky of a non-square matrix"));
        }
        let n = self.rows;
        let mut l = DenseMatrix::zeros(n, n);
        for j in 0..n {
            let mut d = self[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::config(format!(
                    "matrix is not positive definite (pivot {j} = {d:e})"
                )));
            }
            let djj = d.sqrt();
            l[(j, j)] = djj;
            for i in j + 1..n {
                let mut s = self[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / djj;
            }
        }
        Ok(Cholesky { l })
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

impl LinearMap for DenseMatrix {
    fn rows(&self) -> usize {
        self.rows
    }

    fn cols(&self) -> usize {
        self.cols
    }

    fn matvec(&self, v: &Vector) -> Result<Vector> {
        v.check_len("matvec", self.cols)?;
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(v.iter()).map(|(a, b)| a * b).sum())
            .collect())
    }
}

/// Lower-triangular Cholesky factor.
#[derive(Clone, Debug)]
pub struct Cholesky {
    l: DenseMatrix,
}

impl Cholesky {
    pub fn factor(&self) -> &DenseMatrix {
        &self.l
    }

    /// Solves `M x = b`.
    pub fn solve(&self, b: &Vector) -> Result<Vector> {
        let n = self.l.rows;
        b.check_len("Cholesky::solve", n)?;
        let mut z = b.clone();
        for i in 0..n {
            let mut s = z[i];
            for k in 0..i {
                s -= self.l[(i, k)] * z[k];
            }
            z[i] = s / self.l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = z[i];
            for k in i + 1..n {
                s -= self.l[(k, i)] * z[k];
            }
            z[i] = s / self.l[(i, i)];
        }
        Ok(z)
    }
}

/// Diagonal matrix stored as its diagonal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagonalMatrix {
    diagonal: Vector,
}

impl DiagonalMatrix {
    pub fn new(diagonal: Vector) -> Self {
        Self { diagonal }
    }

    pub fn identity(n: usize) -> Self {
        Self::new(Vector::filled(n, 1.0))
    }

    pub fn diagonal(&self) -> &Vector {
        &self.diagonal
    }

    pub fn dim(&self) -> usize {
        self.diagonal.len()
    }

    pub fn is_positive(&self) -> bool {
        self.diagonal.iter().all(|&d| d > 0.0 && d.is_finite())
    }
}

impl LinearMap for DiagonalMatrix {
    fn rows(&self) -> usize {
        self.dim()
    }

    fn cols(&self) -> usize {
        self.dim()
    }

    fn matvec(&self, v: &Vector) -> Result<Vector> {
        v.check_len("matvec", self.dim())?;
        Ok(self.diagonal.zip_map(v, |d, x| d * x))
    }
}

/// Result of a power iteration.
#[derive(Clone, Debug)]
pub struct PowerEstimate {
    /// Rayleigh quotient of `vector`.
    pub value: f64,
    /// Unit-norm eigenvector estimate.
    pub vector: Vector,
    pub iterations: usize,
    pub converged: bool,
}

/// Largest eigenvalue of a symmetric positive semidefinite operator.
///
/// Starts from a seeded uniform random vector, normalizes every iteration and
/// stops once the Rayleigh quotient changes by less than `tol` relative to its
/// magnitude. If `max_iter` is exhausted the last estimate is returned with
/// `converged == false`.
pub fn power_method(
    apply: impl Fn(&Vector) -> Vector,
    dim: usize,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> PowerEstimate {
    let mut rng = SeededRng::new(seed);
    let mut v = rng.uniform_vector(dim).map(|u| u + 0.5);
    let nrm = v.norm_l2();
    v.scale_mut(1.0 / nrm);

    let mut w = apply(&v);
    let mut rayleigh = v.dot(&w);
    for it in 1..=max_iter {
        let nw = w.norm_l2();
        if nw == 0.0 {
            // v lies in the kernel; for a PSD operator with a zero Rayleigh
            // quotient on a generic start vector the operator is zero.
            return PowerEstimate {
                value: 0.0,
                vector: v,
                iterations: it,
                converged: true,
            };
        }
        v = w.scaled(1.0 / nw);
        w = apply(&v);
        let next = v.dot(&w);
        let change = (next - rayleigh).abs();
        rayleigh = next;
        if change <= tol * rayleigh.abs().max(f64::MIN_POSITIVE) {
            return PowerEstimate {
                value: rayleigh,
                vector: v,
                iterations: it,
                converged: true,
            };
        }
    }
    PowerEstimate {
        value: rayleigh,
        vector: v,
        iterations: max_iter,
        converged: false,
    }
}

/// Smallest eigenvalue of a symmetric positive definite matrix by inverse
/// power iteration.
pub fn smallest_eigenvalue(m: &DenseMatrix, tol: f64, max_iter: usize, seed: u64) -> Result<PowerEstimate> {
    let chol = m.cholesky()?;
    let n = m.rows();
    let inv = power_method(|v| chol.solve(v).expect("square factor"), n, tol, max_iter, seed);
    let mv = m.matvec(&inv.vector)?;
    Ok(PowerEstimate {
        value: inv.vector.dot(&mv),
        ..inv
    })
}

/// Spectral norm of a rectangular matrix, `sqrt(λ_max(MᵀM))`.
pub fn spectral_norm(m: &DenseMatrix, tol: f64, max_iter: usize, seed: u64) -> f64 {
    let est = power_method(
        |v| {
            let mv = m.matvec(v).expect("sized");
            m.matvec_transpose(&mv).expect("sized")
        },
        m.cols(),
        tol,
        max_iter,
        seed,
    );
    est.value.max(0.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identity_matvec() {
        let v = Vector::from(vec![1.0, 2.0, 3.0]);
        assert_eq!(DenseMatrix::identity(3).matvec(&v).unwrap(), v);
    }

    #[test]
    fn diagonal_scaling() {
        let d = DiagonalMatrix::new(vec![2.0, 3.0].into());
        let out = d.matvec(&vec![1.0, 1.0].into()).unwrap();
        assert_eq!(out.as_slice(), &[2.0, 3.0]);
    }

    #[test]
    fn zero_matrix_gives_zero_vector() {
        let out = DenseMatrix::zeros(4, 3).matvec(&vec![1.0, -2.0, 5.0].into()).unwrap();
        assert_eq!(out, Vector::zeros(4));
    }

    #[test]
    fn matvec_dimension_mismatch() {
        let err = DenseMatrix::identity(3).matvec(&Vector::zeros(2)).unwrap_err();
        assert!(matches!(
            err,
            Error::Dimension {
                expected: 3,
                got: 2,
                ..
            }
        ));
        let err = DiagonalMatrix::identity(2).matvec(&Vector::zeros(5)).unwrap_err();
        assert!(matches!(err, Error::Dimension { .. }));
    }

    #[test]
    fn norms_of_small_vectors() {
        assert_eq!(Vector::from(vec![3.0, 4.0]).norm_l2(), 5.0);
        let n = Vector::filled(4, 1.0).norms();
        assert_eq!(n.l1, 4.0);
        assert_eq!(n.linf, 1.0);
        let l4 = Vector::filled(2, 1.0).norm_lp(4.0);
        assert!((l4 - 2f64.powf(0.25)).abs() < 1e-15);
    }

    #[test]
    fn power_method_known_spectrum() {
        let d = DiagonalMatrix::new(vec![1.0, 2.0, 3.0].into());
        let est = power_method(|v| d.matvec(v).unwrap(), 3, 1e-14, 10_000, 0);
        assert!(est.converged);
        assert!((est.value - 3.0).abs() <= 1e-8 * 3.0);
    }

    #[test]
    fn power_method_identity() {
        let est = power_method(|v| v.clone(), 5, 1e-12, 100, 9);
        assert!(est.converged);
        assert!((est.value - 1.0).abs() < 1e-14);
    }

    #[test]
    fn power_method_reports_nonconvergence() {
        // Nearly degenerate top pair: two iterations cannot settle.
        let d = DiagonalMatrix::new(vec![1.0, 0.999_999, 0.5].into());
        let est = power_method(|v| d.matvec(v).unwrap(), 3, 1e-16, 2, 1);
        assert!(!est.converged);
        assert_eq!(est.iterations, 2);
        assert!(est.value > 0.5 && est.value <= 1.0);
    }

    #[test]
    fn power_method_is_deterministic() {
        let m = SeededRng::new(5).normal_matrix(6, 6).gram();
        let a = power_method(|v| m.matvec(v).unwrap(), 6, 1e-10, 1000, 77);
        let b = power_method(|v| m.matvec(v).unwrap(), 6, 1e-10, 1000, 77);
        assert_eq!(a.value.to_bits(), b.value.to_bits());
    }

    #[test]
    fn cholesky_solves_and_rejects_indefinite() {
        let m = SeededRng::new(2).normal_matrix(5, 5).gram().add_identity(1.0);
        let chol = m.cholesky().unwrap();
        let b: Vector = (0..5).map(|i| i as f64 - 2.0).collect();
        let x = chol.solve(&b).unwrap();
        let r = &m.matvec(&x).unwrap() - &b;
        assert!(r.norm_linf() < 1e-12);

        let bad = DenseMatrix::from_diagonal(&[1.0, -1.0]);
        assert!(matches!(bad.cholesky(), Err(Error::Config(_))));
    }

    #[test]
    fn inverse_power_finds_smallest() {
        let m = DenseMatrix::from_diagonal(&[4.0, 0.5, 2.0]);
        let est = smallest_eigenvalue(&m, 1e-14, 1000, 3).unwrap();
        assert!((est.value - 0.5).abs() < 1e-10);
    }

    #[test]
    fn transpose_matvec_agrees() {
        let mut rng = SeededRng::new(8);
        let m = rng.normal_matrix(4, 7);
        let v = rng.normal_vector(4);
        let a = m.matvec_transpose(&v).unwrap();
        let b = m.transpose().matvec(&v).unwrap();
        assert!((&a - &b).norm_linf() < 1e-14);
    }

    proptest! {
        #[test]
        fn matvec_is_linear(seed in 0u64..10_000, a in -10.0f64..10.0, b in -10.0f64..10.0) {
            let mut rng = SeededRng::new(seed);
            let m = rng.normal_matrix(6, 5);
            let v = rng.normal_vector(5);
            let w = rng.normal_vector(5);
            let lhs = m.matvec(&Vector::lincomb(a, &v, b, &w)).unwrap();
            let rhs = Vector::lincomb(a, &m.matvec(&v).unwrap(), b, &m.matvec(&w).unwrap());
            let scale = lhs.norm_linf().max(rhs.norm_linf()).max(1.0);
            prop_assert!((&lhs - &rhs).norm_linf() <= 1e-12 * scale);
        }

        #[test]
        fn power_method_rayleigh_consistent(seed in 0u64..10_000) {
            let m = SeededRng::new(seed).normal_matrix(8, 8).gram();
            let est = power_method(|v| m.matvec(v).unwrap(), 8, 1e-10, 5000, seed);
            let v = &est.vector;
            let rq = v.dot(&m.matvec(v).unwrap()) / v.dot(v);
            prop_assert!(est.value >= rq - 1e-10 * rq.abs().max(1.0));
        }
    }
}
