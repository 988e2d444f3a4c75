//! Small dense linear algebra: real symmetric matrices with complex
//! right-hand sides (the normal equations of the channel estimator) and
//! complex Hermitian systems (the LMMSE filter).

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use num_traits::{Float, Zero};

pub type C64 = Complex64;

/// Dense real square matrix, row-major. Used for Gram matrices, which are
/// symmetric, but nothing here assumes it except the Cholesky factorization.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::scaled_identity(n, 1.0)
    }

    pub fn scaled_identity(n: usize, scale: f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = scale;
        }
        m
    }

    /// Builds from row-major data. Panics if `data.len() != n * n`.
    pub fn from_row_major(n: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), n * n, "matrix data has wrong length");
        Self { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    #[inline]
    pub fn add_to(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] += v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn scale(&mut self, s: f64) {
        for v in &mut self.data {
            *v *= s;
        }
    }

    pub fn sub_assign(&mut self, other: &SymMatrix) {
        assert_eq!(self.n, other.n);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a -= *b;
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn mul_vec(&self, x: &[C64]) -> Vec<C64> {
        (0..self.n)
            .map(|i| dot_real_complex(self.row(i), x))
            .collect()
    }

    pub fn mul_vec_real(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| dot(self.row(i), x)).collect()
    }

    /// Product with another square matrix of the same size.
    pub fn matmul(&self, other: &SymMatrix) -> SymMatrix {
        let n = self.n;
        let mut out = SymMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                let dst = &mut out.data[i * n..(i + 1) * n];
                for (d, o) in dst.iter_mut().zip(orow) {
                    *d += a * o;
                }
            }
        }
        out
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    /// Largest eigenvalue of a symmetric positive semidefinite matrix by power
    /// iteration.
    pub fn largest_eigenvalue(&self, iterations: usize) -> f64 {
        power_iteration(self.n, iterations, |x| self.mul_vec_real(x))
    }
}

/// Real dot product with four independent accumulators.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 4];
    let chunks = n / 4;
    for c in 0..chunks {
        let i = 4 * c;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in 4 * chunks..n {
        s += a[i] * b[i];
    }
    s
}

#[inline]
pub fn dot_real_complex(a: &[f64], x: &[C64]) -> C64 {
    let n = a.len().min(x.len());
    let (a, x) = (&a[..n], &x[..n]);
    let mut re = [0.0f64; 2];
    let mut im = [0.0f64; 2];
    let pairs = n / 2;
    for p in 0..pairs {
        let i = 2 * p;
        re[0] += a[i] * x[i].re;
        im[0] += a[i] * x[i].im;
        re[1] += a[i + 1] * x[i + 1].re;
        im[1] += a[i + 1] * x[i + 1].im;
    }
    if n % 2 == 1 {
        re[0] += a[n - 1] * x[n - 1].re;
        im[0] += a[n - 1] * x[n - 1].im;
    }
    C64::new(re[0] + re[1], im[0] + im[1])
}

pub fn norm(x: &[C64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

pub fn norm_real(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Dominant eigenvalue magnitude of a linear map by power iteration with a
/// fixed, deterministic start vector.
pub fn power_iteration<F>(n: usize, iterations: usize, apply: F) -> f64
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    if n == 0 {
        return 0.0;
    }
    let mut x: Vec<f64> = (0..n)
        .map(|i| 1.0 + 0.1 * ((i * 7919) % 13) as f64)
        .collect();
    let nx = norm_real(&x);
    x.iter_mut().for_each(|v| *v /= nx);
    let mut lambda = 0.0;
    for _ in 0..iterations.max(1) {
        let y = apply(&x);
        let ny = norm_real(&y);
        if ny == 0.0 || !ny.is_finite() {
            return ny;
        }
        lambda = ny;
        x = y.into_iter().map(|v| v / ny).collect();
    }
    lambda
}

/// Cholesky factor `R = G Gᵀ` of a real symmetric positive definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    lower: Vec<f64>,
}

impl Cholesky {
    /// Returns `None` when the matrix is not numerically positive definite.
    pub fn new(m: &SymMatrix) -> Option<Self> {
        let n = m.n;
        let mut l = m.data.clone();
        for j in 0..n {
            let mut d = l[j * n + j];
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if !(d > 0.0) || !d.is_finite() {
                return None;
            }
            let d = d.sqrt();
            l[j * n + j] = d;
            for i in (j + 1)..n {
                let mut s = l[i * n + j];
                let (ri, rj) = (i * n, j * n);
                for k in 0..j {
                    s -= l[ri + k] * l[rj + k];
                }
                l[ri + j] = s / d;
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                l[i * n + j] = 0.0;
            }
        }
        Some(Self { n, lower: l })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        let n = self.n;
        let mut x = b.to_vec();
        for i in 0..n {
            let row = &self.lower[i * n..i * n + i];
            let s = x[i] - dot_real_complex(row, &x[..i]);
            x[i] = s / self.lower[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in (i + 1)..n {
                s -= x[k] * self.lower[k * n + i];
            }
            x[i] = s / self.lower[i * n + i];
        }
        x
    }

    pub fn solve_real(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x = b.to_vec();
        for i in 0..n {
            let mut s = x[i];
            for k in 0..i {
                s -= self.lower[i * n + k] * x[k];
            }
            x[i] = s / self.lower[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in (i + 1)..n {
                s -= self.lower[k * n + i] * x[k];
            }
            x[i] = s / self.lower[i * n + i];
        }
        x
    }

    /// Diagonal of the inverse.
    pub fn inverse_diagonal(&self) -> Vec<f64> {
        let mut e = vec![0.0; self.n];
        (0..self.n)
            .map(|i| {
                e.iter_mut().for_each(|v| *v = 0.0);
                e[i] = 1.0;
                self.solve_real(&e)[i]
            })
            .collect()
    }

    /// Full inverse.
    pub fn inverse(&self) -> SymMatrix {
        let n = self.n;
        let mut inv = SymMatrix::zeros(n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            let col = self.solve_real(&e);
            for i in 0..n {
                inv.set(i, j, col[i]);
            }
        }
        inv
    }
}

/// 2-norm condition number estimate of a symmetric positive definite matrix:
/// power iteration for the largest eigenvalue and inverse iteration (through
/// the Cholesky factor) for the smallest.
pub fn condition_estimate(m: &SymMatrix, chol: &Cholesky, iterations: usize) -> f64 {
    let lmax = m.largest_eigenvalue(iterations);
    let inv_lmin = power_iteration(m.dim(), iterations, |x| chol.solve_real(x));
    lmax * inv_lmin
}

/// Dense complex square matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    n: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![C64::zero(); n * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.data[i * self.n + j] = v;
    }

    #[inline]
    pub fn add_to(&mut self, i: usize, j: usize, v: C64) {
        self.data[i * self.n + j] += v;
    }

    pub fn scale(&mut self, s: f64) {
        for v in &mut self.data {
            *v *= s;
        }
    }

    pub fn add_diagonal(&mut self, v: f64) {
        for i in 0..self.n {
            self.data[i * self.n + i] += v;
        }
    }
}

/// Cholesky factor `A = G Gᴴ` of a complex Hermitian positive definite matrix.
#[derive(Debug, Clone)]
pub struct HermitianCholesky {
    n: usize,
    lower: Vec<C64>,
}

impl HermitianCholesky {
    pub fn new(m: &CMatrix) -> Option<Self> {
        let n = m.n;
        let mut l = m.data.clone();
        for j in 0..n {
            let original = l[j * n + j].re;
            let mut d = original;
            for k in 0..j {
                d -= l[j * n + k].norm_sqr();
            }
            // pivots lost to cancellation mean numerical rank deficiency
            if !(d > 1e-13 * original.abs()) || !d.is_finite() {
                return None;
            }
            let d = d.sqrt();
            l[j * n + j] = C64::new(d, 0.0);
            for i in (j + 1)..n {
                let mut s = l[i * n + j];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k].conj();
                }
                l[i * n + j] = s / d;
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                l[i * n + j] = C64::zero();
            }
        }
        Some(Self { n, lower: l })
    }

    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        let n = self.n;
        let mut x = b.to_vec();
        for i in 0..n {
            let mut s = x[i];
            for k in 0..i {
                s -= self.lower[i * n + k] * x[k];
            }
            x[i] = s / self.lower[i * n + i].re;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in (i + 1)..n {
                s -= self.lower[k * n + i].conj() * x[k];
            }
            x[i] = s / self.lower[i * n + i].re;
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spd(n: usize) -> SymMatrix {
        let mut m = SymMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let v = 1.0 / (1.0 + (i as f64 - j as f64).abs());
                m.set(i, j, v);
            }
            m.add_to(i, i, 1.0);
        }
        m
    }

    #[test]
    fn cholesky_solves() {
        let m = spd(6);
        let ch = Cholesky::new(&m).unwrap();
        let b: Vec<C64> = (0..6).map(|i| C64::new(i as f64, 1.0 - i as f64)).collect();
        let x = ch.solve(&b);
        let r = m.mul_vec(&x);
        for (ri, bi) in r.iter().zip(&b) {
            assert!((ri - bi).norm() < 1e-12);
        }
        let inv = ch.inverse();
        let eye = m.matmul(&inv);
        for i in 0..6 {
            for j in 0..6 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((eye.get(i, j) - want).abs() < 1e-12);
            }
        }
        let d = ch.inverse_diagonal();
        for i in 0..6 {
            assert!((d[i] - inv.get(i, i)).abs() < 1e-14);
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let m = SymMatrix::from_row_major(2, vec![1.0, 2.0, 2.0, 1.0]);
        assert!(Cholesky::new(&m).is_none());
    }

    #[test]
    fn condition_of_diagonal() {
        let m = SymMatrix::from_row_major(3, vec![4.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 1.0]);
        let ch = Cholesky::new(&m).unwrap();
        let c = condition_estimate(&m, &ch, 200);
        assert!((c - 4.0).abs() < 1e-6, "{c}");
    }

    #[test]
    fn hermitian_cholesky_solves() {
        let n = 4;
        let mut a = CMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let v = if i == j {
                    C64::new(3.0, 0.0)
                } else if i < j {
                    C64::new(0.3, 0.2 * (j - i) as f64)
                } else {
                    C64::new(0.3, -0.2 * (i - j) as f64)
                };
                a.set(i, j, v);
            }
        }
        let ch = HermitianCholesky::new(&a).unwrap();
        let b: Vec<C64> = (0..n).map(|i| C64::new(1.0, i as f64)).collect();
        let x = ch.solve(&b);
        for i in 0..n {
            let mut s = C64::zero();
            for j in 0..n {
                s += a.get(i, j) * x[j];
            }
            assert!((s - b[i]).norm() < 1e-12);
        }
    }
}
