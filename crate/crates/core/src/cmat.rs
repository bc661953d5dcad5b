//! Minimal dense complex matrix used for per-trial channel draws.

use num_complex::Complex64;
use rand::Rng;

use crate::rng::cn;

/// Row-major `rows × cols` complex matrix. A channel `G_{a,b}` is stored
/// with one row per antenna at `a` and one column per antenna at `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Complex64>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    /// i.i.d. CN(0, variance) entries.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize, variance: f64) -> Self {
        Self {
            rows,
            cols,
            data: (0..rows * cols).map(|_| cn(rng, variance)).collect(),
        }
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.cols + c]
    }

    /// `Gᵀ x` for `x` of length `rows`.
    pub fn t_mul(&self, x: &[Complex64]) -> Vec<Complex64> {
        debug_assert_eq!(x.len(), self.rows);
        let mut out = vec![Complex64::new(0.0, 0.0); self.cols];
        for (r, xr) in x.iter().enumerate() {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            for (o, g) in out.iter_mut().zip(row) {
                *o += g * xr;
            }
        }
        out
    }

    /// `G y` for `y` of length `cols`.
    pub fn mul(&self, y: &[Complex64]) -> Vec<Complex64> {
        debug_assert_eq!(y.len(), self.cols);
        self.data
            .chunks_exact(self.cols)
            .map(|row| row.iter().zip(y).map(|(g, v)| g * v).sum())
            .collect()
    }
}

/// Plain bilinear product `aᵀ b` (no conjugation).
#[inline]
pub fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Hermitian product `aᴴ b`.
#[inline]
pub fn hdot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn conj(a: &[Complex64]) -> Vec<Complex64> {
    a.iter().map(|z| z.conj()).collect()
}

pub fn norm_sqr(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

/// `acc += s · x`.
#[inline]
pub fn axpy(acc: &mut [Complex64], s: Complex64, x: &[Complex64]) {
    for (a, v) in acc.iter_mut().zip(x) {
        *a += s * v;
    }
}
