//! Small dense complex linear algebra: 2×2 matrices for monodromy and
//! Schlesinger data, and a pivoted Gaussian solver for the series recursion
//! and the Newton fits.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::C64;

/// A 2×2 complex matrix stored row-major as `[[a, b], [c, d]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat2(pub [[C64; 2]; 2]);

impl Mat2 {
    pub fn new(a: C64, b: C64, c: C64, d: C64) -> Self {
        Mat2([[a, b], [c, d]])
    }

    pub fn identity() -> Self {
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        Mat2::new(one, zero, zero, one)
    }

    pub fn diag(a: C64, d: C64) -> Self {
        let zero = C64::new(0.0, 0.0);
        Mat2::new(a, zero, zero, d)
    }

    /// The Pauli matrix σ3 scaled by `s`.
    pub fn sigma3(s: C64) -> Self {
        Mat2::diag(s, -s)
    }

    pub fn trace(&self) -> C64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn det(&self) -> C64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    /// Inverse, or `None` if the determinant vanishes exactly.
    pub fn inverse(&self) -> Option<Self> {
        let d = self.det();
        if d.norm() == 0.0 {
            return None;
        }
        let [[a, b], [c, e]] = self.0;
        Some(Mat2::new(e / d, -b / d, -c / d, a / d))
    }

    /// Eigenvalues `(λ+, λ−)` with `λ± = tr/2 ± √(tr²/4 − det)`.
    pub fn eigenvalues(&self) -> (C64, C64) {
        let h = 0.5 * self.trace();
        let disc = (h * h - self.det()).sqrt();
        (h + disc, h - disc)
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.0
            .iter()
            .flat_map(|r| r.iter())
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn scale(&self, s: C64) -> Self {
        let [[a, b], [c, d]] = self.0;
        Mat2::new(a * s, b * s, c * s, d * s)
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        self.0[i][j]
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        let [[a, b], [c, d]] = self.0;
        let [[e, f], [g, h]] = o.0;
        Mat2::new(a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h)
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        let mut m = self;
        for i in 0..2 {
            for j in 0..2 {
                m.0[i][j] += o.0[i][j];
            }
        }
        m
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, o: Mat2) -> Mat2 {
        self + (-o)
    }
}

impl Neg for Mat2 {
    type Output = Mat2;
    fn neg(self) -> Mat2 {
        self.scale(C64::new(-1.0, 0.0))
    }
}

/// Solves `A x = b` (row-major `a`, n×n) with partial pivoting.
///
/// Returns `None` when a pivot falls below `pivot_tol` times the largest
/// entry of the matrix.
pub fn solve(mut a: Vec<Vec<C64>>, mut b: Vec<C64>, pivot_tol: f64) -> Option<Vec<C64>> {
    let n = b.len();
    let scale = a
        .iter()
        .flat_map(|r| r.iter())
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    if scale == 0.0 {
        return None;
    }
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].norm().total_cmp(&a[j][col].norm()))
            .unwrap();
        if a[piv][col].norm() <= pivot_tol * scale {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f.norm() == 0.0 {
                continue;
            }
            for k in col..n {
                let t = a[col][k];
                a[row][k] -= f * t;
            }
            let t = b[col];
            b[row] -= f * t;
        }
    }
    let mut x = vec![C64::new(0.0, 0.0); n];
    for row in (0..n).rev() {
        let mut s = b[row];
        for k in row + 1..n {
            s -= a[row][k] * x[k];
        }
        x[row] = s / a[row][row];
    }
    Some(x)
}

/// Least-squares solution of the tall system `A x ≈ b` (`rows ≥ cols`) by
/// Householder QR.  Returns `None` when `R` has a diagonal entry below
/// `pivot_tol` times the largest column norm.
pub fn least_squares(mut a: Vec<Vec<C64>>, mut b: Vec<C64>, pivot_tol: f64) -> Option<Vec<C64>> {
    let rows = b.len();
    let cols = a.first().map_or(0, |r| r.len());
    if rows < cols || cols == 0 {
        return None;
    }
    let col_norm = |a: &Vec<Vec<C64>>, j: usize, from: usize| -> f64 {
        (from..rows).map(|i| a[i][j].norm_sqr()).sum::<f64>().sqrt()
    };
    let scale = (0..cols).map(|j| col_norm(&a, j, 0)).fold(0.0, f64::max);
    if scale == 0.0 {
        return None;
    }
    for k in 0..cols {
        let norm = col_norm(&a, k, k);
        if norm <= pivot_tol * scale {
            return None;
        }
        // v = x + e^{i arg x_k} ‖x‖ e_k, reflect to −e^{i arg x_k} ‖x‖ e_k
        let phase = if a[k][k].norm() == 0.0 {
            C64::new(1.0, 0.0)
        } else {
            a[k][k] / a[k][k].norm()
        };
        let mut v: Vec<C64> = (k..rows).map(|i| a[i][k]).collect();
        v[0] += phase * norm;
        let vnorm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        for j in k..cols {
            let dot: C64 = (k..rows).map(|i| v[i - k].conj() * a[i][j]).sum();
            let f = 2.0 * dot / vnorm2;
            for i in k..rows {
                a[i][j] -= f * v[i - k];
            }
        }
        let dot: C64 = (k..rows).map(|i| v[i - k].conj() * b[i]).sum();
        let f = 2.0 * dot / vnorm2;
        for i in k..rows {
            b[i] -= f * v[i - k];
        }
    }
    let mut x = vec![C64::new(0.0, 0.0); cols];
    for row in (0..cols).rev() {
        let mut s = b[row];
        for k in row + 1..cols {
            s -= a[row][k] * x[k];
        }
        x[row] = s / a[row][row];
    }
    Some(x)
}
