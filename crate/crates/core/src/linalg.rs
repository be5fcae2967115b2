//! Dense complex linear systems, sized for a handful of coupled modes.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Condition-number ceiling past which a steady-state system is treated as
/// numerically singular rather than solved.
pub const MAX_CONDITION: f64 = 1e12;

/// Row-major square complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.n + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, v: Complex64) {
        self.data[row * self.n + col] = v;
    }

    /// Maximum row sum of entry magnitudes.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|r| (0..self.n).map(|c| self.at(r, c).norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Solution of `self * x = rhs` by LU with partial pivoting.
    pub fn solve(&self, rhs: &[Complex64]) -> Result<Vec<Complex64>> {
        assert_eq!(rhs.len(), self.n);
        let mut lu = self.data.clone();
        let perm = lu_factor(self.n, &mut lu).ok_or(Error::SingularSystem {
            cond: f64::INFINITY,
        })?;
        let mut x = rhs.to_vec();
        lu_apply(self.n, &lu, &perm, &mut x);
        Ok(x)
    }

    /// Explicit inverse, column by column from one factorization.
    pub fn inverse(&self) -> Result<CMatrix> {
        let mut lu = self.data.clone();
        let perm = lu_factor(self.n, &mut lu).ok_or(Error::SingularSystem {
            cond: f64::INFINITY,
        })?;
        let mut inv = CMatrix::zeros(self.n);
        let mut col = vec![Complex64::new(0.0, 0.0); self.n];
        for j in 0..self.n {
            col.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
            col[j] = Complex64::new(1.0, 0.0);
            lu_apply(self.n, &lu, &perm, &mut col);
            for (i, v) in col.iter().enumerate() {
                inv.set(i, j, *v);
            }
        }
        Ok(inv)
    }

    /// Condition estimate ||A|| * ||A^-1|| in the infinity norm, from the
    /// explicit inverse. Infinite when the factorization hits a zero pivot.
    pub fn condition(&self) -> f64 {
        match self.inverse() {
            Ok(inv) => self.norm_inf() * inv.norm_inf(),
            Err(_) => f64::INFINITY,
        }
    }
}

/// Solve with a singularity guard: the system is rejected when the
/// condition estimate exceeds [`MAX_CONDITION`].
pub fn solve_checked(a: &CMatrix, rhs: &[Complex64]) -> Result<Vec<Complex64>> {
    let cond = a.condition();
    if !cond.is_finite() || cond > MAX_CONDITION {
        return Err(Error::SingularSystem { cond });
    }
    a.solve(rhs)
}

fn lu_factor(n: usize, data: &mut [Complex64]) -> Option<Vec<usize>> {
    let mut perm = vec![0usize; n];
    for k in 0..n {
        let mut p = k;
        let mut best = data[k * n + k].norm_sqr();
        for r in k + 1..n {
            let v = data[r * n + k].norm_sqr();
            if v > best {
                best = v;
                p = r;
            }
        }
        if best == 0.0 {
            return None;
        }
        if p != k {
            for c in 0..n {
                data.swap(k * n + c, p * n + c);
            }
        }
        perm[k] = p;
        let piv = data[k * n + k];
        for r in k + 1..n {
            let f = data[r * n + k] / piv;
            data[r * n + k] = f;
            for c in k + 1..n {
                let t = data[k * n + c];
                data[r * n + c] -= f * t;
            }
        }
    }
    Some(perm)
}

fn lu_apply(n: usize, lu: &[Complex64], perm: &[usize], b: &mut [Complex64]) {
    // all interchanges first: the stored multipliers are the post-swap rows,
    // so interleaving swaps with the forward solve pairs later rows with the
    // wrong multipliers
    for k in 0..n {
        b.swap(k, perm[k]);
    }
    for k in 0..n {
        let bk = b[k];
        for r in k + 1..n {
            b[r] -= lu[r * n + k] * bk;
        }
    }
    for k in (0..n).rev() {
        for c in k + 1..n {
            let bc = b[c];
            b[k] -= lu[k * n + c] * bc;
        }
        b[k] /= lu[k * n + k];
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn identity_solve_returns_rhs() {
        let mut m = CMatrix::zeros(3);
        for i in 0..3 {
            m.set(i, i, c(1.0, 0.0));
        }
        let rhs = [c(1.0, 2.0), c(-3.0, 0.5), c(0.0, -1.0)];
        let x = m.solve(&rhs).unwrap();
        assert_eq!(x, rhs.to_vec());
    }

    #[test]
    fn known_2x2_system() {
        // [1+i, 2; 0, 3i] x = [3+i, 6i] -> x = [1+... ] check by residual
        let mut m = CMatrix::zeros(2);
        m.set(0, 0, c(1.0, 1.0));
        m.set(0, 1, c(2.0, 0.0));
        m.set(1, 1, c(0.0, 3.0));
        let rhs = [c(3.0, 1.0), c(6.0, 0.0)];
        let x = m.solve(&rhs).unwrap();
        for r in 0..2 {
            let lhs: Complex64 = (0..2).map(|cix| m.at(r, cix) * x[cix]).sum();
            assert!((lhs - rhs[r]).norm() < 1e-12);
        }
    }

    #[test]
    fn residual_is_tiny_for_random_like_3x3() {
        let mut m = CMatrix::zeros(3);
        let entries = [
            (0, 0, 2.0, -1.0),
            (0, 1, 0.5, 0.2),
            (0, 2, -1.0, 0.0),
            (1, 0, 0.0, 1.5),
            (1, 1, 3.0, 0.0),
            (1, 2, 0.25, -0.75),
            (2, 0, 1.0, 1.0),
            (2, 1, -0.5, 0.0),
            (2, 2, 0.0, -2.0),
        ];
        for (r, cix, re, im) in entries {
            m.set(r, cix, c(re, im));
        }
        let rhs = [c(1.0, 0.0), c(0.0, 1.0), c(2.0, -3.0)];
        let x = m.solve(&rhs).unwrap();
        for r in 0..3 {
            let lhs: Complex64 = (0..3).map(|cix| m.at(r, cix) * x[cix]).sum();
            assert!((lhs - rhs[r]).norm() < 1e-13 * m.norm_inf());
        }
    }

    #[test]
    fn pivot_swap_in_the_middle_of_elimination_stays_exact() {
        // tridiagonal chain whose second pivot loses to the row below it:
        // the (2,1) entry dominates the reduced (1,1) entry, forcing a swap
        // at step 1. Residual check guards the interchange bookkeeping.
        let mut m = CMatrix::zeros(3);
        m.set(0, 0, c(73928.85, 1.556e9));
        m.set(0, 1, c(0.0, 6.13e4));
        m.set(1, 0, c(0.0, 6.13e4));
        m.set(1, 1, c(2.43e4, 2.29e5));
        m.set(1, 2, c(0.0, 1.356e6));
        m.set(2, 1, c(0.0, -1.356e6));
        m.set(2, 2, c(3.53e6, 2.29e5));
        let rhs = [c(313.8, 0.0), c(0.0, 0.0), c(0.0, 0.0)];
        let x = m.solve(&rhs).unwrap();
        for r in 0..3 {
            let lhs: Complex64 = (0..3).map(|cix| m.at(r, cix) * x[cix]).sum();
            assert!(
                (lhs - rhs[r]).norm() < 1e-12 * m.norm_inf() * 313.8,
                "row {r} residual {:.3e}",
                (lhs - rhs[r]).norm()
            );
        }
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let mut m = CMatrix::zeros(2);
        m.set(0, 0, c(1.0, 0.0));
        m.set(0, 1, c(2.0, 0.0));
        m.set(1, 0, c(2.0, 0.0));
        m.set(1, 1, c(4.0, 0.0));
        match solve_checked(&m, &[c(1.0, 0.0), c(1.0, 0.0)]) {
            Err(Error::SingularSystem { .. }) => {}
            other => panic!("expected SingularSystem, got {other:?}"),
        }
    }

    #[test]
    fn ill_conditioned_matrix_trips_the_guard() {
        let mut m = CMatrix::zeros(2);
        m.set(0, 0, c(1.0, 0.0));
        m.set(1, 1, c(1e-13, 0.0));
        assert!(m.condition() > MAX_CONDITION);
        assert!(matches!(
            solve_checked(&m, &[c(1.0, 0.0), c(1.0, 0.0)]),
            Err(Error::SingularSystem { .. })
        ));
    }

    #[test]
    fn inverse_times_matrix_is_identity() {
        let mut m = CMatrix::zeros(2);
        m.set(0, 0, c(1.0, 1.0));
        m.set(0, 1, c(2.0, 0.0));
        m.set(1, 0, c(0.0, -1.0));
        m.set(1, 1, c(1.0, 0.0));
        let inv = m.inverse().unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let s: Complex64 = (0..2).map(|k| m.at(i, k) * inv.at(k, j)).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((s - c(expect, 0.0)).norm() < 1e-14);
            }
        }
    }
}
