//! Direct solvers for symmetric tridiagonal systems, optionally bordered by
//! one dense row/column carrying a scalar constraint.

use crate::error::{Error, Result};

/// Relative pivot threshold below which a matrix is treated as singular.
pub(crate) const PIVOT_TOL: f64 = 1e-14;

/// Symmetric tridiagonal matrix written as a weighted path Laplacian plus a
/// diagonal: `off[i] = edges[i]` and
/// `diag[i] = excess[i] - edges[i-1] - edges[i]`.
///
/// Elimination tracks each pivot as `D_i = e_i - edges[i]`, with
///
/// ```text
/// e_i = excess[i] - edges[i-1] e_{i-1} / D_{i-1}
/// ```
///
/// which never subtracts two large nearly equal numbers, so the small
/// diagonal part survives even when the edge weights are `mu / h^2` large.
#[derive(Debug, Clone)]
pub(crate) struct SymTridiag {
    pub edges: Vec<f64>,
    pub excess: Vec<f64>,
}

impl SymTridiag {
    fn scale(&self) -> f64 {
        let e = self.edges.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        let c = self.excess.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        c + 4.0 * e
    }

    fn edge(&self, i: usize) -> f64 {
        self.edges.get(i).copied().unwrap_or(0.0)
    }

    fn pivots(&self, tol: f64) -> Result<Vec<f64>> {
        let n = self.excess.len();
        let mut piv = vec![0.0; n];
        let mut e = self.excess[0];
        piv[0] = e - self.edge(0);
        for i in 1..n {
            check_pivot(i - 1, piv[i - 1], tol)?;
            e = self.excess[i] - self.edges[i - 1] * e / piv[i - 1];
            piv[i] = e - self.edge(i);
        }
        Ok(piv)
    }

    /// LDL^T elimination without pivoting.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.excess.len();
        assert_eq!(rhs.len(), n);
        assert_eq!(self.edges.len() + 1, n);
        let tol = PIVOT_TOL * self.scale();
        let piv = self.pivots(tol)?;
        check_pivot(n - 1, piv[n - 1], tol)?;

        let mut x = rhs.to_vec();
        for i in 1..n {
            x[i] -= self.edges[i - 1] / piv[i - 1] * x[i - 1];
        }
        x[n - 1] /= piv[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = (x[i] - self.edges[i] * x[i + 1]) / piv[i];
        }
        Ok(x)
    }

    /// Solves the bordered system
    ///
    /// ```text
    /// [ A   c ] [x]   [b]
    /// [ c^T 0 ] [l] = [0]
    /// ```
    ///
    /// where `A` may be singular with a one-dimensional null space not
    /// orthogonal to `c`. The leading `n-1` rows are eliminated in order while
    /// the border row is reduced alongside; the trailing 2x2 block in
    /// `(x[n-1], l)` is then solved directly. Returns `(x, l)`.
    pub fn solve_bordered(&self, border: &[f64], rhs: &[f64]) -> Result<(Vec<f64>, f64)> {
        let n = self.excess.len();
        assert_eq!(border.len(), n);
        assert_eq!(rhs.len(), n);
        let tol = PIVOT_TOL * self.scale();
        let piv = self.pivots(tol)?;

        let mut y = rhs.to_vec();
        // coefficient of the multiplier in each eliminated row
        let mut g = border.to_vec();

        // border row: coefficient on the current unknown, on the multiplier, rhs
        let mut r = border[0];
        let mut s = 0.0;
        let mut t = 0.0;

        for i in 0..n - 1 {
            let e = self.edges[i];
            let q = r / piv[i];
            r = border[i + 1] - q * e;
            s -= q * g[i];
            t -= q * y[i];

            let l = e / piv[i];
            y[i + 1] -= l * y[i];
            g[i + 1] -= l * g[i];
        }

        let (a11, a12, b1) = (piv[n - 1], g[n - 1], y[n - 1]);
        let (a21, a22, b2) = (r, s, t);
        let det = a11 * a22 - a12 * a21;
        let det_scale = (a11.abs() + a12.abs()) * (a21.abs() + a22.abs());
        if !(det.abs() > PIVOT_TOL * det_scale) {
            return Err(Error::SingularOperator {
                row: n,
                pivot: det,
                scale: det_scale,
            });
        }
        let last = (b1 * a22 - a12 * b2) / det;
        let mult = (a11 * b2 - a21 * b1) / det;

        let mut x = y;
        x[n - 1] = last;
        for i in (0..n - 1).rev() {
            x[i] = (x[i] - self.edges[i] * x[i + 1] - g[i] * mult) / piv[i];
        }
        Ok((x, mult))
    }
}

fn check_pivot(row: usize, pivot: f64, tol: f64) -> Result<()> {
    if pivot.abs() > tol && pivot.is_finite() {
        Ok(())
    } else {
        Err(Error::SingularOperator {
            row,
            pivot,
            scale: tol / PIVOT_TOL,
        })
    }
}
