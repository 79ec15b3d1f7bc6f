//! Uniform grid on [0, 1] with second-order zero-flux operators.
//!
//! Boundary rows use mirror ghost nodes, so under trapezoid weights the
//! discrete Laplacian is self-adjoint:
//!
//! ```text
//! sum_i w_i u_i (Lap v)_i = -(1/h) sum_edges (u_{i+1}-u_i)(v_{i+1}-v_i)
//! ```
//!
//! [`Grid::dirichlet_energy`] is the matching discrete `int (u')^2`; with it,
//! integration-by-parts identities hold to rounding.

mod tridiag;

use std::ops::Deref;

use serde::Serialize;

use crate::error::{Error, Result};
pub(crate) use tridiag::SymTridiag;

/// Nodal values attached to a [`Grid`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Field(Vec<f64>);

impl Field {
    pub fn new(values: Vec<f64>) -> Self {
        Field(values)
    }

    pub fn constant(n: usize, value: f64) -> Self {
        Field(vec![value; n])
    }

    pub fn zeros(n: usize) -> Self {
        Field(vec![0.0; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field(self.0.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Field {
        assert_eq!(self.len(), other.len(), "field length mismatch");
        Field(self.0.iter().zip(&other.0).map(|(&a, &b)| f(a, b)).collect())
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Index of the first largest entry.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.0.iter().enumerate() {
            if v > self.0[best] {
                best = i;
            }
        }
        best
    }

    /// Index of the first smallest entry.
    pub fn argmin(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.0.iter().enumerate() {
            if v < self.0[best] {
                best = i;
            }
        }
        best
    }

    pub fn sup_norm(&self) -> f64 {
        self.0.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    pub fn sup_distance(&self, other: &Field) -> f64 {
        assert_eq!(self.len(), other.len(), "field length mismatch");
        self.0
            .iter()
            .zip(&other.0)
            .fold(0.0, |a, (x, y)| a.max((x - y).abs()))
    }
}

impl Deref for Field {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for Field {
    fn from(v: Vec<f64>) -> Self {
        Field(v)
    }
}

impl FromIterator<f64> for Field {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        Field(iter.into_iter().collect())
    }
}

/// Result of [`Grid::solve_neumann_poisson_zero_mean`].
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonSolution {
    pub rho: Field,
    /// Mean that was projected out of an incompatible right-hand side.
    pub incompatible_mean: Option<f64>,
}

/// Uniform grid `x_i = i / (n - 1)` on [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid {
    n: usize,
}

impl Grid {
    pub const DEFAULT_NODES: usize = 1025;

    pub fn new(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidArgument(format!(
                "grid needs at least 3 nodes, got {n}"
            )));
        }
        Ok(Grid { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        1.0 / (self.n - 1) as f64
    }

    /// `1/h^2`, exact because `n - 1` is an integer.
    pub fn inv_h2(&self) -> f64 {
        let k = (self.n - 1) as f64;
        k * k
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 / (self.n - 1) as f64
    }

    pub fn nodes(&self) -> Field {
        (0..self.n).map(|i| self.x(i)).collect()
    }

    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Field {
        (0..self.n).map(|i| f(self.x(i))).collect()
    }

    /// Trapezoid weight of node `i`.
    pub fn weight(&self, i: usize) -> f64 {
        if i == 0 || i == self.n - 1 {
            0.5 * self.h()
        } else {
            self.h()
        }
    }

    fn check(&self, u: &[f64]) {
        assert_eq!(u.len(), self.n, "field does not match grid");
    }

    /// Zero-flux Laplacian with mirror ghost nodes.
    pub fn laplacian(&self, u: &[f64]) -> Field {
        self.check(u);
        let n = self.n;
        let k = self.inv_h2();
        let mut out = Vec::with_capacity(n);
        out.push(2.0 * (u[1] - u[0]) * k);
        for i in 1..n - 1 {
            // difference form keeps cancellation exact for smooth data
            out.push(((u[i - 1] - u[i]) + (u[i + 1] - u[i])) * k);
        }
        out.push(2.0 * (u[n - 2] - u[n - 1]) * k);
        Field(out)
    }

    /// Central differences inside, second-order one-sided at the ends.
    pub fn derivative(&self, u: &[f64]) -> Field {
        self.check(u);
        let n = self.n;
        let inv_2h = 0.5 * (n - 1) as f64;
        let mut out = Vec::with_capacity(n);
        out.push((-3.0 * u[0] + 4.0 * u[1] - u[2]) * inv_2h);
        for i in 1..n - 1 {
            out.push((u[i + 1] - u[i - 1]) * inv_2h);
        }
        out.push((3.0 * u[n - 1] - 4.0 * u[n - 2] + u[n - 3]) * inv_2h);
        Field(out)
    }

    /// Composite trapezoid rule.
    pub fn integrate(&self, u: &[f64]) -> f64 {
        self.check(u);
        let n = self.n;
        let inner: f64 = u[1..n - 1].iter().sum();
        (inner + 0.5 * (u[0] + u[n - 1])) * self.h()
    }

    /// Trapezoid integral of a pointwise product.
    pub fn integrate_product(&self, u: &[f64], v: &[f64]) -> f64 {
        self.check(u);
        self.check(v);
        let n = self.n;
        let inner: f64 = (1..n - 1).map(|i| u[i] * v[i]).sum();
        (inner + 0.5 * (u[0] * v[0] + u[n - 1] * v[n - 1])) * self.h()
    }

    /// Discrete `int_0^1 (u')^2`, the quadratic form of the Laplacian.
    pub fn dirichlet_energy(&self, u: &[f64]) -> f64 {
        self.check(u);
        let sum: f64 = u.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum();
        sum * (self.n - 1) as f64
    }

    /// Symmetrized matrix of `mu * Lap + diag(c)`: boundary rows halved.
    pub(crate) fn helmholtz_matrix(&self, mu: f64, c: &[f64]) -> SymTridiag {
        self.check(c);
        let n = self.n;
        let k = mu * self.inv_h2();
        let mut excess = c.to_vec();
        excess[0] *= 0.5;
        excess[n - 1] *= 0.5;
        SymTridiag {
            edges: vec![k; n - 1],
            excess,
        }
    }

    /// Solves `(mu * Lap + diag(c)) v = rhs` with zero-flux rows.
    pub fn solve_helmholtz(&self, mu: f64, c: &[f64], rhs: &[f64]) -> Result<Field> {
        self.check(rhs);
        if !(mu > 0.0) {
            return Err(Error::InvalidArgument(format!("mu must be positive, got {mu}")));
        }
        let m = self.helmholtz_matrix(mu, c);
        let n = self.n;
        let mut b = rhs.to_vec();
        b[0] *= 0.5;
        b[n - 1] *= 0.5;
        m.solve(&b).map(Field)
    }

    /// Zero-mean solution of `Lap rho = -(rhs - mean(rhs))`.
    ///
    /// Uses the bordered system `[K c; c^T 0]` where `K = h W Lap` is the
    /// symmetric path Laplacian and `c` holds the relative trapezoid weights.
    pub fn solve_neumann_poisson_zero_mean(&self, rhs: &[f64]) -> Result<PoissonSolution> {
        self.check(rhs);
        let n = self.n;
        let h = self.h();
        let mean = self.integrate(rhs);
        let scale = rhs.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        let incompatible_mean = (mean.abs() > 1e-6 * scale).then_some(mean);

        let rel_w: Vec<f64> = (0..n).map(|i| self.weight(i) / h).collect();
        let k = SymTridiag {
            edges: vec![1.0; n - 1],
            excess: vec![0.0; n],
        };
        // h W Lap rho = -h W f  =>  K rho = -h^2 c f
        let b: Vec<f64> = rhs
            .iter()
            .zip(&rel_w)
            .map(|(&f, &w)| -h * h * w * (f - mean))
            .collect();
        let (rho, _) = k.solve_bordered(&rel_w, &b)?;
        Ok(PoissonSolution {
            rho: Field(rho),
            incompatible_mean,
        })
    }
}
