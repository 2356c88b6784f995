//! Confluent Vandermonde least-squares solve for weight coefficients.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::moments::MomentSequence;
use crate::scalar::Scalar;

use super::DEFAULT_CLUSTER_TOL;

/// Weights `λ_(j,k)` with conditioning diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct WeightSolution<T> {
    pub lambdas: Vec<Vec<T>>,
    /// Ratio of extreme singular values of the system matrix.
    pub condition: f64,
    /// `‖V λ − m‖₂`.
    pub residual: f64,
}

/// Rows `i = 0..=d`, one block of columns `k = 0..=l_j` per support point,
/// with entries `i!/(i−k)! · ξ_j^(i−k)`.
pub fn confluent_vandermonde_matrix<T: Scalar>(
    xis: &[T],
    orders: &[usize],
    d: usize,
) -> DMatrix<T> {
    let cols: usize = orders.iter().map(|l| l + 1).sum();
    let mut v = DMatrix::zeros(d + 1, cols);
    let mut c = 0;
    for (&xi, &l) in xis.iter().zip(orders) {
        for k in 0..=l {
            for i in k..=d {
                v[(i, c)] = T::falling_factorial(i, k) * xi.powi((i - k) as i32);
            }
            c += 1;
        }
    }
    v
}

/// Solves for the weights of components of common order `l`.
pub fn confluent_vandermonde_weights<T: Scalar>(
    xis: &[T],
    l: usize,
    m: &MomentSequence<T>,
    d: usize,
) -> Result<WeightSolution<T>> {
    confluent_vandermonde_weights_mixed(xis, &vec![l; xis.len()], m, d)
}

/// Solves for the weights of components with individual orders `l_j`.
pub fn confluent_vandermonde_weights_mixed<T: Scalar>(
    xis: &[T],
    orders: &[usize],
    m: &MomentSequence<T>,
    d: usize,
) -> Result<WeightSolution<T>> {
    if xis.len() != orders.len() {
        return Err(Error::InvalidInput(
            "one order per support point is required".into(),
        ));
    }
    if xis.is_empty() {
        return Err(Error::InvalidInput("no support points".into()));
    }
    let unknowns: usize = orders.iter().map(|l| l + 1).sum();
    if d + 1 < unknowns {
        return Err(Error::InsufficientMoments {
            needed: unknowns,
            available: d + 1,
        });
    }
    if m.degree() < d {
        return Err(Error::InsufficientMoments {
            needed: d + 1,
            available: m.len(),
        });
    }
    for a in 0..xis.len() {
        for b in a + 1..xis.len() {
            let (x, y) = (xis[a], xis[b]);
            let scale = x.modulus().max(y.modulus()).max(1.0);
            if (x - y).modulus() <= DEFAULT_CLUSTER_TOL * scale {
                return Err(Error::DuplicateSupport(format!(
                    "components {a} and {b} share a support point"
                )));
            }
        }
    }
    let v = confluent_vandermonde_matrix(xis, orders, d);
    let rhs = DVector::from_column_slice(&m.values()[..=d]);
    let svd = v.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition = if smin > 0.0 {
        smax / smin
    } else {
        f64::INFINITY
    };
    let sol = svd
        .solve(&rhs, 0.0)
        .map_err(|e| Error::LinearAlgebra(e.to_string()))?;
    let residual = (&v * &sol - &rhs).norm();
    let mut lambdas = Vec::with_capacity(xis.len());
    let mut c = 0;
    for &l in orders {
        lambdas.push(sol.rows(c, l + 1).iter().copied().collect());
        c += l + 1;
    }
    Ok(WeightSolution {
        lambdas,
        condition,
        residual,
    })
}

/// Gauss–Newton polish of support points and weights on `‖V(ξ) λ − m‖₂`.
/// Steps are kept only while the residual decreases.
pub fn polish_support<T: Scalar>(
    xis: &mut [T],
    orders: &[usize],
    lambdas: &mut [Vec<T>],
    m: &MomentSequence<T>,
    d: usize,
    max_steps: usize,
) -> f64 {
    let rhs = DVector::from_column_slice(&m.values()[..=d]);
    let residual = |xis: &[T], lambdas: &[Vec<T>]| {
        let v = confluent_vandermonde_matrix(xis, orders, d);
        let w: Vec<T> = lambdas.iter().flatten().copied().collect();
        (&v * DVector::from_vec(w) - &rhs).norm()
    };
    let mut best = residual(xis, lambdas);
    let unknowns: usize = orders.iter().map(|l| l + 2).sum();
    if d + 1 < unknowns {
        return best;
    }
    for _ in 0..max_steps {
        if best == 0.0 {
            break;
        }
        let v = confluent_vandermonde_matrix(xis, orders, d);
        let w: Vec<T> = lambdas.iter().flatten().copied().collect();
        let f = &v * DVector::from_vec(w) - &rhs;
        let wider: Vec<usize> = orders.iter().map(|l| l + 1).collect();
        let dv = confluent_vandermonde_matrix(xis, &wider, d);
        let mut jac = DMatrix::zeros(d + 1, unknowns);
        let (mut c, mut cw) = (0, 0);
        for (j, &l) in orders.iter().enumerate() {
            for k in 0..=l {
                jac.set_column(c + k, &v.column(cw - j + k));
                // ∂/∂ξ of column k is column k + 1 of the next order
                let col = dv.column(cw + k + 1) * lambdas[j][k];
                let mut acc = jac.column(c + l + 1).clone_owned();
                acc += col;
                jac.set_column(c + l + 1, &acc);
            }
            c += l + 2;
            cw += l + 2;
        }
        let Ok(step) = jac.svd(true, true).solve(&f, 0.0) else {
            break;
        };
        let mut nx = xis.to_vec();
        let mut nl = lambdas.to_vec();
        let mut c = 0;
        for (j, &l) in orders.iter().enumerate() {
            for k in 0..=l {
                nl[j][k] -= step[c + k];
            }
            nx[j] -= step[c + l + 1];
            c += l + 2;
        }
        let r = residual(&nx, &nl);
        if !(r < best) {
            break;
        }
        best = r;
        xis.copy_from_slice(&nx);
        lambdas.clone_from_slice(&nl);
    }
    best
}
