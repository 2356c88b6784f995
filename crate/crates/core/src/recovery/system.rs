//! The power system `M_(rows−1,(l+1)r) · coeffs(q^(l+1)) = 0` in the free
//! coefficients of a monic degree-`r` polynomial `q`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::hankel::moment_matrix;
use crate::moments::MomentSequence;
use crate::poly;
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub(crate) struct PowerSystem<T: Scalar> {
    mat: DMatrix<T>,
    r: usize,
    l: usize,
}

impl<T: Scalar> PowerSystem<T> {
    pub(crate) fn new(m: &MomentSequence<T>, rows: usize, r: usize, l: usize) -> Result<Self> {
        if r == 0 || rows == 0 {
            return Err(Error::InvalidInput("power system needs r ≥ 1".into()));
        }
        let h = moment_matrix(m, rows - 1, (l + 1) * r)?;
        Ok(Self {
            mat: h.matrix().clone(),
            r,
            l,
        })
    }

    /// Divides the matrix by its largest entry and returns that entry.
    pub(crate) fn normalize(&mut self) -> f64 {
        let scale = self.mat.iter().map(|v| v.modulus()).fold(0.0, f64::max);
        if scale > 0.0 {
            self.mat.unscale_mut(scale);
        }
        scale
    }

    pub(crate) fn rows(&self) -> usize {
        self.mat.nrows()
    }

    pub(crate) fn r(&self) -> usize {
        self.r
    }

    pub(crate) fn l(&self) -> usize {
        self.l
    }

    fn check(&self, p: &[T]) -> Result<()> {
        if p.len() != self.r {
            return Err(Error::InvalidInput(format!(
                "expected {} coefficients, got {}",
                self.r,
                p.len()
            )));
        }
        Ok(())
    }

    pub(crate) fn eval(&self, p: &[T]) -> DVector<T> {
        let q = poly::monic(p);
        let full = poly::pow(&q, self.l + 1);
        &self.mat * DVector::from_vec(full)
    }

    pub(crate) fn jacobian(&self, p: &[T]) -> DMatrix<T> {
        let q = poly::monic(p);
        let ql = poly::pow(&q, self.l);
        let factor = T::of((self.l + 1) as f64);
        let rows = self.mat.nrows();
        DMatrix::from_fn(rows, self.r, |row, k| {
            ql.iter()
                .enumerate()
                .fold(T::zero(), |acc, (c, &v)| acc + self.mat[(row, c + k)] * v)
                * factor
        })
    }

    pub(crate) fn eval_checked(&self, p: &[T]) -> Result<Vec<T>> {
        self.check(p)?;
        Ok(self.eval(p).iter().copied().collect())
    }

    pub(crate) fn jacobian_checked(&self, p: &[T]) -> Result<DMatrix<T>> {
        self.check(p)?;
        Ok(self.jacobian(p))
    }
}

/// `M_(r−1,(l+1)r) · coeffs(q^(l+1))` for `q = X^r + Σ p_i X^i`.
pub fn power_system_residual<T: Scalar>(
    m: &MomentSequence<T>,
    r: usize,
    l: usize,
    p: &[T],
) -> Result<Vec<T>> {
    PowerSystem::new(m, r, r, l)?.eval_checked(p)
}

/// Analytic Jacobian of [`power_system_residual`]: column `i` is
/// `M · coeffs((l+1) q^l X^i)`.
pub fn power_system_jacobian<T: Scalar>(
    m: &MomentSequence<T>,
    r: usize,
    l: usize,
    p: &[T],
) -> Result<DMatrix<T>> {
    PowerSystem::new(m, r, r, l)?.jacobian_checked(p)
}

/// `‖M_(rows−1,(l+1)r) · coeffs(q^(l+1))‖₂`.
pub fn power_residual_norm<T: Scalar>(
    m: &MomentSequence<T>,
    rows: usize,
    r: usize,
    l: usize,
    p: &[T],
) -> Result<f64> {
    let sys = PowerSystem::new(m, rows, r, l)?;
    Ok(sys
        .eval_checked(p)?
        .iter()
        .map(|v| v.modulus_squared())
        .sum::<f64>()
        .sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::{local_dirac_moments, LocalDirac, LocalDiracMixture};

    #[test]
    fn quadratic_system_for_two_first_order_components() {
        let m = MomentSequence::new(vec![1.0, 0.3, -0.7, 1.1, 0.4, -2.0]).unwrap();
        let (p0, p1) = (0.37, -1.3);
        let res = power_system_residual(&m, 2, 1, &[p0, p1]).unwrap();
        let c = [p0 * p0, 2.0 * p0 * p1, 2.0 * p0 + p1 * p1, 2.0 * p1, 1.0];
        let v = m.values();
        for (row, &got) in res.iter().enumerate() {
            let want: f64 = c.iter().enumerate().map(|(j, cj)| cj * v[row + j]).sum();
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_order_is_linear_recurrence() {
        let m = MomentSequence::new(vec![1.0, 0.5, 0.5, 0.5, 0.5]).unwrap();
        let res = power_system_residual(&m, 2, 0, &[0.0, -1.0]).unwrap();
        assert!(res.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn truth_annihilates() {
        let mix = LocalDiracMixture::new(vec![
            LocalDirac::new(-0.4, vec![0.6, 0.2]),
            LocalDirac::new(0.9, vec![0.4, -0.3]),
        ])
        .unwrap();
        let m = local_dirac_moments(&mix, 6);
        let p = poly::from_roots(&[-0.4, 0.9]);
        let res = power_system_residual(&m, 2, 1, &p[..2]).unwrap();
        assert!(res.iter().all(|v| v.abs() < 1e-12));
        assert!(power_residual_norm(&m, 3, 2, 1, &p[..2]).unwrap() < 1e-12);
    }

    #[test]
    fn wrong_arity_is_rejected() {
        let m = MomentSequence::new(vec![1.0; 7]).unwrap();
        assert!(power_system_residual(&m, 2, 1, &[1.0]).is_err());
        assert!(power_system_residual(&m, 3, 1, &[1.0, 1.0, 1.0]).is_err());
    }
}
