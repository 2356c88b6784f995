//! Truncated Hankel moment matrices, numerical rank and kernel extraction.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::moments::MomentSequence;
use crate::scalar::Scalar;

/// Default relative singular-value threshold.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

/// The `(a+1) × (b+1)` matrix `(m_(i+j))`.
#[derive(Debug, Clone, PartialEq)]
pub struct HankelMatrix<T: Scalar> {
    a: usize,
    b: usize,
    entries: DMatrix<T>,
    source: MomentSequence<T>,
}

impl<T: Scalar> HankelMatrix<T> {
    pub fn rows(&self) -> usize {
        self.a + 1
    }

    pub fn cols(&self) -> usize {
        self.b + 1
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.entries[(i, j)]
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.entries
    }

    pub fn source(&self) -> &MomentSequence<T> {
        &self.source
    }

    /// Singular values in decreasing order.
    pub fn singular_values(&self) -> Vec<f64> {
        singular_values(&self.entries)
    }

    /// `M · v`.
    pub fn apply(&self, v: &[T]) -> Result<Vec<T>> {
        if v.len() != self.cols() {
            return Err(Error::InvalidInput(format!(
                "vector of length {} does not match {} columns",
                v.len(),
                self.cols()
            )));
        }
        Ok((&self.entries * DVector::from_column_slice(v))
            .iter()
            .copied()
            .collect())
    }
}

/// Builds `M_(a,b)`.
pub fn moment_matrix<T: Scalar>(
    m: &MomentSequence<T>,
    a: usize,
    b: usize,
) -> Result<HankelMatrix<T>> {
    if m.len() < a + b + 1 {
        return Err(Error::InsufficientMoments {
            needed: a + b + 1,
            available: m.len(),
        });
    }
    let v = m.values();
    let entries = DMatrix::from_fn(a + 1, b + 1, |i, j| v[i + j]);
    Ok(HankelMatrix {
        a,
        b,
        entries,
        source: m.clone(),
    })
}

pub(crate) fn singular_values<T: Scalar>(mat: &DMatrix<T>) -> Vec<f64> {
    if mat.is_empty() {
        return Vec::new();
    }
    let mut sv: Vec<f64> = mat.clone().singular_values().iter().copied().collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    sv
}

fn rank_of(sv: &[f64], rel_tol: f64) -> usize {
    match sv.first() {
        Some(&top) if top > 0.0 => sv.iter().filter(|&&s| s > rel_tol * top).count(),
        _ => 0,
    }
}

/// Number of singular values above `rel_tol` times the largest.
pub fn numeric_rank<T: Scalar>(h: &HankelMatrix<T>, rel_tol: f64) -> usize {
    rank_of(&h.singular_values(), rel_tol)
}

/// Ranks of `M_(s,s)` for every `s` the sequence supports.
pub fn rank_profile<T: Scalar>(m: &MomentSequence<T>, rel_tol: f64) -> Vec<usize> {
    (0..=m.degree() / 2)
        .map(|s| {
            moment_matrix(m, s, s)
                .map(|h| numeric_rank(&h, rel_tol))
                .unwrap_or(0)
        })
        .collect()
}

/// Monic generator of the kernel of `M_(s−1,s)`, ascending coefficients.
///
/// The degree is the stabilized rank `r' = rank M_(s−1,s−1)`. When `m_(2s)`
/// is available the rank of `M_(s,s)` must agree; otherwise the rank of
/// `M_(s−1,s)` is compared instead.
pub fn kernel_polynomial<T: Scalar>(
    m: &MomentSequence<T>,
    s: usize,
    rel_tol: f64,
) -> Result<Vec<T>> {
    if s == 0 {
        return Err(Error::InvalidInput("kernel polynomial needs s ≥ 1".into()));
    }
    if m.len() < 2 * s {
        return Err(Error::InsufficientMoments {
            needed: 2 * s,
            available: m.len(),
        });
    }
    let lower = numeric_rank(&moment_matrix(m, s - 1, s - 1)?, rel_tol);
    let upper = if m.len() > 2 * s {
        numeric_rank(&moment_matrix(m, s, s)?, rel_tol)
    } else {
        numeric_rank(&moment_matrix(m, s - 1, s)?, rel_tol)
    };
    if lower != upper {
        return Err(Error::RankCondition { lower, upper });
    }
    let r = lower;
    if r == 0 {
        return Ok(vec![T::one()]);
    }
    let h = moment_matrix(m, s - 1, s)?;
    let cols = h.matrix().columns(0, r + 1).into_owned();
    let mut null = null_vector(&cols)?;
    let lead = null[r];
    if lead.modulus() <= f64::EPSILON * null.iter().map(|c| c.modulus()).fold(0.0, f64::max) {
        return Err(Error::LinearAlgebra(
            "kernel vector has vanishing leading coefficient".into(),
        ));
    }
    for c in null.iter_mut() {
        *c /= lead;
    }
    null[r] = T::one();
    Ok(null)
}

/// Right singular vector of the smallest singular value.
pub(crate) fn null_vector<T: Scalar>(mat: &DMatrix<T>) -> Result<Vec<T>> {
    let (rows, cols) = mat.shape();
    let padded = if rows < cols {
        let mut p = DMatrix::zeros(cols, cols);
        p.view_mut((0, 0), (rows, cols)).copy_from(mat);
        p
    } else {
        mat.clone()
    };
    let svd = padded.svd(false, true);
    let vt = svd
        .v_t
        .ok_or_else(|| Error::LinearAlgebra("singular value decomposition failed".into()))?;
    let (idx, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(y.1))
        .ok_or_else(|| Error::LinearAlgebra("empty matrix".into()))?;
    Ok(vt.row(idx).iter().map(|v| v.conjugate()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::{local_dirac_moments, LocalDirac, LocalDiracMixture};
    use crate::poly;
    use num_complex::Complex64;

    fn seq(v: &[f64]) -> MomentSequence<f64> {
        MomentSequence::new(v.to_vec()).unwrap()
    }

    #[test]
    fn matrix_entries() {
        let h = moment_matrix(&seq(&[1.0, 3.0, 8.0, 20.0]), 1, 1).unwrap();
        assert_eq!(
            h.matrix(),
            &DMatrix::from_row_slice(2, 2, &[1.0, 3.0, 3.0, 8.0])
        );
        let h0 = moment_matrix(&seq(&[7.0]), 0, 0).unwrap();
        assert_eq!(h0.get(0, 0), 7.0);
        assert!(matches!(
            moment_matrix(&seq(&[1.0, 2.0]), 1, 1),
            Err(Error::InsufficientMoments {
                needed: 3,
                available: 2
            })
        ));
    }

    #[test]
    fn ranks() {
        let h = moment_matrix(&seq(&[1.0, 0.0, 0.0]), 1, 1).unwrap();
        assert_eq!(numeric_rank(&h, 1e-8), 1);
        let z = moment_matrix(&seq(&[0.0, 0.0, 0.0]), 1, 1).unwrap();
        assert_eq!(numeric_rank(&z, 1e-8), 0);
        let one = LocalDiracMixture::new(vec![LocalDirac::new(2.0, vec![1.0, 1.0])]).unwrap();
        let m = local_dirac_moments(&one, 4);
        assert_eq!(numeric_rank(&moment_matrix(&m, 2, 2).unwrap(), 1e-8), 2);
        let two = LocalDiracMixture::new(vec![
            LocalDirac::new(-0.5, vec![1.0, 0.3]),
            LocalDirac::new(0.7, vec![0.8, -0.4]),
        ])
        .unwrap();
        let m = local_dirac_moments(&two, 8);
        assert_eq!(numeric_rank(&moment_matrix(&m, 4, 4).unwrap(), 1e-8), 4);
        assert_eq!(rank_profile(&m, 1e-8), vec![1, 2, 3, 4, 4]);
    }

    #[test]
    fn kernel_of_two_diracs() {
        let p = kernel_polynomial(&seq(&[1.0, 0.5, 0.5, 0.5, 0.5]), 2, 1e-8).unwrap();
        let expected = [0.0, -1.0, 1.0];
        for (a, b) in p.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12, "{p:?}");
        }
    }

    #[test]
    fn kernel_of_first_order_dirac() {
        let one = LocalDiracMixture::new(vec![LocalDirac::new(2.0, vec![1.0, 1.0])]).unwrap();
        let m = local_dirac_moments(&one, 4);
        let p = kernel_polynomial(&m, 2, 1e-8).unwrap();
        for (a, b) in p.iter().zip([4.0, -4.0, 1.0]) {
            assert!((a - b).abs() < 1e-9, "{p:?}");
        }
    }

    #[test]
    fn kernel_of_delta_at_origin() {
        let p = kernel_polynomial(&seq(&[1.0, 0.0, 0.0]), 1, 1e-8).unwrap();
        assert_eq!(p.len(), 2);
        assert!(p[0].abs() < 1e-15 && p[1] == 1.0);
        let p = kernel_polynomial(&seq(&[1.0, 0.0]), 1, 1e-8).unwrap();
        assert!(p[0].abs() < 1e-15);
    }

    #[test]
    fn kernel_rejects_rank_jump() {
        assert!(matches!(
            kernel_polynomial(&seq(&[1.0, 0.5, 0.5, 0.5, 0.7]), 1, 1e-8),
            Err(Error::RankCondition { lower: 1, upper: 2 })
        ));
        assert!(kernel_polynomial(&seq(&[1.0, 0.5, 0.5]), 2, 1e-8).is_err());
    }

    #[test]
    fn complex_kernel() {
        let xs = [Complex64::new(0.0, 1.0), Complex64::new(-0.6, -0.8)];
        let mix = LocalDiracMixture::new(
            xs.iter()
                .map(|&x| LocalDirac::new(x, vec![Complex64::new(0.5, 0.2)]))
                .collect(),
        )
        .unwrap();
        let m = local_dirac_moments(&mix, 4);
        let p = kernel_polynomial(&m, 2, 1e-8).unwrap();
        let expected = poly::from_roots(&xs);
        for (a, b) in p.iter().zip(&expected) {
            assert!((a - b).norm() < 1e-10);
        }
    }
}
