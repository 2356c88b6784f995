//! Moment sequences, closed-form moment generators, cumulants and
//! moment-generating-function (de)convolution.
//!
//! Factorials and binomials are formed in floating point by iterated
//! multiplication; degrees up to 30 are supported.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{binomial_table, Scalar};

/// Tolerance for accepting `m_0` as 1 in operations that require normalized input.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Moments `m_0, …, m_d`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSequence<T> {
    values: Vec<T>,
    normalized: bool,
}

impl<T: Scalar> MomentSequence<T> {
    /// A projective (not necessarily normalized) moment vector.
    pub fn new(values: Vec<T>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput(
                "moment sequence must contain m_0".into(),
            ));
        }
        Ok(Self {
            values,
            normalized: false,
        })
    }

    /// A moment vector with `m_0 = 1` exactly.
    pub fn normalized(values: Vec<T>) -> Result<Self> {
        let mut m = Self::new(values)?;
        if m.values[0] != T::one() {
            return Err(Error::NotNormalized {
                m0: m.values[0].modulus(),
            });
        }
        m.normalized = true;
        Ok(m)
    }

    /// Divides by `m_0` and flags the result as normalized.
    pub fn normalize(&self) -> Result<Self> {
        let m0 = self.values[0];
        if m0 == T::zero() {
            return Err(Error::NotNormalized { m0: 0.0 });
        }
        let mut values: Vec<T> = self.values.iter().map(|&v| v / m0).collect();
        values[0] = T::one();
        Ok(Self {
            values,
            normalized: true,
        })
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn degree(&self) -> usize {
        self.values.len() - 1
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn get(&self, i: usize) -> Option<T> {
        self.values.get(i).copied()
    }

    /// Largest `|m_i|`.
    pub fn scale(&self) -> f64 {
        crate::scalar::max_modulus(&self.values)
    }

    /// The first `d + 1` moments.
    pub fn truncate(&self, d: usize) -> Result<Self> {
        if d > self.degree() {
            return Err(Error::InsufficientMoments {
                needed: d + 1,
                available: self.len(),
            });
        }
        Ok(Self {
            values: self.values[..=d].to_vec(),
            normalized: self.normalized,
        })
    }

    /// Multiplies every moment by `c`.
    pub fn scaled(&self, c: T) -> Self {
        let values: Vec<T> = self.values.iter().map(|&v| v * c).collect();
        let normalized = self.normalized && values[0] == T::one();
        Self { values, normalized }
    }

    pub fn to_complex(&self) -> MomentSequence<Complex64> {
        MomentSequence {
            values: self.values.iter().map(|v| v.to_complex()).collect(),
            normalized: self.normalized,
        }
    }

    fn require_unit_m0(&self) -> Result<()> {
        let m0 = self.values[0];
        if (m0 - T::one()).modulus() > NORMALIZATION_TOL {
            return Err(Error::NotNormalized { m0: m0.modulus() });
        }
        Ok(())
    }
}

impl MomentSequence<Complex64> {
    /// Real parts, provided every imaginary part is at most `tol · scale`.
    pub fn to_real(&self, tol: f64) -> Option<MomentSequence<f64>> {
        let bound = tol * self.scale().max(1.0);
        if self.values.iter().any(|v| v.im.abs() > bound) {
            return None;
        }
        Some(MomentSequence {
            values: self.values.iter().map(|v| v.re).collect(),
            normalized: self.normalized,
        })
    }
}

/// Cumulants `k_1, …, k_d` (`k_0 = 0` is implied).
#[derive(Debug, Clone, PartialEq)]
pub struct CumulantSequence<T> {
    values: Vec<T>,
}

impl<T: Scalar> CumulantSequence<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput(
                "cumulant sequence must contain k_1".into(),
            ));
        }
        Ok(Self { values })
    }

    /// `k_1, …, k_d`; note `values()[0]` is `k_1`.
    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Cumulant `k_i` for `i ≥ 1`, and `0` for `i = 0`.
    pub fn k(&self, i: usize) -> T {
        if i == 0 {
            T::zero()
        } else {
            self.values[i - 1]
        }
    }

    pub fn degree(&self) -> usize {
        self.values.len()
    }
}

/// One component `Σ_k λ_k δ_ξ^(k)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalDirac<T> {
    pub xi: T,
    pub lambdas: Vec<T>,
}

impl<T: Scalar> LocalDirac<T> {
    pub fn new(xi: T, lambdas: Vec<T>) -> Self {
        Self { xi, lambdas }
    }

    pub fn order(&self) -> usize {
        self.lambdas.len().saturating_sub(1)
    }

    /// `i`-th moment `Σ_k λ_k · i!/(i−k)! · ξ^(i−k)`.
    pub fn moment(&self, i: usize) -> T {
        let mut acc = T::zero();
        for (k, &lam) in self.lambdas.iter().enumerate().take(i + 1) {
            acc += lam * T::falling_factorial(i, k) * self.xi.powi((i - k) as i32);
        }
        acc
    }
}

/// A finite mixture of local Diracs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalDiracMixture<T> {
    components: Vec<LocalDirac<T>>,
}

impl<T: Scalar> LocalDiracMixture<T> {
    pub fn new(components: Vec<LocalDirac<T>>) -> Result<Self> {
        if let Some(j) = components.iter().position(|c| c.lambdas.is_empty()) {
            return Err(Error::InvalidInput(format!(
                "component {j} has no weight coefficients"
            )));
        }
        Ok(Self { components })
    }

    pub fn components(&self) -> &[LocalDirac<T>] {
        &self.components
    }

    pub fn into_components(self) -> Vec<LocalDirac<T>> {
        self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Largest component order.
    pub fn max_order(&self) -> usize {
        self.components
            .iter()
            .map(LocalDirac::order)
            .max()
            .unwrap_or(0)
    }

    /// Checks the statistical convention `Σ_j λ_(j,0) = 1`.
    pub fn check_normalized(&self, tol: f64) -> Result<()> {
        let total: T = self
            .components
            .iter()
            .fold(T::zero(), |acc, c| acc + c.lambdas[0]);
        if (total - T::one()).modulus() > tol {
            return Err(Error::NotNormalized {
                m0: total.modulus(),
            });
        }
        Ok(())
    }

    pub fn to_complex(&self) -> LocalDiracMixture<Complex64> {
        LocalDiracMixture {
            components: self
                .components
                .iter()
                .map(|c| LocalDirac {
                    xi: c.xi.to_complex(),
                    lambdas: c.lambdas.iter().map(|l| l.to_complex()).collect(),
                })
                .collect(),
        }
    }
}

impl LocalDiracMixture<Complex64> {
    /// Real parts, provided every imaginary part is at most `tol · max(1, |z|)`.
    pub fn to_real(&self, tol: f64) -> Option<LocalDiracMixture<f64>> {
        let real = |z: Complex64| (z.im.abs() <= tol * z.norm().max(1.0)).then_some(z.re);
        let components = self
            .components
            .iter()
            .map(|c| {
                Some(LocalDirac {
                    xi: real(c.xi)?,
                    lambdas: c
                        .lambdas
                        .iter()
                        .map(|&l| real(l))
                        .collect::<Option<Vec<_>>>()?,
                })
            })
            .collect::<Option<Vec<_>>>()?;
        Some(LocalDiracMixture { components })
    }
}

/// Shape and scale of a Pareto distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParetoParams<T> {
    pub alpha: T,
    pub xi: T,
}

impl<T: Scalar> ParetoParams<T> {
    pub fn new(alpha: T, xi: T) -> Self {
        Self { alpha, xi }
    }

    /// The reparametrization `(α, ξ) ↦ (−ξ/α, 1/ξ)` under which Pareto moments
    /// become the reciprocals of the first-order local Dirac moments
    /// `ξ^i + iαξ^(i−1)`.
    pub fn from_local_dirac(xi: T, alpha: T) -> Self {
        Self {
            alpha: -xi / alpha,
            xi: T::one() / xi,
        }
    }

    /// Fails when `α ∈ {0, …, d}`.
    pub fn check_degree(&self, d: usize) -> Result<()> {
        let a = self.alpha.to_complex();
        let nearest = a.re.round();
        if a.im == 0.0 && a.re == nearest && nearest >= 0.0 && nearest <= d as f64 {
            return Err(Error::Pole { alpha: a.re });
        }
        Ok(())
    }
}

/// Moments of a local Dirac mixture up to degree `d`.
pub fn local_dirac_moments<T: Scalar>(mix: &LocalDiracMixture<T>, d: usize) -> MomentSequence<T> {
    let values = (0..=d)
        .map(|i| {
            mix.components
                .iter()
                .fold(T::zero(), |acc, c| acc + c.moment(i))
        })
        .collect();
    MomentSequence {
        values,
        normalized: false,
    }
}

/// Cumulants from normalized moments via `K(t) = log M(t)` on exponential
/// generating functions: `k_n = m_n − Σ_(j=1)^(n−1) C(n−1, j−1) k_j m_(n−j)`.
pub fn moments_to_cumulants<T: Scalar>(m: &MomentSequence<T>) -> Result<CumulantSequence<T>> {
    m.require_unit_m0()?;
    let d = m.degree();
    if d == 0 {
        return Err(Error::InvalidInput(
            "need at least m_1 to form cumulants".into(),
        ));
    }
    let binom = binomial_table(d);
    let mv = &m.values;
    let mut k = vec![T::zero(); d + 1];
    for n in 1..=d {
        let mut acc = mv[n];
        for j in 1..n {
            acc -= T::of(binom[n - 1][j - 1]) * k[j] * mv[n - j];
        }
        k[n] = acc;
    }
    k.remove(0);
    Ok(CumulantSequence { values: k })
}

/// Normalized moments from cumulants via `M(t) = exp K(t)`:
/// `m_n = Σ_(j=1)^n C(n−1, j−1) k_j m_(n−j)`.
pub fn cumulants_to_moments<T: Scalar>(k: &CumulantSequence<T>) -> MomentSequence<T> {
    let d = k.degree();
    let binom = binomial_table(d);
    let mut m = vec![T::zero(); d + 1];
    m[0] = T::one();
    for n in 1..=d {
        let mut acc = T::zero();
        for j in 1..=n {
            acc += T::of(binom[n - 1][j - 1]) * k.k(j) * m[n - j];
        }
        m[n] = acc;
    }
    MomentSequence {
        values: m,
        normalized: true,
    }
}

/// Moments of the convolution of two measures: the binomial convolution
/// `c_k = Σ_j C(k, j) a_j b_(k−j)`, i.e. the product of the exponential
/// generating functions.
pub fn mgf_convolve<T: Scalar>(
    a: &MomentSequence<T>,
    b: &MomentSequence<T>,
) -> Result<MomentSequence<T>> {
    if a.degree() != b.degree() {
        return Err(Error::InvalidInput(format!(
            "convolution needs equal degrees, got {} and {}",
            a.degree(),
            b.degree()
        )));
    }
    let d = a.degree();
    let binom = binomial_table(d);
    let values: Vec<T> = (0..=d)
        .map(|k| {
            (0..=k).fold(T::zero(), |acc, j| {
                acc + T::of(binom[k][j]) * a.values[j] * b.values[k - j]
            })
        })
        .collect();
    let normalized = a.normalized && b.normalized && values[0] == T::one();
    Ok(MomentSequence { values, normalized })
}

/// Inverse of [`mgf_convolve`] in its second argument: finds `b` with
/// `mgf_convolve(a, b) = c`.
pub fn mgf_deconvolve<T: Scalar>(
    c: &MomentSequence<T>,
    a: &MomentSequence<T>,
) -> Result<MomentSequence<T>> {
    if a.values[0] == T::zero() {
        return Err(Error::InvalidInput(
            "deconvolution kernel has a_0 = 0".into(),
        ));
    }
    if a.degree() < c.degree() {
        return Err(Error::InsufficientMoments {
            needed: c.len(),
            available: a.len(),
        });
    }
    let d = c.degree();
    let binom = binomial_table(d);
    let a0 = a.values[0];
    let mut b: Vec<T> = Vec::with_capacity(d + 1);
    for k in 0..=d {
        let mut acc = c.values[k];
        for (j, &bj) in b.iter().enumerate() {
            acc -= T::of(binom[k][j]) * a.values[k - j] * bj;
        }
        b.push(acc / a0);
    }
    let normalized = b[0] == T::one();
    Ok(MomentSequence {
        values: b,
        normalized,
    })
}

/// Pareto moments `m_i = α/(α−i) · ξ^i`.
pub fn pareto_moments<T: Scalar>(p: &ParetoParams<T>, d: usize) -> Result<MomentSequence<T>> {
    p.check_degree(d)?;
    let mut values: Vec<T> = (0..=d)
        .map(|i| p.alpha / (p.alpha - T::of(i as f64)) * p.xi.powi(i as i32))
        .collect();
    values[0] = T::one();
    Ok(MomentSequence {
        values,
        normalized: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(v: &[f64]) -> MomentSequence<f64> {
        MomentSequence::new(v.to_vec()).unwrap()
    }

    #[test]
    fn rejects_empty_and_unnormalized() {
        assert!(MomentSequence::<f64>::new(vec![]).is_err());
        assert!(MomentSequence::normalized(vec![2.0, 1.0]).is_err());
        assert!(MomentSequence::normalized(vec![1.0, 1.0])
            .unwrap()
            .is_normalized());
    }

    #[test]
    fn first_order_dirac_moments() {
        let mix = LocalDiracMixture::new(vec![LocalDirac::new(2.0, vec![1.0, 1.0])]).unwrap();
        assert_eq!(
            local_dirac_moments(&mix, 4).values(),
            &[1.0, 3.0, 8.0, 20.0, 48.0]
        );
    }

    #[test]
    fn pure_dirac_moments_are_powers() {
        let mix = LocalDiracMixture::new(vec![LocalDirac::new(5.0, vec![1.0, 0.0])]).unwrap();
        assert_eq!(local_dirac_moments(&mix, 2).values(), &[1.0, 5.0, 25.0]);
    }

    #[test]
    fn bernoulli_moments() {
        let mix = LocalDiracMixture::new(vec![
            LocalDirac::new(0.0, vec![0.5, 0.0]),
            LocalDirac::new(1.0, vec![0.5, 0.0]),
        ])
        .unwrap();
        assert_eq!(local_dirac_moments(&mix, 3).values(), &[1.0, 0.5, 0.5, 0.5]);
    }

    #[test]
    fn component_without_weights_is_rejected() {
        assert!(LocalDiracMixture::new(vec![LocalDirac::new(1.0, vec![])]).is_err());
    }

    #[test]
    fn cumulants_of_first_order_dirac() {
        let k = moments_to_cumulants(&seq(&[1.0, 3.0, 8.0, 20.0])).unwrap();
        assert_eq!(k.values(), &[3.0, -1.0, 2.0]);
        let m = cumulants_to_moments(&CumulantSequence::new(vec![3.0, -1.0, 2.0]).unwrap());
        assert_eq!(m.values(), &[1.0, 3.0, 8.0, 20.0]);
    }

    #[test]
    fn centered_variance_is_second_moment() {
        let k = moments_to_cumulants(&seq(&[1.0, 0.0, 2.5])).unwrap();
        assert_eq!(k.k(2), 2.5);
    }

    #[test]
    fn cumulants_require_normalization() {
        assert!(matches!(
            moments_to_cumulants(&seq(&[2.0, 1.0, 1.0])),
            Err(Error::NotNormalized { .. })
        ));
    }

    #[test]
    fn zero_cumulants_give_delta_at_origin() {
        let m = cumulants_to_moments(&CumulantSequence::new(vec![0.0; 6]).unwrap());
        assert_eq!(m.values(), &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn cumulant_roundtrip() {
        let m = seq(&[1.0, 3.0, 8.0, 20.0, 48.0]);
        let back = cumulants_to_moments(&moments_to_cumulants(&m).unwrap());
        for (a, b) in back.values().iter().zip(m.values()) {
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }

    #[test]
    fn gaussian_convolution() {
        let g = seq(&[1.0, 0.0, 1.0, 0.0, 3.0]);
        let c = mgf_convolve(&g, &g).unwrap();
        assert_eq!(c.values(), &[1.0, 0.0, 2.0, 0.0, 12.0]);
        let delta = seq(&[1.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(mgf_convolve(&delta, &g).unwrap().values(), g.values());
        assert_eq!(mgf_deconvolve(&g, &delta).unwrap().values(), g.values());
        assert_eq!(mgf_deconvolve(&c, &g).unwrap().values(), g.values());
    }

    #[test]
    fn deconvolution_rejects_zero_kernel() {
        assert!(mgf_deconvolve(&seq(&[1.0, 1.0]), &seq(&[0.0, 1.0])).is_err());
        assert!(mgf_convolve(&seq(&[1.0, 1.0]), &seq(&[1.0])).is_err());
    }

    #[test]
    fn pareto_moments_closed_form() {
        let m = pareto_moments(&ParetoParams::new(5.0, 1.0), 2).unwrap();
        assert_eq!(m.values()[0], 1.0);
        assert!((m.values()[1] - 1.25).abs() < 1e-15);
        assert!((m.values()[2] - 5.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn pareto_pole_is_rejected() {
        assert!(matches!(
            pareto_moments(&ParetoParams::new(3.0, 1.0), 4),
            Err(Error::Pole { .. })
        ));
        assert!(pareto_moments(&ParetoParams::new(3.0, 1.0), 2).is_ok());
        assert!(pareto_moments(&ParetoParams::new(0.0, 1.0), 2).is_err());
    }

    #[test]
    fn reparametrized_pareto_inverts_local_dirac() {
        let (xi, alpha) = (1.7, 0.3);
        let p = pareto_moments(&ParetoParams::from_local_dirac(xi, alpha), 6).unwrap();
        for i in 1..=6 {
            let ld = xi.powi(i) + i as f64 * alpha * xi.powi(i - 1);
            assert!((p.values()[i as usize] - 1.0 / ld).abs() < 1e-14);
        }
    }

    #[test]
    fn complex_scalars() {
        let xi = Complex64::new(0.0, 1.0);
        let mix = LocalDiracMixture::new(vec![LocalDirac::new(xi, vec![Complex64::new(1.0, 0.0)])])
            .unwrap();
        let m = local_dirac_moments(&mix, 4);
        assert!((m.values()[2] - Complex64::new(-1.0, 0.0)).norm() < 1e-15);
        assert!((m.values()[4] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }
}
