//! Local Gaussian mixtures `Σ_j λ_j (φ_ξj + Σ_i α_(j,i) φ_ξj^(i))`, where
//! `φ_ξ` is the `N(ξ, σ²)` density and derivatives are taken in `x`.
//!
//! Such a density is a Gaussian convolved with the signed local Dirac
//! mixture `Σ_j λ_j (δ_ξj + Σ_i (−1)^i α_(j,i) δ_ξj^(i))` in the moment
//! convention of [`crate::moments`].

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moments::{
    local_dirac_moments, mgf_deconvolve, LocalDirac, LocalDiracMixture, MomentSequence,
};
use crate::recovery::{recover, RecoveryConfig, RecoveryDiagnostics};
use crate::scalar::{binomial_row, falling_factorial};

/// Tolerance on `Σ λ_j = 1`.
pub const WEIGHT_TOL: f64 = 1e-9;

/// Widening of the envelope standard deviation relative to `σ`.
const ENVELOPE_WIDTH: f64 = 1.5;
const ENVELOPE_SAFETY: f64 = 1.05;
const CHUNK: usize = 4096;

/// One component `λ (φ_ξ + Σ_i α_i φ_ξ^(i))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalComponent {
    pub xi: f64,
    pub weight: f64,
    /// `α_1, …, α_l`.
    pub alphas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalGaussianMixture {
    components: Vec<LocalComponent>,
    sigma: f64,
}

/// Probabilists' Hermite polynomial `He_n(u)`.
pub fn hermite(n: usize, u: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, u);
    if n == 0 {
        return prev;
    }
    for k in 1..n {
        let next = u * cur - k as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `n`-th derivative of the `N(0, σ²)` density at `y`.
pub fn gaussian_derivative(n: usize, y: f64, sigma: f64) -> f64 {
    let u = y / sigma;
    let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    sign * hermite(n, u) * (-0.5 * u * u).exp() / (TAU.sqrt() * sigma.powi(n as i32 + 1))
}

/// Moments of `N(0, σ²)`: zero for odd `k`, `σ^k (k−1)!!` for even `k`.
pub fn gaussian_moments(sigma: f64, d: usize) -> MomentSequence<f64> {
    let mut v = vec![0.0; d + 1];
    v[0] = 1.0;
    for k in (2..=d).step_by(2) {
        v[k] = v[k - 2] * (k - 1) as f64 * sigma * sigma;
    }
    MomentSequence::normalized(v).expect("m_0 = 1")
}

impl LocalGaussianMixture {
    pub fn new(components: Vec<LocalComponent>, sigma: f64) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidInput(
                "mixture needs at least one component".into(),
            ));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidInput(
                "base standard deviation must be positive".into(),
            ));
        }
        if components.iter().any(|c| !(c.weight >= 0.0)) {
            return Err(Error::InvalidInput(
                "mixing weights must be non-negative".into(),
            ));
        }
        let total: f64 = components.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::NotNormalized { m0: total });
        }
        if components
            .iter()
            .any(|c| !c.xi.is_finite() || c.alphas.iter().any(|a| !a.is_finite()))
        {
            return Err(Error::InvalidInput("parameters must be finite".into()));
        }
        Ok(Self { components, sigma })
    }

    pub fn components(&self) -> &[LocalComponent] {
        &self.components
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn order(&self) -> usize {
        self.components
            .iter()
            .map(|c| c.alphas.len())
            .max()
            .unwrap_or(0)
    }

    pub fn density(&self, x: f64) -> f64 {
        self.components
            .iter()
            .map(|c| {
                let y = x - c.xi;
                let mut v = gaussian_derivative(0, y, self.sigma);
                for (i, a) in c.alphas.iter().enumerate() {
                    v += a * gaussian_derivative(i + 1, y, self.sigma);
                }
                c.weight * v
            })
            .sum()
    }

    /// Minimum of the density on `n` grid points spanning every component's `±10σ`
    /// window; fails at the first point below `−1e−15`.
    pub fn check_nonnegative(&self, n: usize) -> Result<f64> {
        let lo = self
            .components
            .iter()
            .map(|c| c.xi)
            .fold(f64::INFINITY, f64::min)
            - 10.0 * self.sigma;
        let hi = self
            .components
            .iter()
            .map(|c| c.xi)
            .fold(f64::NEG_INFINITY, f64::max)
            + 10.0 * self.sigma;
        let n = n.max(2);
        let mut min = f64::INFINITY;
        for i in 0..n {
            let x = lo + (hi - lo) * i as f64 / (n - 1) as f64;
            let v = self.density(x);
            if v < -1e-15 {
                return Err(Error::NegativeDensity { x, value: v });
            }
            min = min.min(v);
        }
        Ok(min)
    }

    /// The signed local Dirac mixture whose Gaussian convolution is this density.
    pub fn dirac_mixture(&self) -> LocalDiracMixture<f64> {
        let comps = self
            .components
            .iter()
            .map(|c| {
                let mut lambdas = vec![c.weight];
                for (i, a) in c.alphas.iter().enumerate() {
                    let sign = if (i + 1) % 2 == 0 { 1.0 } else { -1.0 };
                    lambdas.push(sign * c.weight * a);
                }
                LocalDirac::new(c.xi, lambdas)
            })
            .collect();
        LocalDiracMixture::new(comps).expect("every component has a weight")
    }

    /// `∫ x^k ψ(x) dx` for `k ≤ d`, by integrating the derivative terms by parts.
    pub fn analytic_moments(&self, d: usize) -> MomentSequence<f64> {
        let g = gaussian_moments(self.sigma, d);
        let shifted = |xi: f64, n: usize| -> f64 {
            let b = binomial_row(n);
            (0..=n)
                .map(|j| b[j] * xi.powi((n - j) as i32) * g.values()[j])
                .sum()
        };
        let values = (0..=d)
            .map(|k| {
                self.components
                    .iter()
                    .map(|c| {
                        let mut v = shifted(c.xi, k);
                        for (idx, a) in c.alphas.iter().enumerate().take(k) {
                            let i = idx + 1;
                            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                            v += a * sign * falling_factorial(k, i) * shifted(c.xi, k - i);
                        }
                        c.weight * v
                    })
                    .sum()
            })
            .collect();
        MomentSequence::new(values).expect("non-empty")
    }

    /// Per-component envelope constants `c_j` with
    /// `ψ_j(x) ≤ c_j · N(x; ξ_j, (1.5σ)²)`.
    fn envelope(&self) -> Result<Vec<f64>> {
        let rho = ENVELOPE_WIDTH;
        self.components
            .iter()
            .map(|c| {
                let mut best = 0.0f64;
                let steps = 80_000;
                for s in 0..=steps {
                    let u = -40.0 + 80.0 * s as f64 / steps as f64;
                    let mut poly = 1.0;
                    for (idx, a) in c.alphas.iter().enumerate() {
                        let i = idx + 1;
                        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                        poly += a * sign * hermite(i, u) / self.sigma.powi(i as i32);
                    }
                    if poly < -1e-12 && (-0.5 * u * u).exp() > 1e-300 {
                        return Err(Error::NegativeDensity {
                            x: c.xi + u * self.sigma,
                            value: poly,
                        });
                    }
                    let ratio = poly * rho * (-0.5 * u * u * (1.0 - 1.0 / (rho * rho))).exp();
                    best = best.max(ratio);
                }
                Ok(best * ENVELOPE_SAFETY)
            })
            .collect()
    }

    /// `n` draws by rejection against a widened Gaussian-mixture envelope.
    /// Draws are generated in chunks with independent streams, so the output
    /// depends only on `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<f64>> {
        let consts = self.envelope()?;
        let masses: Vec<f64> = self
            .components
            .iter()
            .zip(&consts)
            .map(|(c, k)| c.weight * k)
            .collect();
        let total: f64 = masses.iter().sum();
        if !(total > 0.0) {
            return Err(Error::InvalidInput("envelope has zero mass".into()));
        }
        let wide = self.sigma * ENVELOPE_WIDTH;
        let normal = Normal::new(0.0, wide).map_err(|e| Error::InvalidInput(e.to_string()))?;
        let chunks = n.div_ceil(CHUNK);
        let parts = (0..chunks)
            .into_par_iter()
            .map(|ci| {
                let want = CHUNK.min(n - ci * CHUNK);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(ci as u64);
                let mut out = Vec::with_capacity(want);
                while out.len() < want {
                    let mut pick = rng.random::<f64>() * total;
                    let mut j = 0;
                    while j + 1 < masses.len() && pick >= masses[j] {
                        pick -= masses[j];
                        j += 1;
                    }
                    let x = self.components[j].xi + normal.sample(&mut rng);
                    let env: f64 = self
                        .components
                        .iter()
                        .zip(&masses)
                        .map(|(c, m)| m * gaussian_derivative(0, x - c.xi, wide))
                        .sum();
                    let dens = self.density(x);
                    if dens > env * (1.0 + 1e-9) {
                        return Err(Error::EnvelopeViolation {
                            x,
                            ratio: dens / env,
                        });
                    }
                    if rng.random::<f64>() * env < dens {
                        out.push(x);
                    }
                }
                Ok(out)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(parts.concat())
    }
}

/// `m_i = n^(−1) Σ x^i`.
pub fn empirical_moments(xs: &[f64], d: usize) -> Result<MomentSequence<f64>> {
    if xs.is_empty() {
        return Err(Error::InvalidInput("empty sample".into()));
    }
    let mut sums = vec![0.0; d + 1];
    for &x in xs {
        let mut p = 1.0;
        for s in sums.iter_mut() {
            *s += p;
            p *= x;
        }
    }
    let n = xs.len() as f64;
    let mut values: Vec<f64> = sums.into_iter().map(|s| s / n).collect();
    values[0] = 1.0;
    MomentSequence::normalized(values)
}

/// Estimated components with recovery diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct StatEstimate {
    pub components: Vec<LocalComponent>,
    /// Moments of the deconvolved local Dirac mixture.
    pub dirac_moments: Vec<f64>,
    /// Largest imaginary part dropped from the recovered parameters.
    pub imaginary_residue: f64,
    pub recovery: RecoveryDiagnostics,
}

impl StatEstimate {
    /// Wraps the components into a mixture over a Gaussian base.
    pub fn to_gaussian(&self, sigma: f64) -> Result<LocalGaussianMixture> {
        LocalGaussianMixture::new(self.components.clone(), sigma)
    }
}

/// Deconvolves the known base from the observed moments and recovers `r`
/// components of order `l`.
pub fn estimate(
    lg_moments: &MomentSequence<f64>,
    r: usize,
    l: usize,
    base_moments: &MomentSequence<f64>,
    cfg: &RecoveryConfig,
) -> Result<StatEstimate> {
    let b0 = base_moments.values()[0];
    if (b0 - 1.0).abs() > crate::moments::NORMALIZATION_TOL {
        return Err(Error::NotNormalized { m0: b0 });
    }
    let d = lg_moments.degree().min(base_moments.degree());
    if d < (l + 2) * r {
        return Err(Error::InsufficientMoments {
            needed: (l + 2) * r + 1,
            available: d + 1,
        });
    }
    let dirac = mgf_deconvolve(&lg_moments.truncate(d)?, &base_moments.truncate(d)?)?;
    let rec = recover(&dirac, r, l, cfg)?;
    let mut residue = 0.0f64;
    let mut components = Vec::with_capacity(r);
    for comp in rec.mixture.components() {
        let w = comp.lambdas[0];
        if w.norm() <= 1e-12 {
            return Err(Error::DegenerateWeight(format!(
                "component at {} has vanishing weight",
                comp.xi
            )));
        }
        residue = residue.max(comp.xi.im.abs()).max(w.im.abs());
        let alphas = comp.lambdas[1..]
            .iter()
            .enumerate()
            .map(|(idx, lam)| {
                let a = lam / w;
                residue = residue.max(a.im.abs());
                if (idx + 1) % 2 == 0 {
                    a.re
                } else {
                    -a.re
                }
            })
            .collect();
        components.push(LocalComponent {
            xi: comp.xi.re,
            weight: w.re,
            alphas,
        });
    }
    Ok(StatEstimate {
        components,
        dirac_moments: dirac.into_values(),
        imaginary_residue: residue,
        recovery: rec.diagnostics,
    })
}

/// Moments of the signed local Dirac mixture underlying `lg`.
pub fn signed_dirac_moments(lg: &LocalGaussianMixture, d: usize) -> MomentSequence<f64> {
    local_dirac_moments(&lg.dirac_mixture(), d)
}
