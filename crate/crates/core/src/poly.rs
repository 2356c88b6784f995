//! Dense univariate polynomials stored as coefficient vectors, lowest degree
//! first, plus root finding and root clustering.

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub fn eval<T: Scalar>(coeffs: &[T], x: T) -> T {
    coeffs.iter().rev().fold(T::zero(), |acc, &c| acc * x + c)
}

pub fn mul<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![T::zero(); a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

pub fn pow<T: Scalar>(a: &[T], n: usize) -> Vec<T> {
    let mut out = vec![T::one()];
    for _ in 0..n {
        out = mul(&out, a);
    }
    out
}

pub fn derivative<T: Scalar>(a: &[T]) -> Vec<T> {
    a.iter()
        .enumerate()
        .skip(1)
        .map(|(k, &c)| c * T::of(k as f64))
        .collect()
}

/// Monic polynomial `Π (X − r)`.
pub fn from_roots<T: Scalar>(roots: &[T]) -> Vec<T> {
    roots
        .iter()
        .fold(vec![T::one()], |acc, &r| mul(&acc, &[-r, T::one()]))
}

/// Monic coefficients `[p_0, …, p_(r−1), 1]` from the `r` free coefficients.
pub fn monic<T: Scalar>(free: &[T]) -> Vec<T> {
    let mut q = free.to_vec();
    q.push(T::one());
    q
}

/// All complex roots of a polynomial.
///
/// Leading coefficients below `1e-14` times the coefficient scale are dropped
/// before the companion matrix is formed; eigenvalues are then polished by a
/// few Newton steps on the original polynomial.
pub fn roots(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(Error::InvalidInput(
            "zero polynomial has no finite root set".into(),
        ));
    }
    let mut deg = coeffs.len() - 1;
    while deg > 0 && coeffs[deg].norm() <= 1e-14 * scale {
        deg -= 1;
    }
    let c = &coeffs[..=deg];
    match deg {
        0 => Ok(Vec::new()),
        1 => Ok(vec![-c[0] / c[1]]),
        _ => {
            let dc = derivative(c);
            // Nilpotent companions (a high-order root at 0) can stall the QR
            // iteration; retry on p(X + σ).
            let bound = 1.0 + (0..deg).map(|i| (c[i] / c[deg]).norm()).fold(0.0, f64::max);
            for shift in [0.0, 0.1, 0.37] {
                let sigma = Complex64::from_polar(shift * bound, 1.0);
                if let Some(eig) = companion_eigenvalues(&taylor_shift(c, sigma)) {
                    return Ok(eig.into_iter().map(|z| polish(c, &dc, z + sigma)).collect());
                }
            }
            Err(Error::LinearAlgebra(
                "companion Schur iteration failed".into(),
            ))
        }
    }
}

fn companion_eigenvalues(c: &[Complex64]) -> Option<Vec<Complex64>> {
    let deg = c.len() - 1;
    let lead = c[deg];
    let mut companion = DMatrix::<Complex64>::zeros(deg, deg);
    for i in 1..deg {
        companion[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    for i in 0..deg {
        companion[(i, deg - 1)] = -c[i] / lead;
    }
    let (_, t) = Schur::try_new(companion, f64::EPSILON, 10_000)?.unpack();
    Some((0..deg).map(|i| t[(i, i)]).collect())
}

/// Coefficients of `p(X + σ)`.
fn taylor_shift(c: &[Complex64], sigma: Complex64) -> Vec<Complex64> {
    let mut out = c.to_vec();
    if sigma == Complex64::new(0.0, 0.0) {
        return out;
    }
    let n = out.len();
    for i in 0..n {
        for j in (i..n - 1).rev() {
            let next = out[j + 1];
            out[j] += sigma * next;
        }
    }
    out
}

fn polish(c: &[Complex64], dc: &[Complex64], mut z: Complex64) -> Complex64 {
    let mut fz = eval(c, z).norm();
    for _ in 0..4 {
        let d = eval(dc, z);
        if d.norm() == 0.0 {
            break;
        }
        let cand = z - eval(c, z) / d;
        let fc = eval(c, cand).norm();
        if !(fc < fz) {
            break;
        }
        z = cand;
        fz = fc;
    }
    z
}

/// A group of numerically coincident roots.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootCluster {
    pub center: Complex64,
    pub multiplicity: usize,
}

/// Agglomerative clustering of roots. Two roots pair up when they are at most
/// `tol · max(1, |z|)` apart; a group of `k` roots is accepted when every
/// member lies within `tol^(2/k) / 2` (scaled the same way) of the group mean,
/// matching the `ε^(1/k)` scatter of a perturbed `k`-fold root. The center is
/// the group mean, which is far more accurate than any single member.
pub fn cluster_roots(roots: &[Complex64], tol: f64) -> Vec<RootCluster> {
    let mut left: Vec<Complex64> = roots.to_vec();
    let mut out = Vec::new();
    while !left.is_empty() {
        // (size, ratio, members) of the best admissible group
        let mut best: (usize, f64, Vec<usize>) = (1, 0.0, vec![0]);
        for seed in 0..left.len() {
            let mut order: Vec<usize> = (0..left.len()).collect();
            order.sort_by(|&a, &b| {
                (left[a] - left[seed])
                    .norm()
                    .total_cmp(&(left[b] - left[seed]).norm())
            });
            for k in 2..=order.len() {
                let members = &order[..k];
                let c = members.iter().map(|&i| left[i]).sum::<Complex64>() / k as f64;
                let scale = members.iter().fold(1f64, |s, &i| s.max(left[i].norm()));
                let radius = members
                    .iter()
                    .map(|&i| (left[i] - c).norm())
                    .fold(0.0, f64::max);
                let ratio = radius / (0.5 * tol.powf(2.0 / k as f64) * scale);
                if ratio <= 1.0 && (k > best.0 || (k == best.0 && ratio < best.1)) {
                    best = (k, ratio, members.to_vec());
                }
            }
        }
        let mut members = best.2;
        members.sort_unstable_by(|a, b| b.cmp(a));
        let group: Vec<Complex64> = members.iter().map(|&i| left.swap_remove(i)).collect();
        let center = group.iter().sum::<Complex64>() / group.len() as f64;
        out.push(RootCluster {
            center,
            multiplicity: group.len(),
        });
    }
    sort_complex_by(&mut out, |c| c.center);
    out
}

/// Sorts by real part, then imaginary part.
pub fn sort_complex_by<E>(items: &mut [E], key: impl Fn(&E) -> Complex64) {
    items.sort_by(|a, b| {
        let (za, zb) = (key(a), key(b));
        za.re.total_cmp(&zb.re).then(za.im.total_cmp(&zb.im))
    });
}
