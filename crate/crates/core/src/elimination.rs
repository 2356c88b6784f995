//! Closed-form elimination for two first-order components
//! `m_i = λ(ξ_1^i + iα_1ξ_1^(i−1)) + (1−λ)(ξ_2^i + iα_2ξ_2^(i−1))`,
//! working in cumulant coordinates with `s = ξ_1 + ξ_2` and `p = ξ_1ξ_2`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hankel::{kernel_polynomial, moment_matrix, numeric_rank, DEFAULT_RANK_TOL};
use crate::moments::{moments_to_cumulants, MomentSequence};
use crate::poly;
use crate::recovery::confluent_vandermonde_weights;
use crate::scalar::Scalar;

type C = Complex64;

/// Relative size below which a denominator or leading coefficient is treated as zero.
const DEGENERACY_TOL: f64 = 1e-12;

/// Cumulants `k_1, …, k_5`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoMixCumulants {
    pub k: [C; 5],
}

impl TwoMixCumulants {
    pub fn new<T: Scalar>(k1: T, k2: T, k3: T, k4: T, k5: T) -> Self {
        Self {
            k: [k1, k2, k3, k4, k5].map(|v| v.to_complex()),
        }
    }

    /// Cumulants of a normalized sequence with degree at least 5.
    pub fn from_moments<T: Scalar>(m: &MomentSequence<T>) -> Result<Self> {
        if m.degree() < 5 {
            return Err(Error::InsufficientMoments {
                needed: 6,
                available: m.len(),
            });
        }
        let k = moments_to_cumulants(&m.to_complex().truncate(5)?)?;
        let v = k.values();
        Ok(Self {
            k: [v[0], v[1], v[2], v[3], v[4]],
        })
    }

    fn scale(&self) -> f64 {
        self.k.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// Coefficients `c_0, …, c_4` of the quartic whose roots include `s = ξ_1 + ξ_2`.
pub fn g_s_poly(k: &TwoMixCumulants) -> [C; 5] {
    let [k1, k2, k3, k4, k5] = k.k;
    let n = |x: f64| C::new(x, 0.0);
    let k1_2 = k1 * k1;
    let k1_3 = k1_2 * k1;
    let k1_4 = k1_3 * k1;
    let k2_2 = k2 * k2;
    let k2_3 = k2_2 * k2;
    let k2_4 = k2_3 * k2;
    let k3_2 = k3 * k3;
    let k3_3 = k3_2 * k3;
    let k4_2 = k4 * k4;
    let c4 = n(4.0) * k2_3 + k3_2;
    let c3 = -(n(32.0) * k1 * k2_3 + n(24.0) * k2_2 * k3 + n(8.0) * k1 * k3_2 + n(4.0) * k3 * k4);
    let c2 = n(96.0) * k1_2 * k2_3
        + n(24.0) * k2_4
        + n(144.0) * k1 * k2_2 * k3
        + n(24.0) * k1_2 * k3_2
        + n(36.0) * k2 * k3_2
        + n(20.0) * k2_2 * k4
        + n(24.0) * k1 * k3 * k4
        + n(4.0) * k4_2
        + n(2.0) * k3 * k5;
    let c1 = -(n(128.0) * k1_3 * k2_3
        + n(96.0) * k1 * k2_4
        + n(288.0) * k1_2 * k2_2 * k3
        + n(32.0) * k1_3 * k3_2
        + n(80.0) * k2_3 * k3
        + n(144.0) * k1 * k2 * k3_2
        + n(80.0) * k1 * k2_2 * k4
        + n(48.0) * k1_2 * k3 * k4
        + n(8.0) * k3_3
        + n(40.0) * k2 * k3 * k4
        + n(16.0) * k1 * k4_2
        + n(8.0) * k2_2 * k5
        + n(8.0) * k1 * k3 * k5
        + n(4.0) * k4 * k5);
    let c0 = n(64.0) * k1_4 * k2_3
        + n(96.0) * k1_2 * k2_4
        + n(192.0) * k1_3 * k2_2 * k3
        + n(16.0) * k1_4 * k3_2
        + n(160.0) * k1 * k2_3 * k3
        + n(144.0) * k1_2 * k2 * k3_2
        + n(80.0) * k1_2 * k2_2 * k4
        + n(32.0) * k1_3 * k3 * k4
        + n(72.0) * k2_2 * k3_2
        + n(16.0) * k1 * k3_3
        + n(80.0) * k1 * k2 * k3 * k4
        + n(16.0) * k1_2 * k4_2
        + n(16.0) * k1 * k2_2 * k5
        + n(8.0) * k1_2 * k3 * k5
        + n(4.0) * k3_2 * k4
        + n(16.0) * k2 * k3 * k5
        + n(8.0) * k1 * k4 * k5
        + k5 * k5;
    [c0, c1, c2, c3, c4]
}

/// `g_s` evaluated at `s`, divided by the coefficient 1-norm.
pub fn g_s_relative(k: &TwoMixCumulants, s: C) -> f64 {
    let g = g_s_poly(k);
    let norm: f64 = g.iter().map(|c| c.norm()).sum();
    if norm == 0.0 {
        0.0
    } else {
        poly::eval(&g, s).norm() / norm
    }
}

/// `p = ξ_1ξ_2` from `s` through the relation linear in `p`.
///
/// The relation holds for centered data (`k_1 = 0`), so it is applied to
/// `s − 2k_1` and the result shifted back.
pub fn p_from_s(s: C, k: &TwoMixCumulants) -> Result<C> {
    let [k1, k2, k3, k4, k5] = k.k;
    let sc = s - 2.0 * k1;
    let denom = 2.0 * sc * k2 - 2.0 * k3;
    let numer = 6.0 * sc * k2 * k2 - sc * sc * k3 - 10.0 * k2 * k3 + 2.0 * sc * k4 - k5;
    let scale = (k.scale() * (1.0 + sc.norm())).max(f64::MIN_POSITIVE);
    if denom.norm() <= DEGENERACY_TOL * scale {
        return Err(Error::DegenerateS);
    }
    let pc = -numer / denom;
    Ok(pc + k1 * s - k1 * k1)
}

/// One parameter tuple for the two-component model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoMixTuple {
    pub xi1: C,
    pub xi2: C,
    pub lambda: C,
    /// `λα_1`.
    pub lambda1: C,
    /// `(1−λ)α_2`.
    pub lambda2: C,
    /// `None` when `λ = 0`.
    pub alpha1: Option<C>,
    /// `None` when `λ = 1`.
    pub alpha2: Option<C>,
    /// `|m_6^predicted − m_6|`.
    pub m6_residual: f64,
}

impl TwoMixTuple {
    /// `i`-th moment of this tuple.
    pub fn moment(&self, i: usize) -> C {
        let fi = i as f64;
        let pw = |x: C, e: usize| {
            if e == 0 {
                C::new(1.0, 0.0)
            } else {
                x.powi(e as i32)
            }
        };
        let d1 = if i == 0 {
            C::new(0.0, 0.0)
        } else {
            fi * pw(self.xi1, i - 1)
        };
        let d2 = if i == 0 {
            C::new(0.0, 0.0)
        } else {
            fi * pw(self.xi2, i - 1)
        };
        self.lambda * pw(self.xi1, i)
            + (1.0 - self.lambda) * pw(self.xi2, i)
            + self.lambda1 * d1
            + self.lambda2 * d2
    }

    fn is_statistical(&self, tol: f64) -> bool {
        let real = |z: C| z.im.abs() <= tol * z.norm().max(1.0);
        real(self.xi1)
            && real(self.xi2)
            && real(self.lambda1)
            && real(self.lambda2)
            && real(self.lambda)
            && self.lambda.re >= -tol
            && self.lambda.re <= 1.0 + tol
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TwoComponentRecovery {
    /// Tuples sorted by `m_6` residual.
    pub candidates: Vec<TwoMixTuple>,
    /// Roots of `g_s` that were used.
    pub s_roots: Vec<C>,
    /// Roots of `g_s` skipped because the relation for `p` degenerates.
    pub degenerate_roots: usize,
    /// The data are a pure two-point mixture and were solved by the classical kernel route.
    pub fallback: bool,
}

fn tuple_from_support(xi1: C, xi2: C, m: &[C]) -> Result<TwoMixTuple> {
    let a = DMatrix::from_fn(5, 3, |row, col| {
        let i = row + 1;
        let fi = i as f64;
        match col {
            0 => xi1.powi(i as i32) - xi2.powi(i as i32),
            1 => fi * xi1.powi(i as i32 - 1),
            _ => fi * xi2.powi(i as i32 - 1),
        }
    });
    let b = DVector::from_fn(5, |row, _| m[row + 1] - xi2.powi(row as i32 + 1));
    let svd = a.svd(true, true);
    let x = svd
        .solve(&b, 0.0)
        .map_err(|e| Error::LinearAlgebra(e.to_string()))?;
    let [xi1, xi2, lambda, lambda1, lambda2] = polish_tuple([xi1, xi2, x[0], x[1], x[2]], m);
    let boundary = |w: C| w.norm() <= DEGENERACY_TOL;
    let mut t = TwoMixTuple {
        xi1,
        xi2,
        lambda,
        lambda1,
        lambda2,
        alpha1: (!boundary(lambda)).then(|| lambda1 / lambda),
        alpha2: (!boundary(1.0 - lambda)).then(|| lambda2 / (1.0 - lambda)),
        m6_residual: 0.0,
    };
    t.m6_residual = (t.moment(6) - m[6]).norm();
    Ok(t)
}

fn tuple_residual(v: &[C; 5], m: &[C]) -> DVector<C> {
    let [x1, x2, lam, l1, l2] = *v;
    DVector::from_fn(5, |row, _| {
        let i = row as i32 + 1;
        let fi = i as f64;
        lam * x1.powi(i)
            + (1.0 - lam) * x2.powi(i)
            + fi * (l1 * x1.powi(i - 1) + l2 * x2.powi(i - 1))
            - m[row + 1]
    })
}

/// Newton on `m_1, …, m_5` in `(ξ_1, ξ_2, λ, λα_1, (1−λ)α_2)`, kept while the residual drops.
fn polish_tuple(mut v: [C; 5], m: &[C]) -> [C; 5] {
    let mut f = tuple_residual(&v, m);
    for _ in 0..6 {
        let [x1, x2, lam, l1, l2] = v;
        let jac = DMatrix::from_fn(5, 5, |row, col| {
            let i = row as i32 + 1;
            let fi = i as f64;
            let pw = |x: C, e: i32| if e < 0 { C::new(0.0, 0.0) } else { x.powi(e) };
            match col {
                0 => lam * fi * pw(x1, i - 1) + l1 * fi * (fi - 1.0) * pw(x1, i - 2),
                1 => (1.0 - lam) * fi * pw(x2, i - 1) + l2 * fi * (fi - 1.0) * pw(x2, i - 2),
                2 => x1.powi(i) - x2.powi(i),
                3 => fi * pw(x1, i - 1),
                _ => fi * pw(x2, i - 1),
            }
        });
        let Some(step) = jac.lu().solve(&f) else {
            break;
        };
        let mut next = v;
        for (a, d) in next.iter_mut().zip(step.iter()) {
            *a -= d;
        }
        let fn_ = tuple_residual(&next, m);
        if !(fn_.norm() < f.norm()) {
            break;
        }
        v = next;
        f = fn_;
    }
    v
}

fn order_pair(a: C, b: C) -> (C, C) {
    if (a.re, a.im) <= (b.re, b.im) {
        (a, b)
    } else {
        (b, a)
    }
}

fn pure_two_point(m: &MomentSequence<C>) -> Result<TwoComponentRecovery> {
    let kernel = kernel_polynomial(m, 2, DEFAULT_RANK_TOL)?;
    if kernel.len() != 3 {
        return Err(Error::RankCondition {
            lower: kernel.len() - 1,
            upper: 2,
        });
    }
    let roots = poly::roots(&kernel)?;
    let (xi1, xi2) = order_pair(roots[0], roots[1]);
    let w = confluent_vandermonde_weights(&[xi1, xi2], 0, m, m.degree())?;
    let lambda = w.lambdas[0][0];
    let zero = C::new(0.0, 0.0);
    let mut t = TwoMixTuple {
        xi1,
        xi2,
        lambda,
        lambda1: zero,
        lambda2: zero,
        alpha1: Some(zero),
        alpha2: Some(zero),
        m6_residual: 0.0,
    };
    t.m6_residual = (t.moment(6) - m.values()[6]).norm();
    Ok(TwoComponentRecovery {
        candidates: vec![t],
        s_roots: vec![xi1 + xi2],
        degenerate_roots: 0,
        fallback: true,
    })
}

/// All parameter tuples consistent with `m_0, …, m_5`, ranked by their `m_6` residual.
/// With `statistical`, only real tuples with `λ ∈ [0, 1]` are kept.
pub fn recover_two_component<T: Scalar>(
    m: &MomentSequence<T>,
    statistical: bool,
) -> Result<TwoComponentRecovery> {
    if m.degree() < 6 {
        return Err(Error::InsufficientMoments {
            needed: 7,
            available: m.len(),
        });
    }
    let mc = m.to_complex();
    let k = TwoMixCumulants::from_moments(&mc)?;
    let rank = numeric_rank(&moment_matrix(&mc, 2, 2)?, DEFAULT_RANK_TOL);
    if rank <= 2 {
        return pure_two_point(&mc);
    }
    let g = g_s_poly(&k);
    let s_roots = poly::roots(&g)?;
    let mv = mc.values();
    let mut candidates = Vec::new();
    let mut degenerate = 0;
    for &s in &s_roots {
        let p = match p_from_s(s, &k) {
            Ok(p) => p,
            Err(Error::DegenerateS) => {
                degenerate += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let roots = poly::roots(&[p, -s, C::new(1.0, 0.0)])?;
        let (xi1, xi2) = order_pair(roots[0], roots[1]);
        if (xi1 - xi2).norm() <= 1e-9 * xi1.norm().max(1.0) {
            degenerate += 1;
            continue;
        }
        let t = tuple_from_support(xi1, xi2, mv)?;
        if statistical && !t.is_statistical(1e-8) {
            continue;
        }
        candidates.push(t);
    }
    if candidates.is_empty() && degenerate == s_roots.len() {
        return Err(Error::DegenerateS);
    }
    candidates.sort_by(|a, b| a.m6_residual.total_cmp(&b.m6_residual));
    Ok(TwoComponentRecovery {
        candidates,
        s_roots,
        degenerate_roots: degenerate,
        fallback: false,
    })
}
