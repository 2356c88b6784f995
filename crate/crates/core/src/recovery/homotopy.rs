//! Total-degree homotopy `H = (1−t)·γ·G + t·F` with `G_i = x_i^(l+1) − 1`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::newton::{damped_newton, solve_step};
use super::system::PowerSystem;

type C = Complex64;

const MAX_STEPS: usize = 50_000;
const MIN_STEP: f64 = 1e-13;
const MAX_STEP: f64 = 0.05;
const DIVERGENCE: f64 = 1e8;
/// Stalled paths past this time are handed to Newton on the target system.
const ENDGAME: f64 = 0.9;

#[derive(Debug, Clone)]
pub(crate) struct PathEnd {
    pub x: Vec<C>,
    pub residual: f64,
    pub converged: bool,
}

struct Homotopy<'a> {
    sys: &'a PowerSystem<C>,
    gamma: C,
    degree: i32,
}

impl Homotopy<'_> {
    fn start_value(&self, x: &DVector<C>) -> DVector<C> {
        x.map(|v| v.powi(self.degree) - C::new(1.0, 0.0))
    }

    fn value(&self, x: &DVector<C>, t: f64) -> DVector<C> {
        self.start_value(x) * (self.gamma * (1.0 - t))
            + self.sys.eval(x.as_slice()) * C::new(t, 0.0)
    }

    fn dx(&self, x: &DVector<C>, t: f64) -> DMatrix<C> {
        let d = self.degree as f64;
        let mut j = self.sys.jacobian(x.as_slice()) * C::new(t, 0.0);
        for i in 0..x.len() {
            j[(i, i)] += self.gamma * (1.0 - t) * d * x[i].powi(self.degree - 1);
        }
        j
    }

    fn dt(&self, x: &DVector<C>) -> DVector<C> {
        self.sys.eval(x.as_slice()) - self.start_value(x) * self.gamma
    }

    fn velocity(&self, x: &DVector<C>, t: f64) -> Option<DVector<C>> {
        solve_step(&self.dx(x, t), &(-self.dt(x)))
    }

    fn predict(&self, x: &DVector<C>, t: f64, h: f64) -> Option<DVector<C>> {
        let hc = C::new(h, 0.0);
        let half = C::new(h / 2.0, 0.0);
        let k1 = self.velocity(x, t)?;
        let k2 = self.velocity(&(x + &k1 * half), t + h / 2.0)?;
        let k3 = self.velocity(&(x + &k2 * half), t + h / 2.0)?;
        let k4 = self.velocity(&(x + &k3 * hc), t + h)?;
        Some(x + (k1 + k2 * C::new(2.0, 0.0) + k3 * C::new(2.0, 0.0) + k4) * (hc / 6.0))
    }

    fn correct(&self, mut x: DVector<C>, t: f64) -> Option<DVector<C>> {
        for it in 0..3 {
            let delta = solve_step(&self.dx(&x, t), &(-self.value(&x, t)))?;
            let size = delta.norm();
            if it == 0 && size > 0.1 * (1.0 + x.norm()) {
                return None;
            }
            x += delta;
            if size <= 1e-10 * (1.0 + x.norm()) {
                return Some(x);
            }
        }
        None
    }

    fn track(&self, start: DVector<C>, max_iter: usize, tol: f64) -> Option<PathEnd> {
        let mut x = start;
        let mut t = 0.0;
        let mut h = 0.01;
        let mut streak = 0;
        let mut steps = 0;
        while t < 1.0 {
            steps += 1;
            if steps > MAX_STEPS || h < MIN_STEP {
                if t < ENDGAME {
                    return None;
                }
                break;
            }
            let step = h.min(1.0 - t);
            let t1 = if step == 1.0 - t { 1.0 } else { t + step };
            let next = self.predict(&x, t, step).and_then(|p| self.correct(p, t1));
            match next {
                Some(xn) => {
                    if xn.norm() > DIVERGENCE {
                        return None;
                    }
                    x = xn;
                    t = t1;
                    streak += 1;
                    if streak >= 3 {
                        h = (h * 2.0).min(MAX_STEP);
                        streak = 0;
                    }
                }
                None => {
                    h *= 0.5;
                    streak = 0;
                }
            }
        }
        let out = damped_newton(self.sys, x.iter().copied().collect(), max_iter, tol);
        Some(PathEnd {
            x: out.x,
            residual: out.residual,
            converged: out.converged,
        })
    }
}

/// Start solutions: every tuple of `(l+1)`-th roots of unity, enumerated in
/// mixed-radix order.
fn start_point(index: usize, r: usize, degree: usize) -> DVector<C> {
    let mut rest = index;
    DVector::from_fn(r, |_, _| {
        let k = rest % degree;
        rest /= degree;
        C::from_polar(1.0, std::f64::consts::TAU * k as f64 / degree as f64)
    })
}

/// Number of paths `(l+1)^r`, or `None` on overflow.
pub(crate) fn path_count(r: usize, l: usize) -> Option<usize> {
    (l + 1).checked_pow(u32::try_from(r).ok()?)
}

/// Tracks all `(l+1)^r` paths; failed paths are `None`.
pub(crate) fn track_all(
    sys: &PowerSystem<C>,
    seed: u64,
    max_iter: usize,
    tol: f64,
) -> Vec<Option<PathEnd>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let gamma = C::from_polar(1.0, std::f64::consts::TAU * rng.random::<f64>());
    let degree = sys.l() + 1;
    let hom = Homotopy {
        sys,
        gamma,
        degree: degree as i32,
    };
    let n = path_count(sys.r(), sys.l()).unwrap_or(0);
    (0..n)
        .into_par_iter()
        .map(|i| hom.track(start_point(i, sys.r(), degree), max_iter, tol))
        .collect()
}
