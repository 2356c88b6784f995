//! Damped multi-start Newton (Gauss–Newton when overdetermined).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::system::PowerSystem;
use crate::poly;

type C = Complex64;

/// Solves `J Δ = rhs` by LU when square and least squares otherwise.
pub(crate) fn solve_step(j: &DMatrix<C>, rhs: &DVector<C>) -> Option<DVector<C>> {
    if j.is_square() {
        if let Some(x) = j.clone().lu().solve(rhs) {
            if x.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
                return Some(x);
            }
        }
    }
    let svd = j.clone().svd(true, true);
    let x = svd.solve(rhs, 1e-14 * svd.singular_values.max()).ok()?;
    x.iter()
        .all(|v| v.re.is_finite() && v.im.is_finite())
        .then_some(x)
}

pub(crate) fn norm(v: &DVector<C>) -> f64 {
    v.norm()
}

#[derive(Debug, Clone)]
pub(crate) struct NewtonOutcome {
    pub x: Vec<C>,
    pub residual: f64,
    pub converged: bool,
}

/// Damped Newton from `x0`; halves the step while the residual grows.
pub(crate) fn damped_newton(
    sys: &PowerSystem<C>,
    x0: Vec<C>,
    max_iter: usize,
    tol: f64,
) -> NewtonOutcome {
    let mut x = DVector::from_vec(x0);
    let mut f = sys.eval(x.as_slice());
    let mut fnorm = norm(&f);
    let mut small_step = false;
    for _ in 0..max_iter {
        let jac = sys.jacobian(x.as_slice());
        let Some(delta) = solve_step(&jac, &(-&f)) else {
            break;
        };
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let trial = &x + &delta * C::new(step, 0.0);
            let ft = sys.eval(trial.as_slice());
            let tn = norm(&ft);
            if tn.is_finite() && tn < fnorm {
                x = trial;
                f = ft;
                fnorm = tn;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
        if delta.norm() * step <= tol * (1.0 + x.norm()) {
            small_step = true;
            break;
        }
    }
    let converged = fnorm <= tol || small_step;
    NewtonOutcome {
        residual: fnorm,
        x: x.iter().copied().collect(),
        converged,
    }
}

/// Random monic start with roots uniform in the disk of the given radius.
pub(crate) fn random_start(rng: &mut ChaCha8Rng, r: usize, radius: f64) -> Vec<C> {
    let roots: Vec<C> = (0..r)
        .map(|_| {
            let rho = radius * rng.random::<f64>().sqrt();
            let theta = std::f64::consts::TAU * rng.random::<f64>();
            C::from_polar(rho, theta)
        })
        .collect();
    let mut p = poly::from_roots(&roots);
    p.pop();
    p
}

/// Runs `starts` independent Newton solves; start `i` uses stream `i` of the seeded generator.
pub(crate) fn multi_start(
    sys: &PowerSystem<C>,
    starts: usize,
    radius: f64,
    seed: u64,
    max_iter: usize,
    tol: f64,
) -> Vec<NewtonOutcome> {
    (0..starts)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let x0 = random_start(&mut rng, sys.r(), radius);
            damped_newton(sys, x0, max_iter, tol)
        })
        .collect()
}
