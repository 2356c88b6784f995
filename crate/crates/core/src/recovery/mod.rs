//! Parameter recovery: the linear Prony route with multiplicities and the
//! minimal-moment route through the power system.

mod homotopy;
mod newton;
mod system;
mod vandermonde;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hankel::{kernel_polynomial, rank_profile, singular_values};
use crate::moments::{LocalDirac, LocalDiracMixture, MomentSequence};
use crate::poly;
use crate::scalar::Scalar;

pub use system::{power_residual_norm, power_system_jacobian, power_system_residual};
pub use vandermonde::{
    confluent_vandermonde_matrix, confluent_vandermonde_weights,
    confluent_vandermonde_weights_mixed, polish_support, WeightSolution,
};

use system::PowerSystem;

type C = Complex64;

/// Default absolute tolerance for merging roots and candidates.
pub const DEFAULT_CLUSTER_TOL: f64 = 1e-6;

/// Largest number of homotopy paths tracked before falling back to Newton.
pub const MAX_HOMOTOPY_PATHS: usize = 4096;

/// Polynomial system solver used by the minimal-moment route.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    /// Homotopy when the path count is at most [`MAX_HOMOTOPY_PATHS`], Newton otherwise.
    #[default]
    Auto,
    Homotopy,
    Newton,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecoveryConfig {
    /// Number of Newton starts.
    pub starts: usize,
    pub max_iter: usize,
    pub newton_tol: f64,
    pub cluster_tol: f64,
    pub rank_tol: f64,
    /// Minimum ratio between the second-best and best selector residual.
    pub accept_ratio: f64,
    pub seed: u64,
    pub solver: Solver,
    /// Keep only candidates with real support points.
    pub statistical: bool,
    /// Return the best candidate even when the ratio test fails.
    pub allow_ambiguous: bool,
}

impl Default for RecoveryConfig {
    fn default() -> Self {
        Self {
            starts: 200,
            max_iter: 100,
            newton_tol: 1e-12,
            cluster_tol: DEFAULT_CLUSTER_TOL,
            rank_tol: crate::hankel::DEFAULT_RANK_TOL,
            accept_ratio: 1e3,
            seed: 0,
            solver: Solver::Auto,
            statistical: false,
            allow_ambiguous: false,
        }
    }
}

impl RecoveryConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| {
            Err(Error::InvalidInput(format!(
                "invalid configuration: {what}"
            )))
        };
        if self.starts == 0 || self.max_iter == 0 {
            return bad("starts and max_iter must be positive");
        }
        if !(self.newton_tol > 0.0 && self.cluster_tol > 0.0) {
            return bad("tolerances must be positive");
        }
        if !(self.rank_tol > 0.0 && self.rank_tol < 1.0) {
            return bad("rank_tol must lie in (0, 1)");
        }
        if !(self.accept_ratio > 1.0) {
            return bad("accept_ratio must exceed 1");
        }
        Ok(())
    }
}

/// A solution `p_0, …, p_(r−1)` of the power system.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateSolution {
    pub p: Vec<C>,
    /// `‖M_(r−1,(l+1)r) · coeffs(p^(l+1))‖`.
    pub residual_primary: f64,
    /// `‖M_(r,(l+1)r) · coeffs(p^(l+1))‖`, when `m_((l+2)r)` is available.
    pub residual_selector: Option<f64>,
}

impl CandidateSolution {
    /// The monic polynomial, ascending coefficients.
    pub fn polynomial(&self) -> Vec<C> {
        poly::monic(&self.p)
    }
}

/// Outcome of the ratio test.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Selection {
    pub candidate: CandidateSolution,
    pub best: Option<f64>,
    pub second: Option<f64>,
    pub ratio: Option<f64>,
    pub ambiguous: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Route {
    Minimal,
    Linear,
}

#[derive(Debug, Clone, Serialize)]
pub struct RecoveryDiagnostics {
    pub route: Route,
    pub solver: Option<Solver>,
    /// Rows of the power system after any extension.
    pub rows: Option<usize>,
    pub paths: usize,
    pub converged: usize,
    pub candidate_count: usize,
    pub candidates: Vec<CandidateSolution>,
    pub best_selector: Option<f64>,
    pub second_selector: Option<f64>,
    pub selector_ratio: Option<f64>,
    pub ambiguous: bool,
    pub rank_profile: Vec<usize>,
    pub multiplicities: Vec<usize>,
    pub vandermonde_condition: f64,
    pub vandermonde_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Recovery {
    pub mixture: LocalDiracMixture<C>,
    pub diagnostics: RecoveryDiagnostics,
}

struct MinimalSolve {
    candidates: Vec<CandidateSolution>,
    rows: usize,
    paths: usize,
    converged: usize,
    solver: Solver,
}

fn start_radius(m: &MomentSequence<C>) -> f64 {
    let v = m.values();
    let ratio = v
        .windows(2)
        .filter(|w| w[0].norm() > 0.0)
        .map(|w| w[1].norm() / w[0].norm())
        .filter(|x| x.is_finite())
        .fold(0.0, f64::max);
    if ratio > 0.0 {
        2.0 * ratio
    } else {
        2.0
    }
}

fn jacobian_singular(j: &DMatrix<C>) -> bool {
    let sv = singular_values(j);
    match (sv.first(), sv.last()) {
        (Some(&hi), Some(&lo)) => hi == 0.0 || lo <= 1e-8 * hi,
        _ => true,
    }
}

fn dedupe(points: Vec<Vec<C>>, tol: f64) -> Vec<Vec<C>> {
    let mut kept: Vec<Vec<C>> = Vec::new();
    for x in points {
        let close = kept.iter().any(|y| {
            let dist = x
                .iter()
                .zip(y)
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            let size = y.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            dist <= tol * size.max(1.0)
        });
        if !close {
            kept.push(x);
        }
    }
    kept
}

fn is_real(z: C, tol: f64) -> bool {
    z.im.abs() <= tol * z.norm().max(1.0)
}

fn real_rooted(p: &[C]) -> bool {
    if !p.iter().all(|&c| is_real(c, 1e-8)) {
        return false;
    }
    match poly::roots(&poly::monic(p)) {
        Ok(roots) => roots.iter().all(|&z| is_real(z, 1e-6)),
        Err(_) => false,
    }
}

fn solve_detailed(
    m: &MomentSequence<C>,
    r: usize,
    l: usize,
    cfg: &RecoveryConfig,
) -> Result<MinimalSolve> {
    cfg.validate()?;
    if r == 0 {
        return Err(Error::InvalidInput(
            "number of components must be at least 1".into(),
        ));
    }
    let width = (l + 1) * r;
    if m.len() < width + r {
        return Err(Error::InsufficientMoments {
            needed: width + r,
            available: m.len(),
        });
    }
    let bezout = homotopy::path_count(r, l);
    let solver = match cfg.solver {
        Solver::Auto if bezout.is_some_and(|n| n <= MAX_HOMOTOPY_PATHS) => Solver::Homotopy,
        Solver::Auto => Solver::Newton,
        s => s,
    };
    if solver == Solver::Homotopy && bezout.is_none() {
        return Err(Error::InvalidInput("too many homotopy paths".into()));
    }
    let radius = start_radius(m);
    let mut rows = r;
    loop {
        let mut sys = PowerSystem::new(m, rows, r, l)?;
        if sys.normalize() == 0.0 {
            return Err(Error::InvalidInput(
                "all moments in the system vanish".into(),
            ));
        }
        let (ends, paths) = if solver == Solver::Homotopy && rows == r {
            let ends = homotopy::track_all(&sys, cfg.seed, cfg.max_iter, cfg.newton_tol);
            let n = ends.len();
            let ends = ends
                .into_iter()
                .flatten()
                .map(|e| (e.x, e.residual, e.converged))
                .collect::<Vec<_>>();
            (ends, n)
        } else {
            let ends = newton::multi_start(
                &sys,
                cfg.starts,
                radius,
                cfg.seed,
                cfg.max_iter,
                cfg.newton_tol,
            );
            let ends = ends
                .into_iter()
                .map(|e| (e.x, e.residual, e.converged))
                .collect::<Vec<_>>();
            (ends, cfg.starts)
        };
        let square = sys.rows() == r;
        let converged: Vec<Vec<C>> = ends
            .into_iter()
            .filter(|(_, res, ok)| *ok && (!square || *res <= 1e-8))
            .map(|(x, _, _)| x)
            .collect();
        if converged.is_empty() {
            return Err(Error::NoConvergence);
        }
        let n_converged = converged.len();
        let singular = converged
            .iter()
            .filter(|x| jacobian_singular(&sys.jacobian(x)))
            .count();
        let distinct = dedupe(converged, cfg.cluster_tol);
        let curve_like = match solver {
            Solver::Homotopy if rows == r => {
                singular as f64 > 0.3 * n_converged as f64 && distinct.len() > 1
            }
            _ => {
                distinct.len() as f64 > 0.3 * n_converged as f64
                    && bezout.is_none_or(|b| distinct.len() > b)
                    && n_converged > 1
            }
        };
        if curve_like {
            let needed = rows + width + 1;
            if m.len() < needed {
                return Err(Error::InsufficientMoments {
                    needed,
                    available: m.len(),
                });
            }
            rows += 1;
            continue;
        }
        let mut candidates = Vec::with_capacity(distinct.len());
        for p in distinct {
            if cfg.statistical && !real_rooted(&p) {
                continue;
            }
            let residual_primary = power_residual_norm(m, r, r, l, &p)?;
            let residual_selector = if m.len() > width + r {
                Some(power_residual_norm(m, r + 1, r, l, &p)?)
            } else {
                None
            };
            candidates.push(CandidateSolution {
                p,
                residual_primary,
                residual_selector,
            });
        }
        candidates.sort_by(|a, b| {
            let key = |c: &CandidateSolution| c.residual_selector.unwrap_or(c.residual_primary);
            key(a).total_cmp(&key(b))
        });
        return Ok(MinimalSolve {
            candidates,
            rows,
            paths,
            converged: n_converged,
            solver,
        });
    }
}

/// Distinct solutions of the power system.
pub fn solve_minimal_system<T: Scalar>(
    m: &MomentSequence<T>,
    r: usize,
    l: usize,
    cfg: &RecoveryConfig,
) -> Result<Vec<CandidateSolution>> {
    Ok(solve_detailed(&m.to_complex(), r, l, cfg)?.candidates)
}

/// Picks the candidate with the smallest selector residual and applies the ratio test.
pub fn select_candidate<T: Scalar>(
    cands: &[CandidateSolution],
    m: &MomentSequence<T>,
    r: usize,
    l: usize,
    cfg: &RecoveryConfig,
) -> Result<Selection> {
    cfg.validate()?;
    if cands.is_empty() {
        return Err(Error::NoConvergence);
    }
    let mc = m.to_complex();
    let needed = (l + 2) * r + 1;
    if cands.len() == 1 {
        let best = if mc.len() >= needed {
            Some(power_residual_norm(&mc, r + 1, r, l, &cands[0].p)?)
        } else {
            None
        };
        return Ok(Selection {
            candidate: cands[0].clone(),
            best,
            second: None,
            ratio: None,
            ambiguous: false,
        });
    }
    if mc.len() < needed {
        return Err(Error::InsufficientMoments {
            needed,
            available: mc.len(),
        });
    }
    let mut scored = cands
        .iter()
        .map(|c| Ok((power_residual_norm(&mc, r + 1, r, l, &c.p)?, c)))
        .collect::<Result<Vec<_>>>()?;
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (best, cand) = scored[0];
    let second = scored[1].0;
    let ratio = if best > 0.0 {
        second / best
    } else if second > 0.0 {
        f64::INFINITY
    } else {
        1.0
    };
    let ambiguous = !(best * cfg.accept_ratio <= second) || second == 0.0;
    if ambiguous && !cfg.allow_ambiguous {
        return Err(Error::Ambiguous { best, second });
    }
    let mut candidate = cand.clone();
    candidate.residual_selector = Some(best);
    Ok(Selection {
        candidate,
        best: Some(best),
        second: Some(second),
        ratio: Some(ratio),
        ambiguous,
    })
}

fn sorted_mixture(xis: Vec<C>, lambdas: Vec<Vec<C>>) -> Result<LocalDiracMixture<C>> {
    let mut comps: Vec<LocalDirac<C>> = xis
        .into_iter()
        .zip(lambdas)
        .map(|(x, l)| LocalDirac::new(x, l))
        .collect();
    poly::sort_complex_by(&mut comps, |c| c.xi);
    LocalDiracMixture::new(comps)
}

/// Recovers `r` components of common order `l`. Uses the minimal route when
/// `m_((l+2)r)` is available and the linear route when only `2(l+1)r`
/// moments are given.
pub fn recover<T: Scalar>(
    m: &MomentSequence<T>,
    r: usize,
    l: usize,
    cfg: &RecoveryConfig,
) -> Result<Recovery> {
    cfg.validate()?;
    if r == 0 {
        return Err(Error::InvalidInput(
            "number of components must be at least 1".into(),
        ));
    }
    let mc = m.to_complex();
    let minimal = (l + 2) * r + 1;
    if mc.len() < minimal {
        if mc.len() >= 2 * (l + 1) * r {
            return prony_core(&mc, (l + 1) * r, cfg);
        }
        return Err(Error::InsufficientMoments {
            needed: minimal,
            available: mc.len(),
        });
    }
    let solve = solve_detailed(&mc, r, l, cfg)?;
    let sel = select_candidate(&solve.candidates, &mc, r, l, cfg)?;
    let (mixture, w) = mixture_from_candidate(&mc, &sel.candidate, r, l, cfg)?;
    Ok(Recovery {
        mixture,
        diagnostics: RecoveryDiagnostics {
            route: Route::Minimal,
            solver: Some(solve.solver),
            rows: Some(solve.rows),
            paths: solve.paths,
            converged: solve.converged,
            candidate_count: solve.candidates.len(),
            candidates: solve.candidates,
            best_selector: sel.best,
            second_selector: sel.second,
            selector_ratio: sel.ratio,
            ambiguous: sel.ambiguous,
            rank_profile: rank_profile(&mc, cfg.rank_tol),
            multiplicities: vec![l + 1; r],
            vandermonde_condition: w.condition,
            vandermonde_residual: w.residual,
        },
    })
}

/// Support points and weights implied by one candidate polynomial.
pub fn mixture_from_candidate<T: Scalar>(
    m: &MomentSequence<T>,
    cand: &CandidateSolution,
    r: usize,
    l: usize,
    cfg: &RecoveryConfig,
) -> Result<(LocalDiracMixture<C>, WeightSolution<C>)> {
    let mc = m.to_complex();
    let roots = poly::roots(&cand.polynomial())?;
    let clusters = poly::cluster_roots(&roots, cfg.cluster_tol);
    if clusters.len() < r {
        return Err(Error::DuplicateSupport(format!(
            "candidate polynomial has {} distinct roots, expected {r}",
            clusters.len()
        )));
    }
    let xis: Vec<C> = clusters.iter().map(|c| c.center).collect();
    let w = confluent_vandermonde_weights(&xis, l, &mc, mc.degree())?;
    let mixture = sorted_mixture(xis, w.lambdas.clone())?;
    Ok((mixture, w))
}

fn prony_core(m: &MomentSequence<C>, s: usize, cfg: &RecoveryConfig) -> Result<Recovery> {
    let kernel = kernel_polynomial(m, s, cfg.rank_tol)?;
    if kernel.len() == 1 {
        return Err(Error::InvalidInput("all moments vanish".into()));
    }
    let roots = poly::roots(&kernel)?;
    let (xis, multiplicities, w) = fit_clusters(&roots, m, cfg)?;
    let mixture = sorted_mixture(xis, w.lambdas)?;
    let candidate = CandidateSolution {
        residual_primary: 0.0,
        residual_selector: None,
        p: kernel[..kernel.len() - 1].to_vec(),
    };
    Ok(Recovery {
        mixture,
        diagnostics: RecoveryDiagnostics {
            route: Route::Linear,
            solver: None,
            rows: None,
            paths: 0,
            converged: 0,
            candidate_count: 1,
            candidates: vec![candidate],
            best_selector: None,
            second_selector: None,
            selector_ratio: None,
            ambiguous: false,
            rank_profile: rank_profile(m, cfg.rank_tol),
            multiplicities,
            vandermonde_condition: w.condition,
            vandermonde_residual: w.residual,
        },
    })
}

/// Clusters the kernel roots at increasing tolerances, polishes each distinct
/// grouping against the moments and keeps the coarsest one that fits within
/// a factor of ten of the best fit.
fn fit_clusters(
    roots: &[C],
    m: &MomentSequence<C>,
    cfg: &RecoveryConfig,
) -> Result<(Vec<C>, Vec<usize>, WeightSolution<C>)> {
    let floor = 1e-13 * m.scale();
    let mut fits: Vec<(Vec<C>, Vec<usize>, WeightSolution<C>)> = Vec::new();
    let mut first_err = None;
    let mut seen: Vec<Vec<usize>> = Vec::new();
    for tol in [cfg.cluster_tol, 1e-5, 1e-4, 1e-3, 1e-2] {
        let clusters = poly::cluster_roots(roots, tol.max(cfg.cluster_tol));
        let mult: Vec<usize> = clusters.iter().map(|c| c.multiplicity).collect();
        let mut key = mult.clone();
        key.sort_unstable();
        if seen.contains(&key) {
            continue;
        }
        seen.push(key);
        let mut xis: Vec<C> = clusters.iter().map(|c| c.center).collect();
        let orders: Vec<usize> = mult.iter().map(|k| k - 1).collect();
        match confluent_vandermonde_weights_mixed(&xis, &orders, m, m.degree()) {
            Ok(mut w) => {
                w.residual = polish_support(&mut xis, &orders, &mut w.lambdas, m, m.degree(), 8);
                fits.push((xis, mult, w));
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    let best = fits
        .iter()
        .map(|f| f.2.residual)
        .fold(f64::INFINITY, f64::min);
    fits.into_iter()
        .filter(|f| f.2.residual <= 10.0 * best + floor)
        .min_by_key(|f| f.1.len())
        .ok_or_else(|| {
            first_err.unwrap_or_else(|| Error::LinearAlgebra("no admissible root grouping".into()))
        })
}

/// Classical Prony with multiplicities on the largest Hankel block the
/// sequence supports. Component orders follow from root multiplicities.
pub fn prony_linear<T: Scalar>(m: &MomentSequence<T>, cfg: &RecoveryConfig) -> Result<Recovery> {
    cfg.validate()?;
    let s = m.len() / 2;
    if s == 0 {
        return Err(Error::InsufficientMoments {
            needed: 2,
            available: m.len(),
        });
    }
    prony_core(&m.to_complex(), s, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::local_dirac_moments;

    fn c(re: f64) -> C {
        C::new(re, 0.0)
    }

    #[test]
    fn config_validation() {
        assert!(RecoveryConfig::default().validate().is_ok());
        let bad = RecoveryConfig {
            accept_ratio: 1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = RecoveryConfig {
            rank_tol: 1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn single_dirac_location() {
        let m = MomentSequence::new(vec![2.0, 3.0, 4.5]).unwrap();
        let rec = recover(&m, 1, 0, &RecoveryConfig::default()).unwrap();
        let comp = &rec.mixture.components()[0];
        assert!((comp.xi - c(1.5)).norm() < 1e-12);
        assert!((comp.lambdas[0] - c(2.0)).norm() < 1e-12);
    }

    #[test]
    fn linear_one_by_one_system() {
        let m = MomentSequence::new(vec![1.0, 0.25, 0.0625]).unwrap();
        let cands = solve_minimal_system(&m, 1, 0, &RecoveryConfig::default()).unwrap();
        assert_eq!(cands.len(), 1);
        assert!((cands[0].p[0] + c(0.25)).norm() < 1e-14);
    }

    #[test]
    fn bernoulli_candidate() {
        let m = MomentSequence::new(vec![1.0, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5]).unwrap();
        let cfg = RecoveryConfig::default();
        let cands = solve_minimal_system(&m, 2, 1, &cfg).unwrap();
        assert!(cands
            .iter()
            .any(|k| (k.p[0]).norm() < 1e-8 && (k.p[1] + c(1.0)).norm() < 1e-8));
    }

    #[test]
    fn single_candidate_is_returned() {
        let cand = CandidateSolution {
            p: vec![c(-1.0)],
            residual_primary: 0.0,
            residual_selector: None,
        };
        let m = MomentSequence::new(vec![1.0, 1.0]).unwrap();
        let sel = select_candidate(std::slice::from_ref(&cand), &m, 1, 0, &RecoveryConfig::default()).unwrap();
        assert_eq!(sel.candidate.p, cand.p);
    }

    #[test]
    fn tie_is_ambiguous() {
        let m = MomentSequence::new(vec![1.0, 0.0, 1.0, 0.0]).unwrap();
        let a = CandidateSolution {
            p: vec![c(1.0)],
            residual_primary: 1.0,
            residual_selector: None,
        };
        let b = CandidateSolution {
            p: vec![c(-1.0)],
            residual_primary: 1.0,
            residual_selector: None,
        };
        let cfg = RecoveryConfig::default();
        assert!(matches!(
            select_candidate(&[a.clone(), b.clone()], &m, 1, 0, &cfg),
            Err(Error::Ambiguous { .. })
        ));
        let lenient = RecoveryConfig {
            allow_ambiguous: true,
            ..cfg
        };
        assert!(
            select_candidate(&[a, b], &m, 1, 0, &lenient)
                .unwrap()
                .ambiguous
        );
    }

    #[test]
    fn prony_first_order_dirac() {
        let m = MomentSequence::new(vec![1.0, 3.0, 8.0, 20.0, 48.0]).unwrap();
        let rec = prony_linear(&m, &RecoveryConfig::default()).unwrap();
        let comp = &rec.mixture.components()[0];
        assert_eq!(rec.mixture.len(), 1);
        assert!((comp.xi - c(2.0)).norm() < 1e-6);
        assert!((comp.lambdas[0] - c(1.0)).norm() < 1e-6);
        assert!((comp.lambdas[1] - c(1.0)).norm() < 1e-6);
    }

    #[test]
    fn prony_mixed_orders() {
        let mix = LocalDiracMixture::new(vec![
            LocalDirac::new(-1.0, vec![0.4]),
            LocalDirac::new(0.8, vec![0.6, 0.3]),
        ])
        .unwrap();
        let m = local_dirac_moments(&mix, 6);
        let rec = prony_linear(&m, &RecoveryConfig::default()).unwrap();
        assert_eq!(rec.diagnostics.multiplicities, vec![1, 2]);
        let comps = rec.mixture.components();
        assert!((comps[0].xi - c(-1.0)).norm() < 1e-6);
        assert!((comps[1].lambdas[1] - c(0.3)).norm() < 1e-5);
    }

    #[test]
    fn insufficient_moments() {
        let m = MomentSequence::new(vec![1.0, 0.5, 0.5]).unwrap();
        assert!(matches!(
            recover(&m, 2, 1, &RecoveryConfig::default()),
            Err(Error::InsufficientMoments { needed: 7, .. })
        ));
    }
}
