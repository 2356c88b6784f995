//! Piecewise-linear signals on `[−π, π)`, their Fourier coefficients, and
//! reconstruction through first-order local Dirac mixtures on the unit circle.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moments::{LocalDirac, LocalDiracMixture, MomentSequence};
use crate::recovery::{recover, RecoveryConfig, RecoveryDiagnostics};

type C = Complex64;

const I: C = C::new(0.0, 1.0);

/// Accepted deviation of `|ξ_j|` from 1 before projecting onto the circle.
pub const CIRCLE_TOL: f64 = 1e-3;

/// `f(x) = f_j + (x − t_j) f'_j` on `[t_j, t_(j+1))`, zero outside `[t_1, t_r)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseLinearSignal {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl PiecewiseLinearSignal {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>, slopes: Vec<f64>) -> Result<Self> {
        let r = breakpoints.len();
        if r == 0 {
            return Err(Error::InvalidInput(
                "a signal needs at least one breakpoint".into(),
            ));
        }
        if values.len() != r - 1 || slopes.len() != r - 1 {
            return Err(Error::InvalidInput(format!(
                "{r} breakpoints need {} values and slopes, got {} and {}",
                r - 1,
                values.len(),
                slopes.len()
            )));
        }
        if breakpoints.iter().any(|t| !(-PI..PI).contains(t)) {
            return Err(Error::InvalidInput(
                "breakpoints must lie in [-pi, pi)".into(),
            ));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        if values.iter().chain(&slopes).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(
                "values and slopes must be finite".into(),
            ));
        }
        Ok(Self {
            breakpoints,
            values,
            slopes,
        })
    }

    /// The zero signal with a single breakpoint at `−π`.
    pub fn zero() -> Self {
        Self {
            breakpoints: vec![-PI],
            values: vec![],
            slopes: vec![],
        }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    /// Number of breakpoints `r`.
    pub fn len(&self) -> usize {
        self.breakpoints.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `f_j` with `f_0 = f_r = 0`, for `0 ≤ j ≤ r`.
    fn f(&self, j: usize) -> f64 {
        if j == 0 || j >= self.len() {
            0.0
        } else {
            self.values[j - 1]
        }
    }

    fn df(&self, j: usize) -> f64 {
        if j == 0 || j >= self.len() {
            0.0
        } else {
            self.slopes[j - 1]
        }
    }

    /// `t_j` for `1 ≤ j ≤ r`; `t_0` only ever multiplies `f'_0 = 0`.
    fn t(&self, j: usize) -> f64 {
        if j == 0 {
            0.0
        } else {
            self.breakpoints[j - 1]
        }
    }

    /// Value jump `f_j − f_(j−1) + (t_(j−1) − t_j) f'_(j−1)` at `t_j`.
    fn jump(&self, j: usize) -> f64 {
        self.f(j) - self.f(j - 1) + (self.t(j - 1) - self.t(j)) * self.df(j - 1)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let idx = self.breakpoints.partition_point(|&t| t <= x);
        if idx == 0 || idx >= self.len() {
            return 0.0;
        }
        self.values[idx - 1] + (x - self.breakpoints[idx - 1]) * self.slopes[idx - 1]
    }
}

/// Coefficients `c_(−s), …, c_s`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FourierSamples {
    s: usize,
    coeffs: Vec<C>,
}

impl FourierSamples {
    pub fn new(s: usize, coeffs: Vec<C>) -> Result<Self> {
        if coeffs.len() != 2 * s + 1 {
            return Err(Error::InvalidInput(format!(
                "expected {} coefficients for s = {s}, got {}",
                2 * s + 1,
                coeffs.len()
            )));
        }
        Ok(Self { s, coeffs })
    }

    /// Builds samples from `(k, c_k)` pairs covering `−s..=s` exactly once.
    pub fn from_pairs(pairs: &[(i64, C)]) -> Result<Self> {
        let s = pairs
            .iter()
            .map(|(k, _)| k.unsigned_abs() as usize)
            .max()
            .unwrap_or(0);
        let mut coeffs = vec![None; 2 * s + 1];
        for &(k, c) in pairs {
            let slot = &mut coeffs[(k + s as i64) as usize];
            if slot.is_some() {
                return Err(Error::InvalidInput(format!(
                    "duplicate coefficient for k = {k}"
                )));
            }
            *slot = Some(c);
        }
        let coeffs = coeffs
            .into_iter()
            .enumerate()
            .map(|(i, c)| {
                c.ok_or_else(|| {
                    Error::InvalidInput(format!(
                        "missing coefficient for k = {}",
                        i as i64 - s as i64
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(s, coeffs)
    }

    pub fn s(&self) -> usize {
        self.s
    }

    /// `c_k`, for `|k| ≤ s`.
    pub fn get(&self, k: i64) -> Option<C> {
        let idx = k + self.s as i64;
        usize::try_from(idx)
            .ok()
            .and_then(|i| self.coeffs.get(i).copied())
    }

    pub fn coeffs(&self) -> &[C] {
        &self.coeffs
    }

    /// `(k, c_k)` for `k = −s..=s`.
    pub fn pairs(&self) -> impl Iterator<Item = (i64, C)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .map(move |(i, &c)| (i as i64 - self.s as i64, c))
    }
}

/// Closed-form Fourier coefficients `c_k = (2π)^(−1) ∫ f(x) e^(−ikx) dx`.
pub fn fourier_coefficients(sig: &PiecewiseLinearSignal, s: usize) -> Result<FourierSamples> {
    if s == 0 {
        return Err(Error::InvalidInput("s must be at least 1".into()));
    }
    let r = sig.len();
    let mut coeffs = Vec::with_capacity(2 * s + 1);
    for k in -(s as i64)..=(s as i64) {
        if k == 0 {
            let area: f64 = (1..r)
                .map(|j| {
                    let h = sig.t(j + 1) - sig.t(j);
                    sig.f(j) * h + 0.5 * sig.df(j) * h * h
                })
                .sum();
            coeffs.push(C::new(area / TAU, 0.0));
            continue;
        }
        let ik = I * k as f64;
        let sum: C = (1..=r)
            .map(|j| {
                (ik * sig.jump(j) + (sig.df(j) - sig.df(j - 1)))
                    * C::from_polar(1.0, -(k as f64) * sig.t(j))
            })
            .sum();
        coeffs.push(sum / (TAU * ik * ik));
    }
    Ok(FourierSamples { s, coeffs })
}

/// `m_k = 2π (i(k−s))² c_(k−s)` for `0 ≤ k ≤ 2s`, with `m_s = 0`.
pub fn fourier_to_moments(c: &FourierSamples) -> MomentSequence<C> {
    let s = c.s as i64;
    let values = (0..=2 * s)
        .map(|k| {
            let n = k - s;
            if n == 0 {
                C::new(0.0, 0.0)
            } else {
                let ik = I * n as f64;
                TAU * ik * ik * c.coeffs[k as usize]
            }
        })
        .collect();
    MomentSequence::new(values).expect("non-empty")
}

/// Support points `ξ_j = e^(−i t_j)` with weights `(λ_j, λ'_j)` for a given `s`.
pub fn mixture_from_signal(sig: &PiecewiseLinearSignal, s: usize) -> Result<LocalDiracMixture<C>> {
    if s == 0 {
        return Err(Error::InvalidInput("s must be at least 1".into()));
    }
    let s_f = s as f64;
    let comps = (1..=sig.len())
        .map(|j| {
            let xi = C::from_polar(1.0, -sig.t(j));
            let jump = sig.jump(j);
            let dslope = sig.df(j) - sig.df(j - 1);
            let lambda = xi.powi(-(s as i32)) * (dslope - I * s_f * jump);
            let lambda1 = xi.powi(1 - s as i32) * I * jump;
            LocalDirac::new(xi, vec![lambda, lambda1])
        })
        .collect();
    LocalDiracMixture::new(comps)
}

/// A signal recovered from a circular mixture, with consistency diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct SignalInversion {
    pub signal: PiecewiseLinearSignal,
    /// `|f_r| + |f'_r|` after forward substitution; near zero for consistent data.
    pub closure_residual: f64,
    /// Largest imaginary part discarded from the values and slopes.
    pub imaginary_residue: f64,
    /// Largest `||ξ_j| − 1|` before projection.
    pub circle_deviation: f64,
}

/// Wraps `−arg ξ` into `[−π, π)`.
fn breakpoint_of(xi: C) -> f64 {
    let t = -xi.arg();
    if t >= PI {
        t - TAU
    } else {
        t
    }
}

/// Inverts [`mixture_from_signal`].
pub fn signal_from_mixture(mix: &LocalDiracMixture<C>, s: usize) -> Result<SignalInversion> {
    if mix.is_empty() {
        return Err(Error::InvalidInput("empty mixture".into()));
    }
    let mut deviation = 0.0f64;
    let mut comps = Vec::with_capacity(mix.len());
    for comp in mix.components() {
        let dev = (comp.xi.norm() - 1.0).abs();
        if !(dev <= CIRCLE_TOL) {
            return Err(Error::NotCircular {
                modulus: comp.xi.norm(),
            });
        }
        deviation = deviation.max(dev);
        let xi = comp.xi / comp.xi.norm();
        let lam = comp.lambdas.first().copied().unwrap_or_default();
        let lam1 = comp.lambdas.get(1).copied().unwrap_or_default();
        comps.push((breakpoint_of(xi), xi, lam, lam1));
    }
    comps.sort_by(|a, b| a.0.total_cmp(&b.0));
    if comps.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(Error::DuplicateSupport(
            "two components share a breakpoint".into(),
        ));
    }
    let s_f = s as f64;
    let (mut f_prev, mut df_prev, mut t_prev) = (C::new(0.0, 0.0), C::new(0.0, 0.0), 0.0);
    let mut values = Vec::with_capacity(comps.len());
    let mut slopes = Vec::with_capacity(comps.len());
    for &(t, xi, lam, lam1) in &comps {
        let jump = lam1 * xi.powi(s as i32 - 1) / I;
        let dslope = lam * xi.powi(s as i32) + I * s_f * jump;
        let f = jump + f_prev - (t_prev - t) * df_prev;
        let df = dslope + df_prev;
        values.push(f);
        slopes.push(df);
        f_prev = f;
        df_prev = df;
        t_prev = t;
    }
    let closure = f_prev.norm() + df_prev.norm();
    values.pop();
    slopes.pop();
    let imaginary_residue = values
        .iter()
        .chain(&slopes)
        .map(|z| z.im.abs())
        .fold(0.0, f64::max);
    let signal = PiecewiseLinearSignal::new(
        comps.iter().map(|c| c.0).collect(),
        values.iter().map(|z| z.re).collect(),
        slopes.iter().map(|z| z.re).collect(),
    )?;
    Ok(SignalInversion {
        signal,
        closure_residual: closure,
        imaginary_residue,
        circle_deviation: deviation,
    })
}

/// `ℓ²` distances between two signals with the same number of breakpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SignalErrors {
    pub breakpoints: f64,
    pub values: f64,
    pub slopes: f64,
}

pub fn signal_errors(
    estimate: &PiecewiseLinearSignal,
    truth: &PiecewiseLinearSignal,
) -> Result<SignalErrors> {
    if estimate.len() != truth.len() {
        return Err(Error::InvalidInput(format!(
            "signals have {} and {} breakpoints",
            estimate.len(),
            truth.len()
        )));
    }
    let l2 = |a: &[f64], b: &[f64]| {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    Ok(SignalErrors {
        breakpoints: l2(&estimate.breakpoints, &truth.breakpoints),
        values: l2(&estimate.values, &truth.values),
        slopes: l2(&estimate.slopes, &truth.slopes),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SignalReconstruction {
    pub inversion: SignalInversion,
    pub recovery: Option<RecoveryDiagnostics>,
    pub errors: Option<SignalErrors>,
}

/// Recovers an `r`-breakpoint signal from `c_(−s), …, c_s`; requires `2s ≥ 3r`.
pub fn reconstruct_signal(
    c: &FourierSamples,
    r: usize,
    cfg: &RecoveryConfig,
) -> Result<SignalReconstruction> {
    if r == 0 {
        return Err(Error::InvalidInput(
            "number of breakpoints must be at least 1".into(),
        ));
    }
    if 2 * c.s < 3 * r {
        return Err(Error::InsufficientMoments {
            needed: 3 * r + 1,
            available: 2 * c.s + 1,
        });
    }
    let m = fourier_to_moments(c);
    if m.values().iter().all(|v| *v == C::new(0.0, 0.0)) {
        let inversion = SignalInversion {
            signal: PiecewiseLinearSignal::zero(),
            closure_residual: 0.0,
            imaginary_residue: 0.0,
            circle_deviation: 0.0,
        };
        return Ok(SignalReconstruction {
            inversion,
            recovery: None,
            errors: None,
        });
    }
    let rec = recover(&m, r, 1, cfg)?;
    let inversion = signal_from_mixture(&rec.mixture, c.s)?;
    Ok(SignalReconstruction {
        inversion,
        recovery: Some(rec.diagnostics),
        errors: None,
    })
}

/// Same as [`reconstruct_signal`], also reporting errors against `truth`.
pub fn reconstruct_signal_with_truth(
    c: &FourierSamples,
    truth: &PiecewiseLinearSignal,
    cfg: &RecoveryConfig,
) -> Result<SignalReconstruction> {
    let mut out = reconstruct_signal(c, truth.len(), cfg)?;
    out.errors = signal_errors(&out.inversion.signal, truth).ok();
    Ok(out)
}

/// Adds independent `N(0, σ²)` noise to the real and imaginary part of every coefficient.
pub fn add_noise(c: &FourierSamples, sigma: f64, seed: u64) -> Result<FourierSamples> {
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs = c
        .coeffs
        .iter()
        .map(|&z| z + C::new(normal.sample(&mut rng), normal.sample(&mut rng)))
        .collect();
    Ok(FourierSamples { s: c.s, coeffs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::local_dirac_moments;

    fn pulse() -> PiecewiseLinearSignal {
        PiecewiseLinearSignal::new(vec![-1.0, 0.5], vec![2.0], vec![0.0]).unwrap()
    }

    #[test]
    fn validation() {
        assert!(PiecewiseLinearSignal::new(vec![], vec![], vec![]).is_err());
        assert!(PiecewiseLinearSignal::new(vec![0.5, 0.1], vec![1.0], vec![0.0]).is_err());
        assert!(PiecewiseLinearSignal::new(vec![0.0, PI], vec![1.0], vec![0.0]).is_err());
        assert!(PiecewiseLinearSignal::new(vec![0.0, 1.0], vec![], vec![]).is_err());
        assert!(FourierSamples::new(2, vec![C::new(0.0, 0.0); 4]).is_err());
    }

    #[test]
    fn pulse_coefficients() {
        let c = fourier_coefficients(&pulse(), 3).unwrap();
        assert!((c.get(0).unwrap().re - 2.0 * 1.5 / TAU).abs() < 1e-15);
        for k in 1..=3i64 {
            let kf = k as f64;
            let exact =
                2.0 / TAU * (C::from_polar(1.0, kf) - C::from_polar(1.0, -0.5 * kf)) / (I * kf);
            assert!((c.get(k).unwrap() - exact).norm() < 1e-14);
            assert!((c.get(-k).unwrap() - c.get(k).unwrap().conj()).norm() < 1e-15);
        }
    }

    #[test]
    fn zero_signal() {
        let c = fourier_coefficients(&PiecewiseLinearSignal::zero(), 4).unwrap();
        assert!(c.coeffs().iter().all(|z| z.norm() == 0.0));
        assert!(fourier_to_moments(&c)
            .values()
            .iter()
            .all(|z| z.norm() == 0.0));
        let rec = reconstruct_signal(&c, 1, &RecoveryConfig::default()).unwrap();
        assert_eq!(rec.inversion.signal, PiecewiseLinearSignal::zero());
    }

    #[test]
    fn breakpoint_at_zero_maps_to_one() {
        let sig = PiecewiseLinearSignal::new(vec![0.0, 1.0], vec![1.0], vec![0.5]).unwrap();
        let mix = mixture_from_signal(&sig, 3).unwrap();
        assert!((mix.components()[0].xi - C::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn bridge_identity() {
        let sig = PiecewiseLinearSignal::new(
            vec![-2.0, -0.3, 0.4, 2.9],
            vec![1.0, -0.5, 0.7],
            vec![0.3, 1.1, -0.8],
        )
        .unwrap();
        for s in [1, 4, 9] {
            let m = fourier_to_moments(&fourier_coefficients(&sig, s).unwrap());
            let fwd = local_dirac_moments(&mixture_from_signal(&sig, s).unwrap(), 2 * s);
            for (a, b) in m.values().iter().zip(fwd.values()) {
                assert!((a - b).norm() < 1e-10 * fwd.scale().max(1.0));
            }
        }
    }

    #[test]
    fn mixture_roundtrip() {
        let sig = PiecewiseLinearSignal::new(
            vec![-3.0, -0.3, 0.4, 2.9],
            vec![1.0, -0.5, 0.7],
            vec![0.3, 1.1, -0.8],
        )
        .unwrap();
        let inv = signal_from_mixture(&mixture_from_signal(&sig, 6).unwrap(), 6).unwrap();
        let err = signal_errors(&inv.signal, &sig).unwrap();
        assert!(err.breakpoints < 1e-12 && err.values < 1e-10 && err.slopes < 1e-10);
        assert!(inv.closure_residual < 1e-10);
    }

    #[test]
    fn wrap_to_half_open_interval() {
        assert_eq!(breakpoint_of(C::new(-1.0, 0.0)), -PI);
        assert!((breakpoint_of(C::from_polar(1.0, -0.3)) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn off_circle_rejected() {
        let mix = LocalDiracMixture::new(vec![LocalDirac::new(
            C::new(1.5, 0.0),
            vec![C::new(1.0, 0.0)],
        )])
        .unwrap();
        assert!(matches!(
            signal_from_mixture(&mix, 2),
            Err(Error::NotCircular { .. })
        ));
    }

    #[test]
    fn pulse_reconstruction() {
        let c = fourier_coefficients(&pulse(), 3).unwrap();
        let out = reconstruct_signal_with_truth(&c, &pulse(), &RecoveryConfig::default()).unwrap();
        let e = out.errors.unwrap();
        assert!(
            e.breakpoints < 1e-10 && e.values < 1e-10 && e.slopes < 1e-10,
            "{e:?}"
        );
    }

    #[test]
    fn too_few_coefficients() {
        let c = fourier_coefficients(&pulse(), 2).unwrap();
        assert!(matches!(
            reconstruct_signal(&c, 2, &RecoveryConfig::default()),
            Err(Error::InsufficientMoments { .. })
        ));
    }

    #[test]
    fn noise_is_seeded() {
        let c = fourier_coefficients(&pulse(), 3).unwrap();
        assert_eq!(
            add_noise(&c, 1e-3, 5).unwrap(),
            add_noise(&c, 1e-3, 5).unwrap()
        );
        assert_ne!(
            add_noise(&c, 1e-3, 5).unwrap(),
            add_noise(&c, 1e-3, 6).unwrap()
        );
    }
}
