//! Numerical evaluation of polynomial relations satisfied by moment vectors,
//! used as membership certificates. All evaluators assume `M_0 = 1`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::moments::MomentSequence;
use crate::scalar::{binomial_row, max_modulus, Scalar};

/// Default relative threshold for declaring a generator to vanish.
pub const DEFAULT_IDEAL_TOL: f64 = 1e-9;

/// A family of relations on moment vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "n")]
pub enum GeneratorFamily {
    /// Quadrics `f_(i,j)` of first-order local Diracs, `2 ≤ i ≤ j ≤ d−2`.
    FijFirstOrder,
    /// Third-power difference relations, `0 ≤ a_0 < a_1 ≤ d−3`.
    EisenbudDelta3,
    /// Conjectural quadrics of second-order local Diracs.
    SecondOrderConjecture,
    /// Conjectural `Δ^n` relations (`n = 2l+1` for order `l`), `0 ≤ a_0 < a_1 ≤ d−n`.
    DeltaPower(usize),
    /// Quartics of Pareto moment vectors, `2 ≤ i ≤ j ≤ d−2`.
    ParetoInverse,
    /// Vanishing `y_4, …, y_d` after the triangular change of coordinates,
    /// followed by the discriminant quartic in `y_1, y_2, y_3`.
    Cremona,
}

impl GeneratorFamily {
    pub fn name(&self) -> &'static str {
        match self {
            Self::FijFirstOrder => "fij_first_order",
            Self::EisenbudDelta3 => "eisenbud_delta3",
            Self::SecondOrderConjecture => "second_order_conjecture",
            Self::DeltaPower(_) => "delta_power",
            Self::ParetoInverse => "pareto_inverse",
            Self::Cremona => "cremona",
        }
    }

    /// Parses `fij`, `delta3`, `second-order`, `delta<n>`, `pareto` or `cremona`.
    pub fn parse(s: &str) -> Result<Self> {
        let norm = s.to_ascii_lowercase().replace('-', "_");
        Ok(match norm.as_str() {
            "fij" | "fij_first_order" => Self::FijFirstOrder,
            "delta3" | "eisenbud" | "eisenbud_delta3" => Self::EisenbudDelta3,
            "second_order" | "second_order_conjecture" => Self::SecondOrderConjecture,
            "pareto" | "pareto_inverse" => Self::ParetoInverse,
            "cremona" => Self::Cremona,
            other => match other
                .strip_prefix("delta")
                .and_then(|n| n.trim_start_matches('_').parse().ok())
            {
                Some(n) if n >= 1 => Self::DeltaPower(n),
                _ => {
                    return Err(Error::InvalidInput(format!(
                        "unknown generator family '{s}'"
                    )))
                }
            },
        })
    }

    /// Relations that have only been observed, not proven.
    pub fn is_conjectural(&self) -> bool {
        matches!(self, Self::SecondOrderConjecture | Self::DeltaPower(_))
    }

    /// All valid index tuples for degree `d`.
    pub fn indices(&self, d: usize) -> Vec<Vec<usize>> {
        let pairs = |lo: usize, hi: Option<usize>, strict: bool| -> Vec<Vec<usize>> {
            let Some(hi) = hi else { return vec![] };
            let mut out = vec![];
            for i in lo..=hi {
                for j in (if strict { i + 1 } else { i })..=hi {
                    out.push(vec![i, j]);
                }
            }
            out
        };
        match *self {
            Self::FijFirstOrder | Self::ParetoInverse => pairs(2, d.checked_sub(2), false),
            Self::EisenbudDelta3 => pairs(0, d.checked_sub(3), true),
            Self::DeltaPower(n) => pairs(0, d.checked_sub(n), true),
            Self::SecondOrderConjecture => {
                let Some(hi) = d.checked_sub(3) else {
                    return vec![];
                };
                let mut out = vec![];
                for i in 0..=hi {
                    for j in 0..=hi.min(i + 3) {
                        out.push(vec![i, j]);
                    }
                }
                out
            }
            Self::Cremona => {
                if d < 3 {
                    return vec![];
                }
                let mut out: Vec<Vec<usize>> = (4..=d).map(|i| vec![i]).collect();
                out.push(vec![]);
                out
            }
        }
    }
}

fn out_of_range(what: &str) -> Error {
    Error::IndexOutOfRange(what.to_string())
}

fn dehomogenized<T: Scalar>(m: &MomentSequence<T>) -> Vec<T> {
    let mut v = m.values().to_vec();
    v[0] = T::one();
    v
}

fn fij_coeffs(i: usize, j: usize) -> [f64; 3] {
    let g = (j - i) as f64;
    [g + 3.0, -2.0 * (g + 2.0), g + 1.0]
}

/// `(j−i+3) M_i M_j − 2(j−i+2) M_(i−1) M_(j+1) + (j−i+1) M_(i−2) M_(j+2)`.
pub fn eval_fij<T: Scalar>(m: &MomentSequence<T>, i: usize, j: usize) -> Result<T> {
    let d = m.degree();
    if !(2 <= i && i <= j && j + 2 <= d) {
        return Err(out_of_range(&format!(
            "f_(i,j) needs 2 ≤ i ≤ j ≤ d−2, got i={i}, j={j}, d={d}"
        )));
    }
    let v = dehomogenized(m);
    let [a, b, c] = fij_coeffs(i, j).map(T::of);
    Ok(a * v[i] * v[j] + b * v[i - 1] * v[j + 1] + c * v[i - 2] * v[j + 2])
}

/// `Σ_k (−1)^k C(n,k) M_(a_0+k) M_(a_1+n−k)`.
pub fn eval_delta_power<T: Scalar>(
    m: &MomentSequence<T>,
    a0: usize,
    a1: usize,
    n: usize,
) -> Result<T> {
    let d = m.degree();
    if a0 + n > d || a1 + n > d {
        return Err(out_of_range(&format!(
            "Δ^{n} needs a_0 + n ≤ d and a_1 + n ≤ d, got a_0={a0}, a_1={a1}, d={d}"
        )));
    }
    let v = dehomogenized(m);
    let binom = binomial_row(n);
    let mut acc = T::zero();
    for (k, &b) in binom.iter().enumerate() {
        let term = T::of(b) * v[a0 + k] * v[a1 + n - k];
        if k % 2 == 0 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    Ok(acc)
}

fn second_order_coeffs(i: usize, j: usize) -> [f64; 4] {
    let g = j as f64 - i as f64;
    [
        (g + 1.0) * (g + 2.0),
        -3.0 * (g - 1.0) * (g + 2.0),
        3.0 * (g + 1.0) * (g - 2.0),
        -(g - 1.0) * (g - 2.0),
    ]
}

/// `c_0 M_(i+3) M_j + c_1 M_(i+2) M_(j+1) + c_2 M_(i+1) M_(j+2) + c_3 M_i M_(j+3)`.
///
/// Conjectural: observed to vanish on second-order local Dirac moments.
pub fn eval_second_order_generator<T: Scalar>(
    m: &MomentSequence<T>,
    i: usize,
    j: usize,
) -> Result<T> {
    let d = m.degree();
    if i + 3 < j || i + 3 > d || j + 3 > d {
        return Err(out_of_range(&format!(
            "second-order relation needs i ≥ j−3, i+3 ≤ d, j+3 ≤ d, got i={i}, j={j}, d={d}"
        )));
    }
    let v = dehomogenized(m);
    let c = second_order_coeffs(i, j).map(T::of);
    Ok(c[0] * v[i + 3] * v[j]
        + c[1] * v[i + 2] * v[j + 1]
        + c[2] * v[i + 1] * v[j + 2]
        + c[3] * v[i] * v[j + 3])
}

/// `(j−i+3) M_(i−2) M_(i−1) M_(j+1) M_(j+2) − 2(j−i+2) M_(i−2) M_i M_j M_(j+2)
/// + (j−i+1) M_(i−1) M_i M_j M_(j+1)`.
pub fn eval_pareto_generator<T: Scalar>(m: &MomentSequence<T>, i: usize, j: usize) -> Result<T> {
    let d = m.degree();
    if !(2 <= i && i <= j && j + 2 <= d) {
        return Err(out_of_range(&format!(
            "Pareto relation needs 2 ≤ i ≤ j ≤ d−2, got i={i}, j={j}, d={d}"
        )));
    }
    let v = dehomogenized(m);
    let [a, b, c] = fij_coeffs(i, j).map(T::of);
    Ok(a * v[i - 2] * v[i - 1] * v[j + 1] * v[j + 2]
        + b * v[i - 2] * v[i] * v[j] * v[j + 2]
        + c * v[i - 1] * v[i] * v[j] * v[j + 1])
}

/// Coefficient pairs `((c, a, b), (c', a', b'))` of `z_i = c z_a z_b + c' z_a' z_b'` for `i > 3`.
fn cremona_rule(i: usize) -> [(f64, usize, usize); 2] {
    let k = i / 2;
    let kf = k as f64;
    if i % 2 == 1 {
        [
            (0.5 * kf * (kf + 1.0), k - 1, k + 2),
            (-0.5 * (kf - 1.0) * (kf + 2.0), k, k + 1),
        ]
    } else {
        [(kf * kf, k - 1, k + 1), (-(kf - 1.0) * (kf + 1.0), k, k)]
    }
}

/// `y_1, …, y_d` with `y_i = M_i` for `i ≤ 3` and `y_i = M_i − z_i` otherwise.
pub fn cremona_transform<T: Scalar>(m: &MomentSequence<T>) -> Result<Vec<T>> {
    let d = m.degree();
    if d < 3 {
        return Err(Error::InsufficientMoments {
            needed: 4,
            available: m.len(),
        });
    }
    let v = dehomogenized(m);
    let mut z: Vec<T> = v[..4].to_vec();
    for i in 4..=d {
        let [(c1, a1, b1), (c2, a2, b2)] = cremona_rule(i);
        z.push(T::of(c1) * z[a1] * z[b1] + T::of(c2) * z[a2] * z[b2]);
    }
    Ok((1..=d)
        .map(|i| if i <= 3 { v[i] } else { v[i] - z[i] })
        .collect())
}

/// Upper bounds on `|z_i|` given `|M_i| ≤ b`, used as scales for `y_i`.
fn cremona_bounds(b: f64, d: usize) -> Vec<f64> {
    let mut z = vec![1.0, b, b, b];
    for i in 4..=d {
        let [(c1, a1, b1), (c2, a2, b2)] = cremona_rule(i);
        z.push(c1.abs() * z[a1] * z[b1] + c2.abs() * z[a2] * z[b2]);
    }
    z
}

/// `3y_1²y_2² − 4y_1³y_3 − 4y_2³ + 6y_1y_2y_3 − y_3²`.
pub fn eval_discriminant_quartic<T: Scalar>(y1: T, y2: T, y3: T) -> T {
    let n = T::of;
    n(3.0) * y1 * y1 * y2 * y2 - n(4.0) * y1 * y1 * y1 * y3 - n(4.0) * y2 * y2 * y2
        + n(6.0) * y1 * y2 * y3
        - y3 * y3
}

/// One evaluated relation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdealCheckEntry {
    pub family: String,
    pub index: Vec<usize>,
    /// `|value|`.
    pub value: f64,
    /// Coefficient 1-norm times `max(1, max|m_i|)^degree`.
    pub scale: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdealCheckReport {
    pub family: String,
    pub conjectural: bool,
    pub degree: usize,
    pub tol: f64,
    pub entries: Vec<IdealCheckEntry>,
    pub all_pass: bool,
    /// Largest `value / scale`.
    pub max_ratio: f64,
}

/// Evaluates one relation of `family` at `index`, returning `(|value|, scale)`.
pub fn eval_generator<T: Scalar>(
    m: &MomentSequence<T>,
    family: GeneratorFamily,
    index: &[usize],
) -> Result<(f64, f64)> {
    let b = max_modulus(&m.values()[1..]).max(1.0);
    let pair = || match index {
        [i, j] => Ok((*i, *j)),
        _ => Err(out_of_range("expected an index pair")),
    };
    Ok(match family {
        GeneratorFamily::FijFirstOrder => {
            let (i, j) = pair()?;
            let s: f64 = fij_coeffs(i.min(j), j.max(i)).iter().map(|c| c.abs()).sum();
            (eval_fij(m, i, j)?.modulus(), s * b * b)
        }
        GeneratorFamily::EisenbudDelta3 => {
            let (a0, a1) = pair()?;
            (eval_delta_power(m, a0, a1, 3)?.modulus(), 8.0 * b * b)
        }
        GeneratorFamily::DeltaPower(n) => {
            let (a0, a1) = pair()?;
            (
                eval_delta_power(m, a0, a1, n)?.modulus(),
                2f64.powi(n as i32) * b * b,
            )
        }
        GeneratorFamily::SecondOrderConjecture => {
            let (i, j) = pair()?;
            let s: f64 = second_order_coeffs(i, j).iter().map(|c| c.abs()).sum();
            (
                eval_second_order_generator(m, i, j)?.modulus(),
                s.max(1.0) * b * b,
            )
        }
        GeneratorFamily::ParetoInverse => {
            let (i, j) = pair()?;
            let s: f64 = fij_coeffs(i.min(j), j.max(i)).iter().map(|c| c.abs()).sum();
            (eval_pareto_generator(m, i, j)?.modulus(), s * b.powi(4))
        }
        GeneratorFamily::Cremona => {
            let y = cremona_transform(m)?;
            match index {
                [i] if (4..=m.degree()).contains(i) => {
                    (y[i - 1].modulus(), 2.0 * cremona_bounds(b, *i)[*i])
                }
                [] => (
                    eval_discriminant_quartic(y[0], y[1], y[2]).modulus(),
                    18.0 * b.powi(4),
                ),
                _ => {
                    return Err(out_of_range(
                        "Cremona entries are y_i for 4 ≤ i ≤ d, or the discriminant",
                    ))
                }
            }
        }
    })
}

/// Evaluates every relation of `family` valid for the degree of `m`.
pub fn ideal_check<T: Scalar>(
    m: &MomentSequence<T>,
    family: GeneratorFamily,
    tol: f64,
) -> Result<IdealCheckReport> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput("tolerance must be positive".into()));
    }
    let mut entries = Vec::new();
    let mut max_ratio = 0.0f64;
    for idx in family.indices(m.degree()) {
        let (value, scale) = eval_generator(m, family, &idx)?;
        let pass = value <= tol * scale;
        max_ratio = max_ratio.max(value / scale);
        let name = match (family, idx.len()) {
            (GeneratorFamily::Cremona, 0) => "discriminant".to_string(),
            (GeneratorFamily::DeltaPower(n), _) => format!("delta_power_{n}"),
            _ => family.name().to_string(),
        };
        entries.push(IdealCheckEntry {
            family: name,
            index: idx,
            value,
            scale,
            pass,
        });
    }
    if entries.is_empty() {
        return Err(Error::InsufficientMoments {
            needed: min_degree(family) + 1,
            available: m.len(),
        });
    }
    Ok(IdealCheckReport {
        family: family.name().to_string(),
        conjectural: family.is_conjectural(),
        degree: m.degree(),
        tol,
        all_pass: entries.iter().all(|e| e.pass),
        entries,
        max_ratio,
    })
}

fn min_degree(family: GeneratorFamily) -> usize {
    match family {
        GeneratorFamily::FijFirstOrder | GeneratorFamily::ParetoInverse => 4,
        GeneratorFamily::EisenbudDelta3 => 4,
        GeneratorFamily::DeltaPower(n) => n + 1,
        GeneratorFamily::SecondOrderConjecture | GeneratorFamily::Cremona => 3,
    }
}
