//! File formats shared by the CLI and the bindings.
//!
//! * moments: CSV with one value per line (`re,im` for complex values) or
//!   JSON `{"moments": [...], "normalized": true}`,
//! * mixtures: JSON `{"components": [{"xi": .., "lambdas": [..]}]}`, or
//!   `{"pareto": {"alpha": .., "xi": ..}}` for a Pareto distribution,
//! * signals: JSON `{"breakpoints": [..], "values": [..], "slopes": [..]}`,
//! * Fourier samples: CSV lines `k,re,im`,
//! * samples: CSV with one real per line.
//!
//! Wherever a scalar is expected, JSON accepts a number or a `[re, im]` pair.
//! Blank lines and lines starting with `#` are skipped in CSV input.

use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{FourierSamples, PiecewiseLinearSignal};
use crate::moments::{LocalDirac, LocalDiracMixture, MomentSequence, ParetoParams};

type C = Complex64;

/// Output encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            other => Err(Error::Parse(format!("unknown format '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum JsonScalar {
    Real(f64),
    Complex([f64; 2]),
}

impl From<JsonScalar> for C {
    fn from(v: JsonScalar) -> Self {
        match v {
            JsonScalar::Real(x) => C::new(x, 0.0),
            JsonScalar::Complex([re, im]) => C::new(re, im),
        }
    }
}

impl From<C> for JsonScalar {
    fn from(z: C) -> Self {
        if z.im == 0.0 {
            Self::Real(z.re)
        } else {
            Self::Complex([z.re, z.im])
        }
    }
}

fn json_err(e: serde_json::Error) -> Error {
    Error::Parse(e.to_string())
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_f64(field: &str, line: usize) -> Result<f64> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("line {line}: '{}' is not a number", field.trim())))?;
    if !v.is_finite() {
        return Err(Error::Parse(format!("line {line}: non-finite value")));
    }
    Ok(v)
}

fn finite(z: C) -> Result<C> {
    if z.re.is_finite() && z.im.is_finite() {
        Ok(z)
    } else {
        Err(Error::Parse("non-finite value".into()))
    }
}

#[derive(Serialize, Deserialize)]
struct MomentsJson {
    moments: Vec<JsonScalar>,
    #[serde(default)]
    normalized: Option<bool>,
}

/// Moments from CSV text.
pub fn moments_from_csv(text: &str) -> Result<MomentSequence<C>> {
    let values = data_lines(text)
        .map(|(n, line)| {
            let fields: Vec<&str> = line.split(',').collect();
            match fields.as_slice() {
                [re] => Ok(C::new(parse_f64(re, n)?, 0.0)),
                [re, im] => Ok(C::new(parse_f64(re, n)?, parse_f64(im, n)?)),
                _ => Err(Error::Parse(format!(
                    "line {n}: expected 'value' or 're,im'"
                ))),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    MomentSequence::new(values)
}

/// Moments from JSON text. A `"normalized": true` flag is checked against `m_0`.
pub fn moments_from_json(text: &str) -> Result<MomentSequence<C>> {
    let raw: MomentsJson = serde_json::from_str(text).map_err(json_err)?;
    let values = raw
        .moments
        .into_iter()
        .map(|v| finite(v.into()))
        .collect::<Result<Vec<_>>>()?;
    if raw.normalized == Some(true) {
        MomentSequence::normalized(values)
    } else {
        MomentSequence::new(values)
    }
}

/// Moments from either encoding, detected by the first non-blank character.
pub fn parse_moments(text: &str) -> Result<MomentSequence<C>> {
    if text.trim_start().starts_with('{') {
        moments_from_json(text)
    } else {
        moments_from_csv(text)
    }
}

pub fn moments_to_csv(m: &MomentSequence<C>) -> String {
    let mut out = String::new();
    for z in m.values() {
        if z.im == 0.0 {
            let _ = writeln!(out, "{:?}", z.re);
        } else {
            let _ = writeln!(out, "{:?},{:?}", z.re, z.im);
        }
    }
    out
}

pub fn moments_to_json(m: &MomentSequence<C>) -> String {
    let raw = MomentsJson {
        moments: m.values().iter().map(|&z| z.into()).collect(),
        normalized: Some(m.is_normalized()),
    };
    serde_json::to_string_pretty(&raw).expect("moments serialize")
}

pub fn write_moments(m: &MomentSequence<C>, format: Format) -> String {
    match format {
        Format::Json => moments_to_json(m) + "\n",
        Format::Csv => moments_to_csv(m),
    }
}

#[derive(Serialize, Deserialize)]
struct ComponentJson {
    xi: JsonScalar,
    lambdas: Vec<JsonScalar>,
}

#[derive(Serialize, Deserialize)]
struct MixtureJson {
    components: Vec<ComponentJson>,
}

#[derive(Deserialize)]
struct ParetoJson {
    alpha: f64,
    xi: f64,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ModelJson {
    Mixture(MixtureJson),
    Pareto { pareto: ParetoJson },
}

/// A forward model read from a spec file.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    Mixture(LocalDiracMixture<C>),
    Pareto(ParetoParams<f64>),
}

pub fn mixture_from_json(text: &str) -> Result<LocalDiracMixture<C>> {
    match model_from_json(text)? {
        ModelSpec::Mixture(mix) => Ok(mix),
        ModelSpec::Pareto(_) => Err(Error::Parse(
            "expected a mixture, found a Pareto spec".into(),
        )),
    }
}

pub fn model_from_json(text: &str) -> Result<ModelSpec> {
    let raw: ModelJson = serde_json::from_str(text).map_err(|e| {
        Error::Parse(format!(
            "expected {{\"components\": [..]}} or {{\"pareto\": {{..}}}}: {e}"
        ))
    })?;
    match raw {
        ModelJson::Mixture(mix) => {
            if mix.components.is_empty() {
                return Err(Error::InvalidInput("mixture has no components".into()));
            }
            let comps = mix
                .components
                .into_iter()
                .map(|c| {
                    if c.lambdas.is_empty() {
                        return Err(Error::InvalidInput(
                            "a component needs at least one lambda".into(),
                        ));
                    }
                    let lambdas = c
                        .lambdas
                        .into_iter()
                        .map(|v| finite(v.into()))
                        .collect::<Result<Vec<_>>>()?;
                    Ok(LocalDirac::new(finite(c.xi.into())?, lambdas))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(ModelSpec::Mixture(LocalDiracMixture::new(comps)?))
        }
        ModelJson::Pareto { pareto } => {
            if !(pareto.alpha.is_finite() && pareto.xi.is_finite()) {
                return Err(Error::Parse("non-finite Pareto parameter".into()));
            }
            Ok(ModelSpec::Pareto(ParetoParams::new(
                pareto.alpha,
                pareto.xi,
            )))
        }
    }
}

pub fn mixture_to_json(mix: &LocalDiracMixture<C>) -> String {
    serde_json::to_string_pretty(&mixture_value(mix)).expect("mixture serializes")
}

/// The mixture JSON as a value, for embedding in reports.
pub fn mixture_value(mix: &LocalDiracMixture<C>) -> serde_json::Value {
    let raw = MixtureJson {
        components: mix
            .components()
            .iter()
            .map(|c| ComponentJson {
                xi: c.xi.into(),
                lambdas: c.lambdas.iter().map(|&z| z.into()).collect(),
            })
            .collect(),
    };
    serde_json::to_value(raw).expect("mixture serializes")
}

#[derive(Deserialize)]
struct SignalJson {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

pub fn signal_from_json(text: &str) -> Result<PiecewiseLinearSignal> {
    let raw: SignalJson = serde_json::from_str(text).map_err(json_err)?;
    PiecewiseLinearSignal::new(raw.breakpoints, raw.values, raw.slopes)
}

pub fn signal_to_json(sig: &PiecewiseLinearSignal) -> String {
    serde_json::to_string_pretty(sig).expect("signal serializes")
}

pub fn fourier_from_csv(text: &str) -> Result<FourierSamples> {
    let pairs = data_lines(text)
        .map(|(n, line)| {
            let fields: Vec<&str> = line.split(',').collect();
            let [k, re, im] = fields.as_slice() else {
                return Err(Error::Parse(format!("line {n}: expected 'k,re,im'")));
            };
            let k: i64 = k
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("line {n}: bad index '{}'", k.trim())))?;
            Ok((k, C::new(parse_f64(re, n)?, parse_f64(im, n)?)))
        })
        .collect::<Result<Vec<_>>>()?;
    FourierSamples::from_pairs(&pairs)
}

pub fn fourier_to_csv(c: &FourierSamples) -> String {
    let mut out = String::new();
    for (k, z) in c.pairs() {
        let _ = writeln!(out, "{k},{:?},{:?}", z.re, z.im);
    }
    out
}

pub fn sample_from_csv(text: &str) -> Result<Vec<f64>> {
    let xs = data_lines(text)
        .map(|(n, line)| parse_f64(line.split(',').next().unwrap_or(line), n))
        .collect::<Result<Vec<_>>>()?;
    if xs.is_empty() {
        return Err(Error::InvalidInput("empty sample".into()));
    }
    Ok(xs)
}

pub fn sample_to_csv(xs: &[f64]) -> String {
    let mut out = String::with_capacity(xs.len() * 20);
    for x in xs {
        let _ = writeln!(out, "{x:?}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::fourier_coefficients;

    #[test]
    fn moments_csv_roundtrip() {
        let m = MomentSequence::new(vec![
            C::new(1.0, 0.0),
            C::new(0.1, -2.5),
            C::new(1.0 / 3.0, 0.0),
        ])
        .unwrap();
        let text = moments_to_csv(&m);
        assert_eq!(text.lines().nth(1), Some("0.1,-2.5"));
        assert_eq!(moments_from_csv(&text).unwrap(), m);
        assert_eq!(parse_moments(&text).unwrap(), m);
    }

    #[test]
    fn moments_json_roundtrip() {
        let m = MomentSequence::normalized(vec![
            C::new(1.0, 0.0),
            C::new(0.1 + 0.2, 1e-300),
            C::new(-7.0, 0.0),
        ])
        .unwrap();
        let text = moments_to_json(&m);
        let back = parse_moments(&text).unwrap();
        assert_eq!(back, m);
        assert!(back.is_normalized());
    }

    #[test]
    fn moments_json_flag_checked() {
        assert!(moments_from_json(r#"{"moments":[1,2,3],"normalized":true}"#).is_ok());
        assert!(matches!(
            moments_from_json(r#"{"moments":[2,2,3],"normalized":true}"#),
            Err(Error::NotNormalized { .. })
        ));
        assert!(moments_from_json(r#"{"moments":[2,2,3]}"#).is_ok());
        assert!(moments_from_json(r#"{"moments":[]}"#).is_err());
    }

    #[test]
    fn csv_errors_name_the_line() {
        let err = moments_from_csv("1\n\n# comment\nabc\n").unwrap_err();
        assert!(err.to_string().contains("line 4"), "{err}");
        assert!(moments_from_csv("1,2,3\n").is_err());
        assert!(moments_from_csv("1\nNaN\n").is_err());
    }

    #[test]
    fn mixture_json() {
        let mix = mixture_from_json(
            r#"{"components":[{"xi":2,"lambdas":[1,1]},{"xi":[0,1],"lambdas":[[0.5,0.5]]}]}"#,
        )
        .unwrap();
        assert_eq!(mix.len(), 2);
        assert_eq!(mix.components()[1].xi, C::new(0.0, 1.0));
        assert_eq!(mixture_from_json(&mixture_to_json(&mix)).unwrap(), mix);
        assert!(mixture_from_json(r#"{"components":[]}"#).is_err());
        assert!(mixture_from_json(r#"{"components":[{"xi":1,"lambdas":[]}]}"#).is_err());
        assert!(mixture_from_json(r#"{"comps":[]}"#).is_err());
    }

    #[test]
    fn pareto_spec() {
        let spec = model_from_json(r#"{"pareto":{"alpha":4.5,"xi":2}}"#).unwrap();
        assert_eq!(spec, ModelSpec::Pareto(ParetoParams::new(4.5, 2.0)));
        assert!(mixture_from_json(r#"{"pareto":{"alpha":4.5,"xi":2}}"#).is_err());
    }

    #[test]
    fn signal_and_fourier_roundtrip() {
        let sig =
            PiecewiseLinearSignal::new(vec![-1.0, 0.5, 2.0], vec![1.0, -0.5], vec![0.25, 0.0])
                .unwrap();
        assert_eq!(signal_from_json(&signal_to_json(&sig)).unwrap(), sig);
        assert!(signal_from_json(r#"{"breakpoints":[1,0],"values":[1],"slopes":[0]}"#).is_err());
        let c = fourier_coefficients(&sig, 3).unwrap();
        let back = fourier_from_csv(&fourier_to_csv(&c)).unwrap();
        assert_eq!(back, c);
        assert!(fourier_from_csv("0,1\n").is_err());
    }

    #[test]
    fn samples() {
        let xs = vec![0.5, -1.25, 1e-7];
        assert_eq!(sample_from_csv(&sample_to_csv(&xs)).unwrap(), xs);
        assert!(sample_from_csv("# nothing\n").is_err());
    }

    #[test]
    fn format_parse() {
        assert_eq!("CSV".parse::<Format>().unwrap(), Format::Csv);
        assert!("xml".parse::<Format>().is_err());
    }
}
