use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use localdirac_core::elimination::recover_two_component;
use localdirac_core::fourier::{
    add_noise, fourier_coefficients, reconstruct_signal, signal_errors, FourierSamples,
};
use localdirac_core::ideals::{ideal_check, GeneratorFamily, DEFAULT_IDEAL_TOL};
use localdirac_core::io::{self, Format, ModelSpec};
use localdirac_core::moments::{
    local_dirac_moments, pareto_moments, LocalDirac, LocalDiracMixture,
};
use localdirac_core::recovery::{prony_linear, recover, RecoveryConfig};
use localdirac_core::statmix::{
    empirical_moments, estimate, gaussian_moments, LocalComponent, LocalGaussianMixture,
};
use localdirac_core::{Complex64 as C, Error, Result};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::{Cli, Command, FourierCmd, Method, OutFormat, StatmixCmd};

#[derive(Serialize)]
struct RunReport<'a> {
    command: &'a Command,
    global: &'a crate::Global,
    input_sha256: String,
    seed: u64,
    result: Value,
    diagnostics: Value,
    /// Wall-clock time; the only field that varies between identical runs.
    timing: Timing,
}

#[derive(Serialize)]
struct Timing {
    elapsed_ms: f64,
}

struct Input {
    text: String,
    digest: String,
}

fn read_input(path: &Path) -> Result<Input> {
    let bytes =
        fs::read(path).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
    let digest = Sha256::digest(&bytes)
        .iter()
        .fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        });
    let text = String::from_utf8(bytes)
        .map_err(|_| Error::Parse(format!("{}: not UTF-8", path.display())))?;
    Ok(Input { text, digest })
}

fn emit(cli: &Cli, text: &str) -> Result<()> {
    match &cli.global.out {
        Some(p) => {
            fs::write(p, text).map_err(|e| Error::InvalidInput(format!("{}: {e}", p.display())))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn pretty(v: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

fn config(cli: &Cli) -> RecoveryConfig {
    let mut cfg = RecoveryConfig {
        seed: cli.global.seed,
        ..RecoveryConfig::default()
    };
    if let Some(t) = cli.global.tol {
        cfg.newton_tol = t;
    }
    if let Some(n) = cli.global.starts {
        cfg.starts = n;
    }
    cfg
}

fn mixture_csv(mix: &LocalDiracMixture<C>) -> String {
    let mut out = String::from("component,xi_re,xi_im,k,lambda_re,lambda_im\n");
    for (j, c) in mix.components().iter().enumerate() {
        for (k, w) in c.lambdas.iter().enumerate() {
            let _ = writeln!(
                out,
                "{j},{:?},{:?},{k},{:?},{:?}",
                c.xi.re, c.xi.im, w.re, w.im
            );
        }
    }
    out
}

pub fn run(cli: &Cli) -> Result<()> {
    let start = Instant::now();
    let (input, result, diagnostics, csv) = match &cli.command {
        Command::GenMoments { spec, d } => return gen_moments(cli, spec, *d),
        Command::Recover {
            moments,
            r,
            l,
            method,
            solver,
            statistical,
            allow_ambiguous,
        } => {
            let input = read_input(moments)?;
            let m = io::parse_moments(&input.text)?;
            let cfg = RecoveryConfig {
                solver: (*solver).into(),
                statistical: *statistical,
                allow_ambiguous: *allow_ambiguous,
                ..config(cli)
            };
            let (mix, diag) = match method {
                Method::Prony => {
                    let rec = recover(&m, *r, *l, &cfg)?;
                    (rec.mixture, serde_json::to_value(&rec.diagnostics)?)
                }
                Method::Linear => {
                    let rec = prony_linear(&m, &cfg)?;
                    (rec.mixture, serde_json::to_value(&rec.diagnostics)?)
                }
                Method::Elimination => {
                    if (*r, *l) != (2, 1) {
                        return Err(Error::InvalidInput(
                            "elimination handles r = 2, l = 1 only".into(),
                        ));
                    }
                    let rec = recover_two_component(&m, *statistical)?;
                    let best = rec.candidates.first().ok_or(Error::NoConvergence)?;
                    let mix = LocalDiracMixture::new(vec![
                        LocalDirac::new(best.xi1, vec![best.lambda, best.lambda1]),
                        LocalDirac::new(best.xi2, vec![1.0 - best.lambda, best.lambda2]),
                    ])?;
                    (mix, serde_json::to_value(&rec)?)
                }
            };
            let csv = mixture_csv(&mix);
            (input, io::mixture_value(&mix), diag, csv)
        }
        Command::Fourier {
            action: FourierCmd::Coeffs { signal, s, noise },
        } => {
            let input = read_input(signal)?;
            let sig = io::signal_from_json(&input.text)?;
            let mut c = fourier_coefficients(&sig, *s)?;
            if *noise > 0.0 {
                c = add_noise(&c, *noise, cli.global.seed)?;
            }
            let text = match cli.global.format {
                OutFormat::Csv => io::fourier_to_csv(&c),
                OutFormat::Json => pretty(&coeffs_json(&c)),
            };
            return emit(cli, &text);
        }
        Command::Fourier {
            action:
                FourierCmd::Recon {
                    coeffs,
                    segments,
                    truth,
                },
        } => {
            let input = read_input(coeffs)?;
            let c = parse_coeffs(&input.text)?;
            let rec = reconstruct_signal(&c, *segments, &config(cli))?;
            let errors = match truth {
                Some(p) => Some(signal_errors(
                    &rec.inversion.signal,
                    &io::signal_from_json(&read_input(p)?.text)?,
                )?),
                None => None,
            };
            let sig = &rec.inversion.signal;
            let mut csv = String::from("t,f,df\n");
            for (i, t) in sig.breakpoints().iter().enumerate() {
                let f = sig.values().get(i).copied().unwrap_or(0.0);
                let df = sig.slopes().get(i).copied().unwrap_or(0.0);
                let _ = writeln!(csv, "{t:?},{f:?},{df:?}");
            }
            let diag = json!({
                "closure_residual": rec.inversion.closure_residual,
                "imaginary_residue": rec.inversion.imaginary_residue,
                "circle_deviation": rec.inversion.circle_deviation,
                "errors": errors,
                "recovery": rec.recovery,
            });
            (input, serde_json::to_value(sig)?, diag, csv)
        }
        Command::Statmix {
            action: StatmixCmd::Sample { model, n },
        } => {
            let input = read_input(model)?;
            let lg = gaussian_model(&input.text)?;
            let xs = lg.sample(*n, cli.global.seed)?;
            let text = match cli.global.format {
                OutFormat::Csv => io::sample_to_csv(&xs),
                OutFormat::Json => pretty(&json!({ "sample": xs })),
            };
            return emit(cli, &text);
        }
        Command::Statmix {
            action:
                StatmixCmd::Estimate {
                    sample,
                    components,
                    order,
                    d,
                    sigma,
                },
        } => {
            let input = read_input(sample)?;
            let xs = parse_sample(&input.text)?;
            let (r, l) = (*components, *order);
            let d = d.unwrap_or((l + 2) * r + 1);
            let m = empirical_moments(&xs, d)?;
            let cfg = RecoveryConfig {
                statistical: true,
                allow_ambiguous: true,
                ..config(cli)
            };
            let est = estimate(&m, r, l, &gaussian_moments(*sigma, d), &cfg)?;
            let mut csv = String::from("component,xi,weight,alphas\n");
            for (j, c) in est.components.iter().enumerate() {
                let alphas: Vec<String> = c.alphas.iter().map(|a| format!("{a:?}")).collect();
                let _ = writeln!(csv, "{j},{:?},{:?},{}", c.xi, c.weight, alphas.join(";"));
            }
            let diag = json!({
                "sample_size": xs.len(),
                "empirical_moments": m.values(),
                "dirac_moments": est.dirac_moments,
                "imaginary_residue": est.imaginary_residue,
                "recovery": est.recovery,
            });
            (
                input,
                json!({ "sigma": sigma, "components": est.components }),
                diag,
                csv,
            )
        }
        Command::IdealCheck { moments, family } => {
            let input = read_input(moments)?;
            let m = io::parse_moments(&input.text)?;
            let fam = GeneratorFamily::parse(family)?;
            let rep = ideal_check(&m, fam, cli.global.tol.unwrap_or(DEFAULT_IDEAL_TOL))?;
            let mut csv = String::from("family,index,value,scale,pass\n");
            for e in &rep.entries {
                let idx: Vec<String> = e.index.iter().map(usize::to_string).collect();
                let _ = writeln!(
                    csv,
                    "{},{},{:?},{:?},{}",
                    e.family,
                    idx.join(";"),
                    e.value,
                    e.scale,
                    e.pass
                );
            }
            let summary = json!({ "all_pass": rep.all_pass, "max_ratio": rep.max_ratio });
            (input, serde_json::to_value(&rep)?, summary, csv)
        }
    };
    if cli.global.format == OutFormat::Csv {
        return emit(cli, &csv);
    }
    let (command, global) = (&cli.command, &cli.global);
    let report = RunReport {
        command,
        global,
        input_sha256: input.digest,
        seed: cli.global.seed,
        result,
        diagnostics,
        timing: Timing {
            elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        },
    };
    emit(cli, &pretty(&report))
}

fn gen_moments(cli: &Cli, spec: &Path, d: usize) -> Result<()> {
    let input = read_input(spec)?;
    let m = match io::model_from_json(&input.text)? {
        ModelSpec::Mixture(mix) => local_dirac_moments(&mix, d),
        ModelSpec::Pareto(p) => pareto_moments(&p, d)?.to_complex(),
    };
    emit(cli, &io::write_moments(&m, Format::from(cli.global.format)))
}

fn coeffs_json(c: &FourierSamples) -> Value {
    let coeffs: Vec<Value> = c
        .pairs()
        .map(|(k, z)| json!({ "k": k, "re": z.re, "im": z.im }))
        .collect();
    json!({ "s": c.s(), "coeffs": coeffs })
}

#[derive(Deserialize)]
struct CoeffJson {
    k: i64,
    re: f64,
    im: f64,
}

#[derive(Deserialize)]
struct CoeffsJson {
    coeffs: Vec<CoeffJson>,
}

fn parse_coeffs(text: &str) -> Result<FourierSamples> {
    if text.trim_start().starts_with('{') {
        let raw: CoeffsJson = serde_json::from_str(text)?;
        let pairs: Vec<(i64, C)> = raw
            .coeffs
            .iter()
            .map(|c| (c.k, C::new(c.re, c.im)))
            .collect();
        FourierSamples::from_pairs(&pairs)
    } else {
        io::fourier_from_csv(text)
    }
}

#[derive(Deserialize)]
struct SampleJson {
    sample: Vec<f64>,
}

fn parse_sample(text: &str) -> Result<Vec<f64>> {
    if text.trim_start().starts_with('{') {
        let raw: SampleJson = serde_json::from_str(text)?;
        if raw.sample.is_empty() || raw.sample.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput(
                "sample must be non-empty and finite".into(),
            ));
        }
        Ok(raw.sample)
    } else {
        io::sample_from_csv(text)
    }
}

#[derive(Deserialize)]
struct GaussianJson {
    #[serde(default = "unit")]
    sigma: f64,
    components: Vec<LocalComponent>,
}

fn unit() -> f64 {
    1.0
}

fn gaussian_model(text: &str) -> Result<LocalGaussianMixture> {
    let raw: GaussianJson = serde_json::from_str(text)?;
    LocalGaussianMixture::new(raw.components, raw.sigma)
}
