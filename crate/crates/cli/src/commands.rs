//! One function per subcommand. Each returns the text to emit.

use std::fmt::Write as _;

use serde::Serialize;

use sixport_core::moments::{moment, quadratures, MomentQuery};
use sixport_core::oracle::{default_herald_max, herald_distribution, herald_state, HeraldSpec};
use sixport_core::scan::{minimize_variance_with, scan, OptimizerSettings};
use sixport_core::states::{general_heralded, table1_state, CoherentPolynomial, Family, GeneralState};
use sixport_core::unitary::compose;

use crate::args::{
    parse_family, required, resolve_cutoff, Cli, Command, ConfigFile, Format, HeraldArgs, HeraldInput, Method,
};
use crate::error::CliError;
use crate::output::{fmt_f64, pair, to_json};
use crate::verify::{verify, VerifyOptions};

pub fn run(cli: &Cli) -> Result<String, CliError> {
    let cfg = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    match &cli.command {
        Command::Matrix { phi } => matrix(required(phi.or(cfg.phi), "phi")?),
        Command::Herald(h) => herald(&h.resolve(&cfg)?),
        Command::State { herald, method } => state(&herald.resolve(&cfg)?, method.or(cfg.method).unwrap_or(Method::Closed)),
        Command::Moments { herald, k, l } => {
            let q = MomentQuery::new(required(k.or(cfg.k), "k")?, required(l.or(cfg.l), "l")?)?;
            moments(herald, &cfg, q)
        }
        Command::Quadratures(h) => quadrature_report(h, &cfg),
        Command::Scan(s) => scan_grid(&s.resolve(&cfg)?),
        Command::Optimize { family, res } => {
            let family = parse_family(&required(family.clone().or(cfg.family.clone()), "family")?)?;
            let res = match res {
                Some(r) => *r,
                None => match &cfg.res {
                    Some(v) => v
                        .as_u64()
                        .ok_or_else(|| CliError::Validation("res must be a positive integer".into()))?
                        as usize,
                    None => OptimizerSettings::default().resolution,
                },
            };
            optimize(family, res)
        }
        Command::Verify {
            samples,
            seed,
            tolerance_scale,
        } => {
            let opts = VerifyOptions {
                samples: samples.or(cfg.samples).unwrap_or(10),
                seed: seed.or(cfg.seed).unwrap_or(0),
                tolerance_scale: tolerance_scale.unwrap_or(1.0),
            };
            let report = verify(&opts)?;
            let text = to_json(&report);
            if report.pass {
                Ok(text)
            } else {
                let failed: Vec<&str> = report.checks.iter().filter(|c| !c.pass).map(|c| c.name).collect();
                Err(CliError::VerificationFailed(format!("{}; report: {text}", failed.join(", "))))
            }
        }
        Command::Dist {
            n2,
            n3,
            alpha,
            phi,
            herald_max,
            cutoff,
        } => {
            let spec = HeraldSpec::new(
                n2.or(cfg.n2).unwrap_or(0),
                n3.or(cfg.n3).unwrap_or(0),
                0,
                0,
                required(alpha.or(cfg.alpha), "alpha")?,
                required(phi.or(cfg.phi), "phi")?,
            );
            spec.validate()?;
            dist(&spec, herald_max.or(cfg.herald_max), resolve_cutoff(*cutoff, &cfg)?)
        }
    }
}

#[derive(Serialize)]
struct MatrixOut {
    phi: f64,
    matrix: Vec<Vec<[f64; 2]>>,
}

fn matrix(phi: f64) -> Result<String, CliError> {
    let u = compose(phi)?;
    let matrix = u.entries().iter().map(|row| row.iter().map(|&z| pair(z)).collect()).collect();
    Ok(to_json(&MatrixOut { phi, matrix }))
}

#[derive(Serialize)]
struct HeraldOut {
    amplitudes: Vec<[f64; 2]>,
    probability: f64,
    cutoff_used: usize,
}

fn herald(h: &HeraldInput) -> Result<String, CliError> {
    let r = herald_state(&h.spec, h.cutoff)?;
    Ok(to_json(&HeraldOut {
        amplitudes: r.state.amplitudes().iter().map(|&z| pair(z)).collect(),
        probability: r.probability,
        cutoff_used: r.cutoff,
    }))
}

#[derive(Serialize)]
struct StateOut {
    method: &'static str,
    label: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    c0: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    c1: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    c2: Option<[f64; 2]>,
    /// Every coefficient, highest degree last.
    #[serde(skip_serializing_if = "Option::is_none")]
    coeffs: Option<Vec<[f64; 2]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    norm: Option<f64>,
    probability: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    amplitudes: Option<Vec<[f64; 2]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cutoff_used: Option<usize>,
}

fn pattern_label(spec: &HeraldSpec) -> String {
    Family::from_pattern(spec.n2, spec.n3, spec.m2, spec.m3)
        .map(|f| f.to_string())
        .unwrap_or_else(|_| "general".to_string())
}

fn polynomial_out<S: CoherentPolynomial>(method: &'static str, label: String, s: &S, probability: f64) -> StateOut {
    let c = s.coeffs();
    let get = |d: usize| Some(pair(c.get(d).copied().unwrap_or_default()));
    StateOut {
        method,
        label,
        c0: get(0),
        c1: get(1),
        c2: get(2),
        coeffs: Some(c.iter().map(|&z| pair(z)).collect()),
        seed: Some(pair(s.seed())),
        norm: Some(s.norm()),
        probability,
        amplitudes: None,
        cutoff_used: None,
    }
}

fn general_state(spec: &HeraldSpec) -> Result<GeneralState, CliError> {
    Ok(general_heralded(spec, &spec.matrix()?)?)
}

fn state(h: &HeraldInput, method: Method) -> Result<String, CliError> {
    let spec = &h.spec;
    let out = match method {
        Method::Closed => {
            let s = table1_state(spec)?;
            polynomial_out("closed", s.label.to_string(), &s, s.probability)
        }
        Method::General => {
            let s = general_state(spec)?;
            polynomial_out("general", pattern_label(spec), &s, s.probability)
        }
        Method::Oracle => {
            let r = herald_state(spec, h.cutoff)?;
            StateOut {
                method: "oracle",
                label: pattern_label(spec),
                c0: None,
                c1: None,
                c2: None,
                coeffs: None,
                seed: None,
                norm: None,
                probability: r.probability,
                amplitudes: Some(r.state.amplitudes().iter().map(|&z| pair(z)).collect()),
                cutoff_used: Some(r.cutoff),
            }
        }
    };
    Ok(to_json(&out))
}

/// Tabulated patterns use the closed form; anything else the series path.
fn polynomial_state(spec: &HeraldSpec) -> Result<Box<dyn CoherentPolynomial>, CliError> {
    if Family::from_pattern(spec.n2, spec.n3, spec.m2, spec.m3).is_ok() {
        Ok(Box::new(table1_state(spec)?))
    } else {
        Ok(Box::new(general_state(spec)?))
    }
}

#[derive(Serialize)]
struct MomentOut {
    k: u32,
    l: u32,
    value: [f64; 2],
}

fn moments(h: &HeraldArgs, cfg: &ConfigFile, q: MomentQuery) -> Result<String, CliError> {
    let input = h.resolve(cfg)?;
    let s = polynomial_state(&input.spec)?;
    Ok(to_json(&MomentOut {
        k: q.k,
        l: q.l,
        value: pair(moment(s.as_ref(), q)),
    }))
}

#[derive(Serialize)]
struct QuadratureOut {
    var_x: f64,
    var_p: f64,
    squeeze_db_x: f64,
}

fn quadrature_report(h: &HeraldArgs, cfg: &ConfigFile) -> Result<String, CliError> {
    let input = h.resolve(cfg)?;
    let s = polynomial_state(&input.spec)?;
    let r = quadratures(s.as_ref())?;
    Ok(to_json(&QuadratureOut {
        var_x: r.var_x,
        var_p: r.var_p,
        squeeze_db_x: r.squeeze_db_x,
    }))
}

#[derive(Serialize)]
struct GridOut {
    family: String,
    quantity: &'static str,
    alpha: Vec<f64>,
    phi: Vec<f64>,
    /// Row-major over (alpha, phi); forbidden points are null.
    values: Vec<f64>,
}

fn scan_grid(input: &crate::args::ScanInput) -> Result<String, CliError> {
    let g = scan(input.family, input.quantity, input.alpha_range, input.phi_range, input.resolution)?;
    match input.format {
        Format::Csv => {
            let mut out = String::from("alpha,phi,value\n");
            for (a, p, v) in g.points() {
                writeln!(out, "{},{},{}", fmt_f64(a), fmt_f64(p), fmt_f64(v)).expect("writing to a String");
            }
            Ok(out)
        }
        Format::Json => Ok(to_json(&GridOut {
            family: g.family.to_string(),
            quantity: g.quantity.name(),
            alpha: g.alpha_axis,
            phi: g.phi_axis,
            values: g.values,
        })),
    }
}

#[derive(Serialize)]
struct OptimizeOut {
    family: String,
    alpha_opt: f64,
    phi_opt: f64,
    var_min: f64,
    squeeze_db: f64,
    probability_at_opt: f64,
    evaluations: usize,
}

fn optimize(family: Family, resolution: usize) -> Result<String, CliError> {
    let settings = OptimizerSettings {
        resolution,
        ..OptimizerSettings::default()
    };
    let r = minimize_variance_with(family, &settings)?;
    Ok(to_json(&OptimizeOut {
        family: family.to_string(),
        alpha_opt: r.alpha_opt,
        phi_opt: r.phi_opt,
        var_min: r.var_min,
        squeeze_db: r.squeeze_db,
        probability_at_opt: r.probability_at_opt,
        evaluations: r.evaluations,
    }))
}

#[derive(Serialize)]
struct Outcome {
    m2: u32,
    m3: u32,
    probability: f64,
}

#[derive(Serialize)]
struct DistOut {
    n2: u32,
    n3: u32,
    herald_max: u32,
    cutoff_used: usize,
    total: f64,
    residual: f64,
    outcomes: Vec<Outcome>,
}

fn dist(spec: &HeraldSpec, herald_max: Option<u32>, cutoff: Option<usize>) -> Result<String, CliError> {
    let hmax = herald_max.unwrap_or_else(|| default_herald_max(spec.n2, spec.n3, spec.alpha_mag, spec.phi));
    let d = herald_distribution(spec.n2, spec.n3, spec.alpha_mag, spec.phi, hmax, cutoff)?;
    Ok(to_json(&DistOut {
        n2: spec.n2,
        n3: spec.n3,
        herald_max: d.herald_max,
        cutoff_used: d.cutoff,
        total: d.total,
        residual: d.residual(),
        outcomes: d
            .probabilities
            .iter()
            .map(|(&(m2, m3), &probability)| Outcome { m2, m3, probability })
            .collect(),
    }))
}
