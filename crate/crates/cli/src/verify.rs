//! Cross-path agreement at seeded random parameter points.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use sixport_core::moments::{moment_table, moment_table_direct};
use sixport_core::oracle::{default_herald_max, herald_distribution, herald_state};
use sixport_core::states::{general_heralded, state_fock_vector, table1_state, Family};
use sixport_core::unitary::compose;
use sixport_core::Error as CoreError;

use crate::error::CliError;

pub const ALPHA_RANGE: (f64, f64) = (0.2, 4.0);

#[derive(Debug, Clone, Copy)]
pub struct VerifyOptions {
    pub samples: usize,
    pub seed: u64,
    pub tolerance_scale: f64,
}

#[derive(Debug, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Serialize)]
pub struct Point {
    pub alpha: f64,
    pub phi: f64,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub seed: u64,
    pub samples: usize,
    pub generator: &'static str,
    pub points: Vec<Point>,
    pub checks: Vec<Check>,
    pub pass: bool,
}

struct Tracker {
    name: &'static str,
    tolerance: f64,
    worst: f64,
}

impl Tracker {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Self {
            name,
            tolerance,
            worst: 0.0,
        }
    }

    fn see(&mut self, deviation: f64) {
        // NaN must count as a failure.
        if !(deviation <= self.worst) {
            self.worst = if deviation.is_nan() { f64::INFINITY } else { deviation };
        }
    }

    fn finish(self, scale: f64) -> Check {
        let tolerance = self.tolerance * scale;
        Check {
            name: self.name,
            max_deviation: self.worst,
            tolerance,
            pass: self.worst <= tolerance,
        }
    }
}

pub fn verify(opts: &VerifyOptions) -> Result<Report, CliError> {
    if opts.samples == 0 {
        return Err(CliError::Validation("samples must be at least 1".into()));
    }
    if !(opts.tolerance_scale >= 0.0) {
        return Err(CliError::Validation("tolerance scale must be non-negative".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let points: Vec<Point> = (0..opts.samples)
        .map(|_| Point {
            alpha: rng.random_range(ALPHA_RANGE.0..ALPHA_RANGE.1),
            phi: rng.random_range(0.0..TAU),
        })
        .collect();

    let mut unitarity = Tracker::new("unitarity", 1e-12);
    let mut general = Tracker::new("closed_vs_general", 1e-12);
    let mut oracle = Tracker::new("closed_vs_oracle", 1e-9);
    let mut moments = Tracker::new("moment_paths", 1e-11);
    let mut complete = Tracker::new("completeness", 1e-8);

    for (idx, p) in points.iter().enumerate() {
        let u = compose(p.phi)?;
        unitarity.see(u.unitarity_defect());
        for f in Family::all() {
            let spec = f.spec(p.alpha, p.phi);
            let closed = match table1_state(&spec) {
                Ok(s) => s,
                Err(CoreError::HeraldImpossible(_)) => {
                    match herald_state(&spec, None) {
                        Err(CoreError::HeraldImpossible(_)) => {}
                        Ok(r) => oracle.see(r.probability),
                        Err(e) => return Err(e.into()),
                    }
                    continue;
                }
                Err(e) => return Err(e.into()),
            };
            let g = general_heralded(&spec, &u)?;
            for d in 0..3 {
                general.see((g.coeffs.get(d).copied().unwrap_or_default() - closed.coeffs[d]).norm());
            }
            general.see((g.probability - closed.probability).abs());

            let reference = herald_state(&spec, None)?;
            let ours = state_fock_vector(&closed, reference.cutoff)?;
            oracle.see(ours.max_abs_diff(&reference.state));
            oracle.see((closed.probability - reference.probability).abs());

            let way2 = moment_table(&closed, 3);
            let way1 = moment_table_direct(&spec, &u, 3)?;
            for k in 0..=3 {
                for l in 0..=3 {
                    let a = way2.get(k, l);
                    moments.see((a - way1.get(k, l)).norm() / a.norm().max(1.0));
                }
            }
        }
        let (n2, n3) = [(0, 0), (1, 0), (0, 1), (1, 1)][idx % 4];
        let hmax = default_herald_max(n2, n3, p.alpha, p.phi);
        let d = herald_distribution(n2, n3, p.alpha, p.phi, hmax, None)?;
        complete.see((d.total - 1.0).abs());
    }

    let checks: Vec<Check> = [unitarity, general, oracle, moments, complete]
        .into_iter()
        .map(|t| t.finish(opts.tolerance_scale))
        .collect();
    let pass = checks.iter().all(|c| c.pass);
    Ok(Report {
        seed: opts.seed,
        samples: opts.samples,
        generator: "ChaCha8",
        points,
        checks,
        pass,
    })
}
