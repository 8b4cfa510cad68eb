//! Command-line flags, the optional JSON config file and their merge.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use sixport_core::oracle::HeraldSpec;
use sixport_core::scan::{Quantity, DEFAULT_RESOLUTION};
use sixport_core::states::Family;

use crate::error::CliError;

/// Environment variable that overrides the default Fock cutoff.
pub const CUTOFF_ENV: &str = "SIXPORT_CUTOFF";

#[derive(Debug, Parser)]
#[command(name = "sixport", version, about = "Heralded state engineering on a six-port Mach-Zehnder interferometer")]
pub struct Cli {
    /// JSON file with default flag values; flags given on the command line win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Write output here instead of standard output.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Composed transfer matrix as rows of [re, im] pairs.
    Matrix {
        #[arg(long, allow_negative_numbers = true)]
        phi: Option<f64>,
    },
    /// Heralded output state from the Fock-space simulator.
    Herald(HeraldArgs),
    /// Heralded state as a polynomial in the creation operator.
    State {
        #[command(flatten)]
        herald: HeraldArgs,
        #[arg(long, value_enum)]
        method: Option<Method>,
    },
    /// Normally ordered moment <a^dagger^k a^l>.
    Moments {
        #[command(flatten)]
        herald: HeraldArgs,
        #[arg(long)]
        k: Option<u32>,
        #[arg(long)]
        l: Option<u32>,
    },
    /// Quadrature variances and x squeezing in dB.
    Quadratures(HeraldArgs),
    /// Landscape of one quantity over (|alpha|, phi).
    Scan(ScanArgs),
    /// Smallest x variance over the parameter box.
    Optimize {
        #[arg(long)]
        family: Option<String>,
        /// Coarse grid points per axis.
        #[arg(long)]
        res: Option<usize>,
    },
    /// Cross-check every computation path at seeded random points.
    Verify {
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Multiplies every tolerance. Test hook.
        #[arg(long, hide = true)]
        tolerance_scale: Option<f64>,
    },
    /// Probabilities of all ancilla outcomes for fixed ancilla inputs.
    Dist {
        #[arg(long)]
        n2: Option<u32>,
        #[arg(long)]
        n3: Option<u32>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        phi: Option<f64>,
        #[arg(long)]
        herald_max: Option<u32>,
        #[arg(long)]
        cutoff: Option<usize>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Closed,
    General,
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Default, Args)]
pub struct HeraldArgs {
    /// Tabulated family, `psi1`..`psi16`; excludes the tuple flags.
    #[arg(long, conflicts_with_all = ["n2", "n3", "m2", "m3"])]
    pub family: Option<String>,
    #[arg(long)]
    pub n2: Option<u32>,
    #[arg(long)]
    pub n3: Option<u32>,
    #[arg(long)]
    pub m2: Option<u32>,
    #[arg(long)]
    pub m3: Option<u32>,
    /// Coherent amplitude |alpha|.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub phi: Option<f64>,
    #[arg(long)]
    pub cutoff: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ScanArgs {
    #[arg(long)]
    pub family: Option<String>,
    /// prob, varx or varp.
    #[arg(long)]
    pub quantity: Option<String>,
    #[arg(long)]
    pub alpha_min: Option<f64>,
    #[arg(long)]
    pub alpha_max: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub phi_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub phi_max: Option<f64>,
    /// Points per axis, `N` or `NxM` (alpha x phi).
    #[arg(long)]
    pub res: Option<String>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

/// Contents of a `--config` file. Every key is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub family: Option<String>,
    pub n2: Option<u32>,
    pub n3: Option<u32>,
    pub m2: Option<u32>,
    pub m3: Option<u32>,
    pub alpha: Option<f64>,
    pub phi: Option<f64>,
    pub cutoff: Option<usize>,
    pub method: Option<Method>,
    pub k: Option<u32>,
    pub l: Option<u32>,
    pub quantity: Option<String>,
    pub alpha_min: Option<f64>,
    pub alpha_max: Option<f64>,
    pub phi_min: Option<f64>,
    pub phi_max: Option<f64>,
    pub res: Option<serde_json::Value>,
    pub format: Option<Format>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub herald_max: Option<u32>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("bad config {}: {e}", path.display())))
    }
}

pub fn required<T>(value: Option<T>, name: &str) -> Result<T, CliError> {
    value.ok_or_else(|| CliError::Validation(format!("missing required value --{name}")))
}

pub fn parse_family(name: &str) -> Result<Family, CliError> {
    name.parse::<Family>().map_err(CliError::from)
}

pub fn parse_quantity(name: &str) -> Result<Quantity, CliError> {
    name.parse::<Quantity>().map_err(CliError::from)
}

/// Cutoff from the flag, the config, then the environment.
pub fn resolve_cutoff(flag: Option<usize>, cfg: &ConfigFile) -> Result<Option<usize>, CliError> {
    if let Some(c) = flag.or(cfg.cutoff) {
        return Ok(Some(c));
    }
    match std::env::var(CUTOFF_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map(Some)
            .map_err(|_| CliError::Validation(format!("{CUTOFF_ENV} must be a non-negative integer, got `{v}`"))),
        Err(_) => Ok(None),
    }
}

/// Fully resolved herald parameters.
#[derive(Debug, Clone, Copy)]
pub struct HeraldInput {
    pub spec: HeraldSpec,
    pub cutoff: Option<usize>,
}

impl HeraldArgs {
    pub fn resolve(&self, cfg: &ConfigFile) -> Result<HeraldInput, CliError> {
        let tuple_flags = [self.n2, self.n3, self.m2, self.m3];
        let (n2, n3, m2, m3) = if let Some(name) = &self.family {
            parse_family(name)?.pattern()
        } else if tuple_flags.iter().all(Option::is_none) && cfg.family.is_some() {
            let name = cfg.family.as_deref().unwrap_or_default();
            parse_family(name)?.pattern()
        } else {
            (
                self.n2.or(cfg.n2).unwrap_or(0),
                self.n3.or(cfg.n3).unwrap_or(0),
                self.m2.or(cfg.m2).unwrap_or(0),
                self.m3.or(cfg.m3).unwrap_or(0),
            )
        };
        let alpha = required(self.alpha.or(cfg.alpha), "alpha")?;
        let phi = required(self.phi.or(cfg.phi), "phi")?;
        let spec = HeraldSpec::new(n2, n3, m2, m3, alpha, phi);
        spec.validate()?;
        Ok(HeraldInput {
            spec,
            cutoff: resolve_cutoff(self.cutoff, cfg)?,
        })
    }
}

/// Resolved scan request.
#[derive(Debug, Clone, Copy)]
pub struct ScanInput {
    pub family: Family,
    pub quantity: Quantity,
    pub alpha_range: (f64, f64),
    pub phi_range: (f64, f64),
    pub resolution: (usize, usize),
    pub format: Format,
}

fn parse_res(text: &str) -> Result<(usize, usize), CliError> {
    let bad = || CliError::Validation(format!("resolution must be `N` or `NxM`, got `{text}`"));
    let parts: Vec<&str> = text.split('x').collect();
    let nums = parts
        .iter()
        .map(|p| p.trim().parse::<usize>().map_err(|_| bad()))
        .collect::<Result<Vec<_>, _>>()?;
    match nums.as_slice() {
        [n] => Ok((*n, *n)),
        [a, p] => Ok((*a, *p)),
        _ => Err(bad()),
    }
}

impl ScanArgs {
    pub fn resolve(&self, cfg: &ConfigFile) -> Result<ScanInput, CliError> {
        let family = parse_family(&required(self.family.clone().or(cfg.family.clone()), "family")?)?;
        let quantity = parse_quantity(&required(self.quantity.clone().or(cfg.quantity.clone()), "quantity")?)?;
        let resolution = match (&self.res, &cfg.res) {
            (Some(r), _) => parse_res(r)?,
            (None, Some(serde_json::Value::Number(n))) => {
                let n = n
                    .as_u64()
                    .ok_or_else(|| CliError::Validation("res must be a positive integer".into()))?;
                (n as usize, n as usize)
            }
            (None, Some(serde_json::Value::String(s))) => parse_res(s)?,
            (None, Some(_)) => return Err(CliError::Validation("res must be a number or string".into())),
            (None, None) => (DEFAULT_RESOLUTION, DEFAULT_RESOLUTION),
        };
        Ok(ScanInput {
            family,
            quantity,
            alpha_range: (
                self.alpha_min.or(cfg.alpha_min).unwrap_or(0.0),
                self.alpha_max.or(cfg.alpha_max).unwrap_or(sixport_core::scan::ALPHA_MAX),
            ),
            phi_range: (
                self.phi_min.or(cfg.phi_min).unwrap_or(0.0),
                self.phi_max.or(cfg.phi_max).unwrap_or(sixport_core::scan::PHI_MAX),
            ),
            resolution,
            format: self.format.or(cfg.format).unwrap_or(Format::Csv),
        })
    }
}
