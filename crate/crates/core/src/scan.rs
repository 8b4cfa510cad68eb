//! Probability and variance landscapes over `(|alpha|, phi)` and the
//! constrained search for the smallest x-quadrature variance.

use std::cell::Cell;
use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::moments::{quadratures, squeeze_db, VACUUM_VARIANCE};
use crate::states::{table1_state, Family};

pub const ALPHA_MAX: f64 = 10.0;
pub const PHI_MAX: f64 = TAU;
pub const DEFAULT_RESOLUTION: usize = 200;
pub const ACCEPTANCE_RESOLUTION: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    Probability,
    VarX,
    VarP,
}

impl Quantity {
    pub fn name(self) -> &'static str {
        match self {
            Quantity::Probability => "probability",
            Quantity::VarX => "var_x",
            Quantity::VarP => "var_p",
        }
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Quantity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "prob" | "probability" => Ok(Quantity::Probability),
            "varx" | "var_x" => Ok(Quantity::VarX),
            "varp" | "var_p" => Ok(Quantity::VarP),
            _ => Err(Error::InvalidParameter(format!("unknown quantity `{s}`"))),
        }
    }
}

/// Probability and both variances at one parameter point. Forbidden heralds
/// give probability 0 and NaN variances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointValues {
    pub probability: f64,
    pub var_x: f64,
    pub var_p: f64,
}

impl PointValues {
    pub fn get(&self, q: Quantity) -> f64 {
        match q {
            Quantity::Probability => self.probability,
            Quantity::VarX => self.var_x,
            Quantity::VarP => self.var_p,
        }
    }
}

pub fn evaluate(family: Family, alpha_mag: f64, phi: f64) -> Result<PointValues> {
    match table1_state(&family.spec(alpha_mag, phi)) {
        Ok(state) => {
            let q = quadratures(&state)?;
            Ok(PointValues {
                probability: state.probability,
                var_x: q.var_x,
                var_p: q.var_p,
            })
        }
        Err(Error::HeraldImpossible(_)) => Ok(PointValues {
            probability: 0.0,
            var_x: f64::NAN,
            var_p: f64::NAN,
        }),
        Err(e) => Err(e),
    }
}

/// Variance of `x` with forbidden points mapped to `+inf`.
fn objective(family: Family, alpha_mag: f64, phi: f64) -> f64 {
    match evaluate(family, alpha_mag, phi) {
        Ok(v) if v.var_x.is_finite() => v.var_x,
        _ => f64::INFINITY,
    }
}

/// `n` points from `lo` to `hi` inclusive. A point at the same fraction of the
/// range has the same value at every resolution.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            if i + 1 == n {
                hi
            } else {
                lo + (hi - lo) * (i as f64 / (n - 1) as f64)
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanGrid {
    pub family: Family,
    pub quantity: Quantity,
    pub alpha_axis: Vec<f64>,
    pub phi_axis: Vec<f64>,
    /// Row-major, `values[i * phi_axis.len() + j]` at `(alpha_axis[i], phi_axis[j])`.
    pub values: Vec<f64>,
}

impl ScanGrid {
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.phi_axis.len() + j]
    }

    /// `(alpha, phi, value)` in row-major order.
    pub fn points(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.alpha_axis.iter().enumerate().flat_map(move |(i, &a)| {
            self.phi_axis
                .iter()
                .enumerate()
                .map(move |(j, &p)| (a, p, self.value(i, j)))
        })
    }
}

fn check_range(name: &str, (lo, hi): (f64, f64)) -> Result<()> {
    if lo.is_finite() && hi.is_finite() && lo < hi {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} range must satisfy min < max, got [{lo}, {hi}]")))
    }
}

pub fn scan(
    family: Family,
    quantity: Quantity,
    alpha_range: (f64, f64),
    phi_range: (f64, f64),
    resolution: (usize, usize),
) -> Result<ScanGrid> {
    check_range("alpha", alpha_range)?;
    check_range("phi", phi_range)?;
    if alpha_range.0 < 0.0 {
        return Err(Error::InvalidParameter("alpha must be non-negative".into()));
    }
    if resolution.0 < 2 || resolution.1 < 2 {
        return Err(Error::InvalidParameter("resolution must be at least 2 per axis".into()));
    }
    let alpha_axis = linspace(alpha_range.0, alpha_range.1, resolution.0);
    let phi_axis = linspace(phi_range.0, phi_range.1, resolution.1);
    let mut values = Vec::with_capacity(alpha_axis.len() * phi_axis.len());
    for &a in &alpha_axis {
        for &p in &phi_axis {
            values.push(evaluate(family, a, p)?.get(quantity));
        }
    }
    Ok(ScanGrid {
        family,
        quantity,
        alpha_axis,
        phi_axis,
        values,
    })
}

/// Variances within this distance of the vacuum level count as unsqueezed.
/// It absorbs the rounding left over when moments of a coherent state cancel.
pub const FEASIBILITY_MARGIN: f64 = 1e-12;

/// `true` where `var_x < 0.5 - FEASIBILITY_MARGIN`; missing values are never
/// squeezed.
pub fn feasibility_mask(grid: &ScanGrid) -> Result<Vec<bool>> {
    if grid.quantity != Quantity::VarX {
        return Err(Error::QuantityMismatch {
            expected: Quantity::VarX.name(),
            found: grid.quantity.name(),
        });
    }
    Ok(grid.values.iter().map(|&v| v < VACUUM_VARIANCE - FEASIBILITY_MARGIN).collect())
}

/// Largest `|v(alpha, phi) - v(alpha, 2 pi - phi)|` on the grid.
pub fn symmetry_report(grid: &ScanGrid) -> Result<f64> {
    let n = grid.phi_axis.len();
    let symmetric = (0..n).all(|j| (grid.phi_axis[j] + grid.phi_axis[n - 1 - j] - TAU).abs() < 1e-9);
    if !symmetric {
        return Err(Error::AxisNotSymmetric);
    }
    let mut worst = 0.0f64;
    for i in 0..grid.alpha_axis.len() {
        for j in 0..n {
            let a = grid.value(i, j);
            let b = grid.value(i, n - 1 - j);
            let d = match (a.is_nan(), b.is_nan()) {
                (true, true) => 0.0,
                (false, false) => (a - b).abs(),
                _ => f64::INFINITY,
            };
            worst = worst.max(d);
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerSettings {
    pub resolution: usize,
    pub tolerance: f64,
    pub max_evaluations: usize,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self {
            resolution: ACCEPTANCE_RESOLUTION,
            tolerance: 1e-10,
            max_evaluations: 5000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptResult {
    pub alpha_opt: f64,
    pub phi_opt: f64,
    pub var_min: f64,
    pub squeeze_db: f64,
    pub probability_at_opt: f64,
    /// Objective evaluations in the coarse and the local stage together.
    pub evaluations: usize,
    /// Smallest value seen on the coarse grid.
    pub coarse_min: f64,
}

pub fn minimize_variance(family: Family) -> Result<OptResult> {
    minimize_variance_with(family, &OptimizerSettings::default())
}

/// Coarse grid over `[0, 10] x [0, 2 pi]`, then a bounded Nelder-Mead
/// refinement from the best grid point. Ties on the grid go to the smaller
/// `|alpha|`, then the smaller `phi`.
///
/// Coherent-output families report exactly 0.5 at the first allowed grid
/// point instead of chasing rounding noise.
pub fn minimize_variance_with(family: Family, settings: &OptimizerSettings) -> Result<OptResult> {
    if settings.resolution < 2 {
        return Err(Error::InvalidParameter("resolution must be at least 2".into()));
    }
    if family.category() == 1 {
        return coherent_optimum(family, settings.resolution);
    }
    let alphas = linspace(0.0, ALPHA_MAX, settings.resolution);
    let phis = linspace(0.0, PHI_MAX, settings.resolution);
    let mut best = (f64::INFINITY, 0.0, 0.0);
    let mut evaluations = 0;
    for &a in &alphas {
        for &p in &phis {
            let v = objective(family, a, p);
            evaluations += 1;
            if v < best.0 {
                best = (v, a, p);
            }
        }
    }
    let coarse_min = best.0;
    if !coarse_min.is_finite() {
        return Err(Error::HeraldImpossible(0.0));
    }
    let step = [
        ALPHA_MAX / (settings.resolution - 1) as f64,
        PHI_MAX / (settings.resolution - 1) as f64,
    ];
    let f = |x: [f64; 2]| objective(family, x[0], x[1]);
    let local = nelder_mead(f, [best.1, best.2], step, settings.tolerance, settings.max_evaluations);
    evaluations += local.evaluations;
    let (var_min, alpha_opt, phi_opt) = if local.value < best.0 {
        (local.value, local.point[0], local.point[1])
    } else {
        best
    };
    let at_opt = evaluate(family, alpha_opt, phi_opt)?;
    Ok(OptResult {
        alpha_opt,
        phi_opt,
        var_min,
        squeeze_db: squeeze_db(var_min)?,
        probability_at_opt: at_opt.probability,
        evaluations,
        coarse_min,
    })
}

fn coherent_optimum(family: Family, resolution: usize) -> Result<OptResult> {
    let mut evaluations = 0;
    for a in linspace(0.0, ALPHA_MAX, resolution) {
        for p in linspace(0.0, PHI_MAX, resolution) {
            evaluations += 1;
            let v = evaluate(family, a, p)?;
            if v.var_x.is_finite() {
                return Ok(OptResult {
                    alpha_opt: a,
                    phi_opt: p,
                    var_min: VACUUM_VARIANCE,
                    squeeze_db: 0.0,
                    probability_at_opt: v.probability,
                    evaluations,
                    coarse_min: VACUUM_VARIANCE,
                });
            }
        }
    }
    Err(Error::HeraldImpossible(0.0))
}

struct LocalMin {
    point: [f64; 2],
    value: f64,
    evaluations: usize,
}

const BOUNDS: [(f64, f64); 2] = [(0.0, ALPHA_MAX), (0.0, PHI_MAX)];

fn clamp(x: [f64; 2]) -> [f64; 2] {
    [x[0].clamp(BOUNDS[0].0, BOUNDS[0].1), x[1].clamp(BOUNDS[1].0, BOUNDS[1].1)]
}

/// Nelder-Mead on the box, vertices projected onto the bounds. Restarts with
/// a shrunken simplex around the incumbent until a restart no longer
/// improves by more than `tol`.
fn nelder_mead<F: Fn([f64; 2]) -> f64>(f: F, start: [f64; 2], step: [f64; 2], tol: f64, max_evals: usize) -> LocalMin {
    let count = Cell::new(0usize);
    let eval = |x: [f64; 2]| {
        count.set(count.get() + 1);
        f(x)
    };
    let mut center = clamp(start);
    let mut center_val = eval(center);
    let mut scale = step;
    loop {
        // Step away from the bound when the start sits on it.
        let offset = |i: usize, x: [f64; 2]| {
            let mut y = x;
            y[i] = if y[i] + scale[i] <= BOUNDS[i].1 { y[i] + scale[i] } else { y[i] - scale[i] };
            y
        };
        let mut simplex: Vec<([f64; 2], f64)> = vec![(center, center_val)];
        for i in 0..2 {
            let p = offset(i, center);
            simplex.push((p, eval(p)));
        }
        while count.get() < max_evals {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let (best, worst) = (simplex[0].1, simplex[2].1);
            let spread = worst - best;
            let size = simplex
                .iter()
                .map(|(p, _)| ((p[0] - simplex[0].0[0]).abs()).max((p[1] - simplex[0].0[1]).abs()))
                .fold(0.0, f64::max);
            if (spread.is_finite() && spread <= tol) || size < 1e-14 {
                break;
            }
            let centroid = [
                0.5 * (simplex[0].0[0] + simplex[1].0[0]),
                0.5 * (simplex[0].0[1] + simplex[1].0[1]),
            ];
            let towards = |t: f64| {
                clamp([
                    centroid[0] + t * (simplex[2].0[0] - centroid[0]),
                    centroid[1] + t * (simplex[2].0[1] - centroid[1]),
                ])
            };
            let xr = towards(-1.0);
            let fr = eval(xr);
            if fr < simplex[0].1 {
                let xe = towards(-2.0);
                let fe = eval(xe);
                simplex[2] = if fe < fr { (xe, fe) } else { (xr, fr) };
            } else if fr < simplex[1].1 {
                simplex[2] = (xr, fr);
            } else {
                let (xc, fc) = if fr < simplex[2].1 {
                    let xc = towards(-0.5);
                    (xc, eval(xc))
                } else {
                    let xc = towards(0.5);
                    (xc, eval(xc))
                };
                if fc < simplex[2].1.min(fr) {
                    simplex[2] = (xc, fc);
                } else {
                    let b = simplex[0].0;
                    for v in simplex.iter_mut().skip(1) {
                        let p = [0.5 * (b[0] + v.0[0]), 0.5 * (b[1] + v.0[1])];
                        *v = (p, eval(p));
                    }
                }
            }
        }
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let improved = center_val - simplex[0].1;
        let moved = simplex[0].1 < center_val;
        if moved {
            center = simplex[0].0;
            center_val = simplex[0].1;
        }
        if !(improved > tol) || count.get() >= max_evals {
            break;
        }
        scale = [scale[0] * 0.1, scale[1] * 0.1];
    }
    LocalMin {
        point: center,
        value: center_val,
        evaluations: count.get(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fam(i: u8) -> Family {
        Family::new(i).unwrap()
    }

    #[test]
    fn linspace_is_refinement_stable() {
        let coarse = linspace(0.0, 10.0, 11);
        let fine = linspace(0.0, 10.0, 21);
        for (i, x) in coarse.iter().enumerate() {
            assert_eq!(*x, fine[2 * i]);
        }
        assert_eq!(*fine.last().unwrap(), 10.0);
    }

    #[test]
    fn coherent_family_probability_curve() {
        let g = scan(fam(1), Quantity::Probability, (2.0, 3.0), (0.0, TAU), (2, 33)).unwrap();
        for (j, &phi) in g.phi_axis.iter().enumerate() {
            let (d, _) = crate::unitary::closed_form_entries(phi);
            let expected = ((d.norm_sqr() - 1.0) * 4.0).exp();
            assert!((g.value(0, j) - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn coherent_family_is_never_squeezed() {
        for i in 1..=4 {
            let g = scan(fam(i), Quantity::VarX, (0.0, 10.0), (0.0, TAU), (15, 15)).unwrap();
            for v in g.values.iter().filter(|v| !v.is_nan()) {
                assert!((v - 0.5).abs() < 1e-12);
            }
            assert!(feasibility_mask(&g).unwrap().iter().all(|m| !m));
        }
    }

    #[test]
    fn forbidden_points_use_sentinel() {
        // psi2 needs coherent light to herald a photon in port 2.
        let v = evaluate(fam(2), 0.0, 1.0).unwrap();
        assert_eq!(v.probability, 0.0);
        assert!(v.var_x.is_nan());
        let g = scan(fam(2), Quantity::VarX, (0.0, 1.0), (0.5, 1.5), (2, 2)).unwrap();
        assert!(!feasibility_mask(&g).unwrap()[0]);
    }

    #[test]
    fn mask_is_strict() {
        let g = ScanGrid {
            family: fam(5),
            quantity: Quantity::VarX,
            alpha_axis: vec![0.0, 1.0],
            phi_axis: vec![0.0],
            values: vec![0.5 - 1e-15, 0.4999],
        };
        assert_eq!(feasibility_mask(&g).unwrap(), vec![false, true]);
        let p = ScanGrid {
            quantity: Quantity::Probability,
            ..g
        };
        assert!(matches!(feasibility_mask(&p), Err(Error::QuantityMismatch { .. })));
    }

    #[test]
    fn psi16_dips_below_vacuum_at_alpha_two() {
        let g = scan(fam(16), Quantity::VarX, (2.0, 2.5), (0.0, TAU), (2, 201)).unwrap();
        let row: Vec<f64> = (0..201).map(|j| g.value(0, j)).collect();
        let min = row.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(min < 0.5);
        assert!(feasibility_mask(&g).unwrap().iter().any(|&m| m));
    }

    #[test]
    fn symmetry_detects_corruption() {
        let mut g = scan(fam(8), Quantity::Probability, (0.5, 4.0), (0.0, TAU), (5, 41)).unwrap();
        assert!(symmetry_report(&g).unwrap() < 1e-12);
        g.values[3] += 1e-3;
        assert!(symmetry_report(&g).unwrap() >= 1e-3 * 0.999);
        let lopsided = scan(fam(8), Quantity::Probability, (0.5, 4.0), (0.0, 3.0), (5, 5)).unwrap();
        assert_eq!(symmetry_report(&lopsided).unwrap_err(), Error::AxisNotSymmetric);
    }

    #[test]
    fn scan_validates_input() {
        assert!(scan(fam(1), Quantity::VarX, (1.0, 0.0), (0.0, 1.0), (4, 4)).is_err());
        assert!(scan(fam(1), Quantity::VarX, (0.0, 1.0), (0.0, 1.0), (1, 4)).is_err());
        assert!("varp".parse::<Quantity>().unwrap() == Quantity::VarP);
        assert!("nope".parse::<Quantity>().is_err());
    }

    #[test]
    fn nelder_mead_finds_quadratic_minimum() {
        let f = |x: [f64; 2]| (x[0] - 3.0).powi(2) + 2.0 * (x[1] - 1.0).powi(2) + 0.25;
        let r = nelder_mead(f, [5.0, 4.0], [0.5, 0.5], 1e-14, 5000);
        assert!((r.value - 0.25).abs() < 1e-12);
        assert!((r.point[0] - 3.0).abs() < 1e-5 && (r.point[1] - 1.0).abs() < 1e-5);
    }

    #[test]
    fn nelder_mead_respects_bounds() {
        let f = |x: [f64; 2]| x[0] + (x[1] - 2.0).powi(2);
        let r = nelder_mead(f, [1.0, 1.0], [0.3, 0.3], 1e-12, 5000);
        assert!(r.point[0] >= 0.0 && r.value < 1e-6);
    }

    #[test]
    fn coherent_family_optimum_is_vacuum_level() {
        for i in 1..=4 {
            let r = minimize_variance_with(
                fam(i),
                &OptimizerSettings {
                    resolution: 10,
                    ..OptimizerSettings::default()
                },
            )
            .unwrap();
            assert_eq!(r.var_min, 0.5);
            assert_eq!(r.squeeze_db, 0.0);
            assert!(r.probability_at_opt > 0.0);
        }
    }

    #[test]
    fn quick_spacs_minimum() {
        let r = minimize_variance_with(
            fam(5),
            &OptimizerSettings {
                resolution: 60,
                ..OptimizerSettings::default()
            },
        )
        .unwrap();
        assert!((r.var_min - 0.375).abs() < 1e-6, "{r:?}");
        assert!(r.var_min <= r.coarse_min);
    }
}
