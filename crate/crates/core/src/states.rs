//! Heralded output states in the form
//! `(c0 + c1 a^dagger + c2 a^dagger^2 + ...) |u11 alpha>`.
//!
//! The sixteen 0/1 herald patterns have tabulated coefficients. Arbitrary
//! photon numbers go through [`general_heralded`], which extracts the
//! coefficients and the success probability from generating functions.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::factorial::factorial;
use crate::genfunc::{FormalSeries, Layout, PolyBuilder};
use crate::moments::ComponentTable;
use crate::oracle::{FockVector, HeraldSpec, IMPOSSIBLE_PROBABILITY, TAIL_MASS_LIMIT};
use crate::unitary::{derived_coeffs, DerivedCoeffs, TransferMatrix};

/// Normalizations below this are analytic zeros of the herald.
pub const IMPOSSIBLE_NORM: f64 = 1e-28;
/// Largest `n2 + n3 + m2 + m3` accepted by [`general_heralded`].
pub const MAX_SERIES_ORDER: u32 = 12;

const PATTERNS: [(u32, u32, u32, u32); 16] = [
    (0, 0, 0, 0),
    (0, 0, 1, 0),
    (0, 0, 0, 1),
    (0, 0, 1, 1),
    (1, 0, 0, 0),
    (0, 1, 0, 0),
    (1, 1, 0, 0),
    (1, 0, 1, 0),
    (0, 1, 0, 1),
    (0, 1, 1, 0),
    (1, 0, 0, 1),
    (1, 0, 1, 1),
    (0, 1, 1, 1),
    (1, 1, 1, 0),
    (1, 1, 0, 1),
    (1, 1, 1, 1),
];

/// One of the sixteen single-photon-level herald patterns, `psi1..psi16`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Family(u8);

impl Family {
    pub fn new(index: u8) -> Result<Self> {
        if (1..=16).contains(&index) {
            Ok(Self(index))
        } else {
            Err(Error::InvalidParameter(format!("family index {index} not in 1..=16")))
        }
    }

    pub fn index(self) -> u8 {
        self.0
    }

    pub fn all() -> impl Iterator<Item = Family> {
        (1..=16).map(Family)
    }

    /// `(n2, n3, m2, m3)`.
    pub fn pattern(self) -> (u32, u32, u32, u32) {
        PATTERNS[self.0 as usize - 1]
    }

    pub fn from_pattern(n2: u32, n3: u32, m2: u32, m3: u32) -> Result<Self> {
        PATTERNS
            .iter()
            .position(|&p| p == (n2, n3, m2, m3))
            .map(|i| Self(i as u8 + 1))
            .ok_or(Error::OutOfTableRange(n2, n3, m2, m3))
    }

    pub fn spec(self, alpha_mag: f64, phi: f64) -> HeraldSpec {
        let (n2, n3, m2, m3) = self.pattern();
        HeraldSpec::new(n2, n3, m2, m3, alpha_mag, phi)
    }

    /// Category 1..=6: coherent, single-photon added, two-photon added,
    /// coherent + SPACS, SPACS + TPACS, all three.
    pub fn category(self) -> u8 {
        match self.0 {
            1..=4 => 1,
            5 | 6 => 2,
            7 => 3,
            8..=13 => 4,
            14 | 15 => 5,
            _ => 6,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "psi{}", self.0)
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let digits = s.trim().trim_start_matches("psi");
        digits
            .parse::<u8>()
            .map_err(|_| Error::InvalidParameter(format!("unknown family `{s}`")))
            .and_then(Family::new)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Label {
    Family(Family),
    General,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Family(fam) => fam.fmt(f),
            Label::General => f.write_str("general"),
        }
    }
}

/// A state `N^{-1/2} sum_d c_d a^dagger^d |seed>`.
pub trait CoherentPolynomial {
    fn coeffs(&self) -> &[C64];
    fn seed(&self) -> C64;
    fn norm(&self) -> f64;

    fn degree(&self) -> usize {
        self.coeffs().len().saturating_sub(1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClosedFormState {
    pub coeffs: [C64; 3],
    pub seed: C64,
    pub norm: f64,
    pub probability: f64,
    pub label: Label,
}

impl CoherentPolynomial for ClosedFormState {
    fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    fn seed(&self) -> C64 {
        self.seed
    }

    fn norm(&self) -> f64 {
        self.norm
    }
}

/// Coefficient triple `(c0, c1, c2)` of the tabulated family.
pub fn table1_coeffs(family: Family, u: &TransferMatrix, d: &DerivedCoeffs, alpha: C64) -> [C64; 3] {
    let z = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let u = |i, j| u.u(i, j);
    let a = alpha;
    match family.0 {
        1 => [one, z, z],
        2 => [u(1, 2) * a, z, z],
        3 => [u(1, 3) * a, z, z],
        4 => [u(1, 2) * u(1, 3) * a * a, z, z],
        5 => [z, u(2, 1), z],
        6 => [z, u(3, 1), z],
        7 => [z, z, u(2, 1) * u(3, 1)],
        8 => [u(2, 2), u(1, 2) * u(2, 1) * a, z],
        9 => [u(3, 3), u(1, 3) * u(3, 1) * a, z],
        10 => [u(3, 2), u(1, 2) * u(3, 1) * a, z],
        11 => [u(2, 3), u(1, 3) * u(2, 1) * a, z],
        12 => [d.tau1 * a, u(1, 2) * u(1, 3) * u(2, 1) * a * a, z],
        13 => [d.tau2 * a, u(1, 2) * u(1, 3) * u(3, 1) * a * a, z],
        14 => [z, d.tau3, u(1, 2) * u(2, 1) * u(3, 1) * a],
        15 => [z, d.tau4, u(1, 3) * u(2, 1) * u(3, 1) * a],
        _ => [d.tau5, d.kappa * a, u(1, 2) * u(1, 3) * u(2, 1) * u(3, 1) * a * a],
    }
}

/// Closed-form state for a herald pattern with every photon number in {0, 1}.
pub fn table1_state(spec: &HeraldSpec) -> Result<ClosedFormState> {
    let family = Family::from_pattern(spec.n2, spec.n3, spec.m2, spec.m3)?;
    let u = spec.matrix()?;
    let d = derived_coeffs(&u);
    let alpha = spec.alpha();
    let coeffs = table1_coeffs(family, &u, &d, alpha);
    let u11 = u.u(1, 1);
    let seed = u11 * alpha;
    let norm = normalization(&coeffs, seed);
    let probability = success_probability(norm, spec.alpha_mag, u11);
    if !(norm >= IMPOSSIBLE_NORM) {
        return Err(Error::HeraldImpossible(probability));
    }
    Ok(ClosedFormState {
        coeffs,
        seed,
        norm,
        probability,
        label: Label::Family(family),
    })
}

/// Squared norm of `(c0 + c1 a^dagger + c2 a^dagger^2) |seed>`, written out term by term.
pub fn normalization(c: &[C64; 3], seed: C64) -> f64 {
    let [c0, c1, c2] = *c;
    let s2 = seed.norm_sqr();
    c0.norm_sqr() + c1.norm_sqr() + 2.0 * c2.norm_sqr()
        + (c1.norm_sqr() + 4.0 * c2.norm_sqr()) * s2
        + c2.norm_sqr() * s2 * s2
        + 2.0 * (c0 * c2.conj() * seed * seed).re
        + 2.0 * ((c0 * c1.conj() + 2.0 * c1 * c2.conj()) * seed).re
        + 2.0 * (c1 * c2.conj() * s2 * seed).re
}

/// Squared norm of `sum_d c_d a^dagger^d |seed>` for any degree, from the
/// moment components `<seed| a^e a^dagger^d |seed>`.
pub fn poly_norm(coeffs: &[C64], seed: C64) -> f64 {
    let deg = coeffs.len().saturating_sub(1) as u32;
    let table = ComponentTable::new(seed, deg, 0);
    let mut acc = C64::new(0.0, 0.0);
    for (hl, cl) in coeffs.iter().enumerate() {
        for (hr, cr) in coeffs.iter().enumerate() {
            acc += cl * cr.conj() * table.component(hl as u32, hr as u32, 0, 0);
        }
    }
    acc.re
}

/// `N exp((|u11|^2 - 1) |alpha|^2)`.
pub fn success_probability(norm: f64, alpha_mag: f64, u11: C64) -> f64 {
    norm * ((u11.norm_sqr() - 1.0) * alpha_mag * alpha_mag).exp()
}

/// Number-basis amplitudes over `0..=cutoff`, normalized by `sqrt(N)` and
/// phase fixed like the brute-force simulator's output.
pub fn state_fock_vector<S: CoherentPolynomial + ?Sized>(state: &S, cutoff: usize) -> Result<FockVector> {
    if cutoff < state.degree().max(2) {
        return Err(Error::InvalidParameter(format!("cutoff {cutoff} below polynomial degree")));
    }
    let seed = state.seed();
    let coherent: Vec<C64> = (0..=cutoff)
        .map(|n| crate::oracle::coherent_coefficient(seed, n as u32))
        .collect();
    let scale = state.norm().sqrt();
    let amps: Vec<C64> = (0..=cutoff)
        .map(|n| {
            let mut acc = C64::new(0.0, 0.0);
            let mut raise = 1.0f64;
            for (d, c) in state.coeffs().iter().enumerate() {
                if d > n {
                    break;
                }
                if d > 0 {
                    // sqrt(n! / (n - d)!)
                    raise *= ((n - d + 1) as f64).sqrt();
                }
                acc += c * raise * coherent[n - d];
            }
            acc / scale
        })
        .collect();
    let v = FockVector::new(amps);
    let tail_mass = v.tail_mass();
    if tail_mass >= TAIL_MASS_LIMIT {
        return Err(Error::CutoffInadequate { cutoff, tail_mass });
    }
    Ok(v.phase_fixed())
}

/// Weight of `a^dagger^h_l |seed><seed| a^h_r` in the density operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityComponent {
    pub h_l: u32,
    pub h_r: u32,
    pub weight: C64,
}

pub fn density_components<S: CoherentPolynomial + ?Sized>(state: &S) -> Vec<DensityComponent> {
    let n = state.norm();
    let coeffs = state.coeffs();
    let mut out = Vec::new();
    for (hl, cl) in coeffs.iter().enumerate() {
        for (hr, cr) in coeffs.iter().enumerate() {
            let weight = cl * cr.conj() / n;
            if weight != C64::new(0.0, 0.0) {
                out.push(DensityComponent {
                    h_l: hl as u32,
                    h_r: hr as u32,
                    weight,
                });
            }
        }
    }
    out
}

/// Heralded state for arbitrary photon numbers, from the generating function.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralState {
    /// Coefficient of `a^dagger^d`, `d = 0..=n2+n3`.
    pub coeffs: Vec<C64>,
    pub seed: C64,
    pub norm: f64,
    /// Success probability from the eight-variable extraction.
    pub probability: f64,
    pub spec: HeraldSpec,
}

impl CoherentPolynomial for GeneralState {
    fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    fn seed(&self) -> C64 {
        self.seed
    }

    fn norm(&self) -> f64 {
        self.norm
    }
}

impl GeneralState {
    /// The same state as a [`ClosedFormState`] when its degree is at most two.
    pub fn to_closed_form(&self) -> Option<ClosedFormState> {
        if self.coeffs.len() > 3 {
            return None;
        }
        let mut coeffs = [C64::new(0.0, 0.0); 3];
        coeffs[..self.coeffs.len()].copy_from_slice(&self.coeffs);
        let s = &self.spec;
        let label = Family::from_pattern(s.n2, s.n3, s.m2, s.m3)
            .map(Label::Family)
            .unwrap_or(Label::General);
        Some(ClosedFormState {
            coeffs,
            seed: self.seed,
            norm: self.norm,
            probability: self.probability,
            label,
        })
    }
}

/// Variable slots of the density-operator generating function.
pub(crate) struct DensityVars {
    pub s: [usize; 2],
    pub t: [usize; 2],
    pub f: [usize; 2],
    pub g: [usize; 2],
    pub mu_nu: Option<(usize, usize)>,
}

/// Exponent of the density-operator generating function, without its
/// constant `|alpha u11|^2`:
///
/// `t.(alpha u_1. + s2 u_2. + s3 u_3.) + g.(conj) + (B A - |alpha u11|^2) + nu A + mu B`
///
/// with `A = alpha u11 + s2 u21 + s3 u31` and `B = conj(alpha u11) + f2 conj(u21) + f3 conj(u31)`.
pub(crate) fn density_exponent(
    layout: &Arc<Layout>,
    vars: &DensityVars,
    u: &TransferMatrix,
    alpha: C64,
) -> FormalSeries {
    let u = |i, j| u.u(i, j);
    let ac = alpha.conj();
    let [s2, s3] = vars.s;
    let [t2, t3] = vars.t;
    let [f2, f3] = vars.f;
    let [g2, g3] = vars.g;
    let mut b = PolyBuilder::new(layout)
        // ket-side herald exponents
        .term(&[t2], alpha * u(1, 2))
        .term(&[t2, s2], u(2, 2))
        .term(&[t2, s3], u(3, 2))
        .term(&[t3], alpha * u(1, 3))
        .term(&[t3, s2], u(2, 3))
        .term(&[t3, s3], u(3, 3))
        // bra side
        .term(&[g2], ac * u(1, 2).conj())
        .term(&[g2, f2], u(2, 2).conj())
        .term(&[g2, f3], u(3, 2).conj())
        .term(&[g3], ac * u(1, 3).conj())
        .term(&[g3, f2], u(2, 3).conj())
        .term(&[g3, f3], u(3, 3).conj())
        // B A without its constant
        .term(&[s2], ac * u(1, 1).conj() * u(2, 1))
        .term(&[s3], ac * u(1, 1).conj() * u(3, 1))
        .term(&[f2], alpha * u(1, 1) * u(2, 1).conj())
        .term(&[f3], alpha * u(1, 1) * u(3, 1).conj())
        .term(&[f2, s2], u(2, 1).norm_sqr().into())
        .term(&[f2, s3], u(2, 1).conj() * u(3, 1))
        .term(&[f3, s2], u(3, 1).conj() * u(2, 1))
        .term(&[f3, s3], u(3, 1).norm_sqr().into());
    if let Some((mu, nu)) = vars.mu_nu {
        b = b
            .term(&[nu], alpha * u(1, 1))
            .term(&[nu, s2], u(2, 1))
            .term(&[nu, s3], u(3, 1))
            .term(&[mu], ac * u(1, 1).conj())
            .term(&[mu, f2], u(2, 1).conj())
            .term(&[mu, f3], u(3, 1).conj());
    }
    b.build()
}

pub(crate) fn herald_factorials(spec: &HeraldSpec) -> f64 {
    [spec.n2, spec.n3, spec.m2, spec.m3].iter().map(|&n| factorial(n)).product()
}

/// Success probability by extracting the `(n2, n3, m2, m3)` mixed derivative
/// of both the ket and bra generating variables.
pub fn series_probability(spec: &HeraldSpec, u: &TransferMatrix) -> Result<f64> {
    let (n2, n3, m2, m3) = (spec.n2, spec.n3, spec.m2, spec.m3);
    let orders = [n2, n3, m2, m3, n2, n3, m2, m3];
    let layout = Layout::new(&["s2", "s3", "t2", "t3", "f2", "f3", "g2", "g3"], &orders)?;
    let vars = DensityVars {
        s: [0, 1],
        t: [2, 3],
        f: [4, 5],
        g: [6, 7],
        mu_nu: None,
    };
    let alpha = spec.alpha();
    let deriv = density_exponent(&layout, &vars, u, alpha)
        .exp()?
        .extract_derivative(&orders)?;
    let scale = ((u.u(1, 1).norm_sqr() - 1.0) * spec.alpha_mag * spec.alpha_mag).exp() / herald_factorials(spec);
    Ok(deriv.re * scale)
}

/// Output state for any photon numbers with `n2 + n3 + m2 + m3 <= 12`.
///
/// The `a^dagger^d` coefficient is the `(n2, n3, m2, m3)` derivative of
/// `exp(t2 (alpha u12 + s2 u22 + s3 u32) + t3 (alpha u13 + s2 u23 + s3 u33))
/// (s2 u21 + s3 u31)^d / d!`, divided by `sqrt(n2! n3! m2! m3!)`. The power is
/// generated by an auxiliary variable `w` with `exp(w (s2 u21 + s3 u31))`.
pub fn general_heralded(spec: &HeraldSpec, u: &TransferMatrix) -> Result<GeneralState> {
    spec.validate()?;
    let (n2, n3, m2, m3) = (spec.n2, spec.n3, spec.m2, spec.m3);
    let total = n2 + n3 + m2 + m3;
    if total > MAX_SERIES_ORDER {
        return Err(Error::SeriesOrderTooLarge(total));
    }
    let max_degree = n2 + n3;
    let layout = Layout::new(&["s2", "s3", "t2", "t3", "w"], &[n2, n3, m2, m3, max_degree])?;
    let alpha = spec.alpha();
    let (s2, s3, t2, t3, w) = (0, 1, 2, 3, 4);
    let uu = |i, j| u.u(i, j);
    let series = PolyBuilder::new(&layout)
        .term(&[t2], alpha * uu(1, 2))
        .term(&[t2, s2], uu(2, 2))
        .term(&[t2, s3], uu(3, 2))
        .term(&[t3], alpha * uu(1, 3))
        .term(&[t3, s2], uu(2, 3))
        .term(&[t3, s3], uu(3, 3))
        .term(&[w, s2], uu(2, 1))
        .term(&[w, s3], uu(3, 1))
        .build()
        .exp()?;
    let root = herald_factorials(spec).sqrt();
    let coeffs = (0..=max_degree)
        .map(|d| {
            series
                .extract_derivative(&[n2, n3, m2, m3, d])
                .map(|v| v / (factorial(d) * root))
        })
        .collect::<Result<Vec<_>>>()?;
    let seed = uu(1, 1) * alpha;
    let norm = poly_norm(&coeffs, seed);
    let probability = series_probability(spec, u)?;
    if !(probability >= IMPOSSIBLE_PROBABILITY) {
        return Err(Error::HeraldImpossible(probability));
    }
    Ok(GeneralState {
        coeffs,
        seed,
        norm,
        probability,
        spec: *spec,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::unitary::compose;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn family_patterns_round_trip() {
        for f in Family::all() {
            let (n2, n3, m2, m3) = f.pattern();
            assert_eq!(Family::from_pattern(n2, n3, m2, m3).unwrap(), f);
            assert_eq!(f.to_string().parse::<Family>().unwrap(), f);
        }
        assert_eq!(Family::from_pattern(1, 0, 1, 1).unwrap().index(), 12);
        assert!(matches!(Family::from_pattern(2, 0, 0, 0), Err(Error::OutOfTableRange(2, 0, 0, 0))));
        assert!("psi17".parse::<Family>().is_err());
    }

    #[test]
    fn table_rows() {
        let alpha = 1.3;
        let phi = 0.9;
        let u = compose(phi).unwrap();
        let d = derived_coeffs(&u);
        let a = c(alpha, 0.0);
        let f = |i| Family::new(i).unwrap();
        assert_eq!(table1_coeffs(f(1), &u, &d, a), [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(table1_coeffs(f(5), &u, &d, a), [c(0.0, 0.0), u.u(2, 1), c(0.0, 0.0)]);
        let row16 = table1_coeffs(f(16), &u, &d, a);
        assert_eq!(row16[0], d.tau5);
        assert_eq!(row16[1], d.kappa * a);
        assert_eq!(row16[2], u.u(1, 2) * u.u(1, 3) * u.u(2, 1) * u.u(3, 1) * a * a);

        let s = table1_state(&HeraldSpec::new(1, 0, 0, 0, alpha, phi)).unwrap();
        assert_eq!(s.label, Label::Family(f(5)));
        assert!(matches!(
            table1_state(&HeraldSpec::new(2, 0, 0, 0, alpha, phi)),
            Err(Error::OutOfTableRange(..))
        ));
    }

    #[test]
    fn normalization_simple_cases() {
        let z = c(0.0, 0.0);
        let one = c(1.0, 0.0);
        assert!((normalization(&[one, z, z], c(1.7, -0.4)) - 1.0).abs() < 1e-15);
        assert_eq!(normalization(&[z, one, z], z), 1.0);
        assert_eq!(normalization(&[z, z, one], z), 2.0);
    }

    #[test]
    fn normalization_agrees_with_component_sum() {
        let coeffs = [c(0.3, -0.2), c(-1.1, 0.5), c(0.4, 0.9)];
        for seed in [c(0.0, 0.0), c(1.2, 0.3), c(-0.7, 2.1)] {
            let a = normalization(&coeffs, seed);
            let b = poly_norm(&coeffs, seed);
            assert!((a - b).abs() < 1e-12 * a, "{a} vs {b}");
        }
    }

    #[test]
    fn probability_examples() {
        let s = table1_state(&HeraldSpec::new(0, 0, 0, 0, 2.0, 0.0)).unwrap();
        assert!((s.probability - 1.0).abs() < 1e-15);
        let s = table1_state(&HeraldSpec::new(1, 0, 0, 0, 0.0, PI)).unwrap();
        assert!((s.probability - 4.0 / 9.0).abs() < 1e-15);
        for phi in [0.3, 1.7, 4.0] {
            let s = table1_state(&HeraldSpec::new(1, 0, 0, 0, 0.0, phi)).unwrap();
            assert!((s.probability - (2.0 - 2.0 * phi.cos()) / 9.0).abs() < 1e-15);
        }
    }

    #[test]
    fn forbidden_heralds() {
        // identity device cannot move the ancilla photon
        assert!(matches!(
            table1_state(&HeraldSpec::new(1, 0, 0, 0, 1.0, 0.0)),
            Err(Error::HeraldImpossible(_))
        ));
        // no coherent light, no photon to herald
        assert!(matches!(
            table1_state(&HeraldSpec::new(0, 0, 1, 0, 0.0, 1.0)),
            Err(Error::HeraldImpossible(_))
        ));
    }

    #[test]
    fn fock_vector_examples() {
        let beta = c(1.1, -0.6);
        let st = ClosedFormState {
            coeffs: [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
            seed: beta,
            norm: 1.0,
            probability: 1.0,
            label: Label::Family(Family::new(1).unwrap()),
        };
        let v = state_fock_vector(&st, 40).unwrap();
        let expected = FockVector::coherent(beta, 40).phase_fixed();
        assert!(v.max_abs_diff(&expected) < 1e-14);

        let spacs = table1_state(&HeraldSpec::new(1, 0, 0, 0, 0.0, 1.0)).unwrap();
        let v = state_fock_vector(&spacs, 10).unwrap();
        assert!(v.max_abs_diff(&FockVector::number(1, 10)) < 1e-15);

        assert!(matches!(state_fock_vector(&st, 3), Err(Error::CutoffInadequate { .. })));
    }

    #[test]
    fn density_component_structure() {
        let s1 = table1_state(&HeraldSpec::new(0, 0, 0, 0, 1.0, 1.0)).unwrap();
        let comps = density_components(&s1);
        assert_eq!(comps.len(), 1);
        assert_eq!((comps[0].h_l, comps[0].h_r), (0, 0));
        assert!((comps[0].weight - c(1.0, 0.0)).norm() < 1e-15);

        let s5 = table1_state(&HeraldSpec::new(1, 0, 0, 0, 1.0, 1.0)).unwrap();
        let comps = density_components(&s5);
        assert_eq!(comps.len(), 1);
        assert_eq!((comps[0].h_l, comps[0].h_r), (1, 1));

        let s8 = table1_state(&HeraldSpec::new(1, 0, 1, 0, 1.0, 1.0)).unwrap();
        let comps = density_components(&s8);
        let pairs: Vec<_> = comps.iter().map(|c| (c.h_l, c.h_r)).collect();
        assert_eq!(pairs, vec![(0, 0), (0, 1), (1, 0), (1, 1)]);
        for a in &comps {
            let b = comps.iter().find(|b| b.h_l == a.h_r && b.h_r == a.h_l).unwrap();
            assert!((a.weight - b.weight.conj()).norm() < 1e-15);
        }
    }

    #[test]
    fn general_path_small_rows() {
        let spec = HeraldSpec::new(0, 0, 0, 0, 1.4, 2.2);
        let u = spec.matrix().unwrap();
        let g = general_heralded(&spec, &u).unwrap();
        assert_eq!(g.coeffs, vec![c(1.0, 0.0)]);
        let closed = table1_state(&spec).unwrap();
        assert!((g.probability - closed.probability).abs() < 1e-12);

        let spec = HeraldSpec::new(1, 1, 0, 0, 1.4, 2.2);
        let g = general_heralded(&spec, &u).unwrap();
        assert_eq!(g.coeffs.len(), 3);
        assert!((g.coeffs[2] - u.u(2, 1) * u.u(3, 1)).norm() < 1e-15);
        assert!(g.coeffs[0].norm() < 1e-15 && g.coeffs[1].norm() < 1e-15);
    }

    #[test]
    fn general_path_guard() {
        let spec = HeraldSpec::new(4, 3, 3, 3, 1.0, 1.0);
        let u = spec.matrix().unwrap();
        assert_eq!(general_heralded(&spec, &u).unwrap_err(), Error::SeriesOrderTooLarge(13));
    }

    #[test]
    fn general_probability_matches_norm_route() {
        for spec in [
            HeraldSpec::new(2, 0, 1, 0, 1.5, 1.0),
            HeraldSpec::new(1, 2, 0, 1, 0.8, 4.1),
            HeraldSpec::new(0, 0, 2, 1, 2.0, 2.5),
        ] {
            let u = spec.matrix().unwrap();
            let g = general_heralded(&spec, &u).unwrap();
            let via_norm = success_probability(g.norm, spec.alpha_mag, u.u(1, 1));
            assert!((g.probability - via_norm).abs() < 1e-12, "{spec:?}");
        }
    }
}
