//! Normally ordered moments `<a^dagger^k a^l>` and quadrature variances.
//!
//! Two independent routes are provided. The canonical one works on the
//! density components `a^dagger^h_l |b><b| a^h_r` of a closed-form state,
//! each evaluated from
//!
//! `d_s^h_l d_t^h_r d_mu^k d_nu^l exp(s nu + t mu + s t + (nu + t) b + (s + mu) conj(b))`
//!
//! at the origin (`b` the coherent seed). Because `|b>` is normalized this
//! already is the expectation on the unnormalized component; the weights
//! `c_hl conj(c_hr) / N` then give a trace-one state. The second route
//! extracts the moment directly from the ten-variable generating function of
//! the heralded density operator.

use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::factorial::factorial;
use crate::genfunc::{FormalSeries, Layout, PolyBuilder};
use crate::oracle::HeraldSpec;
use crate::states::{density_exponent, herald_factorials, CoherentPolynomial, DensityVars};
use crate::unitary::TransferMatrix;

pub const MAX_MOMENT_ORDER: u32 = 8;
/// Vacuum variance of either quadrature.
pub const VACUUM_VARIANCE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MomentQuery {
    pub k: u32,
    pub l: u32,
}

impl MomentQuery {
    pub fn new(k: u32, l: u32) -> Result<Self> {
        if k > MAX_MOMENT_ORDER || l > MAX_MOMENT_ORDER {
            return Err(Error::InvalidParameter(format!(
                "moment order ({k}, {l}) exceeds {MAX_MOMENT_ORDER}"
            )));
        }
        Ok(Self { k, l })
    }
}

/// All component moments for one coherent seed, from a single series.
pub struct ComponentTable {
    series: FormalSeries,
}

impl ComponentTable {
    pub fn new(seed: C64, h_max: u32, kl_max: u32) -> Self {
        let layout = Layout::new(&["s", "t", "mu", "nu"], &[h_max, h_max, kl_max, kl_max])
            .expect("four small orders");
        Self {
            series: component_exponent(&layout, seed).exp().expect("no constant term"),
        }
    }

    /// `<a^dagger^k a^l>` on `a^dagger^h_l |seed><seed| a^h_r`.
    ///
    /// Panics when an index exceeds the orders the table was built with.
    pub fn component(&self, h_l: u32, h_r: u32, k: u32, l: u32) -> C64 {
        self.series
            .extract_derivative(&[h_l, h_r, k, l])
            .expect("index within table orders")
    }
}

fn component_exponent(layout: &Arc<Layout>, seed: C64) -> FormalSeries {
    let (s, t, mu, nu) = (0, 1, 2, 3);
    let one = C64::new(1.0, 0.0);
    PolyBuilder::new(layout)
        .term(&[s, nu], one)
        .term(&[t, mu], one)
        .term(&[s, t], one)
        .term(&[nu], seed)
        .term(&[t], seed)
        .term(&[s], seed.conj())
        .term(&[mu], seed.conj())
        .build()
}

pub fn moment_component(h_l: u32, h_r: u32, q: MomentQuery, seed: C64) -> C64 {
    ComponentTable::new(seed, h_l.max(h_r), q.k.max(q.l)).component(h_l, h_r, q.k, q.l)
}

/// Moments `<a^dagger^k a^l>` for all `k, l <= kl_max`, indexed `[k][l]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTable {
    values: Vec<Vec<C64>>,
}

impl MomentTable {
    pub fn get(&self, k: u32, l: u32) -> C64 {
        self.values[k as usize][l as usize]
    }

    pub fn kl_max(&self) -> u32 {
        self.values.len() as u32 - 1
    }
}

/// Canonical moment table, summed over the density components.
pub fn moment_table<S: CoherentPolynomial + ?Sized>(state: &S, kl_max: u32) -> MomentTable {
    let coeffs = state.coeffs();
    let n = state.norm();
    let deg = state.degree() as u32;
    let comps = ComponentTable::new(state.seed(), deg, kl_max);
    let mut values = vec![vec![C64::new(0.0, 0.0); kl_max as usize + 1]; kl_max as usize + 1];
    for (hl, cl) in coeffs.iter().enumerate() {
        for (hr, cr) in coeffs.iter().enumerate() {
            let w = cl * cr.conj() / n;
            if w == C64::new(0.0, 0.0) {
                continue;
            }
            for k in 0..=kl_max {
                for l in 0..=kl_max {
                    values[k as usize][l as usize] += w * comps.component(hl as u32, hr as u32, k, l);
                }
            }
        }
    }
    MomentTable { values }
}

pub fn moment<S: CoherentPolynomial + ?Sized>(state: &S, q: MomentQuery) -> C64 {
    let kl = q.k.max(q.l);
    moment_table(state, kl).get(q.k, q.l)
}

/// Moments straight from the heralded density operator's generating function
/// in ten variables `(s2, s3, t2, t3, f2, f3, g2, g3, mu, nu)`, normalized by
/// the eight-variable success probability.
pub fn moment_table_direct(spec: &HeraldSpec, u: &TransferMatrix, kl_max: u32) -> Result<MomentTable> {
    let (n2, n3, m2, m3) = (spec.n2, spec.n3, spec.m2, spec.m3);
    let orders = [n2, n3, m2, m3, n2, n3, m2, m3, kl_max, kl_max];
    let layout = Layout::new(
        &["s2", "s3", "t2", "t3", "f2", "f3", "g2", "g3", "mu", "nu"],
        &orders,
    )?;
    let vars = DensityVars {
        s: [0, 1],
        t: [2, 3],
        f: [4, 5],
        g: [6, 7],
        mu_nu: Some((8, 9)),
    };
    let series = density_exponent(&layout, &vars, u, spec.alpha()).exp()?;
    let scale = ((u.u(1, 1).norm_sqr() - 1.0) * spec.alpha_mag * spec.alpha_mag).exp() / herald_factorials(spec);
    let probability = series.extract_derivative(&[n2, n3, m2, m3, n2, n3, m2, m3, 0, 0])?.re * scale;
    if !(probability >= crate::oracle::IMPOSSIBLE_PROBABILITY) {
        return Err(Error::HeraldImpossible(probability));
    }
    let mut values = vec![vec![C64::new(0.0, 0.0); kl_max as usize + 1]; kl_max as usize + 1];
    for k in 0..=kl_max {
        for l in 0..=kl_max {
            let d = series.extract_derivative(&[n2, n3, m2, m3, n2, n3, m2, m3, k, l])?;
            values[k as usize][l as usize] = d * scale / probability;
        }
    }
    Ok(MomentTable { values })
}

pub fn moment_direct(spec: &HeraldSpec, u: &TransferMatrix, q: MomentQuery) -> Result<C64> {
    Ok(moment_table_direct(spec, u, q.k.max(q.l))?.get(q.k, q.l))
}

/// Variances of `x = (a + a^dagger)/sqrt 2` and `p = (a - a^dagger)/(i sqrt 2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureReport {
    pub var_x: f64,
    pub var_p: f64,
    pub squeeze_db_x: f64,
}

/// Assembles both variances from `<a>`, `<a^dagger a>` and `<a^2>`.
pub fn quadratures_from_moments(m: &MomentTable) -> Result<QuadratureReport> {
    let a = m.get(0, 1);
    let n = m.get(1, 1).re;
    let a2 = m.get(0, 2);
    let var_x = 0.5 * (1.0 + 2.0 * n + 2.0 * a2.re) - 2.0 * a.re * a.re;
    let var_p = 0.5 * (1.0 + 2.0 * n - 2.0 * a2.re) - 2.0 * a.im * a.im;
    Ok(QuadratureReport {
        var_x,
        var_p,
        squeeze_db_x: squeeze_db(var_x)?,
    })
}

/// Fock amplitudes of `D(-b) |psi>`, with `b` the seed. Since
/// `D(-b) a^dagger D(b) = a^dagger + conj(b)`, the polynomial in `a^dagger`
/// acts on vacuum and the result has `degree + 1` entries.
pub fn centered_amplitudes<S: CoherentPolynomial + ?Sized>(state: &S) -> Vec<C64> {
    let shift = state.seed().conj();
    let c = state.coeffs();
    // Coefficients of a^dagger^j in sum_d c_d (a^dagger + shift)^d.
    let mut e = vec![C64::new(0.0, 0.0); c.len()];
    for (d, &cd) in c.iter().enumerate() {
        let mut binom = 1.0;
        for j in 0..=d {
            e[j] += cd * binom * shift.powu((d - j) as u32);
            binom = binom * (d - j) as f64 / (j + 1) as f64;
        }
    }
    let amps: Vec<C64> = e.iter().enumerate().map(|(j, &ej)| ej * factorial(j as u32).sqrt()).collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    amps.into_iter().map(|a| a / norm).collect()
}

/// Quadrature variances. Displacement leaves variances unchanged, so they
/// are evaluated in the frame centered on the seed, where all moments are
/// of order one and large `|alpha|` causes no cancellation.
pub fn quadratures<S: CoherentPolynomial + ?Sized>(state: &S) -> Result<QuadratureReport> {
    let psi = centered_amplitudes(state);
    let at = |j: usize| psi.get(j).copied().unwrap_or_default();
    // <b>, <b^dagger b>, <b^2> on the finite superposition.
    let mut b = C64::new(0.0, 0.0);
    let mut n = 0.0;
    let mut b2 = C64::new(0.0, 0.0);
    for j in 0..psi.len() {
        let jf = j as f64;
        b += at(j).conj() * at(j + 1) * (jf + 1.0).sqrt();
        n += jf * at(j).norm_sqr();
        b2 += at(j).conj() * at(j + 2) * ((jf + 1.0) * (jf + 2.0)).sqrt();
    }
    let var_x = 0.5 * (1.0 + 2.0 * n + 2.0 * b2.re) - 2.0 * b.re * b.re;
    let var_p = 0.5 * (1.0 + 2.0 * n - 2.0 * b2.re) - 2.0 * b.im * b.im;
    Ok(QuadratureReport {
        var_x,
        var_p,
        squeeze_db_x: squeeze_db(var_x)?,
    })
}

/// `-10 log10(var / 0.5)`; positive values mean squeezing below vacuum.
pub fn squeeze_db(variance: f64) -> Result<f64> {
    if !(variance > 0.0) {
        return Err(Error::NonpositiveVariance(variance));
    }
    Ok(-10.0 * (variance / VACUUM_VARIANCE).log10())
}
