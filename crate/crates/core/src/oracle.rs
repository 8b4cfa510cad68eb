//! Brute-force Fock-space simulation of the heralded interferometer.
//!
//! The three-mode input `|alpha>|n2>|n3>` is expanded in the number basis,
//! every transition amplitude is a permanent of a row/column-repeated
//! submatrix of the transfer matrix, and the ancilla outcome `(m2, m3)` is
//! projected out. Nothing here uses the generating-function machinery, so
//! the results serve as an independent reference for the closed forms.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::factorial::ln_factorial;
use crate::unitary::{compose, TransferMatrix};

/// Probabilities below this are treated as analytic zeros of the herald.
pub const IMPOSSIBLE_PROBABILITY: f64 = 1e-30;
/// Largest tolerated `|psi_cutoff|^2 / norm^2`.
pub const TAIL_MASS_LIMIT: f64 = 1e-10;
/// Largest tolerated unaccounted mass in a herald distribution.
pub const RESIDUAL_MASS_LIMIT: f64 = 1e-8;
/// Amplitudes with relative weight below this never serve as the phase reference.
pub const PHASE_REFERENCE_THRESHOLD: f64 = 1e-12;
pub const MAX_PERMANENT_DIM: usize = 20;
pub const MIN_DEFAULT_CUTOFF: usize = 20;
pub const MAX_DEFAULT_CUTOFF: usize = 120;

/// One heralding experiment: ancilla inputs `n2, n3`, herald counts `m2, m3`,
/// coherent amplitude `alpha_mag * exp(i theta)` and shift phase `phi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeraldSpec {
    pub n2: u32,
    pub n3: u32,
    pub m2: u32,
    pub m3: u32,
    pub alpha_mag: f64,
    pub theta: f64,
    pub phi: f64,
}

impl HeraldSpec {
    pub fn new(n2: u32, n3: u32, m2: u32, m3: u32, alpha_mag: f64, phi: f64) -> Self {
        Self {
            n2,
            n3,
            m2,
            m3,
            alpha_mag,
            theta: 0.0,
            phi,
        }
    }

    pub fn alpha(&self) -> C64 {
        C64::from_polar(self.alpha_mag, self.theta)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha_mag.is_finite() && self.alpha_mag >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "coherent amplitude must be finite and non-negative, got {}",
                self.alpha_mag
            )));
        }
        if !self.theta.is_finite() || !self.phi.is_finite() {
            return Err(Error::InvalidParameter("phases must be finite".into()));
        }
        Ok(())
    }

    pub fn matrix(&self) -> Result<TransferMatrix> {
        self.validate()?;
        compose(self.phi)
    }

    /// Heuristic number-basis cutoff for the output mode.
    pub fn default_cutoff(&self) -> usize {
        let (d, _) = crate::unitary::closed_form_entries(self.phi);
        let seed = d.norm() * self.alpha_mag;
        let raw = (seed * seed + 10.0 * seed + 20.0).ceil() as usize + (self.n2 + self.n3) as usize;
        raw.clamp(MIN_DEFAULT_CUTOFF, MAX_DEFAULT_CUTOFF)
    }
}

/// Single-mode pure state over `|0> .. |cutoff>`.
#[derive(Debug, Clone, PartialEq)]
pub struct FockVector {
    amplitudes: Vec<C64>,
    norm_sq: f64,
}

impl FockVector {
    pub fn new(amplitudes: Vec<C64>) -> Self {
        assert!(!amplitudes.is_empty(), "a Fock vector needs at least |0>");
        let norm_sq = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        Self { amplitudes, norm_sq }
    }

    /// Coherent state `|beta>` truncated at `cutoff` (not renormalized).
    pub fn coherent(beta: C64, cutoff: usize) -> Self {
        Self::new((0..=cutoff).map(|n| coherent_coefficient(beta, n as u32)).collect())
    }

    pub fn number(n: usize, cutoff: usize) -> Self {
        let mut amps = vec![C64::new(0.0, 0.0); cutoff.max(n) + 1];
        amps[n] = C64::new(1.0, 0.0);
        Self::new(amps)
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn cutoff(&self) -> usize {
        self.amplitudes.len() - 1
    }

    pub fn norm_sq(&self) -> f64 {
        self.norm_sq
    }

    /// Weight of the last basis state relative to the whole vector.
    pub fn tail_mass(&self) -> f64 {
        if self.norm_sq == 0.0 {
            return 0.0;
        }
        self.amplitudes[self.cutoff()].norm_sqr() / self.norm_sq
    }

    pub fn normalized(&self) -> Self {
        let s = self.norm_sq.sqrt();
        Self::new(self.amplitudes.iter().map(|a| a / s).collect())
    }

    /// Rotates the global phase so that the first amplitude carrying a
    /// non-negligible weight is real and positive.
    pub fn phase_fixed(&self) -> Self {
        let threshold = PHASE_REFERENCE_THRESHOLD * self.norm_sq;
        match self.amplitudes.iter().find(|a| a.norm_sqr() > threshold) {
            Some(reference) => {
                let rot = reference.conj() / reference.norm();
                Self::new(self.amplitudes.iter().map(|a| a * rot).collect())
            }
            None => self.clone(),
        }
    }

    /// Largest amplitude-wise difference; the shorter vector is zero padded.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let n = self.amplitudes.len().max(other.amplitudes.len());
        let zero = C64::new(0.0, 0.0);
        (0..n)
            .map(|i| {
                let a = self.amplitudes.get(i).copied().unwrap_or(zero);
                let b = other.amplitudes.get(i).copied().unwrap_or(zero);
                (a - b).norm()
            })
            .fold(0.0, f64::max)
    }

    /// `<self|other>` over the common support.
    pub fn inner(&self, other: &Self) -> C64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }
}

/// `exp(-|beta|^2/2) beta^n / sqrt(n!)`, evaluated in log space.
pub fn coherent_coefficient(beta: C64, n: u32) -> C64 {
    let r = beta.norm();
    if r == 0.0 {
        return if n == 0 { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
    }
    let log_mag = -0.5 * r * r + n as f64 * r.ln() - 0.5 * ln_factorial(n);
    C64::from_polar(log_mag.exp(), n as f64 * beta.arg())
}

/// Matrix permanent by Ryser's formula with Gray-code row-sum updates.
pub fn permanent(m: &[Vec<C64>]) -> Result<C64> {
    let n = m.len();
    if n > MAX_PERMANENT_DIM {
        return Err(Error::DimensionTooLarge(n));
    }
    if m.iter().any(|row| row.len() != n) {
        return Err(Error::InvalidParameter("permanent needs a square matrix".into()));
    }
    if n == 0 {
        return Ok(C64::new(1.0, 0.0));
    }
    let mut row_sums = vec![C64::new(0.0, 0.0); n];
    let mut total = C64::new(0.0, 0.0);
    let mut gray = 0u64;
    for k in 1u64..(1u64 << n) {
        let next = k ^ (k >> 1);
        let col = (gray ^ next).trailing_zeros() as usize;
        let adding = next & (1 << col) != 0;
        for (sum, row) in row_sums.iter_mut().zip(m) {
            if adding {
                *sum += row[col];
            } else {
                *sum -= row[col];
            }
        }
        gray = next;
        let prod: C64 = row_sums.iter().product();
        if next.count_ones() % 2 == 0 {
            total += prod;
        } else {
            total -= prod;
        }
    }
    Ok(if n % 2 == 0 { total } else { -total })
}

/// The submatrix whose permanent gives `<n_out|U|n_in>`: output row `i`
/// repeated `n_out[i]` times, input column `j` repeated `n_in[j]` times.
pub fn repeated_submatrix(u: &TransferMatrix, n_in: [u32; 3], n_out: [u32; 3]) -> Vec<Vec<C64>> {
    let rows: Vec<usize> = (0..3).flat_map(|i| std::iter::repeat_n(i, n_out[i] as usize)).collect();
    let cols: Vec<usize> = (0..3).flat_map(|j| std::iter::repeat_n(j, n_in[j] as usize)).collect();
    rows.iter()
        .map(|&i| cols.iter().map(|&j| u.entry(i, j)).collect())
        .collect()
}

/// Number-basis transition amplitude `<n_out| U |n_in>`.
///
/// Equal to `perm(U_sub) / sqrt(prod n_in! prod n_out!)` with `U_sub` from
/// [`repeated_submatrix`]. Rows and columns that repeat are grouped: the
/// permanent becomes a sum over 3x3 non-negative integer tables `e` with row
/// sums `n_out` and column sums `n_in`, each weighted by
/// `prod_i n_out[i]! / prod_ij e_ij! * prod_ij u_ij^e_ij` times `prod_j n_in[j]!`.
/// This stays cheap for the large photon numbers of a coherent input, where
/// an explicit permanent is out of reach.
pub fn fock_amplitude(u: &TransferMatrix, n_in: [u32; 3], n_out: [u32; 3]) -> Result<C64> {
    let total_in: u32 = n_in.iter().sum();
    let total_out: u32 = n_out.iter().sum();
    if total_in != total_out {
        return Err(Error::PhotonNumberMismatch {
            input: total_in,
            output: total_out,
        });
    }
    let log_norm: f64 = 0.5
        * (n_in.iter().map(|&n| ln_factorial(n)).sum::<f64>()
            + n_out.iter().map(|&n| ln_factorial(n)).sum::<f64>());

    let mut acc = C64::new(0.0, 0.0);
    let [r0, r1, _] = n_out;
    let [c0, c1, c2] = n_in;
    for e01 in 0..=r0.min(c1) {
        for e02 in 0..=(r0 - e01).min(c2) {
            let e00 = r0 - e01 - e02;
            if e00 > c0 {
                continue;
            }
            for e11 in 0..=r1.min(c1 - e01) {
                for e12 in 0..=(r1 - e11).min(c2 - e02) {
                    let e10 = r1 - e11 - e12;
                    if e10 > c0 - e00 {
                        continue;
                    }
                    let table = [
                        [e00, e01, e02],
                        [e10, e11, e12],
                        [c0 - e00 - e10, c1 - e01 - e11, c2 - e02 - e12],
                    ];
                    acc += table_term(u, &table, log_norm);
                }
            }
        }
    }
    Ok(acc)
}

fn table_term(u: &TransferMatrix, table: &[[u32; 3]; 3], log_norm: f64) -> C64 {
    let mut log_w = log_norm;
    let mut prod = C64::new(1.0, 0.0);
    for (i, row) in table.iter().enumerate() {
        for (j, &e) in row.iter().enumerate() {
            if e > 0 {
                log_w -= ln_factorial(e);
                prod *= u.entry(i, j).powu(e);
            }
        }
    }
    prod * log_w.exp()
}

/// Output of [`herald_state`].
#[derive(Debug, Clone, PartialEq)]
pub struct Heralded {
    /// Normalized, phase-fixed state of the primary output mode.
    pub state: FockVector,
    /// Norm squared of the projected vector before normalization.
    pub probability: f64,
    pub cutoff: usize,
}

/// Unnormalized projected amplitudes `psi_k`, `k = 0..=cutoff`.
fn projected_amplitudes(u: &TransferMatrix, spec: &HeraldSpec, cutoff: usize) -> Result<Vec<C64>> {
    let alpha = spec.alpha();
    let shift = spec.m2 as i64 + spec.m3 as i64 - spec.n2 as i64 - spec.n3 as i64;
    (0..=cutoff)
        .map(|k| {
            let j = k as i64 + shift;
            if j < 0 {
                return Ok(C64::new(0.0, 0.0));
            }
            let j = j as u32;
            let amp = fock_amplitude(u, [j, spec.n2, spec.n3], [k as u32, spec.m2, spec.m3])?;
            Ok(coherent_coefficient(alpha, j) * amp)
        })
        .collect()
}

/// Heralded output state and its success probability.
///
/// `cutoff = None` selects [`HeraldSpec::default_cutoff`].
pub fn herald_state(spec: &HeraldSpec, cutoff: Option<usize>) -> Result<Heralded> {
    let u = spec.matrix()?;
    let cutoff = cutoff.unwrap_or_else(|| spec.default_cutoff());
    let raw = FockVector::new(projected_amplitudes(&u, spec, cutoff)?);
    let probability = raw.norm_sq();
    if !(probability >= IMPOSSIBLE_PROBABILITY) {
        return Err(Error::HeraldImpossible(probability));
    }
    let tail_mass = raw.tail_mass();
    if tail_mass >= TAIL_MASS_LIMIT {
        return Err(Error::CutoffInadequate { cutoff, tail_mass });
    }
    Ok(Heralded {
        state: raw.normalized().phase_fixed(),
        probability,
        cutoff,
    })
}

/// `<a^dagger^k a^l>` on the normalized `state`.
pub fn expectation(state: &FockVector, k: usize, l: usize) -> C64 {
    let amps = state.amplitudes();
    let mut acc = C64::new(0.0, 0.0);
    for n in l..amps.len() {
        let m = n - l + k;
        if m >= amps.len() {
            break;
        }
        let base = (n - l) as u32;
        let log_w = 0.5 * (ln_factorial(n as u32) - ln_factorial(base))
            + 0.5 * (ln_factorial(m as u32) - ln_factorial(base));
        acc += amps[m].conj() * amps[n] * log_w.exp();
    }
    acc / state.norm_sq()
}

/// Probabilities of every herald outcome `(m2, m3)` up to `herald_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeraldDistribution {
    pub probabilities: BTreeMap<(u32, u32), f64>,
    pub total: f64,
    pub herald_max: u32,
    pub cutoff: usize,
}

impl HeraldDistribution {
    pub fn residual(&self) -> f64 {
        1.0 - self.total
    }
}

/// Outcome count per ancilla mode that leaves negligible residual mass.
pub fn default_herald_max(n2: u32, n3: u32, alpha_mag: f64, phi: f64) -> u32 {
    let (_, off) = crate::unitary::closed_form_entries(phi);
    let leak = off.norm() * alpha_mag;
    (leak * leak + 10.0 * leak + 12.0).ceil() as u32 + n2 + n3
}

pub fn herald_distribution(
    n2: u32,
    n3: u32,
    alpha_mag: f64,
    phi: f64,
    herald_max: u32,
    cutoff: Option<usize>,
) -> Result<HeraldDistribution> {
    let base = HeraldSpec::new(n2, n3, 0, 0, alpha_mag, phi);
    let u = base.matrix()?;
    let cutoff = cutoff.unwrap_or_else(|| base.default_cutoff());
    let mut probabilities = BTreeMap::new();
    let mut total = 0.0;
    for m2 in 0..=herald_max {
        for m3 in 0..=herald_max {
            let spec = HeraldSpec { m2, m3, ..base };
            let p: f64 = projected_amplitudes(&u, &spec, cutoff)?
                .iter()
                .map(|a| a.norm_sqr())
                .sum();
            total += p;
            probabilities.insert((m2, m3), p);
        }
    }
    let dist = HeraldDistribution {
        probabilities,
        total,
        herald_max,
        cutoff,
    };
    if dist.residual().abs() > RESIDUAL_MASS_LIMIT {
        return Err(Error::ResidualMassTooLarge(dist.residual()));
    }
    Ok(dist)
}
