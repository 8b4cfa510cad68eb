//! Transfer matrices of the tritters, the single-arm phase shifter and the
//! composed six-port Mach-Zehnder interferometer.
//!
//! Entry `(i, j)` (zero based) is the amplitude `u_{i+1, j+1}`. Every matrix
//! built here is symmetric, so the row/column reading of the mode
//! transformation does not change any result.

use std::f64::consts::PI;
use std::ops::Mul;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Largest allowed deviation between the explicit product and the closed form.
pub const CLOSED_FORM_TOLERANCE: f64 = 1e-12;

/// A 3x3 complex transfer matrix; rows index output modes, columns input modes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferMatrix {
    entries: [[C64; 3]; 3],
}

impl TransferMatrix {
    pub fn new(entries: [[C64; 3]; 3]) -> Self {
        Self { entries }
    }

    pub fn identity() -> Self {
        let mut entries = [[C64::new(0.0, 0.0); 3]; 3];
        for (i, row) in entries.iter_mut().enumerate() {
            row[i] = C64::new(1.0, 0.0);
        }
        Self { entries }
    }

    #[inline]
    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.entries[row][col]
    }

    /// `u_ij` with the one-based indices used in the optics literature.
    #[inline]
    pub fn u(&self, i: usize, j: usize) -> C64 {
        self.entries[i - 1][j - 1]
    }

    pub fn entries(&self) -> &[[C64; 3]; 3] {
        &self.entries
    }

    pub fn adjoint(&self) -> Self {
        let mut out = [[C64::new(0.0, 0.0); 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.entries[j][i].conj();
            }
        }
        Self { entries: out }
    }

    pub fn transpose(&self) -> Self {
        let mut out = [[C64::new(0.0, 0.0); 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.entries[j][i];
            }
        }
        Self { entries: out }
    }

    /// Largest entry-wise modulus of `self - other`.
    pub fn max_deviation(&self, other: &Self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                worst = worst.max((self.entries[i][j] - other.entries[i][j]).norm());
            }
        }
        worst
    }

    /// Largest entry-wise deviation of `U U^dagger` from the identity.
    pub fn unitarity_defect(&self) -> f64 {
        (*self * self.adjoint()).max_deviation(&Self::identity())
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_defect() <= tol
    }
}

impl Mul for TransferMatrix {
    type Output = TransferMatrix;

    fn mul(self, rhs: TransferMatrix) -> TransferMatrix {
        let mut out = [[C64::new(0.0, 0.0); 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (0..3).map(|k| self.entries[i][k] * rhs.entries[k][j]).sum();
            }
        }
        TransferMatrix { entries: out }
    }
}

fn tritter(first: f64, second: f64) -> TransferMatrix {
    let s = (1.0f64 / 3.0).sqrt();
    let one = C64::new(s, 0.0);
    let a = C64::from_polar(s, first);
    let b = C64::from_polar(s, second);
    TransferMatrix::new([[one, one, one], [one, a, b], [one, b, a]])
}

/// First symmetric tritter: `(1/sqrt 3) [[1,1,1],[1,w,w^2],[1,w^2,w]]`, `w = exp(2 pi i / 3)`.
pub fn tritter1_matrix() -> TransferMatrix {
    tritter(2.0 * PI / 3.0, 4.0 * PI / 3.0)
}

/// Second tritter, with the `w` and `w^2` phases exchanged.
pub fn tritter2_matrix() -> TransferMatrix {
    tritter(4.0 * PI / 3.0, 2.0 * PI / 3.0)
}

/// Phase shifter on arm 1: `diag(exp(-i phi), 1, 1)`.
pub fn phase_matrix(phi: f64) -> TransferMatrix {
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    TransferMatrix::new([
        [C64::from_polar(1.0, -phi), zero, zero],
        [zero, one, zero],
        [zero, zero, one],
    ])
}

/// Diagonal and off-diagonal entries of the composed interferometer.
#[inline]
pub fn closed_form_entries(phi: f64) -> (C64, C64) {
    let e = C64::from_polar(1.0, -phi);
    ((e + 2.0) / 3.0, (e - 1.0) / 3.0)
}

/// The composed matrix written directly from its closed-form entries.
pub fn closed_form(phi: f64) -> TransferMatrix {
    let (d, o) = closed_form_entries(phi);
    TransferMatrix::new([[d, o, o], [o, d, o], [o, o, d]])
}

/// Composed six-port interferometer `T2 P(phi) T1`.
///
/// The explicit product is checked against the closed form; the closed form
/// is returned so that all diagonal and all off-diagonal entries are
/// bit-identical.
pub fn compose(phi: f64) -> Result<TransferMatrix> {
    if !phi.is_finite() {
        return Err(Error::InvalidParameter(format!("phi must be finite, got {phi}")));
    }
    let product = tritter2_matrix() * phase_matrix(phi) * tritter1_matrix();
    let closed = closed_form(phi);
    let deviation = product.max_deviation(&closed);
    if deviation > CLOSED_FORM_TOLERANCE {
        return Err(Error::ClosedFormMismatch { deviation });
    }
    Ok(closed)
}

/// The bilinear and trilinear entry combinations appearing in the
/// coefficient table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedCoeffs {
    pub tau1: C64,
    pub tau2: C64,
    pub tau3: C64,
    pub tau4: C64,
    pub tau5: C64,
    pub kappa: C64,
}

pub fn derived_coeffs(m: &TransferMatrix) -> DerivedCoeffs {
    let u = |i, j| m.u(i, j);
    DerivedCoeffs {
        tau1: u(1, 2) * u(2, 3) + u(1, 3) * u(2, 2),
        tau2: u(1, 2) * u(3, 3) + u(1, 3) * u(3, 2),
        tau3: u(2, 1) * u(3, 2) + u(2, 2) * u(3, 1),
        tau4: u(2, 1) * u(3, 3) + u(2, 3) * u(3, 1),
        tau5: u(2, 3) * u(3, 2) + u(2, 2) * u(3, 3),
        kappa: u(1, 2) * u(2, 3) * u(3, 1)
            + u(1, 3) * u(2, 2) * u(3, 1)
            + u(1, 3) * u(2, 1) * u(3, 2)
            + u(1, 2) * u(2, 1) * u(3, 3),
    }
}
