//! Truncated multivariate formal power series.
//!
//! Mixed partial derivatives at the origin of products of exponentials are
//! evaluated exactly by Taylor-coefficient extraction: a derivative of order
//! `(k_1, .., k_n)` at zero is the coefficient of `x_1^k_1 .. x_n^k_n` times
//! `k_1! .. k_n!`. Truncating every variable at the order that will be
//! extracted keeps the arithmetic finite.
//!
//! Storage is dense over the truncation box, indexed in mixed radix. The
//! boxes used here are small (a few thousand entries at most).

use std::fmt;
use std::ops::{Add, Neg, Sub};
use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::factorial::factorial;

/// Variable names and per-variable truncation orders shared by a family of
/// series.
#[derive(Debug, PartialEq, Eq)]
pub struct Layout {
    names: Vec<String>,
    orders: Vec<u32>,
    strides: Vec<usize>,
    /// Exponent vectors of every dense slot, flattened row by row.
    exponents: Vec<u32>,
    len: usize,
}

impl Layout {
    pub fn new<S: AsRef<str>>(names: &[S], orders: &[u32]) -> Result<Arc<Layout>> {
        if names.len() != orders.len() {
            return Err(Error::InvalidParameter(format!(
                "{} variable names but {} orders",
                names.len(),
                orders.len()
            )));
        }
        let mut strides = Vec::with_capacity(orders.len());
        let mut len = 1usize;
        for &o in orders {
            strides.push(len);
            len = len
                .checked_mul(o as usize + 1)
                .filter(|&l| l <= 1 << 22)
                .ok_or_else(|| Error::InvalidParameter("series truncation box too large".into()))?;
        }
        let nvars = orders.len();
        let mut exponents = vec![0u32; len * nvars];
        for idx in 0..len {
            for v in 0..nvars {
                exponents[idx * nvars + v] = ((idx / strides[v]) % (orders[v] as usize + 1)) as u32;
            }
        }
        Ok(Arc::new(Layout {
            names: names.iter().map(|s| s.as_ref().to_owned()).collect(),
            orders: orders.to_vec(),
            strides,
            exponents,
            len,
        }))
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn orders(&self) -> &[u32] {
        &self.orders
    }

    pub fn num_vars(&self) -> usize {
        self.orders.len()
    }

    /// Number of dense slots in the truncation box.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn exponents_of(&self, idx: usize) -> &[u32] {
        let n = self.num_vars();
        &self.exponents[idx * n..(idx + 1) * n]
    }

    pub fn variable(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    fn index_of(&self, exps: &[u32]) -> Result<usize> {
        if exps.len() != self.num_vars() {
            return Err(Error::VariableMismatch);
        }
        let mut idx = 0;
        for (v, (&e, &o)) in exps.iter().zip(&self.orders).enumerate() {
            if e > o {
                return Err(Error::OrderOverflow {
                    variable: self.names[v].clone(),
                    exponent: e,
                    order: o,
                });
            }
            idx += e as usize * self.strides[v];
        }
        Ok(idx)
    }

    /// `true` when adding the exponents of slots `a` and `b` stays inside the box.
    #[inline]
    fn fits(&self, a: usize, b: usize) -> bool {
        let n = self.num_vars();
        let ea = &self.exponents[a * n..(a + 1) * n];
        let eb = &self.exponents[b * n..(b + 1) * n];
        ea.iter().zip(eb).zip(&self.orders).all(|((x, y), o)| x + y <= *o)
    }
}

#[derive(Clone, PartialEq)]
pub struct FormalSeries {
    layout: Arc<Layout>,
    coeffs: Vec<C64>,
}

impl fmt::Debug for FormalSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut m = f.debug_map();
        for (idx, c) in self.terms() {
            m.entry(&self.layout.exponents_of(idx), &c);
        }
        m.finish()
    }
}

impl FormalSeries {
    pub fn zero(layout: &Arc<Layout>) -> Self {
        Self {
            layout: Arc::clone(layout),
            coeffs: vec![C64::new(0.0, 0.0); layout.len],
        }
    }

    pub fn constant(layout: &Arc<Layout>, c: C64) -> Self {
        let mut s = Self::zero(layout);
        s.coeffs[0] = c;
        s
    }

    pub fn one(layout: &Arc<Layout>) -> Self {
        Self::constant(layout, C64::new(1.0, 0.0))
    }

    pub fn monomial(layout: &Arc<Layout>, exps: &[u32], c: C64) -> Result<Self> {
        Self::from_polynomial(layout, [(exps, c)])
    }

    /// Builds a series from `(exponents, coefficient)` pairs; repeated
    /// exponents accumulate.
    pub fn from_polynomial<'a, I>(layout: &Arc<Layout>, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a [u32], C64)>,
    {
        let mut s = Self::zero(layout);
        for (exps, c) in terms {
            let idx = layout.index_of(exps)?;
            s.coeffs[idx] += c;
        }
        Ok(s)
    }

    pub fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }

    pub fn coefficient(&self, exps: &[u32]) -> Result<C64> {
        Ok(self.coeffs[self.layout.index_of(exps)?])
    }

    pub fn constant_term(&self) -> C64 {
        self.coeffs[0]
    }

    /// Nonzero terms as `(slot, coefficient)`.
    pub fn terms(&self) -> impl Iterator<Item = (usize, C64)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != C64::new(0.0, 0.0))
            .map(|(i, c)| (i, *c))
    }

    pub fn exponents_of(&self, slot: usize) -> &[u32] {
        self.layout.exponents_of(slot)
    }

    pub fn scale(&self, k: C64) -> Self {
        Self {
            layout: Arc::clone(&self.layout),
            coeffs: self.coeffs.iter().map(|c| c * k).collect(),
        }
    }

    fn check_layout(&self, other: &Self) -> Result<()> {
        if Arc::ptr_eq(&self.layout, &other.layout) || self.layout == other.layout {
            Ok(())
        } else {
            Err(Error::VariableMismatch)
        }
    }

    /// Truncated product.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_layout(other)?;
        let mut out = Self::zero(&self.layout);
        let rhs: Vec<(usize, C64)> = other.terms().collect();
        for (i, a) in self.terms() {
            for &(j, b) in &rhs {
                if self.layout.fits(i, j) {
                    out.coeffs[i + j] += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_layout(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        Ok(Self {
            layout: Arc::clone(&self.layout),
            coeffs,
        })
    }

    /// Truncated exponential of a series without constant term.
    ///
    /// The terms commute, so `exp(sum c_i m_i)` is accumulated as the product
    /// of the single-monomial series `sum_k (c_i m_i)^k / k!`. This equals the
    /// truncated Taylor sum `sum_k p^k / k!` and only ever multiplies by a
    /// sparse factor.
    pub fn exp(&self) -> Result<Self> {
        let c0 = self.constant_term();
        if c0 != C64::new(0.0, 0.0) {
            return Err(Error::NonzeroConstantTerm(c0));
        }
        let mut acc = Self::one(&self.layout);
        for (slot, c) in self.terms() {
            acc.mul_monomial_exp(slot, c);
        }
        Ok(acc)
    }

    /// `self *= exp(c * m)` where `m` is the monomial stored at `slot`.
    fn mul_monomial_exp(&mut self, slot: usize, c: C64) {
        let layout = Arc::clone(&self.layout);
        let n = layout.num_vars();
        let m = &layout.exponents[slot * n..(slot + 1) * n];
        // Powers (k*m) that stay inside the box, with their c^k / k! weights.
        let mut powers: Vec<(usize, Vec<u32>, C64)> = Vec::new();
        let mut weight = C64::new(1.0, 0.0);
        let mut k = 1u32;
        loop {
            let exps: Vec<u32> = m.iter().map(|e| e * k).collect();
            if exps.iter().zip(&layout.orders).any(|(e, o)| e > o) {
                break;
            }
            weight = weight * c / k as f64;
            powers.push((slot * k as usize, exps, weight));
            k += 1;
        }
        if powers.is_empty() {
            return;
        }
        let mut out = self.coeffs.clone();
        for (i, a) in self.coeffs.iter().enumerate() {
            if *a == C64::new(0.0, 0.0) {
                continue;
            }
            let ei = &layout.exponents[i * n..(i + 1) * n];
            for (offset, exps, w) in &powers {
                if ei.iter().zip(exps).zip(&layout.orders).all(|((x, y), o)| x + y <= *o) {
                    out[i + offset] += a * w;
                } else {
                    // Higher powers overflow as well.
                    break;
                }
            }
        }
        self.coeffs = out;
    }

    /// Mixed partial derivative at the origin: coefficient times the product
    /// of factorials of the index.
    pub fn extract_derivative(&self, index: &[u32]) -> Result<C64> {
        let c = self.coefficient(index)?;
        let scale: f64 = index.iter().map(|&k| factorial(k)).product();
        Ok(c * scale)
    }
}

impl Add for &FormalSeries {
    type Output = FormalSeries;

    /// Panics on mismatched layouts; use [`FormalSeries::try_add`] otherwise.
    fn add(self, rhs: &FormalSeries) -> FormalSeries {
        self.try_add(rhs).expect("series layouts differ")
    }
}

impl Neg for &FormalSeries {
    type Output = FormalSeries;

    fn neg(self) -> FormalSeries {
        self.scale(C64::new(-1.0, 0.0))
    }
}

impl Sub for &FormalSeries {
    type Output = FormalSeries;

    fn sub(self, rhs: &FormalSeries) -> FormalSeries {
        self + &(-rhs)
    }
}

/// Accumulates a linear form `sum_v c_v x_v` (plus products of two variables)
/// without spelling out exponent vectors by hand.
pub struct PolyBuilder<'a> {
    layout: &'a Arc<Layout>,
    series: FormalSeries,
}

impl<'a> PolyBuilder<'a> {
    pub fn new(layout: &'a Arc<Layout>) -> Self {
        Self {
            layout,
            series: FormalSeries::zero(layout),
        }
    }

    /// Adds `c * prod(vars)`; a variable listed twice contributes its square.
    /// Terms that fall outside the truncation box are dropped.
    pub fn term(mut self, vars: &[usize], c: C64) -> Self {
        let mut exps = vec![0u32; self.layout.num_vars()];
        for &v in vars {
            exps[v] += 1;
        }
        if exps.iter().zip(self.layout.orders()).all(|(e, o)| e <= o) {
            let idx = self.layout.index_of(&exps).expect("exponents checked");
            self.series.coeffs[idx] += c;
        }
        self
    }

    pub fn build(self) -> FormalSeries {
        self.series
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol * (1.0 + b.norm())
    }

    /// Plain double loop over coefficient pairs, independent of `mul`.
    fn brute_mul(a: &FormalSeries, b: &FormalSeries) -> FormalSeries {
        let layout = a.layout();
        let mut out = FormalSeries::zero(layout);
        for i in 0..layout.len() {
            for j in 0..layout.len() {
                let ei = layout.exponents_of(i);
                let ej = layout.exponents_of(j);
                let sum: Vec<u32> = ei.iter().zip(ej).map(|(x, y)| x + y).collect();
                if let Ok(k) = layout.index_of(&sum) {
                    out.coeffs[k] += a.coeffs[i] * b.coeffs[j];
                }
            }
        }
        out
    }

    /// Truncated Taylor sum of the exponential, via repeated `brute_mul`.
    fn taylor_exp(p: &FormalSeries) -> FormalSeries {
        let layout = p.layout();
        let k_max: u32 = layout.orders().iter().sum();
        let mut term = FormalSeries::one(layout);
        let mut acc = FormalSeries::one(layout);
        for k in 1..=k_max {
            term = brute_mul(&term, p).scale(c(1.0 / k as f64, 0.0));
            acc = &acc + &term;
        }
        acc
    }

    fn max_diff(a: &FormalSeries, b: &FormalSeries) -> f64 {
        a.coeffs
            .iter()
            .zip(&b.coeffs)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn polynomial_construction() {
        let l = Layout::new(&["s2", "s3"], &[2, 2]).unwrap();
        let s = FormalSeries::monomial(&l, &[1, 0], c(0.5, 1.0)).unwrap();
        assert_eq!(s.coefficient(&[1, 0]).unwrap(), c(0.5, 1.0));
        assert_eq!(s.terms().count(), 1);

        let empty = FormalSeries::from_polynomial(&l, std::iter::empty::<(&[u32], C64)>()).unwrap();
        assert_eq!(empty.terms().count(), 0);

        let e: &[u32] = &[0, 2];
        let twice = FormalSeries::from_polynomial(&l, [(e, c(1.0, 0.0)), (e, c(2.0, 0.0))]).unwrap();
        assert_eq!(twice.coefficient(&[0, 2]).unwrap(), c(3.0, 0.0));
    }

    #[test]
    fn polynomial_rejects_overflow() {
        let l = Layout::new(&["s2"], &[1]).unwrap();
        let err = FormalSeries::monomial(&l, &[2], c(1.0, 0.0)).unwrap_err();
        assert!(matches!(err, Error::OrderOverflow { exponent: 2, order: 1, .. }));
    }

    #[test]
    fn exp_small_cases() {
        let l = Layout::new(&["s2"], &[2]).unwrap();
        let zero = FormalSeries::zero(&l);
        assert_eq!(zero.exp().unwrap(), FormalSeries::one(&l));

        let k = c(0.3, -1.2);
        let e = FormalSeries::monomial(&l, &[1], k).unwrap().exp().unwrap();
        assert!(close(e.coefficient(&[0]).unwrap(), c(1.0, 0.0), 1e-15));
        assert!(close(e.coefficient(&[1]).unwrap(), k, 1e-15));
        assert!(close(e.coefficient(&[2]).unwrap(), k * k / 2.0, 1e-15));

        let st = Layout::new(&["s", "t"], &[1, 1]).unwrap();
        let e = FormalSeries::monomial(&st, &[1, 1], c(1.0, 0.0)).unwrap().exp().unwrap();
        assert_eq!(e.coefficient(&[0, 0]).unwrap(), c(1.0, 0.0));
        assert_eq!(e.coefficient(&[1, 1]).unwrap(), c(1.0, 0.0));
        assert_eq!(e.terms().count(), 2);
    }

    #[test]
    fn exp_rejects_constant() {
        let l = Layout::new(&["s2"], &[2]).unwrap();
        let p = FormalSeries::constant(&l, c(1.0, 0.0));
        assert!(matches!(p.exp(), Err(Error::NonzeroConstantTerm(_))));
    }

    #[test]
    fn mul_identities() {
        let l = Layout::new(&["s"], &[1]).unwrap();
        let one = FormalSeries::one(&l);
        let s = FormalSeries::monomial(&l, &[1], c(1.0, 0.0)).unwrap();
        let a = &one + &s;
        let b = &one - &s;
        assert_eq!(a.mul(&one).unwrap(), a);
        assert_eq!(a.mul(&b).unwrap(), one);
    }

    #[test]
    fn mul_rejects_layout_mismatch() {
        let a = FormalSeries::one(&Layout::new(&["s"], &[1]).unwrap());
        let b = FormalSeries::one(&Layout::new(&["s"], &[2]).unwrap());
        assert_eq!(a.mul(&b).unwrap_err(), Error::VariableMismatch);
    }

    #[test]
    fn derivative_extraction() {
        let l = Layout::new(&["s2"], &[4]).unwrap();
        let e: &[u32] = &[0];
        let e2: &[u32] = &[2];
        let s = FormalSeries::from_polynomial(&l, [(e, c(1.0, 0.0)), (e2, c(3.0, 0.0))]).unwrap();
        assert_eq!(s.extract_derivative(&[2]).unwrap(), c(6.0, 0.0));
        assert_eq!(s.extract_derivative(&[0]).unwrap(), c(1.0, 0.0));

        let k = c(0.7, 0.2);
        let ex = FormalSeries::monomial(&l, &[1], k).unwrap().exp().unwrap();
        for n in 0..=4 {
            assert!(close(ex.extract_derivative(&[n]).unwrap(), k.powu(n), 1e-14));
        }
        assert!(matches!(ex.extract_derivative(&[5]), Err(Error::OrderOverflow { .. })));
    }

    #[test]
    fn exp_matches_taylor_sum_on_three_variables() {
        let l = Layout::new(&["s", "t", "u"], &[2, 1, 2]).unwrap();
        let p = PolyBuilder::new(&l)
            .term(&[0], c(0.4, 0.1))
            .term(&[1, 2], c(-0.3, 0.8))
            .term(&[0, 2], c(1.1, 0.0))
            .term(&[2, 2], c(0.0, 0.5))
            .build();
        assert!(max_diff(&p.exp().unwrap(), &taylor_exp(&p)) < 1e-14);
    }

    fn small_series(vals: &[(f64, f64)], layout: &Arc<Layout>, zero_constant: bool) -> FormalSeries {
        let mut s = FormalSeries::zero(layout);
        for (i, (re, im)) in vals.iter().enumerate().take(layout.len()) {
            s.coeffs[i] = c(*re, *im);
        }
        if zero_constant {
            s.coeffs[0] = c(0.0, 0.0);
        }
        s
    }

    proptest! {
        #[test]
        fn mul_matches_brute_force(
            a in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 27),
            b in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 27),
        ) {
            let l = Layout::new(&["x", "y", "z"], &[2, 2, 2]).unwrap();
            let sa = small_series(&a, &l, false);
            let sb = small_series(&b, &l, false);
            prop_assert!(max_diff(&sa.mul(&sb).unwrap(), &brute_mul(&sa, &sb)) < 1e-13);
        }

        #[test]
        fn exp_of_sum_is_product_of_exps(
            a in prop::collection::vec((-0.8f64..0.8, -0.8f64..0.8), 18),
            b in prop::collection::vec((-0.8f64..0.8, -0.8f64..0.8), 18),
        ) {
            // total order 2 + 1 + 2 = 5
            let l = Layout::new(&["x", "y", "z"], &[2, 1, 2]).unwrap();
            let sa = small_series(&a, &l, true);
            let sb = small_series(&b, &l, true);
            let lhs = (&sa + &sb).exp().unwrap();
            let rhs = brute_mul(&sa.exp().unwrap(), &sb.exp().unwrap());
            prop_assert!(max_diff(&lhs, &rhs) < 1e-12);
            prop_assert!(max_diff(&sa.exp().unwrap(), &taylor_exp(&sa)) < 1e-12);
            let unit = sa.exp().unwrap().extract_derivative(&[0, 0, 0]).unwrap();
            prop_assert_eq!(unit, c(1.0, 0.0));
        }

        #[test]
        fn extraction_is_linear(
            a in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 9),
            b in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 9),
            k in (-2.0f64..2.0, -2.0f64..2.0),
            i in 0u32..3, j in 0u32..3,
        ) {
            let l = Layout::new(&["x", "y"], &[2, 2]).unwrap();
            let sa = small_series(&a, &l, false);
            let sb = small_series(&b, &l, false);
            let k = c(k.0, k.1);
            let lhs = (&sa.scale(k) + &sb).extract_derivative(&[i, j]).unwrap();
            let rhs = sa.extract_derivative(&[i, j]).unwrap() * k + sb.extract_derivative(&[i, j]).unwrap();
            prop_assert!((lhs - rhs).norm() < 1e-13);
        }
    }
}
