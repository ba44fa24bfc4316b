//! Local expansion of the Student density around its matched normal.
//!
//! Inside the bulk, writing δ = δ_x,
//!
//!   ln(f_ν(x) / (φ(δ)/σ_ν)) = Σ_k P_k(δ) ν^(−k) + O(ν^(−4))
//!   f_ν(x) / (φ(δ)/σ_ν)     = 1 + Σ_k Q_k(δ) ν^(−k) + O(ν^(−4))
//!
//! where σ_ν² = ν/(ν − 2). The P_k and Q_k are even polynomials with exact
//! rational coefficients.

use std::ops::{Add, Mul, Neg, Sub};

use num_rational::Rational64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::special::{self, normal_pdf, normal_sf};
use crate::student::{DegreesOfFreedom, StandardizedPoint};

const fn r(n: i64, d: i64) -> Rational64 {
    Rational64::new_raw(n, d)
}

// coefficients of δ^0, δ^2, δ^4, ...
const P1: [Rational64; 3] = [r(3, 4), r(-3, 2), r(1, 4)];
const P2: [Rational64; 4] = [r(1, 1), r(-3, 1), r(5, 4), r(-1, 6)];
const P3: [Rational64; 5] = [r(11, 8), r(-6, 1), r(4, 1), r(-7, 6), r(1, 8)];
const Q2: [Rational64; 5] = [r(41, 32), r(-33, 8), r(41, 16), r(-13, 24), r(1, 32)];
const Q3: [Rational64; 7] = [
    r(281, 128),
    r(-651, 64),
    r(1357, 128),
    r(-457, 96),
    r(127, 128),
    r(-17, 192),
    r(1, 384),
];

/// Remainder exponent of the truncated expansions: the error is O(ν^(−4)).
pub const REMAINDER_ORDER: u32 = 4;

/// Polynomial in one variable with exact rational coefficients, stored in
/// ascending powers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RationalPoly {
    coeffs: Vec<Rational64>,
}

impl RationalPoly {
    pub fn new(coeffs: Vec<Rational64>) -> Self {
        let mut p = RationalPoly { coeffs };
        p.trim();
        p
    }

    /// Builds Σ c_j y^(2j) from the even-power coefficients c_j.
    pub fn from_even(even: &[Rational64]) -> Self {
        let mut coeffs = vec![Rational64::from_integer(0); 2 * even.len().max(1) - 1];
        for (j, &c) in even.iter().enumerate() {
            coeffs[2 * j] = c;
        }
        RationalPoly::new(coeffs)
    }

    /// Builds Σ c_j y^(2j+1) from the odd-power coefficients c_j.
    pub fn from_odd(odd: &[Rational64]) -> Self {
        let mut coeffs = vec![Rational64::from_integer(0); 2 * odd.len()];
        for (j, &c) in odd.iter().enumerate() {
            coeffs[2 * j + 1] = c;
        }
        RationalPoly::new(coeffs)
    }

    pub fn constant(c: Rational64) -> Self {
        RationalPoly::new(vec![c])
    }

    /// The monomial y.
    pub fn identity() -> Self {
        RationalPoly::new(vec![r(0, 1), r(1, 1)])
    }

    fn trim(&mut self) {
        while self.coeffs.len() > 1 && self.coeffs.last() == Some(&r(0, 1)) {
            self.coeffs.pop();
        }
        if self.coeffs.is_empty() {
            self.coeffs.push(r(0, 1));
        }
    }

    pub fn coefficients(&self) -> &[Rational64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_even(&self) -> bool {
        self.coeffs.iter().skip(1).step_by(2).all(|c| *c == r(0, 1))
    }

    pub fn is_odd(&self) -> bool {
        self.coeffs.iter().step_by(2).all(|c| *c == r(0, 1))
    }

    pub fn derivative(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(j, &c)| c * Rational64::from_integer(j as i64))
            .collect();
        RationalPoly::new(coeffs)
    }

    pub fn scale(&self, s: Rational64) -> Self {
        RationalPoly::new(self.coeffs.iter().map(|&c| c * s).collect())
    }

    pub fn pow(&self, n: u32) -> Self {
        (0..n).fold(RationalPoly::constant(r(1, 1)), |acc, _| &acc * self)
    }

    /// Horner evaluation in floating point.
    pub fn eval(&self, y: f64) -> f64 {
        self.coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * y + to_f64(*c))
    }
}

#[inline]
fn to_f64(c: Rational64) -> f64 {
    *c.numer() as f64 / *c.denom() as f64
}

impl Add for &RationalPoly {
    type Output = RationalPoly;

    fn add(self, rhs: &RationalPoly) -> RationalPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let zero = r(0, 1);
        let coeffs = (0..n)
            .map(|j| *self.coeffs.get(j).unwrap_or(&zero) + *rhs.coeffs.get(j).unwrap_or(&zero))
            .collect();
        RationalPoly::new(coeffs)
    }
}

impl Neg for &RationalPoly {
    type Output = RationalPoly;

    fn neg(self) -> RationalPoly {
        self.scale(r(-1, 1))
    }
}

impl Sub for &RationalPoly {
    type Output = RationalPoly;

    fn sub(self, rhs: &RationalPoly) -> RationalPoly {
        self + &(-rhs)
    }
}

impl Mul for &RationalPoly {
    type Output = RationalPoly;

    fn mul(self, rhs: &RationalPoly) -> RationalPoly {
        let mut coeffs = vec![r(0, 1); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        RationalPoly::new(coeffs)
    }
}

/// Which side of the expansion: the log of the density ratio or the ratio itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ExpansionForm {
    Log,
    Ratio,
}

fn check_order(order: u8) -> Result<usize> {
    match order {
        1..=3 => Ok(order as usize),
        _ => Err(Error::domain("order", order as f64, "expansion order must be 1, 2 or 3")),
    }
}

/// Coefficient polynomial of ν^(−k) (k = 1, 2, 3) in the given form.
pub fn coefficient_poly(form: ExpansionForm, k: u8) -> Result<RationalPoly> {
    let even: &[Rational64] = match (form, check_order(k)?) {
        (_, 1) => &P1,
        (ExpansionForm::Log, 2) => &P2,
        (ExpansionForm::Log, _) => &P3,
        (ExpansionForm::Ratio, 2) => &Q2,
        (ExpansionForm::Ratio, _) => &Q3,
    };
    Ok(RationalPoly::from_even(even))
}

/// The three coefficient values P_k(δ) or Q_k(δ) at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpansionTerms {
    pub form: ExpansionForm,
    pub delta: f64,
    pub terms: [f64; 3],
    pub remainder_order: u32,
}

impl ExpansionTerms {
    pub fn at(form: ExpansionForm, delta: StandardizedPoint) -> Self {
        let d = delta.get();
        let mut terms = [0.0; 3];
        for (k, t) in terms.iter_mut().enumerate() {
            *t = coefficient_poly(form, k as u8 + 1)
                .expect("orders 1..=3 are valid")
                .eval(d);
        }
        ExpansionTerms {
            form,
            delta: d,
            terms,
            remainder_order: REMAINDER_ORDER,
        }
    }

    /// Σ_{k ≤ order} terms[k]·ν^(−k), plus the leading 1 in ratio form.
    pub fn truncated(&self, nu: DegreesOfFreedom, order: u8) -> Result<f64> {
        let order = check_order(order)?;
        let inv = 1.0 / nu.get();
        let sum = self.terms[..order]
            .iter()
            .rev()
            .fold(0.0, |acc, t| (acc + t) * inv);
        Ok(match self.form {
            ExpansionForm::Log => sum,
            ExpansionForm::Ratio => 1.0 + sum,
        })
    }
}

/// Truncated expansion of ln(f_ν(x) / matched normal density).
pub fn log_ratio_expansion(nu: DegreesOfFreedom, delta: StandardizedPoint, order: u8) -> Result<f64> {
    ExpansionTerms::at(ExpansionForm::Log, delta).truncated(nu, order)
}

/// Truncated expansion of f_ν(x) / matched normal density.
pub fn ratio_expansion(nu: DegreesOfFreedom, delta: StandardizedPoint, order: u8) -> Result<f64> {
    ExpansionTerms::at(ExpansionForm::Ratio, delta).truncated(nu, order)
}

/// ln(f_ν(x) / (φ(δ)/σ_ν)) computed directly from the density, with the
/// O(1) parts cancelled analytically.
pub fn exact_log_ratio(nu: DegreesOfFreedom, delta: StandardizedPoint) -> f64 {
    let n = nu.get();
    let d2 = delta.get() * delta.get();
    special::ln_gamma_ratio(0.5 * n, 0.5) + 0.5 * (2.0 / (n - 2.0)).ln() - 0.5 * (n + 1.0) * (d2 / (n - 2.0)).ln_1p()
        + 0.5 * d2
}

pub fn exact_ratio(nu: DegreesOfFreedom, delta: StandardizedPoint) -> f64 {
    exact_log_ratio(nu, delta).exp()
}

// Ψ_k = H_k(δ)·φ(δ) + (k − 1)!!·Ψ(δ); odd-power coefficients of H_k
const MOMENT_POLY: [&[f64]; 6] = [
    &[1.0],
    &[3.0, 1.0],
    &[15.0, 5.0, 1.0],
    &[105.0, 35.0, 7.0, 1.0],
    &[945.0, 315.0, 63.0, 9.0, 1.0],
    &[10395.0, 3465.0, 693.0, 99.0, 11.0, 1.0],
];
const DOUBLE_FACTORIAL: [f64; 6] = [1.0, 3.0, 15.0, 105.0, 945.0, 10395.0];

/// Gaussian partial moment Ψ_k(δ) = ∫_δ^∞ y^k φ(y) dy for even k in 2..=12.
pub fn partial_moment(k: u32, delta: f64) -> Result<f64> {
    if !(2..=12).contains(&k) || k % 2 != 0 {
        return Err(Error::domain("k", k as f64, "partial moment order must be one of 2, 4, 6, 8, 10, 12"));
    }
    if delta.is_nan() {
        return Err(Error::domain("delta", delta, "must not be NaN"));
    }
    let idx = (k / 2 - 1) as usize;
    let d2 = delta * delta;
    let h = delta * MOMENT_POLY[idx].iter().rev().fold(0.0, |acc, c| acc * d2 + c);
    let poly_part = if delta.is_infinite() { 0.0 } else { h * normal_pdf(delta) };
    Ok(poly_part + DOUBLE_FACTORIAL[idx] * normal_sf(delta).get())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dof(nu: f64) -> DegreesOfFreedom {
        DegreesOfFreedom::new(nu).unwrap()
    }

    fn pt(d: f64) -> StandardizedPoint {
        StandardizedPoint::new(d).unwrap()
    }

    fn poly(form: ExpansionForm, k: u8) -> RationalPoly {
        coefficient_poly(form, k).unwrap()
    }

    #[test]
    fn ratio_coefficients_are_exponential_reexpansion() {
        let p1 = poly(ExpansionForm::Log, 1);
        let p2 = poly(ExpansionForm::Log, 2);
        let p3 = poly(ExpansionForm::Log, 3);
        assert_eq!(poly(ExpansionForm::Ratio, 1), p1);

        let q2 = &p2 + &p1.pow(2).scale(r(1, 2));
        assert_eq!(poly(ExpansionForm::Ratio, 2), q2);

        let q3 = &(&p3 + &(&p1 * &p2)) + &p1.pow(3).scale(r(1, 6));
        assert_eq!(poly(ExpansionForm::Ratio, 3), q3);
    }

    #[test]
    fn coefficient_polys_are_even() {
        for form in [ExpansionForm::Log, ExpansionForm::Ratio] {
            for k in 1..=3 {
                assert!(poly(form, k).is_even(), "{form:?} {k}");
            }
        }
        assert_eq!(poly(ExpansionForm::Ratio, 3).degree(), 12);
    }

    #[test]
    fn constant_terms() {
        let nu = dof(37.0);
        let n = 37.0;
        let log0 = log_ratio_expansion(nu, pt(0.0), 3).unwrap();
        assert!((log0 - (0.75 / n + 1.0 / (n * n) + 11.0 / (8.0 * n * n * n))).abs() < 1e-16);
        let ratio0 = ratio_expansion(nu, pt(0.0), 2).unwrap();
        assert!((ratio0 - (1.0 + 0.75 / n + 41.0 / (32.0 * n * n))).abs() < 1e-15);

        let log = ExpansionTerms::at(ExpansionForm::Log, pt(0.0));
        assert_eq!(log.terms, [0.75, 1.0, 1.375]);
        assert_eq!(log.remainder_order, 4);
        let ratio = ExpansionTerms::at(ExpansionForm::Ratio, pt(0.0));
        assert_eq!(ratio.terms, [0.75, 41.0 / 32.0, 281.0 / 128.0]);
    }

    #[test]
    fn first_coefficient_roots() {
        let p1 = poly(ExpansionForm::Log, 1);
        for s in [3.0 + 6f64.sqrt(), 3.0 - 6f64.sqrt()] {
            assert!(p1.eval(s.sqrt()).abs() < 1e-14, "{s}");
        }
    }

    #[test]
    fn invalid_order_rejected() {
        for bad in [0, 4] {
            assert!(matches!(log_ratio_expansion(dof(10.0), pt(0.3), bad), Err(Error::Domain { .. })));
            assert!(matches!(ratio_expansion(dof(10.0), pt(0.3), bad), Err(Error::Domain { .. })));
        }
    }

    #[test]
    fn matches_exact_ratio_at_large_nu() {
        let nu = dof(1000.0);
        let diff = (exact_log_ratio(nu, pt(1.0)) - log_ratio_expansion(nu, pt(1.0), 3).unwrap()).abs();
        assert!(diff <= 1e-11, "{diff:e}");
    }

    fn remainder_ratio(form: ExpansionForm, nu: f64, d: f64) -> f64 {
        let rem = |n: f64| match form {
            ExpansionForm::Log => (exact_log_ratio(dof(n), pt(d)) - log_ratio_expansion(dof(n), pt(d), 3).unwrap()).abs(),
            ExpansionForm::Ratio => (exact_ratio(dof(n), pt(d)) - ratio_expansion(dof(n), pt(d), 3).unwrap()).abs(),
        };
        rem(nu) / rem(2.0 * nu)
    }

    #[test]
    fn remainder_is_fourth_order() {
        for form in [ExpansionForm::Log, ExpansionForm::Ratio] {
            for d in [0.0, 0.5, -0.5, 1.0, -1.0, 2.0, -2.0] {
                for nu in [64.0, 128.0] {
                    let q = remainder_ratio(form, nu, d);
                    assert!(q >= 12.0, "{form:?} delta={d} nu={nu}: {q}");
                }
            }
        }
    }

    #[test]
    fn log_and_ratio_forms_agree_to_fourth_order() {
        let gap = |n: f64| {
            let l = log_ratio_expansion(dof(n), pt(1.5), 3).unwrap().exp();
            (l - ratio_expansion(dof(n), pt(1.5), 3).unwrap()).abs()
        };
        assert!(gap(200.0) / gap(400.0) >= 12.0);
    }

    #[test]
    fn partial_moments_at_zero() {
        assert!((partial_moment(2, 0.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((partial_moment(4, 0.0).unwrap() - 1.5).abs() < 1e-15);
        assert!((partial_moment(12, 0.0).unwrap() - 0.5 * 10395.0).abs() < 1e-11);
    }

    #[test]
    fn partial_moment_reference() {
        // ∫_{1.2}^∞ y^8 φ(y) dy at high precision
        let want = 52.372_313_960_743_309;
        assert!((partial_moment(8, 1.2).unwrap() - want).abs() < 1e-10);
    }

    #[test]
    fn partial_moment_recurrence() {
        for delta in [-2.0f64, 0.0, 1.0, 3.0] {
            let phi = normal_pdf(delta);
            let mut prev = normal_sf(delta).get();
            for k in (2..=12).step_by(2) {
                let cur = partial_moment(k, delta).unwrap();
                let via = delta.powi(k as i32 - 1) * phi + (k - 1) as f64 * prev;
                // relative once Ψ_k exceeds 1: Ψ_12(−2) ≈ 5243 carries ulps of 1e-12
                assert!((cur - via).abs() <= 1e-12 * cur.abs().max(1.0), "k={k} delta={delta}: {cur} vs {via}");
                prev = cur;
            }
        }
    }

    #[test]
    fn partial_moment_rejects_odd_orders() {
        for k in [0, 1, 3, 14] {
            assert!(partial_moment(k, 0.5).is_err());
        }
    }

    proptest! {
        #[test]
        fn expansions_are_even(nu in 3.0f64..1e4, d in -6.0f64..6.0, order in 1u8..=3) {
            let nu = dof(nu);
            prop_assert_eq!(log_ratio_expansion(nu, pt(d), order).unwrap(), log_ratio_expansion(nu, pt(-d), order).unwrap());
            prop_assert_eq!(ratio_expansion(nu, pt(d), order).unwrap(), ratio_expansion(nu, pt(-d), order).unwrap());
        }

        #[test]
        fn partial_moment_limits(d in -8.0f64..8.0) {
            // every Ψ_k is positive, and Ψ_2(δ) ≥ Ψ(δ) once y² ≥ 1 on the whole range
            for k in (2..=12).step_by(2) {
                prop_assert!(partial_moment(k, d).unwrap() > 0.0);
            }
            if d >= 1.0 {
                prop_assert!(partial_moment(2, d).unwrap() >= normal_sf(d).get());
            }
        }
    }
}
