//! Shifted-normal approximations to the Student survival function.
//!
//! The order-i approximation is S_ν(a) ≈ Ψ(δ_{a−c}) with the shift
//! c = Σ_{k≤i} d_k(δ_a)/ν^k, where the odd polynomials d_k cancel the
//! successive ν^(−k) error terms. The maximal error over a is then
//! M_i/ν^(i+1) + O(ν^(−(i+2))), with M_i = max_y |d_{i+1}(y)|·φ(y).

use std::fmt;

use num_rational::Rational64;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::expansion::RationalPoly;
use crate::roots::{self, Maximum};
use crate::special::{normal_pdf, normal_sf, Probability};
use crate::student::{student_sf_exact, BulkSpec, DegreesOfFreedom};

/// Number of correction terms included in the shift.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ApproxOrder {
    Zero,
    One,
    Two,
    Three,
}

impl ApproxOrder {
    pub const ALL: [ApproxOrder; 4] = [ApproxOrder::Zero, ApproxOrder::One, ApproxOrder::Two, ApproxOrder::Three];

    pub fn get(self) -> u8 {
        self as u8
    }
}

impl TryFrom<u8> for ApproxOrder {
    type Error = Error;

    fn try_from(order: u8) -> Result<Self> {
        ApproxOrder::ALL
            .get(order as usize)
            .copied()
            .ok_or_else(|| Error::domain("order", order as f64, "approximation order must be 0, 1, 2 or 3"))
    }
}

impl From<ApproxOrder> for u8 {
    fn from(order: ApproxOrder) -> u8 {
        order.get()
    }
}

impl fmt::Display for ApproxOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.get())
    }
}

impl Serialize for ApproxOrder {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_u8(self.get())
    }
}

const fn r(n: i64, d: i64) -> Rational64 {
    Rational64::new_raw(n, d)
}

// odd-power coefficients (δ, δ³, δ⁵, ...) of d_1, d_2, d_3
const D1: [Rational64; 2] = [r(-3, 4), r(1, 4)];
const D2: [Rational64; 3] = [r(-65, 32), r(11, 12), r(-13, 96)];
const D3: [Rational64; 4] = [r(-589, 128), r(1025, 384), r(-293, 384), r(35, 384)];

// Horner tables in δ² for the same polynomials divided by δ, kept in f64
// for the hot path
const D1_F: [f64; 2] = [-0.75, 0.25];
const D2_F: [f64; 3] = [-65.0 / 32.0, 11.0 / 12.0, -13.0 / 96.0];
const D3_F: [f64; 4] = [-589.0 / 128.0, 1025.0 / 384.0, -293.0 / 384.0, 35.0 / 384.0];

fn check_k(k: u8) -> Result<usize> {
    match k {
        1..=3 => Ok(k as usize),
        _ => Err(Error::domain("k", k as f64, "correction index must be 1, 2 or 3")),
    }
}

/// d_k as an exact polynomial.
pub fn correction_poly(k: u8) -> Result<RationalPoly> {
    let odd: &[Rational64] = match check_k(k)? {
        1 => &D1,
        2 => &D2,
        _ => &D3,
    };
    Ok(RationalPoly::from_odd(odd))
}

fn table(k: usize) -> &'static [f64] {
    match k {
        1 => &D1_F,
        2 => &D2_F,
        _ => &D3_F,
    }
}

#[inline]
fn eval_d(k: usize, delta: f64) -> f64 {
    let s = delta * delta;
    delta * table(k).iter().rev().fold(0.0, |acc, c| acc * s + c)
}

#[inline]
fn eval_d_prime(k: usize, delta: f64) -> f64 {
    // d/dδ Σ c_j δ^(2j+1) = Σ (2j+1) c_j δ^(2j)
    let s = delta * delta;
    table(k)
        .iter()
        .enumerate()
        .rev()
        .fold(0.0, |acc, (j, c)| acc * s + (2 * j + 1) as f64 * c)
}

/// Correction polynomial d_k evaluated at δ_a:
///
///   d_1 = (δ/4)(δ² − 3)
///   d_2 = −(δ/96)(13δ⁴ − 88δ² + 195)
///   d_3 = (δ/384)(35δ⁶ − 293δ⁴ + 1025δ² − 1767)
pub fn correction_d(k: u8, delta_a: f64) -> Result<f64> {
    Ok(eval_d(check_k(k)?, delta_a))
}

/// Derivative of d_k with respect to δ.
pub fn correction_d_prime(k: u8, delta_a: f64) -> Result<f64> {
    Ok(eval_d_prime(check_k(k)?, delta_a))
}

/// The corrections at one point together with the resulting shift.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrectionSet {
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    pub shift: f64,
}

impl CorrectionSet {
    pub fn new(nu: DegreesOfFreedom, delta_a: f64, order: ApproxOrder) -> Self {
        let d = [eval_d(1, delta_a), eval_d(2, delta_a), eval_d(3, delta_a)];
        CorrectionSet {
            d1: d[0],
            d2: d[1],
            d3: d[2],
            shift: shift_sum(&d, nu.get(), order),
        }
    }
}

fn shift_sum(d: &[f64; 3], nu: f64, order: ApproxOrder) -> f64 {
    let inv = 1.0 / nu;
    d[..order.get() as usize].iter().rev().fold(0.0, |acc, dk| (acc + dk) * inv)
}

fn shift_and_slope(nu: f64, delta_a: f64, order: ApproxOrder) -> (f64, f64) {
    let inv = 1.0 / nu;
    let (mut c, mut dc) = (0.0, 0.0);
    for k in (1..=order.get() as usize).rev() {
        c = (c + eval_d(k, delta_a)) * inv;
        dc = (dc + eval_d_prime(k, delta_a)) * inv;
    }
    (c, dc)
}

/// Order-i survival approximation Ψ((a − c)·√((ν − 2)/ν)), with the d_k
/// evaluated at δ_a of the uncorrected point.
pub fn survival_approx(nu: DegreesOfFreedom, a: f64, order: ApproxOrder) -> Result<Probability> {
    Ok(survival_approx_with_density(nu, a, order)?.0)
}

/// Survival approximation and its derivative with respect to a.
pub fn survival_approx_with_density(nu: DegreesOfFreedom, a: f64, order: ApproxOrder) -> Result<(Probability, f64)> {
    if a.is_nan() {
        return Err(Error::domain("a", a, "survival point must not be NaN"));
    }
    if a.is_infinite() {
        return Ok((Probability::clamped(if a > 0.0 { 0.0 } else { 1.0 }), 0.0));
    }
    let sigma = nu.std_dev();
    let delta_a = a / sigma;
    let (c, dc_ddelta) = shift_and_slope(nu.get(), delta_a, order);
    let z = (a - c) / sigma;
    let dz_da = (1.0 - dc_ddelta / sigma) / sigma;
    Ok((normal_sf(z), -normal_pdf(z) * dz_da))
}

/// |S_ν(a) − order-i approximation|.
pub fn approximation_error(nu: DegreesOfFreedom, a: f64, order: ApproxOrder) -> Result<f64> {
    let exact = student_sf_exact(nu, a)?.get();
    Ok((exact - survival_approx(nu, a, order)?.get()).abs())
}

/// Settings for a maximal-error scan.
///
/// The scan covers δ_a ∈ [−window_delta, window_delta]. When `bulk_eta` is
/// set, the window is further clipped to the bulk |δ_a/√(ν − 2)| ≤ η·ν^(−1/4),
/// outside of which the shifted approximations are not asserted and the
/// polynomial shift eventually diverges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanOptions {
    pub grid_points: usize,
    pub window_delta: f64,
    pub bulk_eta: Option<f64>,
    pub refine_tol: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            grid_points: 2001,
            window_delta: 10.0,
            bulk_eta: Some(0.5),
            refine_tol: 1e-10,
        }
    }
}

impl ScanOptions {
    pub fn validate(&self) -> Result<()> {
        if self.grid_points < 101 {
            return Err(Error::domain("grid_points", self.grid_points as f64, "need at least 101 grid points"));
        }
        if !(self.window_delta.is_finite() && self.window_delta > 0.0) {
            return Err(Error::domain("window_delta", self.window_delta, "window must be positive and finite"));
        }
        if let Some(eta) = self.bulk_eta {
            BulkSpec::new(eta)?;
        }
        if !(self.refine_tol > 0.0) {
            return Err(Error::domain("refine_tol", self.refine_tol, "refinement tolerance must be positive"));
        }
        Ok(())
    }

    /// Half-width in δ units of the window actually scanned at ν.
    pub fn effective_window(&self, nu: DegreesOfFreedom) -> f64 {
        match self.bulk_eta {
            Some(eta) => {
                let bulk = BulkSpec::new(eta).map(|b| b.radius(nu)).unwrap_or(f64::INFINITY);
                self.window_delta.min(bulk)
            }
            None => self.window_delta,
        }
    }
}

/// Result of a maximal-error scan at one ν.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorScanReport {
    pub nu: DegreesOfFreedom,
    pub order: ApproxOrder,
    pub max_error: f64,
    pub argmax_a: f64,
    pub grid_points: usize,
    pub refinement_iterations: usize,
    pub window_delta: f64,
}

/// Maximal |S_ν − approximation| over δ_a ∈ [−window_delta, window_delta]
/// clipped to the default bulk.
pub fn max_error_scan(
    nu: DegreesOfFreedom,
    order: ApproxOrder,
    grid_points: usize,
    window_delta: f64,
) -> Result<ErrorScanReport> {
    let opts = ScanOptions {
        grid_points,
        window_delta,
        ..ScanOptions::default()
    };
    max_error_scan_with(nu, order, &opts)
}

/// Uniform grid in δ_a followed by golden-section refinement in the two
/// cells around the grid maximizer.
pub fn max_error_scan_with(nu: DegreesOfFreedom, order: ApproxOrder, opts: &ScanOptions) -> Result<ErrorScanReport> {
    opts.validate()?;
    let half = opts.effective_window(nu);
    let sigma = nu.std_dev();
    let n = opts.grid_points;
    let step = 2.0 * half / (n - 1) as f64;
    let delta_at = |i: usize| -half + step * i as f64;

    let errors: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| approximation_error(nu, delta_at(i) * sigma, order))
        .collect::<Result<_>>()?;

    let mut best = 0;
    for (i, e) in errors.iter().enumerate() {
        if *e > errors[best] {
            best = i;
        }
    }

    let lo = delta_at(best.saturating_sub(1));
    let hi = delta_at((best + 1).min(n - 1));
    let refined = roots::golden_max(|d| approximation_error(nu, d * sigma, order), lo, hi, opts.refine_tol)?;

    let (max_error, argmax_delta) = if refined.value > errors[best] {
        (refined.value, refined.x)
    } else {
        (errors[best], delta_at(best))
    };

    Ok(ErrorScanReport {
        nu,
        order,
        max_error,
        argmax_a: argmax_delta * sigma,
        grid_points: n,
        refinement_iterations: refined.iterations,
        window_delta: half,
    })
}

const EXTREMAL_SEARCH_END: f64 = 10.0;
const EXTREMAL_ROOT_STEP: f64 = 1e-3;
const EXTREMAL_TOL: f64 = 1e-9;

/// Location and value of M_i = max_{y ≥ 0} |d_{i+1}(y)|·φ(y).
///
/// The positive roots of d_{i+1} on [0, 10] are bracketed by a sign scan and
/// bisected; the objective is then maximized by golden section between
/// consecutive roots.
pub fn extremal_maximizer(i: u8) -> Result<Maximum> {
    if i > 2 {
        return Err(Error::domain("i", i as f64, "extremal constant index must be 0, 1 or 2"));
    }
    let k = i as usize + 1;
    let d = |y: f64| eval_d(k, y);

    let mut knots = vec![0.0];
    let steps = (EXTREMAL_SEARCH_END / EXTREMAL_ROOT_STEP).round() as usize;
    let mut prev = (EXTREMAL_ROOT_STEP, d(EXTREMAL_ROOT_STEP));
    for j in 2..=steps {
        let y = j as f64 * EXTREMAL_ROOT_STEP;
        let dy = d(y);
        if dy == 0.0 {
            knots.push(y);
        } else if dy.signum() != prev.1.signum() && prev.1 != 0.0 {
            knots.push(bisect(d, prev.0, y));
        }
        prev = (y, dy);
    }
    knots.push(EXTREMAL_SEARCH_END);

    let objective = |y: f64| Ok(d(y).abs() * normal_pdf(y));
    let mut best: Option<Maximum> = None;
    let mut iterations = 0;
    for w in knots.windows(2) {
        let m = roots::golden_max(objective, w[0], w[1], EXTREMAL_TOL)?;
        iterations += m.iterations;
        if best.is_none_or(|b| m.value > b.value) {
            best = Some(m);
        }
    }
    let best = best.expect("at least one bracket");
    Ok(Maximum { iterations, ..best })
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    while hi - lo > 4.0 * f64::EPSILON * hi.abs() {
        let mid = 0.5 * (lo + hi);
        if f(mid).signum() == flo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// M_i, the leading constant of the order-i maximal error.
pub fn extremal_constant(i: u8) -> Result<f64> {
    Ok(extremal_maximizer(i)?.value)
}

/// The earlier closed-form bound on the order-0 constant,
/// ¼·√((7 + 5√2)/(π·e^(1+√2))).
pub fn legacy_leading_constant() -> f64 {
    let s2 = std::f64::consts::SQRT_2;
    0.25 * ((7.0 + 5.0 * s2) / (std::f64::consts::PI * (1.0 + s2).exp())).sqrt()
}

/// Scanned errors below this level are indistinguishable from oracle noise.
pub const NOISE_FLOOR: f64 = 1e-13;

const MIN_FIT_POINTS: usize = 4;

/// Least-squares fit of ln E against ln ν.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlopeFit {
    pub order: ApproxOrder,
    pub nu_values: Vec<f64>,
    pub errors: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub excluded_nu: Vec<f64>,
}

pub fn fit_loglog_slope(order: ApproxOrder, nu_values: &[f64], grid_points: usize) -> Result<SlopeFit> {
    let opts = ScanOptions {
        grid_points,
        ..ScanOptions::default()
    };
    fit_loglog_slope_with(order, nu_values, &opts)
}

/// Scans every ν, drops those whose maximal error is below [`NOISE_FLOOR`]
/// (reported in `excluded_nu`) and fits the rest.
pub fn fit_loglog_slope_with(order: ApproxOrder, nu_values: &[f64], opts: &ScanOptions) -> Result<SlopeFit> {
    let dofs: Vec<DegreesOfFreedom> = nu_values.iter().map(|&n| DegreesOfFreedom::new(n)).collect::<Result<_>>()?;
    let mut distinct = nu_values.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData {
            needed: MIN_FIT_POINTS,
            usable: distinct.len(),
            excluded: Vec::new(),
        });
    }

    let reports: Vec<ErrorScanReport> = dofs
        .par_iter()
        .map(|&nu| max_error_scan_with(nu, order, opts))
        .collect::<Result<_>>()?;

    let (mut nus, mut errors, mut excluded) = (Vec::new(), Vec::new(), Vec::new());
    for rep in &reports {
        if rep.max_error >= NOISE_FLOOR {
            nus.push(rep.nu.get());
            errors.push(rep.max_error);
        } else {
            excluded.push(rep.nu.get());
        }
    }
    if nus.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData {
            needed: MIN_FIT_POINTS,
            usable: nus.len(),
            excluded,
        });
    }

    let xs: Vec<f64> = nus.iter().map(|n| n.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let (slope, intercept) = least_squares(&xs, &ys);
    Ok(SlopeFit {
        order,
        nu_values: nus,
        errors,
        slope,
        intercept,
        excluded_nu: excluded,
    })
}

fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}
