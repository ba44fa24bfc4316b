//! The exact Student t distribution and its matched-normal geometry.
//!
//! The matched normal has the Student's own mean 0 and variance ν/(ν − 2),
//! so every approximation is written in the standardized coordinate
//! δ_x = x / √(ν/(ν − 2)).

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::special::{self, Accuracy, Probability};

/// Degrees of freedom ν > 2 (finite variance is required).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct DegreesOfFreedom(f64);

impl DegreesOfFreedom {
    pub fn new(nu: f64) -> Result<Self> {
        if nu.is_finite() && nu > 2.0 {
            Ok(DegreesOfFreedom(nu))
        } else {
            Err(Error::domain("nu", nu, "degrees of freedom must be finite and > 2"))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }

    /// Var(X) = ν/(ν − 2).
    #[inline]
    pub fn variance(self) -> f64 {
        self.0 / (self.0 - 2.0)
    }

    /// Standard deviation of the matched normal, √(ν/(ν − 2)).
    #[inline]
    pub fn std_dev(self) -> f64 {
        self.variance().sqrt()
    }
}

impl TryFrom<f64> for DegreesOfFreedom {
    type Error = Error;

    fn try_from(nu: f64) -> Result<Self> {
        DegreesOfFreedom::new(nu)
    }
}

/// A point expressed in matched-normal units, δ_x.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct StandardizedPoint(f64);

impl StandardizedPoint {
    pub fn new(delta: f64) -> Result<Self> {
        if delta.is_finite() {
            Ok(StandardizedPoint(delta))
        } else {
            Err(Error::domain("delta", delta, "must be finite"))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

/// Bulk parameter η ∈ (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BulkSpec {
    eta: f64,
}

impl BulkSpec {
    pub fn new(eta: f64) -> Result<Self> {
        if eta > 0.0 && eta < 1.0 {
            Ok(BulkSpec { eta })
        } else {
            Err(Error::domain("eta", eta, "bulk parameter must lie in (0, 1)"))
        }
    }

    #[inline]
    pub fn eta(self) -> f64 {
        self.eta
    }

    /// Half-width of the bulk in δ units: η·ν^(−1/4)·√(ν − 2).
    pub fn radius(self, nu: DegreesOfFreedom) -> f64 {
        let nu = nu.get();
        self.eta * nu.powf(-0.25) * (nu - 2.0).sqrt()
    }
}

/// δ_x = x / √(ν/(ν − 2)).
#[inline]
pub fn standardize(nu: DegreesOfFreedom, x: f64) -> StandardizedPoint {
    StandardizedPoint(x / nu.std_dev())
}

#[inline]
pub fn unstandardize(nu: DegreesOfFreedom, delta: StandardizedPoint) -> f64 {
    delta.0 * nu.std_dev()
}

/// ln f_ν(x).
pub fn student_log_pdf(nu: DegreesOfFreedom, x: f64) -> f64 {
    let n = nu.get();
    special::ln_gamma_ratio(0.5 * n, 0.5) - 0.5 * (n * PI).ln() - 0.5 * (n + 1.0) * (x * x / n).ln_1p()
}

/// Student t density f_ν(x), evaluated in log space.
pub fn student_pdf(nu: DegreesOfFreedom, x: f64) -> f64 {
    student_log_pdf(nu, x).exp()
}

/// Exact survival function S_ν(a) = P(X > a).
///
/// For a ≥ 0, S_ν(a) = ½·I_{ν/(ν+a²)}(ν/2, ½); negative a follows from
/// S_ν(−a) = 1 − S_ν(a).
pub fn student_sf_exact(nu: DegreesOfFreedom, a: f64) -> Result<Probability> {
    student_sf_exact_with(nu, a, &Accuracy::default())
}

pub fn student_sf_exact_with(nu: DegreesOfFreedom, a: f64, acc: &Accuracy) -> Result<Probability> {
    if a.is_nan() {
        return Err(Error::domain("a", a, "survival point must not be NaN"));
    }
    if a.is_infinite() {
        return Ok(Probability::clamped(if a > 0.0 { 0.0 } else { 1.0 }));
    }
    let n = nu.get();
    let t2 = a * a;
    let half_tail = if t2.is_finite() {
        let denom = n + t2;
        // x = ν/(ν + a²) is raised to the power ν/2, so ln x comes from ln1p
        let ln_x = -(t2 / n).ln_1p();
        let ln_y = if t2 > 0.0 { 2.0 * a.abs().ln() - denom.ln() } else { f64::NEG_INFINITY };
        0.5 * special::reg_inc_beta_logs(n / denom, t2 / denom, ln_x, ln_y, 0.5 * n, 0.5, acc)?.get()
    } else {
        0.0
    };
    Ok(Probability::clamped(if a >= 0.0 { half_tail } else { 1.0 - half_tail }))
}

/// Whether x lies in the bulk |δ_x/√(ν − 2)| ≤ η·ν^(−1/4) (boundary included,
/// up to a few ulps of rounding).
pub fn in_bulk(nu: DegreesOfFreedom, x: f64, spec: BulkSpec) -> bool {
    let n = nu.get();
    let lhs = (standardize(nu, x).get() / (n - 2.0).sqrt()).abs();
    lhs <= spec.eta * n.powf(-0.25) * (1.0 + 4.0 * f64::EPSILON)
}
