//! Percentage points of the Student distribution.
//!
//! Two approximate routes are provided: inverting the shifted-normal
//! survival approximation directly, and solving the Mills-ratio equation
//!
//!   α/φ(λ) = R(λ) + Σ_{k≤level} T_k(λ)/ν^k
//!
//! obtained by Taylor-expanding Ψ around λ. Both are compared against the
//! exact quantile from the incomplete-beta survival function.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::roots::{self, Root};
use crate::special::{mills_ratio, normal_isf, normal_pdf, Accuracy, Probability};
use crate::student::{student_pdf, student_sf_exact, DegreesOfFreedom};
use crate::survival::{correction_d, survival_approx_with_density, ApproxOrder};

/// Residual bound for the approximate solvers.
pub const SOLVER_TOL: f64 = 1e-12;
/// Residual bound |S_ν(a) − α| for the exact quantile.
pub const EXACT_TOL: f64 = 1e-13;

const MAX_ITER: usize = 300;
const BRACKET_HALF_WIDTH: f64 = 1.5;
const MAX_WINDOW_DELTA: f64 = 10.0;
const FD_STEP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum QuantileMethod {
    InvertSurvival { order: ApproxOrder },
    MillsEquation { level: u8 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuantileResult {
    pub lambda: f64,
    pub residual: f64,
    pub iterations: usize,
    #[serde(flatten)]
    pub method: QuantileMethod,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantileRequest {
    pub nu: DegreesOfFreedom,
    pub alpha: Probability,
    pub method: QuantileMethod,
}

impl QuantileRequest {
    pub fn new(nu: DegreesOfFreedom, alpha: Probability, method: QuantileMethod) -> Result<Self> {
        check_alpha(alpha)?;
        if let QuantileMethod::MillsEquation { level } = method {
            check_level(level)?;
        }
        Ok(QuantileRequest { nu, alpha, method })
    }

    pub fn solve(&self) -> Result<QuantileResult> {
        match self.method {
            QuantileMethod::InvertSurvival { order } => quantile_invert_survival(self.nu, self.alpha, order),
            QuantileMethod::MillsEquation { level } => solve_mills_equation(self.nu, self.alpha, level),
        }
    }
}

fn check_alpha(alpha: Probability) -> Result<f64> {
    let a = alpha.get();
    if a > 0.0 && a < 1.0 {
        Ok(a)
    } else {
        Err(Error::domain("alpha", a, "tail probability must lie strictly between 0 and 1"))
    }
}

fn check_level(level: u8) -> Result<()> {
    match level {
        1..=3 => Ok(()),
        _ => Err(Error::domain("level", level as f64, "equation level must be 1, 2 or 3")),
    }
}

fn solver_accuracy(abs_tol: f64) -> Accuracy {
    Accuracy {
        abs_tol,
        rel_tol: 0.0,
        max_iter: MAX_ITER,
    }
}

/// Upper-tail normal point for α ≤ ½, rejecting α whose normal point lies
/// beyond the δ window.
fn upper_normal_point(alpha: f64) -> Result<f64> {
    let q = normal_isf(alpha)?;
    if q > MAX_WINDOW_DELTA {
        return Err(Error::domain("alpha", alpha, "normal point lies beyond |delta| = 10"));
    }
    Ok(q)
}

/// Solves S̃(a) = α for the order-i survival approximation S̃.
///
/// For α > ½ the problem is reflected through S̃(−a) = 1 − S̃(a).
pub fn quantile_invert_survival(nu: DegreesOfFreedom, alpha: Probability, order: ApproxOrder) -> Result<QuantileResult> {
    let a = check_alpha(alpha)?;
    let method = QuantileMethod::InvertSurvival { order };
    if a == 0.5 {
        return Ok(QuantileResult { lambda: 0.0, residual: 0.0, iterations: 0, method });
    }
    let (tail, sign) = if a < 0.5 { (a, 1.0) } else { (1.0 - a, -1.0) };
    let sigma = nu.std_dev();
    let q = upper_normal_point(tail)?;

    let f = |x: f64| {
        let (s, dens) = survival_approx_with_density(nu, x, order).expect("finite abscissa");
        (s.get() - tail, dens)
    };

    // S̃(0) = ½ > tail, so 0 is always a valid lower end
    let limit = MAX_WINDOW_DELTA * sigma;
    let lo = (q - BRACKET_HALF_WIDTH).max(0.0);
    let mut width = BRACKET_HALF_WIDTH;
    let mut hi = (q + width).min(limit);
    let lo = if f(lo).0 > 0.0 { lo } else { 0.0 };
    while f(hi).0 > 0.0 {
        if hi >= limit {
            return Err(Error::Bracket {
                method: "survival approximation inversion",
                target: a,
                attained_lo: f(limit).0 + tail,
                attained_hi: 0.5,
            });
        }
        width *= 2.0;
        hi = (q + width).min(limit);
    }

    let root = roots::newton_bisect(f, lo, hi, &solver_accuracy(SOLVER_TOL), "survival approximation inversion")?;
    Ok(signed(root, sign, method))
}

fn signed(root: Root, sign: f64, method: QuantileMethod) -> QuantileResult {
    QuantileResult {
        lambda: sign * root.x,
        residual: root.residual,
        iterations: root.iterations,
        method,
    }
}

/// Right-hand side of the level-1, 2 or 3 Mills-ratio equation at λ.
///
/// The corrections d_k are evaluated at δ_λ = λ·√((ν − 2)/ν).
pub fn mills_equation_rhs(nu: DegreesOfFreedom, lambda: f64, level: u8) -> Result<f64> {
    check_level(level)?;
    if !lambda.is_finite() {
        return Err(Error::domain("lambda", lambda, "must be finite"));
    }
    let n = nu.get();
    let delta = lambda / nu.std_dev();
    let d1 = correction_d(1, delta)?;
    let d2 = correction_d(2, delta)?;
    let d3 = correction_d(3, delta)?;
    let l = lambda;
    let u = l + d1;

    let t1 = u;
    let t2 = l / 2.0 + d2 - d1 + 0.5 * l * u * u;
    let t3 = l / 2.0 + d3 - d2 - d1 / 2.0
        + 0.5 * l * (l * l + 2.0 * l * d2 - l * d1 + 2.0 * d1 * d2 - 2.0 * d1 * d1)
        + (l * l - 1.0) / 6.0 * u * u * u;

    let terms = [t1, t2, t3];
    let inv = 1.0 / n;
    let series = terms[..level as usize].iter().rev().fold(0.0, |acc, t| (acc + t) * inv);
    Ok(mills_ratio(l) + series)
}

/// Solves α/φ(λ) = rhs(λ) for the given level.
///
/// Newton steps use a central-difference derivative; for α > ½ the
/// equation is reflected so that λ(α) = −λ(1 − α) holds exactly.
pub fn solve_mills_equation(nu: DegreesOfFreedom, alpha: Probability, level: u8) -> Result<QuantileResult> {
    let a = check_alpha(alpha)?;
    check_level(level)?;
    let method = QuantileMethod::MillsEquation { level };
    if a == 0.5 {
        return Ok(QuantileResult { lambda: 0.0, residual: 0.0, iterations: 0, method });
    }
    let (tail, sign) = if a < 0.5 { (a, 1.0) } else { (1.0 - a, -1.0) };
    let q = upper_normal_point(tail)?;

    let g = |l: f64| tail / normal_pdf(l) - mills_equation_rhs(nu, l, level).expect("finite lambda");
    let f = |l: f64| (g(l), (g(l + FD_STEP) - g(l - FD_STEP)) / (2.0 * FD_STEP));

    // g(0) = (tail − ½)/φ(0) < 0 and g grows like e^(λ²/2)
    let lo = if g((q - BRACKET_HALF_WIDTH).max(0.0)) < 0.0 { (q - BRACKET_HALF_WIDTH).max(0.0) } else { 0.0 };
    let mut width = BRACKET_HALF_WIDTH;
    let mut hi = q + width;
    while g(hi) < 0.0 {
        if hi >= MAX_WINDOW_DELTA {
            return Err(Error::Bracket {
                method: "Mills-ratio equation",
                target: a,
                attained_lo: g(MAX_WINDOW_DELTA),
                attained_hi: g(lo),
            });
        }
        width *= 2.0;
        hi = (q + width).min(MAX_WINDOW_DELTA);
    }

    let root = roots::newton_bisect(f, lo, hi, &solver_accuracy(SOLVER_TOL), "Mills-ratio equation")?;
    Ok(signed(root, sign, method))
}

/// Exact percentage point: the a with S_ν(a) = α.
pub fn exact_quantile(nu: DegreesOfFreedom, alpha: Probability) -> Result<f64> {
    let a = check_alpha(alpha)?;
    if a == 0.5 {
        return Ok(0.0);
    }
    let (tail, sign) = if a < 0.5 { (a, 1.0) } else { (1.0 - a, -1.0) };

    let sf = |x: f64| student_sf_exact(nu, x).map(|s| s.get());
    let mut hi = (normal_isf(tail)? * nu.std_dev()).max(1.0);
    while sf(hi)? > tail {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::Convergence {
                method: "exact quantile bracketing",
                iterations: 0,
                estimate: hi,
                residual: tail,
            });
        }
    }

    // the oracle is evaluated inside the closure; its errors are surfaced after the search
    let mut failure = None;
    let f = |x: f64| match sf(x) {
        Ok(s) => (s - tail, -student_pdf(nu, x)),
        Err(e) => {
            failure.get_or_insert(e);
            (f64::NAN, f64::NAN)
        }
    };
    let root = roots::newton_bisect(f, 0.0, hi, &solver_accuracy(EXACT_TOL), "exact quantile");
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(sign * root?.x)
}
