//! Scalar special functions with explicit accuracy contracts.
//!
//! Everything downstream budgets its tolerances on these routines: the exact
//! Student survival oracle goes through [`reg_inc_beta`] and [`log_gamma`],
//! the approximations through [`normal_sf`], and the percentage-point
//! equations through [`mills_ratio`].

use std::f64::consts::FRAC_1_SQRT_2;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::roots;

/// 1/√(2π)
const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_677_94;
/// ½·ln(2π)
const HALF_LN_2PI: f64 = 0.918_938_533_204_672_741_78;
/// Euler–Mascheroni constant.
const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_61;

/// ζ(n) − 1 for n = 2, 3, …, 30 (20 significant digits).
///
/// Used by the power series
/// ln Γ(2 + z) = (1 − γ)z + Σₙ₌₂ (−1)ⁿ (ζ(n) − 1) zⁿ / n,  |z| < 2,
/// which on |z| ≤ ½ converges like 4⁻ⁿ; 29 terms leave a tail below 1e-18.
const ZETA_MINUS_ONE: [f64; 29] = [
    0.644_934_066_848_226_436_47,
    0.202_056_903_159_594_285_40,
    0.082_323_233_711_138_191_516,
    0.036_927_755_143_369_926_331,
    0.017_343_061_984_449_139_715,
    0.008_349_277_381_922_826_839_8,
    0.004_077_356_197_944_339_378_7,
    0.002_008_392_826_082_214_417_9,
    0.000_994_575_127_818_085_337_15,
    0.000_494_188_604_119_464_558_70,
    0.000_246_086_553_308_048_298_64,
    0.000_122_713_347_578_489_146_75,
    6.124_813_505_870_482_925_9e-5,
    3.058_823_630_702_049_355_2e-5,
    1.528_225_940_865_187_173_3e-5,
    7.637_197_637_899_762_273_6e-6,
    3.817_293_264_999_839_856_5e-6,
    1.908_212_716_553_938_925_7e-6,
    9.539_620_338_727_961_131_5e-7,
    4.769_329_867_878_064_631_2e-7,
    2.384_505_027_277_329_900_0e-7,
    1.192_199_259_653_110_730_7e-7,
    5.960_818_905_125_947_961_2e-8,
    2.980_350_351_465_228_018_6e-8,
    1.490_155_482_836_504_123_5e-8,
    7.450_711_789_835_429_492_0e-9,
    3.725_334_024_788_457_054_8e-9,
    1.862_659_723_513_049_006_4e-9,
    9.313_274_324_196_681_828_7e-10,
];

/// Stirling series coefficients B₂ₖ / (2k(2k − 1)), k = 1..8.
///
/// 1/12, −1/360, 1/1260, −1/1680, 1/1188, −691/360360, 1/156, −3617/122400.
/// For x ≥ 10 the first omitted term is below 2e-18.
const STIRLING: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
    -3617.0 / 122_400.0,
];

/// Arguments at or above this use the Stirling series.
const STIRLING_CUTOFF: f64 = 10.0;

/// A probability value in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct Probability(f64);

impl Probability {
    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Probability(value))
        } else {
            Err(Error::domain("probability", value, "must lie in [0, 1]"))
        }
    }

    /// Clamps rounding excursions back into [0, 1].
    pub(crate) fn clamped(value: f64) -> Self {
        debug_assert!(!value.is_nan());
        Probability(value.clamp(0.0, 1.0))
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }

    /// 1 − p.
    pub fn complement(self) -> Self {
        Probability(1.0 - self.0)
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

impl TryFrom<f64> for Probability {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Probability::new(value)
    }
}

/// Stopping rule shared by the continued fractions and the root finders.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Accuracy {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Accuracy {
    pub fn new(abs_tol: f64, rel_tol: f64, max_iter: usize) -> Result<Self> {
        if !(abs_tol >= 0.0 && abs_tol.is_finite()) {
            return Err(Error::domain("abs_tol", abs_tol, "must be finite and >= 0"));
        }
        if !(rel_tol >= 0.0 && rel_tol.is_finite()) {
            return Err(Error::domain("rel_tol", rel_tol, "must be finite and >= 0"));
        }
        if abs_tol == 0.0 && rel_tol == 0.0 {
            return Err(Error::domain(
                "abs_tol",
                abs_tol,
                "at least one of abs_tol and rel_tol must be positive",
            ));
        }
        if max_iter == 0 {
            return Err(Error::domain("max_iter", 0.0, "must be positive"));
        }
        Ok(Accuracy {
            abs_tol,
            rel_tol,
            max_iter,
        })
    }
}

impl Default for Accuracy {
    /// Continued-fraction setting used by the incomplete beta oracle.
    fn default() -> Self {
        Accuracy {
            abs_tol: 0.0,
            rel_tol: f64::EPSILON,
            max_iter: 300,
        }
    }
}

/// Natural logarithm of the gamma function for x > 0.
///
/// Piecewise:
/// * x < ½: ln Γ(x) = ln Γ(1 + x) − ln x;
/// * ½ ≤ x ≤ 5/2: the ζ-series about 1 or 2 (relative accuracy holds
///   through the zeros at x = 1 and x = 2);
/// * 5/2 < x < 10: downward recurrence onto [3/2, 5/2];
/// * x ≥ 10: Stirling series with eight Bernoulli terms.
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::domain("x", x, "log_gamma needs a finite positive argument"));
    }
    Ok(ln_gamma_pos(x))
}

fn ln_gamma_pos(x: f64) -> f64 {
    if x < 0.5 {
        ln_gamma_1p(x) - x.ln()
    } else if x < 1.5 {
        ln_gamma_1p(x - 1.0)
    } else if x <= 2.5 {
        ln_gamma_2p(x - 2.0)
    } else if x < STIRLING_CUTOFF {
        let mut y = x;
        let mut prod = 1.0;
        while y > 2.5 {
            y -= 1.0;
            prod *= y;
        }
        prod.ln() + ln_gamma_2p(y - 2.0)
    } else {
        (x - 0.5) * x.ln() - x + HALF_LN_2PI + stirling_tail(x)
    }
}

/// ln Γ(2 + z) for |z| ≤ ½.
fn ln_gamma_2p(z: f64) -> f64 {
    // Horner from the highest term down; sign alternates with n.
    let mut acc = 0.0;
    for (i, &c) in ZETA_MINUS_ONE.iter().enumerate().rev() {
        let n = (i + 2) as f64;
        let signed = if i % 2 == 0 { c } else { -c };
        acc = acc * z + signed / n;
    }
    z * ((1.0 - EULER_GAMMA) + z * acc)
}

/// ln Γ(1 + z) for |z| ≤ ½.
fn ln_gamma_1p(z: f64) -> f64 {
    ln_gamma_2p(z) - z.ln_1p()
}

/// ln Γ(x) − [(x − ½) ln x − x + ½ ln 2π] for x ≥ 10.
fn stirling_tail(x: f64) -> f64 {
    let r = 1.0 / (x * x);
    let mut acc = 0.0;
    for &c in STIRLING.iter().rev() {
        acc = acc * r + c;
    }
    acc / x
}

/// ln B(a, b) = ln Γ(a) + ln Γ(b) − ln Γ(a + b).
///
/// When the larger argument reaches the Stirling range the leading
/// (x − ½) ln x − x parts are combined analytically so that the result keeps
/// absolute accuracy near 1e-15 even when each ln Γ is in the thousands.
pub(crate) fn ln_beta(a: f64, b: f64) -> f64 {
    let (small, big) = if a <= b { (a, b) } else { (b, a) };
    let sum = small + big;
    if big < STIRLING_CUTOFF {
        return ln_gamma_pos(small) + ln_gamma_pos(big) - ln_gamma_pos(sum);
    }
    let tails = stirling_tail(big) - stirling_tail(sum);
    if small < STIRLING_CUTOFF {
        // ln Γ(big) − ln Γ(sum) = −(big − ½) ln(1 + small/big) − small·ln(sum) + small
        ln_gamma_pos(small) - (big - 0.5) * (small / big).ln_1p() - small * sum.ln()
            + small
            + tails
    } else {
        HALF_LN_2PI - 0.5 * sum.ln()
            + (small - 0.5) * (-big / sum).ln_1p()
            + (big - 0.5) * (-small / sum).ln_1p()
            + stirling_tail(small)
            + tails
    }
}

/// ln Γ(x + h) − ln Γ(x), accurate when both terms are large.
pub(crate) fn ln_gamma_ratio(x: f64, h: f64) -> f64 {
    ln_gamma_pos(h) - ln_beta(x, h)
}

/// Standard normal density φ(z).
#[inline]
pub fn normal_pdf(z: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * z * z).exp()
}

/// Standard normal survival function Ψ(z) = P(Z > z).
///
/// Evaluated as ½·erfc(z/√2) so the upper tail keeps full relative
/// precision instead of losing it to 1 − Φ(z).
pub fn normal_sf(z: f64) -> Probability {
    Probability::clamped(0.5 * libm::erfc(z * FRAC_1_SQRT_2))
}

/// Upper-α point of the standard normal: the z with Ψ(z) = α.
pub fn normal_isf(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain("alpha", alpha, "must lie strictly inside (0, 1)"));
    }
    if alpha > 0.5 {
        return normal_isf(1.0 - alpha).map(|z| -z);
    }
    // one ulp in z moves Ψ by a relative z²ε, about 3e-14 at z = 11
    let acc = Accuracy::new(alpha * 1e-12, 0.0, 200)?;
    // Ψ(0) = ½ ≥ α and Ψ(40) underflows, so [0, 40] always brackets.
    let root = roots::newton_bisect(
        |z| (normal_sf(z).get() - alpha, -normal_pdf(z)),
        0.0,
        40.0,
        &acc,
        "normal quantile",
    )?;
    Ok(root.x)
}

/// Regularized incomplete beta function I_x(a, b).
pub fn reg_inc_beta(x: f64, a: f64, b: f64) -> Result<Probability> {
    reg_inc_beta_with(x, a, b, &Accuracy::default())
}

/// [`reg_inc_beta`] with an explicit stopping rule for the continued fraction.
pub fn reg_inc_beta_with(x: f64, a: f64, b: f64, acc: &Accuracy) -> Result<Probability> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::domain("x", x, "incomplete beta needs 0 <= x <= 1"));
    }
    reg_inc_beta_xy(x, 1.0 - x, a, b, acc)
}

/// I_x(a, b) with the complement y = 1 − x supplied by the caller, so that
/// x close to 1 does not lose y to cancellation.
pub(crate) fn reg_inc_beta_xy(x: f64, y: f64, a: f64, b: f64, acc: &Accuracy) -> Result<Probability> {
    reg_inc_beta_logs(x, y, x.ln(), y.ln(), a, b, acc)
}

/// [`reg_inc_beta_xy`] with ln x and ln y also supplied. With a large, the
/// front factor x^a turns a one-ulp error in x into a relative error of
/// a·ε, so callers that can form ln x directly should do so.
pub(crate) fn reg_inc_beta_logs(
    x: f64,
    y: f64,
    ln_x: f64,
    ln_y: f64,
    a: f64,
    b: f64,
    acc: &Accuracy,
) -> Result<Probability> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::domain("a", a, "incomplete beta needs a finite a > 0"));
    }
    if !(b > 0.0 && b.is_finite()) {
        return Err(Error::domain("b", b, "incomplete beta needs a finite b > 0"));
    }
    if x <= 0.0 {
        return Ok(Probability(0.0));
    }
    if y <= 0.0 {
        return Ok(Probability(1.0));
    }
    let front = (a * ln_x + b * ln_y - ln_beta(a, b)).exp();
    // λ = a − (a + b)x, formed from y so it keeps its digits when x ≈ 1
    if x < (a + 1.0) / (a + b + 2.0) {
        let lambda = (a + b) * y - b;
        let cf = beta_continued_fraction(x, y, a, b, lambda, acc)?;
        Ok(Probability::clamped(front * cf))
    } else {
        let lambda = b - (a + b) * y;
        let cf = beta_continued_fraction(y, x, b, a, lambda, acc)?;
        Ok(Probability::clamped(1.0 - front * cf))
    }
}

/// Continued fraction for I_x(a, b) / (x^a y^b / B(a, b)), written in terms of
/// λ = (a + b)y − b. The partial numerators and denominators never subtract
/// nearly equal quantities, which the textbook Lentz form does when a is large
/// and x sits just below (a + 1)/(a + b + 2).
fn beta_continued_fraction(x: f64, y: f64, a: f64, b: f64, lambda: f64, acc: &Accuracy) -> Result<f64> {
    let eps = acc.rel_tol.max(f64::EPSILON);
    let c = 1.0 + lambda;
    let c0 = b / a;
    let c1 = 1.0 + 1.0 / a;
    let yp1 = y + 1.0;

    let mut p = 1.0;
    let mut s = a + 1.0;
    let (mut an, mut bn) = (0.0, 1.0);
    let (mut anp1, mut bnp1) = (1.0, c / c1);
    let mut r = c1 / c;
    let mut last = f64::INFINITY;

    for n in 1..=acc.max_iter {
        let n = n as f64;
        let t = n / a;
        let w = n * (b - n) * x;
        let e = a / s;
        let alpha = (p * (p + c0) * e * e) * (w * x);
        let e = (1.0 + t) / (c1 + t + t);
        let beta = n + w / s + e * (c + n * yp1);
        p = 1.0 + t;
        s += 2.0;

        let next = alpha * an + beta * anp1;
        an = anp1;
        anp1 = next;
        let next = alpha * bn + beta * bnp1;
        bn = bnp1;
        bnp1 = next;

        let r0 = r;
        r = anp1 / bnp1;
        last = ((r - r0) / r).abs();
        if last <= eps {
            return Ok(r);
        }
        // rescale so the recurrences stay in range
        an /= bnp1;
        bn /= bnp1;
        anp1 = r;
        bnp1 = 1.0;
    }
    Err(Error::Convergence {
        method: "incomplete beta continued fraction",
        iterations: acc.max_iter,
        estimate: r,
        residual: last,
    })
}

/// Threshold above which the Mills ratio switches to its continued fraction.
const MILLS_CF_THRESHOLD: f64 = 5.0;

/// Mills ratio Ψ(λ)/φ(λ).
///
/// For λ ≤ 5 the quotient is taken directly; beyond that both factors are
/// tiny and the ratio comes from the Laplace continued fraction
/// 1/(λ + 1/(λ + 2/(λ + 3/(λ + …)))).
pub fn mills_ratio(lambda: f64) -> f64 {
    if lambda <= MILLS_CF_THRESHOLD {
        return normal_sf(lambda).get() / normal_pdf(lambda);
    }
    const TINY: f64 = 1e-300;
    let mut f = lambda;
    let mut c = f;
    let mut d = 0.0;
    for k in 1..=5000 {
        let k = k as f64;
        d = lambda + k * d;
        if d.abs() < TINY {
            d = TINY;
        }
        d = 1.0 / d;
        c = lambda + k / c;
        if c.abs() < TINY {
            c = TINY;
        }
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() <= 0.5 * f64::EPSILON {
            break;
        }
    }
    1.0 / f
}

/// √(π/2) = Ψ(0)/φ(0).
pub const MILLS_AT_ZERO: f64 = 1.253_314_137_315_500_251_2;
