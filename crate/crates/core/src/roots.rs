//! One-dimensional root finding and maximization helpers.

use crate::error::{Error, Result};
use crate::special::Accuracy;

/// Outcome of a bracketed root search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub x: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// Safeguarded Newton iteration on a sign-changing bracket.
///
/// `f` returns the function value and its derivative. A Newton step is taken
/// when it stays inside the current bracket and shrinks the step at least by
/// half; otherwise the bracket is bisected. The search stops when the step
/// falls to a few ulps of x; the result is accepted only if the final
/// residual is within `acc.abs_tol`.
pub fn newton_bisect<F>(mut f: F, lo: f64, hi: f64, acc: &Accuracy, method: &'static str) -> Result<Root>
where
    F: FnMut(f64) -> (f64, f64),
{
    let (flo, _) = f(lo);
    let (fhi, _) = f(hi);
    if flo == 0.0 {
        return Ok(Root { x: lo, residual: 0.0, iterations: 0 });
    }
    if fhi == 0.0 {
        return Ok(Root { x: hi, residual: 0.0, iterations: 0 });
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::Bracket {
            method,
            target: 0.0,
            attained_lo: flo.min(fhi),
            attained_hi: flo.max(fhi),
        });
    }
    // orient so that f(neg) < 0 < f(pos)
    let (mut neg, mut pos) = if flo < 0.0 { (lo, hi) } else { (hi, lo) };

    let mut x = 0.5 * (lo + hi);
    let mut dx_old = (hi - lo).abs();
    let mut dx = dx_old;
    let mut best = (x, f64::INFINITY);

    for iter in 1..=acc.max_iter {
        let (fx, dfx) = f(x);
        if fx.abs() < best.1.abs() {
            best = (x, fx);
        }
        if fx == 0.0 {
            return Ok(Root { x, residual: 0.0, iterations: iter });
        }
        if fx < 0.0 {
            neg = x;
        } else {
            pos = x;
        }

        let newton = x - fx / dfx;
        // the Newton correction is already below rounding: x is the root
        if dfx.is_finite() && dfx != 0.0 && (fx / dfx).abs() <= 4.0 * f64::EPSILON * x.abs().max(f64::MIN_POSITIVE) {
            return finish(best, iter, acc, method);
        }
        let inside = (newton - neg) * (newton - pos) < 0.0;
        let fast = (2.0 * fx).abs() <= (dx_old * dfx).abs();
        dx_old = dx;
        let next = if dfx.is_finite() && dfx != 0.0 && inside && fast {
            newton
        } else {
            0.5 * (neg + pos)
        };
        dx = next - x;
        x = next;

        let x_tol = 4.0 * f64::EPSILON * x.abs().max(f64::MIN_POSITIVE);
        if dx.abs() <= x_tol || (pos - neg).abs() <= x_tol {
            let (fx, _) = f(x);
            if fx.abs() < best.1.abs() {
                best = (x, fx);
            }
            return finish(best, iter, acc, method);
        }
    }
    finish(best, acc.max_iter, acc, method)
}

fn finish(best: (f64, f64), iterations: usize, acc: &Accuracy, method: &'static str) -> Result<Root> {
    let (x, residual) = best;
    if residual.abs() <= acc.abs_tol {
        Ok(Root { x, residual, iterations })
    } else {
        Err(Error::Convergence {
            method,
            iterations,
            estimate: x,
            residual,
        })
    }
}

/// Maximum located by golden-section search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Maximum {
    pub x: f64,
    pub value: f64,
    pub iterations: usize,
}

const INV_PHI: f64 = 0.618_033_988_749_894_848_2;

/// Golden-section search for the maximum of a unimodal function on [lo, hi].
///
/// The interval is shrunk until its width is at most `x_tol`. The endpoints
/// are never evaluated.
pub fn golden_max<F>(mut f: F, lo: f64, hi: f64, x_tol: f64) -> Result<Maximum>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut a, mut b) = (lo.min(hi), lo.max(hi));
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    let mut iterations = 0;
    while (b - a) > x_tol {
        iterations += 1;
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
    }
    let (x, value) = if fc >= fd { (c, fc) } else { (d, fd) };
    Ok(Maximum { x, value, iterations })
}
