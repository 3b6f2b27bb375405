//! Reference integration.
//!
//! Everything the rules and bounds are checked against comes from here:
//! adaptive Simpson for Riemann integrals, dyadic Riemann–Stieltjes sums for
//! `∫ f du`, interval means, and `erf`.

mod erf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{EvalError, RealFunction};

pub use erf::{erf, erfc};

/// Default absolute tolerance for every oracle call.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Recursion limit for adaptive Simpson.
pub const SIMPSON_MAX_DEPTH: u32 = 48;
/// Bisections applied unconditionally before the error test may accept a panel.
pub const SIMPSON_MIN_DEPTH: u32 = 2;

/// Maximum number of dyadic refinement levels for Riemann–Stieltjes sums.
pub const RS_MAX_LEVELS: u32 = 22;
/// Refinement level at which the successive-difference test starts.
pub const RS_MIN_LEVEL: u32 = 4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("invalid interval [{a}, {b}]: need finite a < b")]
    InvalidInterval { a: f64, b: f64 },
    #[error("tolerance must be positive and finite, got {0}")]
    InvalidTolerance(f64),
    #[error("breakpoint {point} is not strictly inside ({a}, {b})")]
    InvalidBreakpoint { point: f64, a: f64, b: f64 },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// A closed interval `[a, b]` with finite `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawInterval", into = "RawInterval")]
pub struct Interval {
    a: f64,
    b: f64,
}

#[derive(Serialize, Deserialize)]
struct RawInterval {
    a: f64,
    b: f64,
}

impl TryFrom<RawInterval> for Interval {
    type Error = OracleError;

    fn try_from(raw: RawInterval) -> Result<Self, Self::Error> {
        Interval::new(raw.a, raw.b)
    }
}

impl From<Interval> for RawInterval {
    fn from(iv: Interval) -> Self {
        RawInterval { a: iv.a, b: iv.b }
    }
}

impl Interval {
    pub fn new(a: f64, b: f64) -> Result<Self, OracleError> {
        if a.is_finite() && b.is_finite() && a < b {
            Ok(Interval { a, b })
        } else {
            Err(OracleError::InvalidInterval { a, b })
        }
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn len(&self) -> f64 {
        self.b - self.a
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.a + self.b)
    }

    pub fn contains(&self, t: f64) -> bool {
        self.a <= t && t <= self.b
    }

    /// Uniform partition into `panels` subintervals; the last one ends at `b` exactly.
    pub fn split(&self, panels: usize) -> Vec<Interval> {
        let n = panels.max(1);
        let h = self.len();
        (0..n)
            .map(|i| {
                let lo = if i == 0 { self.a } else { self.a + h * (i as f64 / n as f64) };
                let hi = if i + 1 == n { self.b } else { self.a + h * ((i + 1) as f64 / n as f64) };
                Interval { a: lo, b: hi }
            })
            .collect()
    }
}

/// Outcome of an oracle integration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleResult {
    pub value: f64,
    /// Estimated absolute error.
    pub achieved_tolerance: f64,
    pub evaluations: u64,
    pub converged: bool,
}

fn check_tol(tol: f64) -> Result<(), OracleError> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(OracleError::InvalidTolerance(tol))
    }
}

/// Neumaier-compensated running sum.
#[derive(Default, Clone, Copy)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

struct Simpson<'a, W: RealFunction + ?Sized> {
    w: &'a W,
    evaluations: u64,
    estimate: CompensatedSum,
    error: f64,
    converged: bool,
}

impl<W: RealFunction + ?Sized> Simpson<'_, W> {
    fn eval(&mut self, t: f64) -> Result<f64, EvalError> {
        self.evaluations += 1;
        self.w.eval(t)
    }

    #[allow(clippy::too_many_arguments)]
    fn panel(
        &mut self,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> Result<(), EvalError> {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = self.eval(lm)?;
        let frm = self.eval(rm)?;
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let diff = left + right - whole;
        // below this the two estimates differ by rounding only
        let noise = 64.0 * f64::EPSILON * (b - a) * [fa, flm, fm, frm, fb].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let settled = depth >= SIMPSON_MIN_DEPTH && (diff.abs() <= 15.0 * tol || diff.abs() <= noise);
        if settled || depth >= SIMPSON_MAX_DEPTH || m <= a || m >= b {
            if !settled {
                self.converged = false;
            }
            // Richardson: the two-panel estimate plus its error correction
            self.estimate.add(left + right + diff / 15.0);
            self.error += diff.abs() / 15.0;
            return Ok(());
        }
        self.panel(a, m, fa, flm, fm, left, 0.5 * tol, depth + 1)?;
        self.panel(m, b, fm, frm, fb, right, 0.5 * tol, depth + 1)
    }
}

/// `∫_a^b w(t) dt` by adaptive Simpson with Richardson-corrected panels.
///
/// A panel is accepted once its two-half estimate differs from the whole by
/// at most `15·tol_panel`, or by no more than rounding noise; panel
/// tolerances halve on every bisection so the accepted local estimates sum
/// to at most `tol`. Panels settled by the noise floor still add their
/// difference to the error estimate, so a `tol` below what double precision
/// can deliver comes back as not converged instead of recursing forever.
pub fn riemann_integral<W: RealFunction + ?Sized>(
    w: &W,
    iv: Interval,
    tol: f64,
) -> Result<OracleResult, OracleError> {
    check_tol(tol)?;
    let mut s = Simpson {
        w,
        evaluations: 0,
        estimate: CompensatedSum::default(),
        error: 0.0,
        converged: true,
    };
    let (a, b) = (iv.a, iv.b);
    let fa = s.eval(a)?;
    let fm = s.eval(iv.mid())?;
    let fb = s.eval(b)?;
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    s.panel(a, b, fa, fm, fb, whole, tol, 1)?;
    Ok(OracleResult {
        value: s.estimate.value(),
        achieved_tolerance: s.error,
        evaluations: s.evaluations,
        converged: s.converged && s.error <= tol,
    })
}

/// `(1/(b-a)) ∫_a^b g(t) dt`.
pub fn interval_mean<G: RealFunction + ?Sized>(
    g: &G,
    iv: Interval,
    tol: f64,
) -> Result<f64, OracleError> {
    let r = riemann_integral(g, iv, tol * iv.len())?;
    Ok(r.value / iv.len())
}

/// Offset used to read one-sided limits of the integrator at breakpoints.
pub fn jump_offset(iv: Interval) -> f64 {
    1e-12 * iv.len()
}

fn sorted_breakpoints(iv: Interval, breakpoints: &[f64]) -> Result<Vec<f64>, OracleError> {
    let mut pts = Vec::with_capacity(breakpoints.len());
    for &p in breakpoints {
        if !(p > iv.a && p < iv.b) {
            return Err(OracleError::InvalidBreakpoint { point: p, a: iv.a, b: iv.b });
        }
        pts.push(p);
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    Ok(pts)
}

/// One segment between consecutive breakpoints, with the integrator's
/// one-sided values at its ends.
struct Segment {
    lo: f64,
    hi: f64,
    u_lo: f64,
    u_hi: f64,
}

/// Midpoint-tagged Riemann–Stieltjes sums over dyadic partitions.
///
/// Each segment between breakpoints is split into `2^k` panels at level `k`.
/// At an interior breakpoint `c` the integrator is read at `c ± ε`
/// (`ε = 1e-12 (b - a)`) and the jump contributes `f(c)(u(c+ε) - u(c-ε))`.
/// Refinement stops once two successive levels differ by less than `tol`.
pub fn rs_sum_refinement<F, U>(
    f: &F,
    u: &U,
    iv: Interval,
    tol: f64,
    breakpoints: &[f64],
) -> Result<OracleResult, OracleError>
where
    F: RealFunction + ?Sized,
    U: RealFunction + ?Sized,
{
    check_tol(tol)?;
    let pts = sorted_breakpoints(iv, breakpoints)?;
    let eps = jump_offset(iv);
    let mut evaluations = 0u64;

    let mut jumps = CompensatedSum::default();
    for &c in &pts {
        let up = u.eval(c + eps)?;
        let down = u.eval(c - eps)?;
        jumps.add(f.eval(c)? * (up - down));
        evaluations += 3;
    }

    let mut nodes = Vec::with_capacity(pts.len() + 2);
    nodes.push(iv.a);
    nodes.extend_from_slice(&pts);
    nodes.push(iv.b);
    let mut segments = Vec::with_capacity(nodes.len() - 1);
    for w in nodes.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let u_lo = if lo == iv.a { u.eval(lo)? } else { u.eval(lo + eps)? };
        let u_hi = if hi == iv.b { u.eval(hi)? } else { u.eval(hi - eps)? };
        evaluations += 2;
        segments.push(Segment { lo, hi, u_lo, u_hi });
    }

    let mut previous: Option<f64> = None;
    let mut last_diff = f64::INFINITY;
    let mut value = 0.0;
    for level in 0..=RS_MAX_LEVELS {
        let panels = 1usize << level;
        let mut total = jumps;
        for seg in &segments {
            let h = (seg.hi - seg.lo) / panels as f64;
            let mut u_left = seg.u_lo;
            for i in 0..panels {
                let right = seg.lo + h * (i + 1) as f64;
                let u_right = if i + 1 == panels { seg.u_hi } else { u.eval(right)? };
                let tag = seg.lo + h * (i as f64 + 0.5);
                total.add(f.eval(tag)? * (u_right - u_left));
                u_left = u_right;
            }
            evaluations += 2 * panels as u64 - 1;
        }
        value = total.value();
        if let Some(prev) = previous {
            last_diff = (value - prev).abs();
            if level >= RS_MIN_LEVEL && last_diff < tol {
                return Ok(OracleResult {
                    value,
                    achieved_tolerance: last_diff,
                    evaluations,
                    converged: true,
                });
            }
        }
        previous = Some(value);
    }
    Ok(OracleResult {
        value,
        achieved_tolerance: last_diff,
        evaluations,
        converged: false,
    })
}

/// `∫_a^b f(t) du(t)`.
///
/// Always computed by [`rs_sum_refinement`]. When `u` has a symbolic first
/// derivative and no breakpoints are given, `∫ f u' dt` is computed by
/// adaptive Simpson as well; that value is returned, and the result only
/// counts as converged if both routes converged and agree within `10·tol`.
pub fn rs_integral<F, U>(
    f: &F,
    u: &U,
    iv: Interval,
    tol: f64,
    breakpoints: &[f64],
) -> Result<OracleResult, OracleError>
where
    F: RealFunction + ?Sized,
    U: RealFunction + ?Sized,
{
    let sums = rs_sum_refinement(f, u, iv, tol, breakpoints)?;
    let du = match u.first_derivative() {
        Some(du) if breakpoints.is_empty() => du,
        _ => return Ok(sums),
    };
    let product = |t: f64| -> Result<f64, EvalError> { Ok(f.eval(t)? * du.eval(t)?) };
    let smooth = match riemann_integral(&product, iv, tol) {
        Ok(r) => r,
        // u' may be undefined where u itself is fine (e.g. sqrt at 0)
        Err(OracleError::Eval(_)) => return Ok(sums),
        Err(e) => return Err(e),
    };
    let gap = (smooth.value - sums.value).abs();
    Ok(OracleResult {
        value: smooth.value,
        achieved_tolerance: smooth.achieved_tolerance.max(gap),
        evaluations: smooth.evaluations + sums.evaluations,
        converged: smooth.converged && sums.converged && gap <= 10.0 * tol,
    })
}
