//! The blended two-point rule family `Φ_α`, its kernel, its error, and the
//! reference rules it is compared against.
//!
//! For `f` integrated against `u` on `[a, b]` with `m = (a+b)/2`:
//!
//! ```text
//! Φ_α(f,u;x) = (1-α){[u(m)-u(a)] f(x) + [u(b)-u(m)] f(a+b-x)}
//!            +   α {[u(x)-u(a)] f(a) + [u(b)-u(x)] f(b)}
//! ```
//!
//! `α = 0` is a symmetric two-point (Ostrowski-type) rule, `α = 1` a
//! trapezoid rule whose weights are split at `u(x)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{EvalError, RealFunction};
use crate::oracle::{interval_mean, rs_integral, Interval, OracleError};

/// Relative slack allowed when checking a node against `(a+b)/2` or `b`.
pub const NODE_SLACK: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadratureError {
    #[error("alpha must lie in [0, 1], got {0}")]
    InvalidAlpha(f64),
    #[error("node x = {x} outside admissible range [{lo}, {hi}]")]
    InvalidNode { x: f64, lo: f64, hi: f64 },
    #[error("theta must lie in [0, 1/2], got {0}")]
    InvalidTheta(f64),
    #[error("composite rule needs at least one panel")]
    NoPanels,
    #[error("kernel argument t = {t} outside [{a}, {b}]")]
    OutsideInterval { t: f64, a: f64, b: f64 },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// A single quadrature rule on one interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RuleSpec {
    PhiFamily { alpha: f64, x: f64 },
    MercerTrapezoid,
    MercerThreePoint { x: f64 },
    ClassicalTrapezoid,
}

impl RuleSpec {
    pub fn kind_name(&self) -> &'static str {
        match self {
            RuleSpec::PhiFamily { .. } => "phi-family",
            RuleSpec::MercerTrapezoid => "mercer-trapezoid",
            RuleSpec::MercerThreePoint { .. } => "mercer-three-point",
            RuleSpec::ClassicalTrapezoid => "classical-trapezoid",
        }
    }

    pub fn validate(&self, iv: Interval) -> Result<(), QuadratureError> {
        match *self {
            RuleSpec::PhiFamily { alpha, x } => check_phi_node(iv, alpha, x),
            RuleSpec::MercerThreePoint { x } => {
                if x > iv.a() && x < iv.b() {
                    Ok(())
                } else {
                    Err(QuadratureError::InvalidNode {
                        x,
                        lo: iv.a(),
                        hi: iv.b(),
                    })
                }
            }
            RuleSpec::MercerTrapezoid | RuleSpec::ClassicalTrapezoid => Ok(()),
        }
    }

    /// Apply the rule to `∫ f du`. Mercer rules read `u` as their weight `g`.
    pub fn apply<F, U>(&self, f: &F, u: &U, iv: Interval, tol: f64) -> Result<f64, QuadratureError>
    where
        F: RealFunction + ?Sized,
        U: RealFunction + ?Sized,
    {
        match *self {
            RuleSpec::PhiFamily { alpha, x } => phi_alpha(f, u, iv, alpha, x),
            RuleSpec::MercerTrapezoid => mercer_trapezoid(f, u, iv, tol),
            RuleSpec::MercerThreePoint { x } => mercer_three_point(f, u, iv, x, tol),
            RuleSpec::ClassicalTrapezoid => classical_trapezoid(f, iv),
        }
    }
}

/// Admissible node range for `Φ_α`: `[a, m]` when `α < 1`, `[a, b]` when `α = 1`.
pub fn node_range(iv: Interval, alpha: f64) -> (f64, f64) {
    if alpha == 1.0 {
        (iv.a(), iv.b())
    } else {
        (iv.a(), iv.mid())
    }
}

fn check_alpha(alpha: f64) -> Result<(), QuadratureError> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(QuadratureError::InvalidAlpha(alpha))
    }
}

fn check_phi_node(iv: Interval, alpha: f64, x: f64) -> Result<(), QuadratureError> {
    check_alpha(alpha)?;
    let (lo, hi) = node_range(iv, alpha);
    let slack = NODE_SLACK * iv.len();
    if x >= lo && x <= hi + slack {
        Ok(())
    } else {
        Err(QuadratureError::InvalidNode { x, lo, hi })
    }
}

/// Outcome of applying a rule, optionally checked against the oracle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureResult {
    pub value: f64,
    pub rule: RuleSpec,
    pub oracle_value: Option<f64>,
    /// `value - oracle_value`.
    pub actual_error: Option<f64>,
    pub oracle_converged: Option<bool>,
}

/// `Φ_α(f, u; x)` on `iv`.
pub fn phi_alpha<F, U>(f: &F, u: &U, iv: Interval, alpha: f64, x: f64) -> Result<f64, QuadratureError>
where
    F: RealFunction + ?Sized,
    U: RealFunction + ?Sized,
{
    check_phi_node(iv, alpha, x)?;
    let (a, b) = (iv.a(), iv.b());
    let ua = u.eval(a)?;
    let ub = u.eval(b)?;
    let two_point = if alpha < 1.0 {
        let um = u.eval(iv.mid())?;
        (um - ua) * f.eval(x)? + (ub - um) * f.eval(a + b - x)?
    } else {
        0.0
    };
    let trapezoid = if alpha > 0.0 {
        let ux = u.eval(x)?;
        (ux - ua) * f.eval(a)? + (ub - ux) * f.eval(b)?
    } else {
        0.0
    };
    Ok((1.0 - alpha) * two_point + alpha * trapezoid)
}

fn kernel_unchecked<U>(u: &U, iv: Interval, alpha: f64, x: f64, t: f64) -> Result<f64, EvalError>
where
    U: RealFunction + ?Sized,
{
    let (a, b) = (iv.a(), iv.b());
    let ut = u.eval(t)?;
    let anchor = if t <= x {
        a
    } else if t <= a + b - x {
        iv.mid()
    } else {
        b
    };
    let blended = if alpha < 1.0 {
        (1.0 - alpha) * (ut - u.eval(anchor)?)
    } else {
        0.0
    };
    let shifted = if alpha > 0.0 {
        alpha * (ut - u.eval(x)?)
    } else {
        0.0
    };
    Ok(blended + shifted)
}

/// The kernel `S_u(t; x)` on `[a,x]`, `(x, a+b-x]`, `(a+b-x, b]`.
pub fn kernel_value<U>(u: &U, iv: Interval, alpha: f64, x: f64, t: f64) -> Result<f64, QuadratureError>
where
    U: RealFunction + ?Sized,
{
    check_phi_node(iv, alpha, x)?;
    if !iv.contains(t) {
        return Err(QuadratureError::OutsideInterval {
            t,
            a: iv.a(),
            b: iv.b(),
        });
    }
    Ok(kernel_unchecked(u, iv, alpha, x, t)?)
}

/// `t ↦ S_u(t; x)` as an evaluatable function, for integration by the oracle.
pub fn kernel<'a, U>(
    u: &'a U,
    iv: Interval,
    alpha: f64,
    x: f64,
) -> Result<impl Fn(f64) -> Result<f64, EvalError> + Sync + 'a, QuadratureError>
where
    U: RealFunction + ?Sized,
{
    check_phi_node(iv, alpha, x)?;
    Ok(move |t: f64| kernel_unchecked(u, iv, alpha, x, t))
}

/// `Φ_α` together with the reference integral and the error `E_α = Φ_α - ∫ f du`.
pub fn error_term<F, U>(
    f: &F,
    u: &U,
    iv: Interval,
    alpha: f64,
    x: f64,
    tol: f64,
    breakpoints: &[f64],
) -> Result<QuadratureResult, QuadratureError>
where
    F: RealFunction + ?Sized,
    U: RealFunction + ?Sized,
{
    let value = phi_alpha(f, u, iv, alpha, x)?;
    let oracle = rs_integral(f, u, iv, tol, breakpoints)?;
    Ok(QuadratureResult {
        value,
        rule: RuleSpec::PhiFamily { alpha, x },
        oracle_value: Some(oracle.value),
        actual_error: Some(value - oracle.value),
        oracle_converged: Some(oracle.converged),
    })
}

/// Deterministic pairwise sum: halves are reduced left then right.
pub(crate) fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        n => {
            let (l, r) = values.split_at(n / 2);
            pairwise_sum(l) + pairwise_sum(r)
        }
    }
}

/// `Φ_α` summed over `panels` equal subintervals, node at `a_i + θ(b_i - a_i)`.
pub fn composite_phi_alpha<F, U>(
    f: &F,
    u: &U,
    iv: Interval,
    panels: usize,
    alpha: f64,
    theta: f64,
) -> Result<f64, QuadratureError>
where
    F: RealFunction + ?Sized,
    U: RealFunction + ?Sized,
{
    check_alpha(alpha)?;
    if !(0.0..=0.5).contains(&theta) {
        return Err(QuadratureError::InvalidTheta(theta));
    }
    if panels == 0 {
        return Err(QuadratureError::NoPanels);
    }
    let pieces = iv.split(panels);
    let values = pieces
        .par_iter()
        .map(|p| {
            let x = if theta == 0.5 { p.mid() } else { p.a() + theta * p.len() };
            phi_alpha(f, u, *p, alpha, x)
        })
        .collect::<Result<Vec<f64>, _>>()?;
    Ok(pairwise_sum(&values))
}

/// `[G - g(a)] f(a) + [g(b) - G] f(b)` with `G` the mean of `g` on `[a, b]`.
pub fn mercer_trapezoid<F, G>(f: &F, g: &G, iv: Interval, tol: f64) -> Result<f64, QuadratureError>
where
    F: RealFunction + ?Sized,
    G: RealFunction + ?Sized,
{
    let mean = interval_mean(g, iv, tol)?;
    let (a, b) = (iv.a(), iv.b());
    Ok((mean - g.eval(a)?) * f.eval(a)? + (g.eval(b)? - mean) * f.eval(b)?)
}

/// Three-point rule with weights built from the means of `g` on `[a, x]` and `[x, b]`.
pub fn mercer_three_point<F, G>(f: &F, g: &G, iv: Interval, x: f64, tol: f64) -> Result<f64, QuadratureError>
where
    F: RealFunction + ?Sized,
    G: RealFunction + ?Sized,
{
    RuleSpec::MercerThreePoint { x }.validate(iv)?;
    let (a, b) = (iv.a(), iv.b());
    let left = interval_mean(g, Interval::new(a, x)?, tol)?;
    let right = interval_mean(g, Interval::new(x, b)?, tol)?;
    Ok((left - g.eval(a)?) * f.eval(a)? + (right - left) * f.eval(x)? + (g.eval(b)? - right) * f.eval(b)?)
}

/// `(b - a)(f(a) + f(b))/2`, without the `f''(ξ)` correction.
pub fn classical_trapezoid<F>(f: &F, iv: Interval) -> Result<f64, QuadratureError>
where
    F: RealFunction + ?Sized,
{
    Ok(iv.len() * (f.eval(iv.a())? + f.eval(iv.b())?) / 2.0)
}
