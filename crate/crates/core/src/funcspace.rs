//! Regularity certificates: the constants the error bounds consume.
//!
//! A constant is either declared by the user (`exact`) or estimated on a
//! grid (`estimated`). Grid estimates of suprema approach the true value
//! from below, which is why the bounds module inflates them by a safety
//! factor.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{DiffError, EvalError, RealFunction, ScalarFunction};
use crate::oracle::{riemann_integral, Interval, OracleError};

pub const DEFAULT_LIPSCHITZ_SAMPLES: usize = 2048;
pub const DEFAULT_HOLDER_SAMPLES: usize = 512;
pub const TV_MAX_LEVELS: u32 = 20;
/// Level at which the total-variation relative-change test starts.
pub const TV_MIN_LEVEL: u32 = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FuncSpaceError {
    #[error("exponent p must be finite and >= 1, got {0}")]
    InvalidExponent(f64),
    #[error("Hölder exponent r must lie in (0, 1], got {0}")]
    InvalidHolderExponent(f64),
    #[error("need at least 2 grid samples, got {0}")]
    TooFewSamples(usize),
    #[error("certificate value must be finite and >= 0, got {0}")]
    InvalidValue(f64),
    #[error("{quantity} did not converge (best estimate {best})")]
    NotConverged { quantity: &'static str, best: f64 },
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Diff(#[from] DiffError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Exact,
    Estimated,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Exact => "exact",
            Provenance::Estimated => "estimated",
        })
    }
}

/// A nonnegative, finite regularity constant and where it came from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertValue {
    pub value: f64,
    pub provenance: Provenance,
    pub detail: String,
}

impl CertValue {
    fn build(value: f64, provenance: Provenance, detail: String) -> Result<Self, FuncSpaceError> {
        if value.is_finite() && value >= 0.0 {
            Ok(CertValue {
                value,
                provenance,
                detail,
            })
        } else {
            Err(FuncSpaceError::InvalidValue(value))
        }
    }

    pub fn exact(value: f64, detail: impl Into<String>) -> Result<Self, FuncSpaceError> {
        Self::build(value, Provenance::Exact, detail.into())
    }

    pub fn estimated(value: f64, detail: impl Into<String>) -> Result<Self, FuncSpaceError> {
        Self::build(value, Provenance::Estimated, detail.into())
    }

    pub fn is_exact(&self) -> bool {
        self.provenance == Provenance::Exact
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HolderCert {
    pub h: CertValue,
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivNorm {
    pub n: u32,
    pub p: f64,
    pub value: CertValue,
}

/// Bundle of regularity constants for one function on one interval.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RegularityCertificate {
    pub lipschitz: Option<CertValue>,
    pub holder: Option<HolderCert>,
    pub total_variation: Option<CertValue>,
    pub deriv_norms: Vec<DerivNorm>,
}

impl RegularityCertificate {
    pub fn deriv_norm(&self, n: u32, p: f64) -> Option<&CertValue> {
        self.deriv_norms
            .iter()
            .find(|d| d.n == n && d.p == p)
            .map(|d| &d.value)
    }

    pub fn set_deriv_norm(&mut self, n: u32, p: f64, value: CertValue) {
        match self.deriv_norms.iter_mut().find(|d| d.n == n && d.p == p) {
            Some(slot) => slot.value = value,
            None => self.deriv_norms.push(DerivNorm { n, p, value }),
        }
    }

    /// Hölder constant for exponent `r`, falling back to the Lipschitz
    /// constant when `r = 1`.
    pub fn holder_for(&self, r: f64) -> Option<&CertValue> {
        match &self.holder {
            Some(h) if h.r == r => Some(&h.h),
            _ if r == 1.0 => self.lipschitz.as_ref(),
            _ => None,
        }
    }
}

/// User-declared constants as they appear in a config file. Every value
/// becomes an `exact` certificate.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeclaredCertificate {
    #[serde(default)]
    pub lipschitz: Option<f64>,
    #[serde(default)]
    pub holder: Option<DeclaredHolder>,
    #[serde(default)]
    pub total_variation: Option<f64>,
    #[serde(default)]
    pub deriv_norms: Vec<DeclaredDerivNorm>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeclaredHolder {
    pub h: f64,
    pub r: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeclaredDerivNorm {
    pub n: u32,
    pub p: f64,
    pub value: f64,
}

impl TryFrom<&DeclaredCertificate> for RegularityCertificate {
    type Error = FuncSpaceError;

    fn try_from(d: &DeclaredCertificate) -> Result<Self, Self::Error> {
        let declared = "user-declared";
        let mut cert = RegularityCertificate {
            lipschitz: d.lipschitz.map(|v| CertValue::exact(v, declared)).transpose()?,
            total_variation: d
                .total_variation
                .map(|v| CertValue::exact(v, declared))
                .transpose()?,
            ..Default::default()
        };
        if let Some(h) = d.holder {
            check_holder_exponent(h.r)?;
            cert.holder = Some(HolderCert {
                h: CertValue::exact(h.h, declared)?,
                r: h.r,
            });
        }
        for dn in &d.deriv_norms {
            check_exponent(dn.p)?;
            cert.set_deriv_norm(dn.n, dn.p, CertValue::exact(dn.value, declared)?);
        }
        Ok(cert)
    }
}

fn check_exponent(p: f64) -> Result<(), FuncSpaceError> {
    if p.is_finite() && p >= 1.0 {
        Ok(())
    } else {
        Err(FuncSpaceError::InvalidExponent(p))
    }
}

fn check_holder_exponent(r: f64) -> Result<(), FuncSpaceError> {
    if r > 0.0 && r <= 1.0 {
        Ok(())
    } else {
        Err(FuncSpaceError::InvalidHolderExponent(r))
    }
}

fn check_samples(samples: usize) -> Result<(), FuncSpaceError> {
    if samples >= 2 {
        Ok(())
    } else {
        Err(FuncSpaceError::TooFewSamples(samples))
    }
}

fn grid(iv: Interval, samples: usize) -> impl Iterator<Item = f64> {
    let n = samples - 1;
    (0..samples).map(move |i| {
        if i == n {
            iv.b()
        } else {
            iv.a() + iv.len() * (i as f64 / n as f64)
        }
    })
}

/// `(∫_a^b |w|^p dt)^(1/p)` for any evaluatable `w`, integrating piecewise
/// between `breakpoints`.
pub fn lp_norm_of<W: RealFunction + ?Sized>(
    w: &W,
    p: f64,
    iv: Interval,
    tol: f64,
    breakpoints: &[f64],
) -> Result<f64, FuncSpaceError> {
    check_exponent(p)?;
    let powered = |t: f64| -> Result<f64, EvalError> { Ok(w.eval(t)?.abs().powf(p)) };
    let mut nodes = vec![iv.a()];
    let mut inner: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&c| c > iv.a() && c < iv.b())
        .collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    nodes.extend(inner);
    nodes.push(iv.b());
    let pieces = nodes.len() - 1;
    let mut total = 0.0;
    for pair in nodes.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        let piece = Interval::new(lo, hi)?;
        // one-sided limits at piece ends, so a jump at a breakpoint stays outside
        let inside = |t: f64| {
            let t = if t <= lo { lo.next_up() } else if t >= hi { hi.next_down() } else { t };
            powered(t)
        };
        let r = riemann_integral(&inside, piece, tol / pieces as f64)?;
        if !r.converged {
            return Err(FuncSpaceError::NotConverged {
                quantity: "L^p norm",
                best: r.value.max(0.0).powf(1.0 / p),
            });
        }
        total += r.value;
    }
    Ok(total.max(0.0).powf(1.0 / p))
}

/// `‖w‖_p` on `iv`.
pub fn lp_norm(w: &ScalarFunction, p: f64, iv: Interval, tol: f64) -> Result<CertValue, FuncSpaceError> {
    check_exponent(p)?;
    if w.is_constant() {
        let c = w.eval(iv.a())?.abs();
        return CertValue::exact(c * iv.len().powf(1.0 / p), format!("constant function, p = {p}"));
    }
    let value = lp_norm_of(w, p, iv, tol, &[])?;
    CertValue::estimated(value, format!("adaptive Simpson of |w|^{p}, tol {tol:e}"))
}

/// `‖f^(n)‖_p` on `iv` via symbolic differentiation.
pub fn deriv_norm(
    f: &ScalarFunction,
    n: u32,
    p: f64,
    iv: Interval,
    tol: f64,
) -> Result<CertValue, FuncSpaceError> {
    let d = f.derivative(n as usize)?;
    let mut cert = lp_norm(&d, p, iv, tol)?;
    cert.detail = format!("derivative order {n}; {}", cert.detail);
    Ok(cert)
}

fn partition_nodes(iv: Interval, breakpoints: &[f64]) -> Result<Vec<f64>, FuncSpaceError> {
    let mut inner: Vec<f64> = breakpoints.to_vec();
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    if let Some(&c) = inner.iter().find(|&&c| !(c > iv.a() && c < iv.b())) {
        return Err(OracleError::InvalidBreakpoint {
            point: c,
            a: iv.a(),
            b: iv.b(),
        }
        .into());
    }
    let mut nodes = Vec::with_capacity(inner.len() + 2);
    nodes.push(iv.a());
    nodes.extend(inner);
    nodes.push(iv.b());
    Ok(nodes)
}

/// Variation sums `Σ|f(t_{i+1}) - f(t_i)|` on dyadic partitions seeded by
/// `breakpoints`, one entry per level `0..=max_level`.
pub fn total_variation_levels<F: RealFunction + ?Sized>(
    f: &F,
    iv: Interval,
    breakpoints: &[f64],
    max_level: u32,
) -> Result<Vec<f64>, FuncSpaceError> {
    let nodes = partition_nodes(iv, breakpoints)?;
    let mut levels = Vec::with_capacity(max_level as usize + 1);
    for level in 0..=max_level {
        levels.push(variation_sum(f, &nodes, 1usize << level)?);
    }
    Ok(levels)
}

fn variation_sum<F: RealFunction + ?Sized>(
    f: &F,
    nodes: &[f64],
    panels: usize,
) -> Result<f64, FuncSpaceError> {
    let mut sum = 0.0;
    for seg in nodes.windows(2) {
        let (lo, hi) = (seg[0], seg[1]);
        let h = hi - lo;
        let mut prev = f.eval(lo)?;
        for i in 1..=panels {
            let t = if i == panels { hi } else { lo + h * (i as f64 / panels as f64) };
            let cur = f.eval(t)?;
            sum += (cur - prev).abs();
            prev = cur;
        }
    }
    Ok(sum)
}

/// Total variation `⋁_a^b f` from refining dyadic partitions.
///
/// The estimate is the running maximum over levels, so it never decreases
/// under refinement and converges to the variation from below.
pub fn estimate_total_variation<F: RealFunction + ?Sized>(
    f: &F,
    iv: Interval,
    tol: f64,
    breakpoints: &[f64],
) -> Result<CertValue, FuncSpaceError> {
    let nodes = partition_nodes(iv, breakpoints)?;

    let mut best = 0.0f64;
    let mut previous: Option<f64> = None;
    for level in 0..=TV_MAX_LEVELS {
        let sum = variation_sum(f, &nodes, 1usize << level)?;
        let current = best.max(sum);
        if let Some(prev) = previous {
            let change = current - prev;
            let settled = change <= tol * current || (current == 0.0 && prev == 0.0);
            if level >= TV_MIN_LEVEL && settled {
                return CertValue::estimated(
                    current,
                    format!(
                        "dyadic variation sums, {} panels per segment; converges from below",
                        1usize << level
                    ),
                );
            }
        }
        best = current;
        previous = Some(current);
    }
    Err(FuncSpaceError::NotConverged {
        quantity: "total variation",
        best,
    })
}

/// Largest `|f(t_{i+1}) - f(t_i)| / (t_{i+1} - t_i)` over a uniform grid.
pub fn lipschitz_difference_quotient<F: RealFunction + ?Sized>(
    f: &F,
    iv: Interval,
    samples: usize,
) -> Result<f64, FuncSpaceError> {
    check_samples(samples)?;
    let pts: Vec<f64> = grid(iv, samples).collect();
    let vals = pts.iter().map(|&t| f.eval(t)).collect::<Result<Vec<_>, _>>()?;
    let mut best = 0.0f64;
    for i in 0..pts.len() - 1 {
        best = best.max((vals[i + 1] - vals[i]).abs() / (pts[i + 1] - pts[i]));
    }
    Ok(best)
}

fn max_abs_on_grid(g: &ScalarFunction, iv: Interval, samples: usize) -> Result<f64, EvalError> {
    let mut best = 0.0f64;
    for t in grid(iv, samples) {
        best = best.max(g.eval(t)?.abs());
    }
    Ok(best)
}

/// Lipschitz constant `sup |f(y) - f(z)| / |y - z|` estimated on a grid.
///
/// With a usable symbolic derivative this is `max |f'|` over a grid of
/// `samples` points and over the grid doubled once; otherwise the largest
/// adjacent difference quotient on the same two grids.
pub fn estimate_lipschitz(
    f: &ScalarFunction,
    iv: Interval,
    samples: usize,
) -> Result<CertValue, FuncSpaceError> {
    check_samples(samples)?;
    let doubled = 2 * samples - 1;
    if let Ok(df) = f.derivative(1) {
        let coarse = max_abs_on_grid(&df, iv, samples);
        let fine = max_abs_on_grid(&df, iv, doubled);
        if let (Ok(c), Ok(d)) = (coarse, fine) {
            return CertValue::estimated(
                c.max(d),
                format!("max |f'| on grids of {samples} and {doubled} points"),
            );
        }
    }
    let c = lipschitz_difference_quotient(f, iv, samples)?;
    let d = lipschitz_difference_quotient(f, iv, doubled)?;
    CertValue::estimated(
        c.max(d),
        format!("max adjacent difference quotient on grids of {samples} and {doubled} points"),
    )
}

/// Hölder constant `sup |f(y) - f(z)| / |y - z|^r` over all grid pairs.
pub fn estimate_holder<F: RealFunction + ?Sized>(
    f: &F,
    r: f64,
    iv: Interval,
    samples: usize,
) -> Result<CertValue, FuncSpaceError> {
    check_holder_exponent(r)?;
    check_samples(samples)?;
    let pts: Vec<f64> = grid(iv, samples).collect();
    let vals = pts.iter().map(|&t| f.eval(t)).collect::<Result<Vec<_>, _>>()?;
    let mut best = 0.0f64;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let q = (vals[j] - vals[i]).abs() / (pts[j] - pts[i]).powf(r);
            best = best.max(q);
        }
    }
    CertValue::estimated(best, format!("max over all pairs of a {samples}-point grid, r = {r}"))
}

/// Smallest value of `f` on a uniform grid; used for advisory positivity checks.
pub fn grid_minimum<F: RealFunction + ?Sized>(
    f: &F,
    iv: Interval,
    samples: usize,
) -> Result<f64, FuncSpaceError> {
    check_samples(samples)?;
    let mut low = f64::INFINITY;
    for t in grid(iv, samples) {
        low = low.min(f.eval(t)?);
    }
    Ok(low)
}
