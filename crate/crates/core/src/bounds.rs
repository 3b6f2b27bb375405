//! A-priori bounds on `|E_α(f,u;x)|` and their comparison with the oracle.
//!
//! Every bound is computed from certificates exactly as its formula is
//! printed. Unmet hypotheses become warnings on the report; only malformed
//! parameters (bad `p`, `n`, `r` or node) are errors.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{DiffError, RealFunction, ScalarFunction};
use crate::funcspace::{grid_minimum, CertValue, FuncSpaceError, Provenance};
use crate::oracle::Interval;
use crate::quadrature::{error_term, QuadratureError, NODE_SLACK};

pub const DEFAULT_SAFETY_FACTOR: f64 = 1.05;
/// Grid size for the advisory positivity scan.
pub const POSITIVITY_SAMPLES: usize = 1024;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundError {
    #[error("exponent p = {p} not allowed here (need p {need})")]
    InvalidExponent { p: f64, need: &'static str },
    #[error("Hölder exponent r must lie in (0, 1], got {0}")]
    InvalidHolderExponent(f64),
    #[error("derivative order n must be at least 1")]
    ZeroOrder,
    #[error("alpha must lie in [0, 1], got {0}")]
    InvalidAlpha(f64),
    #[error("node x = {x} outside [{lo}, {hi}]")]
    InvalidNode { x: f64, lo: f64, hi: f64 },
    #[error("safety factor must be finite and >= 1, got {0}")]
    InvalidSafetyFactor(f64),
    #[error("report was computed for {field} = {report}, validation asked for {requested}")]
    RuleMismatch {
        field: &'static str,
        report: f64,
        requested: f64,
    },
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    FuncSpace(#[from] FuncSpaceError),
    #[error(transparent)]
    Diff(#[from] DiffError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TheoremId {
    Lemma1,
    Lemma2,
    Thm1,
    Thm2,
    Thm3,
    Thm4,
    SimpsonCombined,
}

impl TheoremId {
    pub const ALL: [TheoremId; 7] = [
        TheoremId::Lemma1,
        TheoremId::Lemma2,
        TheoremId::Thm1,
        TheoremId::Thm2,
        TheoremId::Thm3,
        TheoremId::Thm4,
        TheoremId::SimpsonCombined,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TheoremId::Lemma1 => "lemma1",
            TheoremId::Lemma2 => "lemma2",
            TheoremId::Thm1 => "thm1",
            TheoremId::Thm2 => "thm2",
            TheoremId::Thm3 => "thm3",
            TheoremId::Thm4 => "thm4",
            TheoremId::SimpsonCombined => "simpson-combined",
        }
    }

    /// The `(α, x)` the theorem's error term is stated for, if it is fixed.
    pub fn fixed_alpha(self) -> Option<f64> {
        match self {
            TheoremId::Thm3 => Some(0.0),
            TheoremId::Thm4 => Some(1.0),
            TheoremId::SimpsonCombined => Some(1.0 / 3.0),
            _ => None,
        }
    }
}

/// A certificate as it entered a bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateUse {
    pub role: &'static str,
    pub supplied: f64,
    pub provenance: Provenance,
    /// `supplied`, times the safety factor when estimated.
    pub used: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundInputs {
    pub p: f64,
    pub q: Option<f64>,
    pub n: Option<u32>,
    pub r: Option<f64>,
    pub alpha: Option<f64>,
    pub x: Option<f64>,
    pub interval: Interval,
    pub certificates: Vec<CertificateUse>,
    pub safety_factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "warning", rename_all = "kebab-case")]
pub enum BoundWarning {
    /// A grid-estimated constant was inflated by the safety factor.
    EstimatedCertificate { role: &'static str, factor: f64 },
    /// A function the theorem requires to be positive is not, on a grid scan.
    NotPositive {
        function: &'static str,
        derivative: u32,
        minimum: f64,
    },
    /// Positivity could not be checked (derivative unavailable or not evaluatable).
    PositivityUnchecked { function: &'static str, reason: String },
    /// The reference integral did not meet its tolerance.
    OracleNotConverged,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub theorem: TheoremId,
    pub bound_value: f64,
    pub inputs: BoundInputs,
    pub warnings: Vec<BoundWarning>,
    pub valid_vs_oracle: Option<bool>,
    pub actual_error: Option<f64>,
}

/// `(p sin(π/p) / (π (p-1)^{1/p}))^n`, defined for `p > 1`.
pub fn bw_coefficient(p: f64, n: u32) -> Result<f64, BoundError> {
    check_p_strict(p)?;
    check_order(n)?;
    let base = p * (PI / p).sin() / (PI * (p - 1.0).powf(1.0 / p));
    Ok(base.powi(n as i32))
}

/// Conjugate exponent `p/(p-1)`.
pub fn conjugate(p: f64) -> f64 {
    p / (p - 1.0)
}

fn check_p(p: f64) -> Result<(), BoundError> {
    if p.is_finite() && p >= 1.0 {
        Ok(())
    } else {
        Err(BoundError::InvalidExponent { p, need: ">= 1" })
    }
}

fn check_p_strict(p: f64) -> Result<(), BoundError> {
    if p.is_finite() && p > 1.0 {
        Ok(())
    } else {
        Err(BoundError::InvalidExponent { p, need: "> 1" })
    }
}

fn check_order(n: u32) -> Result<(), BoundError> {
    if n >= 1 {
        Ok(())
    } else {
        Err(BoundError::ZeroOrder)
    }
}

fn check_alpha(alpha: f64) -> Result<(), BoundError> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(BoundError::InvalidAlpha(alpha))
    }
}

fn check_node(x: f64, lo: f64, hi: f64, iv: Interval) -> Result<(), BoundError> {
    let slack = NODE_SLACK * iv.len();
    if x >= lo - slack && x <= hi + slack {
        Ok(())
    } else {
        Err(BoundError::InvalidNode { x, lo, hi })
    }
}

/// Computes bounds, inflating estimated certificates by a safety factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundCalculator {
    safety_factor: f64,
}

impl Default for BoundCalculator {
    fn default() -> Self {
        BoundCalculator {
            safety_factor: DEFAULT_SAFETY_FACTOR,
        }
    }
}

struct Draft {
    certificates: Vec<CertificateUse>,
    warnings: Vec<BoundWarning>,
    factor: f64,
}

impl Draft {
    fn new(factor: f64) -> Self {
        Draft {
            certificates: Vec::new(),
            warnings: Vec::new(),
            factor,
        }
    }

    fn take(&mut self, role: &'static str, cert: &CertValue) -> f64 {
        let used = match cert.provenance {
            Provenance::Exact => cert.value,
            Provenance::Estimated => {
                self.warnings.push(BoundWarning::EstimatedCertificate {
                    role,
                    factor: self.factor,
                });
                cert.value * self.factor
            }
        };
        self.certificates.push(CertificateUse {
            role,
            supplied: cert.value,
            provenance: cert.provenance,
            used,
        });
        used
    }

    #[allow(clippy::too_many_arguments)]
    fn finish(
        self,
        theorem: TheoremId,
        bound_value: f64,
        p: f64,
        n: Option<u32>,
        r: Option<f64>,
        alpha: Option<f64>,
        x: Option<f64>,
        interval: Interval,
    ) -> BoundReport {
        BoundReport {
            theorem,
            bound_value,
            inputs: BoundInputs {
                p,
                q: (p > 1.0).then(|| conjugate(p)),
                n,
                r,
                alpha,
                x,
                interval,
                certificates: self.certificates,
                safety_factor: self.factor,
            },
            warnings: self.warnings,
            valid_vs_oracle: None,
            actual_error: None,
        }
    }
}

impl BoundCalculator {
    pub fn new(safety_factor: f64) -> Result<Self, BoundError> {
        if safety_factor.is_finite() && safety_factor >= 1.0 {
            Ok(BoundCalculator { safety_factor })
        } else {
            Err(BoundError::InvalidSafetyFactor(safety_factor))
        }
    }

    pub fn safety_factor(&self) -> f64 {
        self.safety_factor
    }

    /// `L (b-a)^{1-1/p} ‖w‖_p` for `|∫ w dν|` with `ν` `L`-Lipschitz.
    pub fn lemma1(
        &self,
        l: &CertValue,
        p: f64,
        iv: Interval,
        w_norm: &CertValue,
    ) -> Result<BoundReport, BoundError> {
        check_p(p)?;
        let mut d = Draft::new(self.safety_factor);
        let l = d.take("lip_nu", l);
        let w = d.take("norm_w", w_norm);
        let value = l * iv.len().powf(1.0 - 1.0 / p) * w;
        Ok(d.finish(TheoremId::Lemma1, value, p, None, None, None, None, iv))
    }

    /// `lip(ν) (⋁ν)^{1-1/p} ‖w‖_p`.
    pub fn lemma2(
        &self,
        lip: &CertValue,
        variation: &CertValue,
        p: f64,
        iv: Interval,
        w_norm: &CertValue,
    ) -> Result<BoundReport, BoundError> {
        check_p(p)?;
        let mut d = Draft::new(self.safety_factor);
        let lip = d.take("lip_nu", lip);
        let v = d.take("variation_nu", variation);
        let w = d.take("norm_w", w_norm);
        let value = lip * v.powf(1.0 - 1.0 / p) * w;
        Ok(d.finish(TheoremId::Lemma2, value, p, None, None, None, None, iv))
    }

    /// Hölder-`u`, Lipschitz-`f` bound for any `α` and `x ∈ [a, (a+b)/2]`.
    #[allow(clippy::too_many_arguments)]
    pub fn thm1(
        &self,
        h: &CertValue,
        r: f64,
        lipf: &CertValue,
        vf: &CertValue,
        p: f64,
        iv: Interval,
        alpha: f64,
        x: f64,
    ) -> Result<BoundReport, BoundError> {
        check_p(p)?;
        check_alpha(alpha)?;
        if !(r > 0.0 && r <= 1.0) {
            return Err(BoundError::InvalidHolderExponent(r));
        }
        check_node(x, iv.a(), iv.mid(), iv)?;
        let mut d = Draft::new(self.safety_factor);
        let h = d.take("holder_u", h);
        let lipf = d.take("lip_f", lipf);
        let vf = d.take("variation_f", vf);
        let value = h * lipf * vf.powf(1.0 - 1.0 / p) * thm1_bracket(p, r, iv, alpha, x);
        Ok(d.finish(TheoremId::Thm1, value, p, None, Some(r), Some(alpha), Some(x), iv))
    }

    /// Lipschitz-`f`, `u ∈ 𝔘^p` bound for any `α` and `x ∈ [a, (a+b)/2]`.
    #[allow(clippy::too_many_arguments)]
    pub fn thm2(
        &self,
        lipf: &CertValue,
        vf: &CertValue,
        u_deriv_norm: &CertValue,
        p: f64,
        n: u32,
        iv: Interval,
        alpha: f64,
        x: f64,
    ) -> Result<BoundReport, BoundError> {
        let bw = bw_coefficient(p, n)?;
        check_alpha(alpha)?;
        check_node(x, iv.a(), iv.mid(), iv)?;
        let mut d = Draft::new(self.safety_factor);
        let lipf = d.take("lip_f", lipf);
        let vf = d.take("variation_f", vf);
        let un = d.take("norm_u_deriv", u_deriv_norm);
        let value = lipf * vf.powf(1.0 - 1.0 / p) * bw * thm2_bracket(n, iv, alpha, x) * un;
        Ok(d.finish(TheoremId::Thm2, value, p, Some(n), None, Some(alpha), Some(x), iv))
    }

    /// `|E_0|` bound for Lipschitz `u`, `f ∈ 𝔘^p`, `x ∈ [a, (a+b)/2]`.
    pub fn thm3(
        &self,
        lipu: &CertValue,
        f_deriv_norm: &CertValue,
        p: f64,
        n: u32,
        iv: Interval,
        x: f64,
    ) -> Result<BoundReport, BoundError> {
        let bw = bw_coefficient(p, n)?;
        check_node(x, iv.a(), iv.mid(), iv)?;
        let q = conjugate(p);
        let mut d = Draft::new(self.safety_factor);
        let lipu = d.take("lip_u", lipu);
        let fnorm = d.take("norm_f_deriv", f_deriv_norm);
        let (a, b) = (iv.a(), iv.b());
        let reach = (b - a) / 4.0 + (x - (3.0 * a + b) / 4.0).abs();
        let value = 2.0 * lipu * ((b - a) / 2.0).powf(1.0 / q) * bw * reach.powi(n as i32) * fnorm;
        Ok(d.finish(TheoremId::Thm3, value, p, Some(n), None, Some(0.0), Some(x), iv))
    }

    /// `|E_1|` bound for Lipschitz `u`, `f ∈ 𝔘^p`, any `x ∈ [a, b]`.
    pub fn thm4(
        &self,
        lipu: &CertValue,
        f_deriv_norm: &CertValue,
        p: f64,
        n: u32,
        iv: Interval,
        x: f64,
    ) -> Result<BoundReport, BoundError> {
        let bw = bw_coefficient(p, n)?;
        check_node(x, iv.a(), iv.b(), iv)?;
        let q = conjugate(p);
        let mut d = Draft::new(self.safety_factor);
        let lipu = d.take("lip_u", lipu);
        let fnorm = d.take("norm_f_deriv", f_deriv_norm);
        let reach = iv.len() / 2.0 + (x - iv.mid()).abs();
        let value = 2.0 * lipu * bw * reach.powf(n as f64 + 1.0 / q) * fnorm;
        Ok(d.finish(TheoremId::Thm4, value, p, Some(n), None, Some(1.0), Some(x), iv))
    }

    /// `|E_{1/3}((a+b)/2)|` bound from `E_{1/3} = (2/3)E_0 + (1/3)E_1`.
    pub fn simpson(
        &self,
        lipu: &CertValue,
        f_deriv_norm: &CertValue,
        p: f64,
        n: u32,
        iv: Interval,
    ) -> Result<BoundReport, BoundError> {
        let bw = bw_coefficient(p, n)?;
        let q = conjugate(p);
        let mut d = Draft::new(self.safety_factor);
        let lipu = d.take("lip_u", lipu);
        let fnorm = d.take("norm_f_deriv", f_deriv_norm);
        let e = n as f64 + 1.0 / q;
        let value = lipu * iv.len().powf(e) / 2f64.powf(e - 1.0) * bw * fnorm;
        Ok(d.finish(
            TheoremId::SimpsonCombined,
            value,
            p,
            Some(n),
            None,
            Some(1.0 / 3.0),
            Some(iv.mid()),
            iv,
        ))
    }
}

fn thm1_bracket(p: f64, r: f64, iv: Interval, alpha: f64, x: f64) -> f64 {
    let (a, b) = (iv.a(), iv.b());
    let s = r * p + 1.0;
    let e = s / p;
    let k = s.powf(1.0 / p);
    let left = (x - a).max(0.0);
    let gap = (a + b - 2.0 * x).max(0.0);
    let to_mid = ((a + b) / 2.0 - x).max(0.0);
    let two_point = 2.0 * left.powf(e) / k + 2f64.powf(1.0 / p) * to_mid.powf(e) / k;
    let radicand = ((b - x).powf(s) - gap.powf(s)) / s;
    debug_assert!(radicand >= -1e-12 * (b - a).powf(s));
    let trapezoid = left.powf(e) / k + gap.powf(e) / k + radicand.max(0.0).powf(1.0 / p);
    (1.0 - alpha) * two_point + alpha * trapezoid
}

/// `(1-α)((b-a)/4 + |x-(3a+b)/4|)^n + α((b-a)/2 + |x-(a+b)/2|)^n`.
pub fn thm2_bracket(n: u32, iv: Interval, alpha: f64, x: f64) -> f64 {
    let (a, b) = (iv.a(), iv.b());
    let quarter = (b - a) / 4.0 + (x - (3.0 * a + b) / 4.0).abs();
    let half = (b - a) / 2.0 + (x - iv.mid()).abs();
    (1.0 - alpha) * quarter.powi(n as i32) + alpha * half.powi(n as i32)
}

/// Fill in the oracle error for the rule the report was computed for.
pub fn validate_bound<F, U>(
    report: &BoundReport,
    f: &F,
    u: &U,
    alpha: f64,
    x: f64,
    tol: f64,
    breakpoints: &[f64],
) -> Result<BoundReport, BoundError>
where
    F: RealFunction + ?Sized,
    U: RealFunction + ?Sized,
{
    if let Some(ra) = report.inputs.alpha {
        if ra != alpha {
            return Err(BoundError::RuleMismatch {
                field: "alpha",
                report: ra,
                requested: alpha,
            });
        }
    }
    if let Some(rx) = report.inputs.x {
        if rx != x {
            return Err(BoundError::RuleMismatch {
                field: "x",
                report: rx,
                requested: x,
            });
        }
    }
    let r = error_term(f, u, report.inputs.interval, alpha, x, tol, breakpoints)?;
    let err = r.actual_error.unwrap_or(f64::NAN);
    let mut out = report.clone();
    out.actual_error = Some(err);
    out.valid_vs_oracle = Some(err.abs() <= report.bound_value + tol);
    if r.oracle_converged == Some(false) {
        out.warnings.push(BoundWarning::OracleNotConverged);
    }
    Ok(out)
}

/// Advisory check of the positivity hypotheses behind the `L^p` bounds:
/// `u, u^(n) > 0` for thm2 and `f, f^(n) > 0` for thm3, thm4 and the Simpson bound.
pub fn hypothesis_warnings(
    theorem: TheoremId,
    f: &ScalarFunction,
    u: &ScalarFunction,
    n: u32,
    iv: Interval,
) -> Vec<BoundWarning> {
    let (name, g) = match theorem {
        TheoremId::Thm2 => ("u", u),
        TheoremId::Thm3 | TheoremId::Thm4 | TheoremId::SimpsonCombined => ("f", f),
        _ => return Vec::new(),
    };
    let mut out = Vec::new();
    for order in [0, n] {
        let scan = if order == 0 {
            grid_minimum(g, iv, POSITIVITY_SAMPLES)
        } else {
            g.derivative(order as usize)
                .map_err(FuncSpaceError::from)
                .and_then(|d| grid_minimum(&d, iv, POSITIVITY_SAMPLES))
        };
        match scan {
            Ok(min) if min > 0.0 => {}
            Ok(min) => out.push(BoundWarning::NotPositive {
                function: name,
                derivative: order,
                minimum: min,
            }),
            Err(e) => out.push(BoundWarning::PositivityUnchecked {
                function: name,
                reason: e.to_string(),
            }),
        }
    }
    out
}

/// The printed special cases of the bounds, as independent closed forms.
pub mod closed_form {
    use super::*;

    /// Hölder-`u` bound at `p = 2`.
    pub fn holder_l2(h: f64, r: f64, lipf: f64, vf: f64, iv: Interval, alpha: f64, x: f64) -> f64 {
        let (a, b) = (iv.a(), iv.b());
        let s = 2.0 * r + 1.0;
        let k = s.sqrt();
        let e = s / 2.0;
        let two_point = 2.0 * (x - a).powf(e) / k + 2f64.sqrt() * ((a + b) / 2.0 - x).powf(e) / k;
        let trapezoid = (x - a).powf(e) / k
            + (a + b - 2.0 * x).powf(e) / k
            + (((b - x).powf(s) - (a + b - 2.0 * x).powf(s)) / s).sqrt();
        h * lipf * vf.sqrt() * ((1.0 - alpha) * two_point + alpha * trapezoid)
    }

    /// Hölder-`u` bound at `p = 2`, `r = 1`.
    pub fn lipschitz_l2(h: f64, lipf: f64, vf: f64, iv: Interval, alpha: f64, x: f64) -> f64 {
        let (a, b) = (iv.a(), iv.b());
        let two_point = 2.0 * (x - a).powf(1.5) + 2f64.sqrt() * ((a + b) / 2.0 - x).powf(1.5);
        let trapezoid = (x - a).powf(1.5)
            + (a + b - 2.0 * x).powf(1.5)
            + ((b - x).powi(3) - (a + b - 2.0 * x).powi(3)).sqrt();
        h * lipf * vf.sqrt() * ((1.0 - alpha) * two_point + alpha * trapezoid) / 3f64.sqrt()
    }

    /// Hölder-`u` bound at `r = 1/p`.
    #[allow(clippy::too_many_arguments)]
    pub fn holder_reciprocal(h: f64, p: f64, lipf: f64, vf: f64, iv: Interval, alpha: f64, x: f64) -> f64 {
        let (a, b) = (iv.a(), iv.b());
        let e = 2.0 / p;
        let two_point = 2.0 * (x - a).powf(e) + 2f64.powf(1.0 / p) * ((a + b) / 2.0 - x).powf(e);
        let trapezoid = (x - a).powf(e)
            + (a + b - 2.0 * x).powf(e)
            + ((b - x).powi(2) - (a + b - 2.0 * x).powi(2)).powf(1.0 / p);
        h / 2f64.powf(1.0 / p)
            * lipf
            * vf.powf(1.0 - 1.0 / p)
            * ((1.0 - alpha) * two_point + alpha * trapezoid)
    }

    /// Lipschitz-`f`, `u ∈ 𝔘^p` bound at the midpoint node.
    pub fn two_point_midpoint(lipf: f64, vf: f64, u_norm: f64, p: f64, n: u32, iv: Interval) -> Result<f64, BoundError> {
        let bw = bw_coefficient(p, n)?;
        Ok(lipf * bw * (iv.len() / 2.0).powi(n as i32) * vf.powf(1.0 - 1.0 / p) * u_norm)
    }

    /// `|E_0|` bound at the node `(3a+b)/4`.
    pub fn quarter_node(lipu: f64, f_norm: f64, p: f64, n: u32, iv: Interval) -> Result<f64, BoundError> {
        let bw = bw_coefficient(p, n)?;
        let q = conjugate(p);
        let e = n as f64 + 1.0 / q;
        Ok(lipu * bw * iv.len().powf(e) / 2f64.powf(2.0 * n as f64 + 1.0 / q - 1.0) * f_norm)
    }

    /// `|E_1|` bound at the midpoint node.
    pub fn trapezoid_midpoint(lipu: f64, f_norm: f64, p: f64, n: u32, iv: Interval) -> Result<f64, BoundError> {
        let bw = bw_coefficient(p, n)?;
        let q = conjugate(p);
        let e = n as f64 + 1.0 / q;
        Ok(lipu * bw * iv.len().powf(e) / 2f64.powf(e - 1.0) * f_norm)
    }

    /// Quarter-node bound with `u(t) = t`, `p = 2` on `[0, 1/(2^n n!)]`.
    pub fn factorial_interval(n: u32, f_norm: f64) -> f64 {
        let len = 1.0 / (2f64.powi(n as i32) * factorial(n));
        2f64.sqrt() / (2.0 * PI).powi(n as i32) * len.powf(n as f64 + 0.5) * f_norm
    }

    /// `n!` as a float.
    pub fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }
}
