use std::io;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use super::config::BoundRequest;
use crate::bounds::BoundReport;
use crate::funcspace::RegularityCertificate;
use crate::oracle::{Interval, OracleResult};
use crate::quadrature::RuleSpec;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuleOutcome {
    #[serde(flatten)]
    pub rule: RuleSpec,
    pub panels: usize,
    pub theta: Option<f64>,
    pub value: f64,
    pub oracle: f64,
    /// `value - oracle`.
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundFailure {
    pub code: FailureCode,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureCode {
    InvalidParameters,
    NotApplicable,
    CertificateUnavailable,
    OracleFailed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundOutcome {
    pub request: BoundRequest,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<BoundReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<BoundFailure>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CertificateSet {
    pub f: RegularityCertificate,
    pub u: RegularityCertificate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareRow {
    pub alpha: f64,
    pub x: f64,
    pub panels: usize,
    pub value: Option<f64>,
    pub oracle: f64,
    pub abs_error: Option<f64>,
    pub bounds: Vec<Option<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckStatus {
    Pass,
    Fail,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckMode {
    /// `|computed - expected| <= tolerance`
    Absolute,
    /// `|computed - expected| <= tolerance * |expected|`
    Relative,
    /// `computed >= expected - tolerance`
    AtLeast,
}

impl CheckMode {
    pub fn name(self) -> &'static str {
        match self {
            CheckMode::Absolute => "absolute",
            CheckMode::Relative => "relative",
            CheckMode::AtLeast => "at-least",
        }
    }

    pub fn passes(self, computed: f64, expected: f64, tolerance: f64) -> bool {
        match self {
            CheckMode::Absolute => (computed - expected).abs() <= tolerance,
            CheckMode::Relative => (computed - expected).abs() <= tolerance * expected.abs(),
            CheckMode::AtLeast => computed >= expected - tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PaperCheck {
    pub id: &'static str,
    pub computed: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub mode: CheckMode,
    pub status: CheckStatus,
    /// The printed figure, when it differs from `expected`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub paper_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<Note>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Note {
    /// The printed trapezoid value includes the `f''(ξ)` correction for an unstated `ξ`.
    PrintedTrapezoidIncludesCorrection,
    /// The printed bound is smaller than the printed error it should dominate.
    PrintedBoundInconsistent,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "condition", rename_all = "kebab-case")]
pub enum ReportWarning {
    OracleNotConverged { quantity: String, achieved_tolerance: f64 },
    RowFailed { alpha: f64, x: f64, panels: usize, reason: String },
}

/// Everything a command produced, in output order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub command: &'static str,
    pub f: String,
    pub u: String,
    pub interval: Interval,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleResult>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub rules: Vec<RuleOutcome>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificates: Option<CertificateSet>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub bounds: Vec<BoundOutcome>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub bound_columns: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub rows: Vec<CompareRow>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<PaperCheck>,
    pub warnings: Vec<ReportWarning>,
}

impl ExperimentReport {
    pub fn new(command: &'static str, f: &str, u: &str, interval: Interval) -> Self {
        ExperimentReport {
            command,
            f: f.to_string(),
            u: u.to_string(),
            interval,
            oracle: None,
            rules: Vec::new(),
            certificates: None,
            bounds: Vec::new(),
            bound_columns: Vec::new(),
            rows: Vec::new(),
            checks: Vec::new(),
            warnings: Vec::new(),
        }
    }
}

/// Twelve significant digits, lowercase scientific notation.
pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.11e}")
    } else if v.is_nan() {
        "nan".to_string()
    } else if v > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

/// Pretty JSON whose floats all print through [`format_float`].
struct FixedFloatFormatter(PrettyFormatter<'static>);

impl Formatter for FixedFloatFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(format_float(value).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_array(writer)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object(writer)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(writer, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object_value(writer)
    }
}

pub fn to_json(report: &ExperimentReport) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, FixedFloatFormatter(PrettyFormatter::new()));
    report.serialize(&mut ser).expect("report serialization cannot fail");
    out.push(b'\n');
    String::from_utf8(out).expect("serde_json emits UTF-8")
}

fn opt(v: Option<f64>) -> String {
    v.map(format_float).unwrap_or_default()
}

fn opt_u32(v: Option<u32>) -> String {
    v.map(|n| n.to_string()).unwrap_or_default()
}

/// One CSV table per command; numeric and identifier columns only.
pub fn to_csv(report: &ExperimentReport) -> String {
    let mut lines: Vec<String> = Vec::new();
    match report.command {
        "compare" => {
            let mut header = vec!["alpha", "x", "panels", "value", "oracle", "abs_error"]
                .into_iter()
                .map(String::from)
                .collect::<Vec<_>>();
            header.extend(report.bound_columns.iter().cloned());
            lines.push(header.join(","));
            for row in &report.rows {
                let mut cells = vec![
                    format_float(row.alpha),
                    format_float(row.x),
                    row.panels.to_string(),
                    opt(row.value),
                    format_float(row.oracle),
                    opt(row.abs_error),
                ];
                cells.extend(row.bounds.iter().map(|b| opt(*b)));
                lines.push(cells.join(","));
            }
        }
        "bound" => {
            lines.push("theorem,p,n,r,alpha,x,bound,actual_error,valid,failure".to_string());
            for b in &report.bounds {
                let (bound, err, valid) = match &b.report {
                    Some(r) => (
                        format_float(r.bound_value),
                        opt(r.actual_error),
                        r.valid_vs_oracle.map(|v| v.to_string()).unwrap_or_default(),
                    ),
                    None => Default::default(),
                };
                let (alpha, x) = match &b.report {
                    Some(r) => (opt(r.inputs.alpha), opt(r.inputs.x)),
                    None => Default::default(),
                };
                let failure = b
                    .failure
                    .as_ref()
                    .map(|f| serde_json::to_value(f.code).unwrap().as_str().unwrap_or_default().to_string())
                    .unwrap_or_default();
                lines.push(
                    [
                        b.request.theorem.name().to_string(),
                        format_float(b.request.p),
                        opt_u32(b.request.n),
                        opt(b.request.r),
                        alpha,
                        x,
                        bound,
                        err,
                        valid,
                        failure,
                    ]
                    .join(","),
                );
            }
        }
        "paper-example" => {
            lines.push("check,computed,expected,tolerance,mode,status,paper_value".to_string());
            for c in &report.checks {
                let status = match c.status {
                    CheckStatus::Pass => "pass",
                    CheckStatus::Fail => "fail",
                };
                lines.push(
                    [
                        c.id.to_string(),
                        format_float(c.computed),
                        format_float(c.expected),
                        format_float(c.tolerance),
                        c.mode.name().to_string(),
                        status.to_string(),
                        opt(c.paper_value),
                    ]
                    .join(","),
                );
            }
        }
        _ => {
            lines.push("kind,alpha,x,panels,value,oracle,error".to_string());
            for r in &report.rules {
                let (alpha, x) = match r.rule {
                    RuleSpec::PhiFamily { alpha, x } => (Some(alpha), Some(x)),
                    RuleSpec::MercerThreePoint { x } => (None, Some(x)),
                    _ => (None, None),
                };
                lines.push(
                    [
                        r.rule.kind_name().to_string(),
                        opt(alpha),
                        opt(x),
                        r.panels.to_string(),
                        format_float(r.value),
                        format_float(r.oracle),
                        format_float(r.error),
                    ]
                    .join(","),
                );
            }
        }
    }
    let mut out = lines.join("\n");
    out.push('\n');
    out
}
