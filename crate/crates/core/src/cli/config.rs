use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::TheoremId;
use crate::expr::{ParseError, ScalarFunction};
use crate::funcspace::DeclaredCertificate;
use crate::oracle::{Interval, OracleError, DEFAULT_TOL};
use crate::quadrature::{QuadratureError, RuleSpec};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config line {line}, column {column}: {message}")]
    Json {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("no config given; pass --config <path> or --config-inline <json>")]
    Missing,
    #[error("field `{field}`: {source}")]
    Expression {
        field: &'static str,
        #[source]
        source: ParseError,
    },
    #[error(transparent)]
    Interval(#[from] OracleError),
    #[error(transparent)]
    Rule(#[from] QuadratureError),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleKind {
    PhiFamily,
    MercerTrapezoid,
    MercerThreePoint,
    ClassicalTrapezoid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundRequest {
    pub theorem: TheoremId,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default)]
    pub n: Option<u32>,
    #[serde(default)]
    pub r: Option<f64>,
    /// Overrides the computed `‖S_u‖_p` in the lemma bounds.
    #[serde(default)]
    pub w_norm: Option<f64>,
}

fn default_p() -> f64 {
    2.0
}

impl BoundRequest {
    pub fn order(&self) -> u32 {
        self.n.unwrap_or(1)
    }

    pub fn holder_exponent(&self) -> f64 {
        self.r.unwrap_or(1.0)
    }

    /// Column label used in sweep tables, e.g. `thm3_p2_n2`.
    pub fn label(&self) -> String {
        let mut s = format!("{}_p{}", self.theorem.name(), self.p);
        match self.theorem {
            TheoremId::Thm2 | TheoremId::Thm3 | TheoremId::Thm4 | TheoremId::SimpsonCombined => {
                s.push_str(&format!("_n{}", self.order()));
            }
            TheoremId::Thm1 => s.push_str(&format!("_r{}", self.holder_exponent())),
            TheoremId::Lemma1 | TheoremId::Lemma2 => {}
        }
        s
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeclaredCertificates {
    #[serde(default)]
    pub f: Option<DeclaredCertificate>,
    #[serde(default)]
    pub u: Option<DeclaredCertificate>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default)]
    pub alpha: Option<Vec<f64>>,
    #[serde(default)]
    pub x: Option<Vec<f64>>,
    #[serde(default)]
    pub panels: Option<Vec<usize>>,
}

/// One experiment, as read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub f: String,
    pub u: String,
    pub a: f64,
    pub b: f64,
    #[serde(default = "default_kind")]
    pub kind: RuleKind,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub x: Option<f64>,
    #[serde(default)]
    pub theta: Option<f64>,
    #[serde(default)]
    pub panels: Option<usize>,
    #[serde(default)]
    pub bounds: Vec<BoundRequest>,
    #[serde(default)]
    pub certificates: DeclaredCertificates,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub breakpoints: Vec<f64>,
    #[serde(default)]
    pub output: Option<OutputFormat>,
    #[serde(default)]
    pub safety_factor: Option<f64>,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
}

fn default_kind() -> RuleKind {
    RuleKind::PhiFamily
}

/// A validated config with parsed functions.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub f: ScalarFunction,
    pub u: ScalarFunction,
    pub interval: Interval,
    pub rule: RuleSpec,
    pub tol: f64,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError::Json {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn from_path(path: &str) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    fn rule(&self, iv: Interval) -> Result<RuleSpec, ConfigError> {
        let rule = match self.kind {
            RuleKind::PhiFamily => RuleSpec::PhiFamily {
                alpha: self.alpha.unwrap_or(0.0),
                x: self.x.unwrap_or(iv.mid()),
            },
            RuleKind::MercerThreePoint => RuleSpec::MercerThreePoint {
                x: self.x.unwrap_or(iv.mid()),
            },
            RuleKind::MercerTrapezoid => RuleSpec::MercerTrapezoid,
            RuleKind::ClassicalTrapezoid => RuleSpec::ClassicalTrapezoid,
        };
        if self.kind != RuleKind::PhiFamily && self.alpha.is_some() {
            return Err(ConfigError::Invalid(format!(
                "`alpha` only applies to kind phi-family, not {}",
                rule.kind_name()
            )));
        }
        rule.validate(iv)?;
        Ok(rule)
    }

    pub fn validate(self, tol_override: Option<f64>, safety_override: Option<f64>) -> Result<Experiment, ConfigError> {
        let mut config = self;
        if let Some(s) = safety_override {
            config.safety_factor = Some(s);
        }
        let f = ScalarFunction::parse(&config.f).map_err(|source| ConfigError::Expression { field: "f", source })?;
        let u = ScalarFunction::parse(&config.u).map_err(|source| ConfigError::Expression { field: "u", source })?;
        let interval = Interval::new(config.a, config.b)?;
        let rule = config.rule(interval)?;
        let tol = tol_override.or(config.tol).unwrap_or(DEFAULT_TOL);
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(ConfigError::Invalid(format!("tol must be positive and finite, got {tol}")));
        }
        if let Some(s) = config.safety_factor {
            if !(s.is_finite() && s >= 1.0) {
                return Err(ConfigError::Invalid(format!("safety_factor must be >= 1, got {s}")));
            }
        }
        if let Some(0) = config.panels {
            return Err(ConfigError::Invalid("panels must be at least 1".into()));
        }
        if let Some(t) = config.theta {
            if !(0.0..=0.5).contains(&t) {
                return Err(ConfigError::Invalid(format!("theta must lie in [0, 1/2], got {t}")));
            }
        }
        for &c in &config.breakpoints {
            if !(c > config.a && c < config.b) {
                return Err(ConfigError::Invalid(format!("breakpoint {c} is not inside ({}, {})", config.a, config.b)));
            }
        }
        for req in &config.bounds {
            if req.n == Some(0) {
                return Err(ConfigError::Invalid(format!("{}: n must be at least 1", req.theorem.name())));
            }
        }
        if let Some(sweep) = &config.sweep {
            let empty = |name: &str| ConfigError::Invalid(format!("sweep.{name} must not be empty"));
            if sweep.alpha.as_ref().is_some_and(|v| v.is_empty()) {
                return Err(empty("alpha"));
            }
            if sweep.x.as_ref().is_some_and(|v| v.is_empty()) {
                return Err(empty("x"));
            }
            if let Some(p) = &sweep.panels {
                if p.is_empty() {
                    return Err(empty("panels"));
                }
                if p.contains(&0) {
                    return Err(ConfigError::Invalid("sweep.panels entries must be at least 1".into()));
                }
            }
        }
        Ok(Experiment {
            config,
            f,
            u,
            interval,
            rule,
            tol,
        })
    }
}

impl Experiment {
    /// Node offset for composite rules: `theta`, or the rule's node relative to `[a, b]`.
    pub fn theta_for(&self, x: f64) -> Result<f64, ConfigError> {
        if let Some(t) = self.config.theta {
            return Ok(t);
        }
        let t = (x - self.interval.a()) / self.interval.len();
        if (0.0..=0.5).contains(&t) {
            Ok(t)
        } else {
            Err(ConfigError::Invalid(format!(
                "node {x} lies past the midpoint; composite rules need an explicit theta in [0, 1/2]"
            )))
        }
    }

    pub fn safety_factor(&self) -> f64 {
        self.config.safety_factor.unwrap_or(crate::bounds::DEFAULT_SAFETY_FACTOR)
    }
}
