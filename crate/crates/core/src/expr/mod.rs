//! A small expression language in one variable `t`.
//!
//! Integrands and integrators are written as text (`exp(-t^2)`, `t^2 + 1`),
//! parsed into an [`Expr`] tree, evaluated pointwise, printed back, and
//! differentiated symbolically.
//!
//! Grammar, lowest to highest precedence:
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?          // right-associative
//! primary := number | 't' | name '(' expr ')' | '(' expr ')'
//! ```
//!
//! Function names: `exp`, `ln`, `sin`, `cos`, `sqrt`, `abs`, `erf`.

mod diff;
mod parse;
mod print;

use std::fmt;

use thiserror::Error;

use crate::oracle::erf;

pub use diff::differentiate;
pub use parse::{parse_expression, ParseError};

/// Built-in unary functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Exp,
    Ln,
    Sin,
    Cos,
    Sqrt,
    Abs,
    Erf,
}

impl Func {
    pub const ALL: [Func; 7] = [
        Func::Exp,
        Func::Ln,
        Func::Sin,
        Func::Cos,
        Func::Sqrt,
        Func::Abs,
        Func::Erf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Erf => "erf",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }
}

/// Expression tree node. Binary nodes own exactly two children, unary nodes
/// one, leaves none.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var,
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Call(Func, Box<Expr>),
}

/// Pointwise evaluation failures.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("ln of non-positive value {0} at t = {1}")]
    LnDomain(f64, f64),
    #[error("sqrt of negative value {0} at t = {1}")]
    SqrtDomain(f64, f64),
    #[error("division by zero at t = {0}")]
    DivisionByZero(f64),
    #[error("negative base {base} raised to non-integer power {exponent} at t = {t}")]
    PowDomain { base: f64, exponent: f64, t: f64 },
    #[error("non-finite value in `{op}` at t = {t}")]
    NonFinite { op: &'static str, t: f64 },
    #[error("evaluation point {0} is not finite")]
    NonFiniteArgument(f64),
}

impl Expr {
    pub fn constant(value: f64) -> Expr {
        Expr::Const(value)
    }

    pub fn var() -> Expr {
        Expr::Var
    }

    pub fn call(func: Func, arg: Expr) -> Expr {
        Expr::Call(func, Box::new(arg))
    }

    /// Human-readable tag of the node's variant.
    pub fn variant_name(&self) -> &'static str {
        match self {
            Expr::Const(_) => "constant",
            Expr::Var => "variable",
            Expr::Add(..) => "add",
            Expr::Sub(..) => "subtract",
            Expr::Mul(..) => "multiply",
            Expr::Div(..) => "divide",
            Expr::Pow(..) => "power",
            Expr::Neg(_) => "negate",
            Expr::Call(f, _) => f.name(),
        }
    }

    /// True when the tree does not reference `t`.
    pub fn is_constant(&self) -> bool {
        match self {
            Expr::Const(_) => true,
            Expr::Var => false,
            Expr::Add(l, r)
            | Expr::Sub(l, r)
            | Expr::Mul(l, r)
            | Expr::Div(l, r)
            | Expr::Pow(l, r) => l.is_constant() && r.is_constant(),
            Expr::Neg(e) | Expr::Call(_, e) => e.is_constant(),
        }
    }

    pub fn contains(&self, func: Func) -> bool {
        match self {
            Expr::Const(_) | Expr::Var => false,
            Expr::Add(l, r)
            | Expr::Sub(l, r)
            | Expr::Mul(l, r)
            | Expr::Div(l, r)
            | Expr::Pow(l, r) => l.contains(func) || r.contains(func),
            Expr::Neg(e) => e.contains(func),
            Expr::Call(f, e) => *f == func || e.contains(func),
        }
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var => 1,
            Expr::Add(l, r)
            | Expr::Sub(l, r)
            | Expr::Mul(l, r)
            | Expr::Div(l, r)
            | Expr::Pow(l, r) => 1 + l.size() + r.size(),
            Expr::Neg(e) | Expr::Call(_, e) => 1 + e.size(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var => 1,
            Expr::Add(l, r)
            | Expr::Sub(l, r)
            | Expr::Mul(l, r)
            | Expr::Div(l, r)
            | Expr::Pow(l, r) => 1 + l.depth().max(r.depth()),
            Expr::Neg(e) | Expr::Call(_, e) => 1 + e.depth(),
        }
    }

    /// Evaluates the tree at `t`.
    pub fn eval(&self, t: f64) -> Result<f64, EvalError> {
        if !t.is_finite() {
            return Err(EvalError::NonFiniteArgument(t));
        }
        self.eval_at(t)
    }

    fn eval_at(&self, t: f64) -> Result<f64, EvalError> {
        let value = match self {
            Expr::Const(c) => return Ok(*c),
            Expr::Var => return Ok(t),
            Expr::Add(l, r) => finite("add", l.eval_at(t)? + r.eval_at(t)?, t)?,
            Expr::Sub(l, r) => finite("subtract", l.eval_at(t)? - r.eval_at(t)?, t)?,
            Expr::Mul(l, r) => finite("multiply", l.eval_at(t)? * r.eval_at(t)?, t)?,
            Expr::Div(l, r) => {
                let num = l.eval_at(t)?;
                let den = r.eval_at(t)?;
                if den == 0.0 {
                    return Err(EvalError::DivisionByZero(t));
                }
                finite("divide", num / den, t)?
            }
            Expr::Pow(l, r) => {
                let base = l.eval_at(t)?;
                let exponent = r.eval_at(t)?;
                if base < 0.0 && exponent.fract() != 0.0 {
                    return Err(EvalError::PowDomain { base, exponent, t });
                }
                if base == 0.0 && exponent < 0.0 {
                    return Err(EvalError::DivisionByZero(t));
                }
                finite("power", base.powf(exponent), t)?
            }
            Expr::Neg(e) => -e.eval_at(t)?,
            Expr::Call(func, e) => {
                let x = e.eval_at(t)?;
                match func {
                    Func::Exp => finite("exp", x.exp(), t)?,
                    Func::Ln => {
                        if x <= 0.0 {
                            return Err(EvalError::LnDomain(x, t));
                        }
                        x.ln()
                    }
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Sqrt => {
                        if x < 0.0 {
                            return Err(EvalError::SqrtDomain(x, t));
                        }
                        x.sqrt()
                    }
                    Func::Abs => x.abs(),
                    Func::Erf => erf(x),
                }
            }
        };
        Ok(value)
    }
}

fn finite(op: &'static str, value: f64, t: f64) -> Result<f64, EvalError> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(EvalError::NonFinite { op, t })
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print::print_expression(self))
    }
}

/// Evaluatable real function of one variable.
///
/// Anything integrated by the oracle implements this; closures of the form
/// `Fn(f64) -> Result<f64, EvalError>` do as well.
pub trait RealFunction: Sync {
    fn eval(&self, t: f64) -> Result<f64, EvalError>;

    /// Symbolic first derivative, when one is available.
    fn first_derivative(&self) -> Option<ScalarFunction> {
        None
    }
}

impl<F> RealFunction for F
where
    F: Fn(f64) -> Result<f64, EvalError> + Sync,
{
    fn eval(&self, t: f64) -> Result<f64, EvalError> {
        self(t)
    }
}

/// An expression-backed function with a cache of its symbolic derivatives.
///
/// `derivatives[k]` holds the `(k + 1)`-th derivative of `root`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarFunction {
    root: Expr,
    domain: Option<(f64, f64)>,
    derivatives: Vec<Expr>,
}

impl ScalarFunction {
    pub fn new(root: Expr) -> Self {
        ScalarFunction {
            root,
            domain: None,
            derivatives: Vec::new(),
        }
    }

    pub fn parse(source: &str) -> Result<Self, ParseError> {
        parse_expression(source).map(ScalarFunction::new)
    }

    pub fn with_domain(mut self, a: f64, b: f64) -> Self {
        self.domain = Some((a, b));
        self
    }

    pub fn domain(&self) -> Option<(f64, f64)> {
        self.domain
    }

    pub fn expr(&self) -> &Expr {
        &self.root
    }

    /// Fills the derivative cache up to order `n`.
    pub fn with_derivatives(mut self, n: usize) -> Result<Self, DiffError> {
        while self.derivatives.len() < n {
            let last = self.derivatives.last().unwrap_or(&self.root);
            let next = differentiate(last, 1)?;
            self.derivatives.push(next);
        }
        Ok(self)
    }

    /// The `n`-th derivative expression (`n = 0` is the function itself).
    pub fn derivative_expr(&self, n: usize) -> Result<Expr, DiffError> {
        if n == 0 {
            return Ok(self.root.clone());
        }
        if let Some(e) = self.derivatives.get(n - 1) {
            return Ok(e.clone());
        }
        let (start, base) = match self.derivatives.last() {
            Some(e) => (self.derivatives.len(), e),
            None => (0, &self.root),
        };
        differentiate(base, n - start)
    }

    /// The `n`-th derivative as a function of its own.
    pub fn derivative(&self, n: usize) -> Result<ScalarFunction, DiffError> {
        let root = self.derivative_expr(n)?;
        let cached = self.derivatives.iter().skip(n).cloned().collect();
        Ok(ScalarFunction {
            root,
            domain: self.domain,
            derivatives: cached,
        })
    }

    pub fn is_constant(&self) -> bool {
        self.root.is_constant()
    }
}

impl RealFunction for ScalarFunction {
    fn eval(&self, t: f64) -> Result<f64, EvalError> {
        self.root.eval(t)
    }

    fn first_derivative(&self) -> Option<ScalarFunction> {
        self.derivative(1).ok()
    }
}

impl RealFunction for Expr {
    fn eval(&self, t: f64) -> Result<f64, EvalError> {
        Expr::eval(self, t)
    }

    fn first_derivative(&self) -> Option<ScalarFunction> {
        differentiate(self, 1).ok().map(ScalarFunction::new)
    }
}

impl fmt::Display for ScalarFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}

pub use diff::DiffError;

/// Prints an expression in the grammar accepted by [`parse_expression`].
pub fn print_expression(e: &Expr) -> String {
    print::print_expression(e)
}

/// Evaluates `e` at `t`.
pub fn eval_expr(e: &Expr, t: f64) -> Result<f64, EvalError> {
    e.eval(t)
}
