use std::f64::consts::PI;

use thiserror::Error;

use super::{Expr, Func};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiffError {
    #[error("`{0}` is not differentiable everywhere; symbolic differentiation refused")]
    NonDifferentiable(&'static str),
    #[error("derivative order must be at least 1")]
    ZeroOrder,
}

/// The `n`-th symbolic derivative of `e` with respect to `t`.
///
/// Constant subtrees are folded as the derivative is built; no other
/// simplification is attempted.
pub fn differentiate(e: &Expr, n: usize) -> Result<Expr, DiffError> {
    if n == 0 {
        return Err(DiffError::ZeroOrder);
    }
    let mut current = d(e)?;
    for _ in 1..n {
        current = d(&current)?;
    }
    Ok(current)
}

fn d(e: &Expr) -> Result<Expr, DiffError> {
    Ok(match e {
        Expr::Const(_) => Expr::Const(0.0),
        Expr::Var => Expr::Const(1.0),
        Expr::Add(l, r) => add(d(l)?, d(r)?),
        Expr::Sub(l, r) => sub(d(l)?, d(r)?),
        Expr::Mul(l, r) => add(mul(d(l)?, (**r).clone()), mul((**l).clone(), d(r)?)),
        Expr::Div(l, r) => {
            let num = sub(mul(d(l)?, (**r).clone()), mul((**l).clone(), d(r)?));
            div(num, pow((**r).clone(), Expr::Const(2.0)))
        }
        Expr::Pow(base, exponent) => d_pow(base, exponent)?,
        Expr::Neg(inner) => neg(d(inner)?),
        Expr::Call(func, arg) => {
            let inner = d(arg)?;
            let arg = (**arg).clone();
            let outer = match func {
                Func::Exp => call(Func::Exp, arg),
                Func::Ln => div(Expr::Const(1.0), arg),
                Func::Sin => call(Func::Cos, arg),
                Func::Cos => neg(call(Func::Sin, arg)),
                Func::Sqrt => div(Expr::Const(0.5), call(Func::Sqrt, arg)),
                Func::Erf => mul(
                    Expr::Const(2.0 / PI.sqrt()),
                    call(Func::Exp, neg(pow(arg, Expr::Const(2.0)))),
                ),
                Func::Abs => return Err(DiffError::NonDifferentiable("abs")),
            };
            mul(outer, inner)
        }
    })
}

fn d_pow(base: &Expr, exponent: &Expr) -> Result<Expr, DiffError> {
    let db = d(base)?;
    if exponent.is_constant() {
        // c * b^(c-1) * b'
        let reduced = sub(exponent.clone(), Expr::Const(1.0));
        let factor = mul(exponent.clone(), pow(base.clone(), reduced));
        return Ok(mul(factor, db));
    }
    let de = d(exponent)?;
    let this = pow(base.clone(), exponent.clone());
    if base.is_constant() {
        // b^e * ln(b) * e'
        return Ok(mul(mul(this, call(Func::Ln, base.clone())), de));
    }
    // b^e * (e' ln b + e b'/b)
    let inner = add(
        mul(de, call(Func::Ln, base.clone())),
        div(mul(exponent.clone(), db), base.clone()),
    );
    Ok(mul(this, inner))
}

fn as_const(e: &Expr) -> Option<f64> {
    match e {
        Expr::Const(c) => Some(*c),
        _ => None,
    }
}

fn fold(value: f64, fallback: Expr) -> Expr {
    if value.is_finite() {
        Expr::Const(value)
    } else {
        fallback
    }
}

fn add(l: Expr, r: Expr) -> Expr {
    match (as_const(&l), as_const(&r)) {
        (Some(0.0), _) => r,
        (_, Some(0.0)) => l,
        (Some(a), Some(b)) => fold(a + b, Expr::Add(Box::new(l), Box::new(r))),
        _ => Expr::Add(Box::new(l), Box::new(r)),
    }
}

fn sub(l: Expr, r: Expr) -> Expr {
    match (as_const(&l), as_const(&r)) {
        (_, Some(0.0)) => l,
        (Some(0.0), _) => neg(r),
        (Some(a), Some(b)) => fold(a - b, Expr::Sub(Box::new(l), Box::new(r))),
        _ => Expr::Sub(Box::new(l), Box::new(r)),
    }
}

fn mul(l: Expr, r: Expr) -> Expr {
    match (as_const(&l), as_const(&r)) {
        (Some(0.0), _) | (_, Some(0.0)) => Expr::Const(0.0),
        (Some(1.0), _) => r,
        (_, Some(1.0)) => l,
        (Some(a), Some(b)) => fold(a * b, Expr::Mul(Box::new(l), Box::new(r))),
        _ => Expr::Mul(Box::new(l), Box::new(r)),
    }
}

fn div(l: Expr, r: Expr) -> Expr {
    match (as_const(&l), as_const(&r)) {
        (_, Some(1.0)) => l,
        (Some(a), Some(b)) if b != 0.0 => fold(a / b, Expr::Div(Box::new(l), Box::new(r))),
        _ => Expr::Div(Box::new(l), Box::new(r)),
    }
}

fn pow(base: Expr, exponent: Expr) -> Expr {
    match (as_const(&base), as_const(&exponent)) {
        (_, Some(1.0)) => base,
        (_, Some(0.0)) => Expr::Const(1.0),
        (Some(a), Some(b)) if a > 0.0 => fold(a.powf(b), Expr::Pow(Box::new(base), Box::new(exponent))),
        _ => Expr::Pow(Box::new(base), Box::new(exponent)),
    }
}

fn neg(e: Expr) -> Expr {
    match e {
        Expr::Const(c) => Expr::Const(-c),
        Expr::Neg(inner) => *inner,
        other => Expr::Neg(Box::new(other)),
    }
}

fn call(func: Func, arg: Expr) -> Expr {
    Expr::Call(func, Box::new(arg))
}
