#![allow(dead_code)]

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stieltjes::expr::{Expr, Func, RealFunction, ScalarFunction};
use stieltjes::oracle::{riemann_integral, Interval};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn sf(src: &str) -> ScalarFunction {
    ScalarFunction::parse(src).unwrap_or_else(|e| panic!("{src}: {e}"))
}

pub fn iv(a: f64, b: f64) -> Interval {
    Interval::new(a, b).unwrap()
}

fn b(e: Expr) -> Box<Expr> {
    Box::new(e)
}

fn random_constant(rng: &mut ChaCha8Rng) -> f64 {
    match rng.gen_range(0..5) {
        0 => rng.gen_range(0..20) as f64,
        1 => rng.gen_range(0.0..10.0),
        2 => rng.gen_range(0.0..1.0) * 10f64.powi(rng.gen_range(-25..25)),
        3 => 0.5,
        _ => (rng.gen_range(1..1000) as f64) / 8.0,
    }
}

/// Arbitrary expression tree with nonnegative literals (negation only via `Neg`).
pub fn random_expr(rng: &mut ChaCha8Rng, depth: u32) -> Expr {
    if depth == 0 || rng.gen_bool(0.25) {
        return if rng.gen_bool(0.5) {
            Expr::Var
        } else {
            Expr::Const(random_constant(rng))
        };
    }
    let d = depth - 1;
    match rng.gen_range(0..8) {
        0 => Expr::Add(b(random_expr(rng, d)), b(random_expr(rng, d))),
        1 => Expr::Sub(b(random_expr(rng, d)), b(random_expr(rng, d))),
        2 => Expr::Mul(b(random_expr(rng, d)), b(random_expr(rng, d))),
        3 => Expr::Div(b(random_expr(rng, d)), b(random_expr(rng, d))),
        4 => Expr::Pow(b(random_expr(rng, d)), b(random_expr(rng, d))),
        5 => Expr::Neg(b(random_expr(rng, d))),
        _ => {
            let func = Func::ALL[rng.gen_range(0..Func::ALL.len())];
            Expr::Call(func, b(random_expr(rng, d)))
        }
    }
}

/// Smooth, well-conditioned expression on roughly `[-1, 1]`: values and
/// derivatives stay moderate, so finite differences are reliable.
pub fn random_smooth_expr(rng: &mut ChaCha8Rng, depth: u32) -> Expr {
    if depth == 0 || rng.gen_bool(0.2) {
        return if rng.gen_bool(0.6) {
            Expr::Var
        } else {
            Expr::Const((rng.gen_range(1..40) as f64) / 8.0)
        };
    }
    let d = depth - 1;
    match rng.gen_range(0..9) {
        0 => Expr::Add(b(random_smooth_expr(rng, d)), b(random_smooth_expr(rng, d))),
        1 => Expr::Sub(b(random_smooth_expr(rng, d)), b(random_smooth_expr(rng, d))),
        2 => Expr::Mul(b(random_smooth_expr(rng, d)), b(random_smooth_expr(rng, d))),
        // 1 + g² never vanishes
        3 => {
            let g = random_smooth_expr(rng, d);
            let den = Expr::Add(b(Expr::Const(1.0)), b(Expr::Pow(b(g), b(Expr::Const(2.0)))));
            Expr::Div(b(random_smooth_expr(rng, d)), b(den))
        }
        4 => Expr::Pow(b(random_smooth_expr(rng, d)), b(Expr::Const(rng.gen_range(2..4) as f64))),
        5 => Expr::Neg(b(random_smooth_expr(rng, d))),
        6 => Expr::Call(Func::Sin, b(random_smooth_expr(rng, d))),
        7 => Expr::Call(Func::Cos, b(random_smooth_expr(rng, d))),
        _ => {
            // exp of a bounded argument
            let inner = Expr::Call(Func::Sin, b(random_smooth_expr(rng, d)));
            Expr::Call(Func::Exp, b(inner))
        }
    }
}

/// A random smooth function from a few parametric families.
pub fn random_smooth_function(rng: &mut ChaCha8Rng) -> ScalarFunction {
    let c = |rng: &mut ChaCha8Rng, lo: f64, hi: f64| rng.gen_range(lo..hi);
    let src = match rng.gen_range(0..6) {
        0 => format!("{}*sin({}*t) + {}", c(rng, 0.2, 2.0), c(rng, 0.5, 3.0), c(rng, -1.0, 1.0)),
        1 => format!("{}*exp({}*t)", c(rng, 0.2, 2.0), c(rng, -1.5, 1.5)),
        2 => format!("{}*t^2 + {}*t + {}", c(rng, -2.0, 2.0), c(rng, -2.0, 2.0), c(rng, -1.0, 1.0)),
        3 => format!("{}*cos({}*t) + {}*t", c(rng, 0.2, 2.0), c(rng, 0.5, 3.0), c(rng, -1.0, 1.0)),
        4 => format!("t^3 - {}*t + {}", c(rng, 0.0, 2.0), c(rng, -1.0, 1.0)),
        _ => format!("1/(1 + {}*t^2)", c(rng, 0.1, 2.0)),
    };
    sf(&src.replace("+ -", "- "))
}

pub fn random_interval(rng: &mut ChaCha8Rng) -> Interval {
    let a = rng.gen_range(-1.0..1.0);
    iv(a, a + rng.gen_range(0.1..1.5))
}

/// A test pair `(f, u)` on `[a, b]` with hand-derived certificates.
pub struct CorpusPair {
    pub f: &'static str,
    pub u: &'static str,
    pub a: f64,
    pub b: f64,
    /// `max |f'|` on `[a, b]`.
    pub lip_f: f64,
    /// `∫ |f'|`, i.e. `|f(b) - f(a)|` since every `f` here is monotone.
    pub var_f: f64,
    /// `max |u'|` on `[a, b]`.
    pub lip_u: f64,
}

/// Twelve pairs of polynomials, exponentials and sines on short intervals.
/// Every `f` and `u` is monotone with monotone `|f'|`, `|u'|`, so the
/// Lipschitz constants sit at an endpoint.
pub fn corpus() -> Vec<CorpusPair> {
    let e = f64::exp;
    vec![
        CorpusPair { f: "exp(-t^2)", u: "t", a: 0.0, b: 0.125, lip_f: 0.25 * e(-1.0 / 64.0), var_f: 1.0 - e(-1.0 / 64.0), lip_u: 1.0 },
        CorpusPair { f: "exp(t)", u: "t", a: 0.0, b: 0.5, lip_f: e(0.5), var_f: e(0.5) - 1.0, lip_u: 1.0 },
        CorpusPair { f: "t^2 + 1", u: "t", a: 0.0, b: 1.0, lip_f: 2.0, var_f: 1.0, lip_u: 1.0 },
        CorpusPair { f: "sin(t) + 2", u: "t^2", a: 0.5, b: 1.0, lip_f: 0.5f64.cos(), var_f: 1f64.sin() - 0.5f64.sin(), lip_u: 2.0 },
        CorpusPair { f: "t^3 + 1", u: "exp(t)", a: 0.0, b: 0.25, lip_f: 3.0 / 16.0, var_f: 1.0 / 64.0, lip_u: e(0.25) },
        CorpusPair { f: "cos(t)", u: "t + t^2", a: 0.0, b: 0.5, lip_f: 0.5f64.sin(), var_f: 1.0 - 0.5f64.cos(), lip_u: 2.0 },
        CorpusPair { f: "exp(-t)", u: "sin(t)", a: 0.0, b: 0.5, lip_f: 1.0, var_f: 1.0 - e(-0.5), lip_u: 1.0 },
        CorpusPair { f: "1/(1+t)", u: "t", a: 0.0, b: 0.25, lip_f: 1.0, var_f: 0.2, lip_u: 1.0 },
        CorpusPair { f: "t^2", u: "t^3", a: 0.5, b: 1.0, lip_f: 2.0, var_f: 0.75, lip_u: 3.0 },
        CorpusPair { f: "exp(2*t)", u: "t^2 + t", a: 0.0, b: 0.25, lip_f: 2.0 * e(0.5), var_f: e(0.5) - 1.0, lip_u: 1.5 },
        CorpusPair { f: "sin(t)", u: "t", a: 0.0, b: 1.0, lip_f: 1.0, var_f: 1f64.sin(), lip_u: 1.0 },
        CorpusPair { f: "1 + t + t^2 + t^3", u: "exp(t)", a: 0.1, b: 0.3, lip_f: 1.87, var_f: 0.306, lip_u: e(0.3) },
    ]
}

/// `‖g^(n)‖_p` by adaptive Simpson at a tolerance far below any test slack.
pub fn reference_deriv_norm(g: &ScalarFunction, n: usize, p: f64, i: Interval) -> f64 {
    let d = g.derivative(n).unwrap();
    let powered = |t: f64| Ok(d.eval(t)?.abs().powf(p));
    let r = riemann_integral(&powered, i, 1e-15).unwrap();
    r.value.powf(1.0 / p)
}

/// Smallest value of `g` on a fine grid.
pub fn grid_min(g: &ScalarFunction, i: Interval) -> f64 {
    (0..=2000)
        .map(|k| g.eval(i.a() + i.len() * k as f64 / 2000.0).unwrap())
        .fold(f64::INFINITY, f64::min)
}
