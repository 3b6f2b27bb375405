use super::Expr;

const PREC_ADD: u8 = 1;
const PREC_MUL: u8 = 2;
const PREC_NEG: u8 = 3;
const PREC_POW: u8 = 4;
const PREC_ATOM: u8 = 5;

fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Add(..) | Expr::Sub(..) => PREC_ADD,
        Expr::Mul(..) | Expr::Div(..) => PREC_MUL,
        Expr::Neg(_) => PREC_NEG,
        Expr::Pow(..) => PREC_POW,
        Expr::Const(_) | Expr::Var | Expr::Call(..) => PREC_ATOM,
    }
}

/// Shortest text that parses back to the same `f64`.
pub(crate) fn format_number(v: f64) -> String {
    let mag = v.abs();
    let body = if mag == 0.0 || (1e-5..1e16).contains(&mag) {
        format!("{mag}")
    } else {
        format!("{mag:e}")
    };
    if v.is_sign_negative() && v != 0.0 {
        format!("(-{body})")
    } else {
        body
    }
}

fn write(e: &Expr, out: &mut String) {
    match e {
        Expr::Const(v) => out.push_str(&format_number(*v)),
        Expr::Var => out.push('t'),
        Expr::Add(l, r) => binary(l, r, " + ", PREC_ADD, out),
        Expr::Sub(l, r) => binary(l, r, " - ", PREC_ADD, out),
        Expr::Mul(l, r) => binary(l, r, "*", PREC_MUL, out),
        Expr::Div(l, r) => binary(l, r, "/", PREC_MUL, out),
        Expr::Pow(l, r) => {
            // the base must be an atom; the exponent may be another power
            // (right-associative) but nothing looser
            child(l, precedence(l) < PREC_ATOM, out);
            out.push('^');
            child(r, precedence(r) < PREC_POW, out);
        }
        Expr::Neg(inner) => {
            out.push('-');
            child(inner, precedence(inner) < PREC_NEG, out);
        }
        Expr::Call(func, arg) => {
            out.push_str(func.name());
            out.push('(');
            write(arg, out);
            out.push(')');
        }
    }
}

// Left-associative operators: a right operand of the same precedence is
// parenthesized so that floating-point grouping survives the round trip.
fn binary(l: &Expr, r: &Expr, op: &str, prec: u8, out: &mut String) {
    child(l, precedence(l) < prec, out);
    out.push_str(op);
    child(r, precedence(r) <= prec, out);
}

fn child(e: &Expr, parens: bool, out: &mut String) {
    if parens {
        out.push('(');
        write(e, out);
        out.push(')');
    } else {
        write(e, out);
    }
}

pub(crate) fn print_expression(e: &Expr) -> String {
    let mut out = String::new();
    write(e, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expression;

    #[test]
    fn prints_constants() {
        assert_eq!(print_expression(&Expr::Const(2.5)), "2.5");
        assert_eq!(print_expression(&Expr::Const(-2.5)), "(-2.5)");
        assert_eq!(print_expression(&Expr::Const(1e-20)), "1e-20");
        assert_eq!(print_expression(&Expr::Const(3e300)), "3e300");
    }

    #[test]
    fn round_trip_gaussian() {
        let e = parse_expression("exp(-t^2)").unwrap();
        let back = parse_expression(&print_expression(&e)).unwrap();
        for t in [0.0, 0.5, 1.0] {
            assert_eq!(e.eval(t).unwrap(), back.eval(t).unwrap());
        }
    }

    #[test]
    fn sum_of_products() {
        let e = Expr::Add(
            Box::new(Expr::Var),
            Box::new(Expr::Mul(Box::new(Expr::Const(2.0)), Box::new(Expr::Var))),
        );
        let printed = print_expression(&e);
        assert_eq!(printed, "t + 2*t");
        let back = parse_expression(&printed).unwrap();
        assert_eq!(back.eval(1.75).unwrap(), 3.0 * 1.75);
    }

    #[test]
    fn grouping_is_preserved() {
        for src in [
            "1-(2-t)",
            "t/(2/t)",
            "(t^2)^3",
            "t^2^3",
            "-(t+1)",
            "--t",
            "t*-t",
            "(-2)^t",
            "2^(-t)",
            "1+(2+t)",
        ] {
            let e = parse_expression(src).unwrap();
            let back = parse_expression(&print_expression(&e)).unwrap();
            assert_eq!(e, back, "{src} printed as {}", print_expression(&e));
        }
    }
}
