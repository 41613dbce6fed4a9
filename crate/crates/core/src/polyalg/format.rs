use num_traits::{One, Signed};

use super::{Polynomial, Rational, VariableTable};

fn write_rational(out: &mut String, c: &Rational) {
    out.push_str(&c.numer().to_string());
    if !c.denom().is_one() {
        out.push('/');
        out.push_str(&c.denom().to_string());
    }
}

/// Prints `f` in the parser's grammar, terms in descending grevlex order.
/// `parse_polynomial(format_polynomial(f))` reproduces `f` exactly.
pub fn format_polynomial(f: &Polynomial, vars: &VariableTable) -> String {
    if f.is_zero() {
        return "0".to_string();
    }
    let mut out = String::new();
    for (k, t) in f.terms().iter().enumerate() {
        let neg = t.coeff.is_negative();
        match (k, neg) {
            (0, true) => out.push('-'),
            (0, false) => {}
            (_, true) => out.push_str(" - "),
            (_, false) => out.push_str(" + "),
        }
        let abs = t.coeff.abs();
        let mut factors = Vec::new();
        for (i, &p) in t.exponent.as_slice().iter().enumerate() {
            match p {
                0 => {}
                1 => factors.push(vars.name(i).to_string()),
                _ => factors.push(format!("{}^{}", vars.name(i), p)),
            }
        }
        if factors.is_empty() {
            write_rational(&mut out, &abs);
            continue;
        }
        if !abs.is_one() {
            write_rational(&mut out, &abs);
            out.push('*');
        }
        out.push_str(&factors.join("*"));
    }
    out
}
