use std::fmt::Write;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use super::{lcm_of_denominators, IlpProblem, Relation};

fn term(out: &mut String, first: bool, coef: &BigInt, name: &str) {
    let sign = if coef.is_negative() {
        " -"
    } else if first {
        ""
    } else {
        " +"
    };
    let mag = coef.abs();
    if mag == BigInt::from(1) {
        let _ = write!(out, "{sign} {name}");
    } else {
        let _ = write!(out, "{sign} {mag} {name}");
    }
}

pub(super) fn write_lp(p: &IlpProblem) -> String {
    let mut out = String::new();
    let obj_scale = lcm_of_denominators(p.objective.iter());
    let _ = writeln!(out, "\\ objective scaled by {obj_scale}");
    out.push_str("Minimize\n obj:");
    let mut first = true;
    for (v, c) in p.variables.iter().zip(&p.objective) {
        if c.is_zero() {
            continue;
        }
        let k = (c * num_rational::BigRational::from_integer(obj_scale.clone())).to_integer();
        term(&mut out, first, &k, &v.name);
        first = false;
    }
    if first {
        out.push_str(" 0");
    }
    out.push_str("\nSubject To\n");
    for (i, c) in p.constraints.iter().enumerate() {
        let scale = lcm_of_denominators(
            c.terms
                .iter()
                .map(|(_, k)| k)
                .chain(std::iter::once(&c.rhs)),
        );
        let scale = num_rational::BigRational::from_integer(scale);
        let _ = write!(out, " c{i}:");
        if c.terms.is_empty() {
            out.push_str(" 0 x_zero");
        }
        for (j, (v, k)) in c.terms.iter().enumerate() {
            term(
                &mut out,
                j == 0,
                &(k * &scale).to_integer(),
                &p.variables[v.0].name,
            );
        }
        let rel = match c.relation {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Eq => "=",
        };
        let _ = writeln!(out, " {rel} {}", (&c.rhs * &scale).to_integer());
    }
    out.push_str("Bounds\n");
    for v in &p.variables {
        match (v.lower, v.upper) {
            (Some(l), Some(u)) => {
                let _ = writeln!(out, " {l} <= {} <= {u}", v.name);
            }
            (Some(l), None) => {
                let _ = writeln!(out, " {} >= {l}", v.name);
            }
            (None, Some(u)) => {
                let _ = writeln!(out, " -inf <= {} <= {u}", v.name);
            }
            (None, None) => {
                let _ = writeln!(out, " {} free", v.name);
            }
        }
    }
    out.push_str("Generals\n");
    for v in &p.variables {
        let _ = writeln!(out, " {}", v.name);
    }
    out.push_str("End\n");
    out
}
