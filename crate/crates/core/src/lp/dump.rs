use std::fmt::Write as _;

use crate::lp::problem::LpProblem;

/// Renders `p` in CPLEX LP text format. Variables are named `x0, x1, ...`.
pub fn to_lp_text(p: &LpProblem, name: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "\\ {name}");
    out.push_str("Minimize\n obj:");
    write_terms(&mut out, p.c.iter().copied());
    out.push_str("\nSubject To\n");
    for i in 0..p.n_eq() {
        let _ = write!(out, " e{i}:");
        write_terms(&mut out, p.a_eq.row(i).iter().copied());
        let _ = writeln!(out, " = {}", p.b_eq[i]);
    }
    for i in 0..p.n_in() {
        let _ = write!(out, " c{i}:");
        write_terms(&mut out, p.a_in.row(i).iter().copied());
        let _ = writeln!(out, " <= {}", p.b_in[i]);
    }
    out.push_str("Bounds\n");
    for j in 0..p.n_vars() {
        let (lo, hi) = (p.lo[j], p.hi[j]);
        match (lo.is_finite(), hi.is_finite()) {
            (false, false) => {
                let _ = writeln!(out, " x{j} free");
            }
            (true, true) if lo == hi => {
                let _ = writeln!(out, " x{j} = {lo}");
            }
            (true, true) => {
                let _ = writeln!(out, " {lo} <= x{j} <= {hi}");
            }
            (true, false) => {
                let _ = writeln!(out, " x{j} >= {lo}");
            }
            (false, true) => {
                let _ = writeln!(out, " -inf <= x{j} <= {hi}");
            }
        }
    }
    out.push_str("End\n");
    out
}

fn write_terms(out: &mut String, coefs: impl Iterator<Item = f64>) {
    let mut any = false;
    for (j, a) in coefs.enumerate() {
        if a == 0.0 {
            continue;
        }
        let sign = if a < 0.0 { '-' } else { '+' };
        let _ = write!(out, " {sign} {} x{j}", a.abs());
        any = true;
    }
    if !any {
        out.push_str(" 0 x0");
    }
}
