//! LP-file style dump for offline inspection.
//!
//! ```text
//! \ scoregate exact LP
//! Maximize
//!  obj: 1/2 x0 + 1/2 x1
//! Subject To
//!  r0: x0 + x1 <= 5
//!  r1: -1/40 <= 1/20 x0 - 1/20 x2 <= 1/40
//! Bounds
//!  0 <= x0 <= 3
//! General
//!  x0 x1
//! End
//! ```
//!
//! Coefficients are exact rationals written `a/b`; ranged rows use the
//! `lo <= expr <= hi` form.

use std::fmt::Write;

use num::{One, Signed, Zero};

use super::{LinearProgram, Sense};
use crate::rational::{format_exact, Rational};

fn write_expr(out: &mut String, coefficients: &[Rational]) {
    let mut first = true;
    for (j, c) in coefficients.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let magnitude = c.abs();
        let sign = if c.is_negative() { "-" } else { "+" };
        if first {
            if c.is_negative() {
                out.push_str("- ");
            }
        } else {
            let _ = write!(out, " {sign} ");
        }
        if magnitude.is_one() {
            let _ = write!(out, "x{j}");
        } else {
            let _ = write!(out, "{} x{j}", format_exact(&magnitude));
        }
        first = false;
    }
    if first {
        out.push('0');
    }
}

pub(super) fn write_lp(prob: &LinearProgram) -> String {
    let mut out = String::from("\\ scoregate exact LP\n");
    match &prob.objective {
        Some(obj) => {
            out.push_str(match obj.sense {
                Sense::Minimize => "Minimize\n",
                Sense::Maximize => "Maximize\n",
            });
            out.push_str(" obj: ");
            write_expr(&mut out, &obj.coefficients);
            out.push('\n');
        }
        None => out.push_str("Minimize\n obj: 0\n"),
    }
    out.push_str("Subject To\n");
    for (i, row) in prob.rows.iter().enumerate() {
        let _ = write!(out, " r{i}: ");
        let mut expr = String::new();
        write_expr(&mut expr, &row.coefficients);
        match (&row.lower, &row.upper) {
            (Some(lo), Some(hi)) if lo == hi => {
                let _ = write!(out, "{expr} = {}", format_exact(lo));
            }
            (Some(lo), Some(hi)) => {
                let _ = write!(out, "{} <= {expr} <= {}", format_exact(lo), format_exact(hi));
            }
            (Some(lo), None) => {
                let _ = write!(out, "{expr} >= {}", format_exact(lo));
            }
            (None, Some(hi)) => {
                let _ = write!(out, "{expr} <= {}", format_exact(hi));
            }
            (None, None) => {
                let _ = write!(out, "{expr} free");
            }
        }
        out.push('\n');
    }
    out.push_str("Bounds\n");
    for (j, v) in prob.variables.iter().enumerate() {
        let _ = writeln!(out, " {} <= x{j} <= {}", format_exact(&v.lower), format_exact(&v.upper));
    }
    let general: Vec<String> = prob
        .variables
        .iter()
        .enumerate()
        .filter(|(_, v)| v.integral)
        .map(|(j, _)| format!("x{j}"))
        .collect();
    if !general.is_empty() {
        let _ = writeln!(out, "General\n {}", general.join(" "));
    }
    out.push_str("End\n");
    out
}
