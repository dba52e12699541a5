//! Deterministic JSON and flat CSV emission of moment reports.
//!
//! Every float is written with 17 significant digits, so identical inputs
//! give byte-identical files and every value round-trips exactly.

use std::fmt::Write as _;
use std::io::Write;

use serde::Serialize;
use serde_json::Value;

use crate::moments::MomentReport;
use crate::{Complex64, Result};

/// `v` with 17 significant digits in scientific notation; non-finite values
/// become `null` in JSON and the bare word in CSV.
pub fn format_f64(v: f64) -> String {
    if v == 0.0 {
        return "0.0000000000000000e0".to_string();
    }
    format!("{v:.16e}")
}

fn emit(value: &Value, indent: usize, out: &mut String) {
    let pad = |n: usize| "  ".repeat(n);
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_f64() {
                let v = n.as_f64().expect("f64 number");
                out.push_str(&format_f64(v));
            } else {
                out.push_str(&n.to_string());
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) => {
            // short numeric arrays ([re, im] pairs) stay on one line
            if items.iter().all(|v| v.is_number() || v.is_null()) && items.len() <= 4 {
                out.push('[');
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    emit(v, indent, out);
                }
                out.push(']');
                return;
            }
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push_str("[\n");
            for (i, v) in items.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                emit(v, indent + 1, out);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push_str("{\n");
            for (i, (k, v)) in map.iter().enumerate() {
                let _ = write!(out, "{}{}: ", pad(indent + 1), Value::String(k.clone()));
                emit(v, indent + 1, out);
                out.push_str(if i + 1 < map.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push('}');
        }
    }
}

/// Pretty JSON with fixed float formatting. Complex numbers appear as
/// `[re, im]` pairs.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value)?;
    let mut out = String::new();
    emit(&v, 0, &mut out);
    out.push('\n');
    Ok(out)
}

/// Column names of [`csv_row`].
pub const CSV_HEADER: [&str; 24] = [
    "k",
    "l",
    "x",
    "r",
    "shifts",
    "psi",
    "prime_cutoff",
    "epsilon",
    "mode",
    "lhs_direct_re",
    "lhs_direct_im",
    "lhs_petersson_re",
    "lhs_petersson_im",
    "zero_swap_re",
    "zero_swap_im",
    "swaps_re",
    "swaps_im",
    "rhs_re",
    "rhs_im",
    "residual_abs",
    "residual_rel",
    "error_scale",
    "c_tail",
    "p_tail_plus_contour",
];

fn format_shifts(shifts: &[Complex64]) -> String {
    shifts
        .iter()
        .map(|a| format!("{}{:+}i", a.re, a.im))
        .collect::<Vec<_>>()
        .join(";")
}

/// One flat row per report, for sweeps.
pub fn csv_row(report: &MomentReport) -> Vec<String> {
    let p = &report.params;
    let swaps = report.rhs.swaps.iter().fold(Complex64::new(0.0, 0.0), |acc, t| acc + t.value);
    let (direct_re, direct_im) = match report.lhs_direct {
        Some(v) => (format_f64(v.re), format_f64(v.im)),
        None => (String::new(), String::new()),
    };
    vec![
        p.k.to_string(),
        p.l.to_string(),
        format_f64(p.x),
        p.shifts.len().to_string(),
        format_shifts(p.shifts.shifts()),
        p.psi.clone(),
        p.policy.prime_cutoff.to_string(),
        format_f64(p.policy.epsilon),
        match p.mode {
            crate::recipe::GammaMode::ExactGamma => "exact-gamma".to_string(),
            crate::recipe::GammaMode::PowerApproximation => "power-approximation".to_string(),
        },
        direct_re,
        direct_im,
        format_f64(report.lhs_petersson.value.re),
        format_f64(report.lhs_petersson.value.im),
        format_f64(report.rhs.zero_swap.value.re),
        format_f64(report.rhs.zero_swap.value.im),
        format_f64(swaps.re),
        format_f64(swaps.im),
        format_f64(report.rhs.total.re),
        format_f64(report.rhs.total.im),
        format_f64(report.residuals.absolute),
        format_f64(report.residuals.relative),
        format_f64(report.residuals.error_scale),
        format_f64(report.tails.c_truncation),
        format_f64(report.tails.p_truncation + report.tails.contour),
    ]
}

/// Writes the header and one row per report.
pub fn write_csv<W: Write>(out: W, reports: &[MomentReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in reports {
        w.write_record(csv_row(r))?;
    }
    w.flush()?;
    Ok(())
}
