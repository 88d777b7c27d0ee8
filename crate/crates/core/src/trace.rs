//! Plot-ready CSV traces.
//!
//! A trace starts with `# key=value` comment lines describing the run,
//! followed by a fixed column header and one row per data step:
//!
//! ```text
//! t,local_err_mean,comm_err_mean,global_err,local_bound,comm_bound,comm_fired,pre_invertible_count
//! ```
//!
//! Floats carry 12 significant digits. Bound cells are empty where the
//! bound does not apply (before burn-in; `comm_bound` also off phase steps).

use std::io::{self, Write};

use crate::sim::TraceRow;

pub const FORMAT_TAG: &str = "drls-trace/1";

pub const COLUMNS: [&str; 8] = [
    "t",
    "local_err_mean",
    "comm_err_mean",
    "global_err",
    "local_bound",
    "comm_bound",
    "comm_fired",
    "pre_invertible_count",
];

/// One CSV row: averaged errors plus the bounds that apply at `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceLine {
    pub row: TraceRow,
    pub local_bound: Option<f64>,
    pub comm_bound: Option<f64>,
}

/// `%.12g`-style rendering: 12 significant digits, trailing zeros trimmed,
/// exponent form outside `[1e-5, 1e12)`.
pub fn fmt_sig(x: f64) -> String {
    const DIGITS: i32 = 12;
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..DIGITS).contains(&exp) {
        let decimals = (DIGITS - 1 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_sig).unwrap_or_default()
}

pub fn write_trace<W: Write>(
    out: &mut W,
    header: &[(String, String)],
    lines: &[TraceLine],
) -> io::Result<()> {
    writeln!(out, "# format={FORMAT_TAG}")?;
    for (k, v) in header {
        writeln!(out, "# {k}={v}")?;
    }
    writeln!(out, "{}", COLUMNS.join(","))?;
    for line in lines {
        let r = &line.row;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.t,
            fmt_sig(r.local_err),
            fmt_sig(r.comm_err),
            fmt_sig(r.global_err),
            opt(line.local_bound),
            opt(line.comm_bound),
            u8::from(r.comm_fired),
            r.pre_invertible_count
        )?;
    }
    Ok(())
}
