use std::io::Write;

use super::runner::SweepRecord;
use crate::error::{Error, Result};

pub const HEADER: [&str; 10] = [
    "experiment",
    "state",
    "eta",
    "N",
    "t",
    "p_success",
    "wigner_origin",
    "fidelity",
    "log_negativity",
    "purity",
];

/// Shortest of fixed or exponent notation with `digits` significant digits
/// and trailing zeros removed, as C's `%.{digits}g`.
pub fn format_significant(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn number(x: f64) -> String {
    format_significant(x, 12)
}

fn optional(x: Option<f64>) -> String {
    x.map(number).unwrap_or_default()
}

/// Writes the header and one row per record with LF line endings.
pub fn write_csv<W: Write>(records: &[SweepRecord], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(HEADER).map_err(io)?;
    for r in records {
        w.write_record([
            r.experiment.to_string(),
            r.state.clone(),
            number(r.eta),
            r.steps.to_string(),
            number(r.t),
            number(r.p_success),
            optional(r.wigner_origin),
            optional(r.fidelity),
            optional(r.log_negativity),
            optional(r.purity),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn to_csv_string(records: &[SweepRecord]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(records, &mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))
}
