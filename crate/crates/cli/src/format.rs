//! Number formatting and the three output renderings.
//!
//! Reals carry 10 significant digits and margins are always in scientific
//! notation. JSON numbers are stored as their formatted text, so a parsed and
//! re-serialized document is byte-identical to the emitted one.

use std::str::FromStr;

use serde_json::{Map, Number, Value};

use crate::CliError;

const SIG_DIGITS: usize = 10;

/// `(negative, ten digits, decimal exponent)` after rounding to 10 significant digits.
fn decompose(v: f64) -> (bool, String, i32) {
    let s = format!("{:.*e}", SIG_DIGITS - 1, v.abs());
    let (mantissa, exp) = s.split_once('e').expect("exponent form");
    let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    (
        v.is_sign_negative() && v != 0.0,
        digits,
        exp.parse().expect("integer exponent"),
    )
}

/// Scientific notation with 10 significant digits, e.g. `-1.234567890e-4` or `2.500000000e+1`.
pub fn sci(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    let (neg, digits, exp) = decompose(v);
    // Explicit exponent sign, matching how serde_json stores parsed numbers.
    format!(
        "{}{}.{}e{:+}",
        if neg { "-" } else { "" },
        &digits[..1],
        &digits[1..],
        exp
    )
}

/// Positional notation with 10 significant digits when the exponent lies in
/// `[-4, 9]`, scientific otherwise.
pub fn real(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    let (neg, digits, exp) = decompose(v);
    if !(-4..=9).contains(&exp) {
        return sci(v);
    }
    let sign = if neg { "-" } else { "" };
    if exp < 0 {
        format!("{sign}0.{}{digits}", "0".repeat((-exp - 1) as usize))
    } else {
        let split = exp as usize + 1;
        if split == SIG_DIGITS {
            format!("{sign}{digits}")
        } else {
            format!("{sign}{}.{}", &digits[..split], &digits[split..])
        }
    }
}

fn number(text: &str) -> Value {
    Value::Number(Number::from_str(text).expect("formatted reals are valid JSON numbers"))
}

/// A real as a JSON number; non-finite values become `null`.
pub fn real_value(v: f64) -> Value {
    if v.is_finite() {
        number(&real(v))
    } else {
        Value::Null
    }
}

pub fn sci_value(v: f64) -> Value {
    if v.is_finite() {
        number(&sci(v))
    } else {
        Value::Null
    }
}

pub fn opt_real(v: Option<f64>) -> Value {
    v.map_or(Value::Null, real_value)
}

pub fn opt_sci(v: Option<f64>) -> Value {
    v.map_or(Value::Null, sci_value)
}

pub fn object(fields: Vec<(&str, Value)>) -> Value {
    Value::Object(
        fields
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect::<Map<_, _>>(),
    )
}

pub fn to_json(doc: &Value) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("serializing a Value cannot fail");
    s.push('\n');
    s
}

/// Parse and re-serialize; equal to the input for every emitted document.
pub fn reserialize(text: &str) -> Result<String, CliError> {
    let doc: Value = serde_json::from_str(text).map_err(|e| CliError::Usage(format!("invalid JSON: {e}")))?;
    Ok(to_json(&doc))
}

/// Cell text for CSV and markdown output.
pub fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// A fixed-header CSV table.
pub fn csv_table(header: &[&str], rows: &[Vec<Value>]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(row.iter().map(cell)).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

pub fn markdown_table(header: &[&str], rows: &[Vec<Value>]) -> String {
    let esc = |s: String| s.replace('|', "\\|");
    let mut out = format!("| {} |\n", header.join(" | "));
    out.push_str(&format!("|{}\n", "---|".repeat(header.len())));
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| esc(cell(v))).collect();
        out.push_str(&format!("| {} |\n", cells.join(" | ")));
    }
    out
}
