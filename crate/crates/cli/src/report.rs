//! Report documents. Each command builds one JSON value; CSV and markdown are
//! flattened views of the same value.

use serde_json::Value;
use zeroledger::density::Slack;
use zeroledger::ledger::{CaseCertificate, DeltaProbe, DeltaSearch, SearchOutcome, TableRow, VerificationReport};

use crate::format::{csv_table, markdown_table, object, opt_real, opt_sci, real_value, sci_value};
use crate::{CliError, OutputFormat};

fn table_row(r: &TableRow) -> Value {
    object(vec![
        ("id", Value::from(r.id.clone())),
        ("paper", real_value(r.paper)),
        ("computed", opt_real(r.computed)),
        ("margin", opt_sci(r.margin)),
        ("feasible", Value::from(r.feasible)),
        ("pass", Value::from(r.pass)),
        ("min_slack", opt_sci(r.min_slack)),
        ("note", r.note.clone().map_or(Value::Null, Value::from)),
    ])
}

fn case_row(c: &CaseCertificate) -> Value {
    let components = c.components.iter().map(|(k, v)| (k.as_str(), real_value(*v))).collect();
    let checks = c.checks.iter().map(|(k, v)| (k.as_str(), Value::from(*v))).collect();
    object(vec![
        ("case", Value::from(c.case_id)),
        ("subcase", Value::from(c.subcase.clone())),
        ("bound", real_value(c.sum_bound)),
        ("paper", opt_real(c.paper_value)),
        ("pass", Value::from(c.pass)),
        ("margin", sci_value(c.margin())),
        ("components", object(components)),
        ("checks", object(checks)),
        ("discrepancy", c.discrepancy.clone().map_or(Value::Null, Value::from)),
    ])
}

/// The report schema for a table-only run: no certificates and no `c1`.
pub fn tables_document(delta: f64, c0: f64, eps_num: f64, rows: &[TableRow]) -> Value {
    object(vec![
        ("delta", real_value(delta)),
        ("c0", real_value(c0)),
        ("eps_num", sci_value(eps_num)),
        ("tables", Value::Array(rows.iter().map(table_row).collect())),
        ("cases", Value::Array(Vec::new())),
        ("c1", Value::Null),
        ("overall_pass", Value::from(rows.iter().all(|r| r.pass))),
    ])
}

pub fn report_document(r: &VerificationReport) -> Value {
    let mut fields = vec![
        ("delta", real_value(r.delta)),
        ("c0", real_value(r.c0)),
        ("eps_num", sci_value(r.eps_num)),
        ("tables", Value::Array(r.tables.iter().map(table_row).collect())),
        ("cases", Value::Array(r.cases.iter().map(case_row).collect())),
        ("c1", real_value(r.c1)),
        ("overall_pass", Value::from(r.overall_pass)),
    ];
    if let Some(trace) = &r.delta_search_trace {
        fields.push((
            "delta_search_trace",
            Value::Array(trace.iter().map(probe_row).collect()),
        ));
    }
    object(fields)
}

fn probe_row(p: &DeltaProbe) -> Value {
    object(vec![
        ("delta", real_value(p.delta)),
        ("pass", Value::from(p.pass)),
        ("worst_margin", sci_value(p.worst_margin)),
    ])
}

pub fn search_document(lo: f64, hi: f64, tol: f64, c0: f64, s: &DeltaSearch) -> Value {
    let outcome = match s.outcome {
        SearchOutcome::Bracketed => "bracketed",
        SearchOutcome::BothPass => "both_pass",
        SearchOutcome::BothFail => "both_fail",
        SearchOutcome::SingleProbe => "single_probe",
    };
    object(vec![
        ("lo", real_value(lo)),
        ("hi", real_value(hi)),
        ("tol", sci_value(tol)),
        ("c0", real_value(c0)),
        ("outcome", Value::from(outcome)),
        ("degenerate", Value::from(s.is_degenerate())),
        ("delta_frontier", opt_real(s.frontier)),
        ("passes_below", s.passes_below.map_or(Value::Null, Value::from)),
        ("monotone", Value::from(s.monotone)),
        ("trace", Value::Array(s.trace.iter().map(probe_row).collect())),
        (
            "monotonicity_probes",
            Value::Array(s.monotonicity_probes.iter().map(probe_row).collect()),
        ),
    ])
}

/// Result of `eval`: the value, its constraint slacks and method details.
pub fn eval_document(
    expr: &str,
    args: &[f64],
    delta: Option<f64>,
    value: f64,
    slacks: &[Slack],
    details: Value,
) -> Value {
    object(vec![
        ("expr", Value::from(expr)),
        ("args", Value::Array(args.iter().map(|&a| real_value(a)).collect())),
        ("delta", opt_real(delta)),
        ("value", real_value(value)),
        (
            "slacks",
            Value::Array(
                slacks
                    .iter()
                    .map(|s| {
                        object(vec![
                            ("constraint", Value::from(s.constraint.clone())),
                            ("margin", sci_value(s.margin)),
                        ])
                    })
                    .collect(),
            ),
        ),
        ("details", details),
    ])
}

fn field<'a>(v: &'a Value, key: &str) -> &'a Value {
    v.get(key).unwrap_or(&Value::Null)
}

fn array<'a>(v: &'a Value, key: &str) -> &'a [Value] {
    field(v, key).as_array().map(Vec::as_slice).unwrap_or(&[])
}

const REPORT_HEADER: [&str; 9] = [
    "section", "id", "subcase", "paper", "computed", "margin", "feasible", "pass", "note",
];

fn report_rows(doc: &Value) -> Vec<Vec<Value>> {
    let mut rows = Vec::new();
    for t in array(doc, "tables") {
        rows.push(vec![
            Value::from("table"),
            field(t, "id").clone(),
            Value::Null,
            field(t, "paper").clone(),
            field(t, "computed").clone(),
            field(t, "margin").clone(),
            field(t, "feasible").clone(),
            field(t, "pass").clone(),
            field(t, "note").clone(),
        ]);
    }
    for c in array(doc, "cases") {
        let checks_ok = field(c, "checks")
            .as_object()
            .is_none_or(|m| m.values().all(|v| v == &Value::Bool(true)));
        rows.push(vec![
            Value::from("case"),
            field(c, "case").clone(),
            field(c, "subcase").clone(),
            field(c, "paper").clone(),
            field(c, "bound").clone(),
            field(c, "margin").clone(),
            Value::from(checks_ok),
            field(c, "pass").clone(),
            field(c, "discrepancy").clone(),
        ]);
    }
    if !field(doc, "c1").is_null() {
        rows.push(vec![
            Value::from("summary"),
            Value::from("c1"),
            Value::Null,
            Value::Null,
            field(doc, "c1").clone(),
            Value::Null,
            Value::Null,
            field(doc, "overall_pass").clone(),
            Value::Null,
        ]);
    }
    rows
}

const PROBE_HEADER: [&str; 4] = ["section", "delta", "pass", "worst_margin"];

fn probe_rows(doc: &Value) -> Vec<Vec<Value>> {
    let mut rows = Vec::new();
    for (section, key) in [("trace", "trace"), ("probe", "monotonicity_probes")] {
        for p in array(doc, key) {
            rows.push(vec![
                Value::from(section),
                field(p, "delta").clone(),
                field(p, "pass").clone(),
                field(p, "worst_margin").clone(),
            ]);
        }
    }
    rows.push(vec![
        Value::from("frontier"),
        field(doc, "delta_frontier").clone(),
        Value::Null,
        Value::Null,
    ]);
    rows
}

const EVAL_HEADER: [&str; 2] = ["name", "value"];

fn eval_rows(doc: &Value) -> Vec<Vec<Value>> {
    let mut rows = vec![vec![field(doc, "expr").clone(), field(doc, "value").clone()]];
    for s in array(doc, "slacks") {
        rows.push(vec![
            Value::from(format!("slack: {}", crate::format::cell(field(s, "constraint")))),
            field(s, "margin").clone(),
        ]);
    }
    if let Some(details) = field(doc, "details").as_object() {
        for (k, v) in details {
            rows.push(vec![Value::from(k.clone()), v.clone()]);
        }
    }
    rows
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DocKind {
    Report,
    Search,
    Eval,
}

pub fn render(doc: &Value, kind: DocKind, format: OutputFormat) -> Result<String, CliError> {
    let (header, rows): (&[&str], _) = match kind {
        DocKind::Report => (&REPORT_HEADER, report_rows(doc)),
        DocKind::Search => (&PROBE_HEADER, probe_rows(doc)),
        DocKind::Eval => (&EVAL_HEADER, eval_rows(doc)),
    };
    match format {
        OutputFormat::Json => Ok(crate::format::to_json(doc)),
        OutputFormat::Csv => csv_table(header, &rows),
        OutputFormat::Markdown => Ok(markdown(doc, kind, header, &rows)),
    }
}

fn markdown(doc: &Value, kind: DocKind, header: &[&str], rows: &[Vec<Value>]) -> String {
    let yes_no = |v: &Value| if v == &Value::Bool(true) { "yes" } else { "no" };
    let cell = crate::format::cell;
    match kind {
        DocKind::Report => {
            let mut out = format!(
                "# Verification at delta = {}, c0 = {}\n\n",
                cell(field(doc, "delta")),
                cell(field(doc, "c0"))
            );
            out.push_str(&markdown_table(header, rows));
            out.push_str(&format!("\nOverall pass: {}\n", yes_no(field(doc, "overall_pass"))));
            out
        }
        DocKind::Search => {
            let mut out = format!(
                "# Delta search on [{}, {}]\n\nOutcome: {}\n\n",
                cell(field(doc, "lo")),
                cell(field(doc, "hi")),
                cell(field(doc, "outcome"))
            );
            out.push_str(&markdown_table(header, rows));
            out
        }
        DocKind::Eval => markdown_table(header, rows),
    }
}
