//! The 31 tabulated constants and their recomputation.

use serde::Serialize;

use super::book::{BoundBook, Quantity};
use super::PAPER_TOLERANCE;

/// A tabulated constant together with the quantity that recomputes it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TableEntry {
    pub quantity: Quantity,
    pub paper: f64,
    /// Why this pairing differs from the table's own labelling, if it does.
    pub note: Option<&'static str>,
}

const fn entry(quantity: Quantity, paper: f64) -> TableEntry {
    TableEntry {
        quantity,
        paper,
        note: None,
    }
}

const fn general_tail(cap: f64, paper: f64) -> TableEntry {
    entry(Quantity::TailGeneral { cap }, paper)
}

const fn stair(cap: f64, lambda0: f64, paper: f64) -> TableEntry {
    entry(Quantity::TailStaircase { cap, lambda0 }, paper)
}

const fn head_g(cap: f64, l1: f64, l2: f64, ls: f64, paper: f64) -> TableEntry {
    entry(
        Quantity::HeadGeneral {
            cap,
            lambda1: l1,
            lambda2: l2,
            lambda_star: ls,
        },
        paper,
    )
}

const fn head_r(cap: f64, l1: f64, l2: f64, ls: f64, paper: f64) -> TableEntry {
    entry(
        Quantity::HeadRestricted {
            cap,
            lambda1: l1,
            lambda2: l2,
            lambda_star: ls,
        },
        paper,
    )
}

pub const SWAPPED_ROW_NOTE: &str =
    "the table prints 0.0475 and 0.2760 against each other's parameters; paired here as the case analysis uses them";

pub const TABLE: [TableEntry; 31] = [
    general_tail(3.08, 0.675),
    general_tail(1.58, 5.899),
    general_tail(1.348, 7.715),
    general_tail(1.311, 8.030),
    general_tail(1.29, 8.211),
    general_tail(1.273, 8.359),
    entry(Quantity::TailDecay { anchor: 3.08 }, 50.0),
    entry(Quantity::TailRestricted { cap: 5.0 }, 0.001),
    stair(1.58, 1.58, 0.0380),
    stair(1.58, 0.08, 0.0575),
    stair(1.36, 1.36, 0.0699),
    stair(1.348, 0.60, 0.0855),
    stair(1.311, 0.97, 0.0856),
    stair(1.311, 0.92, 0.0872),
    stair(1.311, 0.50, 0.0956),
    stair(1.29, 1.29, 0.0837),
    stair(1.29, 0.30, 0.1061),
    stair(1.273, 1.08, 0.0911),
    stair(1.273, 0.40, 0.1076),
    head_g(1.273, 1.08, 1.08, 1.08, 0.2668),
    head_g(1.311, 0.97, 0.97, 0.97, 0.3175),
    head_g(1.311, 0.92, 0.92, 0.92, 0.3487),
    head_g(1.348, 0.60, 0.60, 0.702, 0.6720),
    TableEntry {
        quantity: Quantity::HeadRestricted {
            cap: 1.273,
            lambda1: 1.08,
            lambda2: 1.08,
            lambda_star: 1.08,
        },
        paper: 0.0475,
        note: Some(SWAPPED_ROW_NOTE),
    },
    TableEntry {
        quantity: Quantity::HeadRestricted {
            cap: 1.273,
            lambda1: 0.40,
            lambda2: 1.08,
            lambda_star: 1.08,
        },
        paper: 0.2760,
        note: Some(SWAPPED_ROW_NOTE),
    },
    head_r(1.311, 0.97, 0.97, 0.97, 0.0985),
    head_r(1.311, 0.50, 0.97, 0.97, 0.2423),
    head_r(1.311, 0.50, 0.50, 0.97, 0.3613),
    head_r(1.311, 0.92, 0.92, 0.92, 0.1253),
    head_r(1.311, 0.50, 0.92, 0.92, 0.2920),
    head_r(1.348, 0.60, 0.60, 0.702, 0.3149),
];

pub fn table_quantities() -> Vec<Quantity> {
    TABLE.iter().map(|e| e.quantity).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub id: String,
    pub paper: f64,
    /// `None` when the bound could not be computed.
    pub computed: Option<f64>,
    /// `paper - computed`.
    pub margin: Option<f64>,
    /// Every recorded constraint slack is non-negative.
    pub feasible: bool,
    pub min_slack: Option<f64>,
    pub pass: bool,
    pub note: Option<String>,
}

pub fn reproduce_tables(book: &BoundBook) -> Vec<TableRow> {
    TABLE
        .iter()
        .map(|e| {
            let id = e.quantity.label();
            match book.get(&e.quantity) {
                Ok(ev) => {
                    let computed = ev.value();
                    let slack = ev.min_slack();
                    let feasible = slack >= 0.0 && computed.is_finite();
                    TableRow {
                        id,
                        paper: e.paper,
                        computed: Some(computed),
                        margin: Some(e.paper - computed),
                        feasible,
                        min_slack: Some(slack),
                        pass: feasible && computed <= e.paper + PAPER_TOLERANCE,
                        note: e.note.map(str::to_string),
                    }
                }
                Err(err) => TableRow {
                    id,
                    paper: e.paper,
                    computed: None,
                    margin: None,
                    feasible: false,
                    min_slack: None,
                    pass: false,
                    note: Some(err.to_string()),
                },
            }
        })
        .collect()
}
