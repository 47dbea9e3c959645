//! Every bound the case analysis consumes, computed once per `delta`.

use rayon::prelude::*;
use serde::Serialize;

use crate::density::{
    decay_coefficient, optimize_t_density, t_bound_staircase_with, DecayBound, StaircaseOptions, TBoundResult,
};
use crate::error::{Error, Result};
use crate::rbound::{optimize_r, HeadScenario, RBoundResult};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Quantity {
    /// Optimized density bound on `T(Lambda)`, general regime.
    TailGeneral { cap: f64 },
    /// Optimized density bound on `T(Lambda)`, restricted regime.
    TailRestricted { cap: f64 },
    /// Coefficient `C` with `T(Lambda) <= C e^(-2 Lambda)` for `Lambda >= anchor`, restricted regime.
    TailDecay { anchor: f64 },
    /// Staircase bound on `T(Lambda)` given `lambda_1 >= lambda0`.
    TailStaircase { cap: f64, lambda0: f64 },
    HeadGeneral {
        cap: f64,
        lambda1: f64,
        lambda2: f64,
        lambda_star: f64,
    },
    /// Restricted head bound, best `N0`.
    HeadRestricted {
        cap: f64,
        lambda1: f64,
        lambda2: f64,
        lambda_star: f64,
    },
}

impl Quantity {
    pub fn label(&self) -> String {
        match *self {
            Quantity::TailGeneral { cap } => format!("tail_general/{cap}"),
            Quantity::TailRestricted { cap } => format!("tail_restricted/{cap}"),
            Quantity::TailDecay { anchor } => format!("tail_decay/{anchor}"),
            Quantity::TailStaircase { cap, lambda0 } => format!("staircase/{cap}/{lambda0}"),
            Quantity::HeadGeneral {
                cap,
                lambda1,
                lambda2,
                lambda_star,
            } => {
                format!("head_general/{cap}/{lambda1}/{lambda2}/{lambda_star}")
            }
            Quantity::HeadRestricted {
                cap,
                lambda1,
                lambda2,
                lambda_star,
            } => {
                format!("head_restricted/{cap}/{lambda1}/{lambda2}/{lambda_star}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Evidence {
    Tail(TBoundResult),
    Decay(DecayBound),
    Head(RBoundResult),
}

impl Evidence {
    pub fn value(&self) -> f64 {
        match self {
            Evidence::Tail(t) => t.bound,
            Evidence::Decay(d) => d.coefficient,
            Evidence::Head(r) => r.bound,
        }
    }

    pub fn min_slack(&self) -> f64 {
        match self {
            Evidence::Tail(t) => t.min_slack(),
            Evidence::Decay(d) => d.rate_slack,
            Evidence::Head(r) => r.min_slack(),
        }
    }
}

pub fn evaluate(q: &Quantity, delta: f64, grid_points: usize) -> Result<Evidence> {
    match *q {
        Quantity::TailGeneral { cap } => optimize_t_density(delta, cap, false).map(Evidence::Tail),
        Quantity::TailRestricted { cap } => optimize_t_density(delta, cap, true).map(Evidence::Tail),
        Quantity::TailDecay { anchor } => decay_coefficient(delta, anchor, true).map(Evidence::Decay),
        Quantity::TailStaircase { cap, lambda0 } => {
            let opts = StaircaseOptions {
                grid_points,
                ..StaircaseOptions::default()
            };
            t_bound_staircase_with(delta, cap, lambda0, opts).map(Evidence::Tail)
        }
        Quantity::HeadGeneral {
            cap,
            lambda1,
            lambda2,
            lambda_star,
        } => {
            let sc = HeadScenario::general(cap, lambda1, lambda2, lambda_star)?;
            optimize_r(delta, &sc).map(Evidence::Head)
        }
        Quantity::HeadRestricted {
            cap,
            lambda1,
            lambda2,
            lambda_star,
        } => {
            let sc = HeadScenario::restricted(cap, lambda1, lambda2, lambda_star, None)?;
            optimize_r(delta, &sc).map(Evidence::Head)
        }
    }
}

/// Evaluated bounds keyed by [`Quantity`]. Failures are kept, not thrown.
#[derive(Debug, Clone)]
pub struct BoundBook {
    pub delta: f64,
    pub grid_points: usize,
    entries: Vec<(Quantity, Result<Evidence>)>,
}

impl BoundBook {
    pub fn compute(delta: f64, quantities: &[Quantity], grid_points: usize) -> Self {
        let mut unique: Vec<Quantity> = Vec::new();
        for q in quantities {
            if !unique.contains(q) {
                unique.push(*q);
            }
        }
        let results: Vec<Result<Evidence>> = unique.par_iter().map(|q| evaluate(q, delta, grid_points)).collect();
        Self {
            delta,
            grid_points,
            entries: unique.into_iter().zip(results).collect(),
        }
    }

    pub fn get(&self, q: &Quantity) -> Result<&Evidence> {
        match self.entries.iter().find(|(k, _)| k == q) {
            Some((_, Ok(e))) => Ok(e),
            Some((_, Err(e))) => Err(e.clone()),
            None => Err(Error::Precondition(format!("{} was not computed", q.label()))),
        }
    }

    pub fn value(&self, q: &Quantity) -> Result<f64> {
        self.get(q).map(Evidence::value)
    }

    pub fn entries(&self) -> &[(Quantity, Result<Evidence>)] {
        &self.entries
    }
}
