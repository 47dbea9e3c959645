use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function being evaluated.
    #[error("domain error: {0}")]
    Domain(String),

    /// A hypothesis of one of the zero-density inequalities fails for the
    /// supplied parameters (for example `x < 0.8 * lambda0` or `Delta^2 <= xi`).
    #[error("infeasible parameters: {0}")]
    Infeasible(String),

    /// The optimizer's coarse scan found no point satisfying the constraints.
    #[error("no feasible point in search region: {0}")]
    NoFeasiblePoint(String),

    /// A precondition of an auxiliary construction fails.
    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be finite, got {v}")))
    }
}
