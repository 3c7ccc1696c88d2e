use thiserror::Error;

/// Errors raised across the toolkit.
///
/// Variants fall into three families (size guards, domain/numeric failures,
/// and I/O or parse problems) so front ends can map them to exit codes.
#[derive(Debug, Error)]
pub enum GasketError {
    #[error("{what} = {value} exceeds the guard {limit}")]
    GuardExceeded {
        what: &'static str,
        value: u64,
        limit: u64,
    },

    #[error("domain error in {op}: {detail}")]
    Domain { op: &'static str, detail: String },

    #[error("orbit hit the pole of the renormalization map at step {step}")]
    SingularOrbit { step: usize },

    #[error("evaluation point {point} lies within {tol:e} of atom {atom}")]
    NearSingularity {
        point: String,
        atom: String,
        tol: f64,
    },

    #[error("{0}")]
    Invariant(String),

    #[error("empty input to {0}")]
    Empty(&'static str),

    #[error("unsupported precision: {0} bits (only 53-bit hardware doubles are available)")]
    Precision(u32),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl GasketError {
    pub fn is_guard(&self) -> bool {
        matches!(self, GasketError::GuardExceeded { .. } | GasketError::Precision(_))
    }

    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            GasketError::Domain { .. }
                | GasketError::SingularOrbit { .. }
                | GasketError::NearSingularity { .. }
                | GasketError::Invariant(_)
                | GasketError::Empty(_)
        )
    }

    pub(crate) fn domain(op: &'static str, detail: impl Into<String>) -> Self {
        GasketError::Domain {
            op,
            detail: detail.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, GasketError>;

pub(crate) fn guard(what: &'static str, value: u64, limit: u64) -> Result<()> {
    if value > limit {
        Err(GasketError::GuardExceeded { what, value, limit })
    } else {
        Ok(())
    }
}
