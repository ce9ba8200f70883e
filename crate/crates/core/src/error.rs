use std::fmt;

use crate::model::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid problem:\n{}", ViolationList(.0))]
    Invalid(Vec<Violation>),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("stage {stage} out of range for a policy with {stages} stage(s)")]
    StageOutOfRange { stage: usize, stages: usize },

    #[error("state {state:?} is not a point of the state grid")]
    OffGrid { state: Vec<f64> },

    #[error("stage {stage} is not of {expected} form: first violation at x = {state} ({detail})")]
    Structure {
        expected: &'static str,
        stage: usize,
        state: f64,
        detail: String,
    },

    #[error("joint table too large: {locations} location(s) x {points} grid points = {size} entries (limit {limit})")]
    TooLarge {
        locations: usize,
        points: usize,
        size: u128,
        limit: usize,
    },

    #[error("ordering cost is not sector-bounded: {0}")]
    NotSectorBoundable(String),

    #[error("no affine lower envelope with positive fixed charge: {0}")]
    NoAffineLower(String),

    #[error("fit/family mismatch: {0}")]
    FitMismatch(String),

    #[error("invalid cost transformation: {0}")]
    InvalidTransformation(String),

    #[error("policy incompatible with problem: {0}")]
    Incompatible(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

struct ViolationList<'a>(&'a [Violation]);

impl fmt::Display for ViolationList<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "  - {v}")?;
        }
        Ok(())
    }
}
