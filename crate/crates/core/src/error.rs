use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum Error {
    #[error("operands belong to different base rings")]
    RingMismatch,

    #[error("element is indistinguishable from zero: valuation only known to be >= {bound}")]
    IndistinguishableFromZero { bound: i64 },

    #[error("division by exact zero")]
    DivisionByZero,

    #[error("degenerate polygon: valuation at abscissa {abscissa} cannot be resolved at the stored precision")]
    DegeneratePolygon { abscissa: i64 },

    #[error("degenerate precision: the precision datum does not dominate the polygon of the approximation")]
    DegeneratePrecision,

    #[error("leading coefficient is zero or has unknown valuation")]
    BadLeadingCoefficient,

    #[error("modulus of degree zero has no remainder domain")]
    ZeroDegreeModulus,

    #[error("the Newton polygon has no extremal point at abscissa {d}")]
    NoBreakAt { d: i64 },

    #[error("slope factorization requires delta > 0, got {delta}")]
    NonPositiveDelta { delta: String },

    #[error("lattice is rank deficient or unresolvable in row {row} at cap {cap}")]
    RankDeficient { row: i64, cap: i64 },

    #[error("working cap {cap} is insufficient to decide the query")]
    InsufficientCap { cap: i64 },

    #[error("iteration guard of {max} steps exceeded: precision too coarse or first-order hypothesis violated")]
    IterationGuard { max: u32 },

    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
