use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("d must be >= 3 (got {0})")]
    InvalidDimension(u32),

    #[error("profile values must be non-negative (got {0})")]
    NegativeProfileValue(f64),

    #[error("step budget exhausted at a={a}, r={r} after {steps} steps")]
    BudgetExceeded { a: f64, r: f64, steps: usize },

    #[error("step size underflow at a={a}, r={r}")]
    StepUnderflow { a: f64, r: f64 },

    #[error("invalid bisection bracket ({lo}, {hi}): endpoint classifications do not differ")]
    InvalidBracket { lo: f64, hi: f64 },

    #[error("u(.,a) does not cross zero for a={0}")]
    NotCrossing(f64),

    #[error("classification ambiguous near the critical height: a={a}, first minimum {min_u:e}")]
    AmbiguousNearCritical { a: f64, min_u: f64 },

    #[error("expected exactly one zero of the sensitivity on (0,R(a)) at a={a}, found {count}")]
    ThetaZeroCount { a: f64, count: usize },

    #[error("dimension mismatch: {left} vs {right}")]
    InconsistentDimension { left: u32, right: u32 },

    #[error("threshold ordering violated: M2={m2} <= Mc={mc}")]
    ThresholdOrdering { mc: f64, m2: f64 },

    #[error("time {t} outside [0, T) with T={t_blowup}")]
    TimeOutOfRange { t: f64, t_blowup: f64 },
}
