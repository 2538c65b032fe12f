use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

/// Errors raised by the algorithmic core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A payoff or reward that has to be strictly positive is not.
    NonPositivePayoff(f64),
    /// A utility in an allocation is not strictly positive.
    NonPositiveUtility(f64),
    /// Consumptions fed to the Gini coefficient must be nonnegative.
    NegativeConsumption(f64),
    /// A non-finite number where a finite one is required.
    NonFinite(&'static str),
    /// Altruism weight outside `[0, 1]`.
    AlphaOutOfRange(f64),
    /// The 2x2 payoffs do not satisfy the social-dilemma inequalities.
    NotADilemma,
    /// `T * S > R^2`: the closed-form altruism level would exceed one.
    InconsistentThreshold { ts: f64, r_squared: f64 },
    /// No altruism weight in `[0, 1]` makes a social optimum a pure Nash
    /// equilibrium of the transformed game.
    NotAltruistic,
    /// Dimensions of two objects disagree.
    Shape(String),
    /// An index was out of range.
    Index { what: &'static str, index: usize, len: usize },
    /// A probability vector does not sum to one or has negative entries.
    NotADistribution(&'static str),
    /// Empty input where at least one element is needed.
    Empty(&'static str),
    /// Invalid numeric parameter.
    InvalidParameter { name: &'static str, reason: String },
    /// A learning update was fed data from a different policy version.
    StaleBuffer { expected: u64, found: u64 },
    /// Linear system could not be factorised.
    Singular,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::NonPositivePayoff(v) => {
                write!(f, "payoffs must be strictly positive, found {v}")
            }
            Error::NonPositiveUtility(v) => {
                write!(f, "utilities must be strictly positive, found {v}")
            }
            Error::NegativeConsumption(v) => {
                write!(f, "consumptions must be nonnegative, found {v}")
            }
            Error::NonFinite(what) => write!(f, "{what} must be finite"),
            Error::AlphaOutOfRange(a) => write!(f, "altruism weight {a} is outside [0, 1]"),
            Error::NotADilemma => f.write_str("payoffs do not define a social dilemma"),
            Error::InconsistentThreshold { ts, r_squared } => write!(
                f,
                "T*S = {ts} exceeds R^2 = {r_squared}; altruism level would exceed 1"
            ),
            Error::NotAltruistic => f.write_str("game is not 1-altruistic"),
            Error::Shape(msg) => write!(f, "shape mismatch: {msg}"),
            Error::Index { what, index, len } => {
                write!(f, "{what} index {index} out of range (len {len})")
            }
            Error::NotADistribution(what) => write!(f, "{what} is not a probability vector"),
            Error::Empty(what) => write!(f, "{what} is empty"),
            Error::InvalidParameter { name, reason } => write!(f, "invalid {name}: {reason}"),
            Error::StaleBuffer { expected, found } => write!(
                f,
                "rollout buffer was collected with policy version {found}, learner is at {expected}"
            ),
            Error::Singular => f.write_str("singular linear system"),
        }
    }
}

impl core::error::Error for Error {}

pub(crate) fn check_index(what: &'static str, index: usize, len: usize) -> Result<()> {
    if index < len {
        Ok(())
    } else {
        Err(Error::Index { what, index, len })
    }
}
