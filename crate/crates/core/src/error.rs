use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("sphere too large for exact mode: n = {n} exceeds cap {cap}")]
    SphereCapExceeded { n: usize, cap: usize },

    #[error("coin tape too long for exact enumeration: t(n) = {t} exceeds cap {cap}")]
    TapeCapExceeded { t: usize, cap: usize },

    #[error("input length {n} is outside the domain of `{name}`")]
    Domain { name: String, n: usize },

    #[error("`{name}` used {steps} steps at n = {n}, above its declared bound {bound}")]
    StepBoundViolated { name: String, n: usize, steps: u64, bound: u64 },

    #[error("`{name}` ran out of fuel at n = {n} although fuel {fuel} meets its declared bound")]
    FuelBoundViolated { name: String, n: usize, fuel: u64 },

    #[error("`{name}` produced {got} output bits at n = {n}, expected m(n) = {want}")]
    OutputLength { name: String, n: usize, got: usize, want: usize },

    #[error("coin tape has {got} bits but `{name}` declares t({n}) = {want}")]
    TapeLength { name: String, n: usize, got: usize, want: usize },

    #[error("`{name}` read past the end of its {len}-bit coin tape")]
    TapeExhausted { name: String, len: usize },

    #[error("coin-length arithmetic overflow for `{name}` at n = {n}")]
    CoinLengthOverflow { name: String, n: usize },

    #[error("membership predicate `{label}` exceeded its step budget {budget}")]
    PredicateFuel { label: String, budget: u64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("profile has {got} points, at least {need} required")]
    TooFewPoints { got: usize, need: usize },

    #[error("unknown {kind} `{name}`")]
    UnknownName { kind: &'static str, name: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("step budget exhausted")]
    OutOfFuel,

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// True for the enumeration-cap refusals; the CLI maps these to their own exit code.
    pub fn is_cap_violation(&self) -> bool {
        matches!(self, Error::SphereCapExceeded { .. } | Error::TapeCapExceeded { .. })
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<crate::meter::OutOfFuel> for Error {
    fn from(_: crate::meter::OutOfFuel) -> Self {
        Error::OutOfFuel
    }
}
