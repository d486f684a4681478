use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("derivative of order {requested} unavailable (max {available})")]
    UnsupportedDerivative { requested: usize, available: usize },
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("Schwarzian undefined at critical point x = {0}")]
    SingularSchwarzian(f64),
    #[error("hypothesis (H) violated: {0}")]
    HypothesisHViolated(String),
    #[error("g'(0+) = {0} <= 1: no positive fixed point")]
    NoPositiveFixedPoint(f64),
    #[error("wrong parameter regime: {0}")]
    WrongRegime(String),
    #[error("root within {distance:e} of the counting contour at z = {re} + {im}i")]
    ContourDegeneracy { re: f64, im: f64, distance: f64 },
    #[error("root count not monotone along probe sequence: {0}")]
    NonMonotoneCount(String),
    #[error("grid error: {0}")]
    GridError(String),
    #[error("speed c = {c} is below the minimal speed c_* = {c_star}")]
    SpeedBelowMinimal { c: f64, c_star: f64 },
    #[error("iterate left the box [0, {bound}] at t = {t}")]
    DivergedOutOfCone { bound: f64, t: f64 },
    #[error("asymptotic tail too short: {0}")]
    InsufficientTail(String),
    #[error("no local extremum at mesh index {0}")]
    NotAnExtremum(usize),
    #[error("invalid simulation config: {0}")]
    ConfigError(String),
    #[error("numerical blow-up at step {step}")]
    NumericalBlowup { step: usize },
    #[error("front reached 0.9 L at t = {t} before t_end/2")]
    DomainTooSmall { t: f64 },
    #[error("tabulated data: {0}")]
    Tabulation(String),
}
