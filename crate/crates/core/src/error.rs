use alloc::string::String;
use core::fmt;

/// Errors produced by model construction and analysis.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Structural problem in the model definition (bad shape, bad edge, bad value).
    InvalidModel(String),
    /// Some ordered pair of states has no finite-cost path.
    Inadmissible { from: String, to: String },
    /// No positive mutation parameter yields a stochastic kernel.
    NoStochasticRange,
    /// Mutation parameter outside `(0, eps_max]`.
    EpsOutOfRange { eps: f64, eps_max: f64 },
    /// Tree enumeration would exceed the configured cap.
    EnumerationCap { cap: u64 },
    /// Linear system is singular (the kernel is not irreducible).
    Singular,
    /// Jacobi sweeps did not bring the off-diagonal mass under tolerance.
    EigenNoConvergence { sweeps: usize, off_diagonal: f64 },
    /// Routing path uses a pair that is not an edge of the symmetrized kernel.
    NonAdmissibleRoute { from: usize, to: usize },
    /// A least-squares fit had too few usable points.
    DegenerateFit { usable: usize },
    /// The schedule leaves the stochastic range at step `n`.
    ScheduleOutOfRange { n: u64, eps: f64 },
    /// Horizon too short or too long for the requested computation.
    Horizon(String),
    /// Invalid numeric parameter.
    InvalidParameter(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidModel(msg) => write!(f, "invalid model: {msg}"),
            Error::Inadmissible { from, to } => {
                write!(f, "inadmissible cost graph: no finite-cost path from {from} to {to}")
            }
            Error::NoStochasticRange => {
                write!(f, "eps_max is not strictly positive: no eps in (0, 1] gives a stochastic kernel")
            }
            Error::EpsOutOfRange { eps, eps_max } => {
                write!(f, "eps = {eps} outside (0, {eps_max}]")
            }
            Error::EnumerationCap { cap } => {
                write!(f, "state space too large for enumeration: more than {cap} trees")
            }
            Error::Singular => write!(f, "singular linear system (kernel not irreducible)"),
            Error::EigenNoConvergence { sweeps, off_diagonal } => write!(
                f,
                "Jacobi eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_diagonal:e})"
            ),
            Error::NonAdmissibleRoute { from, to } => {
                write!(f, "routing path uses non-admissible edge ({from}, {to})")
            }
            Error::DegenerateFit { usable } => {
                write!(f, "degenerate fit: only {usable} usable points (need at least 3)")
            }
            Error::ScheduleOutOfRange { n, eps } => {
                write!(f, "schedule leaves the stochastic range at n = {n} (eps = {eps})")
            }
            Error::Horizon(msg) => write!(f, "horizon: {msg}"),
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
