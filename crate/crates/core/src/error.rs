//! Unified error type for model, payoff, simulation, and statistics code.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Everything that can go wrong in this crate.
///
/// Variants split into configuration problems (invalid parameters, malformed
/// payoffs) and numerical failures (overflow, non-convergent inversion); the
/// CLI maps the two groups onto distinct exit codes.
#[derive(Debug, Error)]
pub enum Error {
    /// A constructor or routine received a value outside its domain.
    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// A characteristic-function evaluation left the representable range.
    #[error("characteristic function overflow in {context} at u = {u_re}+{u_im}i, tau = {tau}")]
    Overflow {
        context: &'static str,
        u_re: f64,
        u_im: f64,
        tau: f64,
    },

    /// s = i/8 collapses the exponent pair to a double root; the
    /// immunization weights are undefined there.
    #[error("transform argument s = i/8 is the double root of the exponent quadratic")]
    DegenerateRoot,

    /// Payoff specifications must carry at least one term.
    #[error("payoff specification has no terms")]
    EmptyPayoff,

    /// A preset name the payoff registry does not know.
    #[error("unknown payoff preset \"{0}\" (expected exp_pos, exp_neg, put, or volswap)")]
    UnknownPreset(String),

    /// A sample used to build Bernstein coefficients was not finite.
    #[error("payoff target sample at x = {x} is not finite")]
    NonFiniteSample { x: f64 },

    /// Summary statistics need at least two samples.
    #[error("need at least two samples to summarize, got {n}")]
    TooFewSamples { n: usize },

    /// An input slice or grid that must be nonempty was empty.
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    /// The density inversion could not push the integrand tail below target.
    #[error(
        "density inversion did not converge: |psi({s_max})| = {tail:.3e} \
         against peak {peak:.3e}"
    )]
    InversionNonConvergence { tail: f64, peak: f64, s_max: f64 },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures of numerical routines (as opposed to bad inputs).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Overflow { .. }
                | Error::DegenerateRoot
                | Error::InversionNonConvergence { .. }
                | Error::TooFewSamples { .. }
        )
    }
}
