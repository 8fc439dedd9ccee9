use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failure modes across the library.
///
/// Parameter validation names the offending field so CLI layers can map it back
/// to a flag. Estimator errors carry the measurement setting they occurred in.
#[derive(Debug, Error)]
pub enum Error {
    /// A constructor or entry point rejected an argument.
    #[error("invalid {field}: {reason}")]
    InvalidParameter {
        field: &'static str,
        reason: String,
    },

    /// A parameter lies outside the mathematical domain of a kernel.
    #[error("{0}")]
    Domain(String),

    /// Probabilities came out inconsistent beyond rounding noise; indicates a bug.
    #[error("internal consistency violated: {0}")]
    Inconsistency(String),

    /// Conditioning on surviving pairs is impossible: the both-alive mass is zero.
    #[error("cannot condition on surviving pairs: both-alive probability mass is zero")]
    DegenerateConditioning,

    /// An estimator received no eligible events.
    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    /// A per-setting correlation estimate failed inside a CHSH estimate.
    #[error("estimate for setting {setting} failed: {source}")]
    SettingEstimate {
        setting: &'static str,
        #[source]
        source: Box<Error>,
    },

    /// The requested kind has no critical x; its CHSH maximum exceeds 2 for every x > 0.
    #[error("no threshold exists for the {kind} kind: its CHSH maximum exceeds 2 for every x > 0")]
    NoThreshold { kind: &'static str },

    /// Bracket expansion never straddled the violation boundary.
    #[error("no crossing of S_max = 2 found for x in [{lo}, {hi}]")]
    Bracketing { lo: f64, hi: f64 },

    /// The pre-bisection scan saw more than one crossing, so bisection would be ambiguous.
    #[error("scan over x in [{lo}, {hi}] does not show a single crossing of S_max = 2")]
    AmbiguousCrossing { lo: f64, hi: f64 },

    /// An x-scan failed at a particular grid point.
    #[error("scan failed at x = {x}: {source}")]
    ScanPoint {
        x: f64,
        #[source]
        source: Box<Error>,
    },
}
