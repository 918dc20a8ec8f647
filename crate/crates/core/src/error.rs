use thiserror::Error;

/// Unified error type for the simulator.
#[derive(Debug, Error)]
pub enum Error {
    /// A state with no nonzero amplitude cannot be normalized or sampled.
    #[error("state has zero norm")]
    ZeroState,
    /// An amplitude was NaN or infinite.
    #[error("non-finite amplitude at {0}")]
    NonFinite(String),
    /// Two objects disagree about which mode labels exist.
    #[error("mode label mismatch: {0}")]
    LabelMismatch(String),
    /// A basis transform was asked of labels already in the target basis,
    /// or of labels it is not defined on.
    #[error("basis error: {0}")]
    Basis(String),
    /// Conditioning on an environment outcome whose marginal probability is zero.
    #[error("environment outcome {0} has zero probability")]
    ZeroProbability(String),
    /// Invalid parameters for an optical element.
    #[error("bad element parameters: {0}")]
    BadParams(String),
    /// A scenario or circuit request that cannot be built.
    #[error("invalid configuration: {0}")]
    Config(String),
    /// A choice event outside the window (first splitter, crossing step].
    #[error("choice event at step {step} outside valid window ({min}, {max}]")]
    ChoiceTiming { step: u32, min: u32, max: u32 },
    /// No path through the circuit reaches the requested detector.
    #[error("circuit topology error: {0}")]
    Topology(String),
    /// Too little data to compute the requested statistic.
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    /// Screen grid spacing too coarse to resolve the finest fringe.
    #[error("screen grid too coarse: spacing {spacing:.3e} m exceeds {required:.3e} m")]
    GridTooCoarse { spacing: f64, required: f64 },
    /// Every slit in the aperture mask is closed.
    #[error("all slits closed")]
    AllClosed,
    /// A field that is zero everywhere has no intensity distribution.
    #[error("field is zero everywhere on the screen")]
    ZeroField,
    /// Malformed scenario text (not JSON at all).
    #[error("parse error: {0}")]
    Parse(String),
    /// Well-formed JSON that violates the scenario schema. Carries the field path.
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
    /// Empirical and predicted distributions use different binnings.
    #[error("binning mismatch: {0}")]
    BinningMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema { path: path.into(), message: message.into() }
    }
}
