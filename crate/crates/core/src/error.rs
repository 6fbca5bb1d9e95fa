use thiserror::Error;

/// Errors produced by the estimators, numerical kernels and file readers.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of a function.
    #[error("domain error: {0}")]
    Domain(String),

    /// An objective or integrand produced NaN or an infinity.
    #[error("non-finite value {value} at point {point:?}")]
    NonFinite { point: Vec<f64>, value: f64 },

    /// The starting point of a bounded search lies outside its box.
    #[error("infeasible starting point: {0}")]
    Infeasible(String),

    /// Two formant vectors do not share the same vowel/formant layout.
    #[error("layout mismatch at entry {index}: expected {expected}, found {found}")]
    LayoutMismatch {
        index: usize,
        expected: String,
        found: String,
    },

    /// A value violates a documented invariant of a domain type.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The denominator of the per-subject shift average vanished.
    #[error(
        "shift average for subject `{subject}` is undefined: sum of (alpha - 1) is {denominator:e}"
    )]
    DegenerateShift { subject: String, denominator: f64 },

    /// A Gibbs update produced a non-finite conditional parameter.
    #[error("degenerate posterior at iteration {iteration}: {detail}")]
    DegeneratePosterior { iteration: usize, detail: String },

    /// Every integrand evaluation underflowed.
    #[error("likelihood numerically zero: {0}")]
    NumericallyZero(String),

    /// A malformed line in an input file.
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    /// A speaker lacks a vowel required to build its formant vector.
    #[error("speaker `{speaker}` has no record for vowel `{vowel}`")]
    MissingVowel { speaker: String, vowel: String },

    /// A vowel class has too few training tokens.
    #[error("vowel class `{vowel}` has {count} samples; at least {required} are required")]
    TooFewSamples {
        vowel: String,
        count: usize,
        required: usize,
    },

    /// A class covariance could not be factorized.
    #[error("covariance of class `{0}` is singular")]
    SingularCovariance(String),

    #[error("i/o error on {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
