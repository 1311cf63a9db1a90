use std::fmt;

/// Errors raised by geometry, models and solvers.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("point lies in the cut locus{}", CutLocusContext(*.index, *.step))]
    CutLocus {
        /// Pixel (or list) index, when raised from a pixel-wise evaluation.
        index: Option<usize>,
        /// Name of the sub-step (ladder rung, reflection, ...) that failed.
        step: Option<&'static str>,
    },

    #[error("degenerate geodesic: the end points coincide")]
    DegenerateGeodesic,

    #[error("singular coefficient: sin(sqrt(kappa)) vanishes for kappa = {kappa}")]
    SingularCoefficient { kappa: f64 },

    #[error("{what} did not converge within {iterations} iterations")]
    NotConverged {
        what: &'static str,
        iterations: usize,
    },

    #[error("term {index} ({label}): {source}")]
    Term {
        index: usize,
        label: String,
        source: Box<Error>,
    },

    #[error("objective increased from {before} to {after} at iteration {iteration}")]
    ObjectiveIncrease {
        iteration: usize,
        before: f64,
        after: f64,
    },
}

struct CutLocusContext(Option<usize>, Option<&'static str>);

impl fmt::Display for CutLocusContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(step) = self.1 {
            write!(f, " during {step}")?;
        }
        if let Some(index) = self.0 {
            write!(f, " at index {index}")?;
        }
        Ok(())
    }
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn cut_locus() -> Self {
        Error::CutLocus {
            index: None,
            step: None,
        }
    }

    /// Attaches a pixel index to a cut-locus error; other errors pass through.
    pub fn at_index(self, i: usize) -> Self {
        match self {
            Error::CutLocus { index: None, step } => Error::CutLocus {
                index: Some(i),
                step,
            },
            other => other,
        }
    }

    /// Attaches the name of the failing sub-step to a cut-locus error.
    pub fn in_step(self, name: &'static str) -> Self {
        match self {
            Error::CutLocus { index, step: None } => Error::CutLocus {
                index,
                step: Some(name),
            },
            other => other,
        }
    }

    /// True for errors caused by the geometry of the input (cut loci,
    /// degenerate geodesics, singular Jacobi coefficients).
    pub fn is_geometric(&self) -> bool {
        matches!(
            self.root(),
            Error::CutLocus { .. } | Error::DegenerateGeodesic | Error::SingularCoefficient { .. }
        )
    }

    /// The underlying error with term annotations stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::Term { source, .. } => source.root(),
            other => other,
        }
    }

    /// Wraps the error with the index and label of the splitting term.
    pub fn in_term(self, index: usize, label: impl Into<String>) -> Self {
        Error::Term {
            index,
            label: label.into(),
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
