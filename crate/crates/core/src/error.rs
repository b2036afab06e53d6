use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {context}: {detail}")]
    Shape { context: &'static str, detail: String },

    #[error("{solver} did not converge after {iterations} iterations (last relative change {last_change:e})")]
    Diverged {
        solver: &'static str,
        iterations: usize,
        last_change: f64,
    },

    #[error("{context}: matrix is not stable (spectral radius {spectral_radius})")]
    Unstable {
        context: &'static str,
        spectral_radius: f64,
    },

    #[error("{context}: argument out of domain: {detail}")]
    Domain { context: &'static str, detail: String },

    #[error("{context}: matrix is not positive definite (min eigenvalue {min_eigenvalue:e})")]
    Definiteness {
        context: &'static str,
        min_eigenvalue: f64,
    },

    /// The inner curvature matrix of the backward recursion lost definiteness at step `t`.
    #[error("attack synthesis certificate failed at t = {t}: {detail}")]
    Certificate { t: usize, detail: String },

    #[error("model rejected: {}", .0.join("; "))]
    InvalidModel(Vec<String>),

    #[error("parse error at `{key}`: {detail}")]
    Parse { key: String, detail: String },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn shape(context: &'static str, detail: impl Into<String>) -> Self {
        Error::Shape {
            context,
            detail: detail.into(),
        }
    }

    pub(crate) fn domain(context: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            context,
            detail: detail.into(),
        }
    }

    pub(crate) fn parse(key: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Parse {
            key: key.into(),
            detail: detail.into(),
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// True for failures caused by unreadable or malformed input rather than
    /// by the numerics; the CLI maps these to exit code 2.
    pub fn is_input_error(&self) -> bool {
        matches!(self, Error::Parse { .. } | Error::Io { .. })
    }
}
