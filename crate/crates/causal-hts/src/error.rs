use thiserror::Error;

/// Errors surfaced by graph construction, sampling, the statistical
/// machinery, and the discovery pipelines.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied argument is out of range or inconsistent.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An edge set contains a cycle, a self-loop, or an out-of-range vertex.
    #[error("invalid structure: {0}")]
    InvalidStructure(String),

    /// The input data cannot support the requested computation, e.g. a
    /// constant column fed to an independence test.
    #[error("degenerate data: {0}")]
    DegenerateData(String),

    /// A numerical routine failed even after its built-in retries.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// File or stream I/O failed; the context names the path or operation.
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    /// Serialization or deserialization failed.
    #[error("serialization failure: {0}")]
    Serialization(String),
}

impl Error {
    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io { context: context.into(), source }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
