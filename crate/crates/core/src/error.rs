use thiserror::Error;

pub type Result<T, E = HosqError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum HosqError {
    /// An argument lies outside the domain of the requested map or function.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("no convergence after {iterations} iterations: {context}")]
    Convergence { iterations: usize, context: String },

    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("evaluation error: {0}")]
    Eval(String),

    #[error("format error at line {line}: {message}")]
    Format { line: usize, message: String },

    #[error("non-triangle face at line {line} ({vertices} vertices)")]
    NonTriangleFace { line: usize, vertices: usize },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    /// Projection failure while building the geometry of one element.
    #[error("element {element}")]
    Element {
        element: usize,
        #[source]
        source: Box<HosqError>,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl HosqError {
    /// Strips any [`HosqError::Element`] wrappers.
    pub fn root(&self) -> &HosqError {
        match self {
            HosqError::Element { source, .. } => source.root(),
            other => other,
        }
    }
}
