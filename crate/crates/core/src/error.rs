use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("graph has no vertices")]
    EmptyGraph,
    #[error("dimension must be at least 1")]
    ZeroDimension,
    #[error("vertex ids must be consecutive from 0 (found id {found} at position {position})")]
    BadVertexId { position: usize, found: usize },
    #[error("edge ids must be consecutive from 0 (found id {found} at position {position})")]
    BadEdgeId { position: usize, found: usize },
    #[error("edge {edge} refers to unknown vertex {vertex}")]
    UnknownVertex { edge: usize, vertex: usize },
    #[error("edge {edge} has index of length {found}, expected {expected}")]
    BadIndexDimension {
        edge: usize,
        found: usize,
        expected: usize,
    },
    #[error("nonpositive weight on {what}")]
    NonpositiveWeight { what: String },
    #[error("duplicate vertex name {0:?}")]
    DuplicateVertexName(String),
    #[error("edge {edge} refers to unknown vertex name {name:?}")]
    UnknownVertexName { edge: usize, name: String },
    #[error("vertex {0} has degree 0")]
    IsolatedVertex(usize),
    #[error("fundamental graph is not connected")]
    Disconnected,
    #[error("cycle indices do not generate the full lattice; the periodic graph is disconnected")]
    LatticeSpanDeficient,

    #[error("edge {0} is not a cotree edge")]
    NotCotreeEdge(usize),
    #[error("could not find {0} cotree edges with linearly independent indices")]
    RankDeficient(usize),

    #[error("matrix is not Hermitian (max asymmetry {asymmetry:e})")]
    NotHermitian { asymmetry: f64 },

    #[error("invalid torus grid: {0}")]
    BadGrid(String),
    #[error("band {band} out of range (graph has {nu} bands)")]
    BadBand { band: usize, nu: usize },
    #[error("graphs differ: {0}")]
    GraphMismatch(String),
    #[error("eigenvalue at the extremum is not simple (distance to neighbours {distance:e})")]
    NotSimpleEigenvalue { distance: f64 },
    #[error("band {band} has no grid-local extremum of the requested kind at the candidate point")]
    NotExtremum { band: usize },

    #[error("invalid parameter: {0}")]
    BadParameter(String),
    #[error("bad flux fraction {p}/{q}")]
    BadFraction { p: i64, q: i64 },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
}

impl Error {
    /// True for errors raised while checking a graph's structural invariants.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::EmptyGraph
                | Error::ZeroDimension
                | Error::BadVertexId { .. }
                | Error::BadEdgeId { .. }
                | Error::UnknownVertex { .. }
                | Error::DuplicateVertexName(_)
                | Error::UnknownVertexName { .. }
                | Error::BadIndexDimension { .. }
                | Error::NonpositiveWeight { .. }
                | Error::IsolatedVertex(_)
                | Error::Disconnected
                | Error::LatticeSpanDeficient
        )
    }
}
