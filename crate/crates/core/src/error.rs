use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },
    #[error("non-manifold edge ({a}, {b}) is shared by {count} faces")]
    NonManifoldEdge { a: usize, b: usize, count: usize },
    #[error("face {face} references vertex {index}, but the mesh has {count} vertices")]
    IndexOutOfRange { face: usize, index: usize, count: usize },
    #[error("face {0} repeats a vertex index")]
    DegenerateFace(usize),
    #[error("3D face {0} has zero area")]
    ZeroAreaFace(usize),
    #[error("seam segment ({0}, {1}) is not an edge of the mesh")]
    SeamNotOnMesh(usize, usize),
    #[error("chart {0} is a closed surface with no boundary; supply seams that open it")]
    ClosedChart(usize),
    #[error("cutting produced a chart with no faces")]
    EmptyChart,
    #[error("chart is not a topological disk: {0}")]
    NotDisk(String),
    #[error("linear system is singular: {0}")]
    Singular(String),
    #[error("pinned vertices coincide")]
    CoincidentPins,
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("resolution mismatch: {0} vs {1}")]
    ResolutionMismatch(usize, usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("token framing error: {0}")]
    Framing(String),
    #[error("faces without texture coordinates: {0}")]
    MissingUv(String),
    #[error("faces not covered by any island: {0:?}")]
    UncoveredFaces(Vec<usize>),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Image(#[from] image::ImageError),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Numerical failures as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Singular(_) | Error::Degenerate(_))
    }
}
