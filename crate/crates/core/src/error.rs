use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    // geometry
    #[error("segment endpoints coincide")]
    DegenerateSegment,
    #[error("triangle is degenerate (collinear vertices)")]
    DegenerateTriangle,
    #[error("matrix is singular (det = {det})")]
    SingularMatrix { det: f64 },

    // surface construction
    #[error("edge vectors do not close up (sum = ({x}, {y}))")]
    NotClosed { x: f64, y: f64 },
    #[error("polygon {polygon} is not simple: {reason}")]
    NotSimplePolygon { polygon: usize, reason: String },
    #[error("bad pairing: {0}")]
    BadPairing(String),
    #[error("degenerate surface: {0}")]
    DegenerateSurface(String),
    #[error("unknown edge {0}")]
    UnknownEdge(usize),
    #[error("unknown builtin surface '{0}'")]
    UnknownName(String),
    #[error("bad parameter: {0}")]
    BadParam(String),

    // flow
    #[error("start point lies on a vertex")]
    StartOnVertex,
    #[error("start point is not inside face {face}")]
    StartOutsideFace { face: usize },
    #[error("no return to the transversal within {budget} crossings")]
    NoReturn { budget: usize },

    // moduli action
    #[error("Delaunay flip budget of {budget} exceeded")]
    FlipLimitExceeded { budget: usize },
    #[error("saddle connection search exceeded its budget of {budget} developed triangles")]
    SearchBudgetExceeded { budget: usize },

    // billiards
    #[error("start point is not strictly inside the table")]
    StartOutside,
    #[error("angle {angle} at vertex {vertex} is not a rational multiple of pi")]
    IrrationalAngle { vertex: usize, angle: f64 },
    #[error("bad table: {0}")]
    BadTable(String),
    #[error("bad windtree dimensions: {0}")]
    BadDimensions(String),
    #[error("start point lies inside an obstacle")]
    StartInsideObstacle,

    // experiments
    #[error("every sampled direction hit a corner ({attempts} attempts)")]
    AllDirectionsSingular { attempts: usize },
    #[error("illumination source lies on a vertex")]
    SourceOnVertex,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DegenerateSegment => "DegenerateSegment",
            Error::DegenerateTriangle => "DegenerateTriangle",
            Error::SingularMatrix { .. } => "SingularMatrix",
            Error::NotClosed { .. } => "NotClosed",
            Error::NotSimplePolygon { .. } => "NotSimplePolygon",
            Error::BadPairing(_) => "BadPairing",
            Error::DegenerateSurface(_) => "DegenerateSurface",
            Error::UnknownEdge(_) => "UnknownEdge",
            Error::UnknownName(_) => "UnknownName",
            Error::BadParam(_) => "BadParam",
            Error::StartOnVertex => "StartOnVertex",
            Error::StartOutsideFace { .. } => "StartOutsideFace",
            Error::NoReturn { .. } => "NoReturn",
            Error::FlipLimitExceeded { .. } => "FlipLimitExceeded",
            Error::SearchBudgetExceeded { .. } => "SearchBudgetExceeded",
            Error::StartOutside => "StartOutside",
            Error::IrrationalAngle { .. } => "IrrationalAngle",
            Error::BadTable(_) => "BadTable",
            Error::BadDimensions(_) => "BadDimensions",
            Error::StartInsideObstacle => "StartInsideObstacle",
            Error::AllDirectionsSingular { .. } => "AllDirectionsSingular",
            Error::SourceOnVertex => "SourceOnVertex",
            Error::InvalidArgument(_) => "InvalidArgument",
        }
    }
}
