use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failure classes shared by every module. The CLI maps them to exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    Geometry(String),
    #[error("unsupported geometry: {0}")]
    UnsupportedGeometry(String),
    #[error("invalid mesh: {0}")]
    Mesh(String),
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("undefined weight: {0}")]
    UndefinedWeight(String),
    #[error("singular operator: {0}")]
    Singular(String),
    #[error("ill-posed Neumann map: boundary coefficient kappa0 vanishes on Gamma0")]
    IllPosedMap,
    #[error("geometric precondition failed: {0}")]
    Precondition(String),
    #[error("vector field certification failed: {0}")]
    Certification(String),
    #[error("non-finite state encountered at t = {time}")]
    NonFinite { time: f64 },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("decay fit failed: {0}")]
    Fit(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidArgument(_) => 2,
            Error::Geometry(_)
            | Error::UnsupportedGeometry(_)
            | Error::Precondition(_)
            | Error::Certification(_)
            | Error::Mesh(_) => 3,
            Error::Singular(_)
            | Error::IllPosedMap
            | Error::NonFinite { .. }
            | Error::Numerical(_)
            | Error::Fit(_) => 4,
            Error::Params(_) | Error::UndefinedWeight(_) => 2,
            Error::Io(_) | Error::Json(_) => 1,
        }
    }

    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Geometry(_) => "geometry",
            Error::UnsupportedGeometry(_) => "unsupported_geometry",
            Error::Mesh(_) => "mesh",
            Error::Params(_) => "params",
            Error::UndefinedWeight(_) => "undefined_weight",
            Error::Singular(_) => "singular",
            Error::IllPosedMap => "ill_posed_map",
            Error::Precondition(_) => "precondition",
            Error::Certification(_) => "certification",
            Error::NonFinite { .. } => "non_finite",
            Error::Numerical(_) => "numerical",
            Error::Fit(_) => "fit",
            Error::Config(_) => "config",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
