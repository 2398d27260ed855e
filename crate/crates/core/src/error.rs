use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("z = {z:e} m is below the surface floor {floor:e} m")]
    Domain { z: f64, floor: f64 },

    #[error("no total internal reflection: n*sin(theta) = {n_sin_theta} <= 1")]
    SubcriticalAngle { n_sin_theta: f64 },

    #[error("laser is resonant with an atomic line (detuning vanishes)")]
    ZeroDetuning,

    #[error("no stationary point in the search window [{lo:e}, {hi:e}] m")]
    NoStationaryPoint { lo: f64, hi: f64 },

    #[error("no transverse saddle in the search window")]
    NoSaddle,

    #[error("landscape has no trap")]
    NoTrap,

    #[error("landscape has no barrier on axis")]
    NoBarrier,

    #[error("energy is at or above the barrier top")]
    AboveBarrier,

    #[error("{what} did not converge: {detail}")]
    NonConvergence { what: &'static str, detail: String },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate design: {0}")]
    DegenerateDesign(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("argument out of range: {0}")]
    OutOfRange(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid configuration: {0}")]
    Validation(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Stable machine-readable identifier, used in the CLI's JSON error line.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Domain { .. } => "domain",
            Error::SubcriticalAngle { .. } => "subcritical_angle",
            Error::ZeroDetuning => "zero_detuning",
            Error::NoStationaryPoint { .. } => "no_stationary_point",
            Error::NoSaddle => "no_saddle",
            Error::NoTrap => "no_trap",
            Error::NoBarrier => "no_barrier",
            Error::AboveBarrier => "above_barrier",
            Error::NonConvergence { .. } => "non_convergence",
            Error::InsufficientData(_) => "insufficient_data",
            Error::DegenerateDesign(_) => "degenerate_design",
            Error::DegenerateFit(_) => "degenerate_fit",
            Error::OutOfRange(_) => "out_of_range",
            Error::Parse { .. } => "parse_error",
            Error::Validation(_) => "validation_error",
            Error::Io(_) => "io_error",
        }
    }

    pub fn to_json(&self) -> String {
        let mut obj = serde_json::Map::new();
        obj.insert("error".into(), self.code().into());
        obj.insert("message".into(), self.to_string().into());
        if let Error::Parse { line, .. } = self {
            obj.insert("line".into(), (*line).into());
        }
        serde_json::Value::Object(obj).to_string()
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
