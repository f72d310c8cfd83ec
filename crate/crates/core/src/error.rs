use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("singular postselection: |<P_f|P_i>| = {overlap:e} is below {epsilon:e}")]
    SingularPostselection { overlap: f64, epsilon: f64 },

    #[error("coupling strength {alpha_deg:.4} deg outside ({min_deg:.4}, 180] deg")]
    StrengthOutOfRange { alpha_deg: f64, min_deg: f64 },

    #[error("normalization intensity I_x+ = {0:e} is not positive")]
    NormalizationVanishes(f64),

    #[error("contrast {0} is too low to correct (minimum 0.1)")]
    ContrastTooLow(f64),

    #[error("degenerate state: both projector weak values vanish")]
    DegenerateState,

    #[error("degenerate design: {0}")]
    DegenerateDesign(String),

    #[error("scan contains only zero counts")]
    AllZeroCounts,

    #[error("fitted offset {0} is not positive")]
    NonPositiveOffset(f64),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    InvalidConfig(Vec<String>),

    #[error("missing scan for direction(s) {directions} at phi = {phi_rad} rad")]
    MissingDirection { directions: String, phi_rad: f64 },

    #[error("malformed campaign data: {0}")]
    Malformed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io(_) => 1,
            Error::Csv(e) if matches!(e.kind(), csv::ErrorKind::Io(_)) => 1,
            _ => 2,
        }
    }
}
