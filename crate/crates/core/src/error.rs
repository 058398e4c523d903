use std::io;

/// Errors raised anywhere in the setup or solve pipeline.
///
/// Variant names double as the error name printed by the command-line driver.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("IndexError: {0}")]
    Index(String),

    #[error("DimError: {0}")]
    Dim(String),

    #[error("FormatError: {0}")]
    Format(String),

    #[error("InputError: {0}")]
    Input(String),

    #[error("SplittingError: relative splitting error {error:e} exceeds {limit:e}")]
    Splitting { error: f64, limit: f64 },

    #[error("EigError: {0}")]
    Eig(String),

    #[error("SetupError: {0}")]
    Setup(String),

    #[error("IndefiniteError: {0}")]
    Indefinite(String),

    #[error("SizeError: {0}")]
    Size(String),

    #[error("IoError: {0}")]
    Io(#[from] io::Error),
}

impl Error {
    /// Short name of the error class, e.g. `"DimError"`.
    pub fn name(&self) -> &'static str {
        match self {
            Error::Index(_) => "IndexError",
            Error::Dim(_) => "DimError",
            Error::Format(_) => "FormatError",
            Error::Input(_) => "InputError",
            Error::Splitting { .. } => "SplittingError",
            Error::Eig(_) => "EigError",
            Error::Setup(_) => "SetupError",
            Error::Indefinite(_) => "IndefiniteError",
            Error::Size(_) => "SizeError",
            Error::Io(_) => "IoError",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
