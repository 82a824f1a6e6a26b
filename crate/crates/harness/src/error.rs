use thiserror::Error;

/// Failure classes, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum HarnessError {
    /// Bad configuration, arguments, or record contents.
    #[error("{0}")]
    Validation(String),
    /// A fault while an experiment was running.
    #[error("{0}")]
    Runtime(String),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Validation(_) => 2,
            HarnessError::Runtime(_) => 3,
        }
    }
}

impl From<steinbound_core::Error> for HarnessError {
    fn from(e: steinbound_core::Error) -> Self {
        match e {
            steinbound_core::Error::InvalidInput(m) => HarnessError::Validation(m),
            other => HarnessError::Runtime(other.to_string()),
        }
    }
}

pub type HarnessResult<T> = std::result::Result<T, HarnessError>;
