use std::io;
use std::path::PathBuf;

use kuramoto_hebbian::Error as ModelError;
use serde_json::json;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Model(#[from] ModelError),

    #[error("{0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },

    #[error("cannot parse {path}: {message}")]
    Parse { path: PathBuf, message: String },
}

pub type Result<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(io::Error) -> Self {
        let path = path.into();
        move |source| Self::Io { path, source }
    }

    fn is_input_error(&self) -> bool {
        match self {
            Self::Usage(_) | Self::Parse { .. } => true,
            Self::Model(e) => matches!(
                e,
                ModelError::InvalidParameter(_)
                    | ModelError::InvalidConfig(_)
                    | ModelError::NoEquilibria { .. }
                    | ModelError::NotRotating { .. }
            ),
            Self::Io { .. } => false,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Io { .. } => "io",
            _ if self.is_input_error() => "invalid-input",
            _ => "numerical",
        }
    }

    /// 2 for bad input, 1 for failures during the run.
    pub fn exit_code(&self) -> u8 {
        if self.is_input_error() {
            2
        } else {
            1
        }
    }

    pub fn to_json(&self, command: &str) -> serde_json::Value {
        json!({
            "error": { "kind": self.kind(), "message": self.to_string() },
            "command": command,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn input_problems_exit_with_two() {
        let e = CliError::from(ModelError::InvalidParameter("m".into()));
        assert_eq!((e.kind(), e.exit_code()), ("invalid-input", 2));
        let e = CliError::from(ModelError::NonFinite { t: 1.0 });
        assert_eq!((e.kind(), e.exit_code()), ("numerical", 1));
        let e = CliError::io("x")(io::Error::other("boom"));
        assert_eq!((e.kind(), e.exit_code()), ("io", 1));
    }

    #[test]
    fn json_names_the_command() {
        let v = CliError::Usage("bad".into()).to_json("replay");
        assert_eq!(v["command"], "replay");
        assert_eq!(v["error"]["message"], "bad");
    }
}
