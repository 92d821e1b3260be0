use std::path::PathBuf;

/// Unified error type. `Config` maps to CLI exit code 2, everything else to 3.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Invalid experiment configuration: bad parameter values, unknown keys,
    /// inconsistent settings.
    #[error("invalid config: {0}")]
    Config(String),

    /// Structurally invalid input to a library operation (mismatched
    /// dimensions, empty matrices, misaligned replicate tables).
    #[error("invalid input: {0}")]
    Input(String),

    /// A text artifact (map, metrics CSV, heatmap CSV) failed to parse.
    #[error("{file}:{line}: {msg}")]
    Parse {
        file: String,
        /// 1-based line number; 0 when the error is not tied to a line.
        line: usize,
        msg: String,
    },

    /// The exact-probability oracle was asked for a case outside its
    /// enumerable range.
    #[error("oracle too large: {0}")]
    OracleTooLarge(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub fn parse(file: impl Into<String>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            file: file.into(),
            line,
            msg: msg.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
