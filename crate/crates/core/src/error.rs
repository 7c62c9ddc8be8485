use std::path::PathBuf;

use crate::topology::GridPos;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("input out of domain: {0}")]
    InputDomain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("node {0} is outside the {1}x{2} grid")]
    OutOfBounds(GridPos, usize, usize),

    #[error("no route from a node to itself ({0})")]
    EmptyRoute(GridPos),

    #[error("link {link} is busy over mini-slots {start}..{end}")]
    LinkBusy { link: usize, start: u32, end: u32 },

    #[error("{path}, line {line}: {msg}")]
    Parse {
        path: String,
        line: u64,
        msg: String,
    },

    #[error("{path}: harvest trace has gaps, missing windows {windows:?}")]
    MissingWindows { path: String, windows: Vec<usize> },

    #[error("{kind} trace covers {len} slots but the horizon needs {needed}")]
    TraceTooShort {
        kind: &'static str,
        len: usize,
        needed: usize,
    },

    #[error("invariant violated in slot {slot}: {what}\n{dump}")]
    Invariant {
        slot: usize,
        what: String,
        dump: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Errors that come from bad user input rather than a failed run.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InputDomain(_)
                | Error::Config(_)
                | Error::OutOfBounds(..)
                | Error::Parse { .. }
                | Error::MissingWindows { .. }
                | Error::TraceTooShort { .. }
        )
    }
}
