use std::path::PathBuf;

use crate::corpus::{ClaimId, DocId};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("duplicate doc_id {0}")]
    DuplicateDoc(DocId),

    #[error("duplicate claim_id {0}")]
    DuplicateClaim(ClaimId),

    #[error("unknown label {0:?}")]
    UnknownLabel(String),

    #[error("doc_id {doc} annotated for claim {claim} is not in the corpus")]
    UnresolvedEvidence { claim: ClaimId, doc: DocId },

    #[error("no cached scores for pair (claim {claim}, doc {doc})")]
    CacheMiss { claim: ClaimId, doc: DocId },

    #[error("scorer protocol error: {0}")]
    Protocol(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("training failed: {0}")]
    Training(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("stale artifact {}: {reason}; rerun stage `{stage}`", artifact.display())]
    Stale {
        artifact: PathBuf,
        stage: String,
        reason: String,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    /// Process exit code for the CLI: 1 usage/config, 2 data, 3 scorer protocol.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 1,
            Error::Protocol(_) => 3,
            _ => 2,
        }
    }
}
