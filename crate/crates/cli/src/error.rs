use thiserror::Error;

pub const EXIT_CODES: &str = "\
Exit status:
  0  every check passed
  1  a check exceeded its tolerance
  2  invalid command-line usage
  3  an input file could not be read, or output could not be written
  4  input does not follow the expected format (malformed JSON, ragged or non-numeric matrix)
  5  a precondition failed (invalid or inconsistent connection, degenerate torus, non-orthogonal sigma)
  6  numerical failure (series truncation, lattice radius overflow, imaginary residue)";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read `{path}`: {source}")]
    Read { path: String, source: std::io::Error },

    #[error("cannot write output: {0}")]
    Write(#[from] std::io::Error),

    #[error("{0}")]
    Schema(String),

    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] ckern::Error),
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => CliError::Write(io),
            other => CliError::Schema(format!("{other:?}")),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use ckern::Error as E;
        match self {
            CliError::Usage(_) => 2,
            CliError::Read { .. } | CliError::Write(_) => 3,
            CliError::Schema(_) => 4,
            CliError::Core(e) => match e {
                E::Json(j) if j.is_io() => 3,
                E::Json(_)
                | E::Schema(_)
                | E::UnknownVertex(_)
                | E::DuplicateEdge(..)
                | E::SelfLoop(_)
                | E::NotSquare { .. } => 4,
                E::SeriesTruncation { .. } | E::RadiusOverflow { .. } | E::ImaginaryResidue { .. } => 6,
                _ => 5,
            },
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
