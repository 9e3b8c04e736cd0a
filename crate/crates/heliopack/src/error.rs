use std::fmt;
use std::io;
use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Pipeline stage that produced an error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Raster,
    Geometry,
    Solar,
    Layout,
    Shade,
    Optimize,
    Report,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Raster => "raster",
            Stage::Geometry => "geom",
            Stage::Solar => "solar",
            Stage::Layout => "layout",
            Stage::Shade => "shade",
            Stage::Optimize => "opt",
            Stage::Report => "report",
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },

    #[error("{}: {msg}", path.display())]
    Parse { path: PathBuf, msg: String },

    #[error("configuration: {0}")]
    Config(String),

    #[error("[{stage}] {source}")]
    Stage {
        stage: Stage,
        source: heliopack_core::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn parse(path: impl Into<PathBuf>, msg: impl fmt::Display) -> Self {
        Error::Parse {
            path: path.into(),
            msg: msg.to_string(),
        }
    }

    /// Process exit code: 1 usage, 2 data, 3 solver not proven optimal.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::Stage {
                source: heliopack_core::Error::Config(_),
                ..
            } => 1,
            Error::Stage {
                source: heliopack_core::Error::NotProvenOptimal { .. },
                ..
            } => 3,
            _ => 2,
        }
    }
}

/// Tags core errors with the stage they came from.
pub trait StageExt<T> {
    fn stage(self, stage: Stage) -> Result<T>;
}

impl<T> StageExt<T> for heliopack_core::Result<T> {
    fn stage(self, stage: Stage) -> Result<T> {
        self.map_err(|source| Error::Stage { stage, source })
    }
}
