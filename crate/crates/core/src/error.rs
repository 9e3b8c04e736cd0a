use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("degenerate geometry: {0}")]
    Degenerate(String),

    #[error("weather data is missing {} sampled hour(s): {}", .0.len(), format_gaps(.0))]
    MissingWeather(Vec<(u32, u32, u32)>),

    #[error("search stopped after {nodes} nodes; solution not proven optimal")]
    NotProvenOptimal { nodes: u64 },

    #[error("cannot split region: all candidate centroids coincide")]
    CannotSplit,
}

fn format_gaps(gaps: &[(u32, u32, u32)]) -> String {
    use core::fmt::Write;
    let mut out = String::new();
    for (n, (month, day, hour)) in gaps.iter().enumerate() {
        if n > 0 {
            out.push_str(", ");
        }
        let _ = write!(out, "{month:02}-{day:02} {hour:02}:00");
    }
    out
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
