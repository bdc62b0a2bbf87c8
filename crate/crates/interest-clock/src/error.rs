use thiserror::Error;

/// Crate-wide error type.
///
/// Variants are grouped by how the CLI reports them: configuration problems,
/// data problems (logs, snapshots, inputs), and numeric failures.
#[derive(Debug, Error)]
pub enum Error {
    #[error("config error: {0}")]
    Config(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("event log line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("{}out-of-order event: timestamp {event_minutes}m precedes watermark {watermark_minutes}m",
            line.map(|l| format!("event log line {l}: ")).unwrap_or_default())]
    OutOfOrderEvent {
        line: Option<usize>,
        event_minutes: u64,
        watermark_minutes: u64,
    },

    #[error("invalid event: {0}")]
    InvalidEvent(String),

    #[error("corrupt snapshot: {0}")]
    CorruptSnapshot(String),

    #[error("corrupt checkpoint: {0}")]
    CorruptCheckpoint(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("missing embedding: {0}")]
    MissingEmbedding(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite gradient at step {step}: {detail}")]
    NonFiniteGradient { step: usize, detail: String },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("empty input: {0}")]
    EmptyInput(String),
}

impl Error {
    /// Attach an event-log line number to an out-of-order error raised by the
    /// feature store, which does not know where the event came from.
    pub fn with_line(self, line: usize) -> Self {
        match self {
            Error::OutOfOrderEvent {
                event_minutes,
                watermark_minutes,
                ..
            } => Error::OutOfOrderEvent {
                line: Some(line),
                event_minutes,
                watermark_minutes,
            },
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
