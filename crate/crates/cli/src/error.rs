use std::fmt;

/// Pipeline stage an error came from; also picks the exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    Input,
    Sites,
    Capture,
    Extract,
    Rank,
    Train,
    Classify,
    Evaluate,
    Report,
    Respond,
    Filters,
    Output,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Config => "config",
            Stage::Input => "input",
            Stage::Sites => "sites",
            Stage::Capture => "capture",
            Stage::Extract => "extract",
            Stage::Rank => "rank",
            Stage::Train => "train",
            Stage::Classify => "classify",
            Stage::Evaluate => "evaluate",
            Stage::Report => "report",
            Stage::Respond => "respond",
            Stage::Filters => "filters",
            Stage::Output => "output",
        }
    }

    /// 3 for configuration, 4 for unreadable inputs, 5 for unwritable
    /// outputs, 6 for failures inside a stage.
    pub fn exit_code(self) -> i32 {
        match self {
            Stage::Config => 3,
            Stage::Input => 4,
            Stage::Output => 5,
            _ => 6,
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug)]
pub struct CliError {
    pub stage: Stage,
    pub message: String,
}

impl CliError {
    pub fn new(stage: Stage, message: impl Into<String>) -> Self {
        CliError {
            stage,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "error[stage={}]: {}", self.stage, self.message)
    }
}

impl std::error::Error for CliError {}

/// Attaches a stage to any displayable error.
pub trait StageExt<T> {
    fn stage(self, stage: Stage) -> Result<T, CliError>;
}

impl<T, E: fmt::Display> StageExt<T> for Result<T, E> {
    fn stage(self, stage: Stage) -> Result<T, CliError> {
        self.map_err(|e| CliError::new(stage, e.to_string()))
    }
}
