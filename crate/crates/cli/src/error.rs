use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}", describe(.line, .message))]
    Config {
        line: Option<usize>,
        message: String,
    },
    #[error(transparent)]
    Core(#[from] qsky::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

fn describe(line: &Option<usize>, message: &str) -> String {
    match line {
        Some(l) => format!("config line {l}: {message}"),
        None => format!("config: {message}"),
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

/// A run that finished but whose numbers should not be trusted blindly.
#[derive(Debug, Clone, PartialEq)]
pub struct Warning(pub String);

impl std::fmt::Display for Warning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}
