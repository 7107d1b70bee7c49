//! Error classes of the front door, mapped to documented exit codes.

use thiserror::Error;

/// A failed run: configuration problems exit with code 2, numerical
/// failures with 3, filesystem trouble with 1.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad or missing configuration, flags, or input artifacts.
    #[error("{0}")]
    Config(String),

    /// The numerics failed: non-convergence, window overflow, infeasible
    /// design, or failed bracketing.
    #[error("{0}")]
    Numerical(String),

    /// Filesystem trouble while reading inputs or writing results.
    #[error("{0}")]
    Io(String),
}

impl CliError {
    /// The documented exit code for this class of failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl From<mtb_core::Error> for CliError {
    fn from(e: mtb_core::Error) -> Self {
        use mtb_core::Error as E;
        match &e {
            E::InvalidParameter(_) | E::ShapeMismatch(_) => CliError::Config(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_match_the_documented_contract() {
        assert_eq!(CliError::Config("x".into()).exit_code(), 2);
        assert_eq!(CliError::Numerical("x".into()).exit_code(), 3);
        assert_eq!(CliError::Io("x".into()).exit_code(), 1);
    }

    #[test]
    fn core_errors_split_into_config_and_numerical() {
        let config: CliError = mtb_core::Error::InvalidParameter("bad".into()).into();
        assert_eq!(config.exit_code(), 2);
        let numerical: CliError = mtb_core::Error::NonConvergence("bad".into()).into();
        assert_eq!(numerical.exit_code(), 3);
        let overflow: CliError = mtb_core::Error::GridOverflow("bad".into()).into();
        assert_eq!(overflow.exit_code(), 3);
    }
}
