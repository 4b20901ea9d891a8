use multiferro::Error;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Model(#[from] Error),
    #[error("verification failed: {0} of {1} criteria")]
    Verification(usize, usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 2,
            CliError::Verification(..) => 1,
            CliError::Model(e) => match e {
                Error::NoConvergence { .. } | Error::NotStationary(_) | Error::RootFinding(_) | Error::Divergence(_) => 3,
                _ => 2,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codes() {
        let nc = Error::NoConvergence {
            iterations: 1,
            residual: 1.0,
            best: vec![],
        };
        assert_eq!(CliError::Model(nc).exit_code(), 3);
        assert_eq!(CliError::Model(Error::InvalidModel("x".into())).exit_code(), 2);
        assert_eq!(CliError::Config("x".into()).exit_code(), 2);
        assert_eq!(CliError::Verification(1, 10).exit_code(), 1);
    }
}
