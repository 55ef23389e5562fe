use std::fmt;

use graphbior::bipartite::BipartiteError;
use graphbior::experiments::ExperimentError;
use graphbior::filterbank::FilterbankError;
use graphbior::graph::GraphError;
use graphbior::io::IoError;
use graphbior::kernels::KernelError;
use graphbior::metrics::MetricsError;
use thiserror::Error;

/// Whether a failure comes from bad input or from a broken numerical guarantee.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Failure {
    Validation,
    Numerical,
}

impl Failure {
    pub fn exit_code(self) -> u8 {
        match self {
            Failure::Validation => 2,
            Failure::Numerical => 3,
        }
    }
}

#[derive(Debug, Error)]
#[error("{stage} failed on {input}: {message}")]
pub struct CliError {
    pub stage: &'static str,
    pub input: String,
    pub failure: Failure,
    pub message: String,
}

impl CliError {
    pub fn new(
        stage: &'static str,
        input: impl fmt::Display,
        failure: Failure,
        message: impl fmt::Display,
    ) -> Self {
        CliError {
            stage,
            input: input.to_string(),
            failure,
            message: message.to_string(),
        }
    }
}

/// Maps a library error to a failure class.
pub trait Classify {
    fn failure(&self) -> Failure;
}

impl Classify for GraphError {
    fn failure(&self) -> Failure {
        match self {
            GraphError::UnmirroredSpectrum(_) => Failure::Numerical,
            _ => Failure::Validation,
        }
    }
}

impl Classify for BipartiteError {
    fn failure(&self) -> Failure {
        match self {
            BipartiteError::Graph(e) => e.failure(),
            _ => Failure::Validation,
        }
    }
}

impl Classify for KernelError {
    fn failure(&self) -> Failure {
        match self {
            KernelError::Conditioning(_) | KernelError::Poly(_) => Failure::Numerical,
            _ => Failure::Validation,
        }
    }
}

impl Classify for FilterbankError {
    fn failure(&self) -> Failure {
        match self {
            FilterbankError::NotPerfectReconstruction { .. }
            | FilterbankError::CriticalSampling { .. } => Failure::Numerical,
            FilterbankError::Graph(e) => e.failure(),
            FilterbankError::Bipartite(e) => e.failure(),
            _ => Failure::Validation,
        }
    }
}

impl Classify for MetricsError {
    fn failure(&self) -> Failure {
        match self {
            MetricsError::Graph(e) => e.failure(),
            MetricsError::Filterbank(e) => e.failure(),
            _ => Failure::Validation,
        }
    }
}

impl Classify for ExperimentError {
    fn failure(&self) -> Failure {
        match self {
            ExperimentError::CriticalSampling { .. } => Failure::Numerical,
            ExperimentError::Graph(e) => e.failure(),
            ExperimentError::Bipartite(e) => e.failure(),
            ExperimentError::Kernel(e) => e.failure(),
            ExperimentError::Filterbank(e) => e.failure(),
            ExperimentError::Metrics(e) => e.failure(),
            _ => Failure::Validation,
        }
    }
}

impl Classify for IoError {
    fn failure(&self) -> Failure {
        match self {
            IoError::Graph(e) => e.failure(),
            IoError::Bipartite(e) => e.failure(),
            _ => Failure::Validation,
        }
    }
}

impl Classify for std::io::Error {
    fn failure(&self) -> Failure {
        Failure::Validation
    }
}

/// Attaches the pipeline stage and input name to an error.
pub trait StageExt<T> {
    fn stage(self, stage: &'static str, input: &str) -> Result<T, CliError>;
}

impl<T, E: Classify + fmt::Display> StageExt<T> for Result<T, E> {
    fn stage(self, stage: &'static str, input: &str) -> Result<T, CliError> {
        self.map_err(|e| CliError::new(stage, input, e.failure(), e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nested_numerical_errors_keep_their_class() {
        let e = ExperimentError::Filterbank(FilterbankError::NotPerfectReconstruction {
            distortion: 1.0,
            alias: 0.0,
        });
        assert_eq!(e.failure(), Failure::Numerical);
        let e = IoError::Graph(GraphError::SelfLoop(3));
        assert_eq!(e.failure(), Failure::Validation);
        let r: Result<(), _> = Err(GraphError::UnmirroredSpectrum(0.5));
        let err = r.stage("spectral check", "g.txt").unwrap_err();
        assert_eq!(err.failure.exit_code(), 3);
        assert!(err
            .to_string()
            .starts_with("spectral check failed on g.txt:"));
    }
}
