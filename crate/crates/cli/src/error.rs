use serde::Serialize;
use thiserror::Error;

use sixport_core::Error as CoreError;

pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_COMPUTATION: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("verification failed: {0}")]
    VerificationFailed(String),
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Serialize)]
struct Payload<'a> {
    error: &'a str,
    message: String,
}

impl CliError {
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Validation(_) => "ValidationError",
            CliError::Core(e) => e.code(),
            CliError::VerificationFailed(_) => "VerificationFailed",
            CliError::Io(_) => "IoError",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Core(e) => match e {
                CoreError::InvalidParameter(_)
                | CoreError::OutOfTableRange(..)
                | CoreError::SeriesOrderTooLarge(_)
                | CoreError::DimensionTooLarge(_)
                | CoreError::PhotonNumberMismatch { .. }
                | CoreError::QuantityMismatch { .. }
                | CoreError::AxisNotSymmetric => EXIT_VALIDATION,
                _ => EXIT_COMPUTATION,
            },
            CliError::VerificationFailed(_) | CliError::Io(_) => EXIT_COMPUTATION,
        }
    }

    pub fn payload(&self) -> String {
        crate::output::to_json(&Payload {
            error: self.code(),
            message: self.to_string(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Validation("x".into()).exit_code(), 2);
        assert_eq!(CliError::Core(CoreError::HeraldImpossible(0.0)).exit_code(), 3);
        assert_eq!(
            CliError::Core(CoreError::CutoffInadequate {
                cutoff: 3,
                tail_mass: 0.1
            })
            .exit_code(),
            3
        );
        assert_eq!(CliError::Core(CoreError::OutOfTableRange(2, 0, 0, 0)).exit_code(), 2);
    }

    #[test]
    fn payload_shape() {
        let v: serde_json::Value = serde_json::from_str(&CliError::Core(CoreError::HeraldImpossible(0.0)).payload()).unwrap();
        assert_eq!(v["error"], "HeraldImpossible");
        assert!(v["message"].is_string());
    }
}
