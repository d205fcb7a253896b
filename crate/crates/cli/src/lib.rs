//! Command implementations behind the `nateval` binary, exposed as a
//! library so integration tests can drive them directly.

pub mod chart;
pub mod commands;
pub mod config;

use nateval_core::Error;

/// Process exit code classes: 0 success, 2 configuration/validation,
/// 3 artifact incompatibility, 1 unexpected failure.
pub fn exit_code(error: &Error) -> i32 {
    if error.is_user_error() {
        2
    } else if matches!(error, Error::ArtifactMismatch(_)) {
        3
    } else {
        1
    }
}
