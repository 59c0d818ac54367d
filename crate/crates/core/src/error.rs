use thiserror::Error;

use crate::attractor::AttractorError;
use crate::chain::ChainError;
use crate::rds::RdsError;
use crate::two_point::TwoPointError;

/// Any error raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Rds(#[from] RdsError),
    #[error(transparent)]
    TwoPoint(#[from] TwoPointError),
    #[error(transparent)]
    Attractor(#[from] AttractorError),
}
