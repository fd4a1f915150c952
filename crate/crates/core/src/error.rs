use thiserror::Error;

use crate::book::BookError;
use crate::complexity::ComplexityError;
use crate::env::EnvError;
use crate::execution::ExecError;
use crate::sim::SimError;
use crate::stats::StatsError;

/// Any error raised by this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Book(#[from] BookError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Exec(#[from] ExecError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Complexity(#[from] ComplexityError),
}

pub type Result<T> = core::result::Result<T, Error>;
