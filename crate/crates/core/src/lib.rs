//! Event-time limit order book market simulator with reinforcement-learning
//! execution agents, plus estimators for market stylised facts and
//! correlation-dimension complexity measures.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the command
//! line and thread-level parallelism live in the `marl-lob` companion crate.
//!
//! Module map:
//!
//! - [`book`]: price-time-priority matching engine and price observables.
//! - [`env`]: the minimally intelligent ecology (fundamentalists, chartists,
//!   liquidity providers) and the event-time scheduler.
//! - [`execution`]: TWAP, market-order and mixed limit/market-order
//!   execution agents, state discretisation, rewards and tabular Q-learning.
//! - [`sim`]: experiment cases, episodes, training and policy export.
//! - [`stats`]: stylised-fact estimators and price-impact curves.
//! - [`complexity`]: delay embedding and correlation dimension.
#![no_std]

extern crate alloc;

pub mod book;
pub mod complexity;
pub mod env;
pub mod error;
pub mod execution;
pub mod sim;
pub mod stats;

mod linalg;
mod rng;

pub use error::{Error, Result};
pub use rng::{derive_seed, SimRng};
