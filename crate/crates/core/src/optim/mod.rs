//! First- and quasi-second-order optimizers over flat parameter vectors.

mod adam;
mod lbfgs;

pub use adam::{AdamConfig, AdamState};
pub use lbfgs::{lbfgs_minimize, LbfgsConfig, LbfgsIteration, LbfgsResult, LbfgsStatus};
