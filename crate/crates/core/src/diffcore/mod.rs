//! Input-derivative jets and parameter gradients.
//!
//! Input derivatives (value, first, and pure second derivatives with respect
//! to the raw coordinates) are pushed forward through the network as jets.
//! Parameter gradients come from a reverse sweep over the recorded jet
//! program, so a residual such as `u_t - eps * u_xx` is differentiated with
//! respect to every weight exactly.

mod jet;
mod kernels;
mod tape;

pub use jet::{Activation, Jet, JetBatch, JetLayout};
pub use tape::{loss_and_param_grad, LossSeed, MatrixSlot, NodeId, Tape, VectorSlot};
