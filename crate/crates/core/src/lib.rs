//! Physics-informed neural networks built from element-wise multiplication
//! blocks.
//!
//! The crate is organised bottom-up:
//!
//! * [`diffcore`] pushes value/first/second input-derivative jets through
//!   network primitives and back-propagates parameter gradients.
//! * [`network`] builds EM and MLP networks, input embeddings and the
//!   distance-function output transform.
//! * [`pde`] defines the Allen-Cahn, Helmholtz and advection benchmarks and
//!   assembles their losses.
//! * [`optim`] holds Adam with exponential decay and L-BFGS.
//! * [`reference`] provides exact and spectral reference fields and the
//!   relative L2 metric.
//! * [`harness`] runs experiments, ablations and the pathology probe.

// `!(x > 0.0)` style checks are meant to reject NaN too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diffcore;
pub mod error;
pub mod harness;
pub mod network;
pub mod optim;
pub mod par;
pub mod pde;
pub mod reference;

pub use error::{Error, Result};
