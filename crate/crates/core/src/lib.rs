//! Layer-wise GCN training with a learned per-layer stopping controller.
//!
//! - [`graph`]: CSR adjacency, normalization, dataset I/O, synthetic SBM graphs
//! - [`tensor`]: dense matrices and the aggregation / transform kernels
//! - [`ledger`]: operation and memory accounting
//! - [`train`]: layer-wise, full-batch and mini-batch trainers
//! - [`controller`]: recurrent stopping policy trained with REINFORCE
//! - [`probe`]: WL refinement and empirical capacity estimation

pub mod controller;
pub mod graph;
pub mod ledger;
pub mod probe;
pub mod rng;
pub mod tensor;
pub mod train;
