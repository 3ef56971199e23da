//! Certification of ergodicity-related properties of Markov kernels on
//! finite metric spaces, built on exact optimal transport.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod kernel;
pub mod metric_space;
pub mod models;
pub mod par;
pub mod reproduce;
pub mod transport;

pub use error::{Error, Result};
pub use kernel::{ErgodicDecomposition, Kernel};
pub use metric_space::{capped_lipschitz_cost, separating_family, CostMatrix, Distribution, MetricSpace};
pub use transport::{
    glue, kantorovich_dual_value, max_closeness, maximal_coupling, tv_distance, wasserstein, Coupling,
    TransportResult, TripleJoint,
};
