//! Shared error types.

use thiserror::Error;

/// An argument fell outside the mathematical domain of an operation
/// (coincident nodes, zero scaling factor, too few points for a fit, ...).
#[derive(Debug, Clone, Error, PartialEq)]
#[error("domain error: {0}")]
pub struct DomainError(pub String);

/// Cluster operations need at least two distinct nodes.
#[derive(Debug, Clone, Copy, Error, PartialEq, Eq)]
#[error("degenerate cluster: need d >= 2 distinct nodes")]
pub struct DegenerateCluster;
