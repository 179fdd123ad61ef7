//! Reconstruction of spike-train signals from noisy power moments, and
//! the geometry of how measurement error amplifies when nodes
//! near-collide.
//!
//! The crate provides, in layers:
//!
//! - [`signal`]: the signal/moment data model, the forward moment map,
//!   and the shift/scale/normalization operators that move clusters to
//!   the reference interval `[-1, 1]`;
//! - [`inverse`]: the classical Prony inversion with explicit failure
//!   modes and residual accounting;
//! - [`jacobian`](mod@jacobian): the Jacobian of the moment map, its
//!   confluent Vandermonde factorization, Gautschi norm bounds, and the
//!   explicit stability constants `C1..C8, r, R, K3, K4`;
//! - [`leaf`]: error sets, moment-coordinate parallelepipeds, Prony
//!   leaves, worst-case error estimates and containment checks;
//! - [`improve`]: constrained reconstruction that localizes a signal
//!   inside a Prony leaf using a priori information;
//! - [`fit`]: log-log slope fitting for scaling-law verification.
//!
//! All types are immutable values and every operation is a pure
//! function of its inputs (samplers derive their randomness from an
//! explicit `(seed, stream)` pair), so the whole API is safe to call
//! from any number of threads without coordination.

pub mod error;
pub mod fit;
pub mod improve;
pub mod inverse;
pub mod jacobian;
pub mod leaf;
pub mod matrix;
pub mod rng;
pub mod signal;

pub use error::{DegenerateCluster, DomainError};
pub use fit::{fit_scaling, SlopeFit};
pub use improve::{
    amplitudes_on_leaf_d2, gamma_polytope, hyperbola_d2, improved_reconstruct,
    AmplitudeRatioConstraint, Feasibility, HalfPlane, Hyperbola2, ImproveConfig, ImprovedResult,
};
pub use inverse::{
    moment_residual, solve_prony, solve_prony_detailed, InversionConfig, InversionError,
    InversionErrorKind,
};
pub use jacobian::{
    compute_constants, confluent_vandermonde, gautschi_confluent_bound,
    gautschi_vandermonde_bound, jacobian, regular_bounds, remainder_bound_check, ConstantsBundle,
};
pub use leaf::{
    check_sandwich, construct_g_lb, estimate_leaf_hausdorff,
    estimate_leaf_hausdorff_moment_metric, estimate_worst_case, in_parallelepiped,
    leaf_concentration_check, leaf_hausdorff_moment_exact, leaf_point,
    partial_cluster_worst_case, sample_error_set, sample_leaf, sample_leaf_multiscale,
    ConcentrationReport, LeafError, LeafSpec, Parallelepiped, SampleCloud, SampleMode,
    SandwichReport, WorstCaseReport,
};
pub use matrix::DenseMatrix;
pub use signal::{
    apply_frame, check_regular, check_regular_cluster, cluster_frame, compute_moments,
    denormalize, normalize, scale_moments, shift_moments, shift_operator_matrix, ClusterFrame,
    MomentVector, RegularityParams, Signal,
};
