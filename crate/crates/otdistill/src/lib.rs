//! # otdistill
//!
//! Wasserstein-metric dataset distillation at desk scale.
//!
//! The crate provides:
//!
//! - exact discrete optimal transport on weighted point clouds, with primal
//!   plans and dual potentials ([`ot`]),
//! - free-support Wasserstein barycenters via alternating weight/position
//!   updates, plus closed-form fixed-grid KL/MMD barycenters ([`barycenter`]),
//! - distribution discrepancies for comparison: MMD (linear and Gaussian RBF),
//!   Sliced Wasserstein, grid KL ([`metrics`]),
//! - per-class weighted BatchNorm-style feature statistics and the matching
//!   regularization loss ([`pcbn`]),
//! - a desk-scale distillation driver with a fixed analytic encoder and
//!   finite-difference-checkable gradients ([`distill`]),
//! - empirical verification of the Lipschitz–Wasserstein and RKHS–MMD
//!   expected-loss gap bounds ([`bounds`]),
//! - a reproducible CLI front end with run manifests ([`cli`]).
//!
//! All randomness flows from explicit 64-bit seeds; identical inputs produce
//! bit-identical outputs.

use thiserror::Error;

pub mod barycenter;
pub mod bounds;
pub mod cli;
pub mod distill;
pub mod domain;
pub mod metrics;
pub mod ot;
pub mod pcbn;

pub use domain::{project_to_simplex,DiscreteDistribution, Seed};
pub use ot::{solve_exact, wasserstein_distance, TransportSolution};

/// Error variants shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A weight is negative.
    #[error("negative weight {value} at index {index}")]
    NegativeWeight { index: usize, value: f64 },

    /// Weights do not sum to 1 within the input tolerance.
    #[error("weight sum {sum} outside [1-{tol}, 1+{tol}]")]
    WeightSumOutOfTolerance { sum: f64, tol: f64 },

    /// A coordinate or weight is NaN or infinite.
    #[error("non-finite coordinate in {context}")]
    NonFiniteCoordinate { context: &'static str },

    /// A distribution has no support points (or zero-dimensional points).
    #[error("empty support: {0}")]
    EmptySupport(&'static str),

    /// An input vector contains NaN or infinities.
    #[error("non-finite input to {0}")]
    NonFiniteInput(&'static str),

    /// Unrecognized dataset geometry name.
    #[error("unknown geometry `{0}` (expected blobs|circles|crosses|circles-crosses)")]
    UnknownGeometry(String),

    /// Two objects that must share a dimension do not.
    #[error("dimension mismatch: {context} ({left} vs {right})")]
    DimensionMismatch {
        context: &'static str,
        left: usize,
        right: usize,
    },

    /// Cost exponent p < 1 or non-finite.
    #[error("invalid exponent p = {0}; need finite p >= 1")]
    InvalidExponent(f64),

    /// Marginal weight vectors have different total mass.
    #[error("infeasible marginals: source mass {source_mass} vs target mass {target_mass}")]
    InfeasibleMarginals { source_mass: f64, target_mass: f64 },

    /// The transport solver exceeded its pivot budget.
    #[error("numerical failure in transport solver: {0}")]
    NumericalFailure(&'static str),

    /// Brute-force assignment limited to n <= 8.
    #[error("instance too large for brute force: n = {0} > 8")]
    TooLarge(usize),

    /// Brute-force assignment requires uniform weights.
    #[error("non-uniform weights in {0}")]
    NonUniformWeights(&'static str),

    /// Transport plan column sums disagree with the provided weights.
    #[error("plan/weight mismatch at column {index}: column sum {column_sum} vs weight {weight}")]
    PlanMismatch {
        index: usize,
        column_sum: f64,
        weight: f64,
    },

    /// Grid shapes or bounds differ.
    #[error("grid mismatch: {0}")]
    GridMismatch(&'static str),

    /// A grid density does not sum to 1.
    #[error("unnormalized grid density: sum = {0}")]
    UnnormalizedInput(f64),

    /// KL divergence undefined: p > 0 somewhere q = 0.
    #[error("disjoint support: {0}")]
    DisjointSupport(&'static str),

    /// Grid has zero cells.
    #[error("empty grid")]
    EmptyGrid,

    /// Kernel bandwidth must be finite and positive.
    #[error("invalid bandwidth {0}; need finite value > 0")]
    InvalidBandwidth(f64),

    /// RBF gamma must be finite and positive.
    #[error("invalid kernel parameter gamma = {0}")]
    InvalidKernel(f64),

    /// Feature tensor sample weights sum to zero.
    #[error("zero total sample weight")]
    ZeroTotalWeight,

    /// A class has no samples.
    #[error("empty class: {0}")]
    EmptyClass(&'static str),

    /// No BN target for a (class, layer) pair.
    #[error("missing BN target for class {class} layer {layer}")]
    MissingTarget { class: i64, layer: usize },

    /// Tensor or vector shapes disagree.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// Synthetic input count differs from barycenter atom count.
    #[error("count mismatch: {inputs} synthetic inputs vs {atoms} barycenter atoms")]
    CountMismatch { inputs: usize, atoms: usize },

    /// Invalid configuration value.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// Command-line flag rejected after parsing.
    #[error("bad flag: {0}")]
    BadFlag(String),

    /// compare-metrics needs at least two label groups.
    #[error("input has a single label; need at least two label groups")]
    SingleLabelInput,

    /// I/O failure with file context.
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// Malformed input file.
    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.into(),
        }
    }
}

/// Result type used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
