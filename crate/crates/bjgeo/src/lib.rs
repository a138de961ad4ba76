//! Computable geometry for operators from `l_inf^n` to `l_1^m` at desk scale.
//!
//! The crate answers concrete questions about finite-dimensional Banach
//! geometry with certificates attached: Birkhoff-James orthogonality of
//! vectors, product vectors and operators, smoothness classification,
//! LP-certified extreme-contraction detection, constructive witnesses for
//! symmetry violations, and lower-bound search for the constants G(m, n).
//!
//! Everything is deterministic under a fixed seed, including parallel runs.

pub mod extremality;
pub mod field;
pub mod grothendieck;
pub mod hull;
pub mod lp;
pub mod matfile;
pub mod operator;
pub mod parallel;
pub mod product;
pub mod report;
pub mod scalar;
pub mod symmetry;

pub mod cli;

/// Pinned tolerances used across the crate. These are part of the observable
/// contract (verdicts must be reproducible), so they live in one place.
pub mod tol {
    /// Relative tolerance for active-index and norming-member detection.
    pub const ACTIVE_REL: f64 = 1e-9;
    /// Margin for orthogonality verdicts (hull membership).
    pub const MARGIN: f64 = 1e-9;
    /// Recomputed certificates must hold to this slack beyond the margin.
    pub const WITNESS_SOUNDNESS: f64 = 1e-12;
    /// A "not extreme" witness must have at least this operator norm.
    pub const WITNESS_FLOOR: f64 = 1e-6;
    /// Subjects of norm-one preconditions may deviate by this much.
    pub const NORM_ONE_SLACK: f64 = 1e-6;
    /// Directional LP optima below this count as zero without refinement.
    pub const LP_ZERO: f64 = 1e-9;
    /// Largest supported dimension on either side of an operator.
    pub const MAX_DIM: usize = 16;
}
