//! Error type shared by every module of the crate.

use thiserror::Error;

/// Failure modes surfaced by constructors, evaluators and verifiers.
#[derive(Debug, Error)]
pub enum Error {
    /// A matrix meant to define a state is not a density (not Hermitian
    /// positive semidefinite with unit trace).
    #[error("not a state density: {0}")]
    NonState(String),

    /// An operator required to be positive semidefinite is not.
    #[error("not positive semidefinite: {0}")]
    NonPositive(String),

    /// Dimensions of interacting objects disagree.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// A letter or request refers to an index absent from the family.
    #[error("unknown algebra index {0}")]
    UnknownIndex(u32),

    /// The family contains no algebras.
    #[error("family contains no algebras")]
    EmptyFamily,

    /// Family members disagree on the base algebra.
    #[error("family members disagree on the base algebra: {0}")]
    MixedB(String),

    /// A truncated-module computation would create a tensor beyond the
    /// truncation depth, so the result would no longer be exact.
    #[error("computation touched the truncation boundary at depth {0}")]
    DepthExceeded(usize),

    /// Randomly chosen or supplied data is degenerate for the requested
    /// construction (zero vector, dependent basis, vanishing overlap).
    #[error("degenerate choice: {0}")]
    DegenerateChoice(String),

    /// An element expected to lie in the image of a map does not, up to
    /// the stated tolerance.
    #[error("not in the image: {0}")]
    NotInImage(String),

    /// Objects from different contexts (families, spaces) were mixed.
    #[error("context mismatch: {0}")]
    ContextMismatch(String),

    /// A basis does not span a unital self-adjoint algebra closed under
    /// products, or the ambient identity is missing from its span.
    #[error("not a full algebra: {0}")]
    NotFullAlgebra(String),

    /// Family data violates a compatibility hypothesis of the requested
    /// construction.
    #[error("incompatible data: {0}")]
    CompatibilityFail(String),

    /// An inclusion fails to map the unit to the unit.
    #[error("non-unital inclusion: {0}")]
    NonUnitalInclusion(String),

    /// Scenario JSON is malformed or internally inconsistent.
    #[error("invalid scenario data: {0}")]
    SchemaError(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
