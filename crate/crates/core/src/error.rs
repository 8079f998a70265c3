use thiserror::Error;

use crate::state::Party;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("operator is not unitary: ||U^dag U - 1|| = {deviation:e}")]
    NonUnitaryOperator { deviation: f64 },

    #[error("Kraus operator norm {norm} exceeds 1")]
    KrausNormTooLarge { norm: f64 },

    #[error("outcome probability {probability:e} is below the resolvable threshold")]
    ZeroProbabilityOutcome { probability: f64 },

    #[error("state is not normalized: norm = {norm}")]
    NotNormalized { norm: f64 },

    #[error("non-finite amplitude at index {index}")]
    NonFinite { index: usize },

    #[error("rejection sampling gave up after {attempts} attempts")]
    EnsembleExhausted { attempts: usize },

    #[error("state is not in the GHZ class")]
    NotGhzClass,

    #[error("pencil discriminant {discriminant:e} is numerically zero")]
    DegeneratePencil { discriminant: f64 },

    #[error("POVM outcome {outcome} left the GHZ class")]
    OutcomeLeftGhzClass { outcome: usize },

    #[error("Kraus operators do not complete to the identity: deviation {deviation:e}")]
    IncompletePovm { deviation: f64 },

    #[error("structured degree-8 fit residual {residual:e} exceeds tolerance")]
    StructureViolation { residual: f64 },

    #[error("state has non-real amplitudes (max |Im| = {max_imag:e})")]
    NotRealAmplitudes { max_imag: f64 },

    #[error("root refinement failed: {0}")]
    RootRefinementFailed(String),

    #[error("resultant has no sign change on the zeta grid")]
    NoSignChange,

    #[error("every resultant zero corresponds to a complex common root ({candidates} candidates)")]
    OnlyComplexCommonRoots { candidates: usize },

    #[error("every gate candidate yields outcomes in conjugate orbits ({candidates} candidates)")]
    OnlyConjugateOrbitOutcomes { candidates: usize },

    #[error("imaginary part of the second gate condition is {imag:e}")]
    ImCond2Violation { imag: f64 },

    #[error("gate conditions violated: r1 = {r1:e}, |r2| = {r2:e}")]
    GateConditionViolated { r1: f64, r2: f64 },

    #[error("POVM parameter out of range: {0}")]
    OutOfRange(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("POVM outcomes are not in the same orbit ({0})")]
    NotDeterministic(String),

    #[error("branch {leaf} fidelity {fidelity} is below threshold")]
    BranchCorrectionFailed { leaf: usize, fidelity: f64 },

    #[error("state is not in the local-unitary orbit of GHZ")]
    NotGhzOrbit,

    #[error("step {index} (party {party}): {source}")]
    Step {
        index: usize,
        party: Party,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Stable machine-readable identifier.
    pub fn code(&self) -> &'static str {
        match self {
            Error::NonUnitaryOperator { .. } => "NonUnitaryOperator",
            Error::KrausNormTooLarge { .. } => "KrausNormTooLarge",
            Error::ZeroProbabilityOutcome { .. } => "ZeroProbabilityOutcome",
            Error::NotNormalized { .. } => "NotNormalized",
            Error::NonFinite { .. } => "NonFinite",
            Error::EnsembleExhausted { .. } => "EnsembleExhausted",
            Error::NotGhzClass => "NotGhzClass",
            Error::DegeneratePencil { .. } => "DegeneratePencil",
            Error::OutcomeLeftGhzClass { .. } => "OutcomeLeftGhzClass",
            Error::IncompletePovm { .. } => "IncompletePovm",
            Error::StructureViolation { .. } => "StructureViolation",
            Error::NotRealAmplitudes { .. } => "NotRealAmplitudes",
            Error::RootRefinementFailed(_) => "RootRefinementFailed",
            Error::NoSignChange => "NoSignChange",
            Error::OnlyComplexCommonRoots { .. } => "OnlyComplexCommonRoots",
            Error::OnlyConjugateOrbitOutcomes { .. } => "OnlyConjugateOrbitOutcomes",
            Error::ImCond2Violation { .. } => "ImCond2Violation",
            Error::GateConditionViolated { .. } => "GateConditionViolated",
            Error::OutOfRange(_) => "OutOfRange",
            Error::InvalidParameter(_) => "InvalidParameter",
            Error::NotDeterministic(_) => "NotDeterministic",
            Error::BranchCorrectionFailed { .. } => "BranchCorrectionFailed",
            Error::NotGhzOrbit => "NotGhzOrbit",
            Error::Step { source, .. } => source.code(),
            Error::Parse(_) => "ParseError",
        }
    }

    /// Numerical search failures, as opposed to contract violations.
    pub fn is_search_failure(&self) -> bool {
        match self {
            Error::Step { source, .. } => source.is_search_failure(),
            Error::NoSignChange
            | Error::OnlyComplexCommonRoots { .. }
            | Error::OnlyConjugateOrbitOutcomes { .. }
            | Error::RootRefinementFailed(_)
            | Error::ImCond2Violation { .. }
            | Error::EnsembleExhausted { .. } => true,
            _ => false,
        }
    }

    pub(crate) fn at_step(self, index: usize, party: Party) -> Error {
        Error::Step {
            index,
            party,
            source: Box::new(self),
        }
    }
}
