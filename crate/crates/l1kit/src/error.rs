use thiserror::Error;

/// Errors produced by parsing, validation, and the reconstruction pipeline.
#[derive(Error, Debug)]
pub enum Error {
    #[error("parse error at position {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("invalid taxon label {0:?}: labels are non-empty strings over [A-Za-z0-9_.-]")]
    InvalidLabel(String),
    #[error("duplicate leaf label {0:?}")]
    DuplicateLeaf(String),
    #[error("leaf sets differ")]
    LeafSetMismatch,
    #[error("restriction set is empty")]
    EmptyRestriction,
    #[error("unknown taxon {0:?}")]
    UnknownTaxon(String),
    #[error("{0:?} is not a cluster of the tree")]
    NotACluster(String),
    #[error("replacement leaf {0:?} collides with an existing taxon")]
    LabelCollision(String),
    #[error("operation requires at least {0} leaves")]
    TooFewLeaves(usize),
    #[error("operation is capped at {cap} {what}, got {got}")]
    CapExceeded {
        what: &'static str,
        cap: usize,
        got: usize,
    },
    #[error("refusing exponential blow-up: network has {k} reticulations, cap is {cap} (override with --cap)")]
    ExponentialBlowUp { k: usize, cap: usize },
    #[error("hybrid tag #H{0} must appear exactly twice (once with a subtree, once bare)")]
    HybridTagArity(u64),
    #[error("network invariant violated: {0}")]
    InvalidNetwork(String),
    #[error("network is not level-1")]
    NotLevel1,
    #[error("vertex is not a reticulation")]
    NotAReticulation,
    #[error("trees are isomorphic (rSPR distance 0)")]
    IsomorphicInputs,
    #[error("trees are not at rSPR distance 1")]
    NotDistanceOne,
    #[error("bit string has length {got}, expected {expected}")]
    BitLengthMismatch { expected: usize, got: usize },
    #[error("duplicate tree in collection: {0}")]
    DuplicateTree(String),
    #[error("graph is not isomorphic to a hypercube: {0}")]
    NotHypercube(String),
    #[error("hypercube operation requires k >= {0}")]
    DimensionTooSmall(usize),
    #[error("ordered pairs are equal")]
    EqualPairs,
    #[error("infeasible generator config: {0}")]
    InfeasibleConfig(String),
    #[error("internal invariant violated: {0}")]
    Internal(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
