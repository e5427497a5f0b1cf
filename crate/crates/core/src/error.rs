use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the kernel reports. Variant names double as the stable
/// error codes used on the wire (see [`Error::code`]).
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unknown {kind} `{id}`")]
    UnknownRef { kind: &'static str, id: String },
    #[error("duplicate {kind} `{id}`")]
    DuplicateId { kind: &'static str, id: String },
    #[error(
        "individual `{individual}` of type `{actual}` is outside the definition range `{expected}`"
    )]
    TypeMismatch {
        individual: String,
        expected: String,
        actual: String,
    },
    #[error("no individual satisfies the identifying predicate")]
    NoWitness,
    #[error("identifying predicate matched {count} individuals")]
    AmbiguousIdentity { count: usize },
    #[error("`{0}` is outside the mapping's domain")]
    OutsideDomain(String),
    #[error("invalid mapping: {0}")]
    InvalidMapping(String),
    #[error("generalized value has no case for {0}")]
    UnknownPoint(String),
    #[error("assignment set is empty")]
    EmptyAssignment,
    #[error("expected an object at level {expected}, got level {found}")]
    LevelMismatch { expected: u32, found: u32 },
    #[error("carrier at level {0} is empty")]
    EmptyCarrier(u32),
    #[error("session `{0}` is closed")]
    SessionClosed(String),
    #[error("access denied: {0}")]
    AccessDenied(String),
    #[error("cannot read source location `{path}`: {reason}")]
    UnreadableLocation { path: String, reason: String },
    #[error("join key `{key}` is missing from source `{source_id}`")]
    MissingKeyField { source_id: String, key: String },
    #[error("invalid media category for asset `{asset}`: {reason}")]
    InvalidCategory { asset: String, reason: String },
    #[error("image asset `{0}` has no subcategory")]
    MissingSubcategory(String),
    #[error("unknown navigation point `{0}`")]
    UnknownNavigationPoint(String),
    #[error("slot `{slot}` cannot be bound: {reason}")]
    UnboundSlot { slot: String, reason: String },
    #[error("unknown event `{0}`")]
    UnknownEvent(String),
    #[error("out-of-order event: expected seq {expected}, got {got}")]
    OutOfOrderEvent { expected: u64, got: u64 },
    #[error("unknown name `{0}`")]
    UnknownName(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("dangling reference in `{section}`: `{id}` (referenced by `{owner}`)")]
    DanglingReference {
        section: &'static str,
        id: String,
        owner: String,
    },
    #[error("invalid `{section}` entry `{id}`: {reason}")]
    Invalid {
        section: &'static str,
        id: String,
        reason: String,
    },
}

impl Error {
    pub(crate) fn unknown(kind: &'static str, id: impl ToString) -> Self {
        Error::UnknownRef {
            kind,
            id: id.to_string(),
        }
    }

    pub(crate) fn duplicate(kind: &'static str, id: impl ToString) -> Self {
        Error::DuplicateId {
            kind,
            id: id.to_string(),
        }
    }

    /// Re-labels reference errors raised while loading one bundle section.
    pub(crate) fn in_section(self, section: &'static str, owner: impl ToString) -> Self {
        match self {
            Error::UnknownRef { id, .. } => Error::DanglingReference {
                section,
                id,
                owner: owner.to_string(),
            },
            Error::DuplicateId { id, kind } => Error::Invalid {
                section,
                id,
                reason: format!("duplicate {kind}"),
            },
            other => other,
        }
    }

    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            Error::UnknownRef { .. } => "UnknownRef",
            Error::DuplicateId { .. } => "DuplicateId",
            Error::TypeMismatch { .. } => "TypeMismatch",
            Error::NoWitness => "NoWitness",
            Error::AmbiguousIdentity { .. } => "AmbiguousIdentity",
            Error::OutsideDomain(_) => "OutsideDomain",
            Error::InvalidMapping(_) => "InvalidMapping",
            Error::UnknownPoint(_) => "UnknownPoint",
            Error::EmptyAssignment => "EmptyAssignment",
            Error::LevelMismatch { .. } => "LevelMismatch",
            Error::EmptyCarrier(_) => "EmptyCarrier",
            Error::SessionClosed(_) => "SessionClosed",
            Error::AccessDenied(_) => "AccessDenied",
            Error::UnreadableLocation { .. } => "UnreadableLocation",
            Error::MissingKeyField { .. } => "MissingKeyField",
            Error::InvalidCategory { .. } => "InvalidCategory",
            Error::MissingSubcategory(_) => "MissingSubcategory",
            Error::UnknownNavigationPoint(_) => "UnknownNavigationPoint",
            Error::UnboundSlot { .. } => "UnboundSlot",
            Error::UnknownEvent(_) => "UnknownEvent",
            Error::OutOfOrderEvent { .. } => "OutOfOrderEvent",
            Error::UnknownName(_) => "UnknownName",
            Error::Parse(_) => "ParseError",
            Error::DanglingReference { .. } => "DanglingReference",
            Error::Invalid { .. } => "ValidationError",
        }
    }

    /// True for errors caused by a malformed or inconsistent model rather
    /// than by a request against a valid one.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Parse(_)
                | Error::DanglingReference { .. }
                | Error::Invalid { .. }
                | Error::UnreadableLocation { .. }
                | Error::InvalidMapping(_)
        )
    }
}
