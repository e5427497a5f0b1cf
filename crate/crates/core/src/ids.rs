//! String-backed identifier newtypes.

use std::borrow::Borrow;
use std::fmt;

use serde::{Deserialize, Serialize};

macro_rules! id_type {
    ($($(#[$meta:meta])* $name:ident;)+) => {$(
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(String);

        impl $name {
            pub fn new(id: impl Into<String>) -> Self {
                Self(id.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_owned())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                Self(s)
            }
        }

        impl Borrow<str> for $name {
            fn borrow(&self) -> &str {
                &self.0
            }
        }
    )+};
}

id_type! {
    /// Identifier of a [`TypeDomain`](crate::object_model::TypeDomain).
    DomainId;
    ConceptId;
    IndividualId;
    StateId;
    /// Identifier of a lifted predicate character (metadata level ≥ 1).
    CharacterId;
    /// Identifier of a named generalized value such as `z` or `q`.
    ValueId;
    /// An atomic narrowing label: `higraph`, `mmedia`, `corporate`, ...
    Point;
    RelationId;
    ConstantId;
    UserId;
    RoleId;
    FunctionalId;
    SourceId;
    TemplateTypeId;
    TemplateId;
    NavPoint;
    SessionId;
    EventName;
}
