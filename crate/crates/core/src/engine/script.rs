use std::borrow::Cow;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::ids::{EventName, IndividualId, NavPoint, StateId};
use crate::predicate::Predicate;
use crate::value::{Attributes, Value};

pub type Payload = BTreeMap<String, Value>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ScriptAction {
    /// Rebuild the cached views of one navigation point, or of every cached
    /// page when `nav` is absent.
    Rebuild {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        nav: Option<NavPoint>,
    },
    /// Re-bind only the named slots of cached pages.
    Rebind {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        nav: Option<NavPoint>,
        slots: Vec<String>,
    },
    TransitionState {
        individual: IndividualId,
        state: StateId,
    },
    Noop,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Script {
    pub event: EventName,
    #[serde(default = "always")]
    pub guard: Predicate,
    pub action: ScriptAction,
}

fn always() -> Predicate {
    Predicate::TRUE
}

/// What a guard sees: the payload's fields plus `event`, `last_seq`,
/// `cached` (number of cached pages) and `clock` (simulated milliseconds).
/// Engine fields shadow payload fields of the same name.
pub(crate) struct GuardView<'a> {
    pub event: &'a str,
    pub last_seq: u64,
    pub cached: usize,
    pub clock: u64,
    pub payload: &'a Payload,
}

impl Attributes for GuardView<'_> {
    fn attr(&self, name: &str) -> Option<Cow<'_, Value>> {
        let owned = match name {
            "event" => Value::text(self.event),
            "last_seq" => Value::Int(self.last_seq as i64),
            "cached" => Value::Int(self.cached as i64),
            "clock" => Value::Int(self.clock as i64),
            _ => return self.payload.get(name).map(Cow::Borrowed),
        };
        Some(Cow::Owned(owned))
    }
}
