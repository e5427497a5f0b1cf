//! Atomic attribute values and the attribute-lookup trait predicates run on.

use std::borrow::Cow;
use std::collections::BTreeMap;
use std::fmt;

use ordered_float::OrderedFloat;
use serde::{Deserialize, Serialize};

/// An atomic value: text, integer, decimal, boolean or a media asset reference.
///
/// JSON form: strings, integers, floats and booleans map to themselves; an
/// asset reference is `{"asset": "<id>"}`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Decimal(OrderedFloat<f64>),
    Text(String),
    Asset { asset: String },
}

impl Value {
    pub fn text(s: impl Into<String>) -> Self {
        Value::Text(s.into())
    }

    pub fn decimal(x: f64) -> Self {
        Value::Decimal(OrderedFloat(x))
    }

    pub fn asset(id: impl Into<String>) -> Self {
        Value::Asset { asset: id.into() }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            Value::Text(s) => Some(s),
            _ => None,
        }
    }

    /// Reads a CSV cell: integers, then decimals, then `true`/`false`,
    /// otherwise text.
    pub fn infer(cell: &str) -> Self {
        let trimmed = cell.trim();
        if let Ok(i) = trimmed.parse::<i64>() {
            return Value::Int(i);
        }
        if looks_decimal(trimmed) {
            if let Ok(x) = trimmed.parse::<f64>() {
                return Value::decimal(x);
            }
        }
        match trimmed {
            "true" => Value::Bool(true),
            "false" => Value::Bool(false),
            _ => Value::Text(cell.to_owned()),
        }
    }

    /// Renders the value in predicate-literal syntax (quotes text when it
    /// would not re-parse as the same bare word).
    pub fn to_literal(&self) -> String {
        match self {
            Value::Bool(b) => b.to_string(),
            Value::Int(i) => i.to_string(),
            Value::Decimal(x) => format_decimal(x.0),
            Value::Text(s) if is_bare_word(s) => s.clone(),
            Value::Text(s) => quote(s),
            Value::Asset { asset } if is_bare_word(asset) => format!("@{asset}"),
            Value::Asset { asset } => format!("@{}", quote(asset)),
        }
    }
}

fn looks_decimal(s: &str) -> bool {
    let body = s.strip_prefix('-').unwrap_or(s);
    let mut parts = body.splitn(2, '.');
    let int = parts.next().unwrap_or("");
    let frac = parts.next();
    !int.is_empty()
        && int.bytes().all(|b| b.is_ascii_digit())
        && frac.is_some_and(|f| !f.is_empty() && f.bytes().all(|b| b.is_ascii_digit()))
}

fn format_decimal(x: f64) -> String {
    let s = format!("{x:?}");
    if s.contains('.') || s.contains('e') || s.contains("inf") || s.contains("NaN") {
        s
    } else {
        format!("{s}.0")
    }
}

const KEYWORDS: [&str; 6] = ["true", "false", "and", "or", "not", "in"];

pub(crate) fn is_bare_word(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_alphanumeric() || matches!(c, '_' | '-' | '.' | ':'))
        && !KEYWORDS.contains(&s)
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Decimal(x) => f.write_str(&format_decimal(x.0)),
            Value::Text(s) => f.write_str(s),
            Value::Asset { asset } => write!(f, "@{asset}"),
        }
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Text(s.to_owned())
    }
}

impl From<String> for Value {
    fn from(s: String) -> Self {
        Value::Text(s)
    }
}

impl From<i64> for Value {
    fn from(i: i64) -> Self {
        Value::Int(i)
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Self {
        Value::Bool(b)
    }
}

/// Anything a [`Predicate`](crate::Predicate) can be evaluated against.
pub trait Attributes {
    fn attr(&self, name: &str) -> Option<Cow<'_, Value>>;
}

impl Attributes for BTreeMap<String, Value> {
    fn attr(&self, name: &str) -> Option<Cow<'_, Value>> {
        self.get(name).map(Cow::Borrowed)
    }
}

impl<T: Attributes + ?Sized> Attributes for &T {
    fn attr(&self, name: &str) -> Option<Cow<'_, Value>> {
        (**self).attr(name)
    }
}
