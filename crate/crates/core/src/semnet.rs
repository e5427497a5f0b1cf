//! Frame store for the language `L = ⟨R, C⟩`: dyadic relation symbols over
//! constants, under closed-world evaluation.

use std::collections::{BTreeSet, HashMap};

use indexmap::{IndexMap, IndexSet};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::ids::{ConstantId, IndividualId, RelationId};
use crate::value::Value;

/// What a constant denotes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Binding {
    Individual(IndividualId),
    Atom(Value),
}

impl Binding {
    /// The binding seen as a plain value (individuals by id).
    pub fn to_value(&self) -> Value {
        match self {
            Binding::Individual(id) => Value::text(id.as_str()),
            Binding::Atom(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constant {
    pub id: ConstantId,
    pub binding: Binding,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Frame {
    #[serde(rename = "rel")]
    pub relation: RelationId,
    #[serde(rename = "subj")]
    pub subject: ConstantId,
    #[serde(rename = "obj")]
    pub object: ConstantId,
}

impl Frame {
    pub fn new(
        rel: impl Into<RelationId>,
        subj: impl Into<ConstantId>,
        obj: impl Into<ConstantId>,
    ) -> Self {
        Self {
            relation: rel.into(),
            subject: subj.into(),
            object: obj.into(),
        }
    }
}

/// `None` in any position is a wildcard.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FramePattern {
    #[serde(default, rename = "rel", skip_serializing_if = "Option::is_none")]
    pub relation: Option<RelationId>,
    #[serde(default, rename = "subj", skip_serializing_if = "Option::is_none")]
    pub subject: Option<ConstantId>,
    #[serde(default, rename = "obj", skip_serializing_if = "Option::is_none")]
    pub object: Option<ConstantId>,
}

impl FramePattern {
    pub fn any() -> Self {
        Self::default()
    }

    pub fn exact(frame: &Frame) -> Self {
        Self {
            relation: Some(frame.relation.clone()),
            subject: Some(frame.subject.clone()),
            object: Some(frame.object.clone()),
        }
    }

    pub fn matches(&self, f: &Frame) -> bool {
        self.relation.as_ref().is_none_or(|r| *r == f.relation)
            && self.subject.as_ref().is_none_or(|s| *s == f.subject)
            && self.object.as_ref().is_none_or(|o| *o == f.object)
    }
}

#[derive(Debug, Clone, Default)]
pub struct FrameStore {
    relations: IndexSet<RelationId>,
    constants: IndexMap<ConstantId, Constant>,
    frames: BTreeSet<Frame>,
    by_relation: HashMap<RelationId, BTreeSet<Frame>>,
    by_subject: HashMap<ConstantId, BTreeSet<Frame>>,
    by_object: HashMap<ConstantId, BTreeSet<Frame>>,
}

impl FrameStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Idempotent.
    pub fn declare_relation(&mut self, rel: RelationId) {
        self.relations.insert(rel);
    }

    /// Re-declaring with the same binding is a no-op; a different binding
    /// is a [`Error::DuplicateId`].
    pub fn declare_constant(&mut self, id: ConstantId, binding: Binding) -> Result<()> {
        match self.constants.get(&id) {
            Some(c) if c.binding == binding => Ok(()),
            Some(_) => Err(Error::duplicate("constant", id)),
            None => {
                self.constants.insert(id.clone(), Constant { id, binding });
                Ok(())
            }
        }
    }

    pub fn relations(&self) -> impl Iterator<Item = &RelationId> {
        self.relations.iter()
    }

    pub fn constant(&self, id: &str) -> Result<&Constant> {
        self.constants
            .get(id)
            .ok_or_else(|| Error::unknown("constant", id))
    }

    pub fn frames(&self) -> impl Iterator<Item = &Frame> {
        self.frames.iter()
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    fn check_relation(&self, rel: &str) -> Result<()> {
        if self.relations.contains(rel) {
            Ok(())
        } else {
            Err(Error::unknown("relation", rel))
        }
    }

    fn check_frame(&self, f: &Frame) -> Result<()> {
        self.check_relation(f.relation.as_str())?;
        self.constant(f.subject.as_str())?;
        self.constant(f.object.as_str())?;
        Ok(())
    }

    fn check_pattern(&self, p: &FramePattern) -> Result<()> {
        if let Some(r) = &p.relation {
            self.check_relation(r.as_str())?;
        }
        for c in [&p.subject, &p.object].into_iter().flatten() {
            self.constant(c.as_str())?;
        }
        Ok(())
    }

    /// Returns `true` when the frame was not already present.
    pub fn assert_frame(&mut self, frame: Frame) -> Result<bool> {
        self.check_frame(&frame)?;
        if !self.frames.insert(frame.clone()) {
            return Ok(false);
        }
        self.by_relation
            .entry(frame.relation.clone())
            .or_default()
            .insert(frame.clone());
        self.by_subject
            .entry(frame.subject.clone())
            .or_default()
            .insert(frame.clone());
        self.by_object
            .entry(frame.object.clone())
            .or_default()
            .insert(frame);
        Ok(true)
    }

    pub fn retract_frame(&mut self, frame: &Frame) -> bool {
        if !self.frames.remove(frame) {
            return false;
        }
        unindex(&mut self.by_relation, frame.relation.as_str(), frame);
        unindex(&mut self.by_subject, frame.subject.as_str(), frame);
        unindex(&mut self.by_object, frame.object.as_str(), frame);
        true
    }

    pub fn query_frames(&self, pattern: &FramePattern) -> Result<Vec<Frame>> {
        self.query_frames_with(Executor::default(), pattern)
    }

    /// Starts from the smallest index the pattern pins down, then filters.
    /// Results are in frame order.
    pub fn query_frames_with(&self, exec: Executor, pattern: &FramePattern) -> Result<Vec<Frame>> {
        self.check_pattern(pattern)?;
        let empty = BTreeSet::new();
        let candidates = [
            pattern
                .relation
                .as_ref()
                .map(|r| self.by_relation.get(r.as_str())),
            pattern
                .subject
                .as_ref()
                .map(|s| self.by_subject.get(s.as_str())),
            pattern
                .object
                .as_ref()
                .map(|o| self.by_object.get(o.as_str())),
        ]
        .into_iter()
        .flatten()
        .map(|set| set.unwrap_or(&empty))
        .min_by_key(|set| set.len())
        .unwrap_or(&self.frames);
        let candidates: Vec<&Frame> = candidates.iter().collect();
        Ok(exec.filter_map(&candidates, |f| pattern.matches(f).then(|| (*f).clone())))
    }

    /// The characteristic function of a relation: `(subject, object) ↦ bool`.
    pub fn characteristic<'a>(&'a self, rel: &'a str) -> Result<Characteristic<'a>> {
        self.check_relation(rel)?;
        Ok(Characteristic {
            relation: rel,
            pairs: self.by_relation.get(rel),
        })
    }

    /// Closed-world truth of a frame, computed by applying the relation's
    /// characteristic function to `(subject, object)`.
    pub fn eval_frame(&self, frame: &Frame) -> Result<bool> {
        self.check_frame(frame)?;
        let chi = self.characteristic(frame.relation.as_str())?;
        Ok(chi.apply(frame.subject.as_str(), frame.object.as_str()))
    }

    /// Object bindings of every frame matching the pattern.
    pub fn object_values(&self, pattern: &FramePattern) -> Result<Vec<Value>> {
        self.query_frames(pattern)?
            .iter()
            .map(|f| Ok(self.constant(f.object.as_str())?.binding.to_value()))
            .collect()
    }
}

/// A relation viewed as a map from pairs to booleans.
#[derive(Debug, Clone, Copy)]
pub struct Characteristic<'a> {
    relation: &'a str,
    pairs: Option<&'a BTreeSet<Frame>>,
}

impl Characteristic<'_> {
    pub fn apply(&self, subject: &str, object: &str) -> bool {
        self.pairs
            .is_some_and(|set| set.contains(&Frame::new(self.relation, subject, object)))
    }
}

fn unindex<K>(index: &mut HashMap<K, BTreeSet<Frame>>, key: &str, frame: &Frame)
where
    K: Eq + std::hash::Hash + std::borrow::Borrow<str>,
{
    if let Some(set) = index.get_mut(key) {
        set.remove(frame);
        if set.is_empty() {
            index.remove(key);
        }
    }
}
