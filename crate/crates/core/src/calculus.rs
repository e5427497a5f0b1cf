//! Evaluation function, curried assignment application, comprehension and
//! the metadata tower.
//!
//! A [`GeneralizedValue`] is a case table keyed by assignment points. Applying
//! an assignment set narrows it; once a value is atomic, further application
//! leaves it unchanged (saturation). A table whose cases are all equal is
//! constant and answers every assignment with that constant.
//!
//! The tower stacks predicate characters: a level-`j+1` character is defined
//! by a formula over level-`j` objects and classifies exactly the objects the
//! formula accepts. Level 0 holds the individuals themselves.

use std::borrow::Cow;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use indexmap::{IndexMap, IndexSet};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::ids::{CharacterId, DomainId, IndividualId, Point, ValueId};
use crate::object_model::{Individual, ObjectStore, Sort};
use crate::predicate::Predicate;
use crate::value::{Attributes, Value};

// ---------------------------------------------------------------------------
// B^A and the evaluation function

/// A total function between two type domains, stored as its graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mapping {
    pub domain: DomainId,
    pub codomain: DomainId,
    graph: BTreeMap<IndividualId, IndividualId>,
}

impl Mapping {
    pub fn new(
        store: &ObjectStore,
        domain: &str,
        codomain: &str,
        graph: BTreeMap<IndividualId, IndividualId>,
    ) -> Result<Self> {
        let dom = store.domain(domain)?;
        let cod = store.domain(codomain)?;
        if let Some(missing) = dom.members.iter().find(|m| !graph.contains_key(*m)) {
            return Err(Error::InvalidMapping(format!("no image for `{missing}`")));
        }
        for (x, y) in &graph {
            if !dom.members.contains(x) {
                return Err(Error::InvalidMapping(format!("`{x}` is not in `{domain}`")));
            }
            if !cod.members.contains(y) {
                return Err(Error::InvalidMapping(format!(
                    "image `{y}` is not in `{codomain}`"
                )));
            }
        }
        Ok(Self {
            domain: dom.id.clone(),
            codomain: cod.id.clone(),
            graph,
        })
    }

    pub fn identity(store: &ObjectStore, domain: &str) -> Result<Self> {
        let graph = store
            .domain(domain)?
            .members
            .iter()
            .map(|m| (m.clone(), m.clone()))
            .collect();
        Self::new(store, domain, domain, graph)
    }

    pub fn graph(&self) -> &BTreeMap<IndividualId, IndividualId> {
        &self.graph
    }
}

/// `‖⟨f, x⟩‖ = f(x)`.
pub fn eval_pair<'m>(f: &'m Mapping, x: &str) -> Result<&'m IndividualId> {
    f.graph
        .get(x)
        .ok_or_else(|| Error::OutsideDomain(x.to_owned()))
}

// ---------------------------------------------------------------------------
// Generalized values

/// Either a specific (atomic) value or a still-generalized case table.
///
/// JSON: an atomic [`Value`], or `{"cases": {point: evaluand, ...}}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Evaluand {
    Atom(Value),
    General(GeneralizedValue),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawCases")]
pub struct GeneralizedValue {
    cases: IndexMap<Point, Evaluand>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCases {
    cases: IndexMap<Point, Evaluand>,
}

impl TryFrom<RawCases> for GeneralizedValue {
    type Error = String;

    fn try_from(raw: RawCases) -> std::result::Result<Self, String> {
        GeneralizedValue::new(raw.cases).map_err(|e| e.to_string())
    }
}

impl GeneralizedValue {
    pub fn new(cases: IndexMap<Point, Evaluand>) -> Result<Self> {
        if cases.is_empty() {
            return Err(Error::Invalid {
                section: "gvalues",
                id: String::new(),
                reason: "a generalized value needs at least one case".into(),
            });
        }
        Ok(Self { cases })
    }

    pub fn from_pairs<I, P, E>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (P, E)>,
        P: Into<Point>,
        E: Into<Evaluand>,
    {
        Self::new(
            pairs
                .into_iter()
                .map(|(p, e)| (p.into(), e.into()))
                .collect(),
        )
    }

    pub fn cases(&self) -> &IndexMap<Point, Evaluand> {
        &self.cases
    }

    /// The shared case value, when every case is equal.
    pub fn constant(&self) -> Option<&Evaluand> {
        let mut values = self.cases.values();
        let first = values.next()?;
        values.all(|v| v == first).then_some(first)
    }

    pub fn is_constant(&self) -> bool {
        self.constant().is_some()
    }

    /// Every point the value (including nested cases) is keyed by.
    pub fn points(&self) -> BTreeSet<&Point> {
        let mut out = BTreeSet::new();
        for (p, v) in &self.cases {
            out.insert(p);
            if let Evaluand::General(g) = v {
                out.extend(g.points());
            }
        }
        out
    }
}

impl From<Value> for Evaluand {
    fn from(v: Value) -> Self {
        Evaluand::Atom(v)
    }
}

impl From<&str> for Evaluand {
    fn from(s: &str) -> Self {
        Evaluand::Atom(Value::text(s))
    }
}

impl From<GeneralizedValue> for Evaluand {
    fn from(g: GeneralizedValue) -> Self {
        Evaluand::General(g)
    }
}

impl Evaluand {
    pub fn is_specific(&self) -> bool {
        matches!(self, Evaluand::Atom(_))
    }

    pub fn as_atom(&self) -> Option<&Value> {
        match self {
            Evaluand::Atom(v) => Some(v),
            Evaluand::General(_) => None,
        }
    }
}

impl fmt::Display for Evaluand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Evaluand::Atom(v) => write!(f, "{v}"),
            Evaluand::General(g) => write!(f, "{g}"),
        }
    }
}

impl fmt::Display for GeneralizedValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (p, v)) in self.cases.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{p}: {v}")?;
        }
        f.write_str("}")
    }
}

/// Applies one assignment set.
///
/// * an atomic value is returned unchanged (saturation);
/// * a constant table returns its constant for any assignment;
/// * otherwise the cases are restricted to the points in `assignment`: one
///   survivor yields its value, several yield a narrowed table, none is
///   [`Error::UnknownPoint`].
pub fn apply_assignment(g: &Evaluand, assignment: &BTreeSet<Point>) -> Result<Evaluand> {
    if assignment.is_empty() {
        return Err(Error::EmptyAssignment);
    }
    let table = match g {
        Evaluand::Atom(_) => return Ok(g.clone()),
        Evaluand::General(table) => table,
    };
    if let Some(c) = table.constant() {
        return Ok(c.clone());
    }
    let mut survivors: IndexMap<Point, Evaluand> = table
        .cases
        .iter()
        .filter(|(p, _)| assignment.contains(*p))
        .map(|(p, v)| (p.clone(), v.clone()))
        .collect();
    match survivors.len() {
        0 => Err(Error::UnknownPoint(format_points(assignment))),
        1 => Ok(survivors.pop().map(|(_, v)| v).expect("one survivor")),
        _ => Ok(Evaluand::General(GeneralizedValue { cases: survivors })),
    }
}

pub(crate) fn format_points<'a>(points: impl IntoIterator<Item = &'a Point>) -> String {
    let names: Vec<&str> = points.into_iter().map(Point::as_str).collect();
    format!("{{{}}}", names.join(", "))
}

/// The declared point vocabulary together with the named generalized values.
#[derive(Debug, Clone, Default)]
pub struct ValueTable {
    points: IndexSet<Point>,
    values: IndexMap<ValueId, GeneralizedValue>,
}

impl ValueTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn declare_point(&mut self, point: Point) {
        self.points.insert(point);
    }

    pub fn points(&self) -> &IndexSet<Point> {
        &self.points
    }

    pub fn knows(&self, point: &str) -> bool {
        self.points.contains(point)
    }

    /// Fails with [`Error::UnknownPoint`] on the first undeclared point.
    pub fn check_points<'a>(&self, points: impl IntoIterator<Item = &'a Point>) -> Result<()> {
        match points.into_iter().find(|p| !self.knows(p.as_str())) {
            Some(p) => Err(Error::UnknownPoint(p.to_string())),
            None => Ok(()),
        }
    }

    pub fn insert(&mut self, id: ValueId, value: GeneralizedValue) -> Result<()> {
        if self.values.contains_key(&id) {
            return Err(Error::duplicate("generalized value", id));
        }
        self.check_points(value.points())?;
        self.values.insert(id, value);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Result<&GeneralizedValue> {
        self.values
            .get(id)
            .ok_or_else(|| Error::unknown("generalized value", id))
    }

    pub fn contains(&self, id: &str) -> bool {
        self.values.contains_key(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ValueId, &GeneralizedValue)> {
        self.values.iter()
    }

    /// Applies a chain of assignment sets left to right.
    pub fn evaluate(&self, id: &str, chain: &[BTreeSet<Point>]) -> Result<Evaluand> {
        let mut current = Evaluand::General(self.get(id)?.clone());
        for assignment in chain {
            self.check_points(assignment)?;
            current = apply_assignment(&current, assignment)?;
        }
        Ok(current)
    }
}

// ---------------------------------------------------------------------------
// Comprehension

/// `{x : D | Φ}` over any slice of attribute-bearing objects, order-preserving.
pub fn comprehend_items<'a, T>(exec: Executor, items: &'a [T], pred: &Predicate) -> Vec<&'a T>
where
    T: Attributes + Sync,
{
    exec.filter(items, |x| pred.eval(x))
}

/// `{x : D | Φ}` over a type domain.
pub fn comprehend(store: &ObjectStore, domain: &str, pred: &Predicate) -> Result<Sort> {
    comprehend_with(Executor::default(), store, domain, pred)
}

pub fn comprehend_with(
    exec: Executor,
    store: &ObjectStore,
    domain: &str,
    pred: &Predicate,
) -> Result<Sort> {
    let members = store.members_of(domain)?;
    let members = comprehend_items(exec, &members, pred)
        .into_iter()
        .map(|ind| ind.id.clone())
        .collect();
    Ok(Sort {
        ty: store.domain(domain)?.id.clone(),
        assignment: pred.to_string(),
        members,
    })
}

// ---------------------------------------------------------------------------
// Metadata tower

/// Which objects a character ranges over: every object at `level`, or, at
/// level 0, the members of one domain.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CarrierRef {
    pub level: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<DomainId>,
}

impl CarrierRef {
    pub fn level(level: u32) -> Self {
        Self {
            level,
            domain: None,
        }
    }

    pub fn domain(domain: impl Into<DomainId>) -> Self {
        Self {
            level: 0,
            domain: Some(domain.into()),
        }
    }
}

/// A level-`j+1` object `z` with `z(x) ⇔ Φ(x)` for every level-`j` `x` in
/// its base carrier.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredicateCharacter {
    pub id: CharacterId,
    pub level: u32,
    pub base: CarrierRef,
    pub formula: Predicate,
}

/// Address of an object anywhere in the tower.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ObjectRef {
    pub level: u32,
    pub id: String,
}

impl ObjectRef {
    pub fn new(level: u32, id: impl Into<String>) -> Self {
        Self {
            level,
            id: id.into(),
        }
    }
}

/// An object at some level, viewed uniformly.
#[derive(Debug, Clone, Copy)]
pub enum MetaObject<'a> {
    Data(&'a Individual),
    Meta(&'a PredicateCharacter),
}

impl MetaObject<'_> {
    pub fn level(&self) -> u32 {
        match self {
            MetaObject::Data(_) => 0,
            MetaObject::Meta(c) => c.level,
        }
    }

    pub fn id(&self) -> &str {
        match self {
            MetaObject::Data(i) => i.id.as_str(),
            MetaObject::Meta(c) => c.id.as_str(),
        }
    }

    pub fn object_ref(&self) -> ObjectRef {
        ObjectRef::new(self.level(), self.id())
    }
}

/// Characters expose `id`, `level`, `base_level`, `base` (domain id or `*`)
/// and `formula` (its text form). Individuals additionally get `level = 0`.
impl Attributes for MetaObject<'_> {
    fn attr(&self, name: &str) -> Option<Cow<'_, Value>> {
        match (self, name) {
            (_, "level") => Some(Cow::Owned(Value::Int(self.level() as i64))),
            (MetaObject::Data(ind), _) => ind.attr(name),
            (MetaObject::Meta(c), "id") => Some(Cow::Owned(Value::text(c.id.as_str()))),
            (MetaObject::Meta(c), "base_level") => {
                Some(Cow::Owned(Value::Int(c.base.level as i64)))
            }
            (MetaObject::Meta(c), "base") => Some(Cow::Owned(Value::text(
                c.base.domain.as_ref().map_or("*", DomainId::as_str),
            ))),
            (MetaObject::Meta(c), "formula") => {
                Some(Cow::Owned(Value::text(c.formula.to_string())))
            }
            (MetaObject::Meta(_), _) => None,
        }
    }
}

/// One rung of the tower: its level and the ids it carries.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MetaLevel {
    pub level: u32,
    pub carrier: Vec<String>,
}

#[derive(Debug, Clone, Default)]
pub struct MetaTower {
    characters: IndexMap<CharacterId, PredicateCharacter>,
}

impl MetaTower {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn characters(&self) -> impl Iterator<Item = &PredicateCharacter> {
        self.characters.values()
    }

    pub fn character(&self, id: &str) -> Result<&PredicateCharacter> {
        self.characters
            .get(id)
            .ok_or_else(|| Error::unknown("predicate character", id))
    }

    pub fn height(&self) -> u32 {
        self.characters.values().map(|c| c.level).max().unwrap_or(0)
    }

    pub fn carrier<'a>(
        &'a self,
        store: &'a ObjectStore,
        base: &CarrierRef,
    ) -> Result<Vec<MetaObject<'a>>> {
        if base.level == 0 {
            let objects = match &base.domain {
                Some(d) => store.members_of(d.as_str())?,
                None => store.individuals().collect(),
            };
            return Ok(objects.into_iter().map(MetaObject::Data).collect());
        }
        if let Some(d) = &base.domain {
            return Err(Error::Invalid {
                section: "types",
                id: d.to_string(),
                reason: "domain restriction only applies at level 0".into(),
            });
        }
        Ok(self
            .characters
            .values()
            .filter(|c| c.level == base.level)
            .map(MetaObject::Meta)
            .collect())
    }

    pub fn meta_level(&self, store: &ObjectStore, level: u32) -> Result<MetaLevel> {
        let carrier = self
            .carrier(store, &CarrierRef::level(level))?
            .iter()
            .map(|o| o.id().to_owned())
            .collect();
        Ok(MetaLevel { level, carrier })
    }

    /// Resolves an object reference at any level.
    pub fn object<'a>(&'a self, store: &'a ObjectStore, at: &ObjectRef) -> Result<MetaObject<'a>> {
        if at.level == 0 {
            return store.individual(&at.id).map(MetaObject::Data);
        }
        let c = self.character(&at.id)?;
        if c.level != at.level {
            return Err(Error::LevelMismatch {
                expected: at.level,
                found: c.level,
            });
        }
        Ok(MetaObject::Meta(c))
    }

    /// Forms the level-`j+1` character for `Φ` over the given level-`j`
    /// carrier.
    pub fn lift(
        &mut self,
        store: &ObjectStore,
        id: CharacterId,
        base: CarrierRef,
        formula: Predicate,
    ) -> Result<&PredicateCharacter> {
        if self.characters.contains_key(&id) || store.individual(id.as_str()).is_ok() {
            return Err(Error::duplicate("predicate character", id));
        }
        if self.carrier(store, &base)?.is_empty() {
            return Err(Error::EmptyCarrier(base.level));
        }
        let character = PredicateCharacter {
            id: id.clone(),
            level: base.level + 1,
            base,
            formula,
        };
        Ok(self.characters.entry(id).or_insert(character))
    }

    /// `z^{j+1}(x^j)`.
    pub fn classify(&self, store: &ObjectStore, z: &str, x: &ObjectRef) -> Result<bool> {
        let z = self.character(z)?;
        if x.level != z.base.level {
            return Err(Error::LevelMismatch {
                expected: z.base.level,
                found: x.level,
            });
        }
        let object = self.object(store, x)?;
        if let Some(d) = &z.base.domain {
            if let MetaObject::Data(ind) = object {
                if ind.ty != *d {
                    return Err(Error::OutsideDomain(x.id.clone()));
                }
            }
        }
        Ok(z.formula.eval(&object))
    }

    /// Comprehension at any level of the tower.
    pub fn comprehend_level(
        &self,
        exec: Executor,
        store: &ObjectStore,
        base: &CarrierRef,
        pred: &Predicate,
    ) -> Result<Vec<ObjectRef>> {
        let carrier = self.carrier(store, base)?;
        Ok(exec.filter_map(&carrier, |o| pred.eval(o).then(|| o.object_ref())))
    }
}
