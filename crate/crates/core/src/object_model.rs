//! Typed domains, concepts, individuals, states and data objects.

use std::borrow::Cow;
use std::collections::BTreeMap;

use indexmap::{IndexMap, IndexSet};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::ids::{ConceptId, DomainId, IndividualId, StateId};
use crate::predicate::Predicate;
use crate::value::{Attributes, Value};

/// A finite, enumerable problem domain. Members are kept in insertion order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeDomain {
    pub id: DomainId,
    pub description: String,
    pub members: IndexSet<IndividualId>,
}

/// A family of functions sharing a definition range and a value range.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Concept {
    pub id: ConceptId,
    pub definition_range: DomainId,
    pub value_range: DomainId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct State {
    pub id: StateId,
    #[serde(default)]
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Individual {
    pub id: IndividualId,
    #[serde(rename = "type")]
    pub ty: DomainId,
    pub state: StateId,
    #[serde(default)]
    pub attrs: BTreeMap<String, Value>,
}

/// Predicates see `id`, `type` and `state` alongside the individual's own
/// attributes; the built-ins win on a name clash.
impl Attributes for Individual {
    fn attr(&self, name: &str) -> Option<Cow<'_, Value>> {
        match name {
            "id" => Some(Cow::Owned(Value::text(self.id.as_str()))),
            "type" => Some(Cow::Owned(Value::text(self.ty.as_str()))),
            "state" => Some(Cow::Owned(Value::text(self.state.as_str()))),
            _ => self.attrs.get(name).map(Cow::Borrowed),
        }
    }
}

/// `⟨concept, individual, state⟩`. The state is a snapshot taken at
/// construction; later transitions of the individual do not touch it.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DataObject {
    pub concept: ConceptId,
    pub individual: IndividualId,
    pub state: StateId,
}

/// An assignment-indexed collection `H_T(I)` of same-typed individuals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sort {
    #[serde(rename = "type")]
    pub ty: DomainId,
    pub assignment: String,
    pub members: Vec<IndividualId>,
}

impl Sort {
    pub fn contains(&self, id: &str) -> bool {
        self.members.iter().any(|m| m.as_str() == id)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

#[derive(Debug, Clone, Default)]
pub struct ObjectStore {
    domains: IndexMap<DomainId, TypeDomain>,
    concepts: IndexMap<ConceptId, Concept>,
    states: IndexMap<StateId, State>,
    individuals: IndexMap<IndividualId, Individual>,
}

impl ObjectStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_domain(&mut self, id: DomainId, description: impl Into<String>) -> Result<()> {
        if self.domains.contains_key(&id) {
            return Err(Error::duplicate("type domain", id));
        }
        self.domains.insert(
            id.clone(),
            TypeDomain {
                id,
                description: description.into(),
                members: IndexSet::new(),
            },
        );
        Ok(())
    }

    pub fn add_state(&mut self, state: State) -> Result<()> {
        if self.states.contains_key(&state.id) {
            return Err(Error::duplicate("state", &state.id));
        }
        self.states.insert(state.id.clone(), state);
        Ok(())
    }

    pub fn add_concept(&mut self, concept: Concept) -> Result<()> {
        if self.concepts.contains_key(&concept.id) {
            return Err(Error::duplicate("concept", &concept.id));
        }
        self.domain(concept.definition_range.as_str())?;
        self.domain(concept.value_range.as_str())?;
        self.concepts.insert(concept.id.clone(), concept);
        Ok(())
    }

    pub fn add_individual(&mut self, individual: Individual) -> Result<()> {
        if self.individuals.contains_key(&individual.id) {
            return Err(Error::duplicate("individual", &individual.id));
        }
        self.state(individual.state.as_str())?;
        let domain = self
            .domains
            .get_mut(&individual.ty)
            .ok_or_else(|| Error::unknown("type domain", &individual.ty))?;
        domain.members.insert(individual.id.clone());
        self.individuals.insert(individual.id.clone(), individual);
        Ok(())
    }

    pub fn domain(&self, id: &str) -> Result<&TypeDomain> {
        self.domains
            .get(id)
            .ok_or_else(|| Error::unknown("type domain", id))
    }

    pub fn concept(&self, id: &str) -> Result<&Concept> {
        self.concepts
            .get(id)
            .ok_or_else(|| Error::unknown("concept", id))
    }

    pub fn state(&self, id: &str) -> Result<&State> {
        self.states
            .get(id)
            .ok_or_else(|| Error::unknown("state", id))
    }

    pub fn individual(&self, id: &str) -> Result<&Individual> {
        self.individuals
            .get(id)
            .ok_or_else(|| Error::unknown("individual", id))
    }

    pub fn domains(&self) -> impl Iterator<Item = &TypeDomain> {
        self.domains.values()
    }

    pub fn concepts(&self) -> impl Iterator<Item = &Concept> {
        self.concepts.values()
    }

    pub fn states(&self) -> impl Iterator<Item = &State> {
        self.states.values()
    }

    pub fn individuals(&self) -> impl Iterator<Item = &Individual> {
        self.individuals.values()
    }

    /// Members of a domain, in domain order.
    pub fn members_of(&self, domain: &str) -> Result<Vec<&Individual>> {
        Ok(self
            .domain(domain)?
            .members
            .iter()
            .map(|id| &self.individuals[id])
            .collect())
    }

    pub fn make_data_object(&self, concept: &str, individual: &str) -> Result<DataObject> {
        let concept = self.concept(concept)?;
        let ind = self.individual(individual)?;
        let range = self.domain(concept.definition_range.as_str())?;
        if !range.members.contains(&ind.id) {
            return Err(Error::TypeMismatch {
                individual: ind.id.to_string(),
                expected: range.id.to_string(),
                actual: ind.ty.to_string(),
            });
        }
        Ok(DataObject {
            concept: concept.id.clone(),
            individual: ind.id.clone(),
            state: ind.state.clone(),
        })
    }

    pub fn transition_state(&mut self, individual: &str, new_state: &str) -> Result<&Individual> {
        let state = self.state(new_state)?.id.clone();
        let ind = self
            .individuals
            .get_mut(individual)
            .ok_or_else(|| Error::unknown("individual", individual))?;
        ind.state = state;
        Ok(ind)
    }

    pub fn sort_variable(&self, ty: &str, assignment: &str, pred: &Predicate) -> Result<Sort> {
        self.sort_variable_with(Executor::default(), ty, assignment, pred)
    }

    pub fn sort_variable_with(
        &self,
        exec: Executor,
        ty: &str,
        assignment: &str,
        pred: &Predicate,
    ) -> Result<Sort> {
        let domain = self.domain(ty)?;
        let members = self.members_of(ty)?;
        let members = exec.filter_map(&members, |ind| pred.eval(*ind).then(|| ind.id.clone()));
        Ok(Sort {
            ty: domain.id.clone(),
            assignment: assignment.to_owned(),
            members,
        })
    }

    /// The unique `d ∈ D` with `Φ(d)`.
    pub fn identify(&self, domain: &str, pred: &Predicate) -> Result<&Individual> {
        let members = self.members_of(domain)?;
        let mut hits = members.into_iter().filter(|ind| pred.eval(*ind));
        match (hits.next(), hits.count()) {
            (None, _) => Err(Error::NoWitness),
            (Some(d), 0) => Ok(d),
            (Some(_), rest) => Err(Error::AmbiguousIdentity { count: rest + 1 }),
        }
    }
}
