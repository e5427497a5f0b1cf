//! The portal bundle: one JSON document describing the whole model.
//!
//! Every section is optional, so `{}` is a valid (empty) bundle. Unknown
//! keys are rejected at every level. Loading is all-or-nothing: the engine
//! is assembled privately and only returned once every cross-reference has
//! resolved.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::calculus::{Evaluand, GeneralizedValue, PredicateCharacter};
use crate::engine::{NavEntry, Portal, Script, ScriptAction, Template, TemplateType};
use crate::error::{Error, Result};
use crate::ids::{DomainId, EventName, Point, ValueId};
use crate::object_model::{Concept, Individual, State};
use crate::profiles::{ProfileFunctional, Role, UserRecord};
use crate::semnet::{Binding, Frame};
use crate::sources::SourceDescriptor;
use crate::value::Value;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PortalBundle {
    #[serde(default)]
    pub types: TypesSection,
    #[serde(default)]
    pub individuals: Vec<Individual>,
    #[serde(default)]
    pub frames: Vec<Frame>,
    #[serde(default)]
    pub gvalues: GValuesSection,
    #[serde(default)]
    pub functionals: Vec<ProfileFunctional>,
    #[serde(default)]
    pub users: Vec<UserRecord>,
    #[serde(default)]
    pub roles: Vec<Role>,
    #[serde(default)]
    pub sources: Vec<SourceDescriptor>,
    #[serde(default)]
    pub templates: TemplatesSection,
    #[serde(default)]
    pub navigation: Vec<NavEntry>,
    #[serde(default)]
    pub scripts: ScriptsSection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TypesSection {
    #[serde(default)]
    pub domains: Vec<DomainDecl>,
    #[serde(default)]
    pub concepts: Vec<Concept>,
    #[serde(default)]
    pub states: Vec<State>,
    /// Metadata characters, lifted in the order given.
    #[serde(default)]
    pub characters: Vec<PredicateCharacter>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainDecl {
    pub id: DomainId,
    #[serde(default)]
    pub description: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GValuesSection {
    /// The assignment point vocabulary.
    #[serde(default)]
    pub points: Vec<Point>,
    #[serde(default)]
    pub values: Vec<GValueDecl>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GValueDecl {
    pub id: ValueId,
    pub cases: IndexMap<Point, Evaluand>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemplatesSection {
    #[serde(default)]
    pub types: Vec<TemplateType>,
    #[serde(default)]
    pub templates: Vec<Template>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptsSection {
    #[serde(default)]
    pub events: Vec<EventName>,
    #[serde(default)]
    pub scripts: Vec<Script>,
}

impl PortalBundle {
    pub fn from_json(doc: &str) -> Result<Self> {
        serde_json::from_str(doc).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("bundle serializes")
    }

    /// Assembles an engine. Relative source locations resolve against
    /// `base_dir`.
    pub fn build(&self, base_dir: &Path) -> Result<Portal> {
        let mut p = Portal::new();
        self.load_types(&mut p)?;
        self.load_gvalues(&mut p)?;
        self.load_frames(&mut p)?;
        for desc in &self.sources {
            let id = p
                .sources
                .register_source(desc.clone(), base_dir)
                .map_err(|e| e.in_section("sources", &desc.id))?;
            p.access.declare_source(id);
        }
        self.load_profiles(&mut p)?;
        self.load_site(&mut p)?;
        Ok(p)
    }

    fn load_types(&self, p: &mut Portal) -> Result<()> {
        for d in &self.types.domains {
            p.objects
                .add_domain(d.id.clone(), d.description.clone())
                .map_err(|e| e.in_section("types", &d.id))?;
        }
        for s in &self.types.states {
            p.objects
                .add_state(s.clone())
                .map_err(|e| e.in_section("types", &s.id))?;
        }
        for c in &self.types.concepts {
            p.objects
                .add_concept(c.clone())
                .map_err(|e| e.in_section("types", &c.id))?;
        }
        for i in &self.individuals {
            p.objects
                .add_individual(i.clone())
                .map_err(|e| e.in_section("individuals", &i.id))?;
        }
        for c in &self.types.characters {
            if c.level != c.base.level + 1 {
                return Err(Error::Invalid {
                    section: "types",
                    id: c.id.to_string(),
                    reason: format!(
                        "a character over level {} sits at level {}",
                        c.base.level,
                        c.base.level + 1
                    ),
                });
            }
            p.tower
                .lift(&p.objects, c.id.clone(), c.base.clone(), c.formula.clone())
                .map_err(|e| e.in_section("types", &c.id))?;
        }
        Ok(())
    }

    fn load_gvalues(&self, p: &mut Portal) -> Result<()> {
        for point in &self.gvalues.points {
            p.values.declare_point(point.clone());
        }
        for v in &self.gvalues.values {
            let g = GeneralizedValue::new(v.cases.clone()).map_err(|_| Error::Invalid {
                section: "gvalues",
                id: v.id.to_string(),
                reason: "no cases".into(),
            })?;
            p.values.insert(v.id.clone(), g).map_err(|e| match e {
                Error::UnknownPoint(point) => Error::DanglingReference {
                    section: "gvalues",
                    id: point,
                    owner: v.id.to_string(),
                },
                e => e.in_section("gvalues", &v.id),
            })?;
        }
        Ok(())
    }

    /// Relations and constants are declared by use. A constant naming an
    /// individual binds to it; any other constant is a text atom.
    fn load_frames(&self, p: &mut Portal) -> Result<()> {
        for f in &self.frames {
            p.frames.declare_relation(f.relation.clone());
            for c in [&f.subject, &f.object] {
                let binding = if p.objects.individual(c.as_str()).is_ok() {
                    Binding::Individual(c.as_str().into())
                } else {
                    Binding::Atom(Value::text(c.as_str()))
                };
                p.frames.declare_constant(c.clone(), binding)?;
            }
            p.frames
                .assert_frame(f.clone())
                .map_err(|e| e.in_section("frames", &f.relation))?;
        }
        Ok(())
    }

    fn load_profiles(&self, p: &mut Portal) -> Result<()> {
        for r in &self.roles {
            p.access
                .add_role(r.clone())
                .map_err(|e| e.in_section("roles", &r.id))?;
            for t in r.read.iter().chain(&r.write) {
                if let crate::profiles::AccessTarget::Source(s) = t {
                    if !p.sources.contains(s.as_str()) {
                        return Err(Error::DanglingReference {
                            section: "roles",
                            id: s.to_string(),
                            owner: r.id.to_string(),
                        });
                    }
                }
            }
        }
        p.access.check_hierarchy()?;
        for u in &self.users {
            if let Some(pt) = u.points().find(|pt| !p.values.knows(pt.as_str())) {
                return Err(Error::DanglingReference {
                    section: "users",
                    id: pt.to_string(),
                    owner: u.id.to_string(),
                });
            }
            p.access
                .add_user(u.clone())
                .map_err(|e| e.in_section("users", &u.id))?;
        }
        for f in &self.functionals {
            if p.values.contains(f.id.as_str()) {
                return Err(Error::Invalid {
                    section: "functionals",
                    id: f.id.to_string(),
                    reason: "name already used by a generalized value".into(),
                });
            }
            for u in f.base.iter().flatten() {
                if p.access.user(u.as_str()).is_err() {
                    return Err(Error::DanglingReference {
                        section: "functionals",
                        id: u.to_string(),
                        owner: f.id.to_string(),
                    });
                }
            }
            p.access
                .add_functional(f.clone())
                .map_err(|e| e.in_section("functionals", &f.id))?;
        }
        Ok(())
    }

    fn load_site(&self, p: &mut Portal) -> Result<()> {
        for t in &self.templates.types {
            t.check()?;
            if p.site
                .template_types
                .insert(t.id.clone(), t.clone())
                .is_some()
            {
                return Err(Error::Invalid {
                    section: "templates",
                    id: t.id.to_string(),
                    reason: "duplicate template type".into(),
                });
            }
        }
        for t in &self.templates.templates {
            p.validate_template(t)?;
            if p.site.templates.insert(t.id.clone(), t.clone()).is_some() {
                return Err(Error::Invalid {
                    section: "templates",
                    id: t.id.to_string(),
                    reason: "duplicate template".into(),
                });
            }
        }
        for n in &self.navigation {
            let dangling = |id: &str| Error::DanglingReference {
                section: "navigation",
                id: id.to_owned(),
                owner: n.point.to_string(),
            };
            p.template_type(n.template_type.as_str())
                .map_err(|_| dangling(n.template_type.as_str()))?;
            let t = p
                .template(n.template.as_str())
                .map_err(|_| dangling(n.template.as_str()))?;
            if t.ty != n.template_type {
                return Err(Error::Invalid {
                    section: "navigation",
                    id: n.point.to_string(),
                    reason: format!(
                        "template `{}` is of type `{}`, not `{}`",
                        t.id, t.ty, n.template_type
                    ),
                });
            }
            if p.site
                .navigation
                .insert(n.point.clone(), n.clone())
                .is_some()
            {
                return Err(Error::Invalid {
                    section: "navigation",
                    id: n.point.to_string(),
                    reason: "duplicate navigation point".into(),
                });
            }
        }
        for e in &self.scripts.events {
            if !p.site.events.insert(e.clone()) {
                return Err(Error::Invalid {
                    section: "scripts",
                    id: e.to_string(),
                    reason: "duplicate event".into(),
                });
            }
        }
        for s in &self.scripts.scripts {
            let dangling = |id: &str| Error::DanglingReference {
                section: "scripts",
                id: id.to_owned(),
                owner: s.event.to_string(),
            };
            if !p.site.events.contains(&s.event) {
                return Err(dangling(s.event.as_str()));
            }
            match &s.action {
                ScriptAction::Rebuild { nav: Some(n) }
                | ScriptAction::Rebind { nav: Some(n), .. }
                    if !p.site.navigation.contains_key(n) =>
                {
                    return Err(dangling(n.as_str()))
                }
                ScriptAction::TransitionState { individual, state } => {
                    p.objects
                        .individual(individual.as_str())
                        .map_err(|_| dangling(individual.as_str()))?;
                    p.objects
                        .state(state.as_str())
                        .map_err(|_| dangling(state.as_str()))?;
                }
                _ => {}
            }
            p.site.scripts.push(s.clone());
        }
        Ok(())
    }

    /// Section-wise comparison that ignores declaration order.
    pub fn same_contents(&self, other: &PortalBundle) -> bool {
        fn set<T: Serialize>(items: &[T]) -> BTreeSet<String> {
            items
                .iter()
                .map(|i| serde_json::to_string(i).expect("serializes"))
                .collect()
        }
        let a = &self;
        let b = &other;
        set(&a.types.domains) == set(&b.types.domains)
            && set(&a.types.concepts) == set(&b.types.concepts)
            && set(&a.types.states) == set(&b.types.states)
            && set(&a.types.characters) == set(&b.types.characters)
            && set(&a.individuals) == set(&b.individuals)
            && set(&a.frames) == set(&b.frames)
            && set(&a.gvalues.points) == set(&b.gvalues.points)
            && set(&a.gvalues.values) == set(&b.gvalues.values)
            && set(&a.functionals) == set(&b.functionals)
            && set(&a.users) == set(&b.users)
            && set(&a.roles) == set(&b.roles)
            && set(&a.sources) == set(&b.sources)
            && set(&a.templates.types) == set(&b.templates.types)
            && set(&a.templates.templates) == set(&b.templates.templates)
            && set(&a.navigation) == set(&b.navigation)
            && set(&a.scripts.events) == set(&b.scripts.events)
            && a.scripts.scripts == b.scripts.scripts
    }
}

/// Reads and assembles a bundle file. Sources resolve relative to the
/// file's directory.
pub fn load_bundle(path: impl AsRef<Path>) -> Result<Portal> {
    let path = path.as_ref();
    let doc = std::fs::read_to_string(path).map_err(|e| Error::UnreadableLocation {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    let bundle = PortalBundle::from_json(&doc)?;
    bundle.build(&base_dir(path))
}

fn base_dir(path: &Path) -> PathBuf {
    match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

impl Portal {
    /// The current model as a bundle. Individuals carry their current
    /// state.
    pub fn export(&self) -> PortalBundle {
        PortalBundle {
            types: TypesSection {
                domains: self
                    .objects
                    .domains()
                    .map(|d| DomainDecl {
                        id: d.id.clone(),
                        description: d.description.clone(),
                    })
                    .collect(),
                concepts: self.objects.concepts().cloned().collect(),
                states: self.objects.states().cloned().collect(),
                characters: self.tower.characters().cloned().collect(),
            },
            individuals: self.objects.individuals().cloned().collect(),
            frames: self.frames.frames().cloned().collect(),
            gvalues: GValuesSection {
                points: self.values.points().iter().cloned().collect(),
                values: self
                    .values
                    .iter()
                    .map(|(id, g)| GValueDecl {
                        id: id.clone(),
                        cases: g.cases().clone(),
                    })
                    .collect(),
            },
            functionals: self.access.functionals().cloned().collect(),
            users: self.access.users().cloned().collect(),
            roles: self.access.roles().cloned().collect(),
            sources: self.sources.descriptors().cloned().collect(),
            templates: TemplatesSection {
                types: self.site.template_types.values().cloned().collect(),
                templates: self.site.templates.values().cloned().collect(),
            },
            navigation: self.site.navigation.values().cloned().collect(),
            scripts: ScriptsSection {
                events: self.site.events.iter().cloned().collect(),
                scripts: self.site.scripts.clone(),
            },
        }
    }
}
