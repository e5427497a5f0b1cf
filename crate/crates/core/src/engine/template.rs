use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ids::{NavPoint, SourceId, TemplateId, TemplateTypeId};
use crate::predicate::Predicate;
use crate::profiles::ViewLevel;
use crate::semnet::FramePattern;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlotKind {
    Title,
    Header,
    Footer,
    FormattedText,
    StaticImage,
    VideoClip,
    Grid,
    UrlMeta,
}

impl SlotKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SlotKind::Title => "title",
            SlotKind::Header => "header",
            SlotKind::Footer => "footer",
            SlotKind::FormattedText => "formatted_text",
            SlotKind::StaticImage => "static_image",
            SlotKind::VideoClip => "video_clip",
            SlotKind::Grid => "grid",
            SlotKind::UrlMeta => "url_meta",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlotDecl {
    pub name: String,
    pub kind: SlotKind,
}

/// The concept side of the first conceptualization step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemplateType {
    pub id: TemplateTypeId,
    pub slots: Vec<SlotDecl>,
}

/// Where a slot's value comes from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum BindingSpec {
    SourceQuery {
        source: SourceId,
        #[serde(default = "always")]
        pred: Predicate,
    },
    SourceJoin {
        left: SourceId,
        right: SourceId,
        key: String,
        projection: Vec<String>,
    },
    FrameQuery(FramePattern),
    MediaRef {
        source: SourceId,
        asset: String,
    },
    ContentRef {
        source: SourceId,
        key: String,
    },
    GeneratedUrl,
}

fn always() -> Predicate {
    Predicate::TRUE
}

/// What a page must be rebuilt after.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Dependency {
    Source(SourceId),
    Frames,
}

impl BindingSpec {
    pub fn dependencies(&self) -> Vec<Dependency> {
        match self {
            BindingSpec::SourceQuery { source, .. }
            | BindingSpec::MediaRef { source, .. }
            | BindingSpec::ContentRef { source, .. } => vec![Dependency::Source(source.clone())],
            BindingSpec::SourceJoin { left, right, .. } => {
                vec![
                    Dependency::Source(left.clone()),
                    Dependency::Source(right.clone()),
                ]
            }
            BindingSpec::FrameQuery(_) => vec![Dependency::Frames],
            BindingSpec::GeneratedUrl => Vec::new(),
        }
    }

    pub fn sources(&self) -> impl Iterator<Item = SourceId> {
        self.dependencies().into_iter().filter_map(|d| match d {
            Dependency::Source(s) => Some(s),
            Dependency::Frames => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Slot {
    pub name: String,
    pub kind: SlotKind,
    pub binding: BindingSpec,
    #[serde(default = "public")]
    pub min_access: ViewLevel,
}

fn public() -> ViewLevel {
    ViewLevel::Public
}

/// The individual side: a concrete portlet whose slots follow its type's
/// signature exactly.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Template {
    pub id: TemplateId,
    #[serde(rename = "type")]
    pub ty: TemplateTypeId,
    pub slots: Vec<Slot>,
}

impl Template {
    pub fn dependencies(&self) -> BTreeSet<Dependency> {
        self.slots
            .iter()
            .flat_map(|s| s.binding.dependencies())
            .collect()
    }

    pub fn check_signature(&self, ty: &TemplateType) -> Result<()> {
        let invalid = |reason: String| Error::Invalid {
            section: "templates",
            id: self.id.to_string(),
            reason,
        };
        if self.ty != ty.id {
            return Err(invalid(format!("type is `{}`, not `{}`", self.ty, ty.id)));
        }
        if self.slots.len() != ty.slots.len() {
            return Err(invalid(format!(
                "{} slots, signature of `{}` has {}",
                self.slots.len(),
                ty.id,
                ty.slots.len()
            )));
        }
        for (slot, decl) in self.slots.iter().zip(&ty.slots) {
            if slot.name != decl.name || slot.kind != decl.kind {
                return Err(invalid(format!(
                    "slot `{}: {}` does not match signature `{}: {}`",
                    slot.name,
                    slot.kind.as_str(),
                    decl.name,
                    decl.kind.as_str()
                )));
            }
        }
        Ok(())
    }
}

impl TemplateType {
    pub fn check(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for s in &self.slots {
            if !seen.insert(&s.name) {
                return Err(Error::Invalid {
                    section: "templates",
                    id: self.id.to_string(),
                    reason: format!("slot name `{}` repeated", s.name),
                });
            }
        }
        Ok(())
    }
}

/// One navigation point: the assignment that selects a template type and
/// the template individual it maps to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NavEntry {
    pub point: NavPoint,
    pub template_type: TemplateTypeId,
    pub template: TemplateId,
}

/// `"/" + nav_point`, lower-cased, with every non-alphanumeric character
/// replaced by `-`.
pub fn url_for(nav: &str) -> String {
    let mut url = String::with_capacity(nav.len() + 1);
    url.push('/');
    url.extend(nav.chars().map(|c| {
        if c.is_alphanumeric() {
            c.to_lowercase().next().unwrap_or(c)
        } else {
            '-'
        }
    }));
    url
}
