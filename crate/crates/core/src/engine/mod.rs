//! The portal engine.
//!
//! Page generation runs in two conceptualization steps. The navigation point
//! picks a template type and maps it to a template individual
//! ([`Portal::resolve_template`]). The template's slots are then bound
//! against the current sources and frames ([`Portal::bind_slots`]).
//!
//! Built pages are cached per navigation point and view level. Every
//! mutation (source events, frame edits, template edits, scripts, refresh
//! timers) goes through `&mut Portal`, so all state changes are applied in
//! one order. Affected pages are rebuilt whole.

mod page;
mod script;
mod stats;
mod template;

use std::collections::{BTreeMap, BTreeSet};
use std::time::Duration;

use indexmap::{IndexMap, IndexSet};
use serde::Serialize;

pub use page::{
    parse_structured, render_html, render_page, render_structured, BoundSlot, Format, Grid,
    MediaValue, Page, SlotValue, StructuredPage,
};
pub use script::{Payload, Script, ScriptAction};
pub use stats::{NavTotal, StatsReport, StatsRow, ViewStats};
pub use template::{
    url_for, BindingSpec, Dependency, NavEntry, Slot, SlotDecl, SlotKind, Template, TemplateType,
};

use crate::calculus::{CarrierRef, Evaluand, MetaObject, MetaTower, ObjectRef, ValueTable};
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::ids::{
    EventName, NavPoint, Point, SessionId, SourceId, TemplateId, TemplateTypeId, UserId,
};
use crate::object_model::ObjectStore;
use crate::profiles::{AccessControl, AccessMode, AccessTarget, Session, ViewLevel};
use crate::semnet::{Frame, FrameStore};
use crate::sources::{
    categorize_media, Change, MediaAsset, SourceKind, SourceRegistry, UpdateEvent,
};
use crate::value::Value;

use script::GuardView;

/// Templates, navigation and scripts.
#[derive(Debug, Clone, Default)]
pub struct Site {
    pub(crate) template_types: IndexMap<TemplateTypeId, TemplateType>,
    pub(crate) templates: IndexMap<TemplateId, Template>,
    pub(crate) navigation: IndexMap<NavPoint, NavEntry>,
    pub(crate) events: IndexSet<EventName>,
    pub(crate) scripts: Vec<Script>,
}

impl Site {
    pub fn template_types(&self) -> impl Iterator<Item = &TemplateType> {
        self.template_types.values()
    }

    pub fn templates(&self) -> impl Iterator<Item = &Template> {
        self.templates.values()
    }

    pub fn navigation(&self) -> impl Iterator<Item = &NavEntry> {
        self.navigation.values()
    }

    pub fn events(&self) -> impl Iterator<Item = &EventName> {
        self.events.iter()
    }

    pub fn scripts(&self) -> &[Script] {
        &self.scripts
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PageKey {
    pub nav: NavPoint,
    pub view: ViewLevel,
}

impl PageKey {
    pub fn new(nav: impl Into<NavPoint>, view: ViewLevel) -> Self {
        Self {
            nav: nav.into(),
            view,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    pub interval_ms: u64,
    pub next_due_ms: u64,
    pub fired: u64,
}

/// The engine's mutable state: page cache, event high-water mark, view
/// counters and the simulated refresh clock.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EngineState {
    pub cache: BTreeMap<PageKey, Page>,
    pub last_seq: u64,
    pub stats: ViewStats,
    pub clock_ms: u64,
    pub schedules: BTreeMap<NavPoint, Schedule>,
}

/// Metadata as served to privileged sessions.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MetaView {
    DataObject {
        level: u32,
        id: String,
        #[serde(rename = "type")]
        ty: String,
        state: String,
        attrs: BTreeMap<String, Value>,
    },
    Character {
        level: u32,
        id: String,
        base: CarrierRef,
        formula: String,
        extension: Vec<ObjectRef>,
    },
}

/// Outcome of one source update.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UpdateOutcome {
    pub seq: u64,
    pub rebuilt: Vec<NavPoint>,
}

#[derive(Debug, Clone, Default)]
pub struct Portal {
    pub(crate) objects: ObjectStore,
    pub(crate) tower: MetaTower,
    pub(crate) values: ValueTable,
    pub(crate) frames: FrameStore,
    pub(crate) access: AccessControl,
    pub(crate) sources: SourceRegistry,
    pub(crate) site: Site,
    pub(crate) state: EngineState,
    pub(crate) exec: Executor,
}

impl Portal {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_executor(mut self, exec: Executor) -> Self {
        self.exec = exec;
        self
    }

    pub fn executor(&self) -> Executor {
        self.exec
    }

    pub fn objects(&self) -> &ObjectStore {
        &self.objects
    }

    pub fn tower(&self) -> &MetaTower {
        &self.tower
    }

    pub fn values(&self) -> &ValueTable {
        &self.values
    }

    pub fn frames(&self) -> &FrameStore {
        &self.frames
    }

    pub fn access(&self) -> &AccessControl {
        &self.access
    }

    pub fn sources(&self) -> &SourceRegistry {
        &self.sources
    }

    /// Direct registry access. Events emitted here reach the page cache
    /// only once they are passed to [`on_source_update`](Self::on_source_update).
    pub fn sources_mut(&mut self) -> &mut SourceRegistry {
        &mut self.sources
    }

    pub fn site(&self) -> &Site {
        &self.site
    }

    pub fn state(&self) -> &EngineState {
        &self.state
    }

    // -- step one: navigation point → template ------------------------------

    pub fn nav_entry(&self, nav: &str) -> Result<&NavEntry> {
        self.site
            .navigation
            .get(nav)
            .ok_or_else(|| Error::UnknownNavigationPoint(nav.to_owned()))
    }

    pub fn resolve_template(&self, nav: &str) -> Result<&Template> {
        let entry = self.nav_entry(nav)?;
        self.template(entry.template.as_str())
    }

    pub fn template(&self, id: &str) -> Result<&Template> {
        self.site
            .templates
            .get(id)
            .ok_or_else(|| Error::unknown("template", id))
    }

    pub fn template_type(&self, id: &str) -> Result<&TemplateType> {
        self.site
            .template_types
            .get(id)
            .ok_or_else(|| Error::unknown("template type", id))
    }

    // -- step two: slot binding ---------------------------------------------

    /// Binds the template behind `nav` for an open session.
    pub fn bind_slots(&self, nav: &str, session: &str) -> Result<Page> {
        let view = self.access.open(session)?.view;
        self.build_page(nav, view)
    }

    /// Builds the page for `nav` as seen at `view`, from scratch.
    pub fn build_page(&self, nav: &str, view: ViewLevel) -> Result<Page> {
        let template = self.resolve_template(nav)?;
        self.bind_template(nav, template, view)
    }

    /// Binds every slot the viewer may see. Slots above `view` are left out.
    pub fn bind_template(&self, nav: &str, template: &Template, view: ViewLevel) -> Result<Page> {
        let slots = template
            .slots
            .iter()
            .filter(|s| s.min_access <= view)
            .map(|s| {
                Ok(BoundSlot {
                    name: s.name.clone(),
                    kind: s.kind,
                    value: self.bind_slot(nav, s)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Page {
            nav_point: nav.into(),
            url: url_for(nav),
            slots,
            built_at_seq: self.state.last_seq,
            view,
        })
    }

    fn bind_slot(&self, nav: &str, slot: &Slot) -> Result<SlotValue> {
        let unbound = |reason: String| Error::UnboundSlot {
            slot: slot.name.clone(),
            reason,
        };
        match &slot.binding {
            BindingSpec::GeneratedUrl => Ok(SlotValue::Url(url_for(nav))),
            BindingSpec::SourceQuery { source, pred } => {
                let columns = self
                    .sources
                    .columns(source.as_str())
                    .map_err(|e| unbound(e.to_string()))?;
                let records = self
                    .sources
                    .fetch_records_with(self.exec, source.as_str(), pred)
                    .map_err(|e| unbound(e.to_string()))?;
                let rows = records
                    .iter()
                    .map(|r| columns.iter().map(|c| r.fields.get(c).cloned()).collect())
                    .collect();
                Ok(SlotValue::Grid(Grid { columns, rows }))
            }
            BindingSpec::SourceJoin {
                left,
                right,
                key,
                projection,
            } => {
                let rows = self
                    .sources
                    .join_records_with(self.exec, left.as_str(), right.as_str(), key)
                    .map_err(|e| unbound(e.to_string()))?;
                let available = self.joined_columns(left.as_str(), right.as_str(), key)?;
                if let Some(missing) = projection.iter().find(|c| !available.contains(*c)) {
                    return Err(unbound(format!("join has no column `{missing}`")));
                }
                let rows = rows
                    .iter()
                    .map(|r| {
                        projection
                            .iter()
                            .map(|c| r.fields.get(c).cloned())
                            .collect()
                    })
                    .collect();
                Ok(SlotValue::Grid(Grid {
                    columns: projection.clone(),
                    rows,
                }))
            }
            BindingSpec::FrameQuery(pattern) => {
                let mut values = self
                    .frames
                    .object_values(pattern)
                    .map_err(|e| unbound(e.to_string()))?;
                match values.len() {
                    0 => Err(unbound("no frame matches".into())),
                    1 => Ok(SlotValue::Value(values.remove(0))),
                    _ => Ok(SlotValue::Values(values)),
                }
            }
            BindingSpec::MediaRef { source, asset } => {
                let record = self
                    .sources
                    .record(source.as_str(), &Value::text(asset))
                    .map_err(|e| unbound(e.to_string()))?
                    .ok_or_else(|| unbound(format!("no asset `{asset}` in `{source}`")))?;
                let asset = MediaAsset::from_record(record)?;
                categorize_media(&asset)?;
                Ok(SlotValue::Media(MediaValue {
                    asset: asset.id,
                    category: asset.category,
                    subcategory: asset.subcategory,
                    uri: asset.uri,
                }))
            }
            BindingSpec::ContentRef { source, key } => {
                let record = self
                    .sources
                    .record(source.as_str(), &Value::text(key))
                    .map_err(|e| unbound(e.to_string()))?
                    .ok_or_else(|| unbound(format!("no document `{key}` in `{source}`")))?;
                match record.fields.get("text") {
                    Some(Value::Text(t)) => Ok(SlotValue::Text(t.clone())),
                    Some(other) => Ok(SlotValue::Text(other.to_string())),
                    None => Err(unbound(format!("document `{key}` has no text"))),
                }
            }
        }
    }

    fn joined_columns(&self, left: &str, right: &str, key: &str) -> Result<BTreeSet<String>> {
        let mut cols: BTreeSet<String> = self.sources.columns(left)?.into_iter().collect();
        for c in self.sources.columns(right)? {
            if c == key {
                continue;
            }
            if cols.contains(&c) {
                cols.insert(format!("{right}.{c}"));
            } else {
                cols.insert(c);
            }
        }
        Ok(cols)
    }

    // -- cache ----------------------------------------------------------------

    /// The cached page for this session's view, building it on a miss.
    pub fn page(&mut self, nav: &str, session: &str) -> Result<Page> {
        let view = self.access.open(session)?.view;
        self.nav_entry(nav)?;
        let key = PageKey::new(nav, view);
        if let Some(p) = self.state.cache.get(&key) {
            return Ok(p.clone());
        }
        let page = self.build_page(nav, view)?;
        self.state.cache.insert(key, page.clone());
        Ok(page)
    }

    pub fn cached(&self, nav: &str, view: ViewLevel) -> Option<&Page> {
        self.state.cache.get(&PageKey::new(nav, view))
    }

    /// Navigation points whose template depends on `dep`.
    pub fn dependents(&self, dep: &Dependency) -> BTreeSet<NavPoint> {
        self.site
            .navigation
            .values()
            .filter(|entry| {
                self.site
                    .templates
                    .get(&entry.template)
                    .is_some_and(|t| t.dependencies().contains(dep))
            })
            .map(|entry| entry.point.clone())
            .collect()
    }

    /// Rebuilds the given cache entries. Pages that no longer bind are
    /// dropped from the cache; their errors are returned alongside.
    fn rebuild(&mut self, keys: Vec<PageKey>) -> Vec<(PageKey, Result<()>)> {
        let built = self
            .exec
            .map_each(&keys, |k| self.build_page(k.nav.as_str(), k.view));
        keys.into_iter()
            .zip(built)
            .map(|(key, page)| match page {
                Ok(page) => {
                    self.state.cache.insert(key.clone(), page);
                    (key, Ok(()))
                }
                Err(e) => {
                    self.state.cache.remove(&key);
                    (key, Err(e))
                }
            })
            .collect()
    }

    fn cached_keys(&self, navs: &BTreeSet<NavPoint>) -> Vec<PageKey> {
        self.state
            .cache
            .keys()
            .filter(|k| navs.contains(&k.nav))
            .cloned()
            .collect()
    }

    fn rebuild_navs(&mut self, navs: &BTreeSet<NavPoint>) -> Vec<NavPoint> {
        let keys = self.cached_keys(navs);
        let rebuilt: BTreeSet<NavPoint> = self
            .rebuild(keys)
            .into_iter()
            .filter(|(_, r)| r.is_ok())
            .map(|(k, _)| k.nav)
            .collect();
        rebuilt.into_iter().collect()
    }

    // -- events ---------------------------------------------------------------

    /// Reacts to a source event already applied to the registry: every
    /// cached page that reads the event's source is rebuilt.
    pub fn on_source_update(&mut self, ev: &UpdateEvent) -> Result<Vec<NavPoint>> {
        let expected = self.state.last_seq + 1;
        if ev.seq != expected {
            return Err(Error::OutOfOrderEvent {
                expected,
                got: ev.seq,
            });
        }
        self.state.last_seq = ev.seq;
        let navs = self.dependents(&Dependency::Source(ev.source.clone()));
        Ok(self.rebuild_navs(&navs))
    }

    /// Applies a change to a source and propagates it to the page cache.
    pub fn submit_update(
        &mut self,
        source: &str,
        key: Value,
        change: Change,
    ) -> Result<UpdateOutcome> {
        let ev = self.sources.emit_update(source, key, change)?;
        let rebuilt = self.on_source_update(&ev)?;
        Ok(UpdateOutcome {
            seq: ev.seq,
            rebuilt,
        })
    }

    /// Same as [`submit_update`](Self::submit_update) but checks the
    /// session holds write access to the source first.
    pub fn submit_update_as(
        &mut self,
        session: &str,
        source: &str,
        key: Value,
        change: Change,
    ) -> Result<UpdateOutcome> {
        self.sources.descriptor(source)?;
        self.access.require(
            session,
            &AccessTarget::Source(source.into()),
            AccessMode::Write,
        )?;
        self.submit_update(source, key, change)
    }

    pub fn assert_frame(&mut self, frame: Frame) -> Result<Vec<NavPoint>> {
        if !self.frames.assert_frame(frame)? {
            return Ok(Vec::new());
        }
        let navs = self.dependents(&Dependency::Frames);
        Ok(self.rebuild_navs(&navs))
    }

    pub fn retract_frame(&mut self, frame: &Frame) -> Vec<NavPoint> {
        if !self.frames.retract_frame(frame) {
            return Vec::new();
        }
        let navs = self.dependents(&Dependency::Frames);
        self.rebuild_navs(&navs)
    }

    /// Fires every script declared for `event` whose guard holds, in
    /// declaration order.
    pub fn handle_event(&mut self, event: &str, payload: &Payload) -> Result<&EngineState> {
        if !self.site.events.contains(event) {
            return Err(Error::UnknownEvent(event.to_owned()));
        }
        let scripts: Vec<Script> = self
            .site
            .scripts
            .iter()
            .filter(|s| s.event.as_str() == event)
            .cloned()
            .collect();
        for script in scripts {
            let view = GuardView {
                event,
                last_seq: self.state.last_seq,
                cached: self.state.cache.len(),
                clock: self.state.clock_ms,
                payload,
            };
            if !script.guard.eval(&view) {
                continue;
            }
            self.run_action(&script.action)?;
        }
        Ok(&self.state)
    }

    /// Steps through a sequence of events.
    pub fn handle_events<'a, I>(&mut self, events: I) -> Result<&EngineState>
    where
        I: IntoIterator<Item = (&'a str, &'a Payload)>,
    {
        for (event, payload) in events {
            self.handle_event(event, payload)?;
        }
        Ok(&self.state)
    }

    fn run_action(&mut self, action: &ScriptAction) -> Result<()> {
        match action {
            ScriptAction::Noop => {}
            ScriptAction::Rebuild { nav } => {
                let keys = match nav {
                    Some(n) => self.cached_keys(&BTreeSet::from([n.clone()])),
                    None => self.state.cache.keys().cloned().collect(),
                };
                self.rebuild(keys);
            }
            ScriptAction::Rebind { nav, slots } => {
                let keys: Vec<PageKey> = self
                    .state
                    .cache
                    .keys()
                    .filter(|k| nav.as_ref().is_none_or(|n| *n == k.nav))
                    .cloned()
                    .collect();
                for key in keys {
                    self.rebind(&key, slots)?;
                }
            }
            ScriptAction::TransitionState { individual, state } => {
                self.objects
                    .transition_state(individual.as_str(), state.as_str())?;
            }
        }
        Ok(())
    }

    fn rebind(&mut self, key: &PageKey, names: &[String]) -> Result<()> {
        let template = self.resolve_template(key.nav.as_str())?.clone();
        let Some(page) = self.state.cache.get(key) else {
            return Ok(());
        };
        let mut page = page.clone();
        for bound in page.slots.iter_mut().filter(|b| names.contains(&b.name)) {
            if let Some(slot) = template.slots.iter().find(|s| s.name == bound.name) {
                match self.bind_slot(key.nav.as_str(), slot) {
                    Ok(v) => bound.value = v,
                    Err(_) => {
                        self.state.cache.remove(key);
                        return Ok(());
                    }
                }
            }
        }
        page.built_at_seq = self.state.last_seq;
        self.state.cache.insert(key.clone(), page);
        Ok(())
    }

    // -- refresh ------------------------------------------------------------

    /// Rebuilds `nav` now: every cached view of it, or the public view when
    /// nothing is cached yet.
    pub fn manual_refresh(&mut self, nav: &str) -> Result<Vec<PageKey>> {
        self.nav_entry(nav)?;
        let mut keys = self.cached_keys(&BTreeSet::from([NavPoint::from(nav)]));
        if keys.is_empty() {
            keys.push(PageKey::new(nav, ViewLevel::Public));
        }
        let mut done = Vec::new();
        for (key, result) in self.rebuild(keys) {
            result?;
            done.push(key);
        }
        Ok(done)
    }

    pub fn schedule_refresh(&mut self, nav: &str, interval: Duration) -> Result<()> {
        self.nav_entry(nav)?;
        let interval_ms = interval.as_millis() as u64;
        if interval_ms == 0 {
            return Err(Error::Invalid {
                section: "schedules",
                id: nav.to_owned(),
                reason: "refresh interval must be positive".into(),
            });
        }
        self.state.schedules.insert(
            nav.into(),
            Schedule {
                interval_ms,
                next_due_ms: self.state.clock_ms + interval_ms,
                fired: 0,
            },
        );
        Ok(())
    }

    /// Advances the simulated clock, firing due refreshes in time order.
    /// Returns the navigation points refreshed, one entry per firing.
    pub fn advance_clock(&mut self, by: Duration) -> Vec<NavPoint> {
        let until = self.state.clock_ms + by.as_millis() as u64;
        let mut fired = Vec::new();
        loop {
            let due = self
                .state
                .schedules
                .iter()
                .filter(|(_, s)| s.next_due_ms <= until)
                .min_by_key(|(nav, s)| (s.next_due_ms, (*nav).clone()))
                .map(|(nav, s)| (nav.clone(), s.next_due_ms));
            let Some((nav, at)) = due else { break };
            self.state.clock_ms = at;
            if let Some(s) = self.state.schedules.get_mut(&nav) {
                s.next_due_ms += s.interval_ms;
                s.fired += 1;
            }
            let _ = self.manual_refresh(nav.as_str());
            fired.push(nav);
        }
        self.state.clock_ms = until;
        fired
    }

    // -- statistics ---------------------------------------------------------

    pub fn record_view(&mut self, nav: &str, session: &str) -> Result<()> {
        self.nav_entry(nav)?;
        let role = self.access.open(session)?.role.clone();
        self.state.stats.record(nav.into(), role);
        Ok(())
    }

    pub fn stats_report(&self) -> StatsReport {
        self.state.stats.report()
    }

    /// Serves a page the way the HTTP endpoint does: cached page plus a
    /// recorded view.
    pub fn view_page(&mut self, nav: &str, session: &str) -> Result<Page> {
        let page = self.page(nav, session)?;
        self.record_view(nav, session)?;
        Ok(page)
    }

    // -- sessions and profiles ---------------------------------------------

    pub fn open_session(&mut self, user: &str) -> Result<Session> {
        self.access.open_session(user).cloned()
    }

    pub fn end_session(&mut self, session: &str) -> bool {
        self.access.end_session(session)
    }

    pub fn check_access(
        &self,
        session: &str,
        target: &AccessTarget,
        mode: AccessMode,
    ) -> Result<bool> {
        self.access.check_access(session, target, mode)
    }

    pub fn evaluate_profile(
        &self,
        functional: &str,
        chain: &[BTreeSet<Point>],
    ) -> Result<Vec<UserId>> {
        self.access
            .evaluate_profile_with(self.exec, functional, chain, self.values.points())
    }

    pub fn evaluate_value(&self, id: &str, chain: &[BTreeSet<Point>]) -> Result<Evaluand> {
        self.values.evaluate(id, chain)
    }

    pub fn transition_state(&mut self, individual: &str, state: &str) -> Result<()> {
        self.objects.transition_state(individual, state).map(|_| ())
    }

    // -- administration -----------------------------------------------------

    /// Checks that a template conforms to its type and that every binding
    /// resolves.
    pub fn validate_template(&self, template: &Template) -> Result<()> {
        let ty = self
            .template_type(template.ty.as_str())
            .map_err(|e| e.in_section("templates", &template.id))?;
        template.check_signature(ty)?;
        let dangling = |id: &str| Error::DanglingReference {
            section: "templates",
            id: id.to_owned(),
            owner: template.id.to_string(),
        };
        for slot in &template.slots {
            for source in slot.binding.sources() {
                if !self.sources.contains(source.as_str()) {
                    return Err(dangling(source.as_str()));
                }
            }
            let kind_is = |source: &SourceId, kind: SourceKind| {
                self.sources
                    .descriptor(source.as_str())
                    .map(|d| d.kind == kind)
                    .unwrap_or(false)
            };
            let wrong_kind = |what: &str| Error::Invalid {
                section: "templates",
                id: template.id.to_string(),
                reason: format!("slot `{}` needs a {what} source", slot.name),
            };
            match &slot.binding {
                BindingSpec::MediaRef { source, .. } if !kind_is(source, SourceKind::Media) => {
                    return Err(wrong_kind("media"))
                }
                BindingSpec::ContentRef { source, .. } if !kind_is(source, SourceKind::Content) => {
                    return Err(wrong_kind("content"))
                }
                BindingSpec::FrameQuery(p) => {
                    if let Some(r) = &p.relation {
                        if !self.frames.relations().any(|x| x == r) {
                            return Err(dangling(r.as_str()));
                        }
                    }
                    for c in [&p.subject, &p.object].into_iter().flatten() {
                        self.frames
                            .constant(c.as_str())
                            .map_err(|_| dangling(c.as_str()))?;
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Creates or replaces a template and rebuilds cached pages that use it.
    pub fn put_template(&mut self, template: Template) -> Result<Vec<NavPoint>> {
        self.validate_template(&template)?;
        if let Some(entry) = self
            .site
            .navigation
            .values()
            .find(|e| e.template == template.id)
        {
            if entry.template_type != template.ty {
                return Err(Error::Invalid {
                    section: "templates",
                    id: template.id.to_string(),
                    reason: format!(
                        "navigation `{}` expects type `{}`",
                        entry.point, entry.template_type
                    ),
                });
            }
        }
        let navs: BTreeSet<NavPoint> = self
            .site
            .navigation
            .values()
            .filter(|e| e.template == template.id)
            .map(|e| e.point.clone())
            .collect();
        self.site.templates.insert(template.id.clone(), template);
        Ok(self.rebuild_navs(&navs))
    }

    pub fn template_as(&self, session: &str, id: &str) -> Result<&Template> {
        self.access
            .require(session, &AccessTarget::Templates, AccessMode::Read)?;
        self.template(id)
    }

    pub fn put_template_as(&mut self, session: &str, template: Template) -> Result<Vec<NavPoint>> {
        self.access
            .require(session, &AccessTarget::Templates, AccessMode::Write)?;
        self.put_template(template)
    }

    /// An object of the metadata tower. Level 0 yields the individual as a
    /// data object; higher levels yield the character and its extension.
    pub fn meta_object(&self, level: u32, id: &str) -> Result<MetaView> {
        match self
            .tower
            .object(&self.objects, &ObjectRef::new(level, id))?
        {
            MetaObject::Data(ind) => Ok(MetaView::DataObject {
                level: 0,
                id: ind.id.to_string(),
                ty: ind.ty.to_string(),
                state: ind.state.to_string(),
                attrs: ind.attrs.clone(),
            }),
            MetaObject::Meta(c) => Ok(MetaView::Character {
                level: c.level,
                id: c.id.to_string(),
                base: c.base.clone(),
                formula: c.formula.to_string(),
                extension: self.tower.comprehend_level(
                    self.exec,
                    &self.objects,
                    &c.base,
                    &c.formula,
                )?,
            }),
        }
    }

    pub fn meta_object_as(&self, session: &str, level: u32, id: &str) -> Result<MetaView> {
        self.access
            .require(session, &AccessTarget::Meta(level), AccessMode::Read)?;
        self.meta_object(level, id)
    }

    pub fn session(&self, id: &str) -> Result<&Session> {
        self.access.session(id)
    }

    pub fn sessions(&self) -> impl Iterator<Item = &Session> {
        self.access.sessions()
    }

    pub fn session_ids(&self) -> Vec<SessionId> {
        self.access.sessions().map(|s| s.id.clone()).collect()
    }
}
