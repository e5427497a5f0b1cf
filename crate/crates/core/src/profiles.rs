//! Profile functionals, the role hierarchy and session-scoped grants.
//!
//! A functional `F` names a base class of users. Applying an assignment set
//! keeps the users that match every point in it, where a user matches a
//! point if it is one of their settings or browser settings, or equals
//! their status or device. Chains apply left to right, so
//! `F(s)(p)` narrows from user groups down to individuals.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use indexmap::{IndexMap, IndexSet};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::ids::{FunctionalId, Point, RoleId, SessionId, SourceId, UserId};

pub const STATUSES: [&str; 3] = ["registered", "unregistered", "corporate"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserRecord {
    pub id: UserId,
    /// Personal settings (`s`).
    #[serde(default)]
    pub settings: BTreeSet<Point>,
    /// Registration status (`p`).
    pub status: Point,
    /// Data access device (`e`).
    pub device: Point,
    /// Browser settings (`v`).
    #[serde(default)]
    pub browser: BTreeSet<Point>,
    pub role: RoleId,
}

impl UserRecord {
    pub fn matches_point(&self, p: &Point) -> bool {
        self.settings.contains(p)
            || self.browser.contains(p)
            || self.status == *p
            || self.device == *p
    }

    pub fn matches_all(&self, assignment: &BTreeSet<Point>) -> bool {
        assignment.iter().all(|p| self.matches_point(p))
    }

    pub fn is_registered(&self) -> bool {
        self.status.as_str() != "unregistered"
    }

    /// Every point this user carries.
    pub fn points(&self) -> impl Iterator<Item = &Point> {
        self.settings
            .iter()
            .chain(&self.browser)
            .chain([&self.status, &self.device])
    }
}

/// A class of users, e.g. `Everyone`. An absent base means all users.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileFunctional {
    pub id: FunctionalId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<Vec<UserId>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AccessMode {
    Read,
    Write,
}

impl FromStr for AccessMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "read" => Ok(AccessMode::Read),
            "write" => Ok(AccessMode::Write),
            other => Err(Error::Parse(format!("unknown access mode `{other}`"))),
        }
    }
}

/// Something a grant can cover. Text form: a source id, `templates`, or
/// `meta:<level>`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AccessTarget {
    Source(SourceId),
    Templates,
    Meta(u32),
}

impl fmt::Display for AccessTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AccessTarget::Source(s) => write!(f, "{s}"),
            AccessTarget::Templates => f.write_str("templates"),
            AccessTarget::Meta(l) => write!(f, "meta:{l}"),
        }
    }
}

impl FromStr for AccessTarget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "templates" {
            return Ok(AccessTarget::Templates);
        }
        if let Some(level) = s.strip_prefix("meta:") {
            return level
                .parse()
                .map(AccessTarget::Meta)
                .map_err(|_| Error::Parse(format!("bad metadata level in `{s}`")));
        }
        if s.is_empty() {
            return Err(Error::Parse("empty access target".into()));
        }
        Ok(AccessTarget::Source(s.into()))
    }
}

impl Serialize for AccessTarget {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for AccessTarget {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

/// A rung of the role hierarchy (ordinary = 0, manager = 1,
/// administrator = 2 in the reference bundle).
///
/// `read` lists readable targets and `meta_level` caps readable metadata
/// levels; both must grow with rank. `write` is scoped per role and need
/// not nest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Role {
    pub id: RoleId,
    pub rank: u32,
    #[serde(default)]
    pub read: BTreeSet<AccessTarget>,
    #[serde(default)]
    pub write: BTreeSet<AccessTarget>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta_level: Option<u32>,
}

/// How much of a page a viewer may see: anonymous visitors see `Public`
/// slots only; registered viewers see slots up to their role rank.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ViewLevel {
    Public,
    Rank(u32),
}

impl fmt::Display for ViewLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ViewLevel::Public => f.write_str("public"),
            ViewLevel::Rank(r) => write!(f, "{r}"),
        }
    }
}

impl Serialize for ViewLevel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ViewLevel::Public => s.serialize_str("public"),
            ViewLevel::Rank(r) => s.serialize_u32(*r),
        }
    }
}

impl<'de> Deserialize<'de> for ViewLevel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Rank(u32),
            Word(String),
        }
        match Raw::deserialize(d)? {
            Raw::Rank(r) => Ok(ViewLevel::Rank(r)),
            Raw::Word(w) if w == "public" => Ok(ViewLevel::Public),
            Raw::Word(w) => Err(serde::de::Error::custom(format!(
                "expected `public` or a role rank, got `{w}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Session {
    pub id: SessionId,
    pub user: UserId,
    pub role: RoleId,
    pub view: ViewLevel,
    pub grants: BTreeSet<(AccessTarget, AccessMode)>,
    pub open: bool,
}

#[derive(Debug, Clone, Default)]
pub struct AccessControl {
    users: IndexMap<UserId, UserRecord>,
    roles: IndexMap<RoleId, Role>,
    functionals: IndexMap<FunctionalId, ProfileFunctional>,
    sessions: IndexMap<SessionId, Session>,
    /// Targets a grant may refer to: declared sources plus `templates` and
    /// the metadata levels.
    sources: IndexSet<SourceId>,
    next_session: u64,
}

impl AccessControl {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn declare_source(&mut self, id: SourceId) {
        self.sources.insert(id);
    }

    pub fn add_role(&mut self, role: Role) -> Result<()> {
        if self.roles.contains_key(&role.id) {
            return Err(Error::duplicate("role", &role.id));
        }
        if let Some(other) = self.roles.values().find(|r| r.rank == role.rank) {
            return Err(Error::Invalid {
                section: "roles",
                id: role.id.to_string(),
                reason: format!("rank {} already used by `{}`", role.rank, other.id),
            });
        }
        self.roles.insert(role.id.clone(), role);
        Ok(())
    }

    /// Read scopes and metadata caps must be non-decreasing with rank.
    pub fn check_hierarchy(&self) -> Result<()> {
        let mut by_rank: Vec<&Role> = self.roles.values().collect();
        by_rank.sort_by_key(|r| r.rank);
        for pair in by_rank.windows(2) {
            let (lo, hi) = (pair[0], pair[1]);
            if let Some(t) = lo.read.iter().find(|t| !hi.read.contains(*t)) {
                return Err(Error::Invalid {
                    section: "roles",
                    id: hi.id.to_string(),
                    reason: format!("read scope lacks `{t}` granted to lower rank `{}`", lo.id),
                });
            }
            if lo.meta_level > hi.meta_level {
                return Err(Error::Invalid {
                    section: "roles",
                    id: hi.id.to_string(),
                    reason: format!("metadata cap below that of `{}`", lo.id),
                });
            }
        }
        Ok(())
    }

    pub fn add_user(&mut self, user: UserRecord) -> Result<()> {
        if self.users.contains_key(&user.id) {
            return Err(Error::duplicate("user", &user.id));
        }
        if !STATUSES.contains(&user.status.as_str()) {
            return Err(Error::Invalid {
                section: "users",
                id: user.id.to_string(),
                reason: format!("status `{}` is not one of {STATUSES:?}", user.status),
            });
        }
        self.role(user.role.as_str())?;
        self.users.insert(user.id.clone(), user);
        Ok(())
    }

    pub fn add_functional(&mut self, f: ProfileFunctional) -> Result<()> {
        if self.functionals.contains_key(&f.id) {
            return Err(Error::duplicate("functional", &f.id));
        }
        for u in f.base.iter().flatten() {
            self.user(u.as_str())?;
        }
        self.functionals.insert(f.id.clone(), f);
        Ok(())
    }

    pub fn user(&self, id: &str) -> Result<&UserRecord> {
        self.users.get(id).ok_or_else(|| Error::unknown("user", id))
    }

    pub fn role(&self, id: &str) -> Result<&Role> {
        self.roles.get(id).ok_or_else(|| Error::unknown("role", id))
    }

    pub fn functional(&self, id: &str) -> Result<&ProfileFunctional> {
        self.functionals
            .get(id)
            .ok_or_else(|| Error::unknown("functional", id))
    }

    pub fn session(&self, id: &str) -> Result<&Session> {
        self.sessions
            .get(id)
            .ok_or_else(|| Error::unknown("session", id))
    }

    pub fn users(&self) -> impl Iterator<Item = &UserRecord> {
        self.users.values()
    }

    pub fn roles(&self) -> impl Iterator<Item = &Role> {
        self.roles.values()
    }

    pub fn functionals(&self) -> impl Iterator<Item = &ProfileFunctional> {
        self.functionals.values()
    }

    pub fn sessions(&self) -> impl Iterator<Item = &Session> {
        self.sessions.values()
    }

    /// `F(a₁)(a₂)…`: successive restriction of the functional's base.
    /// Points are checked against `vocabulary` before anything is filtered.
    pub fn evaluate_profile(
        &self,
        f: &str,
        chain: &[BTreeSet<Point>],
        vocabulary: &IndexSet<Point>,
    ) -> Result<Vec<UserId>> {
        self.evaluate_profile_with(Executor::default(), f, chain, vocabulary)
    }

    pub fn evaluate_profile_with(
        &self,
        exec: Executor,
        f: &str,
        chain: &[BTreeSet<Point>],
        vocabulary: &IndexSet<Point>,
    ) -> Result<Vec<UserId>> {
        let functional = self.functional(f)?;
        if let Some(p) = chain.iter().flatten().find(|p| !vocabulary.contains(*p)) {
            return Err(Error::UnknownPoint(p.to_string()));
        }
        let mut current: Vec<&UserRecord> = match &functional.base {
            Some(ids) => ids.iter().map(|u| &self.users[u]).collect(),
            None => self.users.values().collect(),
        };
        for assignment in chain {
            current = exec
                .filter(&current, |u| u.matches_all(assignment))
                .into_iter()
                .copied()
                .collect();
        }
        Ok(current.into_iter().map(|u| u.id.clone()).collect())
    }

    /// Grants for a role: its read scope and writable targets restricted to
    /// declared sources (plus templates), and every metadata level up to
    /// its cap.
    pub fn grants_for(&self, role: &Role) -> BTreeSet<(AccessTarget, AccessMode)> {
        let declared = |t: &AccessTarget| match t {
            AccessTarget::Source(s) => self.sources.contains(s),
            AccessTarget::Templates | AccessTarget::Meta(_) => true,
        };
        let reads = role
            .read
            .iter()
            .filter(|t| declared(t))
            .map(|t| (t.clone(), AccessMode::Read));
        let writes = role
            .write
            .iter()
            .filter(|t| declared(t))
            .map(|t| (t.clone(), AccessMode::Write));
        let meta = role
            .meta_level
            .into_iter()
            .flat_map(|cap| 0..=cap)
            .map(|l| (AccessTarget::Meta(l), AccessMode::Read));
        reads.chain(writes).chain(meta).collect()
    }

    pub fn view_level(&self, user: &UserRecord) -> Result<ViewLevel> {
        if !user.is_registered() {
            return Ok(ViewLevel::Public);
        }
        Ok(ViewLevel::Rank(self.role(user.role.as_str())?.rank))
    }

    pub fn open_session(&mut self, user: &str) -> Result<&Session> {
        let user = self.user(user)?;
        let role = self.role(user.role.as_str())?;
        let session = Session {
            id: SessionId::new(format!("s{}", self.next_session + 1)),
            user: user.id.clone(),
            role: role.id.clone(),
            view: self.view_level(user)?,
            grants: self.grants_for(role),
            open: true,
        };
        self.next_session += 1;
        let id = session.id.clone();
        Ok(self.sessions.entry(id).or_insert(session))
    }

    /// Returns whether the session was open. Unknown sessions count as closed.
    pub fn end_session(&mut self, id: &str) -> bool {
        match self.sessions.get_mut(id) {
            Some(s) if s.open => {
                s.open = false;
                true
            }
            _ => false,
        }
    }

    /// An open session, or [`Error::SessionClosed`].
    pub fn open(&self, id: &str) -> Result<&Session> {
        let s = self.session(id)?;
        if s.open {
            Ok(s)
        } else {
            Err(Error::SessionClosed(id.to_owned()))
        }
    }

    pub fn check_access(
        &self,
        session: &str,
        target: &AccessTarget,
        mode: AccessMode,
    ) -> Result<bool> {
        let s = self.open(session)?;
        Ok(s.grants.contains(&(target.clone(), mode)))
    }

    /// Like [`check_access`](Self::check_access) but a denial is an error.
    pub fn require(
        &self,
        session: &str,
        target: &AccessTarget,
        mode: AccessMode,
    ) -> Result<&Session> {
        if self.check_access(session, target, mode)? {
            self.open(session)
        } else {
            Err(Error::AccessDenied(format!(
                "session `{session}` may not {} `{target}`",
                match mode {
                    AccessMode::Read => "read",
                    AccessMode::Write => "write",
                }
            )))
        }
    }
}
