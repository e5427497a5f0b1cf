//! Acceptance criteria for the portal engine and its gateway.
//!
//! Runs without the libtest harness so each criterion prints exactly one
//! `PASS`/`FAIL` line under `cargo test`. The process fails if any
//! criterion fails or overruns its time budget.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use http_body_util::BodyExt;
use indexmap::IndexSet;
use portal_core::bundle::{load_bundle, PortalBundle};
use portal_core::calculus::{
    comprehend_with, eval_pair, CarrierRef, Evaluand, Mapping, MetaObject, ObjectRef,
};
use portal_core::engine::{render_structured, Page, SlotKind, SlotValue};
use portal_core::ids::{Point, UserId};
use portal_core::profiles::{AccessControl, AccessMode, AccessTarget, ProfileFunctional, Role};
use portal_core::semnet::Frame;
use portal_core::sources::Change;
use portal_core::{Error, Executor, Portal, Predicate, Value};
use rand::seq::IndexedRandom;
use rand::Rng;
use tower::ServiceExt;

use portal_testkit::*;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn pts(names: &[&str]) -> BTreeSet<Point> {
    names.iter().map(|n| Point::from(*n)).collect()
}

// ---------------------------------------------------------------------------

fn currying_coherence() -> Outcome {
    let mut rng = rng(1001);
    let mut pairs = 0usize;
    let mut mappings = 0usize;
    while mappings < 1000 {
        let n = rng.random_range(2..=128);
        let store = random_store(&mut rng, n, 2);
        let empty = |d: &str| {
            store
                .domain(d)
                .map(|d| d.members.is_empty())
                .unwrap_or(true)
        };
        if empty("D0") || empty("D1") {
            continue;
        }
        let graph = random_graph(&mut rng, &store, "D0", "D1");
        let f = Mapping::new(&store, "D0", "D1", graph.clone()).map_err(|e| e.to_string())?;
        for (x, y) in &graph {
            let got = eval_pair(&f, x.as_str()).map_err(|e| e.to_string())?;
            ensure(got == y, || {
                format!("eval_pair({x}) = {got}, graph says {y}")
            })?;
            pairs += 1;
        }
        mappings += 1;
    }
    Ok(format!("{mappings} mappings, {pairs} pairs"))
}

fn saturation_and_constants() -> Outcome {
    let p = load_bundle(seed_bundle()).map_err(|e| e.to_string())?;
    let v = p.values();
    let all: Vec<String> = v.points().iter().map(|x| x.to_string()).collect();
    let z = v
        .evaluate("z", &[pts(&["higraph"])])
        .map_err(|e| e.to_string())?;
    ensure(z == Evaluand::from("z_higraph"), || {
        format!("z(higraph) = {z}")
    })?;
    for point in &all {
        let again = v
            .evaluate("z", &[pts(&["higraph"]), pts(&[point])])
            .map_err(|e| e.to_string())?;
        ensure(again == z, || format!("z(higraph)({point}) = {again}"))?;
        let q = v
            .evaluate("q", &[pts(&[point])])
            .map_err(|e| e.to_string())?;
        ensure(q == Evaluand::from("q_i"), || format!("q({point}) = {q}"))?;
    }
    let r = v
        .evaluate("r", &[pts(&["higraph"])])
        .map_err(|e| e.to_string())?;
    ensure(r == Evaluand::from("r_higraph"), || {
        format!("r(higraph) = {r}")
    })?;
    Ok(format!("{} points checked", all.len()))
}

fn comprehension_extensionality() -> Outcome {
    let mut rng = rng(1002);
    let store = random_store(&mut rng, 10_000, 1);
    let mut hits = 0;
    for _ in 0..100 {
        let pred = random_pred(&mut rng, 3);
        let sort =
            comprehend_with(Executor::default(), &store, "D0", &pred).map_err(|e| e.to_string())?;
        let brute: Vec<&str> = store
            .individuals()
            .filter(|x| oracle_eval(&pred, &individual_lookup(x)))
            .map(|x| x.id.as_str())
            .collect();
        let got: Vec<&str> = sort.members.iter().map(|m| m.as_str()).collect();
        ensure(got == brute, || {
            format!("{pred}: {} vs {} members", got.len(), brute.len())
        })?;
        hits += got.len();
    }
    Ok(format!(
        "100 predicates over 10000 individuals, {hits} memberships"
    ))
}

fn identification_law() -> Outcome {
    let mut rng = rng(1003);
    let (mut ok, mut none, mut many) = (0, 0, 0);
    for _ in 0..10 {
        let n = rng.random_range(1..=256);
        let store = random_store(&mut rng, n, 1);
        let ids: Vec<String> = store.individuals().map(|x| x.id.to_string()).collect();
        for k in 0..100 {
            // A third of the predicates pin an id so unique witnesses are common.
            let pred = match k % 3 {
                0 => Predicate::eq("id", Value::text(ids.choose(&mut rng).unwrap().as_str()))
                    .and(random_pred(&mut rng, 1)),
                _ => random_pred(&mut rng, 2),
            };
            let matches: Vec<&str> = store
                .individuals()
                .filter(|x| oracle_eval(&pred, &individual_lookup(x)))
                .map(|x| x.id.as_str())
                .collect();
            match store.identify("D0", &pred) {
                Ok(x) => {
                    ensure(matches == [x.id.as_str()], || {
                        format!("{pred}: identified {} of {matches:?}", x.id)
                    })?;
                    ok += 1;
                }
                Err(Error::NoWitness) => {
                    ensure(matches.is_empty(), || {
                        format!("{pred}: NoWitness with {} matches", matches.len())
                    })?;
                    none += 1;
                }
                Err(Error::AmbiguousIdentity { count }) => {
                    ensure(count == matches.len() && count >= 2, || {
                        format!("{pred}: {count} vs {}", matches.len())
                    })?;
                    many += 1;
                }
                Err(e) => return Err(e.to_string()),
            }
        }
    }
    Ok(format!("unique {ok}, none {none}, ambiguous {many}"))
}

fn tower_soundness() -> Outcome {
    let mut rng = rng(1004);
    let dir = std::path::Path::new(".");
    let mut checks = 0;
    for _ in 0..100 {
        let formulas: Vec<Predicate> = (0..5).map(|_| random_pred(&mut rng, 3)).collect();
        let n = rng.random_range(1..=128);
        let doc = random_bundle_json(&mut rng, n, 3, &formulas);
        let p = PortalBundle::from_json(&doc)
            .and_then(|b| b.build(dir))
            .map_err(|e| e.to_string())?;
        for (k, phi) in formulas.iter().enumerate() {
            let z = format!("phi{k}");
            for x in p.objects().individuals() {
                let direct = oracle_eval(phi, &individual_lookup(x));
                let classified = p
                    .tower()
                    .classify(p.objects(), &z, &ObjectRef::new(0, x.id.as_str()))
                    .map_err(|e| e.to_string())?;
                ensure(classified == direct, || format!("{z} = {phi} at {}", x.id))?;
                checks += 1;
            }
        }
    }

    // The same property suite, first on level 0 and then on level 1.
    let formulas: Vec<Predicate> = (0..40).map(|_| random_pred(&mut rng, 2)).collect();
    let doc = random_bundle_json(&mut rng, 120, 2, &formulas);
    let p = PortalBundle::from_json(&doc)
        .and_then(|b| b.build(dir))
        .map_err(|e| e.to_string())?;
    let level0: Vec<_> = p.objects().individuals().collect();
    let level1: Vec<MetaObject> = p
        .tower()
        .carrier(p.objects(), &CarrierRef::level(1))
        .map_err(|e| e.to_string())?;
    ensure(level1.len() == 40, || {
        format!("level 1 has {} objects", level1.len())
    })?;
    for &exec in Executor::all() {
        carrier_suite(
            &mut rng,
            exec,
            &level0,
            &["a", "b", "c", "colour", "state"],
            |x| x.id.to_string(),
            40,
        )?;
        carrier_suite(
            &mut rng,
            exec,
            &level1,
            &["id", "level", "base", "formula"],
            |x| x.id().to_owned(),
            40,
        )?;
    }
    Ok(format!(
        "100 bundles, {checks} classifications; suite passed on levels 0 and 1"
    ))
}

fn frame_store_oracle() -> Outcome {
    let constants = 40;
    let mut rng = rng(1005);
    let mut store = frame_universe(constants);
    let mut oracle: BTreeSet<Frame> = BTreeSet::new();
    let mut max = 0;
    for _ in 0..1000 {
        let f = random_frame(&mut rng, constants);
        if rng.random_bool(0.65) || oracle.is_empty() {
            let fresh = store.assert_frame(f.clone()).map_err(|e| e.to_string())?;
            ensure(fresh == oracle.insert(f), || "assert disagrees".into())?;
        } else {
            let target = oracle
                .iter()
                .nth(rng.random_range(0..oracle.len()))
                .unwrap()
                .clone();
            ensure(
                store.retract_frame(&target) && oracle.remove(&target),
                || "retract disagrees".into(),
            )?;
        }
        max = max.max(oracle.len());
        let pattern = random_pattern(&mut rng, constants);
        let got = store.query_frames(&pattern).map_err(|e| e.to_string())?;
        ensure(got == scan_frames(&oracle, &pattern), || {
            format!("{pattern:?}")
        })?;
    }
    ensure(
        store.frames().cloned().collect::<BTreeSet<_>>() == oracle,
        || "final store differs".into(),
    )?;
    Ok(format!("1000 operations, 1000 queries, peak {max} frames"))
}

fn profile_narrowing() -> Outcome {
    let mut rng = rng(1006);
    let mut ac = AccessControl::new();
    ac.add_role(Role {
        id: "ordinary".into(),
        rank: 0,
        read: BTreeSet::new(),
        write: BTreeSet::new(),
        meta_level: None,
    })
    .map_err(|e| e.to_string())?;
    let users: Vec<_> = (0..512)
        .map(|i| random_user(&mut rng, i, &["ordinary"]))
        .collect();
    for u in &users {
        ac.add_user(u.clone()).map_err(|e| e.to_string())?;
    }
    ac.add_functional(ProfileFunctional {
        id: "Everyone".into(),
        base: None,
    })
    .map_err(|e| e.to_string())?;
    let vocab: IndexSet<Point> = profile_vocabulary().into_iter().map(Point::from).collect();
    for _ in 0..300 {
        let chain = random_chain(&mut rng, 4);
        let steps = brute_profile(&users, &chain);
        for k in 0..=chain.len() {
            let got = ac
                .evaluate_profile("Everyone", &chain[..k], &vocab)
                .map_err(|e| e.to_string())?;
            ensure(got == steps[k], || format!("chain prefix {k} of {chain:?}"))?;
            if k > 0 {
                let prev: BTreeSet<&UserId> = steps[k - 1].iter().collect();
                ensure(got.iter().all(|u| prev.contains(u)), || {
                    "result grew along the chain".into()
                })?;
            }
        }
    }
    Ok("512 users, 300 chains up to length 4".into())
}

fn shareholder_oracle(p: &Portal) -> Vec<Vec<Option<Value>>> {
    let hr = p
        .sources()
        .fetch_records("hr", &Predicate::TRUE)
        .unwrap_or_default();
    let fin = p
        .sources()
        .fetch_records("fin", &Predicate::TRUE)
        .unwrap_or_default();
    nested_loop_join(&hr, &fin, "emp_id", "fin")
        .into_iter()
        .map(|row| {
            ["name", "shares"]
                .iter()
                .map(|c| row.get(*c).cloned())
                .collect()
        })
        .collect()
}

fn press_room_end_to_end() -> Outcome {
    let mut p = load_bundle(seed_bundle()).map_err(|e| e.to_string())?;
    let s = p.open_session("u3").map_err(|e| e.to_string())?;
    ensure(
        p.access()
            .user("u3")
            .map(|u| u.status.as_str() == "corporate")
            .unwrap_or(false),
        || "u3 is not corporate".into(),
    )?;
    let page = p
        .bind_slots("press-room", s.id.as_str())
        .map_err(|e| e.to_string())?;
    let kinds: BTreeSet<SlotKind> = page.slots.iter().map(|s| s.kind).collect();
    for k in [
        SlotKind::Title,
        SlotKind::FormattedText,
        SlotKind::StaticImage,
        SlotKind::Grid,
        SlotKind::UrlMeta,
    ] {
        ensure(kinds.contains(&k), || format!("no {} slot", k.as_str()))?;
    }
    let grid = page
        .slots
        .iter()
        .find_map(|s| match &s.value {
            SlotValue::Grid(g) if s.name == "shareholders" => Some(g),
            _ => None,
        })
        .ok_or("no shareholders grid")?;
    ensure(grid.rows == shareholder_oracle(&p), || {
        format!("grid {:?}", grid.rows)
    })?;
    let bound: BTreeSet<&str> = page.slots.iter().map(|s| s.name.as_str()).collect();
    let template = p
        .resolve_template("press-room")
        .map_err(|e| e.to_string())?;
    let sources: BTreeSet<String> = template
        .slots
        .iter()
        .filter(|s| bound.contains(s.name.as_str()))
        .flat_map(|s| s.binding.sources())
        .map(|s| s.to_string())
        .collect();
    ensure(sources.len() >= 3, || format!("only {sources:?}"))?;
    Ok(format!(
        "{} slots, {}-row grid, sources {}",
        page.slots.len(),
        grid.rows.len(),
        sources.into_iter().collect::<Vec<_>>().join("+")
    ))
}

fn random_event(rng: &mut impl Rng) -> (&'static str, Value, Change) {
    let source = *["hr", "fin", "media"].choose(rng).unwrap();
    // Media rows are never deleted here: a page whose image is gone cannot
    // be rebuilt, and the comparison needs pages that stay cached.
    let delete = source != "media" && rng.random_bool(0.2);
    let (key, fields) = match source {
        "hr" => (
            Value::Int(rng.random_range(1..6)),
            BTreeMap::from([
                (
                    "name".to_owned(),
                    Value::text(format!("N{}", rng.random_range(0..50))),
                ),
                ("position".to_owned(), Value::text("Clerk")),
            ]),
        ),
        "fin" => (
            Value::Int(rng.random_range(1..6)),
            BTreeMap::from([("shares".to_owned(), Value::Int(rng.random_range(0..10_000)))]),
        ),
        _ => {
            let id = *["president-portrait", "company-logo", "annual-meeting"]
                .choose(rng)
                .unwrap();
            let mut f = BTreeMap::from([(
                "uri".to_owned(),
                Value::text(format!("{id}-{}.bin", rng.random_range(0..9))),
            )]);
            match id {
                "annual-meeting" => {
                    f.insert("category".into(), Value::text("video"));
                }
                "company-logo" => {
                    f.insert("category".into(), Value::text("image"));
                    f.insert("subcategory".into(), Value::text("logo"));
                }
                _ => {
                    f.insert("category".into(), Value::text("image"));
                    f.insert("subcategory".into(), Value::text("photo"));
                }
            }
            (Value::text(id), f)
        }
    };
    let change = if delete {
        Change::Delete
    } else {
        Change::Upsert(fields)
    };
    (source, key, change)
}

fn rebuild_equivalence() -> Outcome {
    let mut p = load_bundle(seed_bundle()).map_err(|e| e.to_string())?;
    let sessions: Vec<String> = ["u2", "u1", "m1", "a1"]
        .iter()
        .map(|u| p.open_session(u).map(|s| s.id.to_string()))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let mut rng = rng(1007);
    let mut rebuilds = 0;
    for _ in 0..1000 {
        if rng.random_bool(0.3) {
            let _ = p.page("press-room", sessions.choose(&mut rng).unwrap());
        }
        let (source, key, change) = random_event(&mut rng);
        rebuilds += p
            .submit_update(source, key, change)
            .map_err(|e| e.to_string())?
            .rebuilt
            .len();
    }
    ensure(p.state().last_seq == 1000, || {
        format!("last_seq {}", p.state().last_seq)
    })?;
    let cached = p.state().cache.len();
    for (key, page) in &p.state().cache {
        let mut fresh: Page = p
            .build_page(key.nav.as_str(), key.view)
            .map_err(|e| e.to_string())?;
        ensure(page.built_at_seq <= fresh.built_at_seq, || {
            format!("{key:?} stamped in the future")
        })?;
        fresh.built_at_seq = page.built_at_seq;
        ensure(page == &fresh, || {
            format!("{key:?} differs from a fresh rebind")
        })?;
        if let Some(SlotValue::Grid(g)) = page
            .slots
            .iter()
            .find(|s| s.name == "shareholders")
            .map(|s| &s.value)
        {
            ensure(g.rows == shareholder_oracle(&p), || {
                "grid differs from nested-loop join".into()
            })?;
        }
    }
    ensure(cached > 0, || "nothing cached".into())?;
    Ok(format!(
        "1000 events, {rebuilds} rebuilds, {cached} cached pages equal fresh rebinds"
    ))
}

fn access_properties() -> Outcome {
    let mut p = load_bundle(seed_bundle()).map_err(|e| e.to_string())?;
    let mut chain: Vec<(u32, BTreeSet<String>)> = Vec::new();
    for user in ["u1", "m1", "a1"] {
        let s = p.open_session(user).map_err(|e| e.to_string())?;
        let rank = p
            .access()
            .role(s.role.as_str())
            .map_err(|e| e.to_string())?
            .rank;
        let page = p
            .bind_slots("press-room", s.id.as_str())
            .map_err(|e| e.to_string())?;
        chain.push((rank, page.slots.iter().map(|s| s.name.clone()).collect()));
    }
    ensure(
        chain
            .windows(2)
            .all(|w| w[0].0 < w[1].0 && w[0].1.is_subset(&w[1].1)),
        || format!("{chain:?}"),
    )?;

    let users: Vec<String> = p.access().users().map(|u| u.id.to_string()).collect();
    let targets = [
        AccessTarget::Source("media".into()),
        AccessTarget::Source("hr".into()),
        AccessTarget::Templates,
        AccessTarget::Meta(0),
    ];
    let mut rng = rng(1008);
    let mut closed_successes = 0;
    let mut probes = 0;
    for _ in 0..100 {
        let user = users.choose(&mut rng).unwrap();
        let id = p.open_session(user).map_err(|e| e.to_string())?.id;
        for _ in 0..rng.random_range(0..3) {
            let t = targets.choose(&mut rng).unwrap();
            p.check_access(id.as_str(), t, AccessMode::Read)
                .map_err(|e| e.to_string())?;
        }
        ensure(p.end_session(id.as_str()), || {
            "end_session on an open session returned false".into()
        })?;
        for t in &targets {
            for mode in [AccessMode::Read, AccessMode::Write] {
                probes += 1;
                if p.check_access(id.as_str(), t, mode).is_ok() {
                    closed_successes += 1;
                }
            }
        }
    }
    ensure(closed_successes == 0, || {
        format!("{closed_successes} successful checks on closed sessions")
    })?;
    Ok(format!(
        "slot counts {:?}; {probes} probes on closed sessions all refused",
        chain.iter().map(|c| c.1.len()).collect::<Vec<_>>()
    ))
}

// -- gateway equivalence ------------------------------------------------------

#[derive(Debug, Clone)]
enum Req {
    Open(String),
    End(String),
    Page(String, Option<String>),
    Event {
        source: String,
        session: String,
        body: String,
    },
    GetTemplate {
        session: String,
    },
    PutTemplate {
        session: String,
        body: String,
    },
    Meta {
        level: u32,
        id: String,
        session: String,
    },
    Stats,
}

impl Req {
    fn http(&self) -> (Method, String, String) {
        let q = |s: &str| format!("?session={s}");
        match self {
            Req::Open(body) => (Method::POST, "/api/sessions".into(), body.clone()),
            Req::End(id) => (Method::DELETE, format!("/api/sessions/{id}"), String::new()),
            Req::Page(nav, s) => (
                Method::GET,
                format!(
                    "/api/pages/{nav}{}",
                    s.as_deref().map(q).unwrap_or_default()
                ),
                String::new(),
            ),
            Req::Event {
                source,
                session,
                body,
            } => (
                Method::POST,
                format!("/api/sources/{source}/events{}", q(session)),
                body.clone(),
            ),
            Req::GetTemplate { session } => (
                Method::GET,
                format!("/api/admin/templates/press-release-annual{}", q(session)),
                String::new(),
            ),
            Req::PutTemplate { session, body } => (
                Method::PUT,
                format!("/api/admin/templates/press-release-annual{}", q(session)),
                body.clone(),
            ),
            Req::Meta { level, id, session } => (
                Method::GET,
                format!("/api/meta/{level}/{id}{}", q(session)),
                String::new(),
            ),
            Req::Stats => (Method::GET, "/api/stats".into(), String::new()),
        }
    }
}

/// Expected status per error code, written out independently of the
/// gateway's own table.
fn expected_status(e: &Error) -> StatusCode {
    match e.code() {
        "SessionClosed" => StatusCode::UNAUTHORIZED,
        "UnknownRef" if e.to_string().starts_with("unknown session") => StatusCode::UNAUTHORIZED,
        "AccessDenied" => StatusCode::FORBIDDEN,
        "UnknownRef" | "UnknownNavigationPoint" | "UnknownName" | "UnknownEvent" => {
            StatusCode::NOT_FOUND
        }
        "OutOfOrderEvent" | "DuplicateId" | "UnboundSlot" => StatusCode::CONFLICT,
        _ => StatusCode::BAD_REQUEST,
    }
}

enum Body2 {
    Exact(String),
    Json(serde_json::Value),
}

fn error_body(e: &Error) -> (StatusCode, Body2) {
    (
        expected_status(e),
        Body2::Json(serde_json::json!({"error": e.code(), "message": e.to_string()})),
    )
}

/// The same request answered by plain library calls.
fn direct(p: &mut Portal, req: &Req) -> (StatusCode, Body2) {
    let exact = |s: String| (StatusCode::OK, Body2::Exact(s));
    let missing_session = || Error::UnknownRef {
        kind: "session",
        id: String::new(),
    };
    match req {
        Req::Open(body) => {
            let user = serde_json::from_str::<serde_json::Value>(body)
                .ok()
                .and_then(|v| v.get("user").and_then(|u| u.as_str()).map(str::to_owned));
            let Some(user) = user else {
                return (
                    StatusCode::BAD_REQUEST,
                    Body2::Json(serde_json::Value::Null),
                );
            };
            match p.open_session(&user) {
                Ok(s) => (
                    StatusCode::OK,
                    Body2::Json(
                        serde_json::json!({"session": s.id.as_str(), "role": s.role.as_str()}),
                    ),
                ),
                Err(e) => error_body(&e),
            }
        }
        Req::End(id) => match p.session(id) {
            Ok(_) => {
                let closed = p.end_session(id);
                (
                    StatusCode::OK,
                    Body2::Json(serde_json::json!({"session": id, "closed": closed})),
                )
            }
            Err(e) => error_body(&e),
        },
        Req::Page(nav, session) => match session
            .as_deref()
            .ok_or_else(missing_session)
            .and_then(|s| p.view_page(nav, s))
        {
            Ok(page) => exact(render_structured(&page)),
            Err(e) => error_body(&e),
        },
        Req::Event {
            source,
            session,
            body,
        } => {
            let ev: serde_json::Value = serde_json::from_str(body).unwrap();
            let key: Value = serde_json::from_value(ev["key"].clone()).unwrap();
            let change: Change = serde_json::from_value(ev["change"].clone()).unwrap();
            match p.submit_update_as(session, source, key, change) {
                Ok(out) => exact(serde_json::to_string(&out).unwrap()),
                Err(e) => error_body(&e),
            }
        }
        Req::GetTemplate { session } => match p.template_as(session, "press-release-annual") {
            Ok(t) => exact(serde_json::to_string(t).unwrap()),
            Err(e) => error_body(&e),
        },
        Req::PutTemplate { session, body } => {
            let t = serde_json::from_str(body).unwrap();
            match p.put_template_as(session, t) {
                Ok(navs) => {
                    let navs: Vec<&str> = navs.iter().map(|n| n.as_str()).collect();
                    (
                        StatusCode::OK,
                        Body2::Json(serde_json::json!({ "rebuilt": navs })),
                    )
                }
                Err(e) => error_body(&e),
            }
        }
        Req::Meta { level, id, session } => match p.meta_object_as(session, *level, id) {
            Ok(m) => exact(serde_json::to_string(&m).unwrap()),
            Err(e) => error_body(&e),
        },
        Req::Stats => exact(serde_json::to_string(&p.stats_report()).unwrap()),
    }
}

fn script(rng: &mut impl Rng, template_json: &str) -> Vec<Req> {
    let open = |u: &str| Req::Open(format!("{{\"user\":\"{u}\"}}"));
    // s1 = u3 (corporate), s2 = u2 (unregistered), s3 = m1, s4 = a1, s5 = u1.
    let mut reqs = vec![
        open("u3"),
        open("u2"),
        open("m1"),
        open("a1"),
        open("u1"),
        open("ghost"),
        Req::Open("{\"name\": 1}".into()),
        Req::Page("press-room".into(), Some("s1".into())),
        Req::Page("press-room".into(), Some("s2".into())),
        Req::Page("press-room".into(), None),
        Req::Page("lobby".into(), Some("s1".into())),
        Req::GetTemplate {
            session: "s3".into(),
        },
        Req::GetTemplate {
            session: "s5".into(),
        },
        Req::Meta {
            level: 2,
            id: "DocumentSchemas".into(),
            session: "s4".into(),
        },
        Req::Meta {
            level: 1,
            id: "ShareholderSchema".into(),
            session: "s3".into(),
        },
        Req::Meta {
            level: 0,
            id: "ivanov".into(),
            session: "s3".into(),
        },
        Req::PutTemplate {
            session: "s3".into(),
            body: template_json.replacen("hasTitle", "hasHeader", 1),
        },
        Req::PutTemplate {
            session: "s5".into(),
            body: template_json.to_owned(),
        },
    ];
    let sessions = ["s1", "s2", "s3", "s4", "s5"];
    while reqs.len() < 45 {
        let s = (*sessions.choose(rng).unwrap()).to_owned();
        match rng.random_range(0..4) {
            0 | 1 => reqs.push(Req::Page("press-room".into(), Some(s))),
            2 => {
                let (source, key, change) = random_event(rng);
                let writer = match source {
                    "media" => "s3",
                    _ if rng.random_bool(0.8) => "s4",
                    _ => s.as_str(),
                };
                let body = serde_json::json!({ "key": key, "change": change }).to_string();
                reqs.push(Req::Event {
                    source: source.into(),
                    session: writer.into(),
                    body,
                });
            }
            _ => reqs.push(Req::Stats),
        }
    }
    reqs.push(Req::End("s5".into()));
    reqs.push(Req::End("s5".into()));
    reqs.push(Req::Page("press-room".into(), Some("s5".into())));
    reqs.push(Req::End("s99".into()));
    reqs.push(Req::Stats);
    reqs
}

fn gateway_equivalence() -> Outcome {
    let runtime = tokio::runtime::Builder::new_current_thread()
        .enable_all()
        .build()
        .map_err(|e| e.to_string())?;
    let served = portal_gateway::share(load_bundle(seed_bundle()).map_err(|e| e.to_string())?);
    let mut reference = load_bundle(seed_bundle()).map_err(|e| e.to_string())?;
    let app = portal_gateway::router(served);
    let template_json = serde_json::to_string(
        reference
            .template("press-release-annual")
            .map_err(|e| e.to_string())?,
    )
    .unwrap();
    let reqs = script(&mut rng(1009), &template_json);
    ensure(reqs.len() == 50, || {
        format!("script has {} requests", reqs.len())
    })?;

    let mut recording = Vec::new();
    let mut exact = 0;
    let mut statuses: BTreeMap<u16, usize> = BTreeMap::new();
    for (i, req) in reqs.iter().enumerate() {
        let (method, uri, body) = req.http();
        let request = Request::builder()
            .method(method.clone())
            .uri(&uri)
            .header("content-type", "application/json")
            .body(Body::from(body.clone()))
            .map_err(|e| e.to_string())?;
        let (status, got) = runtime.block_on(async {
            let resp = app
                .clone()
                .oneshot(request)
                .await
                .expect("router is infallible");
            let status = resp.status();
            let bytes = resp.into_body().collect().await.expect("body").to_bytes();
            (
                status,
                String::from_utf8(bytes.to_vec()).expect("utf-8 body"),
            )
        });
        let (want_status, want) = direct(&mut reference, req);
        ensure(status == want_status, || {
            format!("#{i} {method} {uri}: status {status}, expected {want_status}: {got}")
        })?;
        match want {
            Body2::Exact(w) => {
                ensure(got == w, || {
                    format!("#{i} {method} {uri}: body differs\n  http:   {got}\n  direct: {w}")
                })?;
                exact += 1;
            }
            Body2::Json(serde_json::Value::Null) => {
                let v: serde_json::Value = serde_json::from_str(&got).map_err(|e| e.to_string())?;
                ensure(v["error"] == "ParseError", || format!("#{i}: {got}"))?;
            }
            Body2::Json(w) => {
                let v: serde_json::Value =
                    serde_json::from_str(&got).map_err(|e| format!("#{i}: {e}"))?;
                ensure(v == w, || format!("#{i} {method} {uri}: {v} != {w}"))?;
            }
        }
        *statuses.entry(status.as_u16()).or_default() += 1;
        recording.push(serde_json::json!({
            "method": method.as_str(), "uri": uri, "request": body,
            "status": status.as_u16(), "response": got,
        }));
    }
    let out = std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join("gateway_recording.json");
    std::fs::write(&out, serde_json::to_string_pretty(&recording).unwrap())
        .map_err(|e| e.to_string())?;
    Ok(format!(
        "{} requests ({exact} compared byte-for-byte), statuses {statuses:?}",
        reqs.len()
    ))
}

// ---------------------------------------------------------------------------

struct Criterion {
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

fn main() {
    let criteria = [
        Criterion {
            name: "currying coherence",
            budget: Duration::from_secs(1),
            run: currying_coherence,
        },
        Criterion {
            name: "saturation & constant invariance",
            budget: Duration::from_secs(1),
            run: saturation_and_constants,
        },
        Criterion {
            name: "comprehension extensionality",
            budget: Duration::from_secs(2),
            run: comprehension_extensionality,
        },
        Criterion {
            name: "identification law",
            budget: Duration::from_secs(1),
            run: identification_law,
        },
        Criterion {
            name: "metadata tower soundness",
            budget: Duration::from_secs(5),
            run: tower_soundness,
        },
        Criterion {
            name: "frame store oracle",
            budget: Duration::from_secs(2),
            run: frame_store_oracle,
        },
        Criterion {
            name: "profile narrowing",
            budget: Duration::from_secs(2),
            run: profile_narrowing,
        },
        Criterion {
            name: "press room end-to-end",
            budget: Duration::from_secs(1),
            run: press_room_end_to_end,
        },
        Criterion {
            name: "rebuild equivalence",
            budget: Duration::from_secs(10),
            run: rebuild_equivalence,
        },
        Criterion {
            name: "access properties",
            budget: Duration::from_secs(1),
            run: access_properties,
        },
        Criterion {
            name: "gateway equivalence",
            budget: Duration::from_secs(5),
            run: gateway_equivalence,
        },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(c.run).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let timing = format!("{:.3}s of {}s", elapsed.as_secs_f64(), c.budget.as_secs());
        match outcome {
            Ok(detail) if elapsed <= c.budget => {
                println!("PASS  {:<34} {timing}  {detail}", c.name)
            }
            Ok(detail) => {
                failed += 1;
                println!("FAIL  {:<34} {timing}  over budget; {detail}", c.name);
            }
            Err(why) => {
                failed += 1;
                println!("FAIL  {:<34} {timing}  {why}", c.name);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
