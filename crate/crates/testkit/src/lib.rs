//! Generators for random models and reference implementations used as
//! oracles by the integration and acceptance tests.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use portal_core::calculus::{apply_assignment, comprehend_items, Evaluand, GeneralizedValue};
use portal_core::ids::{IndividualId, Point, UserId};
use portal_core::object_model::{Individual, ObjectStore, State};
use portal_core::profiles::UserRecord;
use portal_core::semnet::{Binding, Frame, FramePattern, FrameStore};
use portal_core::sources::Record;
use portal_core::{Attributes, Error, Executor, Predicate, Value};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// The press-room bundle shipped with the repository.
pub fn seed_bundle() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../bundles/press-room/bundle.json")
}

pub const ATTRS: [&str; 4] = ["a", "b", "c", "colour"];
pub const COLOURS: [&str; 3] = ["red", "green", "blue"];
pub const STATES: [&str; 3] = ["active", "archived", "draft"];

pub fn random_value(rng: &mut impl Rng, attr: &str) -> Value {
    match attr {
        "colour" => Value::text(*COLOURS.choose(rng).unwrap()),
        "state" => Value::text(*STATES.choose(rng).unwrap()),
        "c" => Value::Bool(rng.random()),
        _ => Value::Int(rng.random_range(0..6)),
    }
}

/// A random predicate over [`ATTRS`], `state` and a never-present attribute.
pub fn random_pred(rng: &mut impl Rng, depth: u32) -> Predicate {
    let leaf = depth == 0 || rng.random_bool(0.35);
    if leaf {
        let attr = *["a", "b", "c", "colour", "state", "missing"]
            .choose(rng)
            .unwrap();
        return match rng.random_range(0..4) {
            0 => Predicate::Eq(attr.into(), random_value(rng, attr)),
            1 => Predicate::Ne(attr.into(), random_value(rng, attr)),
            2 => {
                let n = rng.random_range(0..4);
                Predicate::In(
                    attr.into(),
                    (0..n).map(|_| random_value(rng, attr)).collect(),
                )
            }
            _ => Predicate::Const(rng.random()),
        };
    }
    match rng.random_range(0..3) {
        0 => Predicate::Not(Box::new(random_pred(rng, depth - 1))),
        1 => Predicate::And(
            Box::new(random_pred(rng, depth - 1)),
            Box::new(random_pred(rng, depth - 1)),
        ),
        _ => Predicate::Or(
            Box::new(random_pred(rng, depth - 1)),
            Box::new(random_pred(rng, depth - 1)),
        ),
    }
}

/// Reference semantics, written independently of `Predicate::eval`.
pub fn oracle_eval(p: &Predicate, lookup: &dyn Fn(&str) -> Option<Value>) -> bool {
    match p {
        Predicate::Const(b) => *b,
        Predicate::Eq(a, v) => matches!(lookup(a), Some(x) if x == *v),
        Predicate::Ne(a, v) => !matches!(lookup(a), Some(x) if x == *v),
        Predicate::In(a, vs) => match lookup(a) {
            Some(x) => vs.contains(&x),
            None => false,
        },
        Predicate::Not(q) => !oracle_eval(q, lookup),
        Predicate::And(l, r) => {
            let (l, r) = (oracle_eval(l, lookup), oracle_eval(r, lookup));
            l & r
        }
        Predicate::Or(l, r) => {
            let (l, r) = (oracle_eval(l, lookup), oracle_eval(r, lookup));
            l | r
        }
    }
}

pub fn individual_lookup(ind: &Individual) -> impl Fn(&str) -> Option<Value> + '_ {
    move |name| match name {
        "id" => Some(Value::text(ind.id.as_str())),
        "type" => Some(Value::text(ind.ty.as_str())),
        "state" => Some(Value::text(ind.state.as_str())),
        other => ind.attrs.get(other).cloned(),
    }
}

/// Domains `D0..D{domains}` with `n` individuals spread over them.
pub fn random_store(rng: &mut impl Rng, n: usize, domains: usize) -> ObjectStore {
    let mut store = ObjectStore::new();
    for s in STATES {
        store
            .add_state(State {
                id: s.into(),
                label: s.to_uppercase(),
            })
            .unwrap();
    }
    for d in 0..domains {
        store.add_domain(format!("D{d}").into(), "random").unwrap();
    }
    for i in 0..n {
        let mut attrs = BTreeMap::new();
        for a in ATTRS {
            if rng.random_bool(0.9) {
                attrs.insert(a.to_owned(), random_value(rng, a));
            }
        }
        store
            .add_individual(Individual {
                id: format!("x{i}").into(),
                ty: format!("D{}", rng.random_range(0..domains)).into(),
                state: (*STATES.choose(rng).unwrap()).into(),
                attrs,
            })
            .unwrap();
    }
    store
}

/// A bundle document holding `random_store(rng, n, domains)` plus one
/// level-1 character per formula, named `phi{k}` over all of level 0.
pub fn random_bundle_json(
    rng: &mut impl Rng,
    n: usize,
    domains: usize,
    formulas: &[Predicate],
) -> String {
    let store = random_store(rng, n, domains);
    let states: Vec<_> = STATES.iter().map(|s| json!({"id": s})).collect();
    let doms: Vec<_> = (0..domains)
        .map(|d| json!({"id": format!("D{d}")}))
        .collect();
    let individuals: Vec<_> = store
        .individuals()
        .map(|i| json!({"id": i.id, "type": i.ty, "state": i.state, "attrs": i.attrs}))
        .collect();
    let characters: Vec<_> = formulas
        .iter()
        .enumerate()
        .map(|(k, f)| json!({"id": format!("phi{k}"), "level": 1, "base": {"level": 0}, "formula": f.to_string()}))
        .collect();
    json!({
        "types": {"domains": doms, "states": states, "characters": characters},
        "individuals": individuals,
    })
    .to_string()
}

// ---------------------------------------------------------------------------
// Predicates over arbitrary attribute-bearing objects

/// Owned attribute lookup for anything implementing `Attributes`.
pub fn lookup_of<A: Attributes + ?Sized>(x: &A) -> impl Fn(&str) -> Option<Value> + '_ {
    move |name| x.attr(name).map(|v| v.into_owned())
}

/// A random predicate whose comparisons use values actually carried by
/// `objects` (plus the occasional unseen one), so that selectivity stays
/// interesting at any level of the tower.
pub fn observed_pred<A: Attributes>(
    rng: &mut impl Rng,
    objects: &[A],
    attrs: &[&str],
    depth: u32,
) -> Predicate {
    let sample = |rng: &mut ChaCha8Rng, attr: &str| -> Value {
        if objects.is_empty() || rng.random_bool(0.15) {
            return Value::text("unseen");
        }
        let x = &objects[rng.random_range(0..objects.len())];
        x.attr(attr)
            .map(|v| v.into_owned())
            .unwrap_or(Value::Int(-1))
    };
    let mut local = ChaCha8Rng::seed_from_u64(rng.random());
    build_observed(&mut local, attrs, depth, &sample)
}

fn build_observed(
    rng: &mut ChaCha8Rng,
    attrs: &[&str],
    depth: u32,
    sample: &dyn Fn(&mut ChaCha8Rng, &str) -> Value,
) -> Predicate {
    if depth == 0 || rng.random_bool(0.35) {
        let attr = *attrs.choose(rng).unwrap();
        return match rng.random_range(0..4) {
            0 => Predicate::Eq(attr.into(), sample(rng, attr)),
            1 => Predicate::Ne(attr.into(), sample(rng, attr)),
            2 => {
                let n = rng.random_range(0..4);
                Predicate::In(attr.into(), (0..n).map(|_| sample(rng, attr)).collect())
            }
            _ => Predicate::Const(rng.random()),
        };
    }
    let op = rng.random_range(0..3);
    let mut sub = || Box::new(build_observed(rng, attrs, depth - 1, sample));
    match op {
        0 => Predicate::Not(sub()),
        1 => {
            let l = sub();
            Predicate::And(l, sub())
        }
        _ => {
            let l = sub();
            Predicate::Or(l, sub())
        }
    }
}

// ---------------------------------------------------------------------------
// Property suites run unchanged at every level

/// Comprehension and assignment application over one carrier.
///
/// `objects` is the carrier, `id_of` names each member. For each of
/// `rounds` random predicates the comprehension must equal the
/// brute-force filter. Then a generalized value keyed by member ids is
/// built and checked for case lookup, saturation, constant invariance and
/// multi-point narrowing.
pub fn carrier_suite<A, F>(
    rng: &mut impl Rng,
    exec: Executor,
    objects: &[A],
    attrs: &[&str],
    id_of: F,
    rounds: usize,
) -> Result<(), String>
where
    A: Attributes + Sync,
    F: Fn(&A) -> String,
{
    for _ in 0..rounds {
        let pred = observed_pred(rng, objects, attrs, 3);
        let got: Vec<String> = comprehend_items(exec, objects, &pred)
            .into_iter()
            .map(&id_of)
            .collect();
        let want: Vec<String> = objects
            .iter()
            .filter(|x| oracle_eval(&pred, &lookup_of(*x)))
            .map(&id_of)
            .collect();
        if got != want {
            return Err(format!(
                "comprehension of `{pred}`: got {got:?}, oracle {want:?}"
            ));
        }
    }
    if objects.is_empty() {
        return Ok(());
    }

    let ids: Vec<String> = objects.iter().map(&id_of).collect();
    let table = GeneralizedValue::from_pairs(
        ids.iter()
            .map(|id| (id.as_str(), Evaluand::from(format!("v_{id}").as_str()))),
    )
    .map_err(|e| e.to_string())?;
    let g = Evaluand::General(table.clone());
    let one = |id: &str| BTreeSet::from([Point::from(id)]);
    for _ in 0..rounds {
        let id = &ids[rng.random_range(0..ids.len())];
        let expected = Evaluand::from(format!("v_{id}").as_str());
        let got = apply_assignment(&g, &one(id)).map_err(|e| e.to_string())?;
        if ids.len() > 1 && got != expected {
            return Err(format!("case lookup at `{id}` gave {got}"));
        }
        let other = &ids[rng.random_range(0..ids.len())];
        let again = apply_assignment(&got, &one(other)).map_err(|e| e.to_string())?;
        if again != got {
            return Err(format!("saturation broken: {got} became {again}"));
        }

        let k = rng.random_range(1..=ids.len().min(4));
        let subset: BTreeSet<Point> = (0..k)
            .map(|_| Point::from(ids[rng.random_range(0..ids.len())].as_str()))
            .collect();
        let narrowed = apply_assignment(&g, &subset).map_err(|e| e.to_string())?;
        let survivors: Vec<&String> = ids.iter().filter(|i| subset.contains(i.as_str())).collect();
        let ok = match (&narrowed, survivors.len()) {
            (Evaluand::Atom(v), 1) => *v == Value::text(format!("v_{}", survivors[0])),
            (Evaluand::General(t), n) if n > 1 => {
                t.cases().len() == n && t.cases().keys().all(|p| subset.contains(p))
            }
            _ => ids.len() == 1,
        };
        if !ok {
            return Err(format!("narrowing by {subset:?} gave {narrowed}"));
        }
    }

    let constant = GeneralizedValue::from_pairs(ids.iter().map(|id| (id.as_str(), "q_i")))
        .map_err(|e| e.to_string())?;
    let constant = Evaluand::General(constant);
    for id in &ids {
        let v = apply_assignment(&constant, &one(id)).map_err(|e| e.to_string())?;
        if v != Evaluand::from("q_i") {
            return Err(format!("constant value at `{id}` gave {v}"));
        }
    }
    let unknown = apply_assignment(&g, &one("no-such-point"));
    if ids.len() > 1 && !matches!(unknown, Err(Error::UnknownPoint(_))) {
        return Err(format!("unmatched point gave {unknown:?}"));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Mappings

/// A random total function `D{from} → D{to}` over `store`.
pub fn random_graph(
    rng: &mut impl Rng,
    store: &ObjectStore,
    from: &str,
    to: &str,
) -> BTreeMap<IndividualId, IndividualId> {
    let targets: Vec<&IndividualId> = store.domain(to).unwrap().members.iter().collect();
    store
        .domain(from)
        .unwrap()
        .members
        .iter()
        .map(|x| (x.clone(), (*targets.choose(rng).unwrap()).clone()))
        .collect()
}

// ---------------------------------------------------------------------------
// Profiles

pub const SETTINGS: [&str; 4] = ["higraph", "mmedia", "textonly", "lowres"];
pub const USER_STATUSES: [&str; 3] = ["registered", "unregistered", "corporate"];
pub const DEVICES: [&str; 3] = ["desktop", "pda", "phone"];
pub const BROWSERS: [&str; 3] = ["ie6", "netscape7", "opera7"];

pub fn profile_vocabulary() -> Vec<&'static str> {
    SETTINGS
        .iter()
        .chain(&USER_STATUSES)
        .chain(&DEVICES)
        .chain(&BROWSERS)
        .copied()
        .collect()
}

pub fn random_user(rng: &mut impl Rng, i: usize, roles: &[&str]) -> UserRecord {
    let pick_set = |rng: &mut dyn rand::RngCore, from: &[&str]| -> BTreeSet<Point> {
        from.iter()
            .filter(|_| rng.random_bool(0.4))
            .map(|p| Point::from(*p))
            .collect()
    };
    UserRecord {
        id: format!("user{i}").into(),
        settings: pick_set(rng, &SETTINGS),
        status: (*USER_STATUSES.choose(rng).unwrap()).into(),
        device: (*DEVICES.choose(rng).unwrap()).into(),
        browser: pick_set(rng, &BROWSERS),
        role: (*roles.choose(rng).unwrap()).into(),
    }
}

pub fn random_chain(rng: &mut impl Rng, max_len: usize) -> Vec<BTreeSet<Point>> {
    let vocab = profile_vocabulary();
    let len = rng.random_range(0..=max_len);
    (0..len)
        .map(|_| {
            let k = rng.random_range(1..=2);
            (0..k)
                .map(|_| Point::from(*vocab.choose(rng).unwrap()))
                .collect()
        })
        .collect()
}

/// Membership written out field by field: a point matches when it is one of
/// the user's settings or browser points, or equals the status or device.
pub fn brute_profile(users: &[UserRecord], chain: &[BTreeSet<Point>]) -> Vec<Vec<UserId>> {
    let mut steps = Vec::new();
    let mut current: Vec<&UserRecord> = users.iter().collect();
    steps.push(current.iter().map(|u| u.id.clone()).collect());
    for assignment in chain {
        let mut next = Vec::new();
        for u in current {
            let mut all = true;
            for p in assignment {
                let hit = u.settings.iter().any(|s| s == p)
                    || u.browser.iter().any(|b| b == p)
                    || u.status == *p
                    || u.device == *p;
                if !hit {
                    all = false;
                }
            }
            if all {
                next.push(u);
            }
        }
        current = next;
        steps.push(current.iter().map(|u| u.id.clone()).collect());
    }
    steps
}

// ---------------------------------------------------------------------------
// Frames

pub const RELATIONS: [&str; 4] = ["worksFor", "owns", "cites", "reviewedBy"];

/// A frame store whose relations and constants (`k0..k{constants}`) are all
/// declared up front.
pub fn frame_universe(constants: usize) -> FrameStore {
    let mut s = FrameStore::new();
    for r in RELATIONS {
        s.declare_relation(r.into());
    }
    for c in 0..constants {
        s.declare_constant(format!("k{c}").into(), Binding::Atom(Value::Int(c as i64)))
            .unwrap();
    }
    s
}

pub fn random_frame(rng: &mut impl Rng, constants: usize) -> Frame {
    Frame::new(
        *RELATIONS.choose(rng).unwrap(),
        format!("k{}", rng.random_range(0..constants)),
        format!("k{}", rng.random_range(0..constants)),
    )
}

pub fn random_pattern(rng: &mut impl Rng, constants: usize) -> FramePattern {
    FramePattern {
        relation: rng
            .random_bool(0.5)
            .then(|| (*RELATIONS.choose(rng).unwrap()).into()),
        subject: rng
            .random_bool(0.5)
            .then(|| format!("k{}", rng.random_range(0..constants)).into()),
        object: rng
            .random_bool(0.5)
            .then(|| format!("k{}", rng.random_range(0..constants)).into()),
    }
}

pub fn scan_frames(frames: &BTreeSet<Frame>, p: &FramePattern) -> Vec<Frame> {
    frames
        .iter()
        .filter(|f| {
            p.relation.as_ref().is_none_or(|r| *r == f.relation)
                && p.subject.as_ref().is_none_or(|s| *s == f.subject)
                && p.object.as_ref().is_none_or(|o| *o == f.object)
        })
        .cloned()
        .collect()
}

// ---------------------------------------------------------------------------
// Joins

/// Nested-loop equi-join with the right-hand prefix rule for colliding
/// field names. Rows come out in left-record order.
pub fn nested_loop_join(
    left: &[Record],
    right: &[Record],
    key: &str,
    right_id: &str,
) -> Vec<BTreeMap<String, Value>> {
    let mut out = Vec::new();
    for l in left {
        for r in right {
            if l.fields.contains_key(key) && l.fields.get(key) == r.fields.get(key) {
                let mut row = l.fields.clone();
                for (k, v) in &r.fields {
                    if k == key {
                        continue;
                    }
                    if l.fields.contains_key(k) {
                        row.insert(format!("{right_id}.{k}"), v.clone());
                    } else {
                        row.insert(k.clone(), v.clone());
                    }
                }
                out.push(row);
            }
        }
    }
    out
}
