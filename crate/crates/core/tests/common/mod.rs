#![allow(dead_code)]

use std::sync::{Arc, Mutex};
use std::thread;

use serde_json::{json, Value};

/// Local chat-completion endpoint whose replies come from a closure.
pub struct Stub {
    pub url: String,
    pub requests: Arc<Mutex<Vec<Value>>>,
    server: Arc<tiny_http::Server>,
    handle: Option<thread::JoinHandle<()>>,
}

/// What the stub answers: (HTTP status, assistant text).
pub type Reply = (u16, String);

impl Stub {
    pub fn start(reply: impl Fn(usize, &Value) -> Reply + Send + 'static) -> Self {
        let server = Arc::new(tiny_http::Server::http("127.0.0.1:0").expect("bind stub"));
        let port = server.server_addr().to_ip().expect("ip listener").port();
        let requests = Arc::new(Mutex::new(Vec::new()));
        let (srv, log) = (server.clone(), requests.clone());
        let handle = thread::spawn(move || {
            for mut req in srv.incoming_requests() {
                let mut body = String::new();
                let _ = req.as_reader().read_to_string(&mut body);
                let value: Value = serde_json::from_str(&body).unwrap_or(Value::Null);
                let n = {
                    let mut log = log.lock().unwrap();
                    log.push(value.clone());
                    log.len() - 1
                };
                let (status, text) = reply(n, &value);
                let payload = json!({"choices": [{"message": {"role": "assistant", "content": text}}]});
                let resp = tiny_http::Response::from_string(payload.to_string())
                    .with_status_code(status)
                    .with_header(
                        "Content-Type: application/json"
                            .parse::<tiny_http::Header>()
                            .unwrap(),
                    );
                let _ = req.respond(resp);
            }
        });
        Stub {
            url: format!("http://127.0.0.1:{port}/v1/chat/completions"),
            requests,
            server,
            handle: Some(handle),
        }
    }

    pub fn request_count(&self) -> usize {
        self.requests.lock().unwrap().len()
    }
}

impl Drop for Stub {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

pub const CODE_REPLY: &str =
    "Here is the contract.\n```solidity\npragma solidity ^0.8.0;\ncontract Gcdc {}\n```\n";

use std::collections::{BTreeMap, BTreeSet, HashSet};

use contractcheck::net::{fire, EventLabel, PetriNet, PlaceId};
use contractcheck::{
    insert_loop_controls, legal_equivalent, legal_state, temporal_exemptions, Arc as NetArc, Behavior, Event,
    EventAlignment, LegalKind, Marking, Place, Transition,
};
use rand::seq::IndexedRandom;
use rand::RngExt;

const ACTORS: [&str; 2] = ["A", "B"];
const ACTIONS: [&str; 3] = ["x", "y", "z"];

/// A random net with at most `max_places` places and `max_transitions`
/// transitions, at most `max_tokens` initial tokens per place and at least
/// one marked place, with loop-control places inserted.
pub fn random_net(
    rng: &mut impl RngExt,
    name: &str,
    max_places: usize,
    max_transitions: usize,
    max_tokens: u64,
) -> PetriNet {
    let np = rng.random_range(1..=max_places);
    let nt = rng.random_range(1..=max_transitions);
    let mut places: Vec<Place> = (0..np)
        .map(|i| {
            let p = Place::new(format!("p{i}").as_str(), rng.random_range(0..=max_tokens));
            match rng.random_range(0..4) {
                0 => p.legal(LegalKind::Power),
                1 => p.legal(LegalKind::Obligation),
                _ => p,
            }
        })
        .collect();
    if places.iter().all(|p| p.initial_tokens == 0) {
        let i = rng.random_range(0..np);
        places[i].initial_tokens = 1;
    }
    let transitions: Vec<Transition> = (0..nt)
        .map(|i| {
            let t = Transition::new(
                format!("t{i}").as_str(),
                ACTORS.choose(rng).unwrap(),
                ACTIONS.choose(rng).unwrap(),
            );
            if rng.random_bool(0.15) {
                t.temporal()
            } else {
                t
            }
        })
        .collect();
    let mut arcs = Vec::new();
    for p in &places {
        for t in &transitions {
            let (p, t) = (p.id.as_str(), t.id.as_str());
            match rng.random_range(0..10) {
                0 | 1 => arcs.push(NetArc::input(p, t)),
                2 | 3 => arcs.push(NetArc::output(t, p)),
                4 => arcs.push(NetArc::bidirectional(p, t)),
                5 => arcs.push(NetArc::inhibitor(p, t)),
                _ => {}
            }
        }
    }
    insert_loop_controls(&PetriNet::new(name, places, transitions, arcs))
}

/// Random alignment from `candidate` labels and places onto `ground`.
pub fn random_alignment(rng: &mut impl RngExt, ground: &PetriNet, candidate: &PetriNet) -> EventAlignment {
    let ground_labels: Vec<EventLabel> = ground
        .transitions()
        .iter()
        .map(|t| t.label.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut align = EventAlignment {
        name: "random".into(),
        ..EventAlignment::default()
    };
    let candidate_labels: BTreeSet<EventLabel> =
        candidate.transitions().iter().map(|t| t.label.clone()).collect();
    for l in candidate_labels {
        match rng.random_range(0..10) {
            0..=6 => {
                let g = if ground_labels.contains(&l) && rng.random_bool(0.7) {
                    l.clone()
                } else {
                    ground_labels.choose(rng).unwrap().clone()
                };
                align.event_map.insert(l, g);
            }
            7 | 8 => {
                align.irrelevant.insert(l);
            }
            _ => {}
        }
    }
    let mut sources: Vec<PlaceId> = candidate.places().iter().map(|p| p.id.clone()).collect();
    for (_, g) in ground.legal_places() {
        if sources.is_empty() || rng.random_bool(0.2) {
            continue;
        }
        let same = sources.iter().position(|s| *s == g.id);
        let i = match same {
            Some(i) if rng.random_bool(0.7) => i,
            _ => rng.random_range(0..sources.len()),
        };
        align.legal_map.insert(sources.swap_remove(i), g.id.clone());
    }
    if rng.random_bool(0.3) && !ground_labels.is_empty() {
        let len = rng.random_range(1..=2);
        align.illegal_sequences.push(
            (0..len)
                .map(|_| ground_labels.choose(rng).unwrap().clone())
                .collect(),
        );
    }
    align
}

/// A candidate net derived from `ground`: same structure, labels renamed
/// into a candidate vocabulary, with occasional extra arcs.
pub fn perturbed_copy(rng: &mut impl RngExt, ground: &PetriNet) -> PetriNet {
    let mut arcs: Vec<NetArc> = ground.arcs().to_vec();
    if rng.random_bool(0.5) && !ground.places().is_empty() && !ground.transitions().is_empty() {
        let p = ground.places().choose(rng).unwrap().id.clone();
        let t = ground.transitions().choose(rng).unwrap().id.clone();
        arcs.push(if rng.random_bool(0.5) {
            NetArc::inhibitor(&p, &t)
        } else {
            NetArc::output(&t, &p)
        });
    }
    let transitions = ground
        .transitions()
        .iter()
        .map(|t| Transition {
            label: EventLabel::new(&format!("c{}", t.label.actor), &t.label.action),
            ..t.clone()
        })
        .collect();
    insert_loop_controls(&PetriNet::new(
        "candidate",
        ground.places().to_vec(),
        transitions,
        arcs,
    ))
}

/// Alignment mapping each `c<actor>:action` label of a perturbed copy back.
pub fn copy_alignment(ground: &PetriNet, candidate: &PetriNet) -> EventAlignment {
    EventAlignment {
        name: "copy".into(),
        event_map: candidate
            .transitions()
            .iter()
            .map(|t| {
                (
                    t.label.clone(),
                    EventLabel::new(&t.label.actor[1..], &t.label.action),
                )
            })
            .collect(),
        legal_map: ground
            .legal_places()
            .map(|(_, p)| (p.id.clone(), p.id.clone()))
            .collect(),
        ..EventAlignment::default()
    }
}

/// Renames every actor and action in both nets and the alignment.
pub fn rename_labels(
    ground: &PetriNet,
    candidate: &PetriNet,
    align: &EventAlignment,
) -> (PetriNet, PetriNet, EventAlignment) {
    let r = |l: &EventLabel| EventLabel::new(&format!("who_{}", l.actor), &format!("{}_done", l.action));
    let net = |n: &PetriNet| {
        let ts = n
            .transitions()
            .iter()
            .map(|t| Transition {
                label: r(&t.label),
                ..t.clone()
            })
            .collect();
        PetriNet::new(n.name(), n.places().to_vec(), ts, n.arcs().to_vec())
    };
    let a = EventAlignment {
        name: align.name.clone(),
        event_map: align.event_map.iter().map(|(c, g)| (r(c), r(g))).collect(),
        irrelevant: align.irrelevant.iter().map(r).collect(),
        legal_map: align.legal_map.clone(),
        illegal_sequences: align
            .illegal_sequences
            .iter()
            .map(|s| s.iter().map(r).collect())
            .collect(),
    };
    (net(ground), net(candidate), a)
}

// ---------------------------------------------------------------------------
// Oracles. None of these use the reachability graph or the matcher.

/// Transitions enabled in `m`, found by trying to fire each one.
fn fireable(net: &PetriNet, m: &Marking) -> Vec<(String, Marking)> {
    net.transitions()
        .iter()
        .filter_map(|t| fire(net, m, t.id.as_str()).ok().map(|m2| (t.id.to_string(), m2)))
        .collect()
}

/// All simple token-game paths from the initial marking to a dead marking,
/// sorted, as (transition ids, final marking). `None` when more than
/// `budget` markings get expanded.
pub fn brute_force_paths(net: &PetriNet, budget: usize) -> Option<Vec<(Vec<String>, Marking)>> {
    fn go(
        net: &PetriNet,
        m: &Marking,
        on_path: &mut HashSet<Marking>,
        path: &mut Vec<String>,
        out: &mut Vec<(Vec<String>, Marking)>,
        budget: &mut usize,
    ) -> bool {
        if *budget == 0 {
            return false;
        }
        *budget -= 1;
        let next = fireable(net, m);
        if next.is_empty() {
            out.push((path.clone(), m.clone()));
            return true;
        }
        for (t, m2) in next {
            if on_path.contains(&m2) {
                continue;
            }
            on_path.insert(m2.clone());
            path.push(t);
            let ok = go(net, &m2, on_path, path, out, budget);
            path.pop();
            on_path.remove(&m2);
            if !ok {
                return false;
            }
        }
        true
    }
    let m0 = net.initial_marking();
    let mut on_path = HashSet::from([m0.clone()]);
    let mut out = Vec::new();
    let mut budget = budget;
    if !go(net, &m0, &mut on_path, &mut Vec::new(), &mut out, &mut budget) {
        return None;
    }
    out.sort();
    Some(out)
}

/// Reachable markings and firing triples by depth-first search.
pub type Firing = (Vec<u64>, String, Vec<u64>);

pub fn dfs_state_space(net: &PetriNet, max: usize) -> Option<(BTreeSet<Vec<u64>>, BTreeSet<Firing>)> {
    let m0 = net.initial_marking();
    let mut seen = BTreeSet::from([m0.tokens().to_vec()]);
    let mut edges = BTreeSet::new();
    let mut stack = vec![m0];
    while let Some(m) = stack.pop() {
        for (t, m2) in fireable(net, &m) {
            edges.insert((m.tokens().to_vec(), t, m2.tokens().to_vec()));
            if seen.insert(m2.tokens().to_vec()) {
                if seen.len() > max {
                    return None;
                }
                stack.push(m2);
            }
        }
    }
    Some((seen, edges))
}

/// Builds a behavior by firing `ids` from the initial marking.
pub fn behavior_of(net: &PetriNet, ids: &[&str]) -> Behavior {
    let mut m = net.initial_marking();
    let mut events = Vec::new();
    for id in ids {
        let t = net.transition(id).unwrap_or_else(|| panic!("no transition {id}"));
        m = fire(net, &m, id).unwrap_or_else(|e| panic!("{e}"));
        events.push(Event {
            transition: t.id.clone(),
            label: t.label.clone(),
            temporal: t.temporal,
        });
    }
    Behavior {
        events,
        final_marking: m,
    }
}

fn ends_equivalent(
    gnet: &PetriNet,
    gb: &Behavior,
    cnet: &PetriNet,
    cb: &Behavior,
    align: &EventAlignment,
) -> bool {
    legal_equivalent(
        &legal_state(gnet, &gb.final_marking),
        &cb.final_marking,
        cnet,
        align,
        &temporal_exemptions(gnet, gb),
    )
}

/// Relevant candidate events as Some(ground label) or None when unmapped.
fn relevant(cb: &Behavior, align: &EventAlignment) -> Vec<Option<EventLabel>> {
    cb.events
        .iter()
        .filter(|e| !align.irrelevant.contains(&e.label))
        .map(|e| align.event_map.get(&e.label).cloned())
        .collect()
}

/// Strict match by trying every block factorization.
pub fn oracle_strict(
    gnet: &PetriNet,
    gb: &Behavior,
    cnet: &PetriNet,
    cb: &Behavior,
    align: &EventAlignment,
) -> bool {
    fn go(g: &[Event], c: &[Option<EventLabel>]) -> bool {
        let Some((first, rest)) = g.split_first() else {
            return true;
        };
        if first.temporal && go(rest, c) {
            return true;
        }
        (1..=c.len())
            .take_while(|&k| c[k - 1].as_ref() == Some(&first.label))
            .any(|k| go(rest, &c[k..]))
    }
    go(&gb.events, &relevant(cb, align)) && ends_equivalent(gnet, gb, cnet, cb, align)
}

pub fn oracle_covering(
    gnet: &PetriNet,
    gb: &Behavior,
    cnet: &PetriNet,
    cb: &Behavior,
    align: &EventAlignment,
) -> bool {
    ends_equivalent(gnet, gb, cnet, cb, align)
}

/// Embedding by trying every increasing placement of the collapsed
/// candidate sequence into the ground behavior.
pub fn oracle_embedding(
    gnet: &PetriNet,
    gb: &Behavior,
    cnet: &PetriNet,
    cb: &Behavior,
    align: &EventAlignment,
) -> bool {
    let Some(mapped) = relevant(cb, align)
        .into_iter()
        .collect::<Option<Vec<EventLabel>>>()
    else {
        return false;
    };
    let mut collapsed: Vec<EventLabel> = Vec::new();
    for l in mapped {
        if collapsed.last() != Some(&l) {
            collapsed.push(l);
        }
    }
    let prefix_ok = |end: usize| {
        let ids: Vec<&str> = gb.events[..end].iter().map(|e| e.transition.as_str()).collect();
        ends_equivalent(gnet, &behavior_of(gnet, &ids), cnet, cb, align)
    };
    if collapsed.is_empty() {
        return prefix_ok(0);
    }
    fn go(gb: &Behavior, from: usize, need: &[EventLabel], done: &dyn Fn(usize) -> bool) -> bool {
        let Some((first, rest)) = need.split_first() else {
            return done(from);
        };
        (from..gb.events.len()).any(|k| gb.events[k].label == *first && go(gb, k + 1, rest, done))
    }
    go(gb, 0, &collapsed, &prefix_ok)
}

/// Contiguous illegal sequence in the mapped events, checked naively.
pub fn oracle_illegal(cb: &Behavior, align: &EventAlignment) -> bool {
    let mapped: Vec<EventLabel> = cb
        .events
        .iter()
        .filter_map(|e| align.event_map.get(&e.label).cloned())
        .collect();
    align.illegal_sequences.iter().any(|seq| {
        !seq.is_empty()
            && seq.len() <= mapped.len()
            && (0..=mapped.len() - seq.len()).any(|i| mapped[i..i + seq.len()] == seq[..])
    })
}

/// (fitness, precision, fes) numerators by exhaustive pairwise checking;
/// pruned candidates never match.
pub fn oracle_counts(
    gnet: &PetriNet,
    r: &[Behavior],
    cnet: &PetriNet,
    q: &[Behavior],
    align: &EventAlignment,
) -> (u64, u64, u64) {
    let kept: Vec<&Behavior> = q.iter().filter(|c| !oracle_illegal(c, align)).collect();
    let strict = r
        .iter()
        .filter(|g| kept.iter().any(|c| oracle_strict(gnet, g, cnet, c, align)))
        .count();
    let covered = r
        .iter()
        .filter(|g| kept.iter().any(|c| oracle_covering(gnet, g, cnet, c, align)))
        .count();
    let embedded = kept
        .iter()
        .filter(|c| r.iter().any(|g| oracle_embedding(gnet, g, cnet, c, align)))
        .count();
    (strict as u64, embedded as u64, covered as u64)
}

#[allow(unused)]
pub fn label_map(net: &PetriNet) -> BTreeMap<String, EventLabel> {
    net.transitions()
        .iter()
        .map(|t| (t.id.to_string(), t.label.clone()))
        .collect()
}

// ---------------------------------------------------------------------------
// Whole-net and whole-pair checks shared by the property and acceptance
// suites.

use contractcheck::align::is_illegal;
use contractcheck::{
    build_reachability_graph, enumerate_behaviors, evaluate, BehaviorSet, ExplorationLimits, ReachError,
};
use rand::seq::SliceRandom;

pub const RANDOM_LIMITS: ExplorationLimits = ExplorationLimits {
    max_states: 300,
    max_paths: 20_000,
    max_depth: 1_000,
};

/// Numerators and denominators of one checked pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairCounts {
    pub fitness: u64,
    pub precision: u64,
    pub fes: u64,
    pub ground: u64,
    pub candidate: u64,
}

pub enum Check {
    Agree,
    /// The net is too large for the oracle; nothing was compared.
    Skipped,
}

/// Explores `net` with the library and returns its behaviors, or `None`
/// when the state space is beyond the random-test limits.
pub fn explore(net: &PetriNet) -> Option<BehaviorSet> {
    let rg = match build_reachability_graph(net, &RANDOM_LIMITS) {
        Ok(rg) => rg,
        Err(ReachError::StateExplosion { .. }) => return None,
        Err(e) => panic!("{e}"),
    };
    match enumerate_behaviors(&rg, &RANDOM_LIMITS, true) {
        Ok(set) if set.truncated == 0 => Some(set),
        Ok(_) | Err(ReachError::PathExplosion { .. }) => None,
        Err(e) => panic!("{e}"),
    }
}

/// Compares reachability and behavior enumeration of `net` against the
/// token-game oracles.
pub fn check_exploration(net: &PetriNet) -> Result<Check, String> {
    let Some(set) = explore(net) else {
        return Ok(Check::Skipped);
    };
    let rg = build_reachability_graph(net, &RANDOM_LIMITS).unwrap();
    let (nodes, edges) =
        dfs_state_space(net, RANDOM_LIMITS.max_states).ok_or("oracle state space too large")?;
    let lib_nodes: BTreeSet<Vec<u64>> = rg.nodes().iter().map(|m| m.tokens().to_vec()).collect();
    if lib_nodes != nodes || rg.nodes().len() != nodes.len() {
        return Err(format!(
            "reachable markings differ: {} vs {}",
            rg.nodes().len(),
            nodes.len()
        ));
    }
    let lib_edges: BTreeSet<_> = rg
        .edges()
        .iter()
        .map(|e| {
            (
                rg.nodes()[e.source].tokens().to_vec(),
                rg.edge_transition(e).to_string(),
                rg.nodes()[e.target].tokens().to_vec(),
            )
        })
        .collect();
    if lib_edges != edges {
        return Err("firing relations differ".into());
    }
    let oracle = brute_force_paths(net, 2_000_000).ok_or("oracle path budget exhausted")?;
    let lib: Vec<(Vec<String>, Marking)> = set
        .iter()
        .map(|b| {
            (
                b.events.iter().map(|e| e.transition.to_string()).collect(),
                b.final_marking.clone(),
            )
        })
        .collect();
    if lib != oracle {
        return Err(format!(
            "behaviors differ: library {} vs oracle {}",
            lib.len(),
            oracle.len()
        ));
    }
    for b in set.iter() {
        if b.replay(net).map_err(|e| e.to_string())? != b.final_marking {
            return Err(format!("replay of {} disagrees", b.to_path_string()));
        }
    }
    Ok(Check::Agree)
}

fn counts_of(
    r: &BehaviorSet,
    q: &BehaviorSet,
    align: &EventAlignment,
    g: &PetriNet,
    c: &PetriNet,
) -> Option<(u64, u64, u64, u64, u64)> {
    let pruned: BTreeSet<usize> = q
        .iter()
        .enumerate()
        .filter(|(_, b)| is_illegal(b, align))
        .map(|(i, _)| i)
        .collect();
    let ev = evaluate(r, q, align, g, c, &pruned, false).ok()?;
    let k = ev.metrics.counts;
    let m = ev.metrics;
    for ratio in [m.fitness, m.precision, m.fes] {
        assert!(ratio.numerator <= ratio.denominator && (0.0..=1.0).contains(&ratio.value()));
    }
    Some((
        k.ground_strictly_matched,
        k.candidate_embedded,
        k.ground_covered,
        k.ground_total,
        k.candidate_total,
    ))
}

/// Generates a random ground/candidate pair and checks the metric
/// properties: bounds, fitness <= FES, exact agreement with the pairwise
/// oracles, strict implies covering on every pair, and invariance under
/// label renaming and behavior reordering.
pub fn check_random_pair(rng: &mut rand::rngs::StdRng) -> Result<Option<PairCounts>, String> {
    let ground = random_net(rng, "ground", 5, 5, 2);
    let (candidate, align) = if rng.random_bool(0.5) {
        let c = perturbed_copy(rng, &ground);
        let a = copy_alignment(&ground, &c);
        (c, a)
    } else {
        let c = random_net(rng, "candidate", 5, 5, 2);
        let a = random_alignment(rng, &ground, &c);
        (c, a)
    };
    let (Some(r), Some(q)) = (explore(&ground), explore(&candidate)) else {
        return Ok(None);
    };
    if r.is_empty() || q.is_empty() || r.len() * q.len() > 4_000 {
        return Ok(None);
    }
    let (f, p, e, rt, qt) = counts_of(&r, &q, &align, &ground, &candidate).ok_or("evaluate failed")?;
    if f > e {
        return Err(format!("fitness {f}/{rt} above FES {e}/{rt}"));
    }
    let oracle = oracle_counts(&ground, &r.behaviors, &candidate, &q.behaviors, &align);
    if oracle != (f, p, e) {
        return Err(format!(
            "library (fit, prec, fes) = {:?}, oracle = {oracle:?} (|R|={rt}, |Q|={qt})",
            (f, p, e)
        ));
    }
    for gb in r.iter() {
        for cb in q.iter() {
            if contractcheck::strict_match(gb, cb, &align, &ground, &candidate).is_match()
                && !contractcheck::covering_match(gb, cb, &align, &ground, &candidate).is_match()
            {
                return Err(format!(
                    "strict without covering: {} / {}",
                    gb.to_path_string(),
                    cb.to_path_string()
                ));
            }
        }
    }

    let (g2, c2, a2) = rename_labels(&ground, &candidate, &align);
    let (r2, q2) = (
        explore(&g2).ok_or("renamed ground explodes")?,
        explore(&c2).ok_or("renamed candidate explodes")?,
    );
    if counts_of(&r2, &q2, &a2, &g2, &c2) != Some((f, p, e, rt, qt)) {
        return Err("label renaming changed the metrics".into());
    }

    let mut rs = r.behaviors.clone();
    let mut qs = q.behaviors.clone();
    rs.shuffle(rng);
    qs.shuffle(rng);
    let (r3, q3) = (BehaviorSet::new("ground", rs), BehaviorSet::new("candidate", qs));
    if counts_of(&r3, &q3, &align, &ground, &candidate) != Some((f, p, e, rt, qt)) {
        return Err("reordering behaviors changed the metrics".into());
    }
    Ok(Some(PairCounts {
        fitness: f,
        precision: p,
        fes: e,
        ground: rt,
        candidate: qt,
    }))
}
