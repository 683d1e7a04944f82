mod common;

use std::collections::BTreeSet;

use common::behavior_of;
use contractcheck::corpus::load_fixture;
use contractcheck::io::{parse_alignment, parse_net};
use contractcheck::{
    compare, covering_match, embedding_match, legal_equivalent, legal_state, prune_illegal, strict_match,
    temporal_exemptions, BehaviorSet, CompareOptions, EventAlignment, EventLabel, ExplorationLimits,
    MetricsError, MismatchReason, PetriNet, PlaceId, ReachError,
};

fn net(text: &str) -> PetriNet {
    parse_net(text).unwrap()
}

fn align(text: &str) -> EventAlignment {
    parse_alignment(text).unwrap()
}

/// s0 -e1-> s1 -e2-> s2, with s2 an obligation.
const TWO_STEP: &str = "net \"g\"
place s0 tokens=1
place s1
place s2 legal=obligation
transition e1 actor=A action=one
transition e2 actor=A action=two
arc s0 -> e1
arc e1 -> s1
arc s1 -> e2
arc e2 -> s2
";

/// The two-step ground split by a temporal deadline between e1 and e2.
const WITH_DEADLINE: &str = "net \"gt\"
place s0 tokens=1
place s1
place s1b
place s2 legal=obligation
transition e1 actor=A action=one
transition e2 actor=A action=two
transition tau actor=Clock action=deadline temporal
arc s0 -> e1
arc e1 -> s1
arc s1 -> tau
arc tau -> s1b
arc s1b -> e2
arc e2 -> s2
";

/// A three-transition chain over `c`-prefixed places, ending in q3.
fn chain(name: &str, labels: [&str; 3]) -> PetriNet {
    let mut text = format!("net \"{name}\"\nplace q0 tokens=1\nplace q1\nplace q2\nplace q3\n");
    for (i, l) in labels.iter().enumerate() {
        let (actor, action) = l.split_once(':').unwrap();
        text.push_str(&format!(
            "transition c{i} actor={actor} action={action}\narc q{i} -> c{i}\narc c{i} -> q{}\n",
            i + 1
        ));
    }
    net(&text)
}

fn two_event_chain(name: &str, labels: [&str; 2]) -> PetriNet {
    let mut text = format!("net \"{name}\"\nplace q0 tokens=1\nplace q1\nplace q2\n");
    for (i, l) in labels.iter().enumerate() {
        let (actor, action) = l.split_once(':').unwrap();
        text.push_str(&format!(
            "transition c{i} actor={actor} action={action}\narc q{i} -> c{i}\narc c{i} -> q{}\n",
            i + 1
        ));
    }
    net(&text)
}

#[test]
fn strict_one_to_many_realization() {
    let g = net(TWO_STEP);
    let c = chain("c", ["C:a", "C:b", "C:c"]);
    let a =
        align("align \"a\"\nevent C:a => A:one\nevent C:b => A:one\nevent C:c => A:two\nlegal q3 => s2\n");
    let gb = behavior_of(&g, &["e1", "e2"]);
    let cb = behavior_of(&c, &["c0", "c1", "c2"]);
    let m = strict_match(&gb, &cb, &a, &g, &c);
    let w = m.witness().expect("matched");
    assert_eq!(w.blocks.len(), 2);
    assert_eq!((w.blocks[0].candidate_start, w.blocks[0].candidate_end), (0, 2));
    assert_eq!((w.blocks[1].candidate_start, w.blocks[1].candidate_end), (2, 3));
}

#[test]
fn strict_skips_temporal_ground_events() {
    let g = net(WITH_DEADLINE);
    let c = two_event_chain("c", ["C:a", "C:c"]);
    let a = align("align \"a\"\nevent C:a => A:one\nevent C:c => A:two\nlegal q2 => s2\n");
    let gb = behavior_of(&g, &["e1", "tau", "e2"]);
    let cb = behavior_of(&c, &["c0", "c1"]);
    assert!(strict_match(&gb, &cb, &a, &g, &c).is_match());
}

#[test]
fn strict_rejects_reordering_but_covering_accepts() {
    let g = net(TWO_STEP);
    let c = two_event_chain("rev", ["C:c", "C:a"]);
    let a = align("align \"a\"\nevent C:a => A:one\nevent C:c => A:two\nlegal q2 => s2\n");
    let gb = behavior_of(&g, &["e1", "e2"]);
    let cb = behavior_of(&c, &["c0", "c1"]);
    assert_eq!(
        strict_match(&gb, &cb, &a, &g, &c).reason(),
        Some(MismatchReason::OrderViolation)
    );
    assert!(covering_match(&gb, &cb, &a, &g, &c).is_match());
}

#[test]
fn covering_identical_behaviors() {
    let g = net(TWO_STEP);
    let id = EventAlignment::identity(&g);
    let gb = behavior_of(&g, &["e1", "e2"]);
    assert!(covering_match(&gb, &gb, &id, &g, &g).is_match());
}

#[test]
fn covering_fails_without_terminal_position() {
    // The candidate has no place standing for the ground's final obligation.
    let g = net(TWO_STEP);
    let c = two_event_chain("c", ["C:a", "C:c"]);
    let a = align("align \"a\"\nevent C:a => A:one\nevent C:c => A:two\n");
    let gb = behavior_of(&g, &["e1", "e2"]);
    let cb = behavior_of(&c, &["c0", "c1"]);
    assert_eq!(
        covering_match(&gb, &cb, &a, &g, &c).reason(),
        Some(MismatchReason::LegalStateMismatch)
    );
    assert_eq!(
        strict_match(&gb, &cb, &a, &g, &c).reason(),
        Some(MismatchReason::LegalStateMismatch)
    );
}

#[test]
fn embedding_stops_at_intermediate_state() {
    let g = load_fixture("chain3_ground").unwrap().net;
    let c = net("net \"short\"\nplace q0 tokens=1\nplace q1\ntransition c0 actor=C action=a\narc q0 -> c0\narc c0 -> q1\n");
    let a = align("align \"a\"\nevent C:a => A:one\nlegal q1 => s1\n");
    let gb = behavior_of(&g, &["e1", "e2", "e3"]);
    let cb = behavior_of(&c, &["c0"]);
    assert!(embedding_match(&cb, &gb, &a, &g, &c).is_match());
    // Ending where the ground is after e2 instead does not embed.
    let a2 = align("align \"a\"\nevent C:a => A:one\nlegal q1 => s2\n");
    assert!(!embedding_match(&cb, &gb, &a2, &g, &c).is_match());
}

#[test]
fn embedding_of_identical_behavior() {
    let g = net(WITH_DEADLINE);
    let id = EventAlignment::identity(&g);
    let gb = behavior_of(&g, &["e1", "tau", "e2"]);
    assert!(embedding_match(&gb, &gb, &id, &g, &g).is_match());
}

#[test]
fn wrong_actor_is_unmapped() {
    let g = net(TWO_STEP);
    let c = two_event_chain("c", ["C:a", "Anyone:two"]);
    let a = align("align \"a\"\nevent C:a => A:one\nlegal q2 => s2\n");
    let gb = behavior_of(&g, &["e1", "e2"]);
    let cb = behavior_of(&c, &["c0", "c1"]);
    assert_eq!(
        embedding_match(&cb, &gb, &a, &g, &c).reason(),
        Some(MismatchReason::UnmappedEvent)
    );
}

#[test]
fn legal_state_projection() {
    let f = load_fixture("gcdc_legal").unwrap();
    let g = &f.net;
    let zero = g.marking(std::iter::empty::<(&str, u64)>()).unwrap();
    assert!(legal_state(g, &zero).positions.values().all(|&n| n == 0));
    let paused = g.marking([("P_Pause", 1)]).unwrap();
    let s = legal_state(g, &paused);
    assert_eq!(s.positions[&PlaceId::new("P_Pause")], 1);
    assert_eq!(s.positions.values().sum::<u64>(), 1);
    // Non-legal places do not show up.
    let (i, p) = g
        .places()
        .iter()
        .enumerate()
        .find(|(_, p)| !p.legal.is_legal())
        .expect("gcdc has non-legal places");
    let mut tokens = paused.tokens().to_vec();
    tokens[i] = 3;
    let touched = g
        .marking(g.places().iter().zip(tokens).map(|(p, n)| (p.id.as_str(), n)))
        .unwrap();
    assert_eq!(legal_state(g, &touched), s, "{} changed the legal state", p.id);
}

#[test]
fn temporal_flip_is_exempt() {
    let g = net("net \"lapse\"\nplace due tokens=1 legal=obligation\nplace lapsed\n\
                 transition expire actor=Clock action=expire temporal\narc due -> expire\narc expire -> lapsed\n");
    let c = net("net \"c\"\nplace owed tokens=1\n");
    let a = align("align \"a\"\nlegal owed => due\n");
    let gb = behavior_of(&g, &["expire"]);
    let exempt = temporal_exemptions(&g, &gb);
    assert_eq!(exempt, BTreeSet::from([PlaceId::new("due")]));
    let gs = legal_state(&g, &gb.final_marking);
    let cm = c.initial_marking();
    assert!(legal_equivalent(&gs, &cm, &c, &a, &exempt));
    assert!(!legal_equivalent(&gs, &cm, &c, &a, &BTreeSet::new()));
}

#[test]
fn pruning_by_illegal_sequence() {
    let c = net("net \"bond\"\nplace p tokens=1\nplace q\nplace r\n\
                 transition issue actor=Bank action=issue\ntransition redeem actor=Holder action=redeem\n\
                 transition early actor=Holder action=redeem_early\n\
                 arc p -> redeem\narc redeem -> q\narc q -> issue\narc issue -> r\narc p -> early\narc early -> r\n");
    let both = BehaviorSet::new(
        "bond",
        vec![behavior_of(&c, &["redeem", "issue"]), behavior_of(&c, &["early"])],
    );
    let mut a = EventAlignment::identity(&c);
    a.event_map.insert(
        EventLabel::new("Holder", "redeem_early"),
        EventLabel::new("Holder", "redeem"),
    );
    let (kept, pruned) = prune_illegal(&both, &a);
    assert_eq!((kept.len(), pruned.len()), (2, 0), "no illegal sequences");

    a.illegal_sequences.push(vec![
        EventLabel::new("Holder", "redeem"),
        EventLabel::new("Bank", "issue"),
    ]);
    let (kept, pruned) = prune_illegal(&both, &a);
    assert_eq!(pruned.behaviors[0].to_path_string(), "redeem issue");
    assert_eq!(kept.behaviors[0].to_path_string(), "early");

    a.illegal_sequences
        .push(vec![EventLabel::new("Holder", "redeem")]);
    let (kept, pruned) = prune_illegal(&both, &a);
    assert_eq!((kept.len(), pruned.len()), (0, 2));
}

#[test]
fn compare_reports_path_explosion() {
    let f = load_fixture("transactive_stress").unwrap();
    let options = CompareOptions {
        lcp_auto: true,
        limits: ExplorationLimits {
            max_paths: 100,
            ..ExplorationLimits::default()
        },
        ..CompareOptions::default()
    };
    let g = f.explored_net();
    let err = compare(&g, &f.net, &EventAlignment::identity(&g), &options).unwrap_err();
    assert!(
        matches!(
            err,
            MetricsError::Reach(ReachError::PathExplosion { limit: 100, .. })
        ),
        "{err}"
    );
}

#[test]
fn compare_pause_free_candidate() {
    let c = contractcheck::corpus::Corpus::embedded()
        .load_comparison("gcdc_gp")
        .unwrap();
    let r = compare(
        &c.ground.net,
        &c.candidate.net,
        &c.align,
        &CompareOptions::default(),
    )
    .unwrap();
    assert_eq!(r.metrics.fitness.numerator, 0);
    assert_eq!(r.metrics.fes.numerator, 0);
    assert!(r.metrics.precision.numerator > 0);
    assert!(r.diagnostics.iter().any(|d| d.code == "W_UNMAPPED_LEGAL"));
}
