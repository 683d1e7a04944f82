//! Event and legal-state correspondence between a ground-truth net and a
//! candidate net, and the three behavior matchers built on it.
//!
//! * [`strict_match`]: every non-temporal ground event is realized, in order,
//!   by a consecutive block of one or more candidate events; extra candidate
//!   events are tolerated only after the last block.
//! * [`covering_match`]: the two behaviors end in legally equivalent states;
//!   the event sequences may differ.
//! * [`embedding_match`]: the candidate behavior is an order-preserving
//!   subsequence of the ground behavior and stops in the legal state the
//!   ground behavior has at that point.
//!
//! All three compare end states with [`legal_equivalent`], exempting the
//! legal positions whose change along the ground behavior comes only from
//! temporal transitions.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::Serialize;

use crate::diag::Diagnostic;
use crate::net::{EventLabel, Marking, PetriNet, PlaceId};
use crate::reach::{Behavior, BehaviorSet};

/// How candidate events and legal places correspond to the ground net.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EventAlignment {
    pub name: String,
    /// Candidate label → ground label. Several candidate labels may realize
    /// the same ground event.
    pub event_map: BTreeMap<EventLabel, EventLabel>,
    /// Candidate labels that are legally irrelevant and skipped by matching.
    pub irrelevant: BTreeSet<EventLabel>,
    /// Candidate place → ground legal place.
    pub legal_map: BTreeMap<PlaceId, PlaceId>,
    /// Ground-event sequences whose contiguous occurrence makes a candidate
    /// behavior illegal outright.
    pub illegal_sequences: Vec<Vec<EventLabel>>,
}

/// What a candidate label stands for under an alignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventRole<'a> {
    Mapped(&'a EventLabel),
    Irrelevant,
    Unmapped,
}

impl EventAlignment {
    /// Maps every label and every legal place of `net` to itself.
    pub fn identity(net: &PetriNet) -> Self {
        EventAlignment {
            name: format!("identity:{}", net.name()),
            event_map: net
                .transitions()
                .iter()
                .map(|t| (t.label.clone(), t.label.clone()))
                .collect(),
            irrelevant: BTreeSet::new(),
            legal_map: net
                .legal_places()
                .map(|(_, p)| (p.id.clone(), p.id.clone()))
                .collect(),
            illegal_sequences: Vec::new(),
        }
    }

    pub fn role(&self, label: &EventLabel) -> EventRole<'_> {
        if let Some(g) = self.event_map.get(label) {
            EventRole::Mapped(g)
        } else if self.irrelevant.contains(label) {
            EventRole::Irrelevant
        } else {
            EventRole::Unmapped
        }
    }

    /// Ground labels of the mapped events of `behavior`, in order.
    pub fn mapped_sequence<'a>(&'a self, behavior: &'a Behavior) -> impl Iterator<Item = &'a EventLabel> {
        behavior.labels().filter_map(|l| self.event_map.get(l))
    }
}

/// Checks that an alignment only refers to things that exist.
pub fn validate_alignment(
    align: &EventAlignment,
    ground: &PetriNet,
    candidate: &PetriNet,
) -> Vec<Diagnostic> {
    let ground_labels: BTreeSet<&EventLabel> = ground.transitions().iter().map(|t| &t.label).collect();
    let candidate_labels: BTreeSet<&EventLabel> = candidate.transitions().iter().map(|t| &t.label).collect();
    let mut out = Vec::new();

    for (c, g) in &align.event_map {
        if !candidate_labels.contains(c) {
            out.push(
                Diagnostic::error("E_EVENT_SOURCE", format!("candidate net has no event `{c}`"))
                    .with_subject(c.to_string()),
            );
        }
        if !ground_labels.contains(g) {
            out.push(
                Diagnostic::error("E_EVENT_TARGET", format!("ground net has no event `{g}`"))
                    .with_subject(g.to_string()),
            );
        }
        if align.irrelevant.contains(c) {
            out.push(
                Diagnostic::error(
                    "E_IRRELEVANT_MAPPED",
                    format!("event `{c}` is both mapped and irrelevant"),
                )
                .with_subject(c.to_string()),
            );
        }
    }
    for c in &align.irrelevant {
        if !candidate_labels.contains(c) {
            out.push(
                Diagnostic::error("E_EVENT_SOURCE", format!("candidate net has no event `{c}`"))
                    .with_subject(c.to_string()),
            );
        }
    }

    let mut targets: BTreeMap<&PlaceId, &PlaceId> = BTreeMap::new();
    for (c, g) in &align.legal_map {
        if candidate.place(c).is_none() {
            out.push(
                Diagnostic::error("E_LEGAL_SOURCE", format!("candidate net has no place `{c}`"))
                    .with_subject(c.to_string()),
            );
        }
        match ground.place(g) {
            Some(p) if p.legal.is_legal() => {}
            _ => out.push(
                Diagnostic::error(
                    "E_LEGAL_TARGET",
                    format!("`{g}` is not a legal place of the ground net"),
                )
                .with_subject(g.to_string()),
            ),
        }
        if let Some(prev) = targets.insert(g, c) {
            out.push(
                Diagnostic::error(
                    "E_LEGAL_NOT_INJECTIVE",
                    format!("`{prev}` and `{c}` both map to `{g}`"),
                )
                .with_subject(g.to_string()),
            );
        }
    }

    for (i, seq) in align.illegal_sequences.iter().enumerate() {
        if seq.is_empty() {
            out.push(Diagnostic::error(
                "E_ILLEGAL_SEQ_EMPTY",
                format!("illegal sequence #{} is empty", i + 1),
            ));
        }
        for l in seq {
            if !ground_labels.contains(l) {
                out.push(
                    Diagnostic::error(
                        "E_ILLEGAL_SEQ_EVENT",
                        format!("illegal sequence #{} names unknown ground event `{l}`", i + 1),
                    )
                    .with_subject(l.to_string()),
                );
            }
        }
    }

    for (_, p) in ground.legal_places() {
        if !targets.contains_key(&p.id) {
            out.push(
                Diagnostic::warning(
                    "W_UNMAPPED_LEGAL",
                    format!(
                        "ground legal place `{}` has no candidate counterpart; \
                         it counts as permanently unmarked",
                        p.id
                    ),
                )
                .with_subject(p.id.to_string()),
            );
        }
    }
    out
}

/// Projection of a marking onto the legal places of its net.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LegalState {
    pub positions: BTreeMap<PlaceId, u64>,
}

pub fn legal_state(net: &PetriNet, m: &Marking) -> LegalState {
    LegalState {
        positions: net
            .legal_places()
            .map(|(i, p)| (p.id.clone(), m.tokens().get(i).copied().unwrap_or(0)))
            .collect(),
    }
}

/// Whether the candidate marking agrees with ground legal state `g` on every
/// ground legal place outside `exempt`. A ground place without a candidate
/// counterpart agrees only when it is unmarked.
pub fn legal_equivalent(
    g: &LegalState,
    c_marking: &Marking,
    candidate: &PetriNet,
    align: &EventAlignment,
    exempt: &BTreeSet<PlaceId>,
) -> bool {
    let inverse: HashMap<&PlaceId, &PlaceId> = align.legal_map.iter().map(|(c, g)| (g, c)).collect();
    g.positions.iter().all(|(p, &tokens)| {
        if exempt.contains(p) {
            return true;
        }
        let theirs = inverse
            .get(p)
            .and_then(|c| candidate.tokens(c_marking, c))
            .unwrap_or(0);
        theirs == tokens
    })
}

/// Legal places whose final token count along `behavior` differs from what
/// the non-temporal events alone would produce.
pub fn temporal_exemptions(net: &PetriNet, behavior: &Behavior) -> BTreeSet<PlaceId> {
    let full = net.initial_marking().tokens().to_vec();
    let mut full: Vec<i64> = full.into_iter().map(|n| n as i64).collect();
    let mut skipped = full.clone();
    for e in &behavior.events {
        let Some(t) = net.transition_index(&e.transition) else {
            continue;
        };
        for (p, d) in net.effect(t) {
            full[p] += d;
            if !e.temporal {
                skipped[p] += d;
            }
        }
    }
    net.legal_places()
        .filter(|&(i, _)| full[i] != skipped[i])
        .map(|(_, p)| p.id.clone())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MismatchReason {
    OrderViolation,
    MissingEvent,
    ExtraEvent,
    LegalStateMismatch,
    UnmappedEvent,
    /// The candidate behavior contains an illegal event sequence.
    Pruned,
}

impl fmt::Display for MismatchReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MismatchReason::OrderViolation => "order violation",
            MismatchReason::MissingEvent => "missing event",
            MismatchReason::ExtraEvent => "extra mid-sequence event",
            MismatchReason::LegalStateMismatch => "legal-state mismatch",
            MismatchReason::UnmappedEvent => "unmapped event",
            MismatchReason::Pruned => "illegal sequence",
        })
    }
}

/// One ground event and the half-open range of candidate event indices that
/// realize it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BlockMatch {
    pub ground_event: usize,
    pub candidate_start: usize,
    pub candidate_end: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub blocks: Vec<BlockMatch>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MatchResult {
    Matched(Witness),
    Mismatch(MismatchReason),
}

impl MatchResult {
    pub fn is_match(&self) -> bool {
        matches!(self, MatchResult::Matched(_))
    }

    pub fn witness(&self) -> Option<&Witness> {
        match self {
            MatchResult::Matched(w) => Some(w),
            MatchResult::Mismatch(_) => None,
        }
    }

    pub fn reason(&self) -> Option<MismatchReason> {
        match self {
            MatchResult::Matched(_) => None,
            MatchResult::Mismatch(r) => Some(*r),
        }
    }
}

/// A candidate event as seen by the matchers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Item {
    /// Interned ground label.
    Mapped(u32),
    Unmapped,
}

/// A ground behavior compiled for repeated matching.
#[derive(Debug, Clone)]
pub struct PreparedGround {
    labels: Vec<u32>,
    temporal: Vec<bool>,
    /// Legal slot values after each prefix; index k = after k events.
    legal_after: Vec<Box<[u64]>>,
    /// Temporal exemptions after each prefix.
    exempt_after: Vec<Box<[bool]>>,
}

impl PreparedGround {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Final legal slot values and exemptions.
    fn final_state(&self) -> (&[u64], &[bool]) {
        (
            self.legal_after.last().expect("prefix 0 always exists"),
            self.exempt_after.last().expect("prefix 0 always exists"),
        )
    }

    /// Interned labels of the non-temporal events, consecutive repeats merged.
    pub fn strict_signature(&self) -> Vec<u32> {
        collapse(
            self.labels
                .iter()
                .zip(&self.temporal)
                .filter(|(_, &t)| !t)
                .map(|(&l, _)| l),
        )
    }

    /// Interned labels of all events, consecutive repeats merged.
    pub fn full_signature(&self) -> Vec<u32> {
        collapse(self.labels.iter().copied())
    }

    pub fn has_temporal(&self) -> bool {
        self.temporal.iter().any(|&t| t)
    }

    /// Final legal values and exemption flags.
    pub fn final_key(&self) -> (Vec<u64>, Vec<bool>) {
        let (vals, ex) = self.final_state();
        (vals.to_vec(), ex.to_vec())
    }
}

/// A candidate behavior compiled for repeated matching.
#[derive(Debug, Clone)]
pub struct PreparedCandidate {
    /// Relevant events with their index in the original behavior.
    items: Vec<(Item, usize)>,
    /// Candidate marking projected onto the ground legal slots.
    legal_final: Box<[u64]>,
}

impl PreparedCandidate {
    /// Interned ground labels of the mapped events, consecutive repeats merged.
    pub fn signature(&self) -> Vec<u32> {
        collapse(self.items.iter().filter_map(|(i, _)| match i {
            Item::Mapped(l) => Some(*l),
            Item::Unmapped => None,
        }))
    }

    /// Relevant events with unmapped ones kept as a sentinel, consecutive
    /// repeats merged. A strict match against a ground behavior without
    /// temporal events needs that behavior's `full_signature` as a prefix.
    pub fn block_signature(&self) -> Vec<u32> {
        collapse(self.items.iter().map(|(i, _)| match i {
            Item::Mapped(l) => *l,
            Item::Unmapped => UNMAPPED,
        }))
    }

    pub fn legal_final(&self) -> &[u64] {
        &self.legal_final
    }

    pub fn has_unmapped(&self) -> bool {
        self.items.iter().any(|(i, _)| *i == Item::Unmapped)
    }
}

const UNMAPPED: u32 = u32::MAX - 1;

fn collapse(labels: impl Iterator<Item = u32>) -> Vec<u32> {
    let mut out: Vec<u32> = Vec::new();
    for l in labels {
        if out.last() != Some(&l) {
            out.push(l);
        }
    }
    out
}

/// Matching context for one (ground, candidate, alignment) triple.
pub struct Matcher<'a> {
    ground: &'a PetriNet,
    candidate: &'a PetriNet,
    align: &'a EventAlignment,
    labels: HashMap<EventLabel, u32>,
    /// (ground place index, candidate place index) per ground legal place.
    slots: Vec<(usize, Option<usize>)>,
    ground_effects: Vec<Vec<(usize, i64)>>,
}

impl<'a> Matcher<'a> {
    pub fn new(ground: &'a PetriNet, candidate: &'a PetriNet, align: &'a EventAlignment) -> Self {
        let mut labels: HashMap<EventLabel, u32> = HashMap::new();
        let all_ground = ground.transitions().iter().map(|t| &t.label);
        for l in all_ground.chain(align.event_map.values()) {
            let next = labels.len() as u32;
            labels.entry(l.clone()).or_insert(next);
        }
        let inverse: HashMap<&str, &str> = align
            .legal_map
            .iter()
            .map(|(c, g)| (g.as_str(), c.as_str()))
            .collect();
        let slots = ground
            .legal_places()
            .map(|(gi, p)| {
                let ci = inverse.get(p.id.as_str()).and_then(|c| candidate.place_index(c));
                (gi, ci)
            })
            .collect();
        let ground_effects = (0..ground.transitions().len())
            .map(|t| ground.effect(t))
            .collect();
        Matcher {
            ground,
            candidate,
            align,
            labels,
            slots,
            ground_effects,
        }
    }

    pub fn ground_net(&self) -> &PetriNet {
        self.ground
    }

    pub fn candidate_net(&self) -> &PetriNet {
        self.candidate
    }

    pub fn prepare_ground(&self, gb: &Behavior) -> PreparedGround {
        let net = self.ground;
        let mut full: Vec<i64> = net.initial_marking().tokens().iter().map(|&n| n as i64).collect();
        let mut skipped = full.clone();
        let project = |full: &[i64], skipped: &[i64]| -> (Box<[u64]>, Box<[bool]>) {
            let vals = self.slots.iter().map(|&(g, _)| full[g].max(0) as u64).collect();
            let ex = self.slots.iter().map(|&(g, _)| full[g] != skipped[g]).collect();
            (vals, ex)
        };
        let (v0, e0) = project(&full, &skipped);
        let mut legal_after = vec![v0];
        let mut exempt_after = vec![e0];
        let mut labels = Vec::with_capacity(gb.len());
        let mut temporal = Vec::with_capacity(gb.len());
        for e in &gb.events {
            labels.push(self.intern(&e.label));
            temporal.push(e.temporal);
            if let Some(t) = net.transition_index(&e.transition) {
                for &(p, d) in &self.ground_effects[t] {
                    full[p] += d;
                    if !e.temporal {
                        skipped[p] += d;
                    }
                }
            }
            let (v, x) = project(&full, &skipped);
            legal_after.push(v);
            exempt_after.push(x);
        }
        PreparedGround {
            labels,
            temporal,
            legal_after,
            exempt_after,
        }
    }

    pub fn prepare_candidate(&self, cb: &Behavior) -> PreparedCandidate {
        let items = cb
            .events
            .iter()
            .enumerate()
            .filter_map(|(i, e)| match self.align.role(&e.label) {
                EventRole::Mapped(g) => Some((Item::Mapped(self.labels[g]), i)),
                EventRole::Irrelevant => None,
                EventRole::Unmapped => Some((Item::Unmapped, i)),
            })
            .collect();
        let m = cb.final_marking.tokens();
        let legal_final = self
            .slots
            .iter()
            .map(|&(_, c)| c.and_then(|c| m.get(c).copied()).unwrap_or(0))
            .collect();
        PreparedCandidate { items, legal_final }
    }

    fn intern(&self, label: &EventLabel) -> u32 {
        // Every ground label is interned in new(); anything else never matches.
        self.labels.get(label).copied().unwrap_or(u32::MAX)
    }

    fn states_agree(ground: &[u64], exempt: &[bool], candidate: &[u64]) -> bool {
        ground
            .iter()
            .zip(exempt)
            .zip(candidate)
            .all(|((g, &x), c)| x || g == c)
    }

    /// Whether the final legal states of the two behaviors agree.
    pub fn ends_agree(&self, gb: &PreparedGround, cb: &PreparedCandidate) -> bool {
        let (vals, ex) = gb.final_state();
        Self::states_agree(vals, ex, &cb.legal_final)
    }

    pub fn strict(&self, gb: &PreparedGround, cb: &PreparedCandidate) -> MatchResult {
        let n = cb.items.len();
        // reach[i][j]: the first i ground events can be realized by exactly
        // the first j relevant candidate events.
        let mut reach: Vec<Vec<bool>> = Vec::with_capacity(gb.len() + 1);
        let mut first = vec![false; n + 1];
        first[0] = true;
        reach.push(first);
        let mut run_end = vec![0usize; n + 1];
        for (&label, &temporal) in gb.labels.iter().zip(&gb.temporal) {
            Self::fill_run_end(&cb.items, label, &mut run_end);
            let prev = reach.last().expect("seeded above");
            let mut next = vec![false; n + 1];
            let mut best: Option<usize> = None;
            for j in 0..=n {
                if best.is_some_and(|b| b >= j) {
                    next[j] = true;
                }
                if temporal && prev[j] {
                    next[j] = true;
                }
                if prev[j] {
                    best = Some(best.map_or(run_end[j], |b| b.max(run_end[j])));
                }
            }
            reach.push(next);
        }

        let Some(end) = reach.last().and_then(|r| r.iter().rposition(|&b| b)) else {
            return MatchResult::Mismatch(self.strict_failure(gb, cb));
        };
        if !self.ends_agree(gb, cb) {
            return MatchResult::Mismatch(MismatchReason::LegalStateMismatch);
        }

        // Walk back through the layers, preferring the shortest block.
        let mut blocks = Vec::new();
        let mut j = end;
        for i in (0..gb.len()).rev() {
            Self::fill_run_end(&cb.items, gb.labels[i], &mut run_end);
            let prev = &reach[i];
            let start = if gb.temporal[i] && prev[j] {
                j
            } else {
                (0..j)
                    .rev()
                    .find(|&s| prev[s] && run_end[s] >= j)
                    .expect("layer i+1 was derived from layer i")
            };
            if start < j {
                blocks.push(BlockMatch {
                    ground_event: i,
                    candidate_start: cb.items[start].1,
                    candidate_end: cb.items[j - 1].1 + 1,
                });
            }
            j = start;
        }
        blocks.reverse();
        MatchResult::Matched(Witness { blocks })
    }

    /// run_end[j] = largest k such that items[j..k] all map to `label`.
    fn fill_run_end(items: &[(Item, usize)], label: u32, run_end: &mut [usize]) {
        let n = items.len();
        run_end[n] = n;
        for j in (0..n).rev() {
            run_end[j] = if items[j].0 == Item::Mapped(label) {
                run_end[j + 1]
            } else {
                j
            };
        }
    }

    fn strict_failure(&self, gb: &PreparedGround, cb: &PreparedCandidate) -> MismatchReason {
        let required: Vec<u32> = gb
            .labels
            .iter()
            .zip(&gb.temporal)
            .filter(|(_, &t)| !t)
            .map(|(&l, _)| l)
            .collect();
        let mapped: Vec<u32> = cb
            .items
            .iter()
            .filter_map(|(i, _)| match i {
                Item::Mapped(l) => Some(*l),
                Item::Unmapped => None,
            })
            .collect();
        if required.iter().any(|l| !mapped.contains(l)) {
            MismatchReason::MissingEvent
        } else if !is_subsequence(&required, &mapped) {
            MismatchReason::OrderViolation
        } else {
            MismatchReason::ExtraEvent
        }
    }

    pub fn covering(&self, gb: &PreparedGround, cb: &PreparedCandidate) -> MatchResult {
        if !self.ends_agree(gb, cb) {
            return MatchResult::Mismatch(MismatchReason::LegalStateMismatch);
        }
        MatchResult::Matched(self.partial_witness(gb, cb))
    }

    /// Longest order-preserving pairing of ground events with candidate events.
    pub fn partial_witness(&self, gb: &PreparedGround, cb: &PreparedCandidate) -> Witness {
        let (g, c) = (gb.len(), cb.items.len());
        let mut table = vec![0u32; (g + 1) * (c + 1)];
        let at = |i: usize, j: usize| i * (c + 1) + j;
        for i in (0..g).rev() {
            for j in (0..c).rev() {
                table[at(i, j)] = if cb.items[j].0 == Item::Mapped(gb.labels[i]) {
                    table[at(i + 1, j + 1)] + 1
                } else {
                    table[at(i + 1, j)].max(table[at(i, j + 1)])
                };
            }
        }
        let mut blocks = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < g && j < c {
            if cb.items[j].0 == Item::Mapped(gb.labels[i]) {
                blocks.push(BlockMatch {
                    ground_event: i,
                    candidate_start: cb.items[j].1,
                    candidate_end: cb.items[j].1 + 1,
                });
                i += 1;
                j += 1;
            } else if table[at(i + 1, j)] >= table[at(i, j + 1)] {
                i += 1;
            } else {
                j += 1;
            }
        }
        Witness { blocks }
    }

    pub fn embedding(&self, cb: &PreparedCandidate, gb: &PreparedGround) -> MatchResult {
        // Runs of equal mapped labels, as (label, first item, last item).
        let mut runs: Vec<(u32, usize, usize)> = Vec::new();
        for (k, &(item, _)) in cb.items.iter().enumerate() {
            let Item::Mapped(l) = item else {
                return MatchResult::Mismatch(MismatchReason::UnmappedEvent);
            };
            match runs.last_mut() {
                Some(run) if run.0 == l => run.2 = k,
                _ => runs.push((l, k, k)),
            }
        }

        let Some((&(last, _, _), init)) = runs.split_last() else {
            let (vals, ex) = (&gb.legal_after[0], &gb.exempt_after[0]);
            return if Self::states_agree(vals, ex, &cb.legal_final) {
                MatchResult::Matched(Witness::default())
            } else {
                MatchResult::Mismatch(MismatchReason::LegalStateMismatch)
            };
        };

        let mut positions = Vec::with_capacity(runs.len());
        let mut from = 0;
        for &(l, _, _) in init {
            match gb.labels[from..].iter().position(|&g| g == l) {
                Some(k) => {
                    positions.push(from + k);
                    from += k + 1;
                }
                None => return MatchResult::Mismatch(MismatchReason::OrderViolation),
            }
        }
        let mut feasible = (from..gb.len()).filter(|&k| gb.labels[k] == last).peekable();
        if feasible.peek().is_none() {
            return MatchResult::Mismatch(MismatchReason::OrderViolation);
        }
        for k in feasible {
            let (vals, ex) = (&gb.legal_after[k + 1], &gb.exempt_after[k + 1]);
            if Self::states_agree(vals, ex, &cb.legal_final) {
                positions.push(k);
                let blocks = runs
                    .iter()
                    .zip(&positions)
                    .map(|(&(_, a, b), &g)| BlockMatch {
                        ground_event: g,
                        candidate_start: cb.items[a].1,
                        candidate_end: cb.items[b].1 + 1,
                    })
                    .collect();
                return MatchResult::Matched(Witness { blocks });
            }
        }
        MatchResult::Mismatch(MismatchReason::LegalStateMismatch)
    }
}

fn is_subsequence(needle: &[u32], hay: &[u32]) -> bool {
    let mut it = hay.iter();
    needle.iter().all(|n| it.any(|h| h == n))
}

/// Strict event equivalence of `cb` to `gb` plus legal equivalence of their
/// end states.
pub fn strict_match(
    gb: &Behavior,
    cb: &Behavior,
    align: &EventAlignment,
    ground: &PetriNet,
    candidate: &PetriNet,
) -> MatchResult {
    let m = Matcher::new(ground, candidate, align);
    m.strict(&m.prepare_ground(gb), &m.prepare_candidate(cb))
}

/// Non-strict equivalence: any order-preserving partial event mapping (the
/// witness is the longest one) plus legal equivalence of the end states.
pub fn covering_match(
    gb: &Behavior,
    cb: &Behavior,
    align: &EventAlignment,
    ground: &PetriNet,
    candidate: &PetriNet,
) -> MatchResult {
    let m = Matcher::new(ground, candidate, align);
    m.covering(&m.prepare_ground(gb), &m.prepare_candidate(cb))
}

/// Whether `cb` is an order-preserving subsequence of `gb` that stops in
/// the legal state `gb` has after its last embedded event.
pub fn embedding_match(
    cb: &Behavior,
    gb: &Behavior,
    align: &EventAlignment,
    ground: &PetriNet,
    candidate: &PetriNet,
) -> MatchResult {
    let m = Matcher::new(ground, candidate, align);
    m.embedding(&m.prepare_candidate(cb), &m.prepare_ground(gb))
}

/// Whether the mapped ground-event sequence of `behavior` contains any of the
/// alignment's illegal sequences contiguously.
pub fn is_illegal(behavior: &Behavior, align: &EventAlignment) -> bool {
    if align.illegal_sequences.is_empty() {
        return false;
    }
    let mapped: Vec<&EventLabel> = align.mapped_sequence(behavior).collect();
    align.illegal_sequences.iter().any(|seq| {
        !seq.is_empty()
            && mapped
                .windows(seq.len())
                .any(|w| w.iter().zip(seq).all(|(a, b)| *a == b))
    })
}

/// Splits candidate behaviors into those kept and those containing an
/// illegal sequence. Order is preserved in both halves.
pub fn prune_illegal(behaviors: &BehaviorSet, align: &EventAlignment) -> (BehaviorSet, BehaviorSet) {
    let (pruned, kept): (Vec<Behavior>, Vec<Behavior>) = behaviors
        .behaviors
        .iter()
        .cloned()
        .partition(|b| is_illegal(b, align));
    (
        BehaviorSet::new(behaviors.source_net.clone(), kept),
        BehaviorSet::new(behaviors.source_net.clone(), pruned),
    )
}
