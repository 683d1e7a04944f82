//! Place/transition nets with inhibitor and bidirectional arcs, and the
//! token-game firing rule.
//!
//! A [`PetriNet`] is immutable once built. Places and transitions are kept
//! sorted by identifier, which gives every derived artifact (markings,
//! enabled-transition lists, reachability graphs) a canonical order.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc as Shared;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::diag::Diagnostic;

macro_rules! id_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(Shared<str>);

        impl $name {
            pub fn new(id: &str) -> Self {
                $name(Shared::from(id))
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                fmt::Debug::fmt(&*self.0, f)
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(id: &str) -> Self {
                $name::new(id)
            }
        }

        impl From<String> for $name {
            fn from(id: String) -> Self {
                $name(Shared::from(id))
            }
        }

        impl std::ops::Deref for $name {
            type Target = str;
            fn deref(&self) -> &str {
                &self.0
            }
        }

        impl std::borrow::Borrow<str> for $name {
            fn borrow(&self) -> &str {
                &self.0
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
                serializer.serialize_str(&self.0)
            }
        }
    };
}

id_type!(
    /// Identifier of a place.
    PlaceId
);
id_type!(
    /// Identifier of a transition.
    TransitionId
);

/// The legally meaningful name of an event: who does what.
///
/// Two labels are equal only when both actor and action agree; the same
/// action performed by a different party is a different event.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EventLabel {
    pub actor: Shared<str>,
    pub action: Shared<str>,
}

impl EventLabel {
    pub fn new(actor: &str, action: &str) -> Self {
        EventLabel {
            actor: Shared::from(actor),
            action: Shared::from(action),
        }
    }
}

impl fmt::Display for EventLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.actor, self.action)
    }
}

impl fmt::Debug for EventLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl Serialize for EventLabel {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("event label `{0}` must have the form actor:action")]
pub struct LabelParseError(pub String);

impl FromStr for EventLabel {
    type Err = LabelParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once(':') {
            Some((actor, action)) if is_identifier(actor) && is_identifier(action) => {
                Ok(EventLabel::new(actor, action))
            }
            _ => Err(LabelParseError(s.to_string())),
        }
    }
}

/// Identifier syntax shared by nets and alignments: a letter or underscore
/// followed by letters, digits, `_`, `.` or `-`.
pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '-'))
}

/// Legal annotation of a place.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LegalKind {
    #[default]
    None,
    Power,
    Obligation,
}

impl LegalKind {
    pub fn is_legal(self) -> bool {
        self != LegalKind::None
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LegalKind::None => "none",
            LegalKind::Power => "power",
            LegalKind::Obligation => "obligation",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Place {
    pub id: PlaceId,
    pub initial_tokens: u64,
    pub legal: LegalKind,
    /// Loop-control place: flags the first firing of a self-looping transition.
    pub lcp: bool,
}

impl Place {
    pub fn new(id: impl Into<PlaceId>, initial_tokens: u64) -> Self {
        Place {
            id: id.into(),
            initial_tokens,
            legal: LegalKind::None,
            lcp: false,
        }
    }

    pub fn legal(mut self, kind: LegalKind) -> Self {
        self.legal = kind;
        self
    }

    pub fn loop_control(mut self) -> Self {
        self.lcp = true;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Transition {
    pub id: TransitionId,
    pub label: EventLabel,
    /// Passage-of-time event. Fires like any other transition; only the
    /// behavior matchers treat it differently.
    pub temporal: bool,
}

impl Transition {
    pub fn new(id: impl Into<TransitionId>, actor: &str, action: &str) -> Self {
        Transition {
            id: id.into(),
            label: EventLabel::new(actor, action),
            temporal: false,
        }
    }

    pub fn temporal(mut self) -> Self {
        self.temporal = true;
        self
    }
}

/// An arc of the net. Endpoints are identifiers; whether they resolve to the
/// right kind of node is checked by [`validate_net`].
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Arc {
    /// Place → transition (input) or transition → place (output).
    Normal { from: Shared<str>, to: Shared<str> },
    /// Disables `transition` while `place` holds a token.
    Inhibitor {
        place: PlaceId,
        transition: TransitionId,
    },
    /// Shorthand for one input and one output arc between the same pair.
    Bidirectional {
        place: PlaceId,
        transition: TransitionId,
    },
}

impl Arc {
    pub fn input(place: &str, transition: &str) -> Self {
        Arc::Normal {
            from: Shared::from(place),
            to: Shared::from(transition),
        }
    }

    pub fn output(transition: &str, place: &str) -> Self {
        Arc::Normal {
            from: Shared::from(transition),
            to: Shared::from(place),
        }
    }

    pub fn inhibitor(place: &str, transition: &str) -> Self {
        Arc::Inhibitor {
            place: place.into(),
            transition: transition.into(),
        }
    }

    pub fn bidirectional(place: &str, transition: &str) -> Self {
        Arc::Bidirectional {
            place: place.into(),
            transition: transition.into(),
        }
    }

    /// Endpoints in written order.
    pub fn endpoints(&self) -> (&str, &str) {
        match self {
            Arc::Normal { from, to } => (from, to),
            Arc::Inhibitor { place, transition } | Arc::Bidirectional { place, transition } => {
                (place, transition)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NetError {
    #[error("place `{0}` does not exist in net `{1}`")]
    UnknownPlace(String, String),
    #[error("transition `{0}` does not exist in net `{1}`")]
    UnknownTransition(String, String),
    #[error("marking has {found} entries but net `{net}` has {expected} places")]
    MarkingMismatch {
        net: String,
        expected: usize,
        found: usize,
    },
    #[error("transition `{0}` is not enabled")]
    NotEnabled(String),
}

/// Token counts for every place of one net, in the net's place order.
///
/// Equality, hashing and ordering are by value. A marking is only meaningful
/// together with the net that produced it.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Marking(Box<[u64]>);

impl Marking {
    pub fn tokens(&self) -> &[u64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Total number of tokens.
    pub fn weight(&self) -> u64 {
        self.0.iter().sum()
    }
}

impl fmt::Debug for Marking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.0.iter()).finish()
    }
}

/// Resolved arc structure, one entry per transition.
#[derive(Debug, Clone, Default)]
struct Index {
    place_pos: HashMap<Shared<str>, usize>,
    transition_pos: HashMap<Shared<str>, usize>,
    /// (place index, multiplicity), sorted by place index.
    pre: Vec<Vec<(usize, u64)>>,
    post: Vec<Vec<(usize, u64)>>,
    inhibitors: Vec<Vec<usize>>,
}

#[derive(Clone)]
pub struct PetriNet {
    name: String,
    places: Vec<Place>,
    transitions: Vec<Transition>,
    arcs: Vec<Arc>,
    index: Index,
}

impl PartialEq for PetriNet {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.places == other.places
            && self.transitions == other.transitions
            && self.arcs == other.arcs
    }
}

impl Eq for PetriNet {}

impl fmt::Debug for PetriNet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PetriNet")
            .field("name", &self.name)
            .field("places", &self.places)
            .field("transitions", &self.transitions)
            .field("arcs", &self.arcs)
            .finish()
    }
}

impl PetriNet {
    /// Builds a net, sorting places, transitions and arcs into canonical
    /// order. Structural problems are not rejected here; see [`validate_net`].
    pub fn new(
        name: impl Into<String>,
        mut places: Vec<Place>,
        mut transitions: Vec<Transition>,
        mut arcs: Vec<Arc>,
    ) -> Self {
        places.sort_by(|a, b| a.id.cmp(&b.id));
        transitions.sort_by(|a, b| a.id.cmp(&b.id));
        arcs.sort();
        let index = Index::build(&places, &transitions, &arcs);
        PetriNet {
            name: name.into(),
            places,
            transitions,
            arcs,
            index,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn places(&self) -> &[Place] {
        &self.places
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn with_name(&self, name: impl Into<String>) -> Self {
        let mut net = self.clone();
        net.name = name.into();
        net
    }

    pub fn place_index(&self, id: &str) -> Option<usize> {
        self.index.place_pos.get(id).copied()
    }

    pub fn transition_index(&self, id: &str) -> Option<usize> {
        self.index.transition_pos.get(id).copied()
    }

    pub fn place(&self, id: &str) -> Option<&Place> {
        self.place_index(id).map(|i| &self.places[i])
    }

    pub fn transition(&self, id: &str) -> Option<&Transition> {
        self.transition_index(id).map(|i| &self.transitions[i])
    }

    /// Places carrying a power or obligation annotation, in id order.
    pub fn legal_places(&self) -> impl Iterator<Item = (usize, &Place)> {
        self.places.iter().enumerate().filter(|(_, p)| p.legal.is_legal())
    }

    /// Input places of transition `t` with multiplicities.
    pub fn preset(&self, t: usize) -> &[(usize, u64)] {
        &self.index.pre[t]
    }

    pub fn postset(&self, t: usize) -> &[(usize, u64)] {
        &self.index.post[t]
    }

    pub fn inhibitors(&self, t: usize) -> &[usize] {
        &self.index.inhibitors[t]
    }

    /// Net token change per place caused by firing transition `t`.
    pub fn effect(&self, t: usize) -> Vec<(usize, i64)> {
        let mut delta: BTreeMap<usize, i64> = BTreeMap::new();
        for &(p, n) in &self.index.pre[t] {
            *delta.entry(p).or_default() -= n as i64;
        }
        for &(p, n) in &self.index.post[t] {
            *delta.entry(p).or_default() += n as i64;
        }
        delta.into_iter().filter(|&(_, d)| d != 0).collect()
    }

    pub fn initial_marking(&self) -> Marking {
        Marking(self.places.iter().map(|p| p.initial_tokens).collect())
    }

    /// Builds a marking from `(place, tokens)` pairs; absent places hold zero.
    pub fn marking<'a, I>(&self, tokens: I) -> Result<Marking, NetError>
    where
        I: IntoIterator<Item = (&'a str, u64)>,
    {
        let mut counts = vec![0u64; self.places.len()];
        for (id, n) in tokens {
            let i = self
                .place_index(id)
                .ok_or_else(|| NetError::UnknownPlace(id.to_string(), self.name.clone()))?;
            counts[i] = n;
        }
        Ok(Marking(counts.into_boxed_slice()))
    }

    /// Tokens on place `id` in `m`.
    pub fn tokens(&self, m: &Marking, id: &str) -> Option<u64> {
        self.place_index(id).and_then(|i| m.0.get(i).copied())
    }

    /// Marked places only, keyed by id.
    pub fn marking_map(&self, m: &Marking) -> BTreeMap<PlaceId, u64> {
        self.places
            .iter()
            .zip(m.0.iter())
            .filter(|(_, &n)| n > 0)
            .map(|(p, &n)| (p.id.clone(), n))
            .collect()
    }

    /// `{p:1, q:2}` rendering of the marked places.
    pub fn format_marking(&self, m: &Marking) -> String {
        let body: Vec<String> = self
            .marking_map(m)
            .into_iter()
            .map(|(p, n)| format!("{p}:{n}"))
            .collect();
        format!("{{{}}}", body.join(", "))
    }

    fn check_marking(&self, m: &Marking) -> Result<(), NetError> {
        if m.len() != self.places.len() {
            return Err(NetError::MarkingMismatch {
                net: self.name.clone(),
                expected: self.places.len(),
                found: m.len(),
            });
        }
        Ok(())
    }

    /// Whether transition index `t` may fire in `m`. `m` must belong to this net.
    pub fn is_enabled(&self, m: &Marking, t: usize) -> bool {
        self.index.pre[t].iter().all(|&(p, n)| m.0[p] >= n)
            && self.index.inhibitors[t].iter().all(|&p| m.0[p] == 0)
    }

    /// Indices of the enabled transitions, in transition-id order.
    pub fn enabled_indices<'a>(&'a self, m: &'a Marking) -> impl Iterator<Item = usize> + 'a {
        (0..self.transitions.len()).filter(move |&t| self.is_enabled(m, t))
    }

    /// Fires transition index `t` without checking that it is enabled.
    pub fn fire_unchecked(&self, m: &Marking, t: usize) -> Marking {
        let mut next = m.0.clone();
        for &(p, n) in &self.index.pre[t] {
            next[p] -= n;
        }
        for &(p, n) in &self.index.post[t] {
            next[p] += n;
        }
        Marking(next)
    }
}

impl Index {
    fn build(places: &[Place], transitions: &[Transition], arcs: &[Arc]) -> Self {
        let mut index = Index {
            pre: vec![Vec::new(); transitions.len()],
            post: vec![Vec::new(); transitions.len()],
            inhibitors: vec![Vec::new(); transitions.len()],
            ..Index::default()
        };
        for (i, p) in places.iter().enumerate() {
            index.place_pos.entry(p.id.0.clone()).or_insert(i);
        }
        for (i, t) in transitions.iter().enumerate() {
            index.transition_pos.entry(t.id.0.clone()).or_insert(i);
        }
        let mut pre: Vec<BTreeMap<usize, u64>> = vec![BTreeMap::new(); transitions.len()];
        let mut post: Vec<BTreeMap<usize, u64>> = vec![BTreeMap::new(); transitions.len()];
        let mut inhibitors: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); transitions.len()];
        for arc in arcs {
            // Malformed arcs are skipped here and reported by validate_net.
            match arc {
                Arc::Normal { from, to } => {
                    if let (Some(&p), Some(&t)) = (index.place_pos.get(from), index.transition_pos.get(to)) {
                        *pre[t].entry(p).or_default() += 1;
                    } else if let (Some(&t), Some(&p)) =
                        (index.transition_pos.get(from), index.place_pos.get(to))
                    {
                        *post[t].entry(p).or_default() += 1;
                    }
                }
                Arc::Inhibitor { place, transition } => {
                    if let (Some(&p), Some(&t)) = (
                        index.place_pos.get(&place.0),
                        index.transition_pos.get(&transition.0),
                    ) {
                        inhibitors[t].insert(p);
                    }
                }
                Arc::Bidirectional { place, transition } => {
                    if let (Some(&p), Some(&t)) = (
                        index.place_pos.get(&place.0),
                        index.transition_pos.get(&transition.0),
                    ) {
                        *pre[t].entry(p).or_default() += 1;
                        *post[t].entry(p).or_default() += 1;
                    }
                }
            }
        }
        index.pre = pre.into_iter().map(|m| m.into_iter().collect()).collect();
        index.post = post.into_iter().map(|m| m.into_iter().collect()).collect();
        index.inhibitors = inhibitors.into_iter().map(|s| s.into_iter().collect()).collect();
        index
    }
}

/// Checks every structural invariant of `net`. An empty result means the net
/// is well formed.
pub fn validate_net(net: &PetriNet) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut seen: HashMap<&str, &'static str> = HashMap::new();

    for p in &net.places {
        if p.id.is_empty() {
            out.push(Diagnostic::error("E_EMPTY_ID", "place with an empty identifier"));
        } else if seen.insert(&p.id, "place").is_some() {
            out.push(
                Diagnostic::error("E_DUP_ID", format!("identifier `{}` is declared twice", p.id))
                    .with_subject(p.id.as_str()),
            );
        }
        if p.lcp && p.initial_tokens > 0 {
            out.push(
                Diagnostic::error(
                    "E_LCP_TOKENS",
                    format!("loop-control place `{}` must start empty", p.id),
                )
                .with_subject(p.id.as_str()),
            );
        }
        if p.lcp && p.legal.is_legal() {
            out.push(
                Diagnostic::error(
                    "E_LCP_LEGAL",
                    format!("loop-control place `{}` cannot carry a legal position", p.id),
                )
                .with_subject(p.id.as_str()),
            );
        }
    }
    for t in &net.transitions {
        if t.id.is_empty() || t.label.actor.is_empty() || t.label.action.is_empty() {
            out.push(
                Diagnostic::error("E_EMPTY_ID", "transition with an empty identifier or label")
                    .with_subject(t.id.as_str()),
            );
        } else if seen.insert(&t.id, "transition").is_some() {
            out.push(
                Diagnostic::error("E_DUP_ID", format!("identifier `{}` is declared twice", t.id))
                    .with_subject(t.id.as_str()),
            );
        }
    }

    let is_place = |id: &str| net.index.place_pos.contains_key(id);
    let is_transition = |id: &str| net.index.transition_pos.contains_key(id);
    for arc in &net.arcs {
        let (a, b) = arc.endpoints();
        let subject = format!("{a} -> {b}");
        for id in [a, b] {
            if !is_place(id) && !is_transition(id) {
                out.push(
                    Diagnostic::error("E_ARC_UNKNOWN", format!("arc endpoint `{id}` is not declared"))
                        .with_subject(subject.clone()),
                );
            }
        }
        if !(is_place(a) || is_transition(a)) || !(is_place(b) || is_transition(b)) {
            continue;
        }
        let well_formed = match arc {
            Arc::Normal { .. } => (is_place(a) && is_transition(b)) || (is_transition(a) && is_place(b)),
            Arc::Inhibitor { .. } | Arc::Bidirectional { .. } => is_place(a) && is_transition(b),
        };
        if !well_formed {
            out.push(
                Diagnostic::error(
                    "E_ARC_ENDPOINTS",
                    format!("arc `{subject}` must connect a place and a transition"),
                )
                .with_subject(subject),
            );
        }
    }

    if !net.places.iter().any(|p| p.initial_tokens > 0) {
        out.push(
            Diagnostic::error("E_NO_INITIAL_TOKENS", "no place holds a token initially")
                .with_subject(net.name.clone()),
        );
    }
    out
}

/// Enabled transitions of `net` in marking `m`, sorted by transition id.
///
/// A transition is enabled when every input place holds at least as many
/// tokens as it has input arcs from that place and every inhibiting place is
/// empty.
pub fn enabled_transitions(net: &PetriNet, m: &Marking) -> Result<Vec<TransitionId>, NetError> {
    net.check_marking(m)?;
    Ok(net
        .enabled_indices(m)
        .map(|t| net.transitions[t].id.clone())
        .collect())
}

/// Fires `t` in `m` and returns the successor marking. `m` is not modified.
pub fn fire(net: &PetriNet, m: &Marking, t: &str) -> Result<Marking, NetError> {
    net.check_marking(m)?;
    let ti = net
        .transition_index(t)
        .ok_or_else(|| NetError::UnknownTransition(t.to_string(), net.name.clone()))?;
    if !net.is_enabled(m, ti) {
        return Err(NetError::NotEnabled(t.to_string()));
    }
    Ok(net.fire_unchecked(m, ti))
}

/// Adds a loop-control place to every transition that has a self-loop on
/// some place and no loop-control place yet.
///
/// The new place `lcp_<transition>` starts empty, receives a token when the
/// transition fires and inhibits it from then on, so the transition fires at
/// most once on any path. Applying the transform twice is the same as
/// applying it once.
pub fn insert_loop_controls(net: &PetriNet) -> PetriNet {
    let mut places = net.places.clone();
    let mut arcs = net.arcs.clone();
    let mut taken: BTreeSet<String> = net
        .places
        .iter()
        .map(|p| p.id.to_string())
        .chain(net.transitions.iter().map(|t| t.id.to_string()))
        .collect();

    for (ti, t) in net.transitions.iter().enumerate() {
        let self_loop = net.index.pre[ti]
            .iter()
            .any(|&(p, n)| net.index.post[ti].iter().any(|&(q, m)| q == p && m == n));
        if !self_loop || has_loop_control(net, ti) {
            continue;
        }
        let base = format!("lcp_{}", t.id);
        let mut id = base.clone();
        let mut suffix = 1;
        while taken.contains(&id) {
            suffix += 1;
            id = format!("{base}_{suffix}");
        }
        taken.insert(id.clone());
        places.push(Place::new(id.as_str(), 0).loop_control());
        arcs.push(Arc::output(&t.id, &id));
        arcs.push(Arc::inhibitor(&id, &t.id));
    }
    PetriNet::new(net.name.clone(), places, net.transitions.clone(), arcs)
}

fn has_loop_control(net: &PetriNet, t: usize) -> bool {
    net.index.inhibitors[t]
        .iter()
        .any(|&q| net.places[q].lcp && net.index.post[t].iter().any(|&(p, _)| p == q))
}
