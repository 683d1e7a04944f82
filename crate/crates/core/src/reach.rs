//! Reachability graphs and behavior enumeration.
//!
//! A behavior is a simple path in the reachability graph from the initial
//! marking to a dead marking. Prefixes are not behaviors, and paths that can
//! only continue by revisiting a marking are dropped; a net whose graph has
//! no dead marking at all is refused with [`ReachError::NoTerminalMarkings`].

use std::collections::{BTreeSet, HashMap, VecDeque};

use thiserror::Error;

use crate::diag::Diagnostic;
use crate::net::{validate_net, EventLabel, Marking, PetriNet, TransitionId};

/// Bounds on exploration. All three must be positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct ExplorationLimits {
    pub max_states: usize,
    pub max_paths: usize,
    pub max_depth: usize,
}

impl Default for ExplorationLimits {
    fn default() -> Self {
        ExplorationLimits {
            max_states: 100_000,
            max_paths: 100_000,
            max_depth: 10_000,
        }
    }
}

impl ExplorationLimits {
    pub fn check(&self) -> Result<(), ReachError> {
        for (name, v) in [
            ("max_states", self.max_states),
            ("max_paths", self.max_paths),
            ("max_depth", self.max_depth),
        ] {
            if v == 0 {
                return Err(ReachError::InvalidLimits(name));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReachError {
    #[error("net `{net}` is not well formed ({} error(s))", .diagnostics.len())]
    InvalidNet {
        net: String,
        diagnostics: Vec<Diagnostic>,
    },
    #[error("state explosion in net `{net}`: more than {limit} reachable markings")]
    StateExplosion { net: String, limit: usize },
    #[error("path explosion in net `{net}`: more than {limit} behaviors")]
    PathExplosion { net: String, limit: usize },
    #[error(
        "net `{net}` has no dead marking, so it has no behaviors; \
         self-looping transitions may need loop-control places (try --lcp-auto)"
    )]
    NoTerminalMarkings { net: String },
    #[error("exploration limit `{0}` must be positive")]
    InvalidLimits(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub source: usize,
    /// Index into the net's transition list.
    pub transition: usize,
    pub target: usize,
}

/// All markings reachable from the initial marking, connected by firings.
///
/// Node 0 is the initial marking. Nodes are numbered in breadth-first
/// discovery order and each node's outgoing edges are in transition-id
/// order, so two builds from the same net are identical.
#[derive(Debug, Clone)]
pub struct ReachabilityGraph {
    net: PetriNet,
    nodes: Vec<Marking>,
    edges: Vec<Edge>,
    /// Outgoing edge indices per node.
    out: Vec<Vec<usize>>,
}

impl ReachabilityGraph {
    pub fn net(&self) -> &PetriNet {
        &self.net
    }

    pub fn root(&self) -> &Marking {
        &self.nodes[0]
    }

    pub fn nodes(&self) -> &[Marking] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn outgoing(&self, node: usize) -> impl Iterator<Item = &Edge> {
        self.out[node].iter().map(move |&e| &self.edges[e])
    }

    pub fn node_index(&self, m: &Marking) -> Option<usize> {
        self.nodes.iter().position(|n| n == m)
    }

    pub fn is_terminal(&self, node: usize) -> bool {
        self.out[node].is_empty()
    }

    /// Dead markings, as node indices.
    pub fn terminals(&self) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&n| self.is_terminal(n)).collect()
    }

    pub fn edge_transition(&self, e: &Edge) -> &TransitionId {
        &self.net.transitions()[e.transition].id
    }

    pub fn edge_label(&self, e: &Edge) -> &EventLabel {
        &self.net.transitions()[e.transition].label
    }
}

/// Breadth-first construction of the reachability graph of `net`.
pub fn build_reachability_graph(
    net: &PetriNet,
    limits: &ExplorationLimits,
) -> Result<ReachabilityGraph, ReachError> {
    limits.check()?;
    let diagnostics: Vec<Diagnostic> = validate_net(net).into_iter().filter(|d| d.is_error()).collect();
    if !diagnostics.is_empty() {
        return Err(ReachError::InvalidNet {
            net: net.name().to_string(),
            diagnostics,
        });
    }

    let root = net.initial_marking();
    let mut seen: HashMap<Marking, usize> = HashMap::from([(root.clone(), 0)]);
    let mut nodes = vec![root];
    let mut edges = Vec::new();
    let mut out: Vec<Vec<usize>> = vec![Vec::new()];
    let mut queue = VecDeque::from([0usize]);

    while let Some(source) = queue.pop_front() {
        let enabled: Vec<usize> = net.enabled_indices(&nodes[source]).collect();
        for t in enabled {
            let next = net.fire_unchecked(&nodes[source], t);
            let target = match seen.get(&next) {
                Some(&i) => i,
                None => {
                    if nodes.len() >= limits.max_states {
                        return Err(ReachError::StateExplosion {
                            net: net.name().to_string(),
                            limit: limits.max_states,
                        });
                    }
                    let i = nodes.len();
                    seen.insert(next.clone(), i);
                    nodes.push(next);
                    out.push(Vec::new());
                    queue.push_back(i);
                    i
                }
            };
            out[source].push(edges.len());
            edges.push(Edge {
                source,
                transition: t,
                target,
            });
        }
    }

    Ok(ReachabilityGraph {
        net: net.clone(),
        nodes,
        edges,
        out,
    })
}

/// One fired transition within a behavior.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Event {
    pub transition: TransitionId,
    pub label: EventLabel,
    pub temporal: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Behavior {
    pub events: Vec<Event>,
    pub final_marking: Marking,
}

impl Behavior {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn transitions(&self) -> impl Iterator<Item = &TransitionId> {
        self.events.iter().map(|e| &e.transition)
    }

    pub fn labels(&self) -> impl Iterator<Item = &EventLabel> {
        self.events.iter().map(|e| &e.label)
    }

    /// Space-separated transition ids.
    pub fn to_path_string(&self) -> String {
        let ids: Vec<&str> = self.transitions().map(|t| t.as_str()).collect();
        ids.join(" ")
    }

    /// Replays the behavior from the initial marking of `net`, checking that
    /// each event is enabled when it occurs.
    pub fn replay(&self, net: &PetriNet) -> Result<Marking, crate::net::NetError> {
        let mut m = net.initial_marking();
        for e in &self.events {
            m = crate::net::fire(net, &m, &e.transition)?;
        }
        Ok(m)
    }
}

/// The behaviors of one net in canonical order (lexicographic by
/// transition-id sequence).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BehaviorSet {
    pub source_net: String,
    pub behaviors: Vec<Behavior>,
    /// Paths abandoned because they reached `max_depth` before a dead marking.
    pub truncated: usize,
}

impl BehaviorSet {
    pub fn new(source_net: impl Into<String>, behaviors: Vec<Behavior>) -> Self {
        BehaviorSet {
            source_net: source_net.into(),
            behaviors,
            truncated: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.behaviors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.behaviors.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Behavior> {
        self.behaviors.iter()
    }
}

/// Enumerates every simple path from the root to a dead marking.
///
/// Fails with [`ReachError::NoTerminalMarkings`] when the graph has no dead
/// marking, unless `allow_no_terminal` is set (the result is then empty).
pub fn enumerate_behaviors(
    rg: &ReachabilityGraph,
    limits: &ExplorationLimits,
    allow_no_terminal: bool,
) -> Result<BehaviorSet, ReachError> {
    limits.check()?;
    let name = rg.net.name().to_string();
    let has_terminal = (0..rg.nodes.len()).any(|n| rg.is_terminal(n));
    if !has_terminal {
        return if allow_no_terminal {
            Ok(BehaviorSet::new(name, Vec::new()))
        } else {
            Err(ReachError::NoTerminalMarkings { net: name })
        };
    }

    let transitions = rg.net.transitions();
    let mut behaviors = Vec::new();
    let mut truncated = 0usize;
    let mut on_path = vec![false; rg.nodes.len()];
    // Each frame: node and position of the next outgoing edge to try.
    let mut stack: Vec<(usize, usize)> = vec![(0, 0)];
    let mut path: Vec<usize> = Vec::new();
    on_path[0] = true;

    while let Some(&mut (node, ref mut next)) = stack.last_mut() {
        if rg.is_terminal(node) {
            if behaviors.len() >= limits.max_paths {
                return Err(ReachError::PathExplosion {
                    net: name,
                    limit: limits.max_paths,
                });
            }
            behaviors.push(Behavior {
                events: path
                    .iter()
                    .map(|&e| {
                        let t = &transitions[rg.edges[e].transition];
                        Event {
                            transition: t.id.clone(),
                            label: t.label.clone(),
                            temporal: t.temporal,
                        }
                    })
                    .collect(),
                final_marking: rg.nodes[node].clone(),
            });
        } else if path.len() >= limits.max_depth {
            truncated += 1;
        } else if let Some(&e) = rg.out[node].get(*next) {
            *next += 1;
            let target = rg.edges[e].target;
            if !on_path[target] {
                on_path[target] = true;
                path.push(e);
                stack.push((target, 0));
            }
            continue;
        }
        on_path[node] = false;
        stack.pop();
        path.pop();
    }

    Ok(BehaviorSet {
        source_net: name,
        behaviors,
        truncated,
    })
}

/// Transitions that label no edge of the reachability graph.
pub fn find_dead_transitions(net: &PetriNet, rg: &ReachabilityGraph) -> BTreeSet<TransitionId> {
    let mut fired = vec![false; net.transitions().len()];
    for e in rg.edges() {
        if let Some(f) = fired.get_mut(e.transition) {
            *f = true;
        }
    }
    net.transitions()
        .iter()
        .zip(fired)
        .filter(|(_, f)| !f)
        .map(|(t, _)| t.id.clone())
        .collect()
}
