//! Petri-net conformance checking for smart-contract legal compliance.
//!
//! A ground-truth net models what a legal agreement permits; a candidate net
//! models what a contract implementation does. Both are explored into
//! behaviors (maximal firing sequences) and compared through an event and
//! legal-state alignment, yielding fitness, precision and the functional
//! equivalence score (FES).

pub mod align;
pub mod corpus;
pub mod diag;
pub mod gen;
pub mod io;
pub mod metrics;
pub mod net;
pub mod reach;

pub use align::{
    covering_match, embedding_match, legal_equivalent, legal_state, prune_illegal, strict_match,
    temporal_exemptions, validate_alignment, EventAlignment, LegalState, MatchResult, Matcher,
    MismatchReason, Witness,
};
pub use diag::{Diagnostic, Severity, Span};
pub use metrics::{
    compare, evaluate, fes, fitness, precision, CompareOptions, ComplianceReport, Counts, MetricsError,
    MetricsTriple, Ratio,
};
pub use net::{
    enabled_transitions, fire, insert_loop_controls, validate_net, Arc, EventLabel, LegalKind, Marking,
    PetriNet, Place, PlaceId, Transition, TransitionId,
};
pub use reach::{
    build_reachability_graph, enumerate_behaviors, find_dead_transitions, Behavior, BehaviorSet, Event,
    ExplorationLimits, ReachError, ReachabilityGraph,
};
