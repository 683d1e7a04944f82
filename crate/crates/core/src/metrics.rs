//! Fitness, precision and functional equivalence score, and the compliance
//! report that records how each score was reached.
//!
//! * fitness = ground behaviors with a strict match / ground behaviors
//! * precision = candidate behaviors embedded in some ground behavior /
//!   candidate behaviors
//! * FES = ground behaviors with a covering match / ground behaviors
//!
//! Several candidate behaviors matching one ground behavior count once.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::align::{
    is_illegal, validate_alignment, EventAlignment, MatchResult, Matcher, MismatchReason, PreparedCandidate,
    PreparedGround, Witness,
};
use crate::diag::{has_errors, Diagnostic};
use crate::net::{insert_loop_controls, validate_net, PetriNet};
use crate::reach::{
    build_reachability_graph, enumerate_behaviors, BehaviorSet, ExplorationLimits, ReachError,
};

/// Version of the JSON report layout; bumped on incompatible changes.
pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// An exact fraction in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Ratio {
    pub numerator: u64,
    pub denominator: u64,
}

impl Ratio {
    /// # Panics
    /// If `denominator` is zero or smaller than `numerator`.
    pub fn new(numerator: u64, denominator: u64) -> Self {
        assert!(denominator > 0, "ratio with zero denominator");
        assert!(numerator <= denominator, "ratio above one");
        Ratio {
            numerator,
            denominator,
        }
    }

    pub fn value(self) -> f64 {
        self.numerator as f64 / self.denominator as f64
    }

    /// Decimal rendering rounded half-up to `digits` places.
    pub fn rounded(self, digits: u32) -> String {
        let scale = 10u128.pow(digits);
        let (n, d) = (self.numerator as u128, self.denominator as u128);
        let scaled = (2 * n * scale + d) / (2 * d);
        let (int, frac) = (scaled / scale, scaled % scale);
        if digits == 0 {
            int.to_string()
        } else {
            format!("{int}.{frac:0width$}", width = digits as usize)
        }
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.rounded(2))
    }
}

impl Serialize for Ratio {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("Ratio", 3)?;
        st.serialize_field("numerator", &self.numerator)?;
        st.serialize_field("denominator", &self.denominator)?;
        st.serialize_field("value", &self.value())?;
        st.end()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Counts {
    pub ground_total: u64,
    pub candidate_total: u64,
    pub ground_strictly_matched: u64,
    pub ground_covered: u64,
    pub candidate_embedded: u64,
    pub pruned: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MetricsTriple {
    pub fitness: Ratio,
    pub precision: Ratio,
    pub fes: Ratio,
    pub counts: Counts,
}

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("the ground net has no behaviors")]
    EmptyGroundSet,
    #[error("the candidate net has no behaviors to compare")]
    EmptyCandidateSet,
    #[error("net `{net}` is invalid: {}", first_error(.diagnostics))]
    InvalidNet {
        net: String,
        diagnostics: Vec<Diagnostic>,
    },
    #[error("alignment `{name}` is invalid: {}", first_error(.diagnostics))]
    InvalidAlignment {
        name: String,
        diagnostics: Vec<Diagnostic>,
    },
    #[error(transparent)]
    Reach(#[from] ReachError),
}

fn first_error(diagnostics: &[Diagnostic]) -> String {
    diagnostics
        .iter()
        .find(|d| d.is_error())
        .map(|d| d.to_string())
        .unwrap_or_default()
}

/// Knobs for [`compare`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CompareOptions {
    pub limits: ExplorationLimits,
    /// Add loop-control places to both nets before exploring them.
    pub lcp_auto: bool,
    pub allow_no_terminal: bool,
    /// Apply the alignment's illegal sequences.
    pub prune: bool,
    /// Drop pruned candidate behaviors from the precision denominator
    /// instead of counting them as non-matches.
    pub exclude_pruned: bool,
}

impl Default for CompareOptions {
    fn default() -> Self {
        CompareOptions {
            limits: ExplorationLimits::default(),
            lcp_auto: false,
            allow_no_terminal: false,
            prune: true,
            exclude_pruned: false,
        }
    }
}

/// A candidate behavior chosen as evidence, with the event correspondence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MatchEvidence {
    pub behavior: usize,
    pub witness: Witness,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GroundRecord {
    pub index: usize,
    pub path: String,
    /// Lowest-indexed candidate behavior that strictly matches.
    pub strict: Option<MatchEvidence>,
    /// Lowest-indexed candidate behavior that covers this one.
    pub covering: Option<MatchEvidence>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CandidateStatus {
    /// Embedded in `ground`: the first ground behavior with the same
    /// collapsed event sequence that admits it, else the lowest-indexed one.
    Embedded {
        ground: usize,
        witness: Witness,
    },
    Unmatched {
        reason: MismatchReason,
    },
    Pruned,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CandidateRecord {
    pub index: usize,
    pub path: String,
    #[serde(flatten)]
    pub status: CandidateStatus,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct MatchStats {
    /// Behavior pairs handed to a matcher.
    pub pairs_compared: u64,
    pub ground_behaviors: u64,
    pub candidate_behaviors: u64,
    pub ground_truncated: u64,
    pub candidate_truncated: u64,
}

/// Everything [`evaluate`] found out about a pair of behavior sets.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evaluation {
    pub metrics: MetricsTriple,
    pub ground: Vec<GroundRecord>,
    pub candidates: Vec<CandidateRecord>,
    pub pairs_compared: u64,
}

/// Scores candidate behaviors `q` against ground behaviors `r`.
///
/// Candidates in `pruned` (indices into `q`) never match; with
/// `exclude_pruned` they are also left out of the precision denominator.
pub fn evaluate(
    r: &BehaviorSet,
    q: &BehaviorSet,
    align: &EventAlignment,
    ground: &PetriNet,
    candidate: &PetriNet,
    pruned: &BTreeSet<usize>,
    exclude_pruned: bool,
) -> Result<Evaluation, MetricsError> {
    if r.is_empty() {
        return Err(MetricsError::EmptyGroundSet);
    }
    let candidate_total = if exclude_pruned {
        q.len() - pruned.len()
    } else {
        q.len()
    };
    if candidate_total == 0 {
        return Err(MetricsError::EmptyCandidateSet);
    }

    let engine = Engine::new(r, q, align, ground, candidate, pruned);
    let ground_records: Vec<GroundRecord> = (0..r.len())
        .into_par_iter()
        .map(|g| GroundRecord {
            index: g,
            path: r.behaviors[g].to_path_string(),
            strict: engine.best_strict(g),
            covering: engine.best_covering(g),
        })
        .collect();
    let candidate_records: Vec<CandidateRecord> = (0..q.len())
        .into_par_iter()
        .map(|c| CandidateRecord {
            index: c,
            path: q.behaviors[c].to_path_string(),
            status: engine.embedding_status(c),
        })
        .collect();

    let count = |it: &mut dyn Iterator<Item = bool>| it.filter(|&b| b).count() as u64;
    let counts = Counts {
        ground_total: r.len() as u64,
        candidate_total: candidate_total as u64,
        ground_strictly_matched: count(&mut ground_records.iter().map(|g| g.strict.is_some())),
        ground_covered: count(&mut ground_records.iter().map(|g| g.covering.is_some())),
        candidate_embedded: count(
            &mut candidate_records
                .iter()
                .map(|c| matches!(c.status, CandidateStatus::Embedded { .. })),
        ),
        pruned: pruned.len() as u64,
    };
    let metrics = MetricsTriple {
        fitness: Ratio::new(counts.ground_strictly_matched, counts.ground_total),
        precision: Ratio::new(counts.candidate_embedded, counts.candidate_total),
        fes: Ratio::new(counts.ground_covered, counts.ground_total),
        counts,
    };
    Ok(Evaluation {
        metrics,
        ground: ground_records,
        candidates: candidate_records,
        pairs_compared: engine.pairs.load(Ordering::Relaxed),
    })
}

/// A ratio and, per behavior of the counted set, the evidence found for it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetricOutcome {
    pub ratio: Ratio,
    pub evidence: Vec<Option<MatchEvidence>>,
}

fn pruned_indices(q: &BehaviorSet, align: &EventAlignment) -> BTreeSet<usize> {
    q.iter()
        .enumerate()
        .filter(|(_, b)| is_illegal(b, align))
        .map(|(i, _)| i)
        .collect()
}

/// Share of ground behaviors strictly matched by some candidate behavior.
pub fn fitness(
    r: &BehaviorSet,
    q: &BehaviorSet,
    align: &EventAlignment,
    ground: &PetriNet,
    candidate: &PetriNet,
) -> Result<MetricOutcome, MetricsError> {
    let ev = evaluate(r, q, align, ground, candidate, &pruned_indices(q, align), false)?;
    Ok(MetricOutcome {
        ratio: ev.metrics.fitness,
        evidence: ev.ground.into_iter().map(|g| g.strict).collect(),
    })
}

/// Share of ground behaviors covered by some candidate behavior.
pub fn fes(
    r: &BehaviorSet,
    q: &BehaviorSet,
    align: &EventAlignment,
    ground: &PetriNet,
    candidate: &PetriNet,
) -> Result<MetricOutcome, MetricsError> {
    let ev = evaluate(r, q, align, ground, candidate, &pruned_indices(q, align), false)?;
    Ok(MetricOutcome {
        ratio: ev.metrics.fes,
        evidence: ev.ground.into_iter().map(|g| g.covering).collect(),
    })
}

/// Share of candidate behaviors embedded in some ground behavior. The
/// evidence names the ground behavior in `MatchEvidence::behavior`.
pub fn precision(
    r: &BehaviorSet,
    q: &BehaviorSet,
    align: &EventAlignment,
    ground: &PetriNet,
    candidate: &PetriNet,
) -> Result<MetricOutcome, MetricsError> {
    let ev = evaluate(r, q, align, ground, candidate, &pruned_indices(q, align), false)?;
    Ok(MetricOutcome {
        ratio: ev.metrics.precision,
        evidence: ev
            .candidates
            .into_iter()
            .map(|c| match c.status {
                CandidateStatus::Embedded { ground, witness } => Some(MatchEvidence {
                    behavior: ground,
                    witness,
                }),
                _ => None,
            })
            .collect(),
    })
}

/// Precomputed behaviors plus lookup tables that let most behaviors find
/// their partner without scanning the whole other set.
struct Engine<'a> {
    matcher: Matcher<'a>,
    ground: Vec<PreparedGround>,
    /// `None` for pruned candidates.
    candidates: Vec<Option<PreparedCandidate>>,
    /// Candidate indices sorted by block signature.
    by_block_signature: Vec<(Vec<u32>, usize)>,
    /// Distinct candidate end states, each with its lowest candidate index.
    by_end_state: HashMap<Vec<u64>, usize>,
    /// Ground behaviors by collapsed label sequence, lowest index first.
    by_full_signature: HashMap<Vec<u32>, Vec<usize>>,
    pairs: AtomicU64,
}

impl<'a> Engine<'a> {
    fn new(
        r: &BehaviorSet,
        q: &BehaviorSet,
        align: &'a EventAlignment,
        ground: &'a PetriNet,
        candidate: &'a PetriNet,
        pruned: &BTreeSet<usize>,
    ) -> Self {
        let matcher = Matcher::new(ground, candidate, align);
        let prepared_ground: Vec<PreparedGround> = r
            .behaviors
            .par_iter()
            .map(|b| matcher.prepare_ground(b))
            .collect();
        let candidates: Vec<Option<PreparedCandidate>> = q
            .behaviors
            .par_iter()
            .enumerate()
            .map(|(i, b)| (!pruned.contains(&i)).then(|| matcher.prepare_candidate(b)))
            .collect();

        let mut by_block_signature: Vec<(Vec<u32>, usize)> = candidates
            .iter()
            .enumerate()
            .filter_map(|(i, c)| c.as_ref().map(|c| (c.block_signature(), i)))
            .collect();
        by_block_signature.sort_unstable();

        let mut by_end_state = HashMap::new();
        for (i, c) in candidates.iter().enumerate() {
            if let Some(c) = c {
                by_end_state.entry(c.legal_final().to_vec()).or_insert(i);
            }
        }
        let mut by_full_signature: HashMap<Vec<u32>, Vec<usize>> = HashMap::new();
        for (i, g) in prepared_ground.iter().enumerate() {
            by_full_signature.entry(g.full_signature()).or_default().push(i);
        }

        Engine {
            matcher,
            ground: prepared_ground,
            candidates,
            by_block_signature,
            by_end_state,
            by_full_signature,
            pairs: AtomicU64::new(0),
        }
    }

    fn tick(&self) {
        self.pairs.fetch_add(1, Ordering::Relaxed);
    }

    fn best_strict(&self, g: usize) -> Option<MatchEvidence> {
        let gb = &self.ground[g];
        let try_one = |c: usize| -> Option<MatchEvidence> {
            let cb = self.candidates[c].as_ref()?;
            self.tick();
            match self.matcher.strict(gb, cb) {
                MatchResult::Matched(witness) => Some(MatchEvidence { behavior: c, witness }),
                MatchResult::Mismatch(_) => None,
            }
        };
        if gb.has_temporal() {
            return (0..self.candidates.len()).find_map(try_one);
        }
        // Without temporal events every ground event owns a non-empty block,
        // so a strict partner's block signature starts with the ground
        // behavior's collapsed labels.
        let prefix = gb.full_signature();
        let start = self
            .by_block_signature
            .partition_point(|(sig, _)| sig.as_slice() < prefix.as_slice());
        let mut hits: Vec<usize> = self.by_block_signature[start..]
            .iter()
            .take_while(|(sig, _)| sig.starts_with(&prefix))
            .map(|&(_, c)| c)
            .collect();
        hits.sort_unstable();
        hits.into_iter().find_map(try_one)
    }

    fn best_covering(&self, g: usize) -> Option<MatchEvidence> {
        let gb = &self.ground[g];
        let (values, exempt) = gb.final_key();
        let c = if exempt.iter().any(|&x| x) {
            self.by_end_state
                .iter()
                .filter(|(state, _)| {
                    self.tick();
                    state
                        .iter()
                        .zip(&values)
                        .zip(&exempt)
                        .all(|((c, g), &x)| x || c == g)
                })
                .map(|(_, &c)| c)
                .min()?
        } else {
            self.tick();
            *self.by_end_state.get(&values)?
        };
        let cb = self.candidates[c].as_ref().expect("indexed candidates are kept");
        Some(MatchEvidence {
            behavior: c,
            witness: self.matcher.partial_witness(gb, cb),
        })
    }

    fn embedding_status(&self, c: usize) -> CandidateStatus {
        let Some(cb) = &self.candidates[c] else {
            return CandidateStatus::Pruned;
        };
        if cb.has_unmapped() {
            return CandidateStatus::Unmatched {
                reason: MismatchReason::UnmappedEvent,
            };
        }
        let mut reason = MismatchReason::OrderViolation;
        let mut try_one = |g: usize| -> Option<CandidateStatus> {
            self.tick();
            match self.matcher.embedding(cb, &self.ground[g]) {
                MatchResult::Matched(witness) => Some(CandidateStatus::Embedded { ground: g, witness }),
                MatchResult::Mismatch(r) => {
                    reason = reason.min(r);
                    None
                }
            }
        };
        // A ground behavior with the same collapsed labels is the usual
        // partner; the full scan only runs when none of those admits it.
        let exact = self.by_full_signature.get(&cb.signature());
        if let Some(found) = exact.and_then(|gs| gs.iter().find_map(|&g| try_one(g))) {
            return found;
        }
        let tried: BTreeSet<usize> = exact.into_iter().flatten().copied().collect();
        (0..self.ground.len())
            .filter(|g| !tried.contains(g))
            .find_map(&mut try_one)
            .unwrap_or(CandidateStatus::Unmatched { reason })
    }
}

/// Provenance and settings of a comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportMetadata {
    pub tool: String,
    pub tool_version: String,
    pub ground_net: String,
    pub candidate_net: String,
    pub alignment: String,
    pub options: CompareOptions,
    /// RFC 3339 time the report was produced; the only field that differs
    /// between runs on identical inputs.
    pub generated_at: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComplianceReport {
    pub schema_version: u32,
    pub metadata: ReportMetadata,
    pub metrics: MetricsTriple,
    pub stats: MatchStats,
    pub ground_behaviors: Vec<GroundRecord>,
    pub candidate_behaviors: Vec<CandidateRecord>,
    pub diagnostics: Vec<Diagnostic>,
}

fn explore(net: &PetriNet, options: &CompareOptions) -> Result<BehaviorSet, MetricsError> {
    let rg = build_reachability_graph(net, &options.limits)?;
    Ok(enumerate_behaviors(
        &rg,
        &options.limits,
        options.allow_no_terminal,
    )?)
}

/// Explores both nets and scores the candidate against the ground truth.
pub fn compare(
    ground: &PetriNet,
    candidate: &PetriNet,
    align: &EventAlignment,
    options: &CompareOptions,
) -> Result<ComplianceReport, MetricsError> {
    options.limits.check()?;
    let (ground, candidate) = if options.lcp_auto {
        (insert_loop_controls(ground), insert_loop_controls(candidate))
    } else {
        (ground.clone(), candidate.clone())
    };
    for net in [&ground, &candidate] {
        let diagnostics = validate_net(net);
        if has_errors(&diagnostics) {
            return Err(MetricsError::InvalidNet {
                net: net.name().to_string(),
                diagnostics,
            });
        }
    }
    let mut diagnostics = validate_alignment(align, &ground, &candidate);
    if has_errors(&diagnostics) {
        return Err(MetricsError::InvalidAlignment {
            name: align.name.clone(),
            diagnostics,
        });
    }

    let r = explore(&ground, options)?;
    let q = explore(&candidate, options)?;
    let pruned = if options.prune {
        pruned_indices(&q, align)
    } else {
        BTreeSet::new()
    };
    let ev = evaluate(
        &r,
        &q,
        align,
        &ground,
        &candidate,
        &pruned,
        options.exclude_pruned,
    )?;

    for (set, net) in [(&r, &ground), (&q, &candidate)] {
        if set.truncated > 0 {
            diagnostics.push(
                Diagnostic::warning(
                    "W_TRUNCATED",
                    format!(
                        "{} paths of `{}` were cut at depth {} and are not behaviors",
                        set.truncated,
                        net.name(),
                        options.limits.max_depth
                    ),
                )
                .with_subject(net.name()),
            );
        }
    }
    if !pruned.is_empty() {
        diagnostics.push(
            Diagnostic::info(
                "I_PRUNED",
                format!(
                    "{} of {} candidate behaviors contain an illegal sequence and were not compared; \
                     {} behavior pairs compared",
                    pruned.len(),
                    q.len(),
                    ev.pairs_compared
                ),
            )
            .with_subject(candidate.name()),
        );
    }

    Ok(ComplianceReport {
        schema_version: REPORT_SCHEMA_VERSION,
        metadata: ReportMetadata {
            tool: "contractcheck".into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            ground_net: ground.name().into(),
            candidate_net: candidate.name().into(),
            alignment: align.name.clone(),
            options: *options,
            generated_at: Some(now_rfc3339()),
        },
        metrics: ev.metrics,
        stats: MatchStats {
            pairs_compared: ev.pairs_compared,
            ground_behaviors: r.len() as u64,
            candidate_behaviors: q.len() as u64,
            ground_truncated: r.truncated as u64,
            candidate_truncated: q.truncated as u64,
        },
        ground_behaviors: ev.ground,
        candidate_behaviors: ev.candidates,
        diagnostics,
    })
}

fn now_rfc3339() -> String {
    time::OffsetDateTime::now_utc()
        .format(&time::format_description::well_known::Rfc3339)
        .unwrap_or_default()
}
