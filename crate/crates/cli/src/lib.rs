//! The `contractcheck` command line.
//!
//! Exit codes are part of the interface:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | usage error, unreadable input or unwritable output |
//! | 2 | parse or validation error |
//! | 3 | state or path explosion |
//! | 4 | no terminal markings (or nothing left to compare) |
//! | 5 | generation endpoint failure |

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use contractcheck::diag::has_errors;
use contractcheck::gen::{generate_candidate, GenError, GenerationConfig, RunDir, ENDPOINT_ENV};
use contractcheck::io::{parse_alignment, parse_net, parse_pnml, serialize_report, ParseError, ReportFormat};
use contractcheck::{
    build_reachability_graph, compare, enumerate_behaviors, find_dead_transitions, insert_loop_controls,
    validate_net, CompareOptions, Diagnostic, EventAlignment, ExplorationLimits, MetricsError, PetriNet,
    ReachError,
};

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_INVALID: u8 = 2;
pub const EXIT_EXPLOSION: u8 = 3;
pub const EXIT_NO_TERMINAL: u8 = 4;
pub const EXIT_ENDPOINT: u8 = 5;

#[derive(Debug, Parser)]
#[command(
    name = "contractcheck",
    version,
    about = "Compare Petri-net models of legal and smart contracts"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a `.pnet` net or `.align` alignment for errors.
    Validate {
        /// File to check: a `.align` alignment, a `.pnml` net or a `.pnet` net.
        file: PathBuf,
    },
    /// Build the reachability graph and summarize it.
    Reach {
        /// Net to explore.
        net: PathBuf,
        #[command(flatten)]
        explore: ExploreArgs,
    },
    /// List the behaviors of a net in canonical order, then their count.
    Behaviors {
        /// Net to explore.
        net: PathBuf,
        #[command(flatten)]
        explore: ExploreArgs,
        /// Print only the count.
        #[arg(long)]
        count_only: bool,
    },
    /// Score a candidate net against a ground-truth net.
    Compare {
        /// Ground-truth net (the legal contract model).
        #[arg(long)]
        ground: PathBuf,
        /// Candidate net (the smart contract model).
        #[arg(long)]
        candidate: PathBuf,
        /// Alignment from candidate events and places onto the ground net.
        #[arg(long)]
        align: PathBuf,
        /// Also write the full JSON report to this file.
        #[arg(long, value_name = "FILE")]
        report: Option<PathBuf>,
        /// Rendering written to stdout.
        #[arg(long, default_value = "table", value_parser = parse_format)]
        format: ReportFormat,
        /// Decimal digits shown in the table.
        #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(0..=9))]
        round: u32,
        /// Compare candidate behaviors containing an illegal sequence instead of
        /// pruning them.
        #[arg(long)]
        no_prune: bool,
        /// Leave pruned candidate behaviors out of the precision denominator.
        #[arg(long, conflicts_with = "no_prune")]
        exclude_pruned: bool,
        #[command(flatten)]
        explore: ExploreArgs,
    },
    /// Ask a chat-completion endpoint to draft a smart contract from a legal text.
    Generate {
        /// Legal contract text.
        #[arg(long)]
        contract: PathBuf,
        /// Chat-completion URL.
        #[arg(long, env = ENDPOINT_ENV)]
        endpoint: String,
        /// Conversation attempts before giving up.
        #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..))]
        attempts: u32,
        /// Run directory for prompts, replies, the attempt log and the extracted code.
        #[arg(long, default_value = "contractcheck-run")]
        out: PathBuf,
        /// Model name sent with each request.
        #[arg(long, default_value = "default")]
        model: String,
        /// Sampling temperature.
        #[arg(long, default_value_t = 0.8)]
        temperature: f64,
        /// Nucleus sampling threshold.
        #[arg(long, default_value_t = 0.9)]
        top_p: f64,
        /// Top-k sampling cutoff.
        #[arg(long, default_value_t = 40)]
        top_k: u32,
        /// Per-request timeout in seconds.
        #[arg(long, default_value_t = 300)]
        timeout: u64,
    },
}

#[derive(Debug, Args)]
pub struct ExploreArgs {
    /// Add loop-control places to self-looping transitions before exploring.
    #[arg(long)]
    pub lcp_auto: bool,
    /// Treat a net without dead markings as having no behaviors instead of failing.
    #[arg(long)]
    pub allow_no_terminal: bool,
    /// Most reachable markings to explore.
    #[arg(long, default_value_t = ExplorationLimits::default().max_states)]
    pub max_states: usize,
    /// Most behaviors to enumerate.
    #[arg(long, default_value_t = ExplorationLimits::default().max_paths)]
    pub max_paths: usize,
    /// Longest path followed; longer paths are dropped and reported.
    #[arg(long, default_value_t = ExplorationLimits::default().max_depth)]
    pub max_depth: usize,
}

impl ExploreArgs {
    fn limits(&self) -> ExplorationLimits {
        ExplorationLimits {
            max_states: self.max_states,
            max_paths: self.max_paths,
            max_depth: self.max_depth,
        }
    }
}

fn parse_format(s: &str) -> Result<ReportFormat, String> {
    s.parse()
}

/// A failure with its exit code; the message goes to stderr.
struct Failure {
    code: u8,
    message: String,
    diagnostics: Vec<Diagnostic>,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
            diagnostics: Vec::new(),
        }
    }
}

impl From<ReachError> for Failure {
    fn from(e: ReachError) -> Self {
        let code = match &e {
            ReachError::StateExplosion { .. } | ReachError::PathExplosion { .. } => EXIT_EXPLOSION,
            ReachError::NoTerminalMarkings { .. } => EXIT_NO_TERMINAL,
            ReachError::InvalidNet { .. } => EXIT_INVALID,
            ReachError::InvalidLimits(_) => EXIT_USAGE,
        };
        let diagnostics = match &e {
            ReachError::InvalidNet { diagnostics, .. } => diagnostics.clone(),
            _ => Vec::new(),
        };
        Failure {
            code,
            message: e.to_string(),
            diagnostics,
        }
    }
}

impl From<MetricsError> for Failure {
    fn from(e: MetricsError) -> Self {
        match e {
            MetricsError::Reach(r) => r.into(),
            MetricsError::EmptyGroundSet | MetricsError::EmptyCandidateSet => {
                Failure::new(EXIT_NO_TERMINAL, e.to_string())
            }
            MetricsError::InvalidNet { ref diagnostics, .. }
            | MetricsError::InvalidAlignment { ref diagnostics, .. } => Failure {
                code: EXIT_INVALID,
                diagnostics: diagnostics.clone(),
                message: e.to_string(),
            },
        }
    }
}

impl From<GenError> for Failure {
    fn from(e: GenError) -> Self {
        let code = match e {
            GenError::EmptyContract => EXIT_INVALID,
            GenError::EndpointError(_) | GenError::NoCodeProduced { .. } => EXIT_ENDPOINT,
            GenError::Io { .. } => EXIT_USAGE,
        };
        Failure::new(code, e.to_string())
    }
}

/// Parses `args` (including the program name) and runs the command. Returns
/// the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // --help and --version also arrive here, meant for stdout.
            if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                return EXIT_USAGE;
            }
            let _ = write!(out, "{}", e.render());
            return EXIT_OK;
        }
    };
    match execute(cli.command, out, err) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            for d in &f.diagnostics {
                let _ = writeln!(err, "{d}");
            }
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .map_err(|e| Failure::new(EXIT_USAGE, format!("cannot read `{}`: {e}", path.display())))
}

fn parse_failure(path: &Path, e: ParseError) -> Failure {
    Failure::new(EXIT_INVALID, format!("{}: {e}", path.display()))
}

/// Reads, parses and validates a net (`.pnml` files are imported, anything
/// else is read as `.pnet`), reporting warnings on `err`.
fn load_net(path: &Path, err: &mut dyn Write) -> Result<PetriNet, Failure> {
    let text = read(path)?;
    let parsed = if path.extension().is_some_and(|e| e == "pnml") {
        parse_pnml(&text)
    } else {
        parse_net(&text)
    };
    let net = parsed.map_err(|e| parse_failure(path, e))?;
    let diagnostics = validate_net(&net);
    for d in diagnostics.iter().filter(|d| !d.is_error()) {
        let _ = writeln!(err, "{}: {d}", path.display());
    }
    if has_errors(&diagnostics) {
        return Err(Failure {
            code: EXIT_INVALID,
            message: format!("{}: net `{}` is invalid", path.display(), net.name()),
            diagnostics: diagnostics.into_iter().filter(Diagnostic::is_error).collect(),
        });
    }
    Ok(net)
}

fn load_alignment(path: &Path) -> Result<EventAlignment, Failure> {
    parse_alignment(&read(path)?).map_err(|e| parse_failure(path, e))
}

fn io_failure(e: std::io::Error) -> Failure {
    Failure::new(EXIT_USAGE, format!("cannot write output: {e}"))
}

fn execute(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Failure> {
    match command {
        Command::Validate { file } => {
            if file.extension().is_some_and(|e| e == "align") {
                let align = load_alignment(&file)?;
                writeln!(
                    out,
                    "ok: alignment `{}` ({} event mappings, {} irrelevant, {} legal mappings, {} illegal sequences)",
                    align.name,
                    align.event_map.len(),
                    align.irrelevant.len(),
                    align.legal_map.len(),
                    align.illegal_sequences.len()
                )
                .map_err(io_failure)?;
            } else {
                let net = load_net(&file, err)?;
                writeln!(
                    out,
                    "ok: net `{}` ({} places, {} transitions, {} arcs, {} legal places)",
                    net.name(),
                    net.places().len(),
                    net.transitions().len(),
                    net.arcs().len(),
                    net.legal_places().count()
                )
                .map_err(io_failure)?;
            }
        }
        Command::Reach { net, explore } => {
            let net = prepare(&net, &explore, err)?;
            let rg = build_reachability_graph(&net, &explore.limits())?;
            let terminals = rg.terminals();
            let dead = find_dead_transitions(&net, &rg);
            let mut text = format!(
                "net: {}\nstates: {}\nedges: {}\ndead markings: {}\n",
                net.name(),
                rg.nodes().len(),
                rg.edges().len(),
                terminals.len()
            );
            for &n in &terminals {
                text.push_str(&format!("  {}\n", net.format_marking(&rg.nodes()[n])));
            }
            text.push_str(&format!("dead transitions: {}\n", dead.len()));
            for t in &dead {
                text.push_str(&format!("  {t}\n"));
            }
            out.write_all(text.as_bytes()).map_err(io_failure)?;
        }
        Command::Behaviors {
            net,
            explore,
            count_only,
        } => {
            let net = prepare(&net, &explore, err)?;
            let limits = explore.limits();
            let rg = build_reachability_graph(&net, &limits)?;
            let set = enumerate_behaviors(&rg, &limits, explore.allow_no_terminal)?;
            if set.truncated > 0 {
                let _ = writeln!(
                    err,
                    "warning: {} paths were cut at depth {} and are not counted",
                    set.truncated, limits.max_depth
                );
            }
            let mut text = String::new();
            if !count_only {
                let width = set.len().to_string().len();
                for (i, b) in set.iter().enumerate() {
                    text.push_str(&format!("{:>width$}  {}\n", i + 1, b.to_path_string()));
                }
            }
            text.push_str(&format!("{} behaviors\n", set.len()));
            out.write_all(text.as_bytes()).map_err(io_failure)?;
        }
        Command::Compare {
            ground,
            candidate,
            align,
            report,
            format,
            round,
            no_prune,
            exclude_pruned,
            explore,
        } => {
            let g = load_net(&ground, err)?;
            let c = load_net(&candidate, err)?;
            let a = load_alignment(&align)?;
            let options = CompareOptions {
                limits: explore.limits(),
                lcp_auto: explore.lcp_auto,
                allow_no_terminal: explore.allow_no_terminal,
                prune: !no_prune,
                exclude_pruned,
            };
            let result = compare(&g, &c, &a, &options)?;
            for d in &result.diagnostics {
                let _ = writeln!(err, "{d}");
            }
            if let Some(path) = report {
                fs::write(&path, serialize_report(&result, ReportFormat::Json, round)).map_err(|e| {
                    Failure::new(EXIT_USAGE, format!("cannot write `{}`: {e}", path.display()))
                })?;
            }
            out.write_all(serialize_report(&result, format, round).as_bytes())
                .map_err(io_failure)?;
        }
        Command::Generate {
            contract,
            endpoint,
            attempts,
            out: dir,
            model,
            temperature,
            top_p,
            top_k,
            timeout,
        } => {
            let text = read(&contract)?;
            let config = GenerationConfig {
                model,
                temperature,
                top_p,
                top_k,
                max_attempts: attempts,
                timeout: Duration::from_secs(timeout),
                ..GenerationConfig::new(endpoint)
            };
            let run_dir = RunDir::create(&dir)?;
            let generation = generate_candidate(&config, &text, Some(&run_dir))?;
            let _ = writeln!(
                err,
                "code extracted after {} attempt(s); artifacts in {}",
                generation.attempts.len(),
                run_dir.path().display()
            );
            out.write_all(generation.code.as_bytes()).map_err(io_failure)?;
            if !generation.code.ends_with('\n') {
                out.write_all(b"\n").map_err(io_failure)?;
            }
        }
    }
    Ok(())
}

/// Loads a net for exploration, adding loop-control places when asked.
fn prepare(path: &Path, explore: &ExploreArgs, err: &mut dyn Write) -> Result<PetriNet, Failure> {
    let net = load_net(path, err)?;
    Ok(if explore.lcp_auto {
        insert_loop_controls(&net)
    } else {
        net
    })
}
