//! The fixture library under `corpus/`: nets, alignments and the manifest
//! recording what each is expected to produce.
//!
//! Fixtures are compiled into the library, so tests and the CLI work from
//! any directory; [`Corpus::from_dir`] reads an on-disk copy instead.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::align::EventAlignment;
use crate::diag::{has_errors, Diagnostic};
use crate::io::{parse_alignment, parse_net, ParseError};
use crate::metrics::{CompareOptions, Ratio};
use crate::net::{insert_loop_controls, validate_net, PetriNet};

macro_rules! embed {
    ($($file:literal),* $(,)?) => {
        &[$(($file, include_str!(concat!("../../../corpus/", $file)))),*]
    };
}

static EMBEDDED: &[(&str, &str)] = embed!(
    "manifest.toml",
    "chain3_ground.pnet",
    "gcdc_cs.align",
    "gcdc_cs.pnet",
    "gcdc_gp.align",
    "gcdc_gp.pnet",
    "gcdc_legal.pnet",
    "gcdc_ml.align",
    "gcdc_ml.pnet",
    "lease_impl.align",
    "lease_impl.pnet",
    "lease_legal.pnet",
    "pizza_pattern.pnet",
    "pizza_prepay.align",
    "pizza_prepay.pnet",
    "transactive.align",
    "transactive_ground.pnet",
    "transactive_stress.pnet",
);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    /// Published with the original evaluation.
    Reported,
    /// Worked out by hand-replay or an independent oracle.
    Derived,
    /// Follows directly from the definitions.
    Trivial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Ground,
    Candidate,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetEntry {
    pub name: String,
    pub file: String,
    pub role: Role,
    /// Explore the net with loop-control places inserted.
    #[serde(default)]
    pub lcp_auto: bool,
    pub behaviors: Option<usize>,
    pub places: Option<usize>,
    pub transitions: Option<usize>,
    pub legal_places: Option<usize>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComparisonEntry {
    pub name: String,
    pub ground: String,
    pub candidate: String,
    pub align: String,
    #[serde(default)]
    pub lcp_auto: bool,
    pub fitness: Option<String>,
    pub precision: Option<String>,
    pub fes: Option<String>,
    pub pruned: Option<u64>,
    pub provenance: Provenance,
    /// Where the score pattern the fixture imitates comes from.
    pub pattern: Option<Provenance>,
}

impl ComparisonEntry {
    /// Expected (fitness, precision, fes), when the manifest states them.
    pub fn expected(&self) -> Result<Option<(Ratio, Ratio, Ratio)>, CorpusError> {
        let parse = |s: &Option<String>| s.as_deref().map(|s| parse_ratio(s, &self.name)).transpose();
        match (parse(&self.fitness)?, parse(&self.precision)?, parse(&self.fes)?) {
            (Some(f), Some(p), Some(e)) => Ok(Some((f, p, e))),
            (None, None, None) => Ok(None),
            _ => Err(CorpusError::Manifest(format!(
                "comparison `{}` must state all three metrics or none",
                self.name
            ))),
        }
    }

    pub fn options(&self) -> CompareOptions {
        CompareOptions {
            lcp_auto: self.lcp_auto,
            ..CompareOptions::default()
        }
    }
}

fn parse_ratio(s: &str, owner: &str) -> Result<Ratio, CorpusError> {
    let bad = || CorpusError::Manifest(format!("`{s}` in `{owner}` is not a fraction n/d with n <= d"));
    let (n, d) = s.split_once('/').ok_or_else(bad)?;
    let (n, d): (u64, u64) = (
        n.trim().parse().map_err(|_| bad())?,
        d.trim().parse().map_err(|_| bad())?,
    );
    if d == 0 || n > d {
        return Err(bad());
    }
    Ok(Ratio::new(n, d))
}

/// A slot for a net that is not distributed with the corpus.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReservedEntry {
    pub name: String,
    pub behaviors: Option<usize>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub version: u32,
    #[serde(default, rename = "net")]
    pub nets: Vec<NetEntry>,
    #[serde(default, rename = "comparison")]
    pub comparisons: Vec<ComparisonEntry>,
    #[serde(default, rename = "reserved")]
    pub reserved: Vec<ReservedEntry>,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("no fixture named `{0}` in the corpus manifest")]
    UnknownFixture(String),
    #[error("fixture `{0}` is a reserved slot; its net is not distributed with the corpus")]
    Reserved(String),
    #[error("corpus file `{path}`: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("corpus manifest: {0}")]
    Manifest(String),
    #[error("{file}: {source}")]
    Parse { file: String, source: ParseError },
    #[error("{file}: {}", .diagnostics.iter().find(|d| d.is_error()).map(ToString::to_string).unwrap_or_default())]
    Invalid {
        file: String,
        diagnostics: Vec<Diagnostic>,
    },
}

/// A parsed and validated net with its manifest entry.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub entry: NetEntry,
    /// The net as written in its file.
    pub net: PetriNet,
}

impl Fixture {
    pub fn name(&self) -> &str {
        &self.entry.name
    }

    /// The net to explore: with loop-control places when the manifest asks.
    pub fn explored_net(&self) -> PetriNet {
        if self.entry.lcp_auto {
            insert_loop_controls(&self.net)
        } else {
            self.net.clone()
        }
    }
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub entry: ComparisonEntry,
    pub ground: Fixture,
    pub candidate: Fixture,
    pub align: EventAlignment,
}

#[derive(Debug, Clone)]
enum Source {
    Embedded,
    Dir(PathBuf),
}

#[derive(Debug, Clone)]
pub struct Corpus {
    source: Source,
    manifest: Manifest,
}

impl Corpus {
    /// The fixtures compiled into this library.
    pub fn embedded() -> Self {
        let text = embedded_file("manifest.toml").expect("manifest is embedded");
        let manifest = toml::from_str(text).expect("embedded manifest is well-formed");
        Corpus {
            source: Source::Embedded,
            manifest,
        }
    }

    /// A corpus directory containing `manifest.toml`.
    pub fn from_dir(dir: impl AsRef<Path>) -> Result<Self, CorpusError> {
        let dir = dir.as_ref().to_path_buf();
        let source = Source::Dir(dir);
        let text = read(&source, "manifest.toml")?;
        let manifest = toml::from_str(&text).map_err(|e| CorpusError::Manifest(e.to_string()))?;
        Ok(Corpus { source, manifest })
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    /// Raw text of a corpus file.
    pub fn read(&self, file: &str) -> Result<String, CorpusError> {
        read(&self.source, file)
    }

    pub fn load_fixture(&self, name: &str) -> Result<Fixture, CorpusError> {
        let Some(entry) = self.manifest.nets.iter().find(|n| n.name == name) else {
            return Err(if self.manifest.reserved.iter().any(|r| r.name == name) {
                CorpusError::Reserved(name.to_string())
            } else {
                CorpusError::UnknownFixture(name.to_string())
            });
        };
        let text = self.read(&entry.file)?;
        let net = parse_net(&text).map_err(|source| CorpusError::Parse {
            file: entry.file.clone(),
            source,
        })?;
        let diagnostics = validate_net(&net);
        if has_errors(&diagnostics) {
            return Err(CorpusError::Invalid {
                file: entry.file.clone(),
                diagnostics,
            });
        }
        Ok(Fixture {
            entry: entry.clone(),
            net,
        })
    }

    pub fn load_alignment(&self, file: &str) -> Result<EventAlignment, CorpusError> {
        parse_alignment(&self.read(file)?).map_err(|source| CorpusError::Parse {
            file: file.to_string(),
            source,
        })
    }

    pub fn load_comparison(&self, name: &str) -> Result<Comparison, CorpusError> {
        let entry = self
            .manifest
            .comparisons
            .iter()
            .find(|c| c.name == name)
            .ok_or_else(|| CorpusError::UnknownFixture(name.to_string()))?;
        Ok(Comparison {
            ground: self.load_fixture(&entry.ground)?,
            candidate: self.load_fixture(&entry.candidate)?,
            align: self.load_alignment(&entry.align)?,
            entry: entry.clone(),
        })
    }

    pub fn fixtures(&self) -> Result<Vec<Fixture>, CorpusError> {
        self.manifest
            .nets
            .iter()
            .map(|n| self.load_fixture(&n.name))
            .collect()
    }
}

/// Loads a fixture from the embedded corpus.
pub fn load_fixture(name: &str) -> Result<Fixture, CorpusError> {
    Corpus::embedded().load_fixture(name)
}

fn embedded_file(file: &str) -> Option<&'static str> {
    EMBEDDED.iter().find(|(f, _)| *f == file).map(|(_, text)| *text)
}

fn read(source: &Source, file: &str) -> Result<String, CorpusError> {
    match source {
        Source::Embedded => embedded_file(file)
            .map(str::to_string)
            .ok_or_else(|| CorpusError::Io {
                path: PathBuf::from(file),
                source: std::io::Error::new(std::io::ErrorKind::NotFound, "not embedded"),
            }),
        Source::Dir(dir) => {
            let path = dir.join(file);
            fs::read_to_string(&path).map_err(|source| CorpusError::Io { path, source })
        }
    }
}
