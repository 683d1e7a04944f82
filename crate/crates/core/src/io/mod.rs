//! Text formats: `.pnet` nets, `.align` alignments and rendered reports,
//! plus a PNML importer.

pub mod align;
mod lex;
pub mod pnet;
pub mod pnml;
pub mod report;

pub use align::{parse_alignment, serialize_alignment};
pub use lex::ParseError;
pub use pnet::{parse_net, serialize_net};
pub use pnml::parse_pnml;
pub use report::{serialize_report, ReportFormat};
