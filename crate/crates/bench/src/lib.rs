//! Benchmarks live in `benches/`; run them with `cargo bench -p contractcheck-bench`.
//!
//! This library only holds the fixtures they share.

use contractcheck::corpus::{Comparison, Corpus};
use contractcheck::PetriNet;

/// The explored form of a corpus net.
pub fn net(name: &str) -> PetriNet {
    Corpus::embedded()
        .load_fixture(name)
        .unwrap_or_else(|e| panic!("{e}"))
        .explored_net()
}

pub fn comparison(name: &str) -> Comparison {
    Corpus::embedded()
        .load_comparison(name)
        .unwrap_or_else(|e| panic!("{e}"))
}
