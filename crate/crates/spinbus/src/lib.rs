//! Simulator and optimizer for entanglement distribution through unmodulated
//! spin graphs.
//!
//! The crate evolves single-excitation states of XY and Heisenberg spin
//! networks exactly, computes pairwise concurrence for arbitrary two-site
//! encodings, detects mirror symmetries of the interaction graph, and solves
//! targeting problems: which encoding, evolution time, and ring flux maximize
//! the entanglement generated between a chosen pair of sites.
//!
//! Units: couplings and fields are energies in units of `J`, `ħ = 1`, so time
//! is measured in `1/J`. Site indices are 0-based throughout.
//!
//! The main pipeline is
//! [`SpinGraph`](graph::SpinGraph) →
//! [`build_single_excitation`](hamiltonian::build_single_excitation) →
//! [`diagonalize`](dynamics::diagonalize) →
//! [`transition_amplitudes`](dynamics::transition_amplitudes) →
//! [`pair_amplitudes`](entanglement::pair_amplitudes) →
//! [`concurrence_closed_form`](entanglement::concurrence_closed_form),
//! with the `symmetry` and `optimizer` modules layered on top.

pub mod cli;
pub mod dynamics;
pub mod entanglement;
pub mod error;
pub mod graph;
pub mod hamiltonian;
pub mod optimizer;
pub mod report;
pub mod symmetry;

pub use error::{Error, Result};
pub use graph::{Bond, GaugePhases, Model, SiteId, SpinGraph};

/// Complex scalar used throughout the crate.
pub type C64 = num_complex::Complex64;
