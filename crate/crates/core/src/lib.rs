//! Deciding, constructing and checking transformations between bipartite
//! pure states under local operations and classical communication.
//!
//! `|ψ⟩` can be turned into `|φ⟩` exactly when the Schmidt spectrum of `ψ`
//! is majorized by that of `φ`. This crate provides:
//!
//! - [`specvec`]: probability vectors, the majorization order, T-transform
//!   chains and the partial-sum crossing statistic;
//! - [`states`]: pure states, reduced states and Schmidt decompositions;
//! - [`protocol`]: the transformability decision, explicit protocol
//!   synthesis, validation and the mixed-unitary necessity certificate;
//! - [`simulator`]: branch enumeration and seeded sampling of protocols;
//! - [`monotones`]: entropy and power sums of spectra;
//! - [`asymptotics`]: n-copy spectra and EPR-pair counts via typical sets;
//! - [`sampling`]: random states and incomparability statistics.

#![forbid(unsafe_code)]

pub mod asymptotics;
pub mod error;
pub mod linalg;
pub mod monotones;
pub mod protocol;
pub mod sampling;
pub mod simulator;
pub mod specvec;
pub mod states;

pub use error::{Error, Result};
pub use protocol::{Protocol, Step};
pub use specvec::{Comparison, ProbVector, TTransform};
pub use states::{Party, PureState};
