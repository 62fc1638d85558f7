//! Infection source identification on directed graphs.
//!
//! Given a graph, a propagation model and an observed set of infected nodes,
//! find a source set whose cascades best reproduce the observation, measured
//! by expected symmetric difference. The main entry point is [`run_sisi`].

pub mod baselines;
pub mod cascade;
pub mod covering;
pub mod detect;
pub mod error;
pub mod estimator;
pub mod graph;
pub mod metrics;
pub mod rng;
pub mod sampler;
pub mod sisi;

pub use cascade::{Model, ModelParams, Observation, Tau};
pub use detect::{detect, Algorithm, DetectOptions, Detection};
pub use error::{Error, Result};
pub use graph::{DirectedGraph, IdMap, NodeId};
pub use sampler::{RRCollection, RRSet};
pub use sisi::{compute_lambda, run_sisi, Mode, SisiConfig, SolutionReport};
