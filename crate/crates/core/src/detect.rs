//! One entry point over all detectors, as used by the CLI and the C API.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::baselines::{greedy_detect, max_degree_detect, DEFAULT_TRIALS_PER_EVAL};
use crate::cascade::{estimate_sd_forward, Observation};
use crate::error::{invalid, Error, Result};
use crate::graph::{DirectedGraph, NodeId};
use crate::rng;
use crate::sisi::{run_sisi, Mode, SisiConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Algorithm {
    #[serde(rename = "sisi")]
    Sisi,
    #[serde(rename = "sisi-relax")]
    SisiRelax,
    #[serde(rename = "greedy")]
    Greedy,
    #[serde(rename = "max-degree")]
    MaxDegree,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Sisi, Algorithm::SisiRelax, Algorithm::Greedy, Algorithm::MaxDegree];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Sisi => "sisi",
            Algorithm::SisiRelax => "sisi-relax",
            Algorithm::Greedy => "greedy",
            Algorithm::MaxDegree => "max-degree",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| invalid(format!("unknown algorithm {s:?} (expected sisi, sisi-relax, greedy or max-degree)")))
    }
}

#[derive(Clone, Debug)]
pub struct DetectOptions {
    pub epsilon: f64,
    pub delta: f64,
    pub seed: u64,
    /// Forward trials per candidate evaluation in the baselines.
    pub trials_per_eval: usize,
    /// Forward trials used to score the baselines' final set.
    pub eval_trials: usize,
    pub max_samples: Option<u64>,
    pub max_memberships: Option<u64>,
}

impl Default for DetectOptions {
    fn default() -> Self {
        let sisi = SisiConfig::default();
        DetectOptions {
            epsilon: sisi.epsilon,
            delta: sisi.delta,
            seed: 0,
            trials_per_eval: DEFAULT_TRIALS_PER_EVAL,
            eval_trials: 1000,
            max_samples: sisi.max_samples,
            max_memberships: sisi.max_memberships,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Detection {
    pub algorithm: Algorithm,
    pub sources: Vec<NodeId>,
    /// RR-set estimate for SISI, forward Monte Carlo for the baselines.
    pub estimated_sd: f64,
    /// RR sets generated; zero for the baselines.
    pub samples_used: u64,
    /// Size of the largest RR set; SISI only.
    pub delta: Option<usize>,
    pub epsilon_effective: Option<f64>,
    pub budget_exhausted: bool,
}

pub fn detect(g: &DirectedGraph, obs: &Observation, algorithm: Algorithm, opts: &DetectOptions) -> Result<Detection> {
    match algorithm {
        Algorithm::Sisi | Algorithm::SisiRelax => {
            let cfg = SisiConfig {
                epsilon: opts.epsilon,
                delta: opts.delta,
                mode: if algorithm == Algorithm::Sisi { Mode::Strict } else { Mode::Relax },
                max_samples: opts.max_samples,
                max_memberships: opts.max_memberships,
                seed: opts.seed,
                ..SisiConfig::default()
            };
            let rep = run_sisi(g, obs, &cfg)?;
            Ok(Detection {
                algorithm,
                sources: rep.sources,
                estimated_sd: rep.estimated_sd,
                samples_used: rep.samples_used,
                delta: Some(rep.delta_observed),
                epsilon_effective: Some(rep.epsilon_effective),
                budget_exhausted: rep.budget_exhausted,
            })
        }
        Algorithm::Greedy | Algorithm::MaxDegree => {
            if opts.eval_trials == 0 {
                return Err(invalid("eval_trials must be at least 1"));
            }
            let mut r = rng::from_seed(opts.seed);
            let sources = if algorithm == Algorithm::Greedy {
                greedy_detect(g, obs, opts.trials_per_eval, &mut r)?
            } else {
                max_degree_detect(g, obs, opts.trials_per_eval, &mut r)?
            };
            let est = estimate_sd_forward(g, &sources, obs, opts.eval_trials, &mut r)?;
            Ok(Detection {
                algorithm,
                sources,
                estimated_sd: est.mean,
                samples_used: 0,
                delta: None,
                epsilon_effective: None,
                budget_exhausted: false,
            })
        }
    }
}
