//! The SISI outer loop: sample RR sets in doubling rounds, solve the covering
//! instance each round, stop once the chosen set's sampled objective reaches
//! `Λ`, then post-optimize.

use std::f64::consts::{E, LN_2};

use log::info;
use serde::Serialize;

use crate::cascade::Observation;
use crate::covering::{post_optimize, solve_delta_approx};
use crate::error::{invalid, Result};
use crate::estimator::{coverage, estimate_sd};
use crate::graph::{DirectedGraph, NodeId};
use crate::rng;
use crate::sampler::{RRCollection, RootSampling, SiSampler};

/// `c = 2(e - 2)`.
pub const STOPPING_C: f64 = 2.0 * (E - 2.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Full union bound over all `2^k` subsets, with the `ε <= 1/(1+Δ)` cap.
    Strict,
    /// `k ln 2` replaced by `ln(2k)`; no cap on `ε`.
    Relax,
}

/// Sample threshold `Λ = (1+ε) 2c (ln(2/δ) + k ln 2 + 1) / ε²`; relax mode
/// uses `ln(2k)` in place of `k ln 2`.
pub fn compute_lambda(epsilon: f64, delta: f64, k: usize, mode: Mode) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(invalid(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid(format!("delta must lie in (0, 1), got {delta}")));
    }
    if k == 0 {
        return Err(invalid("k must be at least 1"));
    }
    let union = match mode {
        Mode::Strict => k as f64 * LN_2,
        Mode::Relax => (2.0 * k as f64).ln(),
    };
    Ok((1.0 + epsilon) * 2.0 * STOPPING_C * ((2.0 / delta).ln() + union + 1.0) / (epsilon * epsilon))
}

#[derive(Clone, Debug)]
pub struct SisiConfig {
    pub epsilon: f64,
    pub delta: f64,
    pub mode: Mode,
    /// Cap on generated RR sets.
    pub max_samples: Option<u64>,
    /// Cap on stored RR-set memberships (memory guard).
    pub max_memberships: Option<u64>,
    pub seed: u64,
    pub sampler: SiSampler,
    pub roots: RootSampling,
}

impl Default for SisiConfig {
    fn default() -> Self {
        SisiConfig {
            epsilon: 0.1,
            delta: 0.01,
            mode: Mode::Relax,
            max_samples: None,
            max_memberships: Some(50_000_000),
            seed: 0,
            sampler: SiSampler::Fast,
            roots: RootSampling::Uniform,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RoundLog {
    pub round: u32,
    pub samples: u64,
    pub delta: usize,
    pub lambda: f64,
    pub stopping_sum: u64,
    pub estimated_sd: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolutionReport {
    /// Sorted detected sources.
    pub sources: Vec<NodeId>,
    pub estimated_sd: f64,
    pub samples_used: u64,
    pub delta_observed: usize,
    pub epsilon_effective: f64,
    pub lambda: f64,
    pub rounds: u32,
    /// The covering pass selected nothing and a single node was substituted.
    pub fallback_used: bool,
    /// Sampling stopped on a budget cap before the stopping condition held.
    pub budget_exhausted: bool,
    /// Sampled objective of the last round's set, before post-optimization.
    pub stopping_sum: u64,
    pub pre_optimization: Vec<NodeId>,
    pub history: Vec<RoundLog>,
}

pub fn run_sisi(g: &DirectedGraph, obs: &Observation, cfg: &SisiConfig) -> Result<SolutionReport> {
    if obs.k() == 0 {
        return Err(invalid("observation has no infected nodes"));
    }
    if g.node_count() != obs.node_count() {
        return Err(invalid("observation does not match graph"));
    }
    let n = g.node_count();
    let k = obs.k();
    let mut epsilon = cfg.epsilon;
    let mut lambda = compute_lambda(epsilon, cfg.delta, k, cfg.mode)?;

    let mut rng = rng::from_seed(cfg.seed);
    let mut pool = RRCollection::new(obs)
        .with_sampler(cfg.sampler)
        .with_root_sampling(cfg.roots, rng::split_base(&mut rng));

    let mut want = lambda.ceil() as u64;
    let mut chosen: Option<(Vec<NodeId>, bool)> = None;
    let mut history = Vec::new();
    let mut stopping_sum = 0u64;
    let mut budget_exhausted = false;
    let mut round = 0u32;

    loop {
        let mut batch = want;
        if let Some(cap) = cfg.max_samples {
            batch = batch.min(cap.saturating_sub(pool.total()));
        }
        if batch == 0 {
            budget_exhausted = true;
            break;
        }
        round += 1;
        pool.extend(g, obs, batch, &mut rng)?;

        if pool.blue_count() > 0 {
            let sol = solve_delta_approx(&pool)?;
            chosen = Some((sol.sources, sol.fallback_used));
        }
        want = pool.total();

        let delta_obs = pool.delta();
        if cfg.mode == Mode::Strict && epsilon > 1.0 / (1.0 + delta_obs as f64) {
            epsilon = 1.0 / (1.0 + delta_obs as f64);
            lambda = compute_lambda(epsilon, cfg.delta, k, cfg.mode)?;
        }

        let (sum, est) = match &chosen {
            Some((s, _)) => (coverage(&pool, s)?.cost(), estimate_sd(&pool, s, n)?),
            None => (0, f64::NAN),
        };
        stopping_sum = sum;
        info!(
            "round {round}: |R| = {}, delta = {delta_obs}, lambda = {lambda:.1}, stopping sum = {sum}, estimate = {est:.3}",
            pool.total()
        );
        history.push(RoundLog {
            round,
            samples: pool.total(),
            delta: delta_obs,
            lambda,
            stopping_sum: sum,
            estimated_sd: est,
        });

        if chosen.is_some() && sum as f64 >= lambda {
            break;
        }
        let over_memory = cfg.max_memberships.is_some_and(|cap| pool.memberships() as u64 >= cap);
        let over_samples = cfg.max_samples.is_some_and(|cap| pool.total() >= cap);
        if over_memory || over_samples {
            budget_exhausted = true;
            break;
        }
    }

    let (pre, fallback_used) = match chosen {
        Some(c) => c,
        None => (vec![crate::covering::best_single_node(&pool)], true),
    };
    let sources = post_optimize(&pre, &pool)?;
    let estimated_sd = estimate_sd(&pool, &sources, n)?;
    Ok(SolutionReport {
        sources,
        estimated_sd,
        samples_used: pool.total(),
        delta_observed: pool.delta(),
        epsilon_effective: epsilon,
        lambda,
        rounds: round,
        fallback_used,
        budget_exhausted,
        stopping_sum,
        pre_optimization: pre,
        history,
    })
}
