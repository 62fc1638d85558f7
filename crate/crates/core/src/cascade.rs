//! Forward cascade simulation under the SI and IC models, the symmetric
//! difference objective and its Monte-Carlo estimate, and generation of
//! synthetic observations.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::graph::{DirectedGraph, IdMap, NodeId};
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    /// Susceptible-infected: an infected node retries each susceptible
    /// out-neighbour every step.
    Si,
    /// Independent cascade: one attempt per out-edge, the step after infection.
    Ic,
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Model::Si => "si",
            Model::Ic => "ic",
        })
    }
}

impl FromStr for Model {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "si" => Ok(Model::Si),
            "ic" => Ok(Model::Ic),
            other => Err(invalid(format!("unknown model {other:?}"))),
        }
    }
}

/// Cascade duration in discrete steps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Tau {
    Steps(u64),
    Infinite,
}

impl Tau {
    pub fn steps(self) -> Option<u64> {
        match self {
            Tau::Steps(t) => Some(t),
            Tau::Infinite => None,
        }
    }

    #[inline]
    pub fn allows(self, t: u64) -> bool {
        match self {
            Tau::Steps(cap) => t <= cap,
            Tau::Infinite => true,
        }
    }
}

impl fmt::Display for Tau {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tau::Steps(t) => write!(f, "{t}"),
            Tau::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Tau {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inf" | "infinite" | "Infinite" => Ok(Tau::Infinite),
            _ => {
                let t: u64 = s.parse().map_err(|_| invalid(format!("bad tau {s:?}")))?;
                if t == 0 {
                    return Err(invalid("tau must be at least 1"));
                }
                Ok(Tau::Steps(t))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    pub model: Model,
    /// Infection probability for SI, edge probability for IC.
    pub beta: f64,
    pub tau: Tau,
}

impl ModelParams {
    pub fn new(model: Model, beta: f64, tau: Tau) -> Result<Self> {
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(invalid(format!("beta must lie in (0, 1], got {beta}")));
        }
        if tau == Tau::Steps(0) {
            return Err(invalid("tau must be at least 1"));
        }
        Ok(ModelParams { model, beta, tau })
    }

    pub fn si(beta: f64, tau: Tau) -> Result<Self> {
        Self::new(Model::Si, beta, tau)
    }

    pub fn ic(p: f64, tau: Tau) -> Result<Self> {
        Self::new(Model::Ic, p, tau)
    }
}

/// The observed infected set `V_I` together with the cascade parameters, and
/// the true sources when the observation is synthetic.
#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    n: usize,
    infected: Vec<NodeId>,
    mask: Vec<bool>,
    params: ModelParams,
    true_sources: Option<Vec<NodeId>>,
}

impl Observation {
    pub fn new(
        n: usize,
        infected: impl IntoIterator<Item = NodeId>,
        params: ModelParams,
        true_sources: Option<Vec<NodeId>>,
    ) -> Result<Self> {
        let mut mask = vec![false; n];
        let mut list = Vec::new();
        for v in infected {
            if v.index() >= n {
                return Err(invalid(format!("infected node {v} out of range for n = {n}")));
            }
            if !mask[v.index()] {
                mask[v.index()] = true;
                list.push(v);
            }
        }
        list.sort_unstable();
        let true_sources = match true_sources {
            Some(mut s) => {
                s.sort_unstable();
                s.dedup();
                if let Some(bad) = s.iter().find(|v| v.index() >= n || !mask[v.index()]) {
                    return Err(invalid(format!("true source {bad} is not an infected node")));
                }
                Some(s)
            }
            None => None,
        };
        Ok(Observation {
            n,
            infected: list,
            mask,
            params,
            true_sources,
        })
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    /// Sorted `V_I`.
    pub fn infected(&self) -> &[NodeId] {
        &self.infected
    }

    pub fn infected_set(&self) -> BTreeSet<NodeId> {
        self.infected.iter().copied().collect()
    }

    #[inline]
    pub fn is_infected(&self, v: NodeId) -> bool {
        self.mask[v.index()]
    }

    pub fn infected_mask(&self) -> &[bool] {
        &self.mask
    }

    /// `k = |V_I|`.
    pub fn k(&self) -> usize {
        self.infected.len()
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn true_sources(&self) -> Option<&[NodeId]> {
        self.true_sources.as_deref()
    }

    /// Writes the observation file format using external ids from `ids`.
    pub fn to_text(&self, ids: &IdMap) -> String {
        let join = |nodes: &[NodeId]| {
            nodes
                .iter()
                .map(|&v| ids.external(v).to_string())
                .collect::<Vec<_>>()
                .join(" ")
        };
        let mut out = format!("{} {} {}\n", self.params.model, self.params.beta, self.params.tau);
        out.push_str(&join(&self.infected));
        out.push('\n');
        if let Some(src) = &self.true_sources {
            out.push_str("sources: ");
            out.push_str(&join(src));
            out.push('\n');
        }
        out
    }

    /// Parses the observation format: `model beta tau`, then a line of
    /// infected ids, then an optional `sources:` line. Ids are external.
    pub fn parse<R: BufRead>(reader: R, ids: &IdMap) -> Result<Self> {
        let mut lines = reader
            .lines()
            .enumerate()
            .map(|(i, l)| l.map(|l| (i + 1, l)))
            .filter(|r| r.as_ref().map_or(true, |(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#')));

        let parse_err = |line: usize, msg: String| Error::Parse { line, msg };
        let (hline, header) = lines.next().transpose()?.ok_or_else(|| parse_err(1, "missing header".into()))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(parse_err(hline, format!("expected `model beta tau`, got {header:?}")));
        }
        let model: Model = fields[0].parse()?;
        let beta: f64 = fields[1].parse().map_err(|_| parse_err(hline, format!("bad beta {:?}", fields[1])))?;
        let tau: Tau = fields[2].parse()?;
        let params = ModelParams::new(model, beta, tau)?;

        let lookup = |line: usize, tok: &str| -> Result<NodeId> {
            let ext: u64 = tok.parse().map_err(|_| parse_err(line, format!("bad node id {tok:?}")))?;
            ids.internal(ext)
                .ok_or_else(|| parse_err(line, format!("node {ext} is not in the graph")))
        };

        let mut infected = Vec::new();
        let mut sources = None;
        for item in lines {
            let (line_no, line) = item?;
            let text = line.trim();
            if let Some(rest) = text.strip_prefix("sources:") {
                let s = rest.split_whitespace().map(|t| lookup(line_no, t)).collect::<Result<Vec<_>>>()?;
                sources = Some(s);
            } else if sources.is_none() {
                for tok in text.split_whitespace() {
                    infected.push(lookup(line_no, tok)?);
                }
            } else {
                return Err(parse_err(line_no, "unexpected content after sources line".into()));
            }
        }
        Observation::new(ids.len(), infected, params, sources)
    }

    pub fn load(path: impl AsRef<Path>, ids: &IdMap) -> Result<Self> {
        Self::parse(BufReader::new(fs::File::open(path)?), ids)
    }
}

/// Step-wise forward spread. Buffers are reused across runs.
pub(crate) struct Spread {
    infected: Vec<bool>,
    fresh: Vec<bool>,
    order: Vec<NodeId>,
    active: Vec<NodeId>,
    next_active: Vec<NodeId>,
    newly: Vec<NodeId>,
}

impl Spread {
    pub(crate) fn new(n: usize) -> Self {
        Spread {
            infected: vec![false; n],
            fresh: vec![false; n],
            order: Vec::new(),
            active: Vec::new(),
            next_active: Vec::new(),
            newly: Vec::new(),
        }
    }

    fn reset(&mut self, sources: &[NodeId]) {
        for &v in &self.order {
            self.infected[v.index()] = false;
        }
        self.order.clear();
        self.active.clear();
        for &s in sources {
            if !self.infected[s.index()] {
                self.infected[s.index()] = true;
                self.order.push(s);
                self.active.push(s);
            }
        }
    }

    fn exhausted(&self) -> bool {
        self.active.is_empty()
    }

    /// Infected nodes in infection order.
    pub(crate) fn infected(&self) -> &[NodeId] {
        &self.order
    }

    /// One discrete step. SI keeps every infected node with a susceptible
    /// out-neighbour active; IC only keeps the nodes infected last step.
    fn step<R: Rng + ?Sized>(&mut self, g: &DirectedGraph, model: Model, beta: f64, rng: &mut R) {
        self.newly.clear();
        self.next_active.clear();
        for &u in &self.active {
            let mut pending = false;
            for &v in g.out_neighbors(u) {
                let vi = v.index();
                if self.infected[vi] || self.fresh[vi] {
                    continue;
                }
                if rng.gen_bool(beta) {
                    self.fresh[vi] = true;
                    self.newly.push(v);
                } else {
                    pending = true;
                }
            }
            if model == Model::Si && pending {
                self.next_active.push(u);
            }
        }
        for &v in &self.newly {
            self.fresh[v.index()] = false;
            self.infected[v.index()] = true;
            self.order.push(v);
            self.next_active.push(v);
        }
        std::mem::swap(&mut self.active, &mut self.next_active);
    }

    pub(crate) fn run<R: Rng + ?Sized>(&mut self, g: &DirectedGraph, sources: &[NodeId], params: &ModelParams, rng: &mut R) {
        self.reset(sources);
        match (params.model, params.tau) {
            (Model::Si, Tau::Infinite) => {
                // every edge out of an infected node eventually fires
                let mut head = 0;
                while head < self.order.len() {
                    let u = self.order[head];
                    head += 1;
                    for &v in g.out_neighbors(u) {
                        if !self.infected[v.index()] {
                            self.infected[v.index()] = true;
                            self.order.push(v);
                        }
                    }
                }
                self.active.clear();
            }
            (model, tau) => {
                let mut t = 0u64;
                while !self.exhausted() && tau.allows(t + 1) {
                    self.step(g, model, params.beta, rng);
                    t += 1;
                }
            }
        }
    }
}

fn check_sources(g: &DirectedGraph, sources: &[NodeId]) -> Result<()> {
    if sources.is_empty() {
        return Err(invalid("source set must be non-empty"));
    }
    if let Some(bad) = sources.iter().find(|s| s.index() >= g.node_count()) {
        return Err(invalid(format!("source {bad} out of range")));
    }
    Ok(())
}

/// Cascade from `sources` under `params`, whichever model it names.
pub fn simulate<R: Rng + ?Sized>(g: &DirectedGraph, sources: &[NodeId], params: &ModelParams, rng: &mut R) -> Result<BTreeSet<NodeId>> {
    check_sources(g, sources)?;
    let mut spread = Spread::new(g.node_count());
    spread.run(g, sources, params, rng);
    Ok(spread.infected().iter().copied().collect())
}

/// SI cascade: every step each edge from an infected to a susceptible node
/// fires independently with probability `beta`.
pub fn simulate_si<R: Rng + ?Sized>(g: &DirectedGraph, sources: &[NodeId], params: &ModelParams, rng: &mut R) -> Result<BTreeSet<NodeId>> {
    if params.model != Model::Si {
        return Err(invalid("simulate_si requires SI parameters"));
    }
    simulate(g, sources, params, rng)
}

/// IC cascade: each newly infected node makes one attempt per out-edge.
pub fn simulate_ic<R: Rng + ?Sized>(g: &DirectedGraph, sources: &[NodeId], params: &ModelParams, rng: &mut R) -> Result<BTreeSet<NodeId>> {
    if params.model != Model::Ic {
        return Err(invalid("simulate_ic requires IC parameters"));
    }
    simulate(g, sources, params, rng)
}

/// `|V_I \ cascade| + |cascade \ V_I|`.
pub fn symmetric_difference(cascade: &BTreeSet<NodeId>, infected: &BTreeSet<NodeId>) -> usize {
    cascade.symmetric_difference(infected).count()
}

/// Same quantity against an observation, for a cascade given as a node list.
pub(crate) fn sd_against(cascade: &[NodeId], obs: &Observation) -> usize {
    let hits = cascade.iter().filter(|&&v| obs.is_infected(v)).count();
    (obs.k() - hits) + (cascade.len() - hits)
}

/// Sample mean and standard error of a Monte-Carlo estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn from_samples(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let stderr = if values.len() > 1 {
            let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        } else {
            0.0
        };
        Estimate { mean, stderr }
    }
}

/// Runs `trials` forward cascades from `s`, trial `i` on stream `i` of
/// `base`, and maps each to `f(cascade)`. Output is in trial
/// order regardless of thread count.
pub(crate) fn forward_trials<F>(
    g: &DirectedGraph,
    s: &[NodeId],
    params: &ModelParams,
    trials: usize,
    base: u64,
    f: F,
) -> Vec<f64>
where
    F: Fn(&[NodeId]) -> f64 + Sync,
{
    (0..trials)
        .into_par_iter()
        .map_init(
            || Spread::new(g.node_count()),
            |spread, i| {
                let mut r = rng::stream(base, i as u64);
                spread.run(g, s, params, &mut r);
                f(spread.infected())
            },
        )
        .collect()
}

/// Forward Monte-Carlo estimate of `E[D(S)]`; the independent oracle for the
/// RR-set estimator.
pub fn estimate_sd_forward<R: Rng + ?Sized>(
    g: &DirectedGraph,
    s: &[NodeId],
    obs: &Observation,
    trials: usize,
    rng: &mut R,
) -> Result<Estimate> {
    check_sources(g, s)?;
    if trials == 0 {
        return Err(invalid("trials must be at least 1"));
    }
    let base = rng::split_base(rng);
    Ok(estimate_sd_forward_seeded(g, s, obs, trials, base))
}

/// As [`estimate_sd_forward`] with an explicit base seed, so callers can
/// evaluate several candidate sets on common random numbers.
pub(crate) fn estimate_sd_forward_seeded(g: &DirectedGraph, s: &[NodeId], obs: &Observation, trials: usize, base: u64) -> Estimate {
    let values = forward_trials(g, s, obs.params(), trials, base, |c| sd_against(c, obs) as f64);
    Estimate::from_samples(&values)
}

/// Simulates once from `true_sources` and records the cascade as `V_I`.
pub fn make_observation<R: Rng + ?Sized>(
    g: &DirectedGraph,
    true_sources: &[NodeId],
    params: ModelParams,
    rng: &mut R,
) -> Result<Observation> {
    let cascade = simulate(g, true_sources, &params, rng)?;
    Observation::new(g.node_count(), cascade, params, Some(true_sources.to_vec()))
}

/// Follows a single random trace step by step from `true_sources` and stops at
/// the first `tau` whose infected set reaches `min_infected` nodes.
pub fn make_observation_with_size<R: Rng + ?Sized>(
    g: &DirectedGraph,
    true_sources: &[NodeId],
    model: Model,
    beta: f64,
    min_infected: usize,
    tau_cap: u64,
    rng: &mut R,
) -> Result<Observation> {
    check_sources(g, true_sources)?;
    // validates beta
    ModelParams::new(model, beta, Tau::Steps(1))?;
    let mut spread = Spread::new(g.node_count());
    spread.reset(true_sources);
    let mut tau = 0u64;
    while tau == 0 || spread.infected().len() < min_infected {
        if tau >= tau_cap {
            return Err(Error::Degenerate(format!(
                "infection size {} < {min_infected} after tau cap {tau_cap}",
                spread.infected().len()
            )));
        }
        if spread.exhausted() && tau > 0 {
            return Err(Error::Degenerate(format!(
                "cascade stalled at {} nodes, below target {min_infected}",
                spread.infected().len()
            )));
        }
        spread.step(g, model, beta, rng);
        tau += 1;
    }
    let params = ModelParams::new(model, beta, Tau::Steps(tau))?;
    Observation::new(g.node_count(), spread.infected().iter().copied(), params, Some(true_sources.to_vec()))
}

/// `count` distinct nodes chosen uniformly at random, sorted.
pub fn pick_sources<R: Rng + ?Sized>(g: &DirectedGraph, count: usize, rng: &mut R) -> Result<Vec<NodeId>> {
    if count == 0 || count > g.node_count() {
        return Err(invalid(format!("cannot pick {count} sources from {} nodes", g.node_count())));
    }
    let mut s: Vec<NodeId> = index::sample(rng, g.node_count(), count)
        .into_iter()
        .map(NodeId::from)
        .collect();
    s.sort_unstable();
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{gen_random_graph, load_edge_list};
    use proptest::prelude::*;

    fn graph(text: &str) -> DirectedGraph {
        load_edge_list(text.as_bytes()).unwrap().0
    }

    fn ids(v: &[u32]) -> BTreeSet<NodeId> {
        v.iter().map(|&i| NodeId(i)).collect()
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::si(0.0, Tau::Steps(1)).is_err());
        assert!(ModelParams::si(1.5, Tau::Steps(1)).is_err());
        assert!(ModelParams::si(0.5, Tau::Steps(0)).is_err());
        assert!("0".parse::<Tau>().is_err());
        assert_eq!("inf".parse::<Tau>().unwrap(), Tau::Infinite);
    }

    #[test]
    fn si_one_deterministic_step() {
        let g = graph("0 1\n1 2");
        let p = ModelParams::si(1.0, Tau::Steps(1)).unwrap();
        let c = simulate_si(&g, &[NodeId(0)], &p, &mut rng::from_seed(1)).unwrap();
        assert_eq!(c, ids(&[0, 1]));
    }

    #[test]
    fn si_beta_one_is_truncated_bfs() {
        let g = gen_random_graph(40, 90, 3).unwrap();
        for tau in [Tau::Steps(1), Tau::Steps(3), Tau::Infinite] {
            let p = ModelParams::si(1.0, tau).unwrap();
            let s = [NodeId(0), NodeId(5)];
            let c = simulate_si(&g, &s, &p, &mut rng::from_seed(2)).unwrap();
            assert_eq!(c, g.forward_reachable(s, tau.steps()));
        }
    }

    #[test]
    fn si_retries_every_step() {
        // P[1 infected] = 1 - (1 - 0.5)^2
        let g = graph("0 1");
        let p = ModelParams::si(0.5, Tau::Steps(2)).unwrap();
        let mut r = rng::from_seed(11);
        let trials = 100_000;
        let hits = (0..trials)
            .filter(|_| simulate_si(&g, &[NodeId(0)], &p, &mut r).unwrap().contains(&NodeId(1)))
            .count();
        let freq = hits as f64 / trials as f64;
        let se = (0.75f64 * 0.25 / trials as f64).sqrt();
        assert!((freq - 0.75).abs() < 4.0 * se, "freq {freq}");
    }

    #[test]
    fn ic_single_attempt() {
        let g = graph("0 1\n1 2");
        let p = ModelParams::ic(1.0, Tau::Steps(2)).unwrap();
        assert_eq!(simulate_ic(&g, &[NodeId(0)], &p, &mut rng::from_seed(1)).unwrap(), ids(&[0, 1, 2]));

        let g = graph("0 1");
        let p = ModelParams::ic(0.5, Tau::Steps(5)).unwrap();
        let mut r = rng::from_seed(12);
        let trials = 100_000;
        let hits = (0..trials)
            .filter(|_| simulate_ic(&g, &[NodeId(0)], &p, &mut r).unwrap().len() == 2)
            .count();
        let freq = hits as f64 / trials as f64;
        assert!((freq - 0.5).abs() < 4.0 * (0.25 / trials as f64).sqrt(), "freq {freq}");
    }

    #[test]
    fn ic_star_binomial_mean() {
        let g = graph("0 1\n0 2\n0 3");
        let p = ModelParams::ic(0.5, Tau::Steps(1)).unwrap();
        let mut r = rng::from_seed(13);
        let trials = 50_000;
        let sizes: Vec<f64> = (0..trials)
            .map(|_| simulate_ic(&g, &[NodeId(0)], &p, &mut r).unwrap().len() as f64)
            .collect();
        let est = Estimate::from_samples(&sizes);
        assert!((est.mean - 2.5).abs() < 4.0 * est.stderr, "{est:?}");
    }

    #[test]
    fn model_mismatch_and_empty_sources() {
        let g = graph("0 1");
        let si = ModelParams::si(0.5, Tau::Steps(1)).unwrap();
        assert!(simulate_ic(&g, &[NodeId(0)], &si, &mut rng::from_seed(0)).is_err());
        assert!(simulate_si(&g, &[], &si, &mut rng::from_seed(0)).is_err());
    }

    #[test]
    fn symmetric_difference_cases() {
        assert_eq!(symmetric_difference(&ids(&[1, 2]), &ids(&[1, 2])), 0);
        assert_eq!(symmetric_difference(&ids(&[]), &ids(&[1, 2, 3])), 3);
        // a,b,c = 0,1,2 ; d = 3
        assert_eq!(symmetric_difference(&ids(&[0, 1, 2]), &ids(&[1, 3])), 3);
    }

    #[test]
    fn forward_estimate_deterministic_instance() {
        let g = gen_random_graph(20, 40, 5).unwrap();
        let p = ModelParams::si(1.0, Tau::Steps(2)).unwrap();
        let obs = Observation::new(20, (0..8).map(NodeId), p, None).unwrap();
        let s = [NodeId(1), NodeId(4)];
        let exact = symmetric_difference(&g.forward_reachable(s, Some(2)), &obs.infected_set());
        let est = estimate_sd_forward(&g, &s, &obs, 50, &mut rng::from_seed(3)).unwrap();
        assert_eq!(est.mean, exact as f64);
        assert_eq!(est.stderr, 0.0);
    }

    #[test]
    fn forward_estimate_single_edge() {
        // node 1 falsely infected with probability 0.5
        let g = graph("0 1");
        let p = ModelParams::si(0.5, Tau::Steps(1)).unwrap();
        let obs = Observation::new(2, [NodeId(0)], p, None).unwrap();
        let est = estimate_sd_forward(&g, &[NodeId(0)], &obs, 100_000, &mut rng::from_seed(4)).unwrap();
        assert!((est.mean - 0.5).abs() < 4.0 * est.stderr, "{est:?}");
        assert!(estimate_sd_forward(&g, &[], &obs, 10, &mut rng::from_seed(4)).is_err());
    }

    #[test]
    fn observation_with_size_target() {
        let g = crate::graph::gen_grid(60, 60).unwrap();
        let mut r = rng::from_seed(21);
        let src = pick_sources(&g, 2, &mut r).unwrap();
        let obs = make_observation_with_size(&g, &src, Model::Si, 0.05, 100, 1_000_000, &mut r).unwrap();
        assert!(obs.k() >= 100);
        assert!(obs.params().tau.steps().unwrap() >= 1);
        assert_eq!(obs.true_sources().unwrap(), &src[..]);
    }

    #[test]
    fn observation_size_target_unreachable() {
        let g = graph("0 1");
        let err = make_observation_with_size(&g, &[NodeId(0)], Model::Si, 1.0, 5, 100, &mut rng::from_seed(0));
        assert!(matches!(err, Err(Error::Degenerate(_))));
    }

    #[test]
    fn observation_reachable_set_at_beta_one() {
        let g = gen_random_graph(30, 50, 8).unwrap();
        let p = ModelParams::si(1.0, Tau::Infinite).unwrap();
        let obs = make_observation(&g, &[NodeId(2)], p, &mut rng::from_seed(0)).unwrap();
        assert_eq!(obs.infected_set(), g.forward_reachable([NodeId(2)], None));
    }

    #[test]
    fn observation_text_round_trip() {
        let (g, idmap) = load_edge_list("10 20\n20 30\n30 10\n".as_bytes()).unwrap();
        let p = ModelParams::si(0.05, Tau::Steps(7)).unwrap();
        let obs = Observation::new(g.node_count(), [NodeId(0), NodeId(2)], p, Some(vec![NodeId(2)])).unwrap();
        let text = obs.to_text(&idmap);
        assert_eq!(text, "si 0.05 7\n10 30\nsources: 30\n");
        assert_eq!(Observation::parse(text.as_bytes(), &idmap).unwrap(), obs);
        assert!(Observation::parse("si 0.05 7\n10 99\n".as_bytes(), &idmap).is_err());
        assert!(Observation::parse("si 0.05 7\n10\nsources: 20\n".as_bytes(), &idmap).is_err());
    }

    proptest! {
        #[test]
        fn cascades_are_monotone_in_tau(seed in any::<u64>(), beta in 0.05f64..1.0, ic in any::<bool>()) {
            // same trace prefix: running one more step only adds nodes
            let g = gen_random_graph(25, 60, seed).unwrap();
            let model = if ic { Model::Ic } else { Model::Si };
            let mut spread = Spread::new(25);
            spread.reset(&[NodeId(0)]);
            let mut r = rng::from_seed(seed);
            let mut prev: BTreeSet<NodeId> = spread.infected().iter().copied().collect();
            for _ in 0..8 {
                spread.step(&g, model, beta, &mut r);
                let now: BTreeSet<NodeId> = spread.infected().iter().copied().collect();
                prop_assert!(prev.is_subset(&now));
                prev = now;
            }
        }
    }
}
