//! Reference detectors: greedy symmetric-difference minimization and
//! degree ranking. Both score candidate sets with forward Monte Carlo on
//! common random numbers: one base seed per run, so every candidate set is
//! evaluated against the same trial streams.

use rand::Rng;
use rayon::prelude::*;

use crate::cascade::{estimate_sd_forward_seeded, Observation};
use crate::error::{invalid, Result};
use crate::graph::{DirectedGraph, NodeId};
use crate::rng;

pub const DEFAULT_TRIALS_PER_EVAL: usize = 200;

fn check(g: &DirectedGraph, obs: &Observation, trials: usize) -> Result<()> {
    if obs.k() == 0 {
        return Err(invalid("observation has no infected nodes"));
    }
    if g.node_count() != obs.node_count() {
        return Err(invalid("observation does not match graph"));
    }
    if trials == 0 {
        return Err(invalid("trials_per_eval must be at least 1"));
    }
    Ok(())
}

/// Greedy detector with the objective value accepted at each step.
pub(crate) fn greedy_trace<R: Rng + ?Sized>(
    g: &DirectedGraph,
    obs: &Observation,
    trials: usize,
    rng: &mut R,
) -> Result<(Vec<NodeId>, Vec<f64>)> {
    check(g, obs, trials)?;
    let base = rng::split_base(rng);
    let eval = |s: &[NodeId]| estimate_sd_forward_seeded(g, s, obs, trials, base).mean;

    let mut chosen: Vec<NodeId> = Vec::new();
    let mut in_set = vec![false; g.node_count()];
    // nothing is infected by the empty set
    let mut current = obs.k() as f64;
    let mut trace = Vec::new();
    loop {
        let best = obs
            .infected()
            .par_iter()
            .filter(|u| !in_set[u.index()])
            .map(|&u| {
                let mut s = chosen.clone();
                s.push(u);
                (eval(&s), u)
            })
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let Some((value, u)) = best else { break };
        if value < current || chosen.is_empty() {
            chosen.push(u);
            in_set[u.index()] = true;
            current = value;
            trace.push(value);
        } else {
            break;
        }
    }
    chosen.sort_unstable();
    Ok((chosen, trace))
}

/// Adds, one at a time, the infected node giving the lowest estimated
/// symmetric difference; stops when no addition strictly lowers it.
pub fn greedy_detect<R: Rng + ?Sized>(g: &DirectedGraph, obs: &Observation, trials_per_eval: usize, rng: &mut R) -> Result<Vec<NodeId>> {
    greedy_trace(g, obs, trials_per_eval, rng).map(|(s, _)| s)
}

/// Infected nodes by total degree, descending (smaller id first on ties).
pub fn degree_order(g: &DirectedGraph, obs: &Observation) -> Vec<NodeId> {
    let mut order = obs.infected().to_vec();
    order.sort_by_key(|&u| (std::cmp::Reverse(g.in_degree(u) + g.out_degree(u)), u));
    order
}

/// Walks infected nodes from highest degree down, adding each while the
/// estimated symmetric difference does not increase; stops at the first
/// increase.
pub fn max_degree_detect<R: Rng + ?Sized>(
    g: &DirectedGraph,
    obs: &Observation,
    trials_per_eval: usize,
    rng: &mut R,
) -> Result<Vec<NodeId>> {
    check(g, obs, trials_per_eval)?;
    let base = rng::split_base(rng);
    let eval = |s: &[NodeId]| estimate_sd_forward_seeded(g, s, obs, trials_per_eval, base).mean;

    let order = degree_order(g, obs);
    let mut chosen = vec![order[0]];
    let mut current = eval(&chosen);
    for &u in &order[1..] {
        chosen.push(u);
        let value = eval(&chosen);
        if value > current {
            chosen.pop();
            break;
        }
        current = value;
    }
    chosen.sort_unstable();
    Ok(chosen)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cascade::{symmetric_difference, ModelParams, Tau};
    use crate::graph::{gen_random_graph, load_edge_list};

    fn graph(text: &str) -> DirectedGraph {
        load_edge_list(text.as_bytes()).unwrap().0
    }

    #[test]
    fn greedy_finds_deterministic_single_source() {
        // 0 -> 1 -> 2 -> 3, plus 4 -> 2 (4 uninfected)
        let g = graph("0 1\n1 2\n2 3\n4 2");
        let p = ModelParams::si(1.0, Tau::Infinite).unwrap();
        let obs = Observation::new(5, [0, 1, 2, 3].map(NodeId), p, None).unwrap();
        // exhaustive: {0} is the unique single-node minimizer
        let d: Vec<usize> = (0..4)
            .map(|u| symmetric_difference(&g.forward_reachable([NodeId(u)], None), &obs.infected_set()))
            .collect();
        assert_eq!(d, vec![0, 1, 2, 3]);
        let s = greedy_detect(&g, &obs, 10, &mut rng::from_seed(1)).unwrap();
        assert_eq!(s, vec![NodeId(0)]);
    }

    #[test]
    fn greedy_trace_strictly_decreases() {
        let g = gen_random_graph(60, 150, 3).unwrap();
        let mut r = rng::from_seed(4);
        let obs = crate::cascade::make_observation_with_size(&g, &[NodeId(1), NodeId(30)], crate::cascade::Model::Si, 0.3, 15, 1000, &mut r).unwrap();
        let (s, trace) = greedy_trace(&g, &obs, 100, &mut r).unwrap();
        assert!(!s.is_empty());
        assert!(trace.windows(2).all(|w| w[1] < w[0]), "{trace:?}");
        assert!(s.iter().all(|&u| obs.is_infected(u)));
    }

    #[test]
    fn greedy_is_deterministic() {
        let g = gen_random_graph(50, 120, 9).unwrap();
        let mut r = rng::from_seed(2);
        let obs = crate::cascade::make_observation_with_size(&g, &[NodeId(3)], crate::cascade::Model::Si, 0.3, 10, 1000, &mut r).unwrap();
        let a = greedy_detect(&g, &obs, 50, &mut rng::from_seed(8)).unwrap();
        let b = greedy_detect(&g, &obs, 50, &mut rng::from_seed(8)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn greedy_breaks_ties_by_smaller_id() {
        // two symmetric isolated infected nodes: both singletons score 1
        let g = graph("# nodes: 2");
        let p = ModelParams::si(1.0, Tau::Steps(1)).unwrap();
        let obs = Observation::new(2, [NodeId(1), NodeId(0)], p, None).unwrap();
        let (s, trace) = greedy_trace(&g, &obs, 5, &mut rng::from_seed(0)).unwrap();
        assert_eq!(s, vec![NodeId(0), NodeId(1)]);
        assert_eq!(trace, vec![1.0, 0.0]);
    }

    #[test]
    fn max_degree_single_and_star() {
        let g = graph("0 1\n0 2\n0 3\n4 0");
        let p = ModelParams::si(1.0, Tau::Steps(1)).unwrap();
        let single = Observation::new(5, [NodeId(2)], p, None).unwrap();
        assert_eq!(max_degree_detect(&g, &single, 5, &mut rng::from_seed(0)).unwrap(), vec![NodeId(2)]);

        let star = Observation::new(5, [0, 1, 2, 3].map(NodeId), p, None).unwrap();
        assert_eq!(degree_order(&g, &star)[0], NodeId(0));
        assert_eq!(max_degree_detect(&g, &star, 5, &mut rng::from_seed(0)).unwrap(), [0, 1, 2, 3].map(NodeId).to_vec());
    }

    #[test]
    fn max_degree_stops_at_first_increase() {
        // hub 0 (degree 4) explains {0,1,2,3}; 5 has degree 2 and infects
        // the uninfected 6; 7 is low degree and never reached
        let g = graph("# nodes: 10\n0 1\n0 2\n0 3\n9 0\n5 6\n8 5\n7 1");
        let p = ModelParams::si(1.0, Tau::Steps(1)).unwrap();
        let obs = Observation::new(10, [0, 1, 2, 3, 5, 7].map(NodeId), p, None).unwrap();
        let order = degree_order(&g, &obs);
        assert_eq!(order[..2], [NodeId(0), NodeId(1)]);
        // oracle: D({0}) = 2 (misses 5, 7); D({0,1}) = 2; D({0,1,5}) = 2 (5 now infected, 6 falsely)
        let d = |s: &[u32]| symmetric_difference(&g.forward_reachable(s.iter().map(|&i| NodeId(i)), Some(1)), &obs.infected_set());
        assert_eq!((d(&[0]), d(&[0, 1]), d(&[0, 1, 5])), (2, 2, 2));
        // order: 0(4) 1(2) 5(2) 2(1) 3(1) 7(1); adding 2 keeps D at 2, 3 too, 7 lowers it
        let s = max_degree_detect(&g, &obs, 3, &mut rng::from_seed(0)).unwrap();
        assert_eq!(s, [0, 1, 2, 3, 5, 7].map(NodeId).to_vec());

        // make node 5 harmful: give it a second uninfected target
        let g = graph("# nodes: 10\n0 1\n0 2\n0 3\n9 0\n5 6\n5 4\n7 1");
        let d = |s: &[u32]| symmetric_difference(&g.forward_reachable(s.iter().map(|&i| NodeId(i)), Some(1)), &obs.infected_set());
        assert_eq!((d(&[0, 1]), d(&[0, 1, 5])), (2, 3));
        let s = max_degree_detect(&g, &obs, 3, &mut rng::from_seed(0)).unwrap();
        assert_eq!(s, vec![NodeId(0), NodeId(1)]);
    }
}
