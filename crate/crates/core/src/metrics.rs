//! Detection quality measures against known true sources.

use std::collections::BTreeSet;

use rand::Rng;

use crate::cascade::{forward_trials, Observation};
use crate::error::{invalid, Error, Result};
use crate::graph::{DirectedGraph, NodeId};
use crate::rng;

fn as_sets(s: &[NodeId], truth: &[NodeId]) -> Result<(BTreeSet<NodeId>, BTreeSet<NodeId>)> {
    if s.is_empty() {
        return Err(invalid("detected set is empty"));
    }
    if truth.is_empty() {
        return Err(invalid("true source set is empty"));
    }
    Ok((s.iter().copied().collect(), truth.iter().copied().collect()))
}

/// `|S∩T| / (2|S|) + |S∩T| / (2|T|)`.
pub fn f1_score(s: &[NodeId], truth: &[NodeId]) -> Result<f64> {
    let (s, t) = as_sets(s, truth)?;
    let hit = s.intersection(&t).count() as f64;
    Ok(hit / (2.0 * s.len() as f64) + hit / (2.0 * t.len() as f64))
}

/// Percentage of true sources that were detected.
pub fn detection_rate(s: &[NodeId], truth: &[NodeId]) -> Result<f64> {
    let (s, t) = as_sets(s, truth)?;
    Ok(100.0 * s.intersection(&t).count() as f64 / t.len() as f64)
}

fn jaccard(cascade: &[NodeId], obs: &Observation) -> f64 {
    let hit = cascade.iter().filter(|&&v| obs.is_infected(v)).count();
    let union = cascade.len() + obs.k() - hit;
    if union == 0 {
        1.0
    } else {
        hit as f64 / union as f64
    }
}

/// Ratio of mean Jaccard similarity between cascades from `s` and the
/// observed set to the same quantity for cascades from `truth`. Both sides
/// use the same random streams.
pub fn jaccard_quality<R: Rng + ?Sized>(
    g: &DirectedGraph,
    s: &[NodeId],
    truth: &[NodeId],
    obs: &Observation,
    trials: usize,
    rng: &mut R,
) -> Result<f64> {
    as_sets(s, truth)?;
    if trials == 0 {
        return Err(invalid("trials must be at least 1"));
    }
    if g.node_count() != obs.node_count() {
        return Err(invalid("observation does not match graph"));
    }
    for &v in s.iter().chain(truth) {
        if v.index() >= g.node_count() {
            return Err(invalid(format!("node {v} is out of range")));
        }
    }
    let base = rng::split_base(rng);
    let mean = |set: &[NodeId]| {
        let v = forward_trials(g, set, obs.params(), trials, base, |c| jaccard(c, obs));
        v.iter().sum::<f64>() / v.len() as f64
    };
    let den = mean(truth);
    if den == 0.0 {
        return Err(Error::Degenerate("true sources never overlap the observed set".into()));
    }
    Ok(mean(s) / den)
}
