//! RR-pool estimates of the expected symmetric difference.

use crate::error::{invalid, Error, Result};
use crate::graph::NodeId;
use crate::sampler::RRCollection;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct CoverageCounts {
    /// Blue sets that `S` does not intersect.
    pub uncovered_blue: u64,
    /// Red sets that `S` intersects.
    pub covered_red: u64,
    pub total: u64,
}

impl CoverageCounts {
    /// The sampled objective `|R-_blue(S)| + |R+_red(S)|`.
    pub fn cost(&self) -> u64 {
        self.uncovered_blue + self.covered_red
    }
}

fn check_subset(collection: &RRCollection, s: &[NodeId]) -> Result<()> {
    for &v in s {
        if v.index() >= collection.node_count() || !collection.is_infected(v) {
            return Err(invalid(format!("node {v} is not in the infected set")));
        }
    }
    Ok(())
}

/// Counts via the inverted index; work is proportional to the memberships of
/// the nodes in `s`.
pub fn coverage(collection: &RRCollection, s: &[NodeId]) -> Result<CoverageCounts> {
    check_subset(collection, s)?;
    let mut blue_hit = vec![false; collection.blue_count()];
    let mut red_hit = vec![false; collection.stored_red_count()];
    let mut covered_blue = 0u64;
    let mut covered_red = 0u64;
    for &v in s {
        for &id in collection.blue_containing(v) {
            if !std::mem::replace(&mut blue_hit[id as usize], true) {
                covered_blue += 1;
            }
        }
        for &id in collection.red_containing(v) {
            if !std::mem::replace(&mut red_hit[id as usize], true) {
                covered_red += 1;
            }
        }
    }
    Ok(CoverageCounts {
        uncovered_blue: collection.blue_count() as u64 - covered_blue,
        covered_red,
        total: collection.total(),
    })
}

/// `n * (|R-_blue(S)| + |R+_red(S)|) / |R|`, an unbiased estimate of `E[D(S)]`.
pub fn estimate_sd(collection: &RRCollection, s: &[NodeId], n: usize) -> Result<f64> {
    if collection.total() == 0 {
        return Err(Error::EmptyCollection);
    }
    let c = coverage(collection, s)?;
    Ok(n as f64 * c.cost() as f64 / c.total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cascade::{ModelParams, Observation, Tau};
    use crate::sampler::{Color, RRSet};

    fn nodes(v: &[u32]) -> Vec<NodeId> {
        v.iter().map(|&i| NodeId(i)).collect()
    }

    fn small() -> RRCollection {
        // a = 0, b = 1; blue {a,b}, red {b}, one empty red
        let o = Observation::new(4, nodes(&[0, 1]), ModelParams::si(0.5, Tau::Steps(2)).unwrap(), None).unwrap();
        let mut c = RRCollection::new(&o);
        c.push(&RRSet { src: NodeId(0), members: nodes(&[0, 1]), color: Color::Blue });
        c.push(&RRSet { src: NodeId(2), members: nodes(&[1]), color: Color::Red });
        c.push(&RRSet { src: NodeId(3), members: vec![], color: Color::Red });
        c
    }

    #[test]
    fn hand_enumerated_coverage() {
        let c = small();
        let at = |s: &[u32]| {
            let k = coverage(&c, &nodes(s)).unwrap();
            (k.uncovered_blue, k.covered_red)
        };
        assert_eq!(at(&[]), (1, 0));
        assert_eq!(at(&[0]), (0, 0));
        assert_eq!(at(&[1]), (0, 1));
        assert_eq!(at(&[0, 1]), (0, 1));
        assert_eq!(coverage(&c, &[]).unwrap().total, 3);
    }

    #[test]
    fn rejects_nodes_outside_infected_set() {
        let c = small();
        assert!(coverage(&c, &nodes(&[2])).is_err());
        assert!(coverage(&c, &nodes(&[9])).is_err());
    }

    #[test]
    fn estimate_scales_by_n_over_total() {
        let c = small();
        assert_eq!(estimate_sd(&c, &nodes(&[0]), 4).unwrap(), 0.0);
        assert!((estimate_sd(&c, &nodes(&[1]), 4).unwrap() - 4.0 / 3.0).abs() < 1e-12);
        assert!((estimate_sd(&c, &[], 4).unwrap() - 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn empty_collection_is_an_error() {
        let o = Observation::new(2, nodes(&[0]), ModelParams::si(0.5, Tau::Steps(2)).unwrap(), None).unwrap();
        let c = RRCollection::new(&o);
        assert!(matches!(estimate_sd(&c, &[], 2), Err(Error::EmptyCollection)));
    }
}
