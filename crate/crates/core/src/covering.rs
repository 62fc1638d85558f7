//! Submodular-cost covering over an RR pool.
//!
//! Variables: `x_u` in [0, 1] per infected node, `y_j` in [0, 1] per blue set.
//! Cost: `sum over red sets of max_{v in R_t} x_v + sum_j y_j`.
//! Constraint per blue set: `max(max_{u in R_j} x_u, y_j) >= 1`.
//!
//! [`solve_delta_approx`] makes one primal-dual pass over the blue sets; the
//! result costs at most `Δ` times the optimum of the sampled objective.

use log::{debug, warn};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::NodeId;
use crate::sampler::RRCollection;

/// Streaming passes `water_level` tries before falling back to selection.
const FILTER_PASSES: usize = 4;

/// Red sets per parallel work item when red costs are raised.
const RED_CHUNK: usize = 1 << 14;

/// `x_u` at or above `1 - SELECT_TOLERANCE` counts as selected.
pub const SELECT_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct SolverState {
    /// Indexed by node; only infected nodes are ever raised.
    pub x: Vec<f64>,
    /// Indexed by blue-set id.
    pub y: Vec<f64>,
    /// Indexed by stored red-set id: current `max_{v in R_t} x_v`.
    pub red_cost: Vec<f64>,
}

impl SolverState {
    /// Fractional cost `c(x, y)`.
    pub fn cost(&self) -> f64 {
        self.red_cost.iter().sum::<f64>() + self.y.iter().sum::<f64>()
    }
}

#[derive(Clone, Debug)]
pub struct CoverSolution {
    /// Sorted.
    pub sources: Vec<NodeId>,
    pub state: SolverState,
    /// No variable reached 1 and the single-node fallback was used.
    pub fallback_used: bool,
    /// Number of `x` updates that had to be clamped into [0, 1].
    pub clamped: usize,
}

pub fn solve_delta_approx(collection: &RRCollection) -> Result<CoverSolution> {
    if collection.blue_count() == 0 {
        return Err(Error::NoBlueSets);
    }
    let n = collection.node_count();
    let mut state = SolverState {
        x: vec![0.0; n],
        y: vec![0.0; collection.blue_count()],
        red_cost: vec![0.0; collection.stored_red_count()],
    };
    let mut raised: Vec<f64> = Vec::new();
    let mut clamped = 0usize;

    for j in 0..collection.blue_count() {
        let members = collection.blue_set(j);

        // cheapest way to satisfy this constraint: raise one x_u to 1, or y_j.
        // A member already at 1 has every red set at cost 1, so nothing is
        // left to pay; otherwise a residual sum stops once it cannot lower
        // theta, its terms being nonnegative.
        let mut theta = 1.0 - state.y[j];
        if members.iter().any(|&u| state.x[u.index()] >= 1.0) {
            theta = 0.0;
        }
        for &u in members {
            if theta <= 0.0 {
                break;
            }
            let mut residual = 0.0;
            for &t in collection.red_containing(u) {
                residual += 1.0 - state.red_cost[t as usize];
                if residual >= theta {
                    break;
                }
            }
            theta = theta.min(residual);
        }
        let theta = theta.max(0.0);

        if theta == 0.0 {
            // the water level is the lowest red cost of u; no red cost moves.
            // Every red cost of u is at least x_u, so meeting x_u ends the scan.
            for &u in members {
                let x = state.x[u.index()];
                if x >= 1.0 {
                    continue;
                }
                let mut lowest = 1.0f64;
                for &t in collection.red_containing(u) {
                    lowest = lowest.min(state.red_cost[t as usize]);
                    if lowest <= x {
                        break;
                    }
                }
                state.x[u.index()] = lowest.max(x);
            }
            continue;
        }

        // every x_u is raised against the state at the start of the step, so
        // members are independent
        let red_cost = &state.red_cost;
        let x = &state.x;
        members
            .par_iter()
            .map_init(Vec::new, |levels: &mut Vec<f64>, &u| {
                let reds = collection.red_containing(u);
                if reds.is_empty() {
                    return 1.0;
                }
                // the all-active level settles most members in one read
                let (sum, max) = sum_and_max(reds.len(), |i| red_cost[reds[i] as usize]);
                let all_active = (theta + sum) / reds.len() as f64;
                if all_active >= max {
                    return all_active.max(x[u.index()]);
                }
                levels.clear();
                levels.extend(reds.iter().map(|&t| red_cost[t as usize]));
                water_level(levels, theta).max(x[u.index()])
            })
            .collect_into_vec(&mut raised);
        for value in raised.iter_mut() {
            if !(0.0..=1.0 + SELECT_TOLERANCE).contains(value) {
                clamped += 1;
            }
            *value = value.clamp(0.0, 1.0);
        }
        for (&u, &value) in members.iter().zip(&raised) {
            state.x[u.index()] = value;
        }
        // max is order-free, so red sets are updated in parallel by index range
        state.red_cost.par_chunks_mut(RED_CHUNK).enumerate().for_each(|(chunk, costs)| {
            let start = (chunk * RED_CHUNK) as u32;
            let end = start + costs.len() as u32;
            for (&u, &value) in members.iter().zip(&raised) {
                let reds = collection.red_containing(u);
                let from = reds.partition_point(|&t| t < start);
                for &t in reds[from..].iter().take_while(|&&t| t < end) {
                    let c = &mut costs[(t - start) as usize];
                    *c = c.max(value);
                }
            }
        });
        state.y[j] = (state.y[j] + theta).min(1.0);
    }

    if clamped > 0 {
        warn!("covering pass clamped {clamped} x updates into [0, 1]");
    }

    let mut sources: Vec<NodeId> = (0..n)
        .map(NodeId::from)
        .filter(|&u| state.x[u.index()] >= 1.0 - SELECT_TOLERANCE)
        .collect();
    let mut fallback_used = false;
    if sources.is_empty() {
        let best = best_single_node(collection);
        warn!("no variable reached 1; falling back to single node {best}");
        sources.push(best);
        fallback_used = true;
    }
    debug!("covering pass selected {} nodes, fractional cost {:.3}", sources.len(), state.cost());
    Ok(CoverSolution {
        sources,
        state,
        fallback_used,
        clamped,
    })
}

/// Sum and maximum of `get(0..len)`, accumulated in four independent lanes.
#[inline]
fn sum_and_max(len: usize, get: impl Fn(usize) -> f64) -> (f64, f64) {
    let mut sum = [0.0; 4];
    let mut max = [f64::NEG_INFINITY; 4];
    let body = len - len % 4;
    for i in (0..body).step_by(4) {
        for lane in 0..4 {
            let v = get(i + lane);
            sum[lane] += v;
            max[lane] = max[lane].max(v);
        }
    }
    for i in body..len {
        let v = get(i);
        sum[0] += v;
        max[0] = max[0].max(v);
    }
    ((sum[0] + sum[1]) + (sum[2] + sum[3]), max[0].max(max[1]).max(max[2].max(max[3])))
}

/// Smallest `x` with `sum((x - level)+) = theta`: the value of one variable
/// that raises the red cost it touches by exactly `theta`. Expected linear
/// time: each round splits the undecided levels at their median and keeps
/// the half that holds the answer.
fn water_level(mut levels: &mut [f64], theta: f64) -> f64 {
    // The answer is at most the all-active level a = (theta + sum) / n, and
    // levels at or above a are never active. A few streaming passes usually
    // settle it before any selection is needed.
    if theta <= 0.0 {
        return levels.iter().copied().fold(f64::INFINITY, f64::min);
    }
    for _ in 0..FILTER_PASSES {
        let (sum, max) = sum_and_max(levels.len(), |i| levels[i]);
        let all_active = (theta + sum) / levels.len() as f64;
        if all_active >= max {
            return all_active;
        }
        let mut kept = 0;
        for i in 0..levels.len() {
            if levels[i] < all_active {
                levels[kept] = levels[i];
                kept += 1;
            }
        }
        if kept == 0 {
            // rounding put the all-active level below every level, so the
            // answer is the lowest one (nothing was overwritten)
            return levels.iter().copied().fold(f64::INFINITY, f64::min);
        }
        levels = &mut levels[..kept];
    }
    // levels known to lie below the answer
    let (mut below_sum, mut below_count) = (0.0, 0usize);
    // smallest pivot known to lie at or above the answer
    let mut ceiling = f64::INFINITY;
    let mut rest = levels;
    while !rest.is_empty() {
        let mid = rest.len() / 2;
        let (left, &mut pivot, right) = rest.select_nth_unstable_by(mid, f64::total_cmp);
        let left_sum: f64 = left.iter().sum();
        let count = below_count + left.len();
        // cost of lifting every level up to the pivot
        let spent = count as f64 * pivot - (below_sum + left_sum);
        if spent >= theta {
            ceiling = pivot;
            rest = left;
        } else {
            below_sum += left_sum + pivot;
            below_count = count + 1;
            rest = right;
        }
    }
    if below_count == 0 {
        return ceiling;
    }
    ((theta + below_sum) / below_count as f64).min(ceiling)
}

/// Infected node maximizing (blue sets covered - red sets covered); smaller
/// id wins ties.
pub(crate) fn best_single_node(collection: &RRCollection) -> NodeId {
    (0..collection.node_count())
        .map(NodeId::from)
        .filter(|&u| collection.is_infected(u))
        .max_by_key(|&u| {
            let score = collection.blue_containing(u).len() as i64 - collection.red_containing(u).len() as i64;
            (score, std::cmp::Reverse(u))
        })
        .expect("observation has infected nodes")
}

/// Greedily drops the node whose removal lowers the sampled objective the
/// most. Once no removal strictly lowers it, nodes whose removal leaves it
/// unchanged are dropped too (fewest covered blue sets first), so the result
/// is minimal. The last node is never dropped.
pub fn post_optimize(sources: &[NodeId], collection: &RRCollection) -> Result<Vec<NodeId>> {
    crate::estimator::coverage(collection, sources)?;
    let mut current: Vec<NodeId> = sources.to_vec();
    current.sort_unstable();
    current.dedup();

    // per-set count of selected members
    let mut blue_cnt = vec![0u32; collection.blue_count()];
    let mut red_cnt = vec![0u32; collection.stored_red_count()];
    for &u in &current {
        for &t in collection.blue_containing(u) {
            blue_cnt[t as usize] += 1;
        }
        for &t in collection.red_containing(u) {
            red_cnt[t as usize] += 1;
        }
    }

    while current.len() > 1 {
        // change in cost if u is removed: blue sets it alone covers become
        // uncovered, red sets it alone hits become clean
        let best = current
            .iter()
            .enumerate()
            .map(|(i, &u)| {
                let lost = collection.blue_containing(u).iter().filter(|&&t| blue_cnt[t as usize] == 1).count() as i64;
                let freed = collection.red_containing(u).iter().filter(|&&t| red_cnt[t as usize] == 1).count() as i64;
                (lost - freed, collection.blue_containing(u).len(), i)
            })
            .min();
        match best {
            Some((change, _, i)) if change <= 0 => {
                let u = current.remove(i);
                for &t in collection.blue_containing(u) {
                    blue_cnt[t as usize] -= 1;
                }
                for &t in collection.red_containing(u) {
                    red_cnt[t as usize] -= 1;
                }
            }
            _ => break,
        }
    }
    Ok(current)
}
