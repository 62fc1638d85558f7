//! Truncated reverse-reachable (RR) set sampling and the growing RR pool.
//!
//! An RR set is rooted at a uniformly random node and holds the infected
//! nodes that could have infected that root within `tau` steps. Sets rooted
//! inside `V_I` are blue, the others red.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::cascade::{Model, Observation};
use crate::error::{invalid, Result};
use crate::graph::{DirectedGraph, NodeId};
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Color {
    Blue,
    Red,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RRSet {
    pub src: NodeId,
    /// Sorted; always a subset of `V_I`.
    pub members: Vec<NodeId>,
    pub color: Color,
}

/// Number of Bernoulli(`beta`) trials up to and including the first success,
/// obtained by inverting the geometric CDF at `r` in (0, 1).
#[inline]
pub fn geometric_delay(r: f64, beta: f64) -> f64 {
    if beta >= 1.0 {
        return 1.0;
    }
    ((1.0 - r).ln() / (1.0 - beta).ln()).ceil().max(1.0)
}

/// Per-thread buffers for the samplers, cleared through the touched list.
pub(crate) struct Scratch {
    time: Vec<u64>,
    done: Vec<bool>,
    fresh: Vec<bool>,
    touched: Vec<NodeId>,
    heap: BinaryHeap<Reverse<(u64, NodeId)>>,
    buckets: Vec<Vec<NodeId>>,
    powers: Powers,
    newly: Vec<NodeId>,
    queue: std::collections::VecDeque<NodeId>,
}

impl Scratch {
    pub(crate) fn new(n: usize) -> Self {
        Scratch {
            time: vec![u64::MAX; n],
            done: vec![false; n],
            fresh: vec![false; n],
            touched: Vec::new(),
            heap: BinaryHeap::new(),
            buckets: Vec::new(),
            powers: Powers::default(),
            newly: Vec::new(),
            queue: Default::default(),
        }
    }

    fn clear(&mut self) {
        for &v in &self.touched {
            self.time[v.index()] = u64::MAX;
            self.done[v.index()] = false;
        }
        self.touched.clear();
        self.heap.clear();
        self.queue.clear();
    }

    #[inline]
    fn mark(&mut self, v: NodeId, t: u64) {
        if self.time[v.index()] == u64::MAX {
            self.touched.push(v);
        }
        self.time[v.index()] = t;
    }
}

fn finish(obs: &Observation, src: NodeId, mut members: Vec<NodeId>) -> RRSet {
    members.sort_unstable();
    let color = if obs.is_infected(src) { Color::Blue } else { Color::Red };
    RRSet { src, members, color }
}

/// Step-by-step reverse SI from `src`: every step, each in-edge `(u, v)` of a
/// reverse-infected `v` with `u` not yet infected tosses a `beta` coin.
pub(crate) fn rr_naive_from<R: Rng + ?Sized>(
    g: &DirectedGraph,
    obs: &Observation,
    src: NodeId,
    rng: &mut R,
    scratch: &mut Scratch,
) -> RRSet {
    let beta = obs.params().beta;
    let tau = obs.params().tau;
    scratch.clear();
    scratch.mark(src, 0);
    let mut step = 0u64;
    while tau.allows(step + 1) {
        step += 1;
        scratch.newly.clear();
        let mut tried = false;
        for i in 0..scratch.touched.len() {
            let v = scratch.touched[i];
            for &u in g.in_neighbors(v) {
                let ui = u.index();
                if scratch.time[ui] != u64::MAX || scratch.fresh[ui] {
                    continue;
                }
                tried = true;
                if rng.gen_bool(beta) {
                    scratch.fresh[ui] = true;
                    scratch.newly.push(u);
                }
            }
        }
        if !tried {
            break;
        }
        for i in 0..scratch.newly.len() {
            let u = scratch.newly[i];
            scratch.fresh[u.index()] = false;
            scratch.mark(u, step);
        }
    }
    let members = scratch.touched.iter().copied().filter(|&v| obs.is_infected(v)).collect();
    finish(obs, src, members)
}

/// Largest finite `tau` served by the bucket queue; longer horizons use the
/// binary heap.
const BUCKET_LIMIT: u64 = 1 << 12;

/// Draws a delay for every non-finalized in-edge of `u` (finalized at time
/// `t`) and reports improved arrivals through `push`. Each draw is
/// `x = (2m + 1) / 2^53` for a uniform 52-bit `m`, the same value as `1 - r`
/// with `r` from `Open01`; `delay_of(m)` maps it to its geometric delay, and
/// any value above `budget` means the edge fires too late.
#[allow(clippy::too_many_arguments)]
#[inline]
fn relax_in_edges<R: Rng + ?Sized>(
    g: &DirectedGraph,
    obs: &Observation,
    u: NodeId,
    t: u64,
    budget: u64,
    rng: &mut R,
    scratch: &mut Scratch,
    members: &mut Vec<NodeId>,
    delay_of: impl Fn(u64) -> u64,
    mut push: impl FnMut(&mut Scratch, u64, NodeId),
) {
    if budget == 0 {
        return;
    }
    for &v in g.in_neighbors(u) {
        if scratch.done[v.index()] {
            continue;
        }
        let m = MANTISSA_MASK - (rng.next_u64() >> 12);
        let delay = delay_of(m);
        if delay > budget {
            continue;
        }
        let arrival = t + delay;
        let current = scratch.time[v.index()];
        if arrival < current {
            if current == u64::MAX && obs.is_infected(v) {
                members.push(v);
            }
            scratch.mark(v, arrival);
            push(scratch, arrival, v);
        }
    }
}

/// Reverse SI by geometric waiting times: Dijkstra over in-edges where each
/// edge's delay is drawn once, when its head is finalized. Equal arrival
/// times are finalized in ascending node order.
pub(crate) fn rr_fast_from<R: Rng + ?Sized>(
    g: &DirectedGraph,
    obs: &Observation,
    src: NodeId,
    rng: &mut R,
    scratch: &mut Scratch,
) -> RRSet {
    let beta = obs.params().beta;
    let tau = obs.params().tau;
    scratch.clear();
    scratch.mark(src, 0);
    let mut members = Vec::new();
    if obs.is_infected(src) {
        members.push(src);
    }

    match tau.steps() {
        Some(cap) if cap <= BUCKET_LIMIT => {
            // integer arrival times in 0..=cap: one bucket per time; delays are
            // at least 1, so a bucket is complete once the sweep reaches it
            let cap = cap as usize;
            if scratch.buckets.len() <= cap {
                scratch.buckets.resize_with(cap + 1, Vec::new);
            }
            // the delay is the smallest d >= 1 with (1 - beta)^d <= 1 - r, read
            // from tabulated powers
            let powers = std::mem::take(&mut scratch.powers).refit(beta, cap);
            let delay_of = |m: u64| powers.delay(m);
            scratch.buckets[0].push(src);
            let mut pending = 1usize;
            let mut t = 0usize;
            while pending > 0 && t <= cap {
                let mut bucket = std::mem::take(&mut scratch.buckets[t]);
                pending -= bucket.len();
                bucket.sort_unstable();
                for &u in &bucket {
                    if scratch.done[u.index()] || scratch.time[u.index()] != t as u64 {
                        continue;
                    }
                    scratch.done[u.index()] = true;
                    let budget = (cap - t) as u64;
                    relax_in_edges(g, obs, u, t as u64, budget, rng, scratch, &mut members, delay_of, |s, arrival, v| {
                        s.buckets[arrival as usize].push(v);
                        pending += 1;
                    });
                }
                bucket.clear();
                scratch.buckets[t] = bucket;
                t += 1;
            }
            scratch.powers = powers;
        }
        _ => {
            let log_q = if beta < 1.0 { (1.0 - beta).ln() } else { 0.0 };
            let delay_of = |m: u64| if beta >= 1.0 { 1 } else { (unit_open(m).ln() / log_q).ceil().max(1.0) as u64 };
            scratch.heap.push(Reverse((0, src)));
            while let Some(Reverse((t, u))) = scratch.heap.pop() {
                if scratch.done[u.index()] || t > scratch.time[u.index()] {
                    continue;
                }
                scratch.done[u.index()] = true;
                let budget = tau.steps().map_or(u64::MAX, |cap| cap - t);
                relax_in_edges(g, obs, u, t, budget, rng, scratch, &mut members, delay_of, |s, arrival, v| {
                    s.heap.push(Reverse((arrival, v)));
                });
            }
        }
    }
    finish(obs, src, members)
}

/// Cells of the uniform grid over `(0, 1)` used to find delays without a full
/// search.
const DELAY_CELLS: usize = 1 << 12;
const CELL_SHIFT: u32 = 52 - DELAY_CELLS.trailing_zeros();
const MANTISSA_MASK: u64 = (1 << 52) - 1;

/// `(2m + 1) / 2^53`, exact for `m < 2^52`.
#[inline]
fn unit_open(m: u64) -> f64 {
    (2 * m + 1) as f64 * f64::EPSILON / 2.0
}

/// Tabulated survival probabilities `(1 - beta)^d` for `d` in `0..=cap`, and
/// for each cell `[c, c + 1) / DELAY_CELLS` of `x` the range of delays
/// (capped at `cap + 1`) the cell can produce.
#[derive(Debug, Default)]
struct Powers {
    beta: f64,
    survival: Vec<f64>,
    cells: Vec<(u32, u32)>,
}

impl Powers {
    fn refit(mut self, beta: f64, cap: usize) -> Self {
        if self.beta != beta || self.survival.len() != cap + 1 {
            let q = if beta >= 1.0 { 0.0 } else { 1.0 - beta };
            self.beta = beta;
            self.survival.clear();
            self.survival.extend((0..=cap).map(|d| q.powi(d as i32)));
            let bounds: Vec<u32> = (0..=DELAY_CELLS).map(|c| self.search(c as f64 / DELAY_CELLS as f64, 1, cap as u32 + 1)).collect();
            self.cells = bounds.windows(2).map(|w| (w[1], w[0])).collect();
        }
        self
    }

    /// Smallest `d` in `lo..=hi` with `survival[d] <= x`, or `hi` if none
    /// below it qualifies.
    fn search(&self, x: f64, lo: u32, hi: u32) -> u32 {
        let end = (hi as usize).min(self.survival.len());
        lo + self.survival[lo as usize..end].partition_point(|&p| p > x) as u32
    }

    /// Geometric delay for the draw `unit_open(m)`, capped at `cap + 1`.
    #[inline]
    fn delay(&self, m: u64) -> u64 {
        // the cell of x is the top bits of m
        let (lo, hi) = self.cells[(m >> CELL_SHIFT) as usize];
        if lo == hi {
            lo as u64
        } else {
            self.search(unit_open(m), lo, hi) as u64
        }
    }
}

/// Reverse IC: breadth-first over in-edges to depth `tau`, each in-edge kept
/// with probability `p` and examined at most once.
pub(crate) fn rr_ic_from<R: Rng + ?Sized>(
    g: &DirectedGraph,
    obs: &Observation,
    src: NodeId,
    rng: &mut R,
    scratch: &mut Scratch,
) -> RRSet {
    let p = obs.params().beta;
    let tau = obs.params().tau;
    scratch.clear();
    scratch.mark(src, 0);
    scratch.queue.push_back(src);
    while let Some(w) = scratch.queue.pop_front() {
        let d = scratch.time[w.index()];
        if !tau.allows(d + 1) {
            continue;
        }
        for &u in g.in_neighbors(w) {
            if scratch.time[u.index()] != u64::MAX {
                continue;
            }
            if rng.gen_bool(p) {
                scratch.mark(u, d + 1);
                scratch.queue.push_back(u);
            }
        }
    }
    let members = scratch.touched.iter().copied().filter(|&v| obs.is_infected(v)).collect();
    finish(obs, src, members)
}

fn uniform_root<R: Rng + ?Sized>(g: &DirectedGraph, rng: &mut R) -> NodeId {
    NodeId::from(rng.gen_range(0..g.node_count()))
}

fn require_model(obs: &Observation, model: Model) -> Result<()> {
    if obs.params().model != model {
        return Err(invalid(format!("sampler needs {model} parameters, observation has {}", obs.params().model)));
    }
    Ok(())
}

/// Reusable reverse sampler for one graph size; keeps its working buffers
/// between draws. Roots are uniform.
pub struct RRSampler {
    scratch: Scratch,
}

impl RRSampler {
    pub fn new(node_count: usize) -> Self {
        RRSampler { scratch: Scratch::new(node_count) }
    }

    fn check(&self, g: &DirectedGraph, obs: &Observation, model: Model) -> Result<()> {
        require_model(obs, model)?;
        if g.node_count() != obs.node_count() || self.scratch.time.len() != g.node_count() {
            return Err(invalid("sampler, graph and observation sizes differ"));
        }
        Ok(())
    }

    /// Step-by-step reverse SI.
    pub fn naive<R: Rng + ?Sized>(&mut self, g: &DirectedGraph, obs: &Observation, rng: &mut R) -> Result<RRSet> {
        self.check(g, obs, Model::Si)?;
        let src = uniform_root(g, rng);
        Ok(rr_naive_from(g, obs, src, rng, &mut self.scratch))
    }

    /// Reverse SI by geometric waiting times.
    pub fn fast<R: Rng + ?Sized>(&mut self, g: &DirectedGraph, obs: &Observation, rng: &mut R) -> Result<RRSet> {
        self.check(g, obs, Model::Si)?;
        let src = uniform_root(g, rng);
        Ok(rr_fast_from(g, obs, src, rng, &mut self.scratch))
    }

    /// Reverse IC.
    pub fn ic<R: Rng + ?Sized>(&mut self, g: &DirectedGraph, obs: &Observation, rng: &mut R) -> Result<RRSet> {
        self.check(g, obs, Model::Ic)?;
        let src = uniform_root(g, rng);
        Ok(rr_ic_from(g, obs, src, rng, &mut self.scratch))
    }
}

pub fn sample_rr_naive<R: Rng + ?Sized>(g: &DirectedGraph, obs: &Observation, rng: &mut R) -> Result<RRSet> {
    RRSampler::new(g.node_count()).naive(g, obs, rng)
}

pub fn sample_rr_fast<R: Rng + ?Sized>(g: &DirectedGraph, obs: &Observation, rng: &mut R) -> Result<RRSet> {
    RRSampler::new(g.node_count()).fast(g, obs, rng)
}

pub fn sample_rr_ic<R: Rng + ?Sized>(g: &DirectedGraph, obs: &Observation, rng: &mut R) -> Result<RRSet> {
    RRSampler::new(g.node_count()).ic(g, obs, rng)
}

/// Which reverse simulation generates SI sets. IC always uses reverse BFS.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SiSampler {
    #[default]
    Fast,
    Naive,
}

/// How roots are chosen.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum RootSampling {
    /// Independent uniform roots.
    #[default]
    Uniform,
    /// Every block of `n` consecutive sets uses each node once as a root, in
    /// a random order. Each root is still marginally uniform.
    Stratified,
}

#[derive(Clone, Debug, Default)]
struct SetStore {
    offsets: Vec<usize>,
    members: Vec<NodeId>,
    srcs: Vec<NodeId>,
}

impl SetStore {
    fn len(&self) -> usize {
        self.srcs.len()
    }

    fn push(&mut self, set: &RRSet) -> u32 {
        if self.offsets.is_empty() {
            self.offsets.push(0);
        }
        self.members.extend_from_slice(&set.members);
        self.offsets.push(self.members.len());
        self.srcs.push(set.src);
        (self.srcs.len() - 1) as u32
    }

    fn get(&self, i: usize) -> &[NodeId] {
        &self.members[self.offsets[i]..self.offsets[i + 1]]
    }
}

/// The RR pool for one observation: blue and non-empty red sets stored flat,
/// empty red sets kept only as a count, plus per-node inverted indexes.
#[derive(Clone, Debug)]
pub struct RRCollection {
    n: usize,
    infected: Vec<bool>,
    blue: SetStore,
    red: SetStore,
    empty_red: u64,
    delta: usize,
    blue_index: Vec<Vec<u32>>,
    red_index: Vec<Vec<u32>>,
    sampler: SiSampler,
    roots: RootSampling,
    strata_seed: u64,
    generated: u64,
}

const CHUNK: usize = 1 << 16;

impl RRCollection {
    pub fn new(obs: &Observation) -> Self {
        RRCollection {
            n: obs.node_count(),
            infected: obs.infected_mask().to_vec(),
            blue: SetStore::default(),
            red: SetStore::default(),
            empty_red: 0,
            delta: 0,
            blue_index: vec![Vec::new(); obs.node_count()],
            red_index: vec![Vec::new(); obs.node_count()],
            sampler: SiSampler::Fast,
            roots: RootSampling::Uniform,
            strata_seed: 0,
            generated: 0,
        }
    }

    pub fn with_sampler(mut self, sampler: SiSampler) -> Self {
        self.sampler = sampler;
        self
    }

    /// Switches root selection; `seed` fixes the per-block permutations.
    pub fn with_root_sampling(mut self, roots: RootSampling, seed: u64) -> Self {
        self.roots = roots;
        self.strata_seed = seed;
        self
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn is_infected(&self, v: NodeId) -> bool {
        self.infected[v.index()]
    }

    /// `|R|`, every generated set including empty red ones.
    pub fn total(&self) -> u64 {
        self.blue.len() as u64 + self.red.len() as u64 + self.empty_red
    }

    pub fn blue_count(&self) -> usize {
        self.blue.len()
    }

    /// All red sets, empty ones included.
    pub fn red_count(&self) -> u64 {
        self.red.len() as u64 + self.empty_red
    }

    pub fn stored_red_count(&self) -> usize {
        self.red.len()
    }

    pub fn empty_red_count(&self) -> u64 {
        self.empty_red
    }

    /// `Δ`, the largest member count of any generated set.
    pub fn delta(&self) -> usize {
        self.delta
    }

    /// Total stored membership entries.
    pub fn memberships(&self) -> usize {
        self.blue.members.len() + self.red.members.len()
    }

    pub fn blue_set(&self, i: usize) -> &[NodeId] {
        self.blue.get(i)
    }

    pub fn blue_src(&self, i: usize) -> NodeId {
        self.blue.srcs[i]
    }

    /// Stored (non-empty) red set `i`.
    pub fn red_set(&self, i: usize) -> &[NodeId] {
        self.red.get(i)
    }

    pub fn red_src(&self, i: usize) -> NodeId {
        self.red.srcs[i]
    }

    /// Ids of blue sets containing `v`, ascending.
    pub fn blue_containing(&self, v: NodeId) -> &[u32] {
        &self.blue_index[v.index()]
    }

    /// Ids of stored red sets containing `v`, ascending.
    pub fn red_containing(&self, v: NodeId) -> &[u32] {
        &self.red_index[v.index()]
    }

    pub fn push(&mut self, set: &RRSet) {
        debug_assert!(set.members.iter().all(|&v| self.infected[v.index()]));
        self.delta = self.delta.max(set.members.len());
        self.generated += 1;
        match set.color {
            Color::Blue => {
                let id = self.blue.push(set);
                for &v in &set.members {
                    self.blue_index[v.index()].push(id);
                }
            }
            Color::Red if set.members.is_empty() => self.empty_red += 1,
            Color::Red => {
                let id = self.red.push(set);
                for &v in &set.members {
                    self.red_index[v.index()].push(id);
                }
            }
        }
    }

    fn root_for(&self, ordinal: u64, rng: &mut rng::SimRng, perm: &mut Option<(u64, Vec<NodeId>)>) -> NodeId {
        match self.roots {
            RootSampling::Uniform => NodeId::from(rng.gen_range(0..self.n)),
            RootSampling::Stratified => {
                let block = ordinal / self.n as u64;
                if perm.as_ref().map(|(b, _)| *b) != Some(block) {
                    let mut order: Vec<NodeId> = (0..self.n).map(NodeId::from).collect();
                    order.shuffle(&mut rng::stream(self.strata_seed, block));
                    *perm = Some((block, order));
                }
                perm.as_ref().unwrap().1[(ordinal % self.n as u64) as usize]
            }
        }
    }

    /// Appends `count` independent RR sets. Set `i` of the batch runs on
    /// stream `i` of one base seed drawn from `rng`, so the result does not
    /// depend on the thread count.
    pub fn extend<R: Rng + ?Sized>(&mut self, g: &DirectedGraph, obs: &Observation, count: u64, rng: &mut R) -> Result<()> {
        if count == 0 {
            return Err(invalid("count must be at least 1"));
        }
        if g.node_count() != self.n || obs.node_count() != self.n || obs.infected_mask() != &self.infected[..] {
            return Err(invalid("graph/observation do not match this collection"));
        }
        let base = rng::split_base(rng);
        let start = self.generated;
        let model = obs.params().model;
        let sampler = self.sampler;
        let mut done = 0u64;
        while done < count {
            let len = (count - done).min(CHUNK as u64);
            let this = &*self;
            let sets: Vec<RRSet> = (done..done + len)
                .into_par_iter()
                .map_init(
                    || (Scratch::new(this.n), None),
                    |(scratch, perm), i| {
                        let mut r = rng::stream(base, i);
                        let src = this.root_for(start + i, &mut r, perm);
                        match (model, sampler) {
                            (Model::Ic, _) => rr_ic_from(g, obs, src, &mut r, scratch),
                            (Model::Si, SiSampler::Fast) => rr_fast_from(g, obs, src, &mut r, scratch),
                            (Model::Si, SiSampler::Naive) => rr_naive_from(g, obs, src, &mut r, scratch),
                        }
                    },
                )
                .collect();
            for s in &sets {
                self.push(s);
            }
            done += len;
        }
        Ok(())
    }

    /// One set per line, `color src: members...`; empty red sets are
    /// summarised in a trailing comment.
    pub fn debug_dump(&self) -> String {
        let mut out = String::new();
        let mut line = |color: &str, src: NodeId, members: &[NodeId]| {
            let _ = write!(out, "{color} {src}:");
            for m in members {
                let _ = write!(out, " {m}");
            }
            out.push('\n');
        };
        for i in 0..self.blue.len() {
            line("blue", self.blue.srcs[i], self.blue.get(i));
        }
        for i in 0..self.red.len() {
            line("red", self.red.srcs[i], self.red.get(i));
        }
        let _ = writeln!(out, "# empty red sets: {}", self.empty_red);
        out
    }
}

/// Appends `count` RR sets to `collection`: fast reverse sampling for SI,
/// reverse BFS for IC.
pub fn batch_sample<R: Rng + ?Sized>(
    collection: &mut RRCollection,
    g: &DirectedGraph,
    obs: &Observation,
    count: u64,
    rng: &mut R,
) -> Result<()> {
    collection.extend(g, obs, count, rng)
}
