//! C interface to the `sisi` library.
//!
//! Objects are opaque handles created by `*_new`/`*_load` style functions and
//! released with the matching `*_free`. Every fallible call returns a
//! [`SisiStatus`]; on failure [`sisi_last_error`] describes the problem for the
//! calling thread. Node ids crossing the boundary are the external ids used in
//! the graph file (or `0..n` for generated graphs).

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use sisi::cascade::{estimate_sd_forward, make_observation_with_size};
use sisi::graph::{gen_grid, load_edge_list_file};
use sisi::metrics::{detection_rate, f1_score};
use sisi::{rng, Algorithm, DetectOptions, Detection, DirectedGraph, Error, IdMap, Mode, Model, ModelParams, NodeId, Observation, Tau};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SisiStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Io = 4,
    NoBlueSets = 5,
    Degenerate = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SisiModel {
    Si = 0,
    Ic = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SisiAlgorithm {
    Sisi = 0,
    SisiRelax = 1,
    Greedy = 2,
    MaxDegree = 3,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SisiMode {
    Strict = 0,
    Relax = 1,
}

/// Detection settings. Start from [`sisi_detect_config_default`].
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct SisiDetectConfig {
    pub algorithm: SisiAlgorithm,
    pub epsilon: f64,
    pub delta: f64,
    pub seed: u64,
    pub trials_per_eval: usize,
    pub eval_trials: usize,
    /// 0 means no cap.
    pub max_samples: u64,
    /// 0 means no cap.
    pub max_memberships: u64,
}

pub struct SisiGraph {
    graph: DirectedGraph,
    ids: IdMap,
}

pub struct SisiObservation {
    obs: Observation,
}

pub struct SisiReport {
    detection: Detection,
    sources: Vec<u64>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(SisiStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Parse { .. } | Error::SelfLoop { .. } | Error::DuplicateEdge { .. } => SisiStatus::Parse,
            Error::InvalidArgument(_) | Error::EmptyCollection => SisiStatus::InvalidArgument,
            Error::NoBlueSets => SisiStatus::NoBlueSets,
            Error::Degenerate(_) => SisiStatus::Degenerate,
            Error::Io(_) => SisiStatus::Io,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(SisiStatus::NullPointer, format!("{what} is null"))
}

fn bad(msg: impl Into<String>) -> Failure {
    Failure(SisiStatus::InvalidArgument, msg.into())
}

/// Runs `f`, converting errors and panics into a status plus last-error text.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SisiStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            SisiStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal error: {msg}"));
            SisiStatus::Panic
        }
    }
}

unsafe fn as_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn as_slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn as_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| bad(format!("{what} is not valid UTF-8")))
}

unsafe fn store<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

fn internal_ids(ids: &IdMap, external: &[u64]) -> Result<Vec<NodeId>, Failure> {
    external
        .iter()
        .map(|&e| ids.internal(e).ok_or_else(|| bad(format!("node {e} is not in the graph"))))
        .collect()
}

fn model(m: SisiModel) -> Model {
    match m {
        SisiModel::Si => Model::Si,
        SisiModel::Ic => Model::Ic,
    }
}

fn tau(steps: u64) -> Tau {
    if steps == 0 {
        Tau::Infinite
    } else {
        Tau::Steps(steps)
    }
}

/// Message for the last failed call on this thread, or null. Valid until the
/// next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn sisi_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Loads an edge-list file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sisi_graph_load(path: *const c_char, out: *mut *mut SisiGraph) -> SisiStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let path = as_str(path, "path")?;
        let (graph, ids) = load_edge_list_file(path)?;
        store(out, SisiGraph { graph, ids })
    })
}

/// Builds a graph on nodes `0..n` from `m` edges `from[i] -> to[i]`.
///
/// # Safety
/// `from` and `to` must point to `m` readable values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sisi_graph_from_edges(
    n: usize,
    from: *const u32,
    to: *const u32,
    m: usize,
    out: *mut *mut SisiGraph,
) -> SisiStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let from = as_slice(from, m, "from")?;
        let to = as_slice(to, m, "to")?;
        let edges: Vec<(NodeId, NodeId)> = from.iter().zip(to).map(|(&a, &b)| (NodeId(a), NodeId(b))).collect();
        let graph = DirectedGraph::from_edges(n, &edges)?;
        store(out, SisiGraph { graph, ids: IdMap::identity(n) })
    })
}

/// `rows x cols` grid; node `r * cols + c`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sisi_graph_grid(rows: usize, cols: usize, out: *mut *mut SisiGraph) -> SisiStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let graph = gen_grid(rows, cols)?;
        let ids = IdMap::identity(graph.node_count());
        store(out, SisiGraph { graph, ids })
    })
}

/// # Safety
/// `g` must be null or a live graph handle.
#[no_mangle]
pub unsafe extern "C" fn sisi_graph_node_count(g: *const SisiGraph) -> usize {
    g.as_ref().map_or(0, |g| g.graph.node_count())
}

/// # Safety
/// `g` must be null or a live graph handle.
#[no_mangle]
pub unsafe extern "C" fn sisi_graph_edge_count(g: *const SisiGraph) -> usize {
    g.as_ref().map_or(0, |g| g.graph.edge_count())
}

/// # Safety
/// `g` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn sisi_graph_free(g: *mut SisiGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Observation with the given infected ids. `tau_steps` 0 means no limit.
/// `true_sources` may be null when `source_count` is 0.
///
/// # Safety
/// Pointers must reference the stated number of values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sisi_observation_new(
    g: *const SisiGraph,
    infected: *const u64,
    infected_count: usize,
    true_sources: *const u64,
    source_count: usize,
    model_kind: SisiModel,
    beta: f64,
    tau_steps: u64,
    out: *mut *mut SisiObservation,
) -> SisiStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let g = as_ref(g, "graph")?;
        let infected = internal_ids(&g.ids, as_slice(infected, infected_count, "infected")?)?;
        let truth = if source_count == 0 {
            None
        } else {
            Some(internal_ids(&g.ids, as_slice(true_sources, source_count, "true_sources")?)?)
        };
        let params = ModelParams::new(model(model_kind), beta, tau(tau_steps))?;
        let obs = Observation::new(g.graph.node_count(), infected, params, truth)?;
        store(out, SisiObservation { obs })
    })
}

/// Reads an observation file whose ids refer to `g`.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sisi_observation_load(g: *const SisiGraph, path: *const c_char, out: *mut *mut SisiObservation) -> SisiStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let g = as_ref(g, "graph")?;
        let obs = Observation::load(as_str(path, "path")?, &g.ids)?;
        store(out, SisiObservation { obs })
    })
}

/// Simulates from `sources` until at least `min_infected` nodes are infected
/// and records the result, with the stopping step as `tau`.
///
/// # Safety
/// `sources` must point to `source_count` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sisi_observation_simulate(
    g: *const SisiGraph,
    sources: *const u64,
    source_count: usize,
    model_kind: SisiModel,
    beta: f64,
    min_infected: usize,
    tau_cap: u64,
    seed: u64,
    out: *mut *mut SisiObservation,
) -> SisiStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let g = as_ref(g, "graph")?;
        let mut src = internal_ids(&g.ids, as_slice(sources, source_count, "sources")?)?;
        src.sort_unstable();
        src.dedup();
        let mut r = rng::from_seed(seed);
        let obs = make_observation_with_size(&g.graph, &src, model(model_kind), beta, min_infected, tau_cap, &mut r)?;
        store(out, SisiObservation { obs })
    })
}

/// # Safety
/// `o` must be null or a live observation handle.
#[no_mangle]
pub unsafe extern "C" fn sisi_observation_infected_count(o: *const SisiObservation) -> usize {
    o.as_ref().map_or(0, |o| o.obs.k())
}

/// Step limit of the observation; 0 when unlimited.
///
/// # Safety
/// `o` must be null or a live observation handle.
#[no_mangle]
pub unsafe extern "C" fn sisi_observation_tau(o: *const SisiObservation) -> u64 {
    o.as_ref().and_then(|o| o.obs.params().tau.steps()).unwrap_or(0)
}

/// # Safety
/// `o` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn sisi_observation_free(o: *mut SisiObservation) {
    if !o.is_null() {
        drop(Box::from_raw(o));
    }
}

#[no_mangle]
pub extern "C" fn sisi_detect_config_default() -> SisiDetectConfig {
    let d = DetectOptions::default();
    SisiDetectConfig {
        algorithm: SisiAlgorithm::SisiRelax,
        epsilon: d.epsilon,
        delta: d.delta,
        seed: d.seed,
        trials_per_eval: d.trials_per_eval,
        eval_trials: d.eval_trials,
        max_samples: d.max_samples.unwrap_or(0),
        max_memberships: d.max_memberships.unwrap_or(0),
    }
}

/// Runs a detector. `cfg` may be null for defaults.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sisi_detect(
    g: *const SisiGraph,
    o: *const SisiObservation,
    cfg: *const SisiDetectConfig,
    out: *mut *mut SisiReport,
) -> SisiStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let g = as_ref(g, "graph")?;
        let o = as_ref(o, "observation")?;
        let cfg = cfg.as_ref().copied().unwrap_or_else(|| sisi_detect_config_default());
        let algorithm = match cfg.algorithm {
            SisiAlgorithm::Sisi => Algorithm::Sisi,
            SisiAlgorithm::SisiRelax => Algorithm::SisiRelax,
            SisiAlgorithm::Greedy => Algorithm::Greedy,
            SisiAlgorithm::MaxDegree => Algorithm::MaxDegree,
        };
        let opts = DetectOptions {
            epsilon: cfg.epsilon,
            delta: cfg.delta,
            seed: cfg.seed,
            trials_per_eval: cfg.trials_per_eval,
            eval_trials: cfg.eval_trials,
            max_samples: (cfg.max_samples > 0).then_some(cfg.max_samples),
            max_memberships: (cfg.max_memberships > 0).then_some(cfg.max_memberships),
        };
        let detection = sisi::detect(&g.graph, &o.obs, algorithm, &opts)?;
        let sources = detection.sources.iter().map(|&v| g.ids.external(v)).collect();
        store(out, SisiReport { detection, sources })
    })
}

/// # Safety
/// `r` must be null or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn sisi_report_source_count(r: *const SisiReport) -> usize {
    r.as_ref().map_or(0, |r| r.sources.len())
}

/// Copies up to `capacity` source ids into `buf` and returns the total count.
///
/// # Safety
/// `buf` must have room for `capacity` values (may be null if 0).
#[no_mangle]
pub unsafe extern "C" fn sisi_report_sources(r: *const SisiReport, buf: *mut u64, capacity: usize) -> usize {
    let Some(r) = r.as_ref() else { return 0 };
    if !buf.is_null() {
        let n = capacity.min(r.sources.len());
        ptr::copy_nonoverlapping(r.sources.as_ptr(), buf, n);
    }
    r.sources.len()
}

/// # Safety
/// `r` must be null or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn sisi_report_estimated_sd(r: *const SisiReport) -> f64 {
    r.as_ref().map_or(f64::NAN, |r| r.detection.estimated_sd)
}

/// # Safety
/// `r` must be null or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn sisi_report_samples_used(r: *const SisiReport) -> u64 {
    r.as_ref().map_or(0, |r| r.detection.samples_used)
}

/// Size of the largest RR set; 0 for the baselines.
///
/// # Safety
/// `r` must be null or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn sisi_report_delta(r: *const SisiReport) -> usize {
    r.as_ref().and_then(|r| r.detection.delta).unwrap_or(0)
}

/// # Safety
/// `r` must be null or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn sisi_report_budget_exhausted(r: *const SisiReport) -> bool {
    r.as_ref().is_some_and(|r| r.detection.budget_exhausted)
}

/// # Safety
/// `r` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn sisi_report_free(r: *mut SisiReport) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// Forward Monte Carlo estimate of the expected symmetric difference between
/// cascades from `sources` and the observed set.
///
/// # Safety
/// `sources` must point to `count` values; `mean` and `stderr` must be writable
/// (`stderr` may be null).
#[no_mangle]
pub unsafe extern "C" fn sisi_estimate_sd(
    g: *const SisiGraph,
    o: *const SisiObservation,
    sources: *const u64,
    count: usize,
    trials: usize,
    seed: u64,
    mean: *mut f64,
    stderr: *mut f64,
) -> SisiStatus {
    guard(|| {
        if mean.is_null() {
            return Err(null("mean"));
        }
        let g = as_ref(g, "graph")?;
        let o = as_ref(o, "observation")?;
        let s = internal_ids(&g.ids, as_slice(sources, count, "sources")?)?;
        let est = estimate_sd_forward(&g.graph, &s, &o.obs, trials, &mut rng::from_seed(seed))?;
        *mean = est.mean;
        if !stderr.is_null() {
            *stderr = est.stderr;
        }
        Ok(())
    })
}

/// F1 score and detection rate (percent) of `detected` against `truth`.
/// Either output may be null.
///
/// # Safety
/// Arrays must hold the stated counts.
#[no_mangle]
pub unsafe extern "C" fn sisi_score(
    detected: *const u64,
    detected_count: usize,
    truth: *const u64,
    truth_count: usize,
    f1: *mut f64,
    rate: *mut f64,
) -> SisiStatus {
    guard(|| {
        let to_ids = |v: &[u64]| -> Result<Vec<NodeId>, Failure> {
            v.iter().map(|&x| u32::try_from(x).map(NodeId).map_err(|_| bad(format!("id {x} out of range")))).collect()
        };
        let s = to_ids(as_slice(detected, detected_count, "detected")?)?;
        let t = to_ids(as_slice(truth, truth_count, "truth")?)?;
        let f = f1_score(&s, &t)?;
        let d = detection_rate(&s, &t)?;
        if !f1.is_null() {
            *f1 = f;
        }
        if !rate.is_null() {
            *rate = d;
        }
        Ok(())
    })
}

/// Sample threshold used by the stopping rule.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sisi_lambda(epsilon: f64, delta: f64, k: usize, mode: SisiMode, out: *mut f64) -> SisiStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let mode = match mode {
            SisiMode::Strict => Mode::Strict,
            SisiMode::Relax => Mode::Relax,
        };
        *out = sisi::compute_lambda(epsilon, delta, k, mode)?;
        Ok(())
    })
}
