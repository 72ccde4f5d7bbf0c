//! C ABI over `mvcp`.
//!
//! Objects cross the boundary as opaque heap handles created by `*_load`,
//! `*_build` or similar constructors and released with the matching `*_free`.
//! Every fallible call returns an [`MvcpStatus`]; on failure the message is
//! available from [`mvcp_last_error_message`] on the same thread until the
//! next failing call. Panics are caught and reported as `MVCP_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use mvcp::als::{self, AlsConfig, FactorModel, InitKind};
use mvcp::embedding::{extract_embeddings, EmbeddingSource};
use mvcp::eval::{evaluate, EvalConfig};
use mvcp::io::{self, EmbeddingMatrix, FeatureMatrix, Graph, LabelSet};
use mvcp::knn::{build_knn_view, KnnView};
use mvcp::tensor::{self, Tensor3};
use mvcp::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MvcpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    Shape = 5,
    Numerical = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MvcpInit {
    RandomUniform = 0,
    RandomNormal = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MvcpSource {
    A = 0,
    B = 1,
    AConcatB = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct MvcpAlsConfig {
    pub rank: usize,
    pub max_iters: usize,
    pub tol: f64,
    pub seed: u64,
    pub init: MvcpInit,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct MvcpEvalSummary {
    pub micro_f1_mean: f64,
    pub micro_f1_std: f64,
    pub macro_f1_mean: f64,
    pub macro_f1_std: f64,
}

pub struct MvcpGraph(Graph);
pub struct MvcpFeatures(FeatureMatrix);
pub struct MvcpLabels(LabelSet);
pub struct MvcpKnn(KnnView);
pub struct MvcpTensor(Tensor3);
pub struct MvcpModel(FactorModel);
pub struct MvcpEmbedding(EmbeddingMatrix);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> MvcpStatus {
    match e {
        Error::Io { .. } => MvcpStatus::Io,
        Error::Parse { .. } | Error::Empty(_) => MvcpStatus::Parse,
        Error::Invalid(_) => MvcpStatus::InvalidArgument,
        Error::Shape(_) => MvcpStatus::Shape,
        Error::Numerical(_) => MvcpStatus::Numerical,
        Error::Stage { source, .. } => status_of(source),
    }
}

struct Fail(MvcpStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(MvcpStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> MvcpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MvcpStatus::Ok,
        Ok(Err(Fail(s, msg))) => {
            set_error(msg);
            s
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            MvcpStatus::Panic
        }
    }
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, Fail> {
    if p.is_null() {
        return Err(null("path"));
    }
    let s = CStr::from_ptr(p).to_str().map_err(|_| {
        Fail(
            MvcpStatus::InvalidArgument,
            "path is not valid UTF-8".into(),
        )
    })?;
    Ok(PathBuf::from(s))
}

unsafe fn obj<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut *mut T, v: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(v));
    Ok(())
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Message for the last failing call on this thread, or NULL. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn mvcp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Static, NUL-terminated library version.
#[no_mangle]
pub extern "C" fn mvcp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

// ---- graph -----------------------------------------------------------------

/// Loads a whitespace edge list. `num_nodes == 0` infers the node count.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn mvcp_graph_load(
    path: *const c_char,
    num_nodes: usize,
    out: *mut *mut MvcpGraph,
) -> MvcpStatus {
    guard(|| {
        let p = path_arg(path)?;
        let (g, _) = io::load_edge_list(&p, (num_nodes > 0).then_some(num_nodes))?;
        put(out, MvcpGraph(g))
    })
}

/// Builds a graph from `len` pairs `(us[i], vs[i])`.
///
/// # Safety
/// `us` and `vs` must point to `len` readable elements (may be NULL when
/// `len == 0`).
#[no_mangle]
pub unsafe extern "C" fn mvcp_graph_from_pairs(
    num_nodes: usize,
    us: *const usize,
    vs: *const usize,
    len: usize,
    out: *mut *mut MvcpGraph,
) -> MvcpStatus {
    guard(|| {
        let pairs: Vec<(usize, usize)> = if len == 0 {
            Vec::new()
        } else {
            if us.is_null() || vs.is_null() {
                return Err(null("pairs"));
            }
            let us = std::slice::from_raw_parts(us, len);
            let vs = std::slice::from_raw_parts(vs, len);
            us.iter().copied().zip(vs.iter().copied()).collect()
        };
        let (g, _) = Graph::from_pairs(num_nodes, pairs)?;
        put(out, MvcpGraph(g))
    })
}

/// # Safety
/// `g` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn mvcp_graph_num_nodes(g: *const MvcpGraph) -> usize {
    g.as_ref().map_or(0, |g| g.0.num_nodes())
}

/// Undirected edge count.
///
/// # Safety
/// `g` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn mvcp_graph_num_edges(g: *const MvcpGraph) -> usize {
    g.as_ref().map_or(0, |g| g.0.num_edges())
}

/// # Safety
/// `g` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mvcp_graph_free(g: *mut MvcpGraph) {
    free(g)
}

// ---- features and labels ---------------------------------------------------

/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn mvcp_features_load(
    path: *const c_char,
    out: *mut *mut MvcpFeatures,
) -> MvcpStatus {
    guard(|| {
        let f = io::load_features(&path_arg(path)?, None)?;
        put(out, MvcpFeatures(f))
    })
}

/// # Safety
/// `f` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn mvcp_features_num_nodes(f: *const MvcpFeatures) -> usize {
    f.as_ref().map_or(0, |f| f.0.num_nodes())
}

/// # Safety
/// `f` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mvcp_features_free(f: *mut MvcpFeatures) {
    free(f)
}

/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn mvcp_labels_load(
    path: *const c_char,
    out: *mut *mut MvcpLabels,
) -> MvcpStatus {
    guard(|| {
        let l = io::load_labels(&path_arg(path)?)?;
        put(out, MvcpLabels(l))
    })
}

/// # Safety
/// `l` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mvcp_labels_free(l: *mut MvcpLabels) {
    free(l)
}

// ---- K-NN view and tensor --------------------------------------------------

/// # Safety
/// `f` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn mvcp_knn_build(
    f: *const MvcpFeatures,
    k: usize,
    out: *mut *mut MvcpKnn,
) -> MvcpStatus {
    guard(|| {
        let z = build_knn_view(&obj(f, "features")?.0, k)?;
        put(out, MvcpKnn(z))
    })
}

/// Directed edge count.
///
/// # Safety
/// `z` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn mvcp_knn_num_edges(z: *const MvcpKnn) -> usize {
    z.as_ref().map_or(0, |z| z.0.num_edges())
}

/// # Safety
/// `z` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mvcp_knn_free(z: *mut MvcpKnn) {
    free(z)
}

/// Stacks the adjacency and K-NN views. A NULL `knn` yields an adjacency-only
/// tensor with one view.
///
/// # Safety
/// `g` must be a live handle, `knn` a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn mvcp_tensor_stack(
    g: *const MvcpGraph,
    knn: *const MvcpKnn,
    out: *mut *mut MvcpTensor,
) -> MvcpStatus {
    guard(|| {
        let g = &obj(g, "graph")?.0;
        let x = match knn.as_ref() {
            Some(z) => tensor::stack_views(g, &z.0)?,
            None => tensor::adjacency_only(g)?,
        };
        put(out, MvcpTensor(x))
    })
}

/// # Safety
/// `x` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn mvcp_tensor_nnz(x: *const MvcpTensor) -> usize {
    x.as_ref().map_or(0, |x| x.0.nnz())
}

/// # Safety
/// `x` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mvcp_tensor_free(x: *mut MvcpTensor) {
    free(x)
}

// ---- decomposition ---------------------------------------------------------

#[no_mangle]
pub extern "C" fn mvcp_als_config_default() -> MvcpAlsConfig {
    let d = AlsConfig::default();
    MvcpAlsConfig {
        rank: d.rank,
        max_iters: d.max_iters,
        tol: d.tol,
        seed: d.seed,
        init: MvcpInit::RandomUniform,
    }
}

/// # Safety
/// `x` must be a live handle, `config` readable and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mvcp_decompose(
    x: *const MvcpTensor,
    config: *const MvcpAlsConfig,
    out: *mut *mut MvcpModel,
) -> MvcpStatus {
    guard(|| {
        let x = &obj(x, "tensor")?.0;
        let c = obj(config, "config")?;
        let cfg = AlsConfig {
            rank: c.rank,
            max_iters: c.max_iters,
            tol: c.tol,
            seed: c.seed,
            init: match c.init {
                MvcpInit::RandomUniform => InitKind::RandomUniform,
                MvcpInit::RandomNormal => InitKind::RandomNormal,
            },
        };
        put(out, MvcpModel(als::decompose(x, &cfg)?))
    })
}

/// # Safety
/// `m` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn mvcp_model_rank(m: *const MvcpModel) -> usize {
    m.as_ref().map_or(0, |m| m.0.rank())
}

/// # Safety
/// `m` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn mvcp_model_iterations(m: *const MvcpModel) -> usize {
    m.as_ref().map_or(0, |m| m.0.iterations())
}

/// # Safety
/// `m` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn mvcp_model_converged(m: *const MvcpModel) -> bool {
    m.as_ref().is_some_and(|m| m.0.converged)
}

/// Copies the per-iteration fit values into `buf`. `*len` is the total
/// count on return; `MVCP_STATUS_BUFFER_TOO_SMALL` if `cap` is short, in which
/// case nothing is copied. `buf` may be NULL to query the length.
///
/// # Safety
/// `m` must be a live handle, `buf` writable for `cap` doubles, `len` writable.
#[no_mangle]
pub unsafe extern "C" fn mvcp_model_fit_history(
    m: *const MvcpModel,
    buf: *mut f64,
    cap: usize,
    len: *mut usize,
) -> MvcpStatus {
    guard(|| {
        let h = &obj(m, "model")?.0.fit_history;
        copy_out(h, buf, cap, len)
    })
}

unsafe fn copy_out(src: &[f64], buf: *mut f64, cap: usize, len: *mut usize) -> Result<(), Fail> {
    if len.is_null() {
        return Err(null("len"));
    }
    *len = src.len();
    if buf.is_null() {
        return Ok(());
    }
    if cap < src.len() {
        return Err(Fail(
            MvcpStatus::BufferTooSmall,
            format!("need {} elements, got {cap}", src.len()),
        ));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    Ok(())
}

/// Writes the model directory (factors, scales, manifest).
///
/// # Safety
/// `m` must be a live handle and `dir` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn mvcp_model_save(m: *const MvcpModel, dir: *const c_char) -> MvcpStatus {
    guard(|| {
        let m = &obj(m, "model")?.0;
        als::save_model(m, None, &path_arg(dir)?)?;
        Ok(())
    })
}

/// # Safety
/// `dir` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mvcp_model_load(
    dir: *const c_char,
    out: *mut *mut MvcpModel,
) -> MvcpStatus {
    guard(|| {
        let m = als::load_model(&path_arg(dir)?)?;
        put(out, MvcpModel(m))
    })
}

/// # Safety
/// `m` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mvcp_model_free(m: *mut MvcpModel) {
    free(m)
}

// ---- embeddings and evaluation ---------------------------------------------

/// # Safety
/// `m` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mvcp_embedding_extract(
    m: *const MvcpModel,
    source: MvcpSource,
    out: *mut *mut MvcpEmbedding,
) -> MvcpStatus {
    guard(|| {
        let m = &obj(m, "model")?.0;
        let s = match source {
            MvcpSource::A => EmbeddingSource::A,
            MvcpSource::B => EmbeddingSource::B,
            MvcpSource::AConcatB => EmbeddingSource::AConcatB,
        };
        put(out, MvcpEmbedding(extract_embeddings(m, s)?))
    })
}

/// # Safety
/// `e` must be a live handle; `rows` and `cols` writable.
#[no_mangle]
pub unsafe extern "C" fn mvcp_embedding_shape(
    e: *const MvcpEmbedding,
    rows: *mut usize,
    cols: *mut usize,
) -> MvcpStatus {
    guard(|| {
        let e = &obj(e, "embedding")?.0;
        if rows.is_null() || cols.is_null() {
            return Err(null("rows/cols"));
        }
        *rows = e.num_nodes();
        *cols = e.dim();
        Ok(())
    })
}

/// Copies the row-major embedding matrix into `buf` (see
/// [`mvcp_model_fit_history`] for the length protocol).
///
/// # Safety
/// `e` must be a live handle, `buf` writable for `cap` doubles, `len` writable.
#[no_mangle]
pub unsafe extern "C" fn mvcp_embedding_copy(
    e: *const MvcpEmbedding,
    buf: *mut f64,
    cap: usize,
    len: *mut usize,
) -> MvcpStatus {
    guard(|| copy_out(obj(e, "embedding")?.0.matrix().as_slice(), buf, cap, len))
}

/// # Safety
/// `e` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn mvcp_embedding_save(
    e: *const MvcpEmbedding,
    path: *const c_char,
) -> MvcpStatus {
    guard(|| {
        io::save_embeddings(&obj(e, "embedding")?.0, &path_arg(path)?)?;
        Ok(())
    })
}

/// # Safety
/// `e` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mvcp_embedding_free(e: *mut MvcpEmbedding) {
    free(e)
}

/// Repeated stratified one-vs-rest evaluation; scores are fractions in [0, 1].
///
/// # Safety
/// `e` and `labels` must be live handles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mvcp_evaluate(
    e: *const MvcpEmbedding,
    labels: *const MvcpLabels,
    train_fraction: f64,
    repeats: usize,
    seed: u64,
    inverse_l2: f64,
    out: *mut MvcpEvalSummary,
) -> MvcpStatus {
    guard(|| {
        let e = &obj(e, "embedding")?.0;
        let l = obj(labels, "labels")?.0.aligned_to(e.num_nodes())?;
        if out.is_null() {
            return Err(null("out"));
        }
        let r = evaluate(
            e,
            &l,
            &EvalConfig {
                train_fraction,
                repeats,
                seed,
                inverse_l2,
            },
        )?;
        *out = MvcpEvalSummary {
            micro_f1_mean: r.micro_f1_mean,
            micro_f1_std: r.micro_f1_std,
            macro_f1_mean: r.macro_f1_mean,
            macro_f1_std: r.macro_f1_std,
        };
        Ok(())
    })
}
