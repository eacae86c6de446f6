//! C ABI over `conflict-core`.
//!
//! Every fallible function returns a [`CfStatus`]; on failure the message is
//! available from [`cf_last_error_message`] on the same thread. Objects are
//! opaque handles created by `*_new`/`*_load` functions and released with the
//! matching `*_free`. Panics never cross the boundary; they surface as
//! `CF_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use conflict_core::classifier::{focal_loss, predict, ProbeModel};
use conflict_core::cluster::{adjusted_rand_index_labels, build_pruned_graph, louvain, Partition};
use conflict_core::embedding::{
    normalized_cosine, pairwise_similarity, read_embeddings, EmbeddingMatrix, SimilarityMatrix,
};
use conflict_core::stats::{
    fisher_exact, permutation_test, ContingencyTable2x2, PermutationConfig, PermutationMode,
};
use conflict_core::{annotation, Error};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Format = 4,
    Domain = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CfPermutationMode {
    Auto = 0,
    Exact = 1,
    MonteCarlo = 2,
}

/// Loaded embedding matrix.
pub struct CfEmbeddings {
    inner: EmbeddingMatrix,
}

/// Pairwise normalized-cosine similarities.
pub struct CfSimilarity {
    inner: SimilarityMatrix,
}

/// Community assignment of a clustered graph.
pub struct CfPartition {
    inner: Partition,
}

/// Linear verdict probe.
pub struct CfProbe {
    inner: ProbeModel,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(CfStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Io { .. } | Error::MissingArtifact { .. } => CfStatus::Io,
            Error::EmbeddingFormat { .. }
            | Error::ModelFormat { .. }
            | Error::Table { .. }
            | Error::Csv(_)
            | Error::Annotation { .. } => CfStatus::Format,
            Error::Config(_) | Error::Lexicon(_) => CfStatus::InvalidArgument,
            _ => CfStatus::Domain,
        };
        Failure(status, e.to_string())
    }
}

fn null(name: &str) -> Failure {
    Failure(CfStatus::NullPointer, format!("`{name}` is null"))
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> CfStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CfStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            CfStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(name))
}

unsafe fn handle<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(name))
}

unsafe fn string(p: *const c_char, name: &str) -> Result<String, Failure> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(str::to_owned)
        .map_err(|_| Failure(CfStatus::InvalidArgument, format!("`{name}` is not UTF-8")))
}

unsafe fn path(p: *const c_char) -> Result<PathBuf, Failure> {
    string(p, "path").map(PathBuf::from)
}

fn bools(v: &[u8]) -> Vec<bool> {
    v.iter().map(|&b| b != 0).collect()
}

fn boxed<T>(value: T) -> *mut T {
    Box::into_raw(Box::new(value))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// valid until the next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn cf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Load an EMB1 file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out_embeddings` writable.
#[no_mangle]
pub unsafe extern "C" fn cf_embeddings_load(
    path_utf8: *const c_char,
    out_embeddings: *mut *mut CfEmbeddings,
) -> CfStatus {
    guard(|| {
        let slot = out(out_embeddings, "out_embeddings")?;
        let inner = read_embeddings(&path(path_utf8)?)?;
        *slot = boxed(CfEmbeddings { inner });
        Ok(())
    })
}

/// Build an embedding matrix from `count` NUL-terminated ids and
/// `count × dim` row-major values.
///
/// # Safety
/// `ids` must hold `count` valid strings and `values` `count × dim` floats.
#[no_mangle]
pub unsafe extern "C" fn cf_embeddings_new(
    ids: *const *const c_char,
    count: usize,
    dim: usize,
    values: *const f32,
    out_embeddings: *mut *mut CfEmbeddings,
) -> CfStatus {
    guard(|| {
        let slot = out(out_embeddings, "out_embeddings")?;
        let id_ptrs = slice(ids, count, "ids")?;
        let mut owned = Vec::with_capacity(count);
        for &p in id_ptrs {
            owned.push(string(p, "id")?);
        }
        let total = count
            .checked_mul(dim)
            .ok_or_else(|| Failure(CfStatus::InvalidArgument, "count × dim overflows".into()))?;
        let values = slice(values, total, "values")?.to_vec();
        let inner = EmbeddingMatrix::new(owned, dim, values)?;
        *slot = boxed(CfEmbeddings { inner });
        Ok(())
    })
}

/// # Safety
/// `embeddings` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn cf_embeddings_count(embeddings: *const CfEmbeddings) -> usize {
    embeddings.as_ref().map_or(0, |e| e.inner.len())
}

/// # Safety
/// `embeddings` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn cf_embeddings_dim(embeddings: *const CfEmbeddings) -> usize {
    embeddings.as_ref().map_or(0, |e| e.inner.dim())
}

/// # Safety
/// `embeddings` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cf_embeddings_free(embeddings: *mut CfEmbeddings) {
    if !embeddings.is_null() {
        drop(Box::from_raw(embeddings));
    }
}

/// Normalized cosine `(cos + 1) / 2` of two `dim`-length vectors.
///
/// # Safety
/// `u` and `v` must point to `dim` floats; `out_similarity` writable.
#[no_mangle]
pub unsafe extern "C" fn cf_normalized_cosine(
    u: *const f32,
    v: *const f32,
    dim: usize,
    out_similarity: *mut f64,
) -> CfStatus {
    guard(|| {
        let slot = out(out_similarity, "out_similarity")?;
        *slot = normalized_cosine(slice(u, dim, "u")?, slice(v, dim, "v")?)?;
        Ok(())
    })
}

/// All pairwise similarities of an embedding matrix.
///
/// # Safety
/// `embeddings` must be a live handle; `out_similarity` writable.
#[no_mangle]
pub unsafe extern "C" fn cf_similarity_new(
    embeddings: *const CfEmbeddings,
    out_similarity: *mut *mut CfSimilarity,
) -> CfStatus {
    guard(|| {
        let slot = out(out_similarity, "out_similarity")?;
        let inner = pairwise_similarity(&handle(embeddings, "embeddings")?.inner)?;
        *slot = boxed(CfSimilarity { inner });
        Ok(())
    })
}

/// # Safety
/// `similarity` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn cf_similarity_len(similarity: *const CfSimilarity) -> usize {
    similarity.as_ref().map_or(0, |s| s.inner.len())
}

/// # Safety
/// `similarity` must be a live handle; `out_value` writable.
#[no_mangle]
pub unsafe extern "C" fn cf_similarity_get(
    similarity: *const CfSimilarity,
    i: usize,
    j: usize,
    out_value: *mut f64,
) -> CfStatus {
    guard(|| {
        let slot = out(out_value, "out_value")?;
        let s = &handle(similarity, "similarity")?.inner;
        if i >= s.len() || j >= s.len() {
            return Err(Failure(
                CfStatus::InvalidArgument,
                format!("index ({i}, {j}) out of range for {} nodes", s.len()),
            ));
        }
        *slot = s.get(i, j);
        Ok(())
    })
}

/// # Safety
/// `similarity` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cf_similarity_free(similarity: *mut CfSimilarity) {
    if !similarity.is_null() {
        drop(Box::from_raw(similarity));
    }
}

/// Prune the lowest `cutoff_pct` percent of edges and run Louvain.
///
/// # Safety
/// `similarity` must be a live handle; `out_partition` writable.
#[no_mangle]
pub unsafe extern "C" fn cf_louvain(
    similarity: *const CfSimilarity,
    cutoff_pct: u32,
    seed: u64,
    out_partition: *mut *mut CfPartition,
) -> CfStatus {
    guard(|| {
        let slot = out(out_partition, "out_partition")?;
        let graph = build_pruned_graph(&handle(similarity, "similarity")?.inner, cutoff_pct)?;
        *slot = boxed(CfPartition {
            inner: louvain(&graph, seed),
        });
        Ok(())
    })
}

/// # Safety
/// `partition` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn cf_partition_len(partition: *const CfPartition) -> usize {
    partition.as_ref().map_or(0, |p| p.inner.len())
}

/// # Safety
/// `partition` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn cf_partition_community_count(partition: *const CfPartition) -> usize {
    partition.as_ref().map_or(0, |p| p.inner.community_count())
}

/// Copy the community of each node, in embedding order, into `out_labels`.
///
/// # Safety
/// `out_labels` must have room for `len` values.
#[no_mangle]
pub unsafe extern "C" fn cf_partition_labels(
    partition: *const CfPartition,
    out_labels: *mut usize,
    len: usize,
) -> CfStatus {
    guard(|| {
        let p = &handle(partition, "partition")?.inner;
        if len != p.len() {
            return Err(Failure(
                CfStatus::InvalidArgument,
                format!("buffer holds {len} labels, partition has {}", p.len()),
            ));
        }
        if len > 0 {
            if out_labels.is_null() {
                return Err(null("out_labels"));
            }
            std::slice::from_raw_parts_mut(out_labels, len).copy_from_slice(p.assignment());
        }
        Ok(())
    })
}

/// # Safety
/// `partition` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cf_partition_free(partition: *mut CfPartition) {
    if !partition.is_null() {
        drop(Box::from_raw(partition));
    }
}

/// Adjusted Rand index of two labelings of the same `n` elements.
///
/// # Safety
/// `a` and `b` must point to `n` values; `out_ari` writable.
#[no_mangle]
pub unsafe extern "C" fn cf_adjusted_rand_index(
    a: *const usize,
    b: *const usize,
    n: usize,
    out_ari: *mut f64,
) -> CfStatus {
    guard(|| {
        let slot = out(out_ari, "out_ari")?;
        *slot = adjusted_rand_index_labels(slice(a, n, "a")?, slice(b, n, "b")?)?;
        Ok(())
    })
}

/// Matthews correlation of two 0/1 vectors (any nonzero byte is 1).
///
/// # Safety
/// `a` and `b` must point to `n` bytes; `out_mcc` writable.
#[no_mangle]
pub unsafe extern "C" fn cf_matthews_correlation(
    a: *const u8,
    b: *const u8,
    n: usize,
    out_mcc: *mut f64,
) -> CfStatus {
    guard(|| {
        let slot = out(out_mcc, "out_mcc")?;
        *slot = annotation::matthews_correlation(&bools(slice(a, n, "a")?), &bools(slice(b, n, "b")?))?;
        Ok(())
    })
}

/// Two-sided Fisher exact test of `[[a, b], [c, d]]`. `out_degenerate` may
/// be NULL.
///
/// # Safety
/// `out_p` must be writable; `out_degenerate` writable or NULL.
#[no_mangle]
pub unsafe extern "C" fn cf_fisher_exact(
    a: u64,
    b: u64,
    c: u64,
    d: u64,
    out_p: *mut f64,
    out_degenerate: *mut bool,
) -> CfStatus {
    guard(|| {
        let slot = out(out_p, "out_p")?;
        let r = fisher_exact(&ContingencyTable2x2::new(a, b, c, d))?;
        *slot = r.p_value;
        if let Some(flag) = out_degenerate.as_mut() {
            *flag = r.degenerate;
        }
        Ok(())
    })
}

/// One-sided permutation test of `mean(a) > mean(b)` on 0/1 outcomes.
///
/// # Safety
/// `a`/`b` must point to `n_a`/`n_b` bytes; `out_p` writable.
#[no_mangle]
pub unsafe extern "C" fn cf_permutation_test(
    a: *const u8,
    n_a: usize,
    b: *const u8,
    n_b: usize,
    resamples: u64,
    seed: u64,
    mode: CfPermutationMode,
    out_p: *mut f64,
) -> CfStatus {
    guard(|| {
        let slot = out(out_p, "out_p")?;
        let config = PermutationConfig {
            resamples,
            seed,
            mode: match mode {
                CfPermutationMode::Auto => PermutationMode::Auto,
                CfPermutationMode::Exact => PermutationMode::Exact,
                CfPermutationMode::MonteCarlo => PermutationMode::MonteCarlo,
            },
        };
        let r = permutation_test(&bools(slice(a, n_a, "a")?), &bools(slice(b, n_b, "b")?), &config)?;
        *slot = r.p_value;
        Ok(())
    })
}

/// Focal loss of the true-class probability and its derivative with respect
/// to the true-class score. Either output may be NULL.
///
/// # Safety
/// Outputs must be writable or NULL.
#[no_mangle]
pub unsafe extern "C" fn cf_focal_loss(
    p_true: f64,
    alpha: f64,
    gamma: f64,
    out_loss: *mut f64,
    out_grad: *mut f64,
) -> CfStatus {
    guard(|| {
        if !(p_true.is_finite() && alpha.is_finite() && gamma.is_finite()) {
            return Err(Failure(CfStatus::InvalidArgument, "non-finite argument".into()));
        }
        let fl = focal_loss(p_true, alpha, gamma);
        if let Some(l) = out_loss.as_mut() {
            *l = fl.loss;
        }
        if let Some(g) = out_grad.as_mut() {
            *g = fl.grad;
        }
        Ok(())
    })
}

/// Load a PRB1 probe model.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out_probe` writable.
#[no_mangle]
pub unsafe extern "C" fn cf_probe_load(path_utf8: *const c_char, out_probe: *mut *mut CfProbe) -> CfStatus {
    guard(|| {
        let slot = out(out_probe, "out_probe")?;
        let inner = ProbeModel::load(&path(path_utf8)?)?;
        *slot = boxed(CfProbe { inner });
        Ok(())
    })
}

/// Probe from `dim` weights and a bias.
///
/// # Safety
/// `weights` must point to `dim` values; `out_probe` writable.
#[no_mangle]
pub unsafe extern "C" fn cf_probe_new(
    weights: *const f64,
    dim: usize,
    bias: f64,
    out_probe: *mut *mut CfProbe,
) -> CfStatus {
    guard(|| {
        let slot = out(out_probe, "out_probe")?;
        let weights = slice(weights, dim, "weights")?.to_vec();
        if weights.iter().any(|w| !w.is_finite()) || !bias.is_finite() {
            return Err(Failure(CfStatus::InvalidArgument, "non-finite parameter".into()));
        }
        *slot = boxed(CfProbe {
            inner: ProbeModel { weights, bias },
        });
        Ok(())
    })
}

/// # Safety
/// `probe` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn cf_probe_dim(probe: *const CfProbe) -> usize {
    probe.as_ref().map_or(0, |p| p.inner.dim())
}

/// Probability of YTA for one embedding.
///
/// # Safety
/// `embedding` must point to `dim` floats; `out_probability` writable.
#[no_mangle]
pub unsafe extern "C" fn cf_probe_predict(
    probe: *const CfProbe,
    embedding: *const f32,
    dim: usize,
    out_probability: *mut f64,
) -> CfStatus {
    guard(|| {
        let slot = out(out_probability, "out_probability")?;
        *slot = predict(&handle(probe, "probe")?.inner, slice(embedding, dim, "embedding")?)?;
        Ok(())
    })
}

/// # Safety
/// `probe` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cf_probe_free(probe: *mut CfProbe) {
    if !probe.is_null() {
        drop(Box::from_raw(probe));
    }
}
