//! Tiny execution shim: data-parallel maps with a sequential fallback.
//!
//! All call sites produce one output slot per index, so the result is
//! independent of worker count and scheduling; byte-identical outputs are
//! preserved whether the `parallel` feature is enabled or not.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `f` over `0..n`, in parallel when requested and compiled in.
pub(crate) fn map_indexed<T, F>(parallel: bool, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel {
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = parallel;
    (0..n).map(f).collect()
}

/// True when the `parallel` feature is compiled in.
pub(crate) fn parallel_available() -> bool {
    cfg!(feature = "parallel")
}
