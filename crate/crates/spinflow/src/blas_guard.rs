//! OpenBLAS thread pinning.
//!
//! Multithreaded OpenBLAS places its per-call job queue on the caller's
//! stack, which blows the 2 MB default of Rust test threads and of rayon
//! workers. All parallelism in this crate is at the trajectory level, so
//! BLAS is pinned to a single thread once per process.

use std::sync::Once;

extern "C" {
    fn openblas_set_num_threads(n: i32);
}

static INIT: Once = Once::new();

/// Pin OpenBLAS to one thread. Safe to call repeatedly; runs once.
pub fn ensure_single_thread_blas() {
    INIT.call_once(|| unsafe {
        openblas_set_num_threads(1);
    });
}
