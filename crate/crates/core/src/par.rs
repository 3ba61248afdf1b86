//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature the helpers run on the rayon pool unless
//! parallelism was switched off at runtime with [`set_parallel`]. Without the
//! feature everything runs on the calling thread. Results are always returned
//! in index order, so reductions performed on them are deterministic.

use std::sync::atomic::{AtomicBool, Ordering};

static ENABLED: AtomicBool = AtomicBool::new(true);

/// Switch data parallelism on or off at runtime. Has no effect without the
/// `parallel` feature.
pub fn set_parallel(on: bool) {
    ENABLED.store(on, Ordering::Relaxed);
}

/// Whether the helpers currently dispatch to rayon.
pub fn is_parallel() -> bool {
    cfg!(feature = "parallel") && ENABLED.load(Ordering::Relaxed)
}

/// Map `f` over `lo..hi`, collecting results in index order.
pub fn map_range<T, F>(lo: i64, hi: i64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(i64) -> T + Sync + Send,
{
    if hi <= lo {
        return Vec::new();
    }
    #[cfg(feature = "parallel")]
    if is_parallel() {
        use rayon::prelude::*;
        return (lo..hi).into_par_iter().map(f).collect();
    }
    (lo..hi).map(f).collect()
}

/// Map `f` over a slice, collecting results in order.
pub fn map_slice<S, T, F>(items: &[S], f: F) -> Vec<T>
where
    S: Sync,
    T: Send,
    F: Fn(&S) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if is_parallel() {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    items.iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let v = map_range(-5, 5, |i| i * i);
        assert_eq!(v, (-5..5).map(|i| i * i).collect::<Vec<_>>());
        let w = map_slice(&[1, 2, 3], |x| x + 1);
        assert_eq!(w, vec![2, 3, 4]);
        assert!(map_range(3, 3, |i| i).is_empty());
    }
}
