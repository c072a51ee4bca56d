//! Execution mode for data-parallel sweeps.
//!
//! With the `parallel` feature, [`Exec::Parallel`] fans work out over rayon;
//! without it every mode runs sequentially. Results are always returned in
//! input order, so output never depends on the mode.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

impl Exec {
    /// True when this mode will actually run on several threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }

    /// Order-preserving map.
    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Exec::Parallel {
            use rayon::prelude::*;
            return items.par_iter().map(f).collect();
        }
        items.iter().map(f).collect()
    }

    /// In-place pointwise update over paired mutable slices, in chunks.
    pub fn zip_chunks_mut<F>(self, a: &mut [f64], b: &mut [f64], chunk: usize, f: F)
    where
        F: Fn(usize, &mut [f64], &mut [f64]) + Sync + Send,
    {
        assert_eq!(a.len(), b.len());
        let chunk = chunk.max(1);
        #[cfg(feature = "parallel")]
        if self == Exec::Parallel {
            use rayon::prelude::*;
            a.par_chunks_mut(chunk)
                .zip(b.par_chunks_mut(chunk))
                .enumerate()
                .for_each(|(i, (x, y))| f(i * chunk, x, y));
            return;
        }
        for (i, (x, y)) in a.chunks_mut(chunk).zip(b.chunks_mut(chunk)).enumerate() {
            f(i * chunk, x, y);
        }
    }
}

/// Runs `f` inside a pool of `workers` threads (when parallelism is compiled in
/// and `workers > 0`); otherwise calls it directly.
pub fn with_workers<R: Send>(workers: usize, f: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    if workers > 0 {
        if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
            return pool.install(f);
        }
    }
    let _ = workers;
    f()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree_and_preserve_order() {
        let xs: Vec<u64> = (0..1000).collect();
        let f = |x: &u64| x.wrapping_mul(2654435761) % 997;
        assert_eq!(Exec::Sequential.map(&xs, f), Exec::Parallel.map(&xs, f));
    }

    #[test]
    fn chunked_update_covers_every_index() {
        for mode in [Exec::Sequential, Exec::Parallel] {
            let mut a = vec![0.0; 1001];
            let mut b = vec![0.0; 1001];
            mode.zip_chunks_mut(&mut a, &mut b, 64, |off, x, y| {
                for (j, (p, q)) in x.iter_mut().zip(y.iter_mut()).enumerate() {
                    *p = (off + j) as f64;
                    *q = -*p;
                }
            });
            assert!(a.iter().enumerate().all(|(i, &v)| v == i as f64));
            assert!(b.iter().enumerate().all(|(i, &v)| v == -(i as f64)));
        }
    }
}
