//! Index-parallel helpers.
//!
//! With the `parallel` feature the closures run on the current rayon pool;
//! without it they run in a plain loop. Results are always assembled in
//! index order, so output never depends on the worker count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over `0..len`, collecting results in index order.
pub fn map_indexed<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..len).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..len).map(f).collect()
    }
}

/// Fill `out[i] = f(i)` for every slot.
pub fn fill_indexed<T, F>(out: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize, &mut T) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        out.par_iter_mut().enumerate().for_each(|(i, v)| f(i, v));
    }
    #[cfg(not(feature = "parallel"))]
    {
        for (i, v) in out.iter_mut().enumerate() {
            f(i, v);
        }
    }
}

/// Sum fixed-size chunks in parallel, then fold the chunk results in order.
///
/// Chunk boundaries depend only on `len` and `chunk`, never on the pool,
/// which keeps floating-point reductions bit-identical across thread counts.
pub fn chunked_reduce<T, F, G>(len: usize, chunk: usize, map: F, mut fold: G, init: T) -> T
where
    T: Send,
    F: Fn(std::ops::Range<usize>) -> T + Sync + Send,
    G: FnMut(T, T) -> T,
{
    let chunk = chunk.max(1);
    let n_chunks = len.div_ceil(chunk);
    let parts = map_indexed(n_chunks, |c| map(c * chunk..((c + 1) * chunk).min(len)));
    let mut acc = init;
    for p in parts {
        acc = fold(acc, p);
    }
    acc
}

/// Run `f` with at most `threads` workers (0 = library default).
pub fn with_threads<R, F>(threads: usize, f: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    #[cfg(feature = "parallel")]
    {
        if threads == 0 {
            return f();
        }
        match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        f()
    }
}

/// Number of workers the current pool would use.
pub fn current_threads() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_preserves_order() {
        let v = map_indexed(100, |i| i * 2);
        assert_eq!(v, (0..100).map(|i| i * 2).collect::<Vec<_>>());
    }

    #[test]
    fn chunked_reduce_is_thread_independent() {
        let xs: Vec<f64> = (0..10_000).map(|i| 1.0 / (1.0 + i as f64)).collect();
        let sum = |t| {
            with_threads(t, || {
                chunked_reduce(
                    xs.len(),
                    64,
                    |r| xs[r].iter().sum::<f64>(),
                    |a, b| a + b,
                    0.0,
                )
            })
        };
        assert_eq!(sum(1).to_bits(), sum(4).to_bits());
    }

    #[test]
    fn fill_writes_every_slot() {
        let mut v = vec![0usize; 37];
        fill_indexed(&mut v, |i, x| *x = i + 1);
        assert!(v.iter().enumerate().all(|(i, &x)| x == i + 1));
    }
}
