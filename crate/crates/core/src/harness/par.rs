//! Order-preserving map over independent jobs.
//!
//! With the `parallel` feature the jobs run on a dedicated rayon pool; without
//! it, or with one thread, they run in order on the calling thread. Results
//! come back in input order either way.

/// Maps `op` over `items` in order on the current thread.
pub fn map_sequential<T, R, F>(items: &[T], op: F) -> Vec<R>
where
    F: Fn(&T) -> R,
{
    items.iter().map(op).collect()
}

#[cfg(feature = "parallel")]
pub fn map_parallel<T, R, F>(items: &[T], threads: usize, op: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    use rayon::prelude::*;

    if threads <= 1 {
        return map_sequential(items, op);
    }
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(|| items.par_iter().map(&op).collect()),
        Err(_) => map_sequential(items, op),
    }
}

#[cfg(not(feature = "parallel"))]
pub fn map_parallel<T, R, F>(items: &[T], _threads: usize, op: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    map_sequential(items, op)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let items: Vec<u64> = (0..200).collect();
        let seq = map_sequential(&items, |x| x * x);
        let par = map_parallel(&items, 4, |x| x * x);
        assert_eq!(seq, par);
    }
}
