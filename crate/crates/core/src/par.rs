//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) the replicate loops and the corpus
//! scan fan out over rayon's global pool. Without it everything runs on the
//! calling thread. Results are identical either way because every reduction
//! used here is associative and order-independent.

/// How a batch of independent work items is executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    #[cfg(feature = "parallel")]
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        #[cfg(feature = "parallel")]
        {
            Execution::Parallel
        }
        #[cfg(not(feature = "parallel"))]
        {
            Execution::Sequential
        }
    }
}

pub fn is_parallel_available() -> bool {
    cfg!(feature = "parallel")
}

/// Map `f` over `0..count`, preserving index order in the output.
pub fn map_indexed<U, F>(exec: Execution, count: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    match exec {
        Execution::Sequential => (0..count).map(f).collect(),
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..count).into_par_iter().map(f).collect()
        }
    }
}

/// Map then reduce with an associative, commutative `merge`.
pub fn map_reduce<T, U, F, M>(exec: Execution, items: &[T], identity: U, f: F, merge: M) -> U
where
    T: Sync,
    U: Send + Sync + Clone,
    F: Fn(&T) -> U + Sync + Send,
    M: Fn(U, U) -> U + Sync + Send,
{
    match exec {
        Execution::Sequential => items.iter().map(f).fold(identity, merge),
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            items
                .par_iter()
                .map(f)
                .reduce(|| identity.clone(), merge)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_indexed_keeps_order() {
        let out = map_indexed(Execution::default(), 6, |i| i * 2);
        assert_eq!(out, vec![0, 2, 4, 6, 8, 10]);
        let seq = map_indexed(Execution::Sequential, 6, |i| i * 2);
        assert_eq!(out, seq);
    }

    #[test]
    fn map_reduce_sums() {
        let data: Vec<u64> = (1..=100).collect();
        let s = map_reduce(Execution::default(), &data, 0u64, |x| *x, |a, b| a + b);
        assert_eq!(s, 5050);
    }
}
