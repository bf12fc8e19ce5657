//! Execution strategy for the batch loops. Parallel execution needs the
//! `parallel` feature; without it every strategy runs sequentially.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

impl Execution {
    pub fn num_threads(self) -> usize {
        match self {
            Execution::Sequential => 1,
            #[cfg(feature = "parallel")]
            Execution::Parallel => rayon::current_num_threads(),
            #[cfg(not(feature = "parallel"))]
            Execution::Parallel => 1,
        }
    }

    /// Order-preserving map over a slice.
    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => items.par_iter().map(f).collect(),
            _ => items.iter().map(f).collect(),
        }
    }

    /// Order-preserving map consuming a vector.
    pub fn map_owned<T, R, F>(self, items: Vec<T>, f: F) -> Vec<R>
    where
        T: Send,
        R: Send,
        F: Fn(T) -> R + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => items.into_par_iter().map(f).collect(),
            _ => items.into_iter().map(f).collect(),
        }
    }

    /// Folds each item into a per-thread accumulator and merges the
    /// accumulators. `merge` must be associative and commutative.
    pub fn fold_reduce<T, A, Id, F, M>(self, items: &[T], identity: Id, fold: F, merge: M) -> A
    where
        T: Sync,
        A: Send,
        Id: Fn() -> A + Sync + Send,
        F: Fn(A, &T) -> A + Sync + Send,
        M: Fn(A, A) -> A + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => items
                .par_iter()
                .fold(&identity, &fold)
                .reduce(&identity, &merge),
            _ => {
                let _ = merge;
                items.iter().fold(identity(), fold)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strategies_agree() {
        let v: Vec<u64> = (0..10_000).collect();
        for ex in [Execution::Sequential, Execution::Parallel] {
            assert_eq!(ex.map(&v, |x| x * 2)[9_999], 19_998);
            let sum = ex.fold_reduce(&v, || 0u64, |a, x| a + x, |a, b| a + b);
            assert_eq!(sum, 49_995_000);
        }
    }
}
