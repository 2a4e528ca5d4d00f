//! Data-parallel helpers. With the `parallel` feature these run on rayon;
//! without it they fall back to plain sequential iteration.

use std::io;

/// Worker threads available to [`map_init`] and friends.
pub fn num_threads() -> usize {
    #[cfg(feature = "parallel")]
    return rayon::current_num_threads();

    #[cfg(not(feature = "parallel"))]
    return 1;
}

/// Runs `f` on a pool of `threads` workers (0 = library default).
pub fn with_threads<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> io::Result<R> {
    #[cfg(feature = "parallel")]
    {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(io::Error::other)?;
        Ok(pool.install(f))
    }

    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        Ok(f())
    }
}

/// Order-preserving map with per-worker scratch state created by `init`.
pub fn map_init<T, S, R, I, F>(items: &[T], init: I, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, &T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map_init(init, f).collect()
    }

    #[cfg(not(feature = "parallel"))]
    {
        let mut state = init();
        items.iter().map(|x| f(&mut state, x)).collect()
    }
}

/// Folds `items` into per-worker accumulators and merges them.
pub fn fold_reduce<T, A, I, F, M>(items: &[T], identity: I, fold: F, merge: M) -> A
where
    T: Sync,
    A: Send,
    I: Fn() -> A + Sync + Send,
    F: Fn(A, &T) -> A + Sync + Send,
    M: Fn(A, A) -> A + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items
            .par_iter()
            .fold(&identity, &fold)
            .reduce(&identity, &merge)
    }

    #[cfg(not(feature = "parallel"))]
    {
        let _ = merge;
        items.iter().fold(identity(), fold)
    }
}

pub fn for_each<T, F>(items: &[T], f: F)
where
    T: Sync,
    F: Fn(&T) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().for_each(f)
    }

    #[cfg(not(feature = "parallel"))]
    items.iter().for_each(f)
}
