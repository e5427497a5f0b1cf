//! Bulk evaluation strategies.
//!
//! Every filter, join probe and page rebuild in the crate goes through an
//! [`Executor`]. Both strategies preserve input order, so results are
//! identical whichever one runs.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Below this many items the parallel strategy falls back to a plain loop.
#[cfg(feature = "parallel")]
const PARALLEL_MIN_LEN: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Executor {
    Sequential,
    #[cfg(feature = "parallel")]
    Parallel,
}

#[allow(clippy::derivable_impls)] // the default depends on the feature set
impl Default for Executor {
    fn default() -> Self {
        #[cfg(feature = "parallel")]
        return Executor::Parallel;
        #[cfg(not(feature = "parallel"))]
        Executor::Sequential
    }
}

impl std::fmt::Display for Executor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Executor::Sequential => "sequential",
            #[cfg(feature = "parallel")]
            Executor::Parallel => "parallel",
        })
    }
}

impl Executor {
    pub fn filter_map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> Option<R> + Sync + Send,
    {
        match self {
            Executor::Sequential => items.iter().filter_map(f).collect(),
            #[cfg(feature = "parallel")]
            Executor::Parallel if items.len() < PARALLEL_MIN_LEN => {
                items.iter().filter_map(f).collect()
            }
            #[cfg(feature = "parallel")]
            Executor::Parallel => items.par_iter().filter_map(f).collect(),
        }
    }

    pub fn filter<T, F>(self, items: &[T], keep: F) -> Vec<&T>
    where
        T: Sync,
        F: Fn(&T) -> bool + Sync + Send,
    {
        match self {
            Executor::Sequential => items.iter().filter(|x| keep(x)).collect(),
            #[cfg(feature = "parallel")]
            Executor::Parallel if items.len() < PARALLEL_MIN_LEN => {
                items.iter().filter(|x| keep(x)).collect()
            }
            #[cfg(feature = "parallel")]
            Executor::Parallel => items.par_iter().filter(|x| keep(x)).collect(),
        }
    }

    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        self.filter_map(items, |x| Some(f(x)))
    }

    /// Like [`map`](Self::map) but without the small-input cutoff, for
    /// items that are individually expensive (page builds).
    pub fn map_each<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        match self {
            Executor::Sequential => items.iter().map(f).collect(),
            #[cfg(feature = "parallel")]
            Executor::Parallel => items.par_iter().map(f).collect(),
        }
    }

    /// Flattening variant used by join probes.
    pub fn flat_map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> Vec<R> + Sync + Send,
    {
        match self {
            Executor::Sequential => items.iter().flat_map(f).collect(),
            #[cfg(feature = "parallel")]
            Executor::Parallel if items.len() < PARALLEL_MIN_LEN => {
                items.iter().flat_map(f).collect()
            }
            #[cfg(feature = "parallel")]
            Executor::Parallel => items.par_iter().flat_map_iter(f).collect(),
        }
    }

    /// All strategies compiled into this build.
    pub fn all() -> &'static [Executor] {
        #[cfg(feature = "parallel")]
        {
            &[Executor::Sequential, Executor::Parallel]
        }
        #[cfg(not(feature = "parallel"))]
        {
            &[Executor::Sequential]
        }
    }
}
