//! Data-parallel map with a sequential fallback.
//!
//! With the `parallel` feature the `Parallel` mode runs on rayon; without it
//! every mode runs sequentially. Output order always follows the input index.

use serde::{Deserialize, Serialize};

/// Environment variable read by [`configure_threads_from_env`].
pub const THREADS_ENV: &str = "MNAR_DRM_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Execution {
    #[default]
    Parallel,
    Sequential,
}

impl Execution {
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => {
                use rayon::prelude::*;
                (0..n).into_par_iter().map(f).collect()
            }
            _ => (0..n).map(f).collect(),
        }
    }

    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// Size the global pool from `MNAR_DRM_THREADS` if it is set.
/// Returns the thread count in effect.
pub fn configure_threads_from_env() -> usize {
    let requested = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0);
    configure_threads(requested)
}

pub fn configure_threads(threads: Option<usize>) -> usize {
    #[cfg(feature = "parallel")]
    {
        if let Some(n) = threads {
            // a second build fails harmlessly once the pool exists
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree_in_order() {
        let f = |i: usize| (i as f64).sqrt();
        assert_eq!(Execution::Parallel.map(100, f), Execution::Sequential.map(100, f));
    }
}
