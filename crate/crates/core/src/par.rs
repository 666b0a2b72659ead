//! Order-preserving data-parallel maps.
//!
//! With the `parallel` feature the maps fan out over rayon's pool when the
//! caller asks for it; otherwise they run sequentially. Results are always
//! collected in input order, and every reduction downstream is done
//! sequentially over that vector, so both paths are bit-identical.

/// Whether this build can run data-parallel maps at all.
pub const fn available() -> bool {
    cfg!(feature = "parallel")
}

pub fn map<T, R, F>(parallel: bool, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if parallel && items.len() > 1 {
            use rayon::prelude::*;
            return items.par_iter().map(f).collect();
        }
    }
    let _ = parallel;
    items.iter().map(f).collect()
}

pub fn map_range<R, F>(parallel: bool, n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if parallel && n > 1 {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
    }
    let _ = parallel;
    (0..n).map(f).collect()
}
