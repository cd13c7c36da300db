//! Thin switch between rayon and sequential iteration.
//!
//! Every helper here maps independent work items to independent outputs, so
//! results are bitwise identical whichever backend runs them.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Apply `f(row_index, row)` to every `width`-sized chunk of `data`.
pub(crate) fn for_each_row<F>(data: &mut [f64], width: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Send + Sync,
{
    if width == 0 {
        return;
    }
    #[cfg(feature = "parallel")]
    data.par_chunks_mut(width).enumerate().for_each(|(i, row)| f(i, row));
    #[cfg(not(feature = "parallel"))]
    data.chunks_mut(width).enumerate().for_each(|(i, row)| f(i, row));
}

/// Elementwise map over a slice.
pub(crate) fn map_slice<F>(src: &[f64], f: F) -> Vec<f64>
where
    F: Fn(f64) -> f64 + Send + Sync,
{
    #[cfg(feature = "parallel")]
    {
        src.par_iter().map(|&v| f(v)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        src.iter().map(|&v| f(v)).collect()
    }
}

/// Evaluate `f(0..n)` and collect in index order.
pub(crate) fn map_range<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Send + Sync,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}
