//! Data-parallel helpers with a sequential fallback.
//!
//! Built with the default `parallel` feature these fan out over rayon;
//! without it they run the same closures sequentially, which keeps every
//! certified value identical across both builds.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

pub fn map_indexed<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(usize, &T) -> U + Sync,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().enumerate().map(|(i, t)| f(i, t)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().enumerate().map(|(i, t)| f(i, t)).collect()
    }
}

pub fn map_range<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
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

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn helpers_match_sequential_semantics() {
        let xs = vec![1u64, 2, 3, 4];
        assert_eq!(map_indexed(&xs, |i, x| x * i as u64), vec![0, 2, 6, 12]);
        assert_eq!(map_range(5, |i| i * i), vec![0, 1, 4, 9, 16]);
    }
}
