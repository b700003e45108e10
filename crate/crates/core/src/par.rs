use rayon::prelude::*;

/// Evaluates `f(0..n)` on the ambient rayon pool and returns the results in
/// index order. Callers reduce the returned vector sequentially, so the final
/// numbers do not depend on the number of worker threads.
pub(crate) fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

/// Splits `total` items into `parts` contiguous ranges whose sizes differ by at most one.
pub(crate) fn split_even(total: usize, parts: usize) -> Vec<std::ops::Range<usize>> {
    let base = total / parts;
    let extra = total % parts;
    let mut out = Vec::with_capacity(parts);
    let mut start = 0;
    for i in 0..parts {
        let len = base + usize::from(i < extra);
        out.push(start..start + len);
        start += len;
    }
    out
}
