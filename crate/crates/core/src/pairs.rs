//! Indexing of unordered pairs `{i, j}` (`i < j`) in lexicographic order.
//!
//! Pair `{i, j}` labels the wedge-basis element `√2 e_i∧e_j`; the same order is
//! used for pair arrays, wedge-basis matrices and CSV columns.

/// Number of unordered pairs of `n` indices.
pub const fn pair_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Position of `{i, j}` in lexicographic order. Requires `i != j`.
#[inline]
pub fn pair_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i != j && i < n && j < n);
    let (a, b) = if i < j { (i, j) } else { (j, i) };
    a * (2 * n - a - 1) / 2 + (b - a - 1)
}

/// All pairs `(i, j)`, `i < j`, in lexicographic order.
pub fn pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
}

/// Inverse of [`pair_index`].
pub fn pair_of(n: usize, index: usize) -> (usize, usize) {
    pairs(n).nth(index).expect("pair index out of range")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_matches_enumeration() {
        for n in 2..=8 {
            for (k, (i, j)) in pairs(n).enumerate() {
                assert_eq!(pair_index(n, i, j), k);
                assert_eq!(pair_index(n, j, i), k);
                assert_eq!(pair_of(n, k), (i, j));
            }
            assert_eq!(pairs(n).count(), pair_count(n));
        }
    }
}
