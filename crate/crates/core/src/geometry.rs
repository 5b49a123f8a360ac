//! Indexing of the complete d-ary tree `T(d,h)` and the laws of
//! least-common-ancestor heights between leaves.
//!
//! Leaves are numbered `1..=d^h` and addressed by root-first paths with
//! components in `1..=d`; the numbering is the mixed-radix reading of the
//! path, so lexicographic order on paths is numeric order on indices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{Field, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TreeShape {
    d: usize,
    h: u32,
    leaves: usize,
}

impl TreeShape {
    pub fn new(d: usize, h: u32) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidShape { d, h, reason: "branching factor must be at least 2".into() });
        }
        let leaves = d.checked_pow(h).ok_or_else(|| Error::InvalidShape {
            d,
            h,
            reason: "d^h overflows the index range".into(),
        })?;
        // Level-major node storage needs (d^(h+1) - 1) / (d - 1) slots.
        if leaves.checked_mul(d).is_none() {
            return Err(Error::InvalidShape { d, h, reason: "node count overflows the index range".into() });
        }
        Ok(Self { d, h, leaves })
    }

    #[inline]
    pub fn d(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn h(&self) -> u32 {
        self.h
    }

    #[inline]
    pub fn leaves(&self) -> usize {
        self.leaves
    }

    /// Number of nodes on `level` (root is level 0).
    #[inline]
    pub fn level_width(&self, level: u32) -> usize {
        self.d.pow(level)
    }

    /// Offset of the first node of `level` in level-major storage.
    #[inline]
    pub fn level_offset(&self, level: u32) -> usize {
        (self.d.pow(level) - 1) / (self.d - 1)
    }

    pub fn node_count(&self) -> usize {
        self.level_offset(self.h + 1)
    }

    /// The shape of a depth-`w` subtree.
    pub fn subtree(&self, w: u32) -> Result<Self> {
        if w > self.h {
            return Err(Error::InvalidParameter(format!("subtree height {w} exceeds h = {}", self.h)));
        }
        Self::new(self.d, w)
    }
}

/// Root-first child indices, each in `1..=d`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LeafPath(pub Vec<u32>);

impl LeafPath {
    pub fn components(&self) -> &[u32] {
        &self.0
    }
}

pub fn leaf_index_to_path(index: u64, shape: &TreeShape) -> Result<LeafPath> {
    let max = shape.leaves() as u64;
    if index == 0 || index > max {
        return Err(Error::IndexOutOfRange { index, max });
    }
    let d = shape.d() as u64;
    let mut rest = index - 1;
    let mut comps = vec![0u32; shape.h() as usize];
    for c in comps.iter_mut().rev() {
        *c = (rest % d) as u32 + 1;
        rest /= d;
    }
    Ok(LeafPath(comps))
}

pub fn path_to_leaf_index(path: &LeafPath, shape: &TreeShape) -> Result<u64> {
    if path.0.len() != shape.h() as usize {
        return Err(Error::InvalidParameter(format!(
            "path has {} components, shape has height {}",
            path.0.len(),
            shape.h()
        )));
    }
    let d = shape.d() as u64;
    let mut index = 0u64;
    for &c in &path.0 {
        if c == 0 || u64::from(c) > d {
            return Err(Error::InvalidParameter(format!("path component {c} outside 1..={d}")));
        }
        index = index * d + u64::from(c - 1);
    }
    Ok(index + 1)
}

/// Height of the least common ancestor of leaves `index` and `index + 1`.
pub fn adjacent_lca_height(index: u64, shape: &TreeShape) -> Result<u32> {
    let last = shape.leaves() as u64;
    if index == 0 || index >= last {
        return Err(Error::IndexOutOfRange { index, max: last.saturating_sub(1) });
    }
    Ok(trailing_max_digits(index - 1, shape.d() as u64) + 1)
}

/// Number of trailing base-`d` digits equal to `d - 1`.
#[inline]
fn trailing_max_digits(mut x: u64, d: u64) -> u32 {
    let mut n = 0;
    while x % d == d - 1 {
        n += 1;
        x /= d;
    }
    n
}

/// For a fixed leaf, how many leaves (itself included) have their least
/// common ancestor with it at distance `k`, for `k = 0..=h`.
pub fn lca_distance_counts(shape: &TreeShape) -> Vec<u64> {
    let d = shape.d() as u64;
    std::iter::once(1)
        .chain((1..=shape.h()).map(|k| d.pow(k) - d.pow(k - 1)))
        .collect()
}

/// Law of a height on `{1, …, m}`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeightDistribution<P> {
    probabilities: Vec<P>,
}

impl<P: Field> HeightDistribution<P> {
    /// `P(height = s)`, zero outside the support.
    pub fn probability(&self, s: u32) -> P {
        if s == 0 {
            return P::zero();
        }
        self.probabilities.get(s as usize - 1).cloned().unwrap_or_else(P::zero)
    }

    /// Largest height in the support.
    pub fn max_height(&self) -> u32 {
        self.probabilities.len() as u32
    }

    pub fn probabilities(&self) -> &[P] {
        &self.probabilities
    }

    pub fn total(&self) -> P {
        self.probabilities.iter().cloned().fold(P::zero(), |a, b| a + b)
    }

    /// Expectation of `f(s)`.
    pub fn expect(&self, f: impl Fn(u32) -> P) -> P {
        self.probabilities
            .iter()
            .enumerate()
            .fold(P::zero(), |acc, (i, p)| acc + p.clone() * f(i as u32 + 1))
    }

    /// Cumulative probabilities in `f64`, for sampling.
    pub fn cdf_f64(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.probabilities
            .iter()
            .map(|p| {
                acc += p.to_f64_lossy();
                acc
            })
            .collect()
    }
}

/// Largest `d^m - 1` for which the rational representation is used.
pub const EXACT_LIMIT: u64 = 1 << 31;

/// Law of the LCA height of a uniformly random adjacent pair of depth-`w`
/// subtree roots, where `m = h - w` is the number of levels above them.
///
/// `P(s) = (d-1) d^(m-s) / (d^m - 1)`: the number of indices in
/// `1..d^m` whose path ends in exactly `s-1` components equal to `d`.
pub fn adjacent_subtree_height_dist<P: Field>(d: usize, m: u32) -> Result<HeightDistribution<P>> {
    if m == 0 {
        return Err(Error::InvalidParameter("adjacent subtrees need a gap m >= 1".into()));
    }
    if d < 2 {
        return Err(Error::InvalidParameter(format!("branching factor {d} < 2")));
    }
    let d = d as u64;
    let total = d
        .checked_pow(m)
        .ok_or_else(|| Error::InvalidParameter(format!("d^m overflows for d={d}, m={m}")))?
        - 1;
    let denom = P::from_count(total);
    let probabilities = (1..=m)
        .map(|s| P::from_count((d - 1) * d.pow(m - s)) / denom.clone())
        .collect();
    Ok(HeightDistribution { probabilities })
}

/// Exact variant; refuses gaps whose pair count exceeds [`EXACT_LIMIT`].
pub fn adjacent_subtree_height_dist_exact(d: usize, m: u32) -> Result<HeightDistribution<num_rational::Rational64>> {
    match (d as u64).checked_pow(m) {
        Some(n) if n - 1 <= EXACT_LIMIT => adjacent_subtree_height_dist(d, m),
        _ => Err(Error::InvalidParameter(format!(
            "d^m - 1 exceeds 2^31 for d={d}, m={m}; use the floating point distribution"
        ))),
    }
}

/// `alpha_m = E[rho^(2s)]` over the adjacent-pair height law with gap `m`.
pub fn alpha<T: Real>(d: usize, rho: T, m: u32) -> T {
    assert!(m >= 1, "alpha needs m >= 1");
    let df = T::from_usize(d).expect("d fits");
    let rho2 = rho * rho;
    // P(s) = (d-1) d^-s / (1 - d^-m), summed without forming d^m.
    let norm = T::one() - df.powi(-(m as i32));
    let mut acc = T::zero();
    let mut term = T::one();
    for _ in 1..=m {
        term = term * rho2 / df;
        acc = acc + term;
    }
    (df - T::one()) * acc / norm
}

/// `lim_{m→∞} alpha_m = rho^2 (1 - 1/d) / (1 - rho^2 / d)`.
pub fn alpha_star<T: Real>(d: usize, rho: T) -> T {
    let df = T::from_usize(d).expect("d fits");
    let rho2 = rho * rho;
    rho2 * (T::one() - df.recip()) / (T::one() - rho2 / df)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Rational64;

    fn shape(d: usize, h: u32) -> TreeShape {
        TreeShape::new(d, h).unwrap()
    }

    fn brute_lca_height(a: &LeafPath, b: &LeafPath) -> u32 {
        let h = a.0.len() as u32;
        let common = a.0.iter().zip(&b.0).take_while(|(x, y)| x == y).count() as u32;
        h - common
    }

    #[test]
    fn path_examples() {
        let s = shape(2, 3);
        assert_eq!(leaf_index_to_path(1, &s).unwrap().0, vec![1, 1, 1]);
        assert_eq!(leaf_index_to_path(8, &s).unwrap().0, vec![2, 2, 2]);
        assert_eq!(leaf_index_to_path(4, &s).unwrap().0, vec![1, 2, 2]);
        assert!(matches!(leaf_index_to_path(0, &s), Err(Error::IndexOutOfRange { .. })));
        assert!(matches!(leaf_index_to_path(9, &s), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn enumerated_paths_are_lexicographic() {
        let s = shape(2, 3);
        let mut all = Vec::new();
        for a in 1..=2 {
            for b in 1..=2 {
                for c in 1..=2 {
                    all.push(LeafPath(vec![a, b, c]));
                }
            }
        }
        for (i, p) in all.iter().enumerate() {
            assert_eq!(leaf_index_to_path(i as u64 + 1, &s).unwrap(), *p);
        }
    }

    #[test]
    fn round_trip_all_small_shapes() {
        for d in 2..=6 {
            for h in 0..=12 {
                let s = match TreeShape::new(d, h) {
                    Ok(s) if s.leaves() <= 4096 => s,
                    _ => continue,
                };
                let mut prev = None;
                for i in 1..=s.leaves() as u64 {
                    let p = leaf_index_to_path(i, &s).unwrap();
                    assert_eq!(path_to_leaf_index(&p, &s).unwrap(), i);
                    if let Some(q) = prev {
                        assert!(q < p);
                    }
                    prev = Some(p);
                }
            }
        }
    }

    #[test]
    fn adjacent_lca_examples() {
        let s = shape(2, 3);
        assert_eq!(adjacent_lca_height(4, &s).unwrap(), 3);
        assert_eq!(adjacent_lca_height(1, &s).unwrap(), 1);
        assert_eq!(adjacent_lca_height(2, &s).unwrap(), 2);
        assert!(adjacent_lca_height(8, &s).is_err());
    }

    #[test]
    fn adjacent_lca_matches_path_walk() {
        for d in 2..=5 {
            for h in 1..=8 {
                let s = match TreeShape::new(d, h) {
                    Ok(s) if s.leaves() <= 4096 => s,
                    _ => continue,
                };
                for i in 1..s.leaves() as u64 {
                    let a = leaf_index_to_path(i, &s).unwrap();
                    let b = leaf_index_to_path(i + 1, &s).unwrap();
                    assert_eq!(adjacent_lca_height(i, &s).unwrap(), brute_lca_height(&a, &b), "d={d} h={h} i={i}");
                }
            }
        }
    }

    #[test]
    fn lca_counts_examples_and_brute_force() {
        assert_eq!(lca_distance_counts(&shape(2, 2)), vec![1, 1, 2]);
        assert_eq!(lca_distance_counts(&shape(3, 1)), vec![1, 2]);
        assert_eq!(lca_distance_counts(&shape(3, 8))[8], 4374);

        let s = shape(3, 4);
        let counts = lca_distance_counts(&s);
        for leaf in 1..=s.leaves() as u64 {
            let a = leaf_index_to_path(leaf, &s).unwrap();
            let mut brute = vec![0u64; 5];
            for other in 1..=s.leaves() as u64 {
                brute[brute_lca_height(&a, &leaf_index_to_path(other, &s).unwrap()) as usize] += 1;
            }
            assert_eq!(brute, counts);
        }
        assert_eq!(counts.iter().sum::<u64>(), s.leaves() as u64);
    }

    #[test]
    fn height_dist_examples() {
        let dist = adjacent_subtree_height_dist_exact(2, 2).unwrap();
        assert_eq!(dist.probability(1), Rational64::new(2, 3));
        assert_eq!(dist.probability(2), Rational64::new(1, 3));
        let dist = adjacent_subtree_height_dist_exact(2, 1).unwrap();
        assert_eq!(dist.probabilities(), &[Rational64::new(1, 1)]);
        let dist = adjacent_subtree_height_dist_exact(3, 2).unwrap();
        assert_eq!(dist.probability(1), Rational64::new(6, 8));
        assert_eq!(dist.probability(2), Rational64::new(2, 8));
        assert!(adjacent_subtree_height_dist::<f64>(3, 0).is_err());
        assert!(adjacent_subtree_height_dist_exact(2, 40).is_err());
        assert!(adjacent_subtree_height_dist::<f64>(2, 40).is_ok());
    }

    #[test]
    fn height_dist_matches_enumeration() {
        for d in 2..=5 {
            for m in 1..=6 {
                let s = match TreeShape::new(d, m) {
                    Ok(s) if s.leaves() <= 4096 => s,
                    _ => continue,
                };
                let mut freq = vec![0i64; m as usize];
                for i in 1..s.leaves() as u64 {
                    freq[adjacent_lca_height(i, &s).unwrap() as usize - 1] += 1;
                }
                let dist = adjacent_subtree_height_dist_exact(d, m).unwrap();
                let n = s.leaves() as i64 - 1;
                for (k, f) in freq.iter().enumerate() {
                    assert_eq!(dist.probability(k as u32 + 1), Rational64::new(*f, n));
                }
                assert_eq!(dist.total(), Rational64::from_integer(1));
            }
        }
    }

    #[test]
    fn alpha_examples() {
        assert!((alpha(2, 0.5_f64, 2) - 0.1875).abs() < 1e-15);
        assert_eq!(alpha(3, 0.0_f64, 4), 0.0);
        let star = alpha_star(3, 0.9_f64);
        assert!((star - 0.54 / 0.73).abs() < 1e-15);
        assert!((star - 0.739726).abs() < 1e-6);
        assert!((alpha(3, 0.9_f64, 40) - star).abs() < 1e-12);
    }

    #[test]
    fn alpha_agrees_with_distribution_expectation() {
        for d in 2..=4 {
            for m in 1..=8 {
                let dist = adjacent_subtree_height_dist::<f64>(d, m).unwrap();
                let rho = 0.83_f64;
                let via_dist = dist.expect(|s| rho.powi(2 * s as i32));
                assert!((via_dist - alpha(d, rho, m)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn alpha_in_f32() {
        let a: f32 = alpha(2, 0.5_f32, 2);
        assert!((a - 0.1875).abs() < 1e-6);
    }

    #[test]
    fn shape_rejects_overflow() {
        assert!(TreeShape::new(1, 3).is_err());
        assert!(TreeShape::new(10, 40).is_err());
        assert_eq!(shape(3, 2).node_count(), 13);
        assert_eq!(shape(3, 2).level_offset(2), 4);
    }

    proptest::proptest! {
        #[test]
        fn alpha_converges_monotonically_within_tail_bound(d in 2usize..6, rho in 0.0f64..1.0, m in 1u32..30) {
            let star = alpha_star(d, rho);
            let a = alpha(d, rho, m);
            let next = alpha(d, rho, m + 1);
            proptest::prop_assert!((a - star).abs() <= rho * rho * (1.0 / d as f64).powi(m as i32 - 1) + 1e-15);
            proptest::prop_assert!((next - star).abs() <= (a - star).abs() + 1e-15);
        }
    }
}
