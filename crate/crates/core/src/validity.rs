//! Whether a leaf sequence extends to a proper `q`-coloring of the tree.

use rayon::prelude::*;

use crate::broadcast::{validate_symbols, LabeledTree};
use crate::channel::{Channel, Symbol};
use crate::error::{Error, Result};
use crate::geometry::TreeShape;
use crate::posterior::{PosteriorWorkspace, POINT_MASS_TOL};

/// Feasible colors per node in level-major order; bit `c` means color `c`
/// admits a proper extension of the subtree below.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeasibleSets {
    shape: TreeShape,
    masks: Vec<u64>,
}

impl FeasibleSets {
    pub fn root(&self) -> u64 {
        self.masks[0]
    }

    pub fn masks(&self) -> &[u64] {
        &self.masks
    }
}

fn check_q(q: usize) -> Result<()> {
    if !(2..=64).contains(&q) {
        return Err(Error::InvalidParameter(format!("validity needs 2 <= q <= 64, got {q}")));
    }
    Ok(())
}

/// Colors `c` such that some feasible color of a child differs from `c`.
#[inline]
fn allowed_by_child(child: u64, full: u64) -> u64 {
    match child.count_ones() {
        0 => 0,
        1 => full & !child,
        _ => full,
    }
}

pub fn feasible_sets(leaves: &[Symbol], shape: &TreeShape, q: usize) -> Result<FeasibleSets> {
    check_q(q)?;
    if leaves.len() != shape.leaves() {
        return Err(Error::LeafCount { expected: shape.leaves(), got: leaves.len() });
    }
    validate_symbols(leaves, q)?;
    let full = if q == 64 { u64::MAX } else { (1u64 << q) - 1 };
    let d = shape.d();
    let mut masks = vec![0u64; shape.node_count()];
    let leaf_start = shape.level_offset(shape.h());
    for (slot, &c) in masks[leaf_start..].iter_mut().zip(leaves) {
        *slot = 1u64 << c;
    }
    for node in (0..leaf_start).rev() {
        let first = node * d + 1;
        masks[node] = masks[first..first + d].iter().fold(full, |acc, &m| acc & allowed_by_child(m, full));
    }
    Ok(FeasibleSets { shape: *shape, masks })
}

/// Verdict plus, when valid, a proper coloring with the given leaves.
#[derive(Debug, Clone, PartialEq)]
pub struct Consistency {
    pub valid: bool,
    pub witness: Option<LabeledTree>,
}

pub fn is_consistent(leaves: &[Symbol], shape: &TreeShape, q: usize) -> Result<bool> {
    Ok(feasible_sets(leaves, shape, q)?.root() != 0)
}

pub fn is_consistent_with_witness(leaves: &[Symbol], shape: &TreeShape, q: usize) -> Result<Consistency> {
    let sets = feasible_sets(leaves, shape, q)?;
    if sets.root() == 0 {
        return Ok(Consistency { valid: false, witness: None });
    }
    let d = shape.d();
    let mut values = vec![0 as Symbol; shape.node_count()];
    values[0] = sets.masks[0].trailing_zeros() as Symbol;
    for node in 1..values.len() {
        let parent = values[(node - 1) / d];
        let options = sets.masks[node] & !(1u64 << parent);
        values[node] = options.trailing_zeros() as Symbol;
    }
    let witness = LabeledTree::from_values(*shape, values)?;
    Ok(Consistency { valid: true, witness: Some(witness) })
}

/// Proper coloring check on a labeled tree: every edge joins distinct colors.
pub fn is_proper_coloring(tree: &LabeledTree) -> bool {
    let d = tree.shape().d();
    let v = tree.values();
    (1..v.len()).all(|node| v[node] != v[(node - 1) / d])
}

/// Fraction of samples whose root posterior is (numerically) a point mass.
pub fn freeze_fraction(samples: &[Vec<Symbol>], shape: &TreeShape, channel: &Channel) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    for s in samples {
        if s.len() != shape.leaves() {
            return Err(Error::LeafCount { expected: shape.leaves(), got: s.len() });
        }
        validate_symbols(s, channel.alphabet_size())?;
    }
    let frozen: Vec<bool> = samples
        .par_iter()
        .map_init(
            || (PosteriorWorkspace::default(), vec![0.0; channel.alphabet_size()]),
            |(ws, post), leaves| -> Result<bool> {
                ws.compute(leaves, shape.d(), channel, post)?;
                let max = post.iter().cloned().fold(0.0, f64::max);
                Ok(max > 1.0 - 1e-9 && post.iter().filter(|&&p| p > POINT_MASS_TOL).count() == 1)
            },
        )
        .collect::<Result<_>>()?;
    Ok(frozen.iter().filter(|&&f| f).count() as f64 / samples.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::broadcast::sample_tree;
    use crate::rng::SplitMix64;

    /// Exhaustive search over internal colorings.
    fn brute(leaves: &[Symbol], shape: &TreeShape, q: usize) -> bool {
        let internal = shape.node_count() - shape.leaves();
        let d = shape.d();
        (0..q.pow(internal as u32)).any(|code| {
            let mut values: Vec<Symbol> = (0..internal).map(|i| ((code / q.pow(i as u32)) % q) as Symbol).collect();
            values.extend_from_slice(leaves);
            (1..values.len()).all(|n| values[n] != values[(n - 1) / d])
        })
    }

    #[test]
    fn single_level_examples() {
        let shape = TreeShape::new(3, 1).unwrap();
        assert!(!is_consistent(&[0, 1, 2], &shape, 3).unwrap());
        let c = is_consistent_with_witness(&[0, 0, 1], &shape, 3).unwrap();
        assert!(c.valid);
        assert_eq!(c.witness.unwrap().root(), 2);
    }

    #[test]
    fn matches_brute_force_small_instances() {
        for (d, h) in [(2, 1), (2, 2), (3, 1), (4, 1), (2, 3), (3, 2), (4, 2), (2, 4)] {
            let shape = TreeShape::new(d, h).unwrap();
            if shape.leaves() > 16 {
                continue;
            }
            for q in 2..=4usize {
                let n = shape.leaves();
                let exhaustive = q.pow(n as u32) <= 4096;
                let total = if exhaustive { q.pow(n as u32) } else { 1500 };
                let mut rng = SplitMix64::new(q as u64);
                for code in 0..total {
                    let leaves: Vec<Symbol> = if exhaustive {
                        (0..n).map(|i| ((code / q.pow(i as u32)) % q) as Symbol).collect()
                    } else {
                        (0..n).map(|_| rng.below(q as u64) as Symbol).collect()
                    };
                    let c = is_consistent_with_witness(&leaves, &shape, q).unwrap();
                    if shape.node_count() - n <= 7 {
                        assert_eq!(c.valid, brute(&leaves, &shape, q), "{leaves:?} d={d} h={h} q={q}");
                    }
                    if let Some(w) = c.witness {
                        assert!(is_proper_coloring(&w));
                        assert_eq!(w.leaves(), &leaves[..]);
                    }
                }
            }
        }
    }

    #[test]
    fn true_language_is_always_valid() {
        let shape = TreeShape::new(4, 4).unwrap();
        let ch = Channel::coloring(3).unwrap();
        let mut rng = SplitMix64::new(1);
        for _ in 0..500 {
            let t = sample_tree(&shape, &ch, None, &mut rng);
            assert!(is_consistent(t.leaves(), &shape, 3).unwrap());
        }
    }

    #[test]
    fn rejects_out_of_range() {
        let shape = TreeShape::new(2, 1).unwrap();
        assert!(is_consistent(&[0, 3], &shape, 3).is_err());
        assert!(is_consistent(&[0], &shape, 3).is_err());
        assert!(is_consistent(&[0, 1], &shape, 65).is_err());
    }

    #[test]
    fn freeze_fraction_two_leaves() {
        let shape = TreeShape::new(2, 1).unwrap();
        let ch = Channel::coloring(3).unwrap();
        let all: Vec<Vec<Symbol>> = (0..3).flat_map(|a| (0..3).filter(move |&b| b != a).map(move |b| vec![a, b])).collect();
        assert_eq!(freeze_fraction(&all, &shape, &ch).unwrap(), 1.0);
        let equal: Vec<Vec<Symbol>> = (0..3).map(|a| vec![a, a]).collect();
        assert_eq!(freeze_fraction(&equal, &shape, &ch).unwrap(), 0.0);
        // Under the true process the siblings differ with probability 1/2.
        let mut rng = SplitMix64::new(4);
        let samples: Vec<Vec<Symbol>> =
            (0..40_000).map(|_| sample_tree(&shape, &ch, None, &mut rng).leaves().to_vec()).collect();
        let f = freeze_fraction(&samples, &shape, &ch).unwrap();
        assert!((f - 0.5).abs() < 3.0 * (0.25f64 / 40_000.0).sqrt(), "{f}");
    }
}
