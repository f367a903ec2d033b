use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Disjoint train / validation / test partitions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetSplit<T> {
    pub train: Vec<T>,
    pub validation: Vec<T>,
    pub test: Vec<T>,
}

fn shuffled<T: Clone>(items: &[T], seed: u64) -> Vec<T> {
    let mut out = items.to_vec();
    out.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    out
}

/// Largest-remainder apportionment of `n` items over `parts`.
fn apportion(n: usize, parts: &[u32]) -> Vec<usize> {
    let total: u64 = parts.iter().map(|&p| u64::from(p)).sum();
    let mut sizes: Vec<usize> = parts
        .iter()
        .map(|&p| (n as u64 * u64::from(p) / total) as usize)
        .collect();
    let mut left = n - sizes.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..parts.len()).collect();
    // Stable sort keeps earlier parts first on equal remainders.
    order.sort_by_key(|&i| std::cmp::Reverse(n as u64 * u64::from(parts[i]) % total));
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        sizes[i] += 1;
        left -= 1;
    }
    sizes
}

/// Shuffles with a seeded generator and cuts into three parts proportional
/// to `ratios`.
pub fn split_dataset<T: Clone>(
    records: &[T],
    ratios: (u32, u32, u32),
    seed: u64,
) -> Result<DatasetSplit<T>> {
    let parts = [ratios.0, ratios.1, ratios.2];
    if parts.contains(&0) {
        return Err(Error::InvalidInput(format!(
            "split ratios must all be positive, got {ratios:?}"
        )));
    }
    if records.len() < 10 {
        return Err(Error::InvalidInput(format!(
            "need at least 10 records to split, got {}",
            records.len()
        )));
    }
    let sizes = apportion(records.len(), &parts);
    let mut rest = shuffled(records, seed);
    let test = rest.split_off(sizes[0] + sizes[1]);
    let validation = rest.split_off(sizes[0]);
    Ok(DatasetSplit {
        train: rest,
        validation,
        test,
    })
}

/// Shuffles and deals records into `k` folds whose sizes differ by at most
/// one; the first `n % k` folds get the extra record.
pub fn kfold_split<T: Clone>(records: &[T], k: usize, seed: u64) -> Result<Vec<Vec<T>>> {
    if k < 2 {
        return Err(Error::InvalidInput(format!(
            "k must be at least 2, got {k}"
        )));
    }
    if k > records.len() {
        return Err(Error::InvalidInput(format!(
            "k = {k} exceeds the number of records ({})",
            records.len()
        )));
    }
    let base = records.len() / k;
    let extra = records.len() % k;
    let mut rest = shuffled(records, seed).into_iter();
    Ok((0..k)
        .map(|i| {
            let size = base + usize::from(i < extra);
            rest.by_ref().take(size).collect()
        })
        .collect())
}

/// Training set for fold `held_out`: every other fold concatenated.
pub fn fold_complement<T: Clone>(folds: &[Vec<T>], held_out: usize) -> Vec<T> {
    folds
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != held_out)
        .flat_map(|(_, f)| f.iter().cloned())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn large_corpus_split() {
        let items: Vec<u32> = (0..9800).collect();
        let s = split_dataset(&items, (8, 1, 1), 0).unwrap();
        assert_eq!(
            (s.train.len(), s.validation.len(), s.test.len()),
            (7840, 980, 980)
        );
    }

    #[test]
    fn ten_records() {
        let items: Vec<u32> = (0..10).collect();
        let s = split_dataset(&items, (8, 1, 1), 3).unwrap();
        assert_eq!((s.train.len(), s.validation.len(), s.test.len()), (8, 1, 1));
    }

    #[test]
    fn split_is_deterministic_per_seed() {
        let items: Vec<u32> = (0..100).collect();
        let a = split_dataset(&items, (8, 1, 1), 42).unwrap();
        let b = split_dataset(&items, (8, 1, 1), 42).unwrap();
        assert_eq!(a, b);
        let c = split_dataset(&items, (8, 1, 1), 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn split_errors() {
        let items: Vec<u32> = (0..100).collect();
        assert!(split_dataset(&items, (8, 0, 1), 0).is_err());
        assert!(split_dataset(&items[..9], (8, 1, 1), 0).is_err());
    }

    #[test]
    fn kfold_sizes() {
        let items: Vec<u32> = (0..9800).collect();
        let folds = kfold_split(&items, 5, 0).unwrap();
        assert!(folds.iter().all(|f| f.len() == 1960));

        let items: Vec<u32> = (0..7).collect();
        let sizes: Vec<usize> = kfold_split(&items, 5, 0)
            .unwrap()
            .iter()
            .map(Vec::len)
            .collect();
        assert_eq!(sizes, vec![2, 2, 1, 1, 1]);
    }

    #[test]
    fn kfold_errors() {
        let items: Vec<u32> = (0..4).collect();
        assert!(kfold_split(&items, 5, 0).is_err());
        assert!(kfold_split(&items, 1, 0).is_err());
    }

    #[test]
    fn complement_excludes_held_out_fold() {
        let folds = vec![vec![1, 2], vec![3], vec![4]];
        assert_eq!(fold_complement(&folds, 1), vec![1, 2, 4]);
    }

    proptest! {
        #[test]
        fn split_partitions_input(n in 10usize..400, a in 1u32..10, b in 1u32..10, c in 1u32..10, seed: u64) {
            let items: Vec<usize> = (0..n).collect();
            let s = split_dataset(&items, (a, b, c), seed).unwrap();
            let mut all: Vec<usize> = s.train.iter().chain(&s.validation).chain(&s.test).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, items);
            let total = f64::from(a + b + c);
            for (len, part) in [(s.train.len(), a), (s.validation.len(), b), (s.test.len(), c)] {
                let ideal = n as f64 * f64::from(part) / total;
                prop_assert!((len as f64 - ideal).abs() <= 1.0, "{} vs {}", len, ideal);
            }
        }

        #[test]
        fn kfold_partitions_input(n in 2usize..300, k in 2usize..10, seed: u64) {
            prop_assume!(k <= n);
            let items: Vec<usize> = (0..n).collect();
            let folds = kfold_split(&items, k, seed).unwrap();
            let mut all: Vec<usize> = folds.iter().flatten().copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, items);
            let max = folds.iter().map(Vec::len).max().unwrap();
            let min = folds.iter().map(Vec::len).min().unwrap();
            prop_assert!(max - min <= 1);
        }
    }
}
