//! Integer partitions of a Rényi order and the combinatorial weights that
//! attach to them when the multinomial expansion is grouped by partition.
//!
//! Every tuple `(k_1, ..., k_n)` of non-negative integers summing to `λ` is a
//! rearrangement of exactly one partition of `λ` padded with zeros. The
//! tuple's multinomial coefficient depends only on the partition, and the
//! number of tuples sharing a partition is `n! / (κ_0! κ_1! ...)` where the
//! `κ` are the multiplicities of the distinct values (zeros included).

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::numerics::{ln_factorial, ln_falling_factorial};

/// Default upper limit on the order that may be partitioned.
pub const DEFAULT_MAX_ORDER: u32 = 64;

static MAX_ORDER: AtomicU32 = AtomicU32::new(DEFAULT_MAX_ORDER);

/// Current hard cap on partitioned orders.
pub fn max_order() -> u32 {
    MAX_ORDER.load(Ordering::Relaxed)
}

/// Replace the hard cap on partitioned orders. `p(λ)` grows roughly like
/// `exp(π√(2λ/3))`, so raising this far beyond the default is expensive.
pub fn set_max_order(cap: u32) {
    MAX_ORDER.store(cap.max(1), Ordering::Relaxed);
}

pub(crate) fn check_order(lambda: u32) -> Result<()> {
    let cap = max_order();
    if lambda > cap {
        return Err(Error::limit(
            format!("order {lambda} exceeds the partition cap"),
            cap as u64,
        ));
    }
    Ok(())
}

/// A partition of `order` into positive parts, stored non-increasing.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Partition {
    parts: Vec<u32>,
    order: u32,
}

impl Partition {
    /// Build a partition from parts in any order. Zero parts are rejected.
    pub fn new(mut parts: Vec<u32>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::invalid("a partition needs at least one part"));
        }
        if parts.contains(&0) {
            return Err(Error::invalid("partition parts must be positive"));
        }
        parts.sort_unstable_by(|a, b| b.cmp(a));
        let order = parts.iter().sum();
        Ok(Self { parts, order })
    }

    pub fn parts(&self) -> &[u32] {
        &self.parts
    }

    /// The integer being partitioned (`λ`).
    pub fn order(&self) -> u32 {
        self.order
    }

    /// Number of nonzero parts.
    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    /// `Σ k_i²` over the parts.
    pub fn sum_of_squares(&self) -> u64 {
        self.parts.iter().map(|&k| (k as u64) * (k as u64)).sum()
    }
}

/// Multiplicities of the distinct part values, plus the number of zero slots
/// once the partition is embedded in a database of size `n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiplicityTable {
    entries: BTreeMap<u32, u64>,
    zero_count: u64,
    n: u64,
}

impl MultiplicityTable {
    /// Part value to multiplicity `κ_v`.
    pub fn entries(&self) -> &BTreeMap<u32, u64> {
        &self.entries
    }

    /// `κ_0 = n - (number of nonzero parts)`.
    pub fn zero_count(&self) -> u64 {
        self.zero_count
    }

    /// Database size the table was built for.
    pub fn n(&self) -> u64 {
        self.n
    }

    fn nonzero_slots(&self) -> u64 {
        self.entries.values().sum()
    }
}

/// Multiplicity table of `p` placed into `n` slots.
pub fn unique_counts(p: &Partition, n: u64) -> Result<MultiplicityTable> {
    let len = p.len() as u64;
    if len > n {
        return Err(Error::invalid(format!(
            "partition has {len} parts but the database holds only {n} slots"
        )));
    }
    let mut entries = BTreeMap::new();
    for &k in p.parts() {
        *entries.entry(k).or_insert(0) += 1;
    }
    Ok(MultiplicityTable {
        entries,
        zero_count: n - len,
        n,
    })
}

/// `ln[n! / (κ_0! Π_v κ_v!)]`: how many tuples of length `n` rearrange to the
/// same partition. The `n!/κ_0!` ratio is taken as a falling factorial so
/// that large `n` keeps full relative precision.
pub fn log_permutation_count(t: &MultiplicityTable) -> f64 {
    let ln_repeats: f64 = t.entries.values().map(|&c| ln_factorial(c)).sum();
    ln_falling_factorial(t.n, t.nonzero_slots()) - ln_repeats
}

/// `ln[λ! / Π_i k_i!]`.
pub fn log_multinomial_coefficient(p: &Partition) -> f64 {
    let denom: f64 = p.parts().iter().map(|&k| ln_factorial(k as u64)).sum();
    ln_factorial(p.order() as u64) - denom
}

/// Kelleher's accelerated ascending-composition generator. Yields every
/// partition of `n` exactly once, as a non-decreasing sequence.
struct AscendingCompositions {
    a: Vec<u32>,
    k: usize,
    x: u32,
    y: u32,
    state: AscState,
}

enum AscState {
    Outer,
    Inner { l: usize },
    Done,
}

impl AscendingCompositions {
    fn new(n: u32) -> Self {
        Self {
            a: vec![0; n as usize + 1],
            k: 1,
            x: 0,
            y: n - 1,
            state: if n == 0 { AscState::Done } else { AscState::Outer },
        }
    }
}

impl Iterator for AscendingCompositions {
    type Item = Vec<u32>;

    fn next(&mut self) -> Option<Vec<u32>> {
        loop {
            match self.state {
                AscState::Done => return None,
                AscState::Outer => {
                    if self.k == 0 {
                        self.state = AscState::Done;
                        return None;
                    }
                    self.x = self.a[self.k - 1] + 1;
                    self.k -= 1;
                    while 2 * self.x <= self.y {
                        self.a[self.k] = self.x;
                        self.y -= self.x;
                        self.k += 1;
                    }
                    self.state = AscState::Inner { l: self.k + 1 };
                }
                AscState::Inner { l } => {
                    let k = self.k;
                    if self.x <= self.y {
                        self.a[k] = self.x;
                        self.a[l] = self.y;
                        let out = self.a[..k + 2].to_vec();
                        self.x += 1;
                        self.y -= 1;
                        return Some(out);
                    }
                    self.a[k] = self.x + self.y;
                    self.y = self.x + self.y - 1;
                    self.state = AscState::Outer;
                    return Some(self.a[..k + 1].to_vec());
                }
            }
        }
    }
}

type Slot = Arc<OnceLock<Arc<[Partition]>>>;

fn cache() -> &'static Mutex<HashMap<(u32, u32), Slot>> {
    static CACHE: OnceLock<Mutex<HashMap<(u32, u32), Slot>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

fn build(lambda: u32, max_parts: u32) -> Arc<[Partition]> {
    let mut out: Vec<Partition> = AscendingCompositions::new(lambda)
        .filter(|asc| asc.len() <= max_parts as usize)
        .map(|mut asc| {
            asc.reverse();
            Partition {
                parts: asc,
                order: lambda,
            }
        })
        .collect();
    out.sort_unstable_by(|a, b| b.parts.cmp(&a.parts));
    out.into()
}

/// Every partition of `lambda` with at most `max_parts` parts, in
/// lexicographically descending order. Results are shared through a process
/// wide cache, each key computed at most once.
pub fn generate_partitions(lambda: u32, max_parts: u32) -> Result<Arc<[Partition]>> {
    if lambda == 0 {
        return Err(Error::invalid("cannot partition order 0"));
    }
    if max_parts == 0 {
        return Err(Error::invalid("max_parts must be at least 1"));
    }
    check_order(lambda)?;
    let key = (lambda, max_parts.min(lambda));
    let slot = {
        let mut map = cache().lock().unwrap_or_else(|e| e.into_inner());
        Arc::clone(map.entry(key).or_default())
    };
    Ok(Arc::clone(slot.get_or_init(|| build(key.0, key.1))))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parts_of(lambda: u32, max_parts: u32) -> Vec<Vec<u32>> {
        generate_partitions(lambda, max_parts)
            .unwrap()
            .iter()
            .map(|p| p.parts().to_vec())
            .collect()
    }

    #[test]
    fn small_cases() {
        assert_eq!(parts_of(3, 3), vec![vec![3], vec![2, 1], vec![1, 1, 1]]);
        assert_eq!(parts_of(1, 5), vec![vec![1]]);
        assert_eq!(parts_of(4, 2), vec![vec![4], vec![3, 1], vec![2, 2]]);
    }

    #[test]
    fn ascending_generator_covers_small_orders() {
        let counts: Vec<usize> = (1..=10).map(|n| AscendingCompositions::new(n).count()).collect();
        assert_eq!(counts, vec![1, 2, 3, 5, 7, 11, 15, 22, 30, 42]);
    }

    #[test]
    fn cap_is_enforced() {
        let err = generate_partitions(max_order() + 1, 3).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains(&max_order().to_string()), "{msg}");
        assert!(generate_partitions(0, 3).is_err());
        assert!(generate_partitions(3, 0).is_err());
    }

    #[test]
    fn cached_calls_share_storage() {
        let a = generate_partitions(12, 12).unwrap();
        let b = generate_partitions(12, 40).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
    }

    #[test]
    fn multiplicity_examples() {
        let p = Partition::new(vec![1, 2]).unwrap();
        let t = unique_counts(&p, 3).unwrap();
        assert_eq!(t.entries().get(&2), Some(&1));
        assert_eq!(t.entries().get(&1), Some(&1));
        assert_eq!(t.zero_count(), 1);

        let p = Partition::new(vec![1, 1, 1]).unwrap();
        let t = unique_counts(&p, 3).unwrap();
        assert_eq!(t.entries().len(), 1);
        assert_eq!(t.entries()[&1], 3);
        assert_eq!(t.zero_count(), 0);

        let p = Partition::new(vec![5]).unwrap();
        let t = unique_counts(&p, 100).unwrap();
        assert_eq!(t.entries()[&5], 1);
        assert_eq!(t.zero_count(), 99);

        let p = Partition::new(vec![1, 1, 1, 1]).unwrap();
        assert!(matches!(unique_counts(&p, 3), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn permutation_counts() {
        let close = |a: f64, b: f64| (a - b).abs() < 1e-13;
        let t = unique_counts(&Partition::new(vec![2, 1]).unwrap(), 3).unwrap();
        assert!(close(log_permutation_count(&t), 6f64.ln()));
        let t = unique_counts(&Partition::new(vec![1, 1, 1]).unwrap(), 3).unwrap();
        assert!(close(log_permutation_count(&t), 0.0));
        let t = unique_counts(&Partition::new(vec![1, 1]).unwrap(), 5).unwrap();
        assert!(close(log_permutation_count(&t), 10f64.ln()));
    }

    #[test]
    fn multinomials() {
        let close = |a: f64, b: f64| (a - b).abs() < 1e-13;
        assert!(close(log_multinomial_coefficient(&Partition::new(vec![2, 1]).unwrap()), 3f64.ln()));
        assert!(close(log_multinomial_coefficient(&Partition::new(vec![9]).unwrap()), 0.0));
        assert!(close(log_multinomial_coefficient(&Partition::new(vec![1, 1, 1]).unwrap()), 6f64.ln()));
    }

    #[test]
    fn invalid_partitions() {
        assert!(Partition::new(vec![]).is_err());
        assert!(Partition::new(vec![2, 0]).is_err());
        let p = Partition::new(vec![1, 3, 2]).unwrap();
        assert_eq!(p.parts(), &[3, 2, 1]);
        assert_eq!(p.order(), 6);
        assert_eq!(p.sum_of_squares(), 14);
    }
}
