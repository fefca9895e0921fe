use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An ordered tuple `(N_1, ..., N_K)` of positive party sizes.
///
/// Party `k` owns the consecutive tensor slots starting at `N_1 + ... + N_{k−1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Partition {
    parts: Vec<usize>,
}

impl Partition {
    pub fn new(parts: Vec<usize>) -> Result<Self> {
        if parts.is_empty() || parts.contains(&0) {
            return Err(Error::InvalidArgument(format!(
                "partition {parts:?} must be nonempty with positive parts"
            )));
        }
        Ok(Self { parts })
    }

    /// `(1, 1, ..., 1)`: full separability.
    pub fn full(n: usize) -> Self {
        Self { parts: vec![1; n] }
    }

    /// `(N)`: the trivial partition.
    pub fn trivial(n: usize) -> Self {
        Self { parts: vec![n] }
    }

    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    pub fn k(&self) -> usize {
        self.parts.len()
    }

    pub fn total(&self) -> usize {
        self.parts.iter().sum()
    }

    /// First tensor slot of each party.
    pub fn offsets(&self) -> Vec<usize> {
        self.parts
            .iter()
            .scan(0, |acc, &p| {
                let start = *acc;
                *acc += p;
                Some(start)
            })
            .collect()
    }

    /// Same partitioning iff equal as multisets.
    pub fn same_partitioning(&self, other: &Partition) -> bool {
        let mut a = self.parts.clone();
        let mut b = other.parts.clone();
        a.sort_unstable();
        b.sort_unstable();
        a == b
    }

    /// All multiset-distinct partitions of `n` into exactly `k` parts,
    /// each listed with nonincreasing parts.
    pub fn all_of_size(n: usize, k: usize) -> Vec<Partition> {
        fn rec(remaining: usize, slots: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<Partition>) {
            if slots == 0 {
                if remaining == 0 {
                    out.push(Partition { parts: cur.clone() });
                }
                return;
            }
            let hi = max.min(remaining.saturating_sub(slots - 1));
            for p in (1..=hi).rev() {
                if p * slots < remaining {
                    break;
                }
                cur.push(p);
                rec(remaining - p, slots - 1, p, cur, out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        if k == 0 || k > n {
            return out;
        }
        rec(n, k, n, &mut Vec::with_capacity(k), &mut out);
        out
    }

    /// Every multiset-distinct partition of `n`, grouped by increasing `K`.
    pub fn all(n: usize) -> Vec<Partition> {
        (1..=n).flat_map(|k| Self::all_of_size(n, k)).collect()
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.parts.iter().map(|p| p.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

impl FromStr for Partition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let trimmed = s.trim().trim_start_matches('(').trim_end_matches(')');
        let parts = trimmed
            .split(',')
            .map(|p| {
                p.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::InvalidArgument(format!("bad partition '{s}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        Partition::new(parts)
    }
}
