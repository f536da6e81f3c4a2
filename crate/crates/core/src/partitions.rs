//! Integer partitions, Kostka numbers and majorization.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A partition of `n`: strictly positive, weakly decreasing parts.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct Partition {
    parts: Vec<u32>,
}

impl Partition {
    pub fn new(parts: Vec<u32>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::InvalidPartition("no parts".into()));
        }
        if parts.contains(&0) {
            return Err(Error::InvalidPartition(format!("zero part in {parts:?}")));
        }
        if parts.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidPartition(format!(
                "parts not weakly decreasing: {parts:?}"
            )));
        }
        Ok(Self { parts })
    }

    /// Sorts positive margins into a partition. The returned vector maps each
    /// sorted position to its original index.
    pub fn from_margins(margins: &[u32]) -> Result<(Self, Vec<usize>)> {
        let mut order: Vec<usize> = (0..margins.len()).collect();
        order.sort_by(|&a, &b| margins[b].cmp(&margins[a]).then(a.cmp(&b)));
        let parts = order.iter().map(|&i| margins[i]).collect();
        Ok((Self::new(parts)?, order))
    }

    pub fn single_row(n: u32) -> Self {
        Self { parts: vec![n] }
    }

    pub fn parts(&self) -> &[u32] {
        &self.parts
    }

    pub fn n(&self) -> u32 {
        self.parts.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    /// Conjugate partition (column lengths of the Young diagram).
    pub fn conjugate(&self) -> Self {
        let parts = (1..=self.parts[0])
            .map(|c| self.parts.iter().filter(|&&p| p >= c).count() as u32)
            .collect();
        Self { parts }
    }
}

impl TryFrom<Vec<u32>> for Partition {
    type Error = Error;
    fn try_from(parts: Vec<u32>) -> Result<Self> {
        Self::new(parts)
    }
}

impl From<Partition> for Vec<u32> {
    fn from(p: Partition) -> Self {
        p.parts
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let body: Vec<String> = self.parts.iter().map(u32::to_string).collect();
        write!(f, "({})", body.join(","))
    }
}

impl FromStr for Partition {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::new(parse_list(s)?)
    }
}

/// Parses `3,1,1`, `(3,1,1)` or `3 1 1` into a list of non-negative integers.
pub fn parse_list(s: &str) -> Result<Vec<u32>> {
    let inner = s.trim().trim_start_matches('(').trim_end_matches(')');
    inner
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<u32>()
                .map_err(|_| Error::Parse(format!("not a non-negative integer: {t:?}")))
        })
        .collect()
}

/// All partitions of `n` in decreasing lexicographic order.
pub fn partitions_of(n: u32) -> Vec<Partition> {
    fn rec(rem: u32, max: u32, cur: &mut Vec<u32>, out: &mut Vec<Partition>) {
        if rem == 0 {
            out.push(Partition { parts: cur.clone() });
            return;
        }
        for p in (1..=rem.min(max)).rev() {
            cur.push(p);
            rec(rem - p, p, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if n > 0 {
        rec(n, n, &mut Vec::new(), &mut out);
    }
    out
}

/// Number of semistandard Young tableaux of shape `shape` and content `weight`.
///
/// Symbols are placed one value at a time; each value occupies a horizontal
/// strip. Intermediate shapes are memoised, so every tableau is counted once.
pub fn kostka(shape: &Partition, weight: &Partition) -> Result<u64> {
    kostka_composition(shape, weight.parts())
}

/// As [`kostka`], with the content given as any composition of `n`.
pub fn kostka_composition(shape: &Partition, weight: &[u32]) -> Result<u64> {
    let total: u32 = weight.iter().sum();
    if shape.n() != total {
        return Err(Error::MarginMismatch(format!(
            "shape {shape} has size {} but weight sums to {total}",
            shape.n()
        )));
    }
    let target = shape.parts().to_vec();
    let mut memo: HashMap<(usize, Vec<u32>), u64> = HashMap::new();
    Ok(count_fillings(
        0,
        vec![0; target.len()],
        &target,
        weight,
        &mut memo,
    ))
}

fn count_fillings(
    symbol: usize,
    current: Vec<u32>,
    target: &[u32],
    weight: &[u32],
    memo: &mut HashMap<(usize, Vec<u32>), u64>,
) -> u64 {
    if symbol == weight.len() {
        return u64::from(current == target);
    }
    if let Some(&v) = memo.get(&(symbol, current.clone())) {
        return v;
    }
    let mut strips = Vec::new();
    horizontal_strips(&current, target, 0, weight[symbol], &mut current.clone(), &mut strips);
    let total = strips
        .into_iter()
        .map(|next| count_fillings(symbol + 1, next, target, weight, memo))
        .sum();
    memo.insert((symbol, current), total);
    total
}

// A horizontal strip adds at most prev-row-length minus own-length cells to each
// row, keeping columns strictly increasing.
fn horizontal_strips(
    current: &[u32],
    target: &[u32],
    row: usize,
    remaining: u32,
    next: &mut Vec<u32>,
    out: &mut Vec<Vec<u32>>,
) {
    if row == current.len() {
        if remaining == 0 {
            out.push(next.clone());
        }
        return;
    }
    let mut cap = target[row] - current[row];
    if row > 0 {
        cap = cap.min(current[row - 1] - current[row]);
    }
    for add in (0..=cap.min(remaining)).rev() {
        next[row] = current[row] + add;
        horizontal_strips(current, target, row + 1, remaining - add, next, out);
    }
    next[row] = current[row];
}

/// True iff `a` majorizes `b`: every prefix sum of `a` is at least the
/// corresponding prefix sum of `b`. Shorter vectors are zero-padded.
pub fn majorizes(a: &[u32], b: &[u32]) -> Result<bool> {
    let sa: u64 = a.iter().map(|&v| u64::from(v)).sum();
    let sb: u64 = b.iter().map(|&v| u64::from(v)).sum();
    if sa != sb {
        return Err(Error::MarginMismatch(format!(
            "majorization needs equal totals, got {sa} and {sb}"
        )));
    }
    let len = a.len().max(b.len());
    let (mut pa, mut pb) = (0u64, 0u64);
    for k in 0..len {
        pa += u64::from(a.get(k).copied().unwrap_or(0));
        pb += u64::from(b.get(k).copied().unwrap_or(0));
        if pa < pb {
            return Ok(false);
        }
    }
    Ok(true)
}
