use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_traits::One;

use crate::error::{Error, Result};
use crate::rational::{factorial, Rational};

/// An I×J×K array of counts with its three one-dimensional margins.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ThreeWayTable {
    dims: [usize; 3],
    entries: Vec<u32>,
    margins: [Vec<u32>; 3],
}

impl ThreeWayTable {
    /// Builds a table from entries indexed `[i][j][k]`; margins are recomputed.
    pub fn from_entries(dims: [usize; 3], entries: Vec<u32>) -> Result<Self> {
        if dims.contains(&0) || entries.len() != dims[0] * dims[1] * dims[2] {
            return Err(Error::InvalidTable(format!(
                "{} entries do not fill a {}x{}x{} array",
                entries.len(),
                dims[0],
                dims[1],
                dims[2]
            )));
        }
        let mut margins = [vec![0u32; dims[0]], vec![0u32; dims[1]], vec![0u32; dims[2]]];
        for i in 0..dims[0] {
            for j in 0..dims[1] {
                for k in 0..dims[2] {
                    let v = entries[(i * dims[1] + j) * dims[2] + k];
                    margins[0][i] += v;
                    margins[1][j] += v;
                    margins[2][k] += v;
                }
            }
        }
        if margins.iter().flatten().any(|&m| m == 0) {
            return Err(Error::InvalidTable("every margin must be positive".into()));
        }
        Ok(Self {
            dims,
            entries,
            margins,
        })
    }

    pub(crate) fn with_entries(&self, entries: Vec<u32>) -> Self {
        Self {
            entries,
            ..self.clone()
        }
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn entries(&self) -> &[u32] {
        &self.entries
    }

    pub fn margins(&self) -> &[Vec<u32>; 3] {
        &self.margins
    }

    pub fn n(&self) -> u32 {
        self.margins[0].iter().sum()
    }

    pub fn index(&self, cell: [usize; 3]) -> usize {
        (cell[0] * self.dims[1] + cell[1]) * self.dims[2] + cell[2]
    }

    pub fn cell(&self, index: usize) -> [usize; 3] {
        let k = index % self.dims[2];
        let j = (index / self.dims[2]) % self.dims[1];
        let i = index / (self.dims[1] * self.dims[2]);
        [i, j, k]
    }

    pub fn get(&self, cell: [usize; 3]) -> u32 {
        self.entries[self.index(cell)]
    }
}

impl fmt::Display for ThreeWayTable {
    /// Slices by the first index, separated by `|`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [_, dj, dk] = self.dims;
        let slices: Vec<String> = self
            .entries
            .chunks(dj * dk)
            .map(|s| {
                s.chunks(dk)
                    .map(|r| r.iter().map(u32::to_string).collect::<Vec<_>>().join(","))
                    .collect::<Vec<_>>()
                    .join(";")
            })
            .collect();
        write!(f, "({})", slices.join("|"))
    }
}

/// Every 3-way table with margins λ, μ, ρ, in decreasing lexicographic order.
pub fn enumerate_three_way(
    lambda: &[u32],
    mu: &[u32],
    rho: &[u32],
    cap: usize,
) -> Result<Vec<ThreeWayTable>> {
    let sums = [lambda, mu, rho].map(|m| m.iter().sum::<u32>());
    if sums[0] != sums[1] || sums[0] != sums[2] {
        return Err(Error::MarginMismatch(format!(
            "3-way margins sum to {}, {}, {}",
            sums[0], sums[1], sums[2]
        )));
    }
    if [lambda, mu, rho].iter().any(|m| m.is_empty() || m.contains(&0)) {
        return Err(Error::InvalidParameter("margins must be positive".into()));
    }
    let dims = [lambda.len(), mu.len(), rho.len()];
    let template = ThreeWayTable {
        dims,
        entries: vec![0; dims[0] * dims[1] * dims[2]],
        margins: [lambda.to_vec(), mu.to_vec(), rho.to_vec()],
    };
    let mut rem = [lambda.to_vec(), mu.to_vec(), rho.to_vec()];
    let mut entries = vec![0u32; template.entries.len()];
    let mut out = Vec::new();
    let mut overflow = false;
    fill_cell(0, &template, &mut rem, &mut entries, &mut out, cap, &mut overflow);
    if overflow {
        return Err(Error::StateSpaceTooLarge { limit: cap });
    }
    Ok(out)
}

fn fill_cell(
    idx: usize,
    t: &ThreeWayTable,
    rem: &mut [Vec<u32>; 3],
    entries: &mut Vec<u32>,
    out: &mut Vec<ThreeWayTable>,
    cap: usize,
    overflow: &mut bool,
) {
    if *overflow {
        return;
    }
    if idx == entries.len() {
        if rem.iter().flatten().all(|&v| v == 0) {
            if out.len() == cap {
                *overflow = true;
                return;
            }
            out.push(t.with_entries(entries.clone()));
        }
        return;
    }
    let [i, j, k] = t.cell(idx);
    let [_, dj, dk] = t.dims;
    // Leaving slice i requires its remaining mass to be exhausted.
    let last_in_slice = j + 1 == dj && k + 1 == dk;
    let hi = rem[0][i].min(rem[1][j]).min(rem[2][k]);
    let lo = if last_in_slice { rem[0][i] } else { 0 };
    if lo > hi {
        return;
    }
    for v in (lo..=hi).rev() {
        rem[0][i] -= v;
        rem[1][j] -= v;
        rem[2][k] -= v;
        entries[idx] = v;
        fill_cell(idx + 1, t, rem, entries, out, cap, overflow);
        rem[0][i] += v;
        rem[1][j] += v;
        rem[2][k] += v;
    }
    entries[idx] = 0;
}

/// ∏ λ_i! μ_j! ρ_k! / ∏ T_ijk!, the number of permutation pairs (σ, τ) mapping to T.
pub fn three_way_weight(t: &ThreeWayTable) -> BigUint {
    let num = t
        .margins
        .iter()
        .flatten()
        .fold(BigUint::one(), |acc, &v| acc * factorial(v));
    let den = t
        .entries
        .iter()
        .fold(BigUint::one(), |acc, &v| acc * factorial(v));
    num / den
}

/// Stationary law of the 3-way chain: weight / (n!)².
pub fn three_way_pmf(t: &ThreeWayTable) -> Rational {
    let nf = BigInt::from(factorial(t.n()));
    Rational::new(BigInt::from(three_way_weight(t)), &nf * &nf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    #[test]
    fn tiny_enumeration() {
        let ts = enumerate_three_way(&[2, 1], &[2, 1], &[2, 1], 1000).unwrap();
        // One cell of the 2x2x2 array can absorb the two-block; brute count below.
        let mut brute = 0;
        for code in 0..(3u32.pow(8)) {
            let e: Vec<u32> = (0..8).map(|b| (code / 3u32.pow(b)) % 3).collect();
            if let Ok(t) = ThreeWayTable::from_entries([2, 2, 2], e) {
                if t.margins() == &[vec![2, 1], vec![2, 1], vec![2, 1]] {
                    brute += 1;
                }
            }
        }
        assert_eq!(ts.len(), brute);
        assert!(ts.windows(2).all(|w| w[0].entries() > w[1].entries()));
        let total: Rational = ts.iter().map(three_way_pmf).sum();
        assert_eq!(total, int(1));
    }

    #[test]
    fn permutation_pairs_count() {
        for (l, m, r) in [
            (vec![1, 1, 1], vec![1, 1, 1], vec![1, 1, 1]),
            (vec![2, 2], vec![3, 1], vec![2, 1, 1]),
            (vec![4], vec![2, 2], vec![3, 1]),
        ] {
            let ts = enumerate_three_way(&l, &m, &r, 100_000).unwrap();
            let n: u32 = l.iter().sum();
            let total: BigUint = ts.iter().map(three_way_weight).sum();
            let nf = factorial(n);
            assert_eq!(total, &nf * &nf);
        }
        let ones = enumerate_three_way(&[1; 4], &[1; 4], &[1; 4], 100_000).unwrap();
        assert_eq!(ones.len(), 24 * 24);
    }

    #[test]
    fn cap_and_validation() {
        assert!(matches!(
            enumerate_three_way(&[1; 3], &[1; 3], &[1; 3], 10),
            Err(Error::StateSpaceTooLarge { limit: 10 })
        ));
        assert!(enumerate_three_way(&[2], &[1], &[2], 10).is_err());
        assert!(ThreeWayTable::from_entries([1, 1, 2], vec![1]).is_err());
        let t = ThreeWayTable::from_entries([1, 2, 1], vec![1, 2]).unwrap();
        assert_eq!(t.to_string(), "(1;2)");
        assert_eq!(t.cell(t.index([0, 1, 0])), [0, 1, 0]);
    }
}
