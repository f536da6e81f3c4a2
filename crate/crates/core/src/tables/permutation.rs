use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;

use super::ContingencyTable;
use crate::error::{Error, Result};

/// A permutation of {1, …, n} in one-line notation.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Permutation {
    images: Vec<u32>,
}

impl Permutation {
    pub fn from_one_line(images: Vec<u32>) -> Result<Self> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &v in &images {
            if v == 0 || v as usize > n || seen[v as usize - 1] {
                return Err(Error::InvalidPermutation(format!(
                    "{images:?} is not a bijection of 1..={n}"
                )));
            }
            seen[v as usize - 1] = true;
        }
        Ok(Self { images })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            images: (1..=n as u32).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.images.len()
    }

    /// σ(1), …, σ(n).
    pub fn one_line(&self) -> &[u32] {
        &self.images
    }

    /// Swaps the values at two 0-based positions (right multiplication by a transposition).
    pub fn swap_positions(&mut self, a: usize, b: usize) {
        self.images.swap(a, b);
    }

    pub fn inversions(&self) -> usize {
        let v = &self.images;
        (0..v.len())
            .map(|i| (i + 1..v.len()).filter(|&j| v[i] > v[j]).count())
            .sum()
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut images: Vec<u32> = (1..=n as u32).collect();
        images.shuffle(rng);
        Self { images }
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sep = if self.images.len() < 10 { "" } else { " " };
        let body: Vec<String> = self.images.iter().map(u32::to_string).collect();
        write!(f, "{}", body.join(sep))
    }
}

impl FromStr for Permutation {
    type Err = Error;
    /// Accepts `12534` for n < 10, or separated values `1 2 5 3 4` / `1,2,5,3,4`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let images = if s.contains([',', ' ']) {
            crate::partitions::parse_list(s)?
        } else {
            s.chars()
                .map(|c| {
                    c.to_digit(10)
                        .ok_or_else(|| Error::Parse(format!("bad permutation digit {c:?}")))
                })
                .collect::<Result<Vec<_>>>()?
        };
        Self::from_one_line(images)
    }
}

fn block_of(margins: &[u32]) -> Vec<usize> {
    margins
        .iter()
        .enumerate()
        .flat_map(|(b, &len)| std::iter::repeat_n(b, len as usize))
        .collect()
}

/// Table of the double coset S_λ σ S_μ: entry (i, j) counts positions in the
/// i-th block of λ whose value lies in the j-th block of μ.
pub fn permutation_to_table(
    sigma: &Permutation,
    row_sums: &[u32],
    col_sums: &[u32],
) -> Result<ContingencyTable> {
    let n = sigma.n();
    let rn: u32 = row_sums.iter().sum();
    let cn: u32 = col_sums.iter().sum();
    if rn as usize != n || cn as usize != n {
        return Err(Error::MarginMismatch(format!(
            "permutation on {n} symbols with margins summing to {rn} and {cn}"
        )));
    }
    if row_sums.iter().chain(col_sums).any(|&v| v == 0) {
        return Err(Error::InvalidParameter("margins must be positive".into()));
    }
    Ok(table_from_blocks(sigma, &block_of(row_sums), &block_of(col_sums), row_sums, col_sums))
}

pub(crate) fn table_from_blocks(
    sigma: &Permutation,
    row_block: &[usize],
    col_block: &[usize],
    row_sums: &[u32],
    col_sums: &[u32],
) -> ContingencyTable {
    let c = col_sums.len();
    let mut entries = vec![0u32; row_sums.len() * c];
    for (pos, &v) in sigma.one_line().iter().enumerate() {
        entries[row_block[pos] * c + col_block[v as usize - 1]] += 1;
    }
    ContingencyTable::from_parts(
        row_sums.len(),
        c,
        entries,
        row_sums.to_vec(),
        col_sums.to_vec(),
    )
}

/// Shortest permutation in the double coset of `t`: positions are filled left
/// to right, each row block taking the smallest unused values of each column
/// block in increasing order.
pub fn min_coset_representative(t: &ContingencyTable) -> Permutation {
    let mut next_value: Vec<u32> = Vec::with_capacity(t.cols());
    let mut start = 1u32;
    for &m in t.col_sums() {
        next_value.push(start);
        start += m;
    }
    let mut images = Vec::with_capacity(t.n() as usize);
    for i in 0..t.rows() {
        for (j, next) in next_value.iter_mut().enumerate() {
            for _ in 0..t.get(i, j) {
                images.push(*next);
                *next += 1;
            }
        }
    }
    Permutation { images }
}

/// Exact Fisher-Yates draw: a uniform permutation mapped to its double coset.
pub fn sample_fisher_yates<R: Rng + ?Sized>(
    row_sums: &[u32],
    col_sums: &[u32],
    rng: &mut R,
) -> Result<ContingencyTable> {
    let n: u32 = row_sums.iter().sum();
    let sigma = Permutation::random(n as usize, rng);
    permutation_to_table(&sigma, row_sums, col_sums)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tables::{enumerate_tables, fisher_yates_pmf};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn perm(s: &str) -> Permutation {
        s.parse().unwrap()
    }

    fn all_permutations(n: usize) -> Vec<Permutation> {
        fn rec(cur: &mut Vec<u32>, used: &mut Vec<bool>, out: &mut Vec<Permutation>) {
            if cur.len() == used.len() {
                out.push(Permutation { images: cur.clone() });
                return;
            }
            for v in 0..used.len() {
                if !used[v] {
                    used[v] = true;
                    cur.push(v as u32 + 1);
                    rec(cur, used, out);
                    cur.pop();
                    used[v] = false;
                }
            }
        }
        let mut out = Vec::new();
        rec(&mut Vec::new(), &mut vec![false; n], &mut out);
        out
    }

    #[test]
    fn permutation_examples() {
        let a = permutation_to_table(&perm("12534"), &[3, 2], &[2, 2, 1]).unwrap();
        assert_eq!(a.to_string(), "(2,0,1;0,2,0)");
        let b = permutation_to_table(&perm("13425"), &[3, 2], &[2, 2, 1]).unwrap();
        assert_eq!(b.to_string(), "(1,2,0;1,0,1)");
        let id = permutation_to_table(&Permutation::identity(6), &[3, 2, 1], &[3, 2, 1]).unwrap();
        assert_eq!(id.to_string(), "(3,0,0;0,2,0;0,0,1)");
        assert!(permutation_to_table(&perm("123"), &[2, 2], &[4]).is_err());
    }

    #[test]
    fn representative_examples() {
        let t: ContingencyTable = "2,1,0;0,1,1".parse().unwrap();
        assert_eq!(min_coset_representative(&t).to_string(), "12345");
        let t: ContingencyTable = "0,2,1;2,0,0".parse().unwrap();
        assert_eq!(min_coset_representative(&t).to_string(), "34512");
        let t: ContingencyTable = "2,0;0,3".parse().unwrap();
        assert_eq!(min_coset_representative(&t), Permutation::identity(5));
    }

    #[test]
    fn representative_is_unique_shortest() {
        for (rs, cs) in [
            (vec![3, 2], vec![2, 2, 1]),
            (vec![2, 2, 2], vec![3, 2, 1]),
            (vec![4, 2], vec![3, 3]),
        ] {
            let n: u32 = rs.iter().sum();
            let perms = all_permutations(n as usize);
            for t in enumerate_tables(&rs, &cs).unwrap() {
                let members: Vec<&Permutation> = perms
                    .iter()
                    .filter(|s| permutation_to_table(s, &rs, &cs).unwrap() == t)
                    .collect();
                let best = members.iter().map(|s| s.inversions()).min().unwrap();
                let shortest: Vec<_> = members.iter().filter(|s| s.inversions() == best).collect();
                assert_eq!(shortest.len(), 1);
                assert_eq!(**shortest[0], min_coset_representative(&t));
            }
        }
    }

    #[test]
    fn representative_round_trip() {
        for n in 1..=8u32 {
            for lam in crate::partitions::partitions_of(n) {
                for mu in crate::partitions::partitions_of(n) {
                    if crate::tables::count_tables(lam.parts(), mu.parts()).unwrap() > 2000 {
                        continue;
                    }
                    for t in enumerate_tables(lam.parts(), mu.parts()).unwrap() {
                        let s = min_coset_representative(&t);
                        assert_eq!(permutation_to_table(&s, lam.parts(), mu.parts()).unwrap(), t);
                    }
                }
            }
        }
    }

    #[test]
    fn coset_counts_match_permutation_fibres() {
        let perms = all_permutations(5);
        for t in enumerate_tables(&[3, 2], &[2, 2, 1]).unwrap() {
            let fibre = perms
                .iter()
                .filter(|s| permutation_to_table(s, &[3, 2], &[2, 2, 1]).unwrap() == t)
                .count();
            assert_eq!(fibre as u64, u64::try_from(crate::tables::coset_size(&t)).unwrap());
        }
    }

    #[test]
    fn sampler_single_row_and_two_by_two() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let t = sample_fisher_yates(&[4], &[2, 1, 1], &mut rng).unwrap();
            assert_eq!(t.entries(), &[2, 1, 1]);
        }
        let target: ContingencyTable = "1,1;1,0".parse().unwrap();
        assert_eq!(fisher_yates_pmf(&target), crate::rational::rat(2, 3));
        let draws = 30_000;
        let hits = (0..draws)
            .filter(|_| sample_fisher_yates(&[2, 1], &[2, 1], &mut rng).unwrap() == target)
            .count();
        let p = hits as f64 / draws as f64;
        let sd = (2.0 / 9.0 / draws as f64).sqrt();
        assert!((p - 2.0 / 3.0).abs() < 4.0 * sd, "{p}");
    }

    #[test]
    fn parse_forms() {
        assert_eq!(perm("1 2 3"), Permutation::identity(3));
        assert_eq!(perm("2,1"), Permutation::from_one_line(vec![2, 1]).unwrap());
        assert!("112".parse::<Permutation>().is_err());
        assert!("1a".parse::<Permutation>().is_err());
        assert_eq!(perm("3412").inversions(), 4);
    }
}
