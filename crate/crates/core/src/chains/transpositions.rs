use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::Rng;

use crate::error::{Error, Result};
use crate::rational::Rational;
use crate::tables::{ContingencyTable, Permutation};

/// Moves one unit from cells (i1,j1) and (i2,j2) to cells (i1,j2) and (i2,j1).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SwapMove {
    pub i1: usize,
    pub j1: usize,
    pub i2: usize,
    pub j2: usize,
}

impl SwapMove {
    pub fn new(i1: usize, j1: usize, i2: usize, j2: usize) -> Result<Self> {
        if i1 == i2 || j1 == j2 {
            return Err(Error::InvalidParameter(format!(
                "swap needs distinct rows and columns, got ({i1},{j1}) and ({i2},{j2})"
            )));
        }
        Ok(Self { i1, j1, i2, j2 })
    }

    /// The resulting table, or `None` when a decremented cell is empty.
    pub fn apply(&self, t: &ContingencyTable) -> Option<ContingencyTable> {
        let c = t.cols();
        let mut e = t.entries().to_vec();
        let (a, b) = (self.i1 * c + self.j1, self.i2 * c + self.j2);
        if e[a] == 0 || e[b] == 0 {
            return None;
        }
        e[a] -= 1;
        e[b] -= 1;
        e[self.i1 * c + self.j2] += 1;
        e[self.i2 * c + self.j1] += 1;
        Some(t.with_entries(e))
    }

    /// The move that undoes this one.
    pub fn reverse(&self) -> Self {
        Self {
            i1: self.i1,
            j1: self.j2,
            i2: self.i2,
            j2: self.j1,
        }
    }
}

/// All unordered swap moves of an I×J table: i1 < i2 and j1 ≠ j2.
pub fn swap_moves(rows: usize, cols: usize) -> Vec<SwapMove> {
    let mut out = Vec::with_capacity(rows * rows.saturating_sub(1) * cols * cols.saturating_sub(1) / 2);
    for i1 in 0..rows {
        for i2 in i1 + 1..rows {
            for j1 in 0..cols {
                for j2 in 0..cols {
                    if j1 != j2 {
                        out.push(SwapMove { i1, j1, i2, j2 });
                    }
                }
            }
        }
    }
    out
}

/// Each feasible move with weight 2·T_{i1j1}·T_{i2j2}; the transition
/// probability is weight / n².
pub fn rt_weights(t: &ContingencyTable) -> Vec<(SwapMove, u64)> {
    swap_moves(t.rows(), t.cols())
        .into_iter()
        .filter_map(|m| {
            let w = 2 * u64::from(t.get(m.i1, m.j1)) * u64::from(t.get(m.i2, m.j2));
            (w > 0).then_some((m, w))
        })
        .collect()
}

fn row_with_denominator(t: &ContingencyTable, den: u64) -> Vec<(ContingencyTable, Rational)> {
    let den = BigInt::from(den);
    let mut out = Vec::new();
    let mut moved = Rational::zero();
    for (m, w) in rt_weights(t) {
        let p = Rational::new(BigInt::from(w), den.clone());
        moved += &p;
        out.push((m.apply(t).expect("positive weight implies feasible move"), p));
    }
    let hold = Rational::one() - moved;
    if !hold.is_zero() {
        out.insert(0, (t.clone(), hold));
    }
    out
}

/// Random transpositions row: each swap move with probability 2·T_{i1j1}T_{i2j2}/n²,
/// the rest on the diagonal.
pub fn rt_row(t: &ContingencyTable) -> Vec<(ContingencyTable, Rational)> {
    let n = u64::from(t.n());
    row_with_denominator(t, n * n)
}

/// Variant where the two picked cards are distinct: weights over n(n−1).
pub fn rt_row_no_holding(t: &ContingencyTable) -> Vec<(ContingencyTable, Rational)> {
    let n = u64::from(t.n());
    if n < 2 {
        return vec![(t.clone(), Rational::one())];
    }
    row_with_denominator(t, n * (n - 1))
}

fn cell_of_item(t: &ContingencyTable, mut item: u32) -> (usize, usize) {
    for (idx, &v) in t.entries().iter().enumerate() {
        if item < v {
            return (idx / t.cols(), idx % t.cols());
        }
        item -= v;
    }
    unreachable!("item index below n")
}

/// One random transpositions step: two of the n data points are picked with
/// replacement and their column labels swapped.
pub fn rt_sample_step<R: Rng + ?Sized>(t: &ContingencyTable, rng: &mut R) -> ContingencyTable {
    let n = t.n();
    let (i1, j1) = cell_of_item(t, rng.random_range(0..n));
    let (i2, j2) = cell_of_item(t, rng.random_range(0..n));
    if i1 == i2 || j1 == j2 {
        return t.clone();
    }
    SwapMove { i1, j1, i2, j2 }
        .apply(t)
        .expect("picked cells are occupied")
}

/// One step of random transpositions on S_n: positions a, b uniform with
/// replacement, values swapped (identity when a = b).
pub fn sn_rt_step<R: Rng + ?Sized>(sigma: &mut Permutation, rng: &mut R) {
    let n = sigma.n();
    let a = rng.random_range(0..n);
    let b = rng.random_range(0..n);
    sigma.swap_positions(a, b);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;
    use crate::tables::{enumerate_tables, permutation_to_table};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashMap;

    fn t(s: &str) -> ContingencyTable {
        s.parse().unwrap()
    }

    fn prob(row: &[(ContingencyTable, Rational)], target: &ContingencyTable) -> Rational {
        row.iter()
            .filter(|(y, _)| y == target)
            .map(|(_, p)| p.clone())
            .sum()
    }

    #[test]
    fn example_transition_probability() {
        let row = rt_row(&t("2,1,0;0,1,1"));
        assert_eq!(prob(&row, &t("1,2,0;1,0,1")), rat(4, 25));
        assert_eq!(prob(&row, &t("1,1,1;1,1,0")), rat(4, 25));
        assert_eq!(prob(&row, &t("2,0,1;0,2,0")), rat(2, 25));
        assert_eq!(prob(&row, &t("2,1,0;0,1,1")), rat(3, 5));
    }

    #[test]
    fn rt_row_agrees_with_permutation_count() {
        // Oracle: from the shortest coset representative, apply all n² ordered
        // position pairs and map back to tables.
        let (rs, cs) = ([3u32, 2], [2u32, 2, 1]);
        for x in enumerate_tables(&rs, &cs).unwrap() {
            let sigma = crate::tables::min_coset_representative(&x);
            let mut counts: HashMap<ContingencyTable, i64> = HashMap::new();
            for a in 0..5 {
                for b in 0..5 {
                    let mut s = sigma.clone();
                    s.swap_positions(a, b);
                    *counts.entry(permutation_to_table(&s, &rs, &cs).unwrap()).or_default() += 1;
                }
            }
            let row = rt_row(&x);
            for (y, c) in counts {
                assert_eq!(prob(&row, &y), rat(c, 25));
            }
        }
    }

    #[test]
    fn two_by_two_birth_rate() {
        // λ=(n−k,k), μ=(n−ℓ,ℓ): P(a, a+1) = 2(k−a)(ℓ−a)/n² with a the (2,2) entry.
        let (n, k, l) = (9i64, 3i64, 4i64);
        for x in enumerate_tables(&[6, 3], &[5, 4]).unwrap() {
            let a = i64::from(x.get(1, 1));
            let up: Rational = rt_row(&x)
                .iter()
                .filter(|(y, _)| i64::from(y.get(1, 1)) == a + 1)
                .map(|(_, p)| p.clone())
                .sum();
            assert_eq!(up, rat(2 * (k - a) * (l - a), n * n));
        }
    }

    #[test]
    fn birth_and_death_rates_every_cell() {
        for (rs, cs) in [(vec![3u32, 2, 2], vec![3u32, 3, 1]), (vec![4, 2, 2], vec![2, 2, 2, 2])] {
            let n = i64::from(rs.iter().sum::<u32>());
            for x in enumerate_tables(&rs, &cs).unwrap() {
                let row = rt_row(&x);
                for i in 0..rs.len() {
                    for j in 0..cs.len() {
                        let v = i64::from(x.get(i, j));
                        let (li, mj) = (i64::from(rs[i]), i64::from(cs[j]));
                        let up: Rational = row
                            .iter()
                            .filter(|(y, _)| i64::from(y.get(i, j)) == v + 1)
                            .map(|(_, p)| p.clone())
                            .sum();
                        let down: Rational = row
                            .iter()
                            .filter(|(y, _)| i64::from(y.get(i, j)) == v - 1)
                            .map(|(_, p)| p.clone())
                            .sum();
                        assert_eq!(up, rat(2 * (li - v) * (mj - v), n * n));
                        assert_eq!(down, rat(2 * v * (n - li - mj + v), n * n));
                    }
                }
            }
        }
    }

    #[test]
    fn no_holding_rescales_off_diagonal() {
        let x = t("2,1,0;0,1,1");
        let a = rt_row(&x);
        let b = rt_row_no_holding(&x);
        let y = t("1,2,0;1,0,1");
        assert_eq!(prob(&b, &y), prob(&a, &y) * rat(5, 4));
        assert_eq!(rt_row_no_holding(&t("1")), vec![(t("1"), Rational::one())]);
    }

    #[test]
    fn sampled_step_matches_row() {
        let x = t("2,1,0;0,1,1");
        let row = rt_row(&x);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let draws = 200_000u32;
        let mut counts: HashMap<ContingencyTable, u32> = HashMap::new();
        for _ in 0..draws {
            *counts.entry(rt_sample_step(&x, &mut rng)).or_default() += 1;
        }
        for (y, p) in &row {
            let p = crate::rational::to_f64(p);
            let got = f64::from(counts.get(y).copied().unwrap_or(0)) / f64::from(draws);
            let sd = (p * (1.0 - p) / f64::from(draws)).sqrt();
            assert!((got - p).abs() < 4.0 * sd, "{y}: {got} vs {p}");
        }
        assert_eq!(counts.len(), row.len());
    }

    #[test]
    fn single_state_never_moves() {
        let x = t("4,1");
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            assert_eq!(rt_sample_step(&x, &mut rng), x);
        }
        assert_eq!(rt_row(&x), vec![(x, Rational::one())]);
        let mut s = Permutation::identity(1);
        sn_rt_step(&mut s, &mut rng);
        assert_eq!(s, Permutation::identity(1));
    }

    #[test]
    fn sn_holding_frequency() {
        let n = 6usize;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let steps = 300_000;
        let mut holds = 0u32;
        for _ in 0..steps {
            let mut s = Permutation::identity(n);
            sn_rt_step(&mut s, &mut rng);
            holds += u32::from(s == Permutation::identity(n));
        }
        let p = 1.0 / n as f64;
        let got = f64::from(holds) / f64::from(steps);
        assert!((got - p).abs() < 4.0 * (p * (1.0 - p) / f64::from(steps)).sqrt());
    }

    #[test]
    fn swap_move_validation() {
        assert!(SwapMove::new(0, 0, 0, 1).is_err());
        assert!(SwapMove::new(0, 1, 1, 1).is_err());
        let m = SwapMove::new(0, 0, 1, 1).unwrap();
        let x = t("1,0;0,1");
        let y = m.apply(&x).unwrap();
        assert_eq!(y, t("0,1;1,0"));
        assert_eq!(m.reverse().apply(&y).unwrap(), x);
        assert!(m.apply(&y).is_none());
        assert_eq!(swap_moves(3, 4).len(), 3 * 4 * 3);
    }
}
