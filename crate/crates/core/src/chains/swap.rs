use num_bigint::BigInt;
use num_traits::{One, Zero};

use super::transpositions::swap_moves;
use crate::rational::Rational;
use crate::tables::ContingencyTable;

// Shared shape of the three swap-based rows: probability per feasible move,
// rejected and infeasible mass on the diagonal.
fn build_row<F>(t: &ContingencyTable, prob: F) -> Vec<(ContingencyTable, Rational)>
where
    F: Fn(u64, u64, u64, u64) -> Rational,
{
    let mut out = Vec::new();
    let mut moved = Rational::zero();
    for m in swap_moves(t.rows(), t.cols()) {
        let Some(y) = m.apply(t) else { continue };
        let a = u64::from(t.get(m.i1, m.j1));
        let b = u64::from(t.get(m.i2, m.j2));
        let c = u64::from(t.get(m.i1, m.j2));
        let d = u64::from(t.get(m.i2, m.j1));
        let p = prob(a, b, c, d);
        if p.is_zero() {
            continue;
        }
        moved += &p;
        out.push((y, p));
    }
    let hold = Rational::one() - moved;
    if !hold.is_zero() {
        out.insert(0, (t.clone(), hold));
    }
    out
}

fn cells_squared(t: &ContingencyTable) -> BigInt {
    let ij = (t.rows() * t.cols()) as u64;
    BigInt::from(ij * ij)
}

/// Uniform swap chain: every feasible move with probability 2/(IJ)².
pub fn uniform_swap_row(t: &ContingencyTable) -> Vec<(ContingencyTable, Rational)> {
    let den = cells_squared(t);
    build_row(t, |_, _, _, _| Rational::new(BigInt::from(2), den.clone()))
}

/// Random transpositions Metropolised to the uniform law:
/// min(2ab, 2(c+1)(d+1))/n² with a, b the decremented and c, d the incremented cells.
pub fn metropolis_uniform_row(t: &ContingencyTable) -> Vec<(ContingencyTable, Rational)> {
    let n = u64::from(t.n());
    let den = BigInt::from(n * n);
    build_row(t, |a, b, c, d| {
        let forward = 2 * a * b;
        let backward = 2 * (c + 1) * (d + 1);
        Rational::new(BigInt::from(forward.min(backward)), den.clone())
    })
}

/// Uniform swaps Metropolised to Fisher-Yates:
/// 2/(IJ)² · min(1, ab/((c+1)(d+1))).
pub fn metropolis_fy_row(t: &ContingencyTable) -> Vec<(ContingencyTable, Rational)> {
    let den = cells_squared(t);
    build_row(t, |a, b, c, d| {
        let ratio = Rational::new(BigInt::from(a * b), BigInt::from((c + 1) * (d + 1)));
        let accept = if ratio > Rational::one() {
            Rational::one()
        } else {
            ratio
        };
        Rational::new(BigInt::from(2), den.clone()) * accept
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chains::{table_kernel, KernelKind};
    use crate::rational::rat;
    use crate::tables::{enumerate_tables, fisher_yates_pmf};

    fn t(s: &str) -> ContingencyTable {
        s.parse().unwrap()
    }

    #[test]
    fn uniform_swap_probabilities() {
        for x in enumerate_tables(&[3, 2], &[2, 2, 1]).unwrap() {
            let row = uniform_swap_row(&x);
            let total: Rational = row.iter().map(|(_, p)| p).sum();
            assert_eq!(total, Rational::one());
            for (y, p) in &row {
                if y != &x {
                    assert_eq!(p, &rat(2, 36));
                }
            }
        }
        assert_eq!(uniform_swap_row(&t("3,2")), vec![(t("3,2"), Rational::one())]);
    }

    #[test]
    fn metropolis_uniform_values() {
        let x = t("2,1,0;0,1,1");
        let row = metropolis_uniform_row(&x);
        // (1,1),(2,2) -> (1,2),(2,1): min(2·2·1, 2·2·1) = 4.
        let y = t("1,2,0;1,0,1");
        let p = row.iter().find(|(z, _)| z == &y).unwrap().1.clone();
        assert_eq!(p, rat(4, 25));
        // (1,1),(2,3) -> (1,3),(2,1): min(2·2·1, 2·1·1) = 2.
        let z = t("1,1,1;1,1,0");
        let q = row.iter().find(|(w, _)| w == &z).unwrap().1.clone();
        assert_eq!(q, rat(2, 25));
    }

    #[test]
    fn metropolis_fy_balances_fisher_yates() {
        for (rs, cs) in [(vec![3u32, 2], vec![2u32, 2, 1]), (vec![3, 3, 2], vec![4, 2, 2])] {
            let k = table_kernel(KernelKind::MetropolisFisherYates, &rs, &cs).unwrap();
            for x in 0..k.len() {
                for y in 0..k.len() {
                    let lhs = fisher_yates_pmf(k.state(x)) * k.transition(x, y);
                    let rhs = fisher_yates_pmf(k.state(y)) * k.transition(y, x);
                    assert_eq!(lhs, rhs);
                }
            }
            assert!(k.is_stationary());
        }
    }

    #[test]
    fn uniform_vector_is_stationary_for_metropolis_uniform() {
        let k = table_kernel(KernelKind::MetropolisUniform, &[3, 2], &[2, 2, 1]).unwrap();
        assert!(k.is_stationary());
        let k = table_kernel(KernelKind::UniformSwap, &[3, 2], &[2, 2, 1]).unwrap();
        assert!(k.is_stationary());
    }

    #[test]
    fn fy_acceptance_is_one_for_favourable_moves() {
        // From (2,0;0,2) to (1,1;1,1): ab/((c+1)(d+1)) = 4 ≥ 1, so accepted outright.
        let row = metropolis_fy_row(&t("2,0;0,2"));
        let p = row.iter().find(|(y, _)| y == &t("1,1;1,1")).unwrap().1.clone();
        assert_eq!(p, rat(2, 16));
        let row = metropolis_fy_row(&t("1,1;1,1"));
        let q = row.iter().find(|(y, _)| y == &t("2,0;0,2")).unwrap().1.clone();
        assert_eq!(q, rat(2, 16) * rat(1, 4));
    }
}
