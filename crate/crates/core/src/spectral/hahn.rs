//! Univariate and multivariate Hahn polynomials and their kernel polynomials.

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::rational::{binomial, falling, from_biguint, int, rising, Rational};

/// Multi-index m = (m_1, …, m_{J−1}) of a multivariate Hahn polynomial.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HahnIndex {
    pub m: Vec<u32>,
}

impl HahnIndex {
    pub fn new(m: Vec<u32>) -> Self {
        Self { m }
    }

    pub fn degree(&self) -> u32 {
        self.m.iter().sum()
    }

    /// All indices of length `len` and total degree `degree`.
    pub fn all_of_degree(degree: u32, len: usize) -> Vec<HahnIndex> {
        let mut out = Vec::new();
        let mut cur = vec![0u32; len];
        fill_compositions(degree, 0, &mut cur, &mut out);
        out.into_iter().map(HahnIndex::new).collect()
    }
}

fn fill_compositions(rest: u32, pos: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if pos == cur.len() {
        if rest == 0 {
            out.push(cur.clone());
        }
        return;
    }
    if pos + 1 == cur.len() {
        cur[pos] = rest;
        out.push(cur.clone());
        cur[pos] = 0;
        return;
    }
    for v in (0..=rest).rev() {
        cur[pos] = v;
        fill_compositions(rest - v, pos + 1, cur, out);
    }
    cur[pos] = 0;
}

/// Terminating ₃F₂: Σ_s (−m)_(s)(m+α+β−1)_(s)(−x)_(s) / ((α)_(s)(−size)_(s) s!).
///
/// The sum stops at the first vanishing numerator factor. A vanishing
/// denominator factor before that point is an error.
pub fn hahn_univariate(m: u32, x: i64, size: i64, alpha: i64, beta: i64) -> Result<Rational> {
    let mut total = Rational::one();
    let mut term = Rational::one();
    let c = i64::from(m) + alpha + beta - 1;
    for s in 0..i64::from(m) {
        let num = (s - i64::from(m)) * (c + s) * (s - x);
        if num == 0 {
            break;
        }
        let den = (alpha + s) * (s - size) * (s + 1);
        if den == 0 {
            return Err(Error::ZeroDenominator(format!(
                "Hahn Q_{m}({x}; {size}, {alpha}, {beta}) hits a zero denominator at term {}",
                s + 1
            )));
        }
        term *= Rational::new(BigInt::from(num), BigInt::from(den));
        total += &term;
    }
    Ok(total)
}

fn check_slice(x: &[u32], k: u32, mu: &[u32]) -> Result<()> {
    if x.len() != mu.len() {
        return Err(Error::InvalidParameter(format!(
            "point has {} coordinates, margin has {}",
            x.len(),
            mu.len()
        )));
    }
    if x.iter().sum::<u32>() != k || x.iter().zip(mu).any(|(a, b)| a > b) {
        return Err(Error::InvalidParameter(format!(
            "{x:?} is not in the hypergeometric support for k={k}, mu={mu:?}"
        )));
    }
    Ok(())
}

/// Multivariate Hahn polynomial Q_m(x; k, μ) for the hypergeometric law of
/// a size-k draw from urns μ, evaluated at x (the second row of a 2×J table).
///
/// The j-th univariate factor has parameters
/// (k − |x_{j−1}| − |m^{j+1}|, −μ_j, −|μ^{j+1}| + 2|m^{j+1}|).
pub fn hahn_multivariate(index: &HahnIndex, x: &[u32], k: u32, mu: &[u32]) -> Result<Rational> {
    check_slice(x, k, mu)?;
    let j_count = mu.len();
    if index.m.len() + 1 != j_count {
        return Err(Error::InvalidParameter(format!(
            "index has length {}, expected {}",
            index.m.len(),
            j_count.saturating_sub(1)
        )));
    }
    let degree = index.degree();
    let lead = falling(&int(i64::from(k)), degree);
    if lead.is_zero() {
        return Err(Error::ZeroDenominator(format!(
            "degree {degree} exceeds sample size {k}"
        )));
    }
    let mut value = if degree.is_multiple_of(2) { lead.recip() } else { -lead.recip() };
    for j in 0..j_count - 1 {
        let x_prefix: i64 = x[..j].iter().map(|&v| i64::from(v)).sum();
        let m_tail: i64 = index.m[j + 1..].iter().map(|&v| i64::from(v)).sum();
        let mu_tail: i64 = mu[j + 1..].iter().map(|&v| i64::from(v)).sum();
        let mj = index.m[j];
        let size = i64::from(k) - x_prefix - m_tail;
        value *= rising(&int(-size), mj);
        if value.is_zero() {
            return Ok(value);
        }
        value *= hahn_univariate(
            mj,
            i64::from(x[j]),
            size,
            -i64::from(mu[j]),
            -mu_tail + 2 * m_tail,
        )?;
    }
    Ok(value)
}

/// All x with |x| = k and x_j ≤ μ_j, in decreasing lexicographic order.
pub fn hypergeometric_support(k: u32, mu: &[u32]) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut cur = vec![0u32; mu.len()];
    fn rec(pos: usize, rest: u32, mu: &[u32], cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if pos == mu.len() {
            if rest == 0 {
                out.push(cur.clone());
            }
            return;
        }
        let tail: u32 = mu[pos + 1..].iter().sum();
        let lo = rest.saturating_sub(tail);
        for v in (lo..=rest.min(mu[pos])).rev() {
            cur[pos] = v;
            rec(pos + 1, rest - v, mu, cur, out);
        }
        cur[pos] = 0;
    }
    rec(0, k, mu, &mut cur, &mut out);
    out
}

/// H_{k,μ}(x) = ∏ C(μ_j, x_j) / C(n, k).
pub fn hypergeometric_weight(x: &[u32], mu: &[u32]) -> Rational {
    let n: u64 = mu.iter().map(|&v| u64::from(v)).sum();
    let k: u64 = x.iter().map(|&v| u64::from(v)).sum();
    let num = x
        .iter()
        .zip(mu)
        .fold(num_bigint::BigUint::one(), |acc, (&a, &b)| acc * binomial(u64::from(b), u64::from(a)));
    from_biguint(num) / from_biguint(binomial(n, k))
}

/// ⟨Q_m, Q_m⟩ under H_{k,μ}, by exhaustive summation.
pub fn hahn_norm(index: &HahnIndex, k: u32, mu: &[u32]) -> Result<Rational> {
    let mut s = Rational::zero();
    for x in hypergeometric_support(k, mu) {
        let q = hahn_multivariate(index, &x, k, mu)?;
        s += hypergeometric_weight(&x, mu) * &q * &q;
    }
    Ok(s)
}

/// h_m(x, x) = Σ_{|m|=m} Q_m(x)² / ⟨Q_m, Q_m⟩.
pub fn kernel_poly_definitional(m: u32, x: &[u32], k: u32, mu: &[u32]) -> Result<Rational> {
    check_slice(x, k, mu)?;
    let mut s = Rational::zero();
    for index in HahnIndex::all_of_degree(m, mu.len() - 1) {
        let norm = hahn_norm(&index, k, mu)?;
        let q = hahn_multivariate(&index, x, k, mu)?;
        if norm.is_zero() {
            // Zero norm means the polynomial vanishes on the support.
            if !q.is_zero() {
                return Err(Error::ZeroDenominator(format!("Hahn index {:?} has zero norm", index.m)));
            }
            continue;
        }
        s += &q * &q / norm;
    }
    Ok(s)
}

/// Closed form of h_m(k e_j, k e_j):
/// C(k,m)(n−2m+1) n_[m−1] (n−μ_j)_[m] / ((n−k)_[m] (μ_j)_[m]).
pub fn kernel_poly_extreme(m: u32, k: u32, mu_j: u32, n: u32) -> Result<Rational> {
    if mu_j < k {
        return Err(Error::InvalidParameter(format!("needs mu_j >= k, got mu_j={mu_j}, k={k}")));
    }
    if m == 0 || m > k {
        return Err(Error::InvalidParameter(format!("degree must satisfy 1 <= m <= k, got m={m}, k={k}")));
    }
    if 2 * k > n || mu_j > n {
        return Err(Error::InvalidParameter(format!(
            "needs k <= n/2 and mu_j <= n, got k={k}, mu_j={mu_j}, n={n}"
        )));
    }
    let (n, k, m, mu_j) = (i64::from(n), i64::from(k), m, i64::from(mu_j));
    let num = from_biguint(binomial(k as u64, u64::from(m)))
        * int(n - 2 * i64::from(m) + 1)
        * falling(&int(n), m - 1)
        * falling(&int(n - mu_j), m);
    let den = falling(&int(n - k), m) * falling(&int(mu_j), m);
    Ok(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chains::rt_row;
    use crate::rational::rat;
    use crate::tables::{enumerate_tables, ContingencyTable};

    #[test]
    fn univariate_low_degrees() {
        for x in 0..=4 {
            assert_eq!(hahn_univariate(0, x, 4, -3, 2).unwrap(), Rational::one());
            // One-term expansion: 1 − (α+β)x/(αk) at m = 1.
            let expected = Rational::one() - rat((-3 + 2) * x, -3 * 4);
            assert_eq!(hahn_univariate(1, x, 4, -3, 2).unwrap(), expected);
        }
    }

    #[test]
    fn univariate_orthogonality() {
        // 2×2 case: μ = (5, 7), k = 4; x is the first coordinate, weight C(5,x)C(7,4−x)/C(12,4).
        let mu = [5u32, 7];
        let support = hypergeometric_support(4, &mu);
        let q = |m: u32, x: u32| hahn_univariate(m, i64::from(x), 4, -5, -7).unwrap();
        for a in 0..=4 {
            for b in 0..a {
                let s: Rational = support
                    .iter()
                    .map(|x| hypergeometric_weight(x, &mu) * q(a, x[0]) * q(b, x[0]))
                    .sum();
                assert!(s.is_zero(), "Q_{a} and Q_{b} not orthogonal");
            }
        }
    }

    #[test]
    fn premature_zero_denominator_errors() {
        // α = 0 makes the first denominator vanish while the numerator does not.
        assert!(matches!(hahn_univariate(1, 1, 3, 0, 2), Err(Error::ZeroDenominator(_))));
    }

    #[test]
    fn zero_index_is_one() {
        let mu = [4u32, 4, 4];
        for x in hypergeometric_support(3, &mu) {
            assert_eq!(hahn_multivariate(&HahnIndex::new(vec![0, 0]), &x, 3, &mu).unwrap(), Rational::one());
        }
    }

    #[test]
    fn support_and_weights() {
        let mu = [4u32, 4, 4];
        let support = hypergeometric_support(3, &mu);
        assert_eq!(support.len(), 10);
        assert_eq!(support[0], vec![3, 0, 0]);
        let total: Rational = support.iter().map(|x| hypergeometric_weight(x, &mu)).sum();
        assert_eq!(total, Rational::one());
        assert_eq!(HahnIndex::all_of_degree(2, 2).len(), 3);
        assert_eq!(HahnIndex::all_of_degree(3, 3).len(), 10);
    }

    #[test]
    fn multivariate_orthogonality() {
        let (k, mu) = (3u32, [4u32, 4, 4]);
        let mut indices = Vec::new();
        for d in 0..=2 {
            indices.extend(HahnIndex::all_of_degree(d, 2));
        }
        let support = hypergeometric_support(k, &mu);
        for (a, ia) in indices.iter().enumerate() {
            for ib in &indices[..a] {
                let s: Rational = support
                    .iter()
                    .map(|x| {
                        hypergeometric_weight(x, &mu)
                            * hahn_multivariate(ia, x, k, &mu).unwrap()
                            * hahn_multivariate(ib, x, k, &mu).unwrap()
                    })
                    .sum();
                assert!(s.is_zero(), "{:?} vs {:?}", ia.m, ib.m);
            }
        }
    }

    #[test]
    fn multivariate_eigenfunctions_of_rt() {
        let (rs, mu) = ([9u32, 3], [4u32, 4, 4]);
        let n = 12i64;
        let tables = enumerate_tables(&rs, &mu).unwrap();
        let second_row = |t: &ContingencyTable| t.to_rows()[1].clone();
        for d in 0..=3u32 {
            let beta = Rational::one() - rat(2 * i64::from(d) * (n + 1 - i64::from(d)), n * n);
            for index in HahnIndex::all_of_degree(d, 2) {
                for t in &tables {
                    let lhs: Rational = rt_row(t)
                        .iter()
                        .map(|(y, p)| p * hahn_multivariate(&index, &second_row(y), 3, &mu).unwrap())
                        .sum();
                    let rhs = &beta * hahn_multivariate(&index, &second_row(t), 3, &mu).unwrap();
                    assert_eq!(lhs, rhs, "index {:?} at {t}", index.m);
                }
            }
        }
    }

    #[test]
    fn kernel_closed_form_examples() {
        assert_eq!(kernel_poly_extreme(1, 2, 5, 10).unwrap(), rat(9, 4));
        for (n, k, mu_j) in [(10u32, 2u32, 5u32), (12, 3, 4), (9, 1, 3)] {
            let (ni, ki, mi) = (i64::from(n), i64::from(k), i64::from(mu_j));
            assert_eq!(
                kernel_poly_extreme(1, k, mu_j, n).unwrap(),
                rat(ki * (ni - 1) * (ni - mi), (ni - ki) * mi)
            );
        }
        assert!(kernel_poly_extreme(1, 3, 2, 10).is_err());
        assert!(kernel_poly_extreme(0, 3, 4, 10).is_err());
        assert!(kernel_poly_extreme(4, 3, 4, 10).is_err());
    }

    #[test]
    fn kernel_closed_form_matches_definition() {
        for mu in [[3u32, 3, 3], [4, 3, 5], [5, 2, 4]] {
            let n: u32 = mu.iter().sum();
            for k in 1..=3u32 {
                if mu.iter().any(|&v| v < k) || 2 * k > n {
                    continue;
                }
                for j in 0..3 {
                    let mut x = vec![0u32; 3];
                    x[j] = k;
                    for m in 1..=k {
                        assert_eq!(
                            kernel_poly_definitional(m, &x, k, &mu).unwrap(),
                            kernel_poly_extreme(m, k, mu[j], n).unwrap(),
                            "mu={mu:?} k={k} j={j} m={m}"
                        );
                    }
                }
            }
        }
    }
}
