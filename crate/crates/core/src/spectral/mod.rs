//! Closed-form spectra of the random transpositions chain on tables, and a
//! numerical eigensolver used to check them.

mod hahn;
mod jacobi;

pub use hahn::{
    hahn_multivariate, hahn_norm, hahn_univariate, hypergeometric_support, hypergeometric_weight,
    kernel_poly_definitional, kernel_poly_extreme, HahnIndex,
};
pub use jacobi::{jacobi_eigenvalues, tridiagonal_ql_eigenvalues, JACOBI_MAX_SWEEPS, JACOBI_TOLERANCE};

use std::fmt;
use std::hash::Hash;

use num_traits::One;
use serde::Serialize;

use crate::chains::ChainKernel;
use crate::error::{Error, Result};
use crate::partitions::{kostka, partitions_of, Partition};
use crate::rational::{fraction_string, rat, to_f64, Rational};

/// Largest state space accepted by [`brute_force_spectrum`].
pub const BRUTE_FORCE_MAX_STATES: usize = 2000;
/// Above this many states [`brute_force_spectrum`] uses Householder and QL,
/// since each Jacobi sweep costs about 2n³ flops.
pub const JACOBI_MAX_STATES: usize = 400;
/// Detailed-balance residual above which a kernel is rejected as non-reversible.
pub const REVERSIBILITY_TOLERANCE: f64 = 1e-12;

/// β_ρ = 1/n + (1/n²) Σ_j [ρ_j² − (2j−1)ρ_j].
pub fn beta(rho: &Partition, n: u32) -> Result<Rational> {
    if rho.n() != n {
        return Err(Error::MarginMismatch(format!("{rho} is not a partition of {n}")));
    }
    let n = i64::from(n);
    let s: i64 = rho
        .parts()
        .iter()
        .enumerate()
        .map(|(j, &p)| {
            let (p, j) = (i64::from(p), j as i64 + 1);
            p * p - (2 * j - 1) * p
        })
        .sum();
    Ok(rat(1, n) + rat(s, n * n))
}

/// The same eigenvalue written as 1/n + (1/n²) Σ_j [(ρ_j − j)(ρ_j − j + 1) − j(j − 1)].
pub fn beta_shifted_form(rho: &Partition, n: u32) -> Result<Rational> {
    if rho.n() != n {
        return Err(Error::MarginMismatch(format!("{rho} is not a partition of {n}")));
    }
    let n = i64::from(n);
    let s: i64 = rho
        .parts()
        .iter()
        .enumerate()
        .map(|(j, &p)| {
            let (p, j) = (i64::from(p), j as i64 + 1);
            (p - j) * (p - j + 1) - j * (j - 1)
        })
        .sum();
    Ok(rat(1, n) + rat(s, n * n))
}

/// Two-row eigenvalue β_m = 1 − 2m(n + 1 − m)/n², for ρ = (n − m, m).
pub fn beta_two_row(m: u32, n: u32) -> Result<Rational> {
    if n == 0 || 2 * m > n {
        return Err(Error::InvalidParameter(format!("needs 0 <= m <= n/2, got m={m}, n={n}")));
    }
    let (m, n) = (i64::from(m), i64::from(n));
    Ok(Rational::one() - rat(2 * m * (n + 1 - m), n * n))
}

/// One eigenvalue of the closed-form spectrum.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpectrumEntry {
    pub partition: Partition,
    pub beta: Rational,
    pub multiplicity: u64,
}

/// Eigenvalues β_ρ with multiplicities m_ρ^λ · m_ρ^μ, in decreasing
/// lexicographic order of ρ.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Spectrum {
    pub lambda: Partition,
    pub mu: Partition,
    pub entries: Vec<SpectrumEntry>,
}

impl Spectrum {
    pub fn total_multiplicity(&self) -> u64 {
        self.entries.iter().map(|e| e.multiplicity).sum()
    }

    /// Largest eigenvalue below 1, if any.
    pub fn second_largest(&self) -> Option<&Rational> {
        self.entries
            .iter()
            .filter(|e| !e.beta.is_one())
            .map(|e| &e.beta)
            .max()
    }

    pub fn multiplicity_of(&self, rho: &Partition) -> u64 {
        self.entries
            .iter()
            .find(|e| &e.partition == rho)
            .map_or(0, |e| e.multiplicity)
    }

    /// Eigenvalues repeated by multiplicity, sorted descending.
    pub fn eigenvalues_f64(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self
            .entries
            .iter()
            .flat_map(|e| std::iter::repeat_n(to_f64(&e.beta), e.multiplicity as usize))
            .collect();
        v.sort_by(|a, b| b.total_cmp(a));
        v
    }

    pub fn to_json(&self) -> serde_json::Value {
        let rows: Vec<SpectrumJson> = self
            .entries
            .iter()
            .map(|e| SpectrumJson {
                partition: e.partition.parts().to_vec(),
                beta: BetaJson {
                    fraction: fraction_string(&e.beta),
                    float: to_f64(&e.beta),
                },
                multiplicity: e.multiplicity,
            })
            .collect();
        serde_json::to_value(rows).expect("plain data serializes")
    }
}

#[derive(Serialize)]
struct BetaJson {
    fraction: String,
    float: f64,
}

#[derive(Serialize)]
struct SpectrumJson {
    partition: Vec<u32>,
    beta: BetaJson,
    multiplicity: u64,
}

impl fmt::Display for Spectrum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.entries {
            writeln!(
                f,
                "{}\t{}\t{:.6}\t{}",
                e.partition,
                fraction_string(&e.beta),
                to_f64(&e.beta),
                e.multiplicity
            )?;
        }
        Ok(())
    }
}

/// Closed-form spectrum of the random transpositions chain on tables with
/// margins λ and μ, given in any order.
pub fn spectrum(lambda: &[u32], mu: &[u32]) -> Result<Spectrum> {
    let (lambda, _) = Partition::from_margins(lambda)?;
    let (mu, _) = Partition::from_margins(mu)?;
    let n = lambda.n();
    if mu.n() != n {
        return Err(Error::MarginMismatch(format!(
            "row sums total {n}, column sums total {}",
            mu.n()
        )));
    }
    let mut entries = Vec::new();
    for rho in partitions_of(n) {
        let a = kostka(&rho, &lambda)?;
        if a == 0 {
            continue;
        }
        let b = kostka(&rho, &mu)?;
        if b == 0 {
            continue;
        }
        entries.push(SpectrumEntry {
            beta: beta(&rho, n)?,
            partition: rho,
            multiplicity: a * b,
        });
    }
    Ok(Spectrum { lambda, mu, entries })
}

/// D^{1/2} P D^{−1/2} as a dense row-major matrix, with D = diag π. Errors
/// when detailed balance fails by more than [`REVERSIBILITY_TOLERANCE`].
pub fn symmetrized_matrix<S>(kernel: &ChainKernel<S>) -> Result<Vec<f64>>
where
    S: Clone + Eq + Hash + fmt::Display,
{
    let residual = kernel.detailed_balance_residual();
    if residual > REVERSIBILITY_TOLERANCE {
        return Err(Error::NotReversible { residual });
    }
    let n = kernel.len();
    let root: Vec<f64> = kernel.stationary_f64().iter().map(|p| p.sqrt()).collect();
    let mut a = vec![0.0; n * n];
    for (x, row) in kernel.float_rows().iter().enumerate() {
        for &(y, p) in row {
            a[x * n + y] = root[x] * p / root[y];
        }
    }
    // Average with the transpose to remove rounding asymmetry.
    for x in 0..n {
        for y in x + 1..n {
            let v = 0.5 * (a[x * n + y] + a[y * n + x]);
            a[x * n + y] = v;
            a[y * n + x] = v;
        }
    }
    Ok(a)
}

/// Numerical eigenvalues of a reversible kernel from the symmetrized matrix,
/// sorted descending: cyclic Jacobi up to [`JACOBI_MAX_STATES`], QL beyond.
pub fn brute_force_spectrum<S>(kernel: &ChainKernel<S>) -> Result<Vec<f64>>
where
    S: Clone + Eq + Hash + fmt::Display,
{
    check_size(kernel.len())?;
    let a = symmetrized_matrix(kernel)?;
    if kernel.len() > JACOBI_MAX_STATES {
        return tridiagonal_ql_eigenvalues(a, kernel.len());
    }
    jacobi_eigenvalues(a, kernel.len(), JACOBI_TOLERANCE, JACOBI_MAX_SWEEPS)
}

/// As [`brute_force_spectrum`], with Householder tridiagonalisation and
/// implicit QL in place of Jacobi sweeps.
pub fn brute_force_spectrum_ql<S>(kernel: &ChainKernel<S>) -> Result<Vec<f64>>
where
    S: Clone + Eq + Hash + fmt::Display,
{
    check_size(kernel.len())?;
    let a = symmetrized_matrix(kernel)?;
    tridiagonal_ql_eigenvalues(a, kernel.len())
}

fn check_size(states: usize) -> Result<()> {
    if states > BRUTE_FORCE_MAX_STATES {
        return Err(Error::StateSpaceTooLarge { limit: BRUTE_FORCE_MAX_STATES });
    }
    Ok(())
}

/// Groups sorted-descending values whose neighbours are within `gap`;
/// returns (mean, count) per cluster.
pub fn cluster_eigenvalues(sorted_desc: &[f64], gap: f64) -> Vec<(f64, usize)> {
    let mut out: Vec<(f64, usize)> = Vec::new();
    let mut start = 0;
    for i in 1..=sorted_desc.len() {
        if i == sorted_desc.len() || (sorted_desc[i - 1] - sorted_desc[i]).abs() > gap {
            let chunk = &sorted_desc[start..i];
            if !chunk.is_empty() {
                out.push((chunk.iter().sum::<f64>() / chunk.len() as f64, chunk.len()));
            }
            start = i;
        }
    }
    out
}

/// True when the numerical eigenvalues, clustered at 10⁻⁸, match the exact
/// spectrum as a multiset within `tol`.
pub fn spectrum_matches(exact: &Spectrum, numeric: &[f64], tol: f64) -> bool {
    let mut sorted = numeric.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let clusters = cluster_eigenvalues(&sorted, 1e-8);
    // Distinct partitions can share an eigenvalue; merge those first.
    let mut expected: Vec<(Rational, u64)> = Vec::new();
    for e in &exact.entries {
        match expected.iter_mut().find(|(b, _)| b == &e.beta) {
            Some((_, m)) => *m += e.multiplicity,
            None => expected.push((e.beta.clone(), e.multiplicity)),
        }
    }
    expected.sort_by(|a, b| b.0.cmp(&a.0));
    clusters.len() == expected.len()
        && clusters.iter().zip(&expected).all(|(&(v, c), (b, m))| {
            c as u64 == *m && (v - to_f64(b)).abs() < tol
        })
        && sorted
            .iter()
            .zip(exact.eigenvalues_f64())
            .all(|(a, b)| (a - b).abs() < tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chains::{table_kernel, KernelKind};
    use crate::partitions::majorizes;
    use crate::tables::count_tables;

    fn p(parts: &[u32]) -> Partition {
        Partition::new(parts.to_vec()).unwrap()
    }

    #[test]
    fn beta_examples() {
        assert_eq!(beta(&p(&[4, 1]), 5).unwrap(), rat(3, 5));
        assert_eq!(beta(&p(&[3, 2]), 5).unwrap(), rat(9, 25));
        assert_eq!(beta(&p(&[3, 1, 1]), 5).unwrap(), rat(1, 5));
        assert_eq!(beta(&p(&[7]), 7).unwrap(), Rational::one());
        assert!(beta(&p(&[3, 1]), 5).is_err());
    }

    #[test]
    fn beta_forms_agree() {
        for n in 1..=12 {
            for rho in partitions_of(n) {
                assert_eq!(beta(&rho, n).unwrap(), beta_shifted_form(&rho, n).unwrap());
            }
        }
    }

    #[test]
    fn two_row_formula() {
        for n in 1..=12u32 {
            assert_eq!(beta_two_row(0, n).unwrap(), Rational::one());
            for m in 0..=n / 2 {
                let rho = if m == 0 { p(&[n]) } else { p(&[n - m, m]) };
                assert_eq!(beta_two_row(m, n).unwrap(), beta(&rho, n).unwrap());
            }
        }
        assert_eq!(beta_two_row(1, 9).unwrap(), Rational::one() - rat(2, 9));
        assert!(beta_two_row(3, 5).is_err());
    }

    #[test]
    fn table_one() {
        let s = spectrum(&[3, 1, 1], &[2, 2, 1]).unwrap();
        let got: Vec<(Vec<u32>, Rational, u64)> = s
            .entries
            .iter()
            .map(|e| (e.partition.parts().to_vec(), e.beta.clone(), e.multiplicity))
            .collect();
        assert_eq!(
            got,
            vec![
                (vec![5], rat(1, 1), 1),
                (vec![4, 1], rat(3, 5), 4),
                (vec![3, 2], rat(9, 25), 2),
                (vec![3, 1, 1], rat(1, 5), 1),
            ]
        );
        assert_eq!(s.second_largest(), Some(&rat(3, 5)));
    }

    #[test]
    fn single_row_and_two_row_cases() {
        let s = spectrum(&[6], &[3, 2, 1]).unwrap();
        assert_eq!(s.entries.len(), 1);
        assert_eq!(s.total_multiplicity(), 1);
        for (k, l) in [(1u32, 2u32), (2, 3), (3, 3)] {
            let n = 8;
            let s = spectrum(&[n - k, k], &[n - l, l]).unwrap();
            assert_eq!(s.entries.len(), k as usize + 1);
            assert!(s.entries.iter().all(|e| e.multiplicity == 1));
        }
    }

    #[test]
    fn margin_order_is_irrelevant() {
        assert_eq!(spectrum(&[1, 3, 1], &[1, 2, 2]).unwrap(), spectrum(&[3, 1, 1], &[2, 2, 1]).unwrap());
        assert!(spectrum(&[3, 2], &[3, 3]).is_err());
    }

    #[test]
    fn spectrum_structure_exhaustive() {
        for n in 1..=8u32 {
            let ps = partitions_of(n);
            for a in &ps {
                for b in &ps {
                    let s = spectrum(a.parts(), b.parts()).unwrap();
                    assert_eq!(u128::from(s.total_multiplicity()), count_tables(a.parts(), b.parts()).unwrap());
                    let top: Vec<_> = s.entries.iter().filter(|e| e.beta.is_one()).collect();
                    assert_eq!(top.len(), 1);
                    assert_eq!(top[0].multiplicity, 1);
                    if n >= 2 {
                        let m = s.multiplicity_of(&p(&[n - 1, 1]));
                        assert_eq!(m as usize, (a.len() - 1) * (b.len() - 1));
                    }
                    for e in &s.entries {
                        assert!(e.partition.len() <= a.len().min(b.len()));
                        assert!(e.partition.parts()[0] >= a.parts()[0].max(b.parts()[0]));
                    }
                }
            }
        }
    }

    #[test]
    fn beta_monotone_in_majorization() {
        for n in 1..=10u32 {
            let ps = partitions_of(n);
            for a in &ps {
                for b in &ps {
                    if majorizes(b.parts(), a.parts()).unwrap() {
                        assert!(beta(a, n).unwrap() <= beta(b, n).unwrap(), "{a} {b}");
                    }
                }
            }
        }
    }

    #[test]
    fn brute_force_matches_table_one() {
        let k = table_kernel(KernelKind::RandomTranspositions, &[3, 1, 1], &[2, 2, 1]).unwrap();
        let ev = brute_force_spectrum(&k).unwrap();
        let exact = spectrum(&[3, 1, 1], &[2, 2, 1]).unwrap();
        assert!(spectrum_matches(&exact, &ev, 1e-9));
        assert!((ev[0] - 1.0).abs() < 1e-12);
        let ql = brute_force_spectrum_ql(&k).unwrap();
        assert!(spectrum_matches(&exact, &ql, 1e-9));
    }

    #[test]
    fn metropolis_uniform_eigenvalues_are_real_and_bounded() {
        let k = table_kernel(KernelKind::MetropolisUniform, &[3, 2], &[2, 2, 1]).unwrap();
        let ev = brute_force_spectrum(&k).unwrap();
        assert!((ev[0] - 1.0).abs() < 1e-12);
        assert!(ev.iter().all(|v| (-1.0 - 1e-12..=1.0 + 1e-12).contains(v)));
    }

    #[test]
    fn mismatched_multiset_is_rejected() {
        let exact = spectrum(&[3, 1, 1], &[2, 2, 1]).unwrap();
        let mut ev = exact.eigenvalues_f64();
        assert!(spectrum_matches(&exact, &ev, 1e-9));
        ev[3] += 1e-6;
        assert!(!spectrum_matches(&exact, &ev, 1e-9));
        ev.pop();
        assert!(!spectrum_matches(&exact, &ev, 1e-9));
    }

    #[test]
    fn json_shape() {
        let v = spectrum(&[3, 1, 1], &[2, 2, 1]).unwrap().to_json();
        assert_eq!(v[1]["partition"], serde_json::json!([4, 1]));
        assert_eq!(v[1]["beta"]["fraction"], "3/5");
        assert_eq!(v[1]["multiplicity"], 4);
    }
}
