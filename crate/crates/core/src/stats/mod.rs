//! Residuals, the eigenfunction decomposition of the chi-square statistic,
//! quadratic residual panels, and the bundled datasets.

mod datasets;

pub use datasets::{builtin, Dataset, DATASET_NAMES};

use num_bigint::BigInt;
use num_traits::Zero;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::eigenfunctions::{all_eigenfunctions, CellPolynomial, PolyKind};
use crate::error::{Error, Result};
use crate::rational::{int, rat, to_f64, Rational};
use crate::tables::{count_tables_capped, enumerate_tables, fisher_yates_pmf, sample_fisher_yates, ContingencyTable};

fn positive_margins(t: &ContingencyTable) -> Result<()> {
    if t.row_sums().iter().chain(t.col_sums()).any(|&v| v == 0) {
        return Err(Error::InvalidParameter("residuals need every row and column sum positive".into()));
    }
    Ok(())
}

/// T_ij − λ_iμ_j/n for every cell, exactly.
pub fn residual_numerators(t: &ContingencyTable) -> Vec<Vec<Rational>> {
    let n = i64::from(t.n());
    (0..t.rows())
        .map(|i| {
            (0..t.cols())
                .map(|j| {
                    let e = i64::from(t.row_sums()[i]) * i64::from(t.col_sums()[j]);
                    rat(n * i64::from(t.get(i, j)) - e, n)
                })
                .collect()
        })
        .collect()
}

/// f̂_ij² = (T_ij − λ_iμ_j/n)² / (λ_iμ_j/n); these sum to χ² exactly.
pub fn squared_pearson_residuals(t: &ContingencyTable) -> Result<Vec<Vec<Rational>>> {
    positive_margins(t)?;
    let n = i64::from(t.n());
    let d = residual_numerators(t);
    Ok((0..t.rows())
        .map(|i| {
            (0..t.cols())
                .map(|j| {
                    let m = rat(i64::from(t.row_sums()[i]) * i64::from(t.col_sums()[j]), n);
                    &d[i][j] * &d[i][j] / m
                })
                .collect()
        })
        .collect())
}

/// Pearson residuals (T_ij − λ_iμ_j/n)/√(λ_iμ_j/n).
pub fn pearson_residuals(t: &ContingencyTable) -> Result<Vec<Vec<f64>>> {
    positive_margins(t)?;
    let n = f64::from(t.n());
    Ok(residual_numerators(t)
        .iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .enumerate()
                .map(|(j, d)| {
                    let m = f64::from(t.row_sums()[i]) * f64::from(t.col_sums()[j]) / n;
                    to_f64(d) / m.sqrt()
                })
                .collect()
        })
        .collect())
}

/// c_ij = λ_iμ_j(n−λ_i)(n−μ_j)/(n²(n−1)), the Fisher-Yates variance of T_ij.
pub fn cell_variance(row_sums: &[u32], col_sums: &[u32], i: usize, j: usize) -> Rational {
    let n: i64 = row_sums.iter().map(|&v| i64::from(v)).sum();
    let (l, m) = (i64::from(row_sums[i]), i64::from(col_sums[j]));
    rat(l * m * (n - l) * (n - m), n * n * (n - 1))
}

/// Residuals scaled to unit norm under Fisher-Yates: (T_ij − λ_iμ_j/n)/√c_ij.
pub fn normalized_residuals(t: &ContingencyTable) -> Result<Vec<Vec<f64>>> {
    if t.n() < 2 {
        return Err(Error::InvalidParameter("normalized residuals need n >= 2".into()));
    }
    let d = residual_numerators(t);
    let mut out = Vec::with_capacity(t.rows());
    for (i, row) in d.iter().enumerate() {
        let mut r = Vec::with_capacity(t.cols());
        for (j, v) in row.iter().enumerate() {
            let c = cell_variance(t.row_sums(), t.col_sums(), i, j);
            if c.is_zero() {
                return Err(Error::InvalidParameter(format!(
                    "cell ({i}, {j}) has zero variance under the margins"
                )));
            }
            r.push(to_f64(v) / to_f64(&c).sqrt());
        }
        out.push(r);
    }
    Ok(out)
}

/// χ² split into quadratic, linear and constant parts, each exact.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Chi2Decomposition {
    #[serde(serialize_with = "crate::rational::serialize_fraction")]
    pub quadratic: Rational,
    #[serde(serialize_with = "crate::rational::serialize_fraction")]
    pub linear: Rational,
    #[serde(serialize_with = "crate::rational::serialize_fraction")]
    pub constant: Rational,
}

impl Chi2Decomposition {
    pub fn total(&self) -> Rational {
        &self.quadratic + &self.linear + &self.constant
    }
}

/// With M = λ_iμ_j/n, K = (2λ_iμ_j − 2λ_i − 2μ_j + n)/(n−2) and
/// L = λ_iμ_j(1 + λ_iμ_j − λ_i − μ_j)/((n−1)(n−2)), so that
/// f_(ij),(ij) = T² − KT + L and f_ij = T − M:
///
/// χ² = Σ f_(ij),(ij)/M + Σ ((K − 2M)/M) f_ij + Σ (KM − M² − L)/M.
pub fn chi2_decomposition(t: &ContingencyTable) -> Result<Chi2Decomposition> {
    positive_margins(t)?;
    let n = i64::from(t.n());
    if n < 3 {
        return Err(Error::InvalidParameter(format!("decomposition needs n >= 3, got n={n}")));
    }
    let (mut quadratic, mut linear, mut constant) = (Rational::zero(), Rational::zero(), Rational::zero());
    for i in 0..t.rows() {
        for j in 0..t.cols() {
            let (l, m) = (i64::from(t.row_sums()[i]), i64::from(t.col_sums()[j]));
            let x = int(i64::from(t.get(i, j)));
            let mm = rat(l * m, n);
            let k = rat(2 * l * m - 2 * l - 2 * m + n, n - 2);
            let ll = Rational::new(
                BigInt::from(l * m) * BigInt::from(1 + l * m - l - m),
                BigInt::from((n - 1) * (n - 2)),
            );
            let quad = &x * &x - &k * &x + &ll;
            let lin = &x - &mm;
            quadratic += &quad / &mm;
            linear += (&k - &mm - &mm) / &mm * lin;
            constant += (&k * &mm - &mm * &mm - ll) / &mm;
        }
    }
    Ok(Chi2Decomposition { quadratic, linear, constant })
}

/// Upper tail P(X ≥ stat) for a chi-square variable with `df` degrees of freedom.
pub fn chi2_p_value(stat: f64, df: u64) -> Result<f64> {
    let d = ChiSquared::new(df as f64).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    Ok(d.sf(stat))
}

/// (I−1)(J−1).
pub fn degrees_of_freedom(t: &ContingencyTable) -> u64 {
    (t.rows().saturating_sub(1) * t.cols().saturating_sub(1)) as u64
}

/// How the π-standard deviation of a quadratic eigenfunction was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Normalization {
    /// Exact E_π[f²] over all tables.
    Enumerated,
    /// Monte Carlo over Fisher-Yates draws.
    Sampled { draws: usize },
}

/// One normalized quadratic residual f(T)/sd_π(f).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PanelEntry {
    pub kind: String,
    pub raw: f64,
    pub sd: f64,
    pub value: f64,
    /// 95% interval for `sd` when it was estimated by sampling.
    pub sd_ci: Option<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuadraticPanel {
    pub normalization: Normalization,
    pub entries: Vec<PanelEntry>,
}

/// Options for [`quadratic_residual_panel`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PanelOptions {
    /// Enumerate when the table count is at most this.
    pub max_enumerated: u128,
    pub draws: usize,
    pub seed: u64,
}

impl Default for PanelOptions {
    fn default() -> Self {
        Self {
            max_enumerated: 20_000,
            draws: 4_000,
            seed: 0,
        }
    }
}

struct FloatPoly {
    terms: Vec<(Vec<usize>, f64)>,
}

impl FloatPoly {
    fn new(f: &CellPolynomial, cols: usize) -> Self {
        let terms = f
            .terms()
            .into_iter()
            .map(|(cells, c)| (cells.iter().map(|&(i, j)| i * cols + j).collect(), to_f64(&c)))
            .collect();
        Self { terms }
    }

    fn eval(&self, entries: &[u32]) -> f64 {
        self.terms
            .iter()
            .map(|(m, c)| c * m.iter().map(|&k| f64::from(entries[k])).product::<f64>())
            .sum()
    }
}

/// Each quadratic eigenfunction at T divided by its standard deviation under
/// Fisher-Yates. The mean is zero, so the variance is E_π[f²]; it is exact
/// when the tables can be enumerated and sampled otherwise.
pub fn quadratic_residual_panel(t: &ContingencyTable, opts: PanelOptions) -> Result<QuadraticPanel> {
    positive_margins(t)?;
    if t.n() < 3 {
        return Err(Error::InvalidParameter("quadratic residuals need n >= 3".into()));
    }
    let (rs, cs) = (t.row_sums(), t.col_sums());
    let quads: Vec<CellPolynomial> = all_eigenfunctions(rs, cs)?
        .into_iter()
        .filter(|f| !matches!(f.kind, PolyKind::Linear(_)))
        .collect();
    let enumerable = count_tables_capped(rs, cs, opts.max_enumerated)?.is_some();
    let (normalization, variances, cis): (Normalization, Vec<f64>, Vec<Option<(f64, f64)>>) =
        if enumerable {
            let tables = enumerate_tables(rs, cs)?;
            let pi: Vec<Rational> = tables.iter().map(fisher_yates_pmf).collect();
            let mut vars = Vec::with_capacity(quads.len());
            for f in &quads {
                let mut v = Rational::zero();
                for (s, p) in tables.iter().zip(&pi) {
                    let y = f.evaluate(s)?;
                    v += p * &y * &y;
                }
                vars.push(to_f64(&v));
            }
            let none = vec![None; quads.len()];
            (Normalization::Enumerated, vars, none)
        } else {
            if opts.draws < 2 {
                return Err(Error::InvalidParameter("sampling needs at least two draws".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            let fp: Vec<FloatPoly> = quads.iter().map(|f| FloatPoly::new(f, t.cols())).collect();
            let mut sum = vec![0.0; quads.len()];
            let mut sum_sq = vec![0.0; quads.len()];
            for _ in 0..opts.draws {
                let s = sample_fisher_yates(rs, cs, &mut rng)?;
                for (k, f) in fp.iter().enumerate() {
                    let y = f.eval(s.entries());
                    sum[k] += y * y;
                    sum_sq[k] += y * y * y * y;
                }
            }
            let d = opts.draws as f64;
            let mut vars = Vec::with_capacity(quads.len());
            let mut cis = Vec::with_capacity(quads.len());
            for k in 0..quads.len() {
                let mean = sum[k] / d;
                let var_of_sq = (sum_sq[k] / d - mean * mean).max(0.0) * d / (d - 1.0);
                let half = 1.96 * (var_of_sq / d).sqrt();
                vars.push(mean);
                cis.push(Some(((mean - half).max(0.0).sqrt(), (mean + half).sqrt())));
            }
            (Normalization::Sampled { draws: opts.draws }, vars, cis)
        };
    let mut entries = Vec::with_capacity(quads.len());
    for ((f, var), sd_ci) in quads.iter().zip(variances).zip(cis) {
        let raw = to_f64(&f.evaluate(t)?);
        let sd = var.sqrt();
        let value = if sd > 0.0 { raw / sd } else { 0.0 };
        entries.push(PanelEntry {
            kind: f.kind.to_string(),
            raw,
            sd,
            value,
            sd_ci,
        });
    }
    Ok(QuadraticPanel { normalization, entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigenfunctions::quadratic_f;
    use crate::tables::chi_square_statistic;

    fn table(s: &str) -> ContingencyTable {
        s.parse().unwrap()
    }

    #[test]
    fn midtown_residuals() {
        let d = builtin("midtown").unwrap();
        let p = pearson_residuals(&d.table).unwrap();
        assert!((p[0][0] - 2.233).abs() < 1e-3);
        assert!((p[5][3] - 2.826).abs() < 1e-3);
        let q = normalized_residuals(&d.table).unwrap();
        assert!((q[0][0] - 2.695).abs() < 1e-3);
        assert!((q[5][0] + 3.587).abs() < 1e-3);
    }

    #[test]
    fn independent_table_has_zero_residuals() {
        let t = table("2,4;3,6");
        for row in pearson_residuals(&t).unwrap().iter().chain(&normalized_residuals(&t).unwrap()) {
            assert!(row.iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn squared_residuals_sum_to_chi2() {
        for name in DATASET_NAMES {
            let t = builtin(name).unwrap().table;
            let s: Rational = squared_pearson_residuals(&t).unwrap().into_iter().flatten().sum();
            assert_eq!(s, chi_square_statistic(&t));
            for row in residual_numerators(&t) {
                assert!(row.iter().sum::<Rational>().is_zero());
            }
        }
    }

    #[test]
    fn decomposition_is_exact() {
        let expected = [("midtown", 45.98, 0.01), ("victoria", 115.6, 0.1), ("hair_eye", 138.29, 0.01)];
        for (name, chi2, tol) in expected {
            let t = builtin(name).unwrap().table;
            let d = chi2_decomposition(&t).unwrap();
            assert_eq!(d.total(), chi_square_statistic(&t));
            assert!((to_f64(&d.total()) - chi2).abs() < tol, "{name}");
        }
        assert!(chi2_decomposition(&table("1,0;0,1")).is_err());
    }

    #[test]
    fn decomposition_quadratic_part_uses_eigenfunctions() {
        // Oracle: the diagonal eigenfunctions from the eigenfunctions module.
        let t = table("3,1,0;1,2,2");
        let d = chi2_decomposition(&t).unwrap();
        let mut q = Rational::zero();
        for i in 0..2 {
            for j in 0..3 {
                let f = quadratic_f(t.row_sums(), t.col_sums(), PolyKind::QuadDiag((i, j))).unwrap();
                let m = rat(i64::from(t.row_sums()[i] * t.col_sums()[j]), i64::from(t.n()));
                q += f.evaluate(&t).unwrap() / m;
            }
        }
        assert_eq!(q, d.quadratic);
    }

    #[test]
    fn p_values() {
        assert!((chi2_p_value(115.6, 121).unwrap() - 0.621).abs() < 1e-3);
        assert!(chi2_p_value(45.98, 15).unwrap() < 1e-3);
        assert_eq!(degrees_of_freedom(&builtin("victoria").unwrap().table), 121);
    }

    #[test]
    fn panel_exact_normalization() {
        let t = table("2,1,0;0,1,1");
        let panel = quadratic_residual_panel(&t, PanelOptions::default()).unwrap();
        assert_eq!(panel.normalization, Normalization::Enumerated);
        let tables = enumerate_tables(&[3, 2], &[2, 2, 1]).unwrap();
        let quads: Vec<_> = all_eigenfunctions(&[3, 2], &[2, 2, 1])
            .unwrap()
            .into_iter()
            .filter(|f| f.kind.degree() == 2)
            .collect();
        assert_eq!(quads.len(), panel.entries.len());
        for (f, e) in quads.iter().zip(&panel.entries) {
            let var: f64 = tables
                .iter()
                .map(|s| {
                    let y = to_f64(&f.evaluate(s).unwrap());
                    to_f64(&fisher_yates_pmf(s)) * y * y
                })
                .sum();
            assert!((e.sd - var.sqrt()).abs() < 1e-12);
            if var > 0.0 {
                assert!((e.value - e.raw / var.sqrt()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn panel_sampled_on_hair_eye() {
        let t = builtin("hair_eye").unwrap().table;
        let opts = PanelOptions { draws: 500, ..PanelOptions::default() };
        let panel = quadratic_residual_panel(&t, opts).unwrap();
        assert_eq!(panel.normalization, Normalization::Sampled { draws: 500 });
        assert_eq!(panel.entries.len(), 16 + 24 + 24 + 36);
        for e in &panel.entries {
            assert!(e.value.is_finite() && e.sd > 0.0);
            let (lo, hi) = e.sd_ci.unwrap();
            assert!(lo <= e.sd && e.sd <= hi);
        }
    }
}
