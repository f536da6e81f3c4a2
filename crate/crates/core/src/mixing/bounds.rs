use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rational::{to_f64, Rational};
use crate::spectral::{beta_two_row, kernel_poly_extreme};
use crate::tables::ContingencyTable;

use super::pow_rational;

/// Prescribed times for the π-averaged χ² distance on λ=(n−k,k), μ=(n−ℓ,ℓ).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AvgChi2Bound {
    /// (n/4)(log k + c); the average is at most `upper_bound` there.
    pub t_upper: f64,
    pub upper_bound: f64,
    /// cn/4; the average is at least `lower_bound` there.
    pub t_lower: f64,
    pub lower_bound: f64,
}

pub fn avg_chi2_bound(k: u32, l: u32, n: u32, c: f64) -> Result<AvgChi2Bound> {
    if k == 0 || k > l || 2 * l > n {
        return Err(Error::InvalidParameter(format!(
            "needs 1 <= k <= l <= n/2, got k={k}, l={l}, n={n}"
        )));
    }
    let nf = f64::from(n);
    Ok(AvgChi2Bound {
        t_upper: nf / 4.0 * (f64::from(k).ln() + c),
        upper_bound: (-c).exp(),
        t_lower: c * nf / 4.0,
        lower_bound: 1.0 - c,
    })
}

/// Σ_{m=1}^k β_m^{2t} with β_m = 1 − 2m(n+1−m)/n².
pub fn avg_chi2_sum(k: u32, n: u32, t: u32) -> Result<Rational> {
    let mut s = Rational::zero();
    for m in 1..=k {
        s += pow_rational(&beta_two_row(m, n)?, 2 * t);
    }
    Ok(s)
}

/// The 2×J table whose second row is k in column j; first row μ − k e_j.
pub fn extreme_state_table(k: u32, mu: &[u32], j: usize) -> Result<ContingencyTable> {
    let mj = *mu
        .get(j)
        .ok_or_else(|| Error::InvalidParameter(format!("column {j} outside {} columns", mu.len())))?;
    if mj < k {
        return Err(Error::InvalidParameter(format!(
            "extreme state does not exist: mu_j = {mj} < k = {k}"
        )));
    }
    let mut top = mu.to_vec();
    top[j] -= k;
    let mut bottom = vec![0; mu.len()];
    bottom[j] = k;
    ContingencyTable::from_rows(vec![top, bottom])
}

/// χ²_{k e_j}(t) = Σ_{m=1}^k β_m^{2t} h_m(k e_j, k e_j), exactly.
pub fn extreme_chi2(k: u32, mu: &[u32], j: usize, t: u32) -> Result<Rational> {
    let n: u32 = mu.iter().sum();
    let mj = *mu
        .get(j)
        .ok_or_else(|| Error::InvalidParameter(format!("column {j} outside {} columns", mu.len())))?;
    let mut s = Rational::zero();
    for m in 1..=k {
        s += pow_rational(&beta_two_row(m, n)?, 2 * t) * kernel_poly_extreme(m, k, mj, n)?;
    }
    Ok(s)
}

/// Times after which χ² from k e_j is at most e^{−c} (`t_upper`) and before
/// which it is at least e^{c} (`t_lower`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExtremeBounds {
    pub t_upper: f64,
    pub t_lower: f64,
}

pub fn extreme_state_bounds(k: u32, mu: &[u32], j: usize, c: f64) -> Result<ExtremeBounds> {
    let n: u32 = mu.iter().sum();
    let mj = *mu
        .get(j)
        .ok_or_else(|| Error::InvalidParameter(format!("column {j} outside {} columns", mu.len())))?;
    if mj <= k {
        return Err(Error::InvalidParameter(format!(
            "extreme state does not exist: needs mu_j > k, got mu_j = {mj}, k = {k}"
        )));
    }
    if k == 0 || 2 * k >= n {
        return Err(Error::InvalidParameter(format!("needs 1 <= k < n/2, got k={k}, n={n}")));
    }
    let (nf, kf, mf) = (f64::from(n), f64::from(k), f64::from(mj));
    let rate = nf / 4.0 + kf * (kf - 1.0) / (2.0 * (nf - 2.0 * kf));
    let t_upper = rate * ((kf * nf * (nf - mf) / ((nf - 2.0 * kf) * (mf - kf))).ln() + c);
    let t_lower = nf / 8.0 * ((kf * (nf - 1.0) * (nf - mf) / ((nf - kf) * mf)).ln() - c);
    Ok(ExtremeBounds { t_upper, t_lower })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum WilsonCase {
    /// n ≥ 2(λ_i + μ_j): argument m_ij − λ_iμ_j/n.
    Sparse,
    /// n < 2(λ_i + μ_j): argument ½(n m_ij − λ_iμ_j)²/(n(n+2)λ_iμ_j).
    Dense,
}

/// Wilson's lower bound on t_mix from the linear eigenfunction of cell (i, j).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WilsonBound {
    pub case: WilsonCase,
    #[serde(serialize_with = "crate::rational::serialize_fraction")]
    pub log_argument: Rational,
    pub t_lower: f64,
    /// Set when the argument is at most 1; the bound is then reported as 0.
    pub degenerate: bool,
}

pub fn wilson_lower_bound(lambda: &[u32], mu: &[u32], i: usize, j: usize, c: f64) -> Result<WilsonBound> {
    let n: u32 = lambda.iter().sum();
    if n != mu.iter().sum::<u32>() {
        return Err(Error::MarginMismatch("row and column sums differ".into()));
    }
    let (li, mj) = match (lambda.get(i), mu.get(j)) {
        (Some(&a), Some(&b)) if a > 0 && b > 0 => (a, b),
        _ => {
            return Err(Error::InvalidParameter(format!(
                "cell ({i}, {j}) is not a cell with positive margins"
            )))
        }
    };
    let m = li.min(mj);
    let (nr, lr, mr, mm) = (
        Rational::from_integer(n.into()),
        Rational::from_integer(li.into()),
        Rational::from_integer(mj.into()),
        Rational::from_integer(m.into()),
    );
    let (case, arg) = if u64::from(n) >= 2 * (u64::from(li) + u64::from(mj)) {
        (WilsonCase::Sparse, &mm - &lr * &mr / &nr)
    } else {
        let d = &nr * &mm - &lr * &mr;
        let two = Rational::from_integer(2.into());
        (
            WilsonCase::Dense,
            &d * &d / (two * &nr * (&nr + Rational::from_integer(2.into())) * &lr * &mr),
        )
    };
    let nf = f64::from(n);
    if arg <= Rational::one() {
        return Ok(WilsonBound {
            case,
            log_argument: arg,
            t_lower: 0.0,
            degenerate: true,
        });
    }
    let t = (nf / 4.0 - 0.5) * (to_f64(&arg).ln() - c);
    Ok(WilsonBound {
        case,
        log_argument: arg,
        t_lower: t.max(0.0),
        degenerate: false,
    })
}
