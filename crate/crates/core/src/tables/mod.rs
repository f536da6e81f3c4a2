//! Contingency tables with fixed margins and the Fisher-Yates distribution.

mod io;
mod permutation;
mod three_way;

pub use io::{load_table, parse_table, write_table, TableFormat, TableRecord};
pub use permutation::{
    min_coset_representative, permutation_to_table, sample_fisher_yates, Permutation,
};
pub use three_way::{enumerate_three_way, three_way_pmf, three_way_weight, ThreeWayTable};

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::partitions::{majorizes, parse_list};
use crate::rational::{factorial, from_biguint, int, Rational};

pub const DEFAULT_MAX_STATES: usize = 2_000_000;
pub const MAX_STATES_ENV: &str = "COSET_CHAINS_MAX_STATES";

/// Enumeration cap: `COSET_CHAINS_MAX_STATES` if set and valid, else 2·10^6.
pub fn max_states() -> usize {
    std::env::var(MAX_STATES_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_MAX_STATES)
}

/// An I×J table of non-negative counts together with its margins.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ContingencyTable {
    rows: usize,
    cols: usize,
    entries: Vec<u32>,
    row_sums: Vec<u32>,
    col_sums: Vec<u32>,
}

impl ContingencyTable {
    /// Builds a table from its rows; margins are recomputed. Every row and
    /// column must have a positive total.
    pub fn from_rows(rows: Vec<Vec<u32>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if r == 0 || c == 0 {
            return Err(Error::InvalidTable("table has no cells".into()));
        }
        if let Some(bad) = rows.iter().position(|row| row.len() != c) {
            return Err(Error::InvalidTable(format!(
                "ragged rows: row {} has {} entries, expected {c}",
                bad + 1,
                rows[bad].len()
            )));
        }
        let entries: Vec<u32> = rows.into_iter().flatten().collect();
        let row_sums: Vec<u32> = entries.chunks(c).map(|row| row.iter().sum()).collect();
        let col_sums: Vec<u32> = (0..c)
            .map(|j| (0..r).map(|i| entries[i * c + j]).sum())
            .collect();
        if let Some(i) = row_sums.iter().position(|&s| s == 0) {
            return Err(Error::InvalidTable(format!("row {} sums to zero", i + 1)));
        }
        if let Some(j) = col_sums.iter().position(|&s| s == 0) {
            return Err(Error::InvalidTable(format!("column {} sums to zero", j + 1)));
        }
        Ok(Self::from_parts(r, c, entries, row_sums, col_sums))
    }

    /// Builds a table and checks it against stated margins.
    pub fn with_margins(rows: Vec<Vec<u32>>, row_sums: &[u32], col_sums: &[u32]) -> Result<Self> {
        let t = Self::from_rows(rows)?;
        if t.row_sums != row_sums || t.col_sums != col_sums {
            return Err(Error::MarginMismatch(format!(
                "entries give row sums {:?} and column sums {:?}, stated {:?} and {:?}",
                t.row_sums, t.col_sums, row_sums, col_sums
            )));
        }
        Ok(t)
    }

    pub(crate) fn from_parts(
        rows: usize,
        cols: usize,
        entries: Vec<u32>,
        row_sums: Vec<u32>,
        col_sums: Vec<u32>,
    ) -> Self {
        debug_assert_eq!(entries.len(), rows * cols);
        Self {
            rows,
            cols,
            entries,
            row_sums,
            col_sums,
        }
    }

    /// Same margins, new entries. The caller guarantees the margins still hold.
    pub(crate) fn with_entries(&self, entries: Vec<u32>) -> Self {
        Self {
            entries,
            ..self.clone()
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.entries[i * self.cols + j]
    }

    /// Row-major entries.
    pub fn entries(&self) -> &[u32] {
        &self.entries
    }

    pub fn row_sums(&self) -> &[u32] {
        &self.row_sums
    }

    pub fn col_sums(&self) -> &[u32] {
        &self.col_sums
    }

    pub fn n(&self) -> u32 {
        self.row_sums.iter().sum()
    }

    pub fn to_rows(&self) -> Vec<Vec<u32>> {
        self.entries.chunks(self.cols).map(<[u32]>::to_vec).collect()
    }

    pub fn same_margins(&self, other: &Self) -> bool {
        self.row_sums == other.row_sums && self.col_sums == other.col_sums
    }

    pub fn transpose(&self) -> Self {
        let entries = (0..self.cols)
            .flat_map(|j| (0..self.rows).map(move |i| (i, j)))
            .map(|(i, j)| self.get(i, j))
            .collect();
        Self::from_parts(
            self.cols,
            self.rows,
            entries,
            self.col_sums.clone(),
            self.row_sums.clone(),
        )
    }
}

impl fmt::Display for ContingencyTable {
    /// Compact form `(2,1,0;0,1,1)`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = self
            .entries
            .chunks(self.cols)
            .map(|row| {
                row.iter()
                    .map(u32::to_string)
                    .collect::<Vec<_>>()
                    .join(",")
            })
            .collect();
        write!(f, "({})", rows.join(";"))
    }
}

impl FromStr for ContingencyTable {
    type Err = Error;
    /// Parses the compact form `2,1,0;0,1,1` (parentheses optional).
    fn from_str(s: &str) -> Result<Self> {
        let inner = s.trim().trim_start_matches('(').trim_end_matches(')');
        let rows = inner.split(';').map(parse_list).collect::<Result<Vec<_>>>()?;
        Self::from_rows(rows)
    }
}

fn check_margins(row_sums: &[u32], col_sums: &[u32]) -> Result<u32> {
    if row_sums.is_empty() || col_sums.is_empty() {
        return Err(Error::InvalidParameter("margins must be non-empty".into()));
    }
    if row_sums.iter().chain(col_sums).any(|&v| v == 0) {
        return Err(Error::InvalidParameter("margins must be positive".into()));
    }
    let n: u32 = row_sums.iter().sum();
    let m: u32 = col_sums.iter().sum();
    if n != m {
        return Err(Error::MarginMismatch(format!(
            "row margins sum to {n}, column margins sum to {m}"
        )));
    }
    Ok(n)
}

/// Number of tables with the given margins, by dynamic programming over the
/// remaining column capacities.
pub fn count_tables(row_sums: &[u32], col_sums: &[u32]) -> Result<u128> {
    check_margins(row_sums, col_sums)?;
    let mut memo = HashMap::new();
    Ok(count_from(0, col_sums.to_vec(), row_sums, &mut memo))
}

/// The table count when it is at most `cap`, else `None`. Stops as soon as
/// any partial count passes the cap, so huge spaces are rejected quickly.
pub fn count_tables_capped(row_sums: &[u32], col_sums: &[u32], cap: u128) -> Result<Option<u128>> {
    check_margins(row_sums, col_sums)?;
    let mut memo = HashMap::new();
    Ok(count_capped(0, col_sums.to_vec(), row_sums, cap, &mut memo))
}

// Every reachable sub-count is a lower bound on the total, so exceeding the
// cap anywhere settles the answer.
fn count_capped(
    row: usize,
    remaining: Vec<u32>,
    row_sums: &[u32],
    cap: u128,
    memo: &mut HashMap<(usize, Vec<u32>), u128>,
) -> Option<u128> {
    if row + 1 == row_sums.len() {
        return Some(1);
    }
    if let Some(&v) = memo.get(&(row, remaining.clone())) {
        return Some(v);
    }
    let mut total = Some(0u128);
    let mut next = remaining.clone();
    fill_row(&remaining, row_sums[row], 0, &mut next, &mut |cols| {
        if let Some(acc) = total {
            total = count_capped(row + 1, cols.to_vec(), row_sums, cap, memo)
                .map(|v| acc + v)
                .filter(|&v| v <= cap);
        }
    });
    memo.insert((row, remaining), total?);
    total
}

fn count_from(
    row: usize,
    remaining: Vec<u32>,
    row_sums: &[u32],
    memo: &mut HashMap<(usize, Vec<u32>), u128>,
) -> u128 {
    if row + 1 == row_sums.len() {
        return 1;
    }
    if let Some(&v) = memo.get(&(row, remaining.clone())) {
        return v;
    }
    let mut total = 0u128;
    let mut next = remaining.clone();
    fill_row(&remaining, row_sums[row], 0, &mut next, &mut |cols| {
        total += count_from(row + 1, cols.to_vec(), row_sums, memo);
    });
    memo.insert((row, remaining), total);
    total
}

// Visits every way to write `rem` as a row bounded by `caps`, entries tried
// from largest to smallest; `next` receives the capacities left afterwards.
fn fill_row(caps: &[u32], rem: u32, j: usize, next: &mut Vec<u32>, visit: &mut dyn FnMut(&[u32])) {
    if j + 1 == caps.len() {
        if rem <= caps[j] {
            next[j] = caps[j] - rem;
            visit(next);
            next[j] = caps[j];
        }
        return;
    }
    let tail: u32 = caps[j + 1..].iter().sum();
    let lo = rem.saturating_sub(tail);
    for v in (lo..=rem.min(caps[j])).rev() {
        next[j] = caps[j] - v;
        fill_row(caps, rem - v, j + 1, next, visit);
    }
    next[j] = caps[j];
}

/// Every table with the given margins, in decreasing lexicographic order of the
/// row-major entry vector. Fails when the count exceeds [`max_states`].
pub fn enumerate_tables(row_sums: &[u32], col_sums: &[u32]) -> Result<Vec<ContingencyTable>> {
    enumerate_tables_capped(row_sums, col_sums, max_states())
}

pub fn enumerate_tables_capped(
    row_sums: &[u32],
    col_sums: &[u32],
    cap: usize,
) -> Result<Vec<ContingencyTable>> {
    check_margins(row_sums, col_sums)?;
    let count = count_tables_capped(row_sums, col_sums, cap as u128)?
        .ok_or(Error::StateSpaceTooLarge { limit: cap })?;
    let (r, c) = (row_sums.len(), col_sums.len());
    let mut out = Vec::with_capacity(count as usize);
    let mut entries = vec![0u32; r * c];
    enumerate_rows(0, col_sums.to_vec(), row_sums, &mut entries, &mut |e| {
        out.push(ContingencyTable::from_parts(
            r,
            c,
            e.to_vec(),
            row_sums.to_vec(),
            col_sums.to_vec(),
        ));
    });
    Ok(out)
}

fn enumerate_rows(
    row: usize,
    caps: Vec<u32>,
    row_sums: &[u32],
    entries: &mut Vec<u32>,
    emit: &mut dyn FnMut(&[u32]),
) {
    let c = caps.len();
    if row + 1 == row_sums.len() {
        entries[row * c..].copy_from_slice(&caps);
        emit(entries);
        return;
    }
    let mut next = caps.clone();
    let mut rows_seen = Vec::new();
    fill_row(&caps, row_sums[row], 0, &mut next, &mut |left| {
        rows_seen.push(left.to_vec());
    });
    for left in rows_seen {
        for j in 0..c {
            entries[row * c + j] = caps[j] - left[j];
        }
        enumerate_rows(row + 1, left, row_sums, entries, emit);
    }
}

/// Size of the double coset of the table: ∏λ_i! ∏μ_j! / ∏T_ij!.
pub fn coset_size(t: &ContingencyTable) -> BigUint {
    let num = t
        .row_sums
        .iter()
        .chain(&t.col_sums)
        .fold(BigUint::one(), |acc, &v| acc * factorial(v));
    let den = t
        .entries
        .iter()
        .fold(BigUint::one(), |acc, &v| acc * factorial(v));
    num / den
}

/// Fisher-Yates probability of the table, exact.
pub fn fisher_yates_pmf(t: &ContingencyTable) -> Rational {
    Rational::new(
        BigInt::from(coset_size(t)),
        BigInt::from(factorial(t.n())),
    )
}

/// Natural log of the Fisher-Yates probability, for tables too large for exact work.
pub fn log_fisher_yates_pmf(t: &ContingencyTable) -> f64 {
    let lf = |v: u32| (2..=v).map(|k| f64::from(k).ln()).sum::<f64>();
    t.row_sums.iter().chain(&t.col_sums).map(|&v| lf(v)).sum::<f64>()
        - lf(t.n())
        - t.entries.iter().map(|&v| lf(v)).sum::<f64>()
}

fn index_check(row_sums: &[u32], col_sums: &[u32], i: usize, j: usize) -> Result<u32> {
    let n = check_margins(row_sums, col_sums)?;
    if i >= row_sums.len() || j >= col_sums.len() {
        return Err(Error::InvalidParameter(format!(
            "cell ({}, {}) outside a {}x{} table",
            i + 1,
            j + 1,
            row_sums.len(),
            col_sums.len()
        )));
    }
    Ok(n)
}

/// E[T_ij] = λ_i μ_j / n under Fisher-Yates.
pub fn expected_entry(row_sums: &[u32], col_sums: &[u32], i: usize, j: usize) -> Result<Rational> {
    let n = index_check(row_sums, col_sums, i, j)?;
    Ok(Rational::new(
        BigInt::from(u64::from(row_sums[i]) * u64::from(col_sums[j])),
        BigInt::from(n),
    ))
}

/// E[T_ij T_kl] under Fisher-Yates, for any pair of cells.
pub fn cross_moment(
    row_sums: &[u32],
    col_sums: &[u32],
    (i, j): (usize, usize),
    (k, l): (usize, usize),
) -> Result<Rational> {
    let n = index_check(row_sums, col_sums, i, j)?;
    index_check(row_sums, col_sums, k, l)?;
    let n = i64::from(n);
    let (li, lk) = (i64::from(row_sums[i]), i64::from(row_sums[k]));
    let (mj, ml) = (i64::from(col_sums[j]), i64::from(col_sums[l]));
    if n == 1 {
        return Ok(int(1));
    }
    let nn1 = n * (n - 1);
    let v = match (i == k, j == l) {
        (false, false) => Rational::new((li * mj * lk * ml).into(), nn1.into()),
        (false, true) => Rational::new((li * lk * mj * (mj - 1)).into(), nn1.into()),
        (true, false) => Rational::new((li * (li - 1) * mj * ml).into(), nn1.into()),
        (true, true) => {
            Rational::new((li * li * mj * mj).into(), (n * n).into())
                + Rational::new(
                    (li * mj * (n - li) * (n - mj)).into(),
                    (n * n * (n - 1)).into(),
                )
        }
    };
    Ok(v)
}

/// Pearson statistic Σ (T_ij − λ_iμ_j/n)² / (λ_iμ_j/n), exact.
pub fn chi_square_statistic(t: &ContingencyTable) -> Rational {
    let n = BigInt::from(t.n());
    let mut total = Rational::zero();
    for i in 0..t.rows {
        for j in 0..t.cols {
            let e = BigInt::from(u64::from(t.row_sums[i]) * u64::from(t.col_sums[j]));
            // (x − e/n)² / (e/n) = (n x − e)² / (n e)
            let d = &n * BigInt::from(t.get(i, j)) - &e;
            total += Rational::new(&d * &d, &n * &e);
        }
    }
    total
}

/// Entries sorted in decreasing order, the vector compared by table majorization.
pub fn sorted_entries(t: &ContingencyTable) -> Vec<u32> {
    let mut v = t.entries.clone();
    v.sort_unstable_by(|a, b| b.cmp(a));
    v
}

/// True iff `upper` majorizes `lower` (written lower ⪯ upper).
pub fn table_majorizes(lower: &ContingencyTable, upper: &ContingencyTable) -> Result<bool> {
    if !lower.same_margins(upper) {
        return Err(Error::MarginMismatch(
            "table majorization needs equal margins".into(),
        ));
    }
    majorizes(&sorted_entries(upper), &sorted_entries(lower))
}

/// q-analogue of the double-coset size,
/// θ^{−n² + Σ_{i<i', j<j'} T_ij T_i'j'} (1−θ)^n ∏[λ_i]_θ! ∏[μ_j]_θ! / ∏[T_ij]_θ!,
/// evaluated exactly for rational θ in (0, 1].
pub fn q_coset_weight_exact(t: &ContingencyTable, theta: &Rational) -> Result<Rational> {
    if theta <= &Rational::zero() || theta > &Rational::one() {
        return Err(Error::InvalidParameter(format!(
            "theta must lie in (0, 1], got {theta}"
        )));
    }
    let exponent = q_exponent(t);
    let q_int = |m: u32| {
        // [m]_θ = 1 + θ + … + θ^{m−1}
        let mut acc = Rational::zero();
        let mut pow = Rational::one();
        for _ in 0..m {
            acc += &pow;
            pow *= theta;
        }
        acc
    };
    let q_fact = |m: u32| (1..=m).fold(Rational::one(), |acc, k| acc * q_int(k));
    let mut w = pow_signed(theta, exponent);
    w *= pow_signed(&(Rational::one() - theta), i64::from(t.n()));
    for &v in t.row_sums.iter().chain(&t.col_sums) {
        w *= q_fact(v);
    }
    for &v in &t.entries {
        w /= q_fact(v);
    }
    Ok(w)
}

/// Floating-point version of [`q_coset_weight_exact`].
pub fn q_coset_weight(t: &ContingencyTable, theta: f64) -> Result<f64> {
    Ok(q_coset_size(t, theta)? * (1.0 - theta).powi(t.n() as i32))
}

/// The q-weight divided by (1−θ)^n; continuous at θ = 1, where it equals the
/// ordinary coset size.
pub fn q_coset_size(t: &ContingencyTable, theta: f64) -> Result<f64> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "theta must lie in (0, 1], got {theta}"
        )));
    }
    let q_int = |m: u32| -> f64 { (0..m).map(|e| theta.powi(e as i32)).sum() };
    let ln_q_fact = |m: u32| -> f64 { (1..=m).map(|k| q_int(k).ln()).sum() };
    let mut ln_w = q_exponent(t) as f64 * theta.ln();
    for &v in t.row_sums.iter().chain(&t.col_sums) {
        ln_w += ln_q_fact(v);
    }
    for &v in &t.entries {
        ln_w -= ln_q_fact(v);
    }
    Ok(ln_w.exp())
}

fn q_exponent(t: &ContingencyTable) -> i64 {
    let n = i64::from(t.n());
    let mut cross = 0i64;
    for i in 0..t.rows {
        for j in 0..t.cols {
            for i2 in i + 1..t.rows {
                for j2 in j + 1..t.cols {
                    cross += i64::from(t.get(i, j)) * i64::from(t.get(i2, j2));
                }
            }
        }
    }
    cross - n * n
}

fn pow_signed(base: &Rational, e: i64) -> Rational {
    let mut acc = Rational::one();
    for _ in 0..e.unsigned_abs() {
        acc *= base;
    }
    if e < 0 {
        acc.recip()
    } else {
        acc
    }
}

/// n! as an exact rational, for callers that normalise coset sizes.
pub fn factorial_rational(n: u32) -> Rational {
    from_biguint(factorial(n))
}
