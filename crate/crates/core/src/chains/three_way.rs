use std::collections::HashMap;

use num_bigint::BigInt;
use num_traits::ToPrimitive;

use super::ChainKernel;
use crate::error::{Error, Result};
use crate::rational::Rational;
use crate::tables::{enumerate_three_way, three_way_pmf, three_way_weight, ThreeWayTable};

/// Off-diagonal targets with integer weights over the common denominator 3n²,
/// plus the diagonal weight. For each unordered pair of occupied cells and each
/// axis r, the r-th coordinates are exchanged with weight 2·T_c1·T_c2; moves
/// that leave the table unchanged fold into the diagonal.
pub fn three_way_scaled_row(t: &ThreeWayTable) -> (Vec<(ThreeWayTable, u64)>, u64) {
    let (deltas, moved) = scaled_deltas(t);
    let n = u64::from(t.n());
    // Saturating: an overfull row then fails the row-sum checks downstream.
    let hold = (3 * n * n).saturating_sub(moved);
    let targets = deltas
        .into_iter()
        .map(|([a, b, c, d], w)| {
            let mut e = t.entries().to_vec();
            e[a] -= 1;
            e[b] -= 1;
            e[c] += 1;
            e[d] += 1;
            (t.with_entries(e), w)
        })
        .collect();
    (targets, hold)
}

/// Moves as [from, from, to, to] entry indices with their weights over 3n²,
/// plus the total weight moved off the diagonal.
fn scaled_deltas(t: &ThreeWayTable) -> (Vec<([usize; 4], u64)>, u64) {
    let entries = t.entries();
    let occupied: Vec<usize> = (0..entries.len()).filter(|&i| entries[i] > 0).collect();
    // A move takes one count from cells a, b and adds one to na, nb; the two
    // pairs are disjoint, so the sorted pairs identify the target table.
    let mut deltas: Vec<([usize; 4], u64)> = Vec::new();
    let mut moved = 0u64;
    for (a_pos, &a) in occupied.iter().enumerate() {
        for &b in &occupied[a_pos + 1..] {
            let (ca, cb) = (t.cell(a), t.cell(b));
            let w = 2 * u64::from(entries[a]) * u64::from(entries[b]);
            for r in 0..3 {
                if ca[r] == cb[r] {
                    continue;
                }
                let (mut na, mut nb) = (ca, cb);
                na[r] = cb[r];
                nb[r] = ca[r];
                // Cells differing only in coordinate r swap onto each other.
                if na == cb {
                    continue;
                }
                let (ia, ib) = (t.index(na), t.index(nb));
                let key = [a, b, ia.min(ib), ia.max(ib)];
                moved += w;
                match deltas.iter_mut().find(|(k, _)| *k == key) {
                    Some((_, acc)) => *acc += w,
                    None => deltas.push((key, w)),
                }
            }
        }
    }
    (deltas, moved)
}

/// The 3-way chain row with exact probabilities.
pub fn three_way_row(t: &ThreeWayTable) -> Vec<(ThreeWayTable, Rational)> {
    let n = u64::from(t.n());
    let den = BigInt::from(3 * n * n);
    let (targets, hold) = three_way_scaled_row(t);
    let mut out: Vec<(ThreeWayTable, Rational)> = Vec::with_capacity(targets.len() + 1);
    if hold > 0 {
        out.push((t.clone(), Rational::new(BigInt::from(hold), den.clone())));
    }
    out.extend(
        targets
            .into_iter()
            .map(|(y, w)| (y, Rational::new(BigInt::from(w), den.clone()))),
    );
    out
}

/// Exact kernel on all 3-way tables with the given margins.
pub fn three_way_kernel(
    lambda: &[u32],
    mu: &[u32],
    rho: &[u32],
    cap: usize,
) -> Result<ChainKernel<ThreeWayTable>> {
    let states = enumerate_three_way(lambda, mu, rho, cap)?;
    let stationary = states.iter().map(three_way_pmf).collect();
    ChainKernel::from_row_fn("three-way", states, stationary, three_way_row)
}

/// Outcome of the exhaustive integer check of the 3-way chain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThreeWayReport {
    pub states: usize,
    pub rows_stochastic: bool,
    pub detailed_balance: bool,
    pub irreducible: bool,
}

impl ThreeWayReport {
    pub fn passed(&self) -> bool {
        self.rows_stochastic && self.detailed_balance && self.irreducible
    }
}

/// Occupied cells as (index, count) pairs in index order.
fn sparse_key(entries: &[u32]) -> Vec<(u32, u32)> {
    let mut key = Vec::new();
    for (i, &v) in entries.iter().enumerate() {
        if v > 0 {
            key.push((i as u32, v));
        }
    }
    key
}

/// The sparse key after moving one count out of cells a, b and into c, d.
fn apply_delta(key: &[(u32, u32)], [a, b, c, d]: [usize; 4]) -> Vec<(u32, u32)> {
    let mut out = key.to_vec();
    for (idx, step) in [(a, -1i64), (b, -1), (c, 1), (d, 1)] {
        let idx = idx as u32;
        match out.binary_search_by_key(&idx, |&(i, _)| i) {
            Ok(pos) => {
                let v = i64::from(out[pos].1) + step;
                if v == 0 {
                    out.remove(pos);
                } else {
                    out[pos].1 = v as u32;
                }
            }
            Err(pos) => out.insert(pos, (idx, 1)),
        }
    }
    out
}

/// Checks row sums, detailed balance against ∏λ!μ!ρ!/∏T! (proportional to the
/// stationary law) and irreducibility, in integer arithmetic.
pub fn check_three_way(lambda: &[u32], mu: &[u32], rho: &[u32], cap: usize) -> Result<ThreeWayReport> {
    let states = enumerate_three_way(lambda, mu, rho, cap)?;
    // Margins are shared by every state, so the occupied cells alone identify
    // a table; at most n of them, against I·J·K entries.
    let index: HashMap<Vec<(u32, u32)>, usize> =
        states.iter().enumerate().map(|(i, s)| (sparse_key(s.entries()), i)).collect();
    let weights = states
        .iter()
        .map(|s| {
            three_way_weight(s).to_u128().ok_or_else(|| {
                Error::InvalidParameter("3-way weights exceed 128-bit range".into())
            })
        })
        .collect::<Result<Vec<u128>>>()?;
    let n = u64::from(lambda.iter().sum::<u32>());
    let total = 3 * n * n;
    let mut rows: Vec<Vec<(usize, u64)>> = Vec::with_capacity(states.len());
    let mut rows_stochastic = true;
    for s in &states {
        let (targets, moved) = scaled_deltas(s);
        let key = sparse_key(s.entries());
        rows_stochastic &= moved <= total && targets.iter().map(|(_, w)| w).sum::<u64>() == moved;
        let mut row = Vec::with_capacity(targets.len());
        for (delta, w) in targets {
            let j = *index.get(&apply_delta(&key, delta)).ok_or_else(|| {
                Error::InvalidTable(format!("3-way move {delta:?} leaves the state space from {s}"))
            })?;
            row.push((j, w));
        }
        row.sort_unstable();
        rows.push(row);
    }
    let weight_of = |x: usize, y: usize| -> u64 {
        rows[x]
            .binary_search_by(|(k, _)| k.cmp(&y))
            .map_or(0, |pos| rows[x][pos].1)
    };
    let mut detailed_balance = true;
    'outer: for (x, row) in rows.iter().enumerate() {
        for &(y, w) in row {
            let lhs = weights[x].checked_mul(u128::from(w));
            let rhs = weights[y].checked_mul(u128::from(weight_of(y, x)));
            match (lhs, rhs) {
                (Some(a), Some(b)) if a == b => {}
                (Some(_), Some(_)) => {
                    detailed_balance = false;
                    break 'outer;
                }
                _ => {
                    return Err(Error::InvalidParameter(
                        "3-way balance products exceed 128-bit range".into(),
                    ))
                }
            }
        }
    }
    let mut seen = vec![false; states.len()];
    let mut stack = vec![0usize];
    seen[0] = true;
    while let Some(x) = stack.pop() {
        for &(y, _) in &rows[x] {
            if !seen[y] {
                seen[y] = true;
                stack.push(y);
            }
        }
    }
    // Reversibility makes forward reachability from one state sufficient.
    let irreducible = seen.iter().all(|&s| s);
    Ok(ThreeWayReport {
        states: states.len(),
        rows_stochastic,
        detailed_balance,
        irreducible: irreducible && detailed_balance,
    })
}
