use std::collections::HashMap;
use std::fmt;
use std::hash::Hash;

use num_traits::Zero;

use super::ChainKernel;
use crate::error::{Error, Result};
use crate::rational::Rational;
use crate::tables::ContingencyTable;

/// Merges rows 2..I and columns 2..J, giving the 2×2 table with margins
/// (λ1, n−λ1) and (μ1, n−μ1).
pub fn collapse_to_2x2(t: &ContingencyTable) -> Result<ContingencyTable> {
    let (r, c) = (t.rows(), t.cols());
    if r < 2 || c < 2 {
        return Err(Error::InvalidTable(format!(
            "collapse to 2x2 needs at least two rows and two columns, got {r}x{c}"
        )));
    }
    let n = t.n();
    let a = t.get(0, 0);
    let lambda1 = t.row_sums()[0];
    let mu1 = t.col_sums()[0];
    ContingencyTable::from_rows(vec![
        vec![a, lambda1 - a],
        vec![mu1 - a, n - lambda1 + a - mu1],
    ])
}

/// Lumped kernel under `project`. Fails unless Dynkin's criterion holds: every
/// state in a block sends the same mass to each block.
pub fn lump<S, T, F>(kernel: &ChainKernel<S>, project: F) -> Result<HashMap<T, Vec<(T, Rational)>>>
where
    S: Clone + Eq + Hash + fmt::Display,
    T: Clone + Eq + Hash + fmt::Display,
    F: Fn(&S) -> Result<T>,
{
    let images = kernel.states().iter().map(&project).collect::<Result<Vec<T>>>()?;
    let mut out: HashMap<T, Vec<(T, Rational)>> = HashMap::new();
    for (x, row) in kernel.rows().iter().enumerate() {
        let mut agg: Vec<(T, Rational)> = Vec::new();
        for (y, p) in row {
            let b = &images[*y];
            match agg.iter_mut().find(|(c, _)| c == b) {
                Some((_, q)) => *q += p,
                None => agg.push((b.clone(), p.clone())),
            }
        }
        agg.retain(|(_, p)| !p.is_zero());
        match out.get(&images[x]) {
            Some(existing) => {
                if !same_row(existing, &agg) {
                    return Err(Error::InvalidParameter(format!(
                        "projection is not lumpable: rows of {} disagree within block {}",
                        kernel.state(x),
                        images[x]
                    )));
                }
            }
            None => {
                out.insert(images[x].clone(), agg);
            }
        }
    }
    Ok(out)
}

fn same_row<T: Eq>(a: &[(T, Rational)], b: &[(T, Rational)]) -> bool {
    a.len() == b.len() && a.iter().all(|(t, p)| b.iter().any(|(u, q)| u == t && q == p))
}

/// True when the chain is lumpable under `project`, the lumped kernel equals
/// `target` exactly, and the stationary law pushes forward to target's.
pub fn lumping_commutes<S, T, F>(kernel: &ChainKernel<S>, project: F, target: &ChainKernel<T>) -> bool
where
    S: Clone + Eq + Hash + fmt::Display,
    T: Clone + Eq + Hash + fmt::Display,
    F: Fn(&S) -> Result<T>,
{
    let Ok(lumped) = lump(kernel, &project) else {
        return false;
    };
    if lumped.len() != target.len() {
        return false;
    }
    for (b, row) in &lumped {
        let Some(i) = target.index_of(b) else {
            return false;
        };
        let expected: Vec<(T, Rational)> = target
            .row(i)
            .iter()
            .map(|(j, p)| (target.state(*j).clone(), p.clone()))
            .collect();
        if !same_row(row, &expected) {
            return false;
        }
    }
    let mut pushed = vec![Rational::zero(); target.len()];
    for (x, s) in kernel.states().iter().enumerate() {
        match project(s).ok().and_then(|b| target.index_of(&b)) {
            Some(i) => pushed[i] += &kernel.stationary()[x],
            None => return false,
        }
    }
    pushed.as_slice() == target.stationary()
}
