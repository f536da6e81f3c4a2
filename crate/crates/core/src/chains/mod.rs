//! Markov kernels on contingency tables and related state spaces.

mod lumping;
mod swap;
mod three_way;
mod trajectory;
mod transpositions;

pub use lumping::{collapse_to_2x2, lump, lumping_commutes};
pub use swap::{metropolis_fy_row, metropolis_uniform_row, uniform_swap_row};
pub use three_way::{check_three_way, three_way_kernel, three_way_row, three_way_scaled_row, ThreeWayReport};
pub use trajectory::{sample_step, simulate_trajectory, to_json_lines, TrajectoryRecord};
pub use transpositions::{
    rt_row, rt_row_no_holding, rt_sample_step, rt_weights, sn_rt_step, swap_moves, SwapMove,
};

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::hash::Hash;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::rational::{to_f64, Rational};
use crate::tables::{enumerate_tables, fisher_yates_pmf, ContingencyTable};

/// Sparse transition row: (target state index, probability).
pub type SparseRow = Vec<(usize, Rational)>;

/// A transition law on an enumerated state space, with its stationary law.
#[derive(Clone, Debug)]
pub struct ChainKernel<S> {
    name: String,
    states: Vec<S>,
    index: HashMap<S, usize>,
    rows: Vec<SparseRow>,
    stationary: Vec<Rational>,
}

impl<S: Clone + Eq + Hash + fmt::Display> ChainKernel<S> {
    /// Builds the kernel from a row generator. Every generated target must be
    /// one of `states`; probabilities for repeated targets are added.
    pub fn from_row_fn<F>(
        name: impl Into<String>,
        states: Vec<S>,
        stationary: Vec<Rational>,
        row_fn: F,
    ) -> Result<Self>
    where
        F: Fn(&S) -> Vec<(S, Rational)>,
    {
        if stationary.len() != states.len() {
            return Err(Error::InvalidParameter(
                "stationary vector length differs from state count".into(),
            ));
        }
        let index: HashMap<S, usize> = states
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
        let mut rows = Vec::with_capacity(states.len());
        for s in &states {
            let mut acc: Vec<(usize, Rational)> = Vec::new();
            for (target, p) in row_fn(s) {
                let j = *index.get(&target).ok_or_else(|| {
                    Error::InvalidTable(format!("transition from {s} leaves the state space: {target}"))
                })?;
                match acc.iter_mut().find(|(k, _)| *k == j) {
                    Some((_, q)) => *q += p,
                    None => acc.push((j, p)),
                }
            }
            acc.retain(|(_, p)| !p.is_zero());
            rows.push(acc);
        }
        Ok(Self {
            name: name.into(),
            states,
            index,
            rows,
            stationary,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[S] {
        &self.states
    }

    pub fn state(&self, i: usize) -> &S {
        &self.states[i]
    }

    pub fn index_of(&self, s: &S) -> Option<usize> {
        self.index.get(s).copied()
    }

    pub fn row(&self, i: usize) -> &SparseRow {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[SparseRow] {
        &self.rows
    }

    pub fn stationary(&self) -> &[Rational] {
        &self.stationary
    }

    pub fn stationary_f64(&self) -> Vec<f64> {
        self.stationary.iter().map(to_f64).collect()
    }

    pub fn transition(&self, x: usize, y: usize) -> Rational {
        self.rows[x]
            .iter()
            .find(|(k, _)| *k == y)
            .map_or_else(Rational::zero, |(_, p)| p.clone())
    }

    /// Checks every probability lies in [0, 1] and every row sums to exactly 1.
    pub fn check_rows(&self) -> Result<()> {
        for (i, row) in self.rows.iter().enumerate() {
            if row.iter().any(|(_, p)| p < &Rational::zero() || p > &Rational::one()) {
                return Err(Error::InvalidTable(format!(
                    "row of {} has a probability outside [0, 1]",
                    self.states[i]
                )));
            }
            let total: Rational = row.iter().map(|(_, p)| p).sum();
            if !total.is_one() {
                return Err(Error::InvalidTable(format!(
                    "row of {} sums to {total}",
                    self.states[i]
                )));
            }
        }
        Ok(())
    }

    /// Exact check of π(x)P(x,y) = π(y)P(y,x) for every pair.
    pub fn detailed_balance_holds(&self) -> bool {
        self.rows.iter().enumerate().all(|(x, row)| {
            row.iter().all(|(y, p)| {
                &self.stationary[x] * p == &self.stationary[*y] * self.transition(*y, x)
            })
        })
    }

    /// Exact check of πP = π.
    pub fn is_stationary(&self) -> bool {
        let mut next = vec![Rational::zero(); self.len()];
        for (x, row) in self.rows.iter().enumerate() {
            for (y, p) in row {
                next[*y] += &self.stationary[x] * p;
            }
        }
        next == self.stationary
    }

    /// Largest |π(x)P(x,y) − π(y)P(y,x)| in floating point.
    pub fn detailed_balance_residual(&self) -> f64 {
        let pi = self.stationary_f64();
        let float = self.float_rows();
        let lookup = |x: usize, y: usize| {
            float[x]
                .iter()
                .find(|(k, _)| *k == y)
                .map_or(0.0, |(_, p)| *p)
        };
        let mut worst = 0.0f64;
        for (x, row) in float.iter().enumerate() {
            for &(y, p) in row {
                worst = worst.max((pi[x] * p - pi[y] * lookup(y, x)).abs());
            }
        }
        worst
    }

    /// True when every state reaches every other (single communicating class).
    pub fn is_irreducible(&self) -> bool {
        if self.is_empty() {
            return true;
        }
        let reach = |adj: &Vec<Vec<usize>>| {
            let mut seen = vec![false; self.len()];
            let mut queue = VecDeque::from([0usize]);
            seen[0] = true;
            while let Some(x) = queue.pop_front() {
                for &y in &adj[x] {
                    if !seen[y] {
                        seen[y] = true;
                        queue.push_back(y);
                    }
                }
            }
            seen.into_iter().all(|s| s)
        };
        let forward: Vec<Vec<usize>> = self
            .rows
            .iter()
            .map(|r| r.iter().map(|(y, _)| *y).collect())
            .collect();
        let mut backward = vec![Vec::new(); self.len()];
        for (x, r) in self.rows.iter().enumerate() {
            for (y, _) in r {
                backward[*y].push(x);
            }
        }
        reach(&forward) && reach(&backward)
    }

    pub fn float_rows(&self) -> Vec<Vec<(usize, f64)>> {
        self.rows
            .iter()
            .map(|r| r.iter().map(|(y, p)| (*y, to_f64(p))).collect())
            .collect()
    }

    /// Row-major dense matrix of the kernel.
    pub fn dense(&self) -> Vec<f64> {
        let n = self.len();
        let mut m = vec![0.0; n * n];
        for (x, row) in self.rows.iter().enumerate() {
            for (y, p) in row {
                m[x * n + y] = to_f64(p);
            }
        }
        m
    }
}

/// The table-level chains.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum KernelKind {
    /// Random transpositions lumped to tables (holding includes identical picks).
    RandomTranspositions,
    /// Random transpositions with two distinct cards picked.
    NoHolding,
    /// Uniform swap chain P_U.
    UniformSwap,
    /// Random transpositions made uniform-stationary by Metropolis, P_U^M.
    MetropolisUniform,
    /// Uniform swaps made Fisher-Yates-stationary by Metropolis, P_FY^M.
    MetropolisFisherYates,
}

impl KernelKind {
    pub const ALL: [KernelKind; 5] = [
        KernelKind::RandomTranspositions,
        KernelKind::NoHolding,
        KernelKind::UniformSwap,
        KernelKind::MetropolisUniform,
        KernelKind::MetropolisFisherYates,
    ];

    pub fn name(self) -> &'static str {
        match self {
            KernelKind::RandomTranspositions => "rt",
            KernelKind::NoHolding => "rt-no-holding",
            KernelKind::UniformSwap => "uniform",
            KernelKind::MetropolisUniform => "metropolis-uniform",
            KernelKind::MetropolisFisherYates => "metropolis-fy",
        }
    }

    pub fn uniform_stationary(self) -> bool {
        matches!(self, KernelKind::UniformSwap | KernelKind::MetropolisUniform)
    }

    pub fn row(self, t: &ContingencyTable) -> Vec<(ContingencyTable, Rational)> {
        match self {
            KernelKind::RandomTranspositions => rt_row(t),
            KernelKind::NoHolding => rt_row_no_holding(t),
            KernelKind::UniformSwap => uniform_swap_row(t),
            KernelKind::MetropolisUniform => metropolis_uniform_row(t),
            KernelKind::MetropolisFisherYates => metropolis_fy_row(t),
        }
    }
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KernelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Self::ALL.iter().map(|k| k.name()).collect();
                Error::Parse(format!("unknown chain {s:?}; expected one of {}", names.join(", ")))
            })
    }
}

/// Enumerates the tables and builds the chosen kernel with its stationary law.
pub fn table_kernel(
    kind: KernelKind,
    row_sums: &[u32],
    col_sums: &[u32],
) -> Result<ChainKernel<ContingencyTable>> {
    let states = enumerate_tables(row_sums, col_sums)?;
    let stationary = if kind.uniform_stationary() {
        let u = Rational::new(BigInt::one(), BigInt::from(states.len()));
        vec![u; states.len()]
    } else {
        states.iter().map(fisher_yates_pmf).collect()
    };
    ChainKernel::from_row_fn(kind.name(), states, stationary, |t| kind.row(t))
}
