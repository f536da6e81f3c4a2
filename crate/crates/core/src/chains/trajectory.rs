use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{rt_sample_step, ChainKernel, KernelKind};
use crate::error::Result;
use crate::rational::to_f64;
use crate::tables::ContingencyTable;

/// One line of a simulated path.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub t: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub state_index: Option<usize>,
    pub entries: Vec<Vec<u32>>,
}

/// One step of the chosen chain. Random transpositions draws two data points
/// directly; the other kernels sample from their exact row.
pub fn sample_step<R: Rng + ?Sized>(kind: KernelKind, t: &ContingencyTable, rng: &mut R) -> ContingencyTable {
    if kind == KernelKind::RandomTranspositions {
        return rt_sample_step(t, rng);
    }
    let row = kind.row(t);
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (y, p) in &row {
        acc += to_f64(p);
        if u < acc {
            return y.clone();
        }
    }
    // Rounding can leave u just above the float total.
    row.last().map_or_else(|| t.clone(), |(y, _)| y.clone())
}

/// Path of `steps` transitions from `start`, including the starting state.
/// With `kernel`, each record carries the state's enumeration index.
pub fn simulate_trajectory<R: Rng + ?Sized>(
    kind: KernelKind,
    start: &ContingencyTable,
    steps: usize,
    rng: &mut R,
    kernel: Option<&ChainKernel<ContingencyTable>>,
) -> Vec<TrajectoryRecord> {
    let mut out = Vec::with_capacity(steps + 1);
    let mut x = start.clone();
    for t in 0..=steps {
        if t > 0 {
            x = sample_step(kind, &x, rng);
        }
        out.push(TrajectoryRecord {
            t,
            state_index: kernel.and_then(|k| k.index_of(&x)),
            entries: x.to_rows(),
        });
    }
    out
}

/// One JSON object per line.
pub fn to_json_lines(records: &[TrajectoryRecord]) -> Result<String> {
    let mut s = String::new();
    for r in records {
        s.push_str(&serde_json::to_string(r)?);
        s.push('\n');
    }
    Ok(s)
}
