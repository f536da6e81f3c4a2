use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::Serialize;

use super::tv_distance;
use crate::chains::{sample_step, sn_rt_step, ChainKernel, KernelKind};
use crate::error::{Error, Result};
use crate::tables::{min_coset_representative, permutation_to_table, ContingencyTable, Permutation};

pub const BOOTSTRAP_REPLICATES: usize = 200;

// Paths per rayon task; each task gets its own ChaCha stream, so results
// depend on the seed only, not on the thread count.
const CHUNK: usize = 8_192;

/// Plug-in TV estimate with a 95% percentile bootstrap interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EmpiricalTv {
    pub t: usize,
    pub paths: usize,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

fn chunk_rng(seed: u64, chunk: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk as u64);
    rng
}

fn merge(mut a: Vec<Vec<u64>>, b: Vec<Vec<u64>>) -> Vec<Vec<u64>> {
    for (ra, rb) in a.iter_mut().zip(b) {
        for (x, y) in ra.iter_mut().zip(rb) {
            *x += y;
        }
    }
    a
}

/// Runs `paths` independent paths of `t_max` steps and counts the state
/// occupied at each t = 0..=t_max.
fn count_paths<F>(states: usize, t_max: usize, paths: usize, seed: u64, run: F) -> Result<Vec<Vec<u64>>>
where
    F: Fn(&mut ChaCha8Rng, &mut dyn FnMut(usize, usize)) -> Result<()> + Sync,
{
    if paths == 0 {
        return Err(Error::InvalidParameter("paths must be at least 1".into()));
    }
    let chunks = paths.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut counts = vec![vec![0u64; states]; t_max + 1];
            let mut rng = chunk_rng(seed, c);
            let todo = CHUNK.min(paths - c * CHUNK);
            for _ in 0..todo {
                run(&mut rng, &mut |t, x| counts[t][x] += 1)?;
            }
            Ok(counts)
        })
        .try_reduce(|| vec![vec![0u64; states]; t_max + 1], |a, b| Ok(merge(a, b)))
}

fn frequencies(counts: &[u64], total: usize) -> Vec<f64> {
    counts.iter().map(|&c| c as f64 / total as f64).collect()
}

// A multinomial resample drawn as a chain of conditional binomials.
fn resample<R: Rng + ?Sized>(counts: &[u64], total: u64, rng: &mut R) -> Vec<u64> {
    let mut left = total;
    let mut mass_left = 1.0;
    let mut out = Vec::with_capacity(counts.len());
    for (i, &c) in counts.iter().enumerate() {
        if i + 1 == counts.len() || left == 0 {
            out.push(left);
            left = 0;
            continue;
        }
        let p = (c as f64 / total as f64 / mass_left).clamp(0.0, 1.0);
        let draw = Binomial::new(left, p).map_or(0, |b| b.sample(rng));
        out.push(draw);
        left -= draw;
        mass_left -= c as f64 / total as f64;
    }
    out
}

fn bootstrap(counts: &[u64], paths: usize, pi: &[f64], seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xB007_57A9);
    let mut stats: Vec<f64> = (0..BOOTSTRAP_REPLICATES)
        .map(|_| tv_distance(&frequencies(&resample(counts, paths as u64, &mut rng), paths), pi))
        .collect();
    stats.sort_by(f64::total_cmp);
    let at = |q: f64| stats[((stats.len() - 1) as f64 * q).round() as usize];
    (at(0.025), at(0.975))
}

/// Empirical TV to π after each t = 0..=t_max from `x0`, using the kind's sampler.
pub fn empirical_tv(
    kernel: &ChainKernel<ContingencyTable>,
    kind: KernelKind,
    x0: usize,
    t_max: usize,
    paths: usize,
    seed: u64,
) -> Result<Vec<EmpiricalTv>> {
    if x0 >= kernel.len() {
        return Err(Error::InvalidParameter(format!("start index {x0} outside {} states", kernel.len())));
    }
    let start = kernel.state(x0).clone();
    let counts = count_paths(kernel.len(), t_max, paths, seed, |rng, record| {
        let mut x = start.clone();
        record(0, x0);
        for t in 1..=t_max {
            x = sample_step(kind, &x, rng);
            let i = kernel
                .index_of(&x)
                .ok_or_else(|| Error::InvalidTable(format!("sampled table {x} is not a state")))?;
            record(t, i);
        }
        Ok(())
    })?;
    let pi = kernel.stationary_f64();
    Ok(counts
        .iter()
        .enumerate()
        .map(|(t, c)| {
            let (ci_low, ci_high) = bootstrap(c, paths, &pi, seed.wrapping_add(t as u64));
            EmpiricalTv {
                t,
                paths,
                estimate: tv_distance(&frequencies(c, paths), &pi),
                ci_low,
                ci_high,
            }
        })
        .collect())
}

/// Empirical law of the table of S_λ σ_t S_μ, σ_t random transpositions on
/// S_n started at the shortest representative of `start`, for t = 0..=t_max.
pub fn sn_lumping_distributions(
    kernel: &ChainKernel<ContingencyTable>,
    start: &ContingencyTable,
    t_max: usize,
    paths: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let sigma0: Permutation = min_coset_representative(start);
    let (rs, cs) = (start.row_sums().to_vec(), start.col_sums().to_vec());
    let counts = count_paths(kernel.len(), t_max, paths, seed, |rng, record| {
        let mut sigma = sigma0.clone();
        for t in 0..=t_max {
            if t > 0 {
                sn_rt_step(&mut sigma, rng);
            }
            let y = permutation_to_table(&sigma, &rs, &cs)?;
            let i = kernel
                .index_of(&y)
                .ok_or_else(|| Error::InvalidTable(format!("projected table {y} is not a state")))?;
            record(t, i);
        }
        Ok(())
    })?;
    Ok(counts.iter().map(|c| frequencies(c, paths)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chains::table_kernel;
    use crate::mixing::{distance_profile, evolve_exact, point_mass, ExactBudget};
    use crate::rational::to_f64;

    #[test]
    fn empirical_tv_tracks_exact() {
        let k = table_kernel(KernelKind::RandomTranspositions, &[3, 2], &[2, 2, 1]).unwrap();
        let exact = distance_profile(&k, 0, 20, ExactBudget::default()).unwrap();
        let est = empirical_tv(&k, KernelKind::RandomTranspositions, 0, 20, 100_000, 11).unwrap();
        assert_eq!(est[0].estimate, exact.points[0].tv);
        for t in [1usize, 5, 20] {
            let e = &est[t];
            assert!(e.ci_low <= e.estimate && e.estimate <= e.ci_high);
            // Plug-in bias is positive and of order sqrt(states/paths).
            assert!((e.estimate - exact.points[t].tv).abs() < 0.01, "t={t}: {e:?}");
        }
    }

    #[test]
    fn same_seed_same_counts() {
        let k = table_kernel(KernelKind::UniformSwap, &[3, 2], &[2, 2, 1]).unwrap();
        let a = empirical_tv(&k, KernelKind::UniformSwap, 2, 3, 20_000, 5).unwrap();
        let b = empirical_tv(&k, KernelKind::UniformSwap, 2, 3, 20_000, 5).unwrap();
        assert_eq!(a, b);
        assert!(empirical_tv(&k, KernelKind::UniformSwap, 2, 3, 0, 5).is_err());
    }

    #[test]
    fn sn_projection_follows_table_chain() {
        let k = table_kernel(KernelKind::RandomTranspositions, &[3, 2], &[2, 2, 1]).unwrap();
        let start = k.state(1).clone();
        let emp = sn_lumping_distributions(&k, &start, 4, 200_000, 3).unwrap();
        for (t, row) in emp.iter().enumerate() {
            let p: Vec<f64> = evolve_exact(&k, &point_mass(k.len(), 1).unwrap(), t)
                .unwrap()
                .iter()
                .map(to_f64)
                .collect();
            assert!(tv_distance(row, &p) < 0.01);
        }
    }

    #[test]
    fn resample_preserves_total() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = resample(&[5, 0, 3, 2], 10, &mut rng);
        assert_eq!(r.iter().sum::<u64>(), 10);
        assert_eq!(r[1], 0);
    }
}
