//! Exact and simulated convergence to stationarity, closed-form mixing
//! bounds, and relaxation-time comparison of the table chains.

mod bounds;
mod compare;
mod monte_carlo;

pub use bounds::{
    avg_chi2_bound, avg_chi2_sum, extreme_chi2, extreme_state_bounds, extreme_state_table,
    wilson_lower_bound, AvgChi2Bound, ExtremeBounds, WilsonBound, WilsonCase,
};
pub use compare::{
    max_entry_over_tables, min_positive_entry_over_tables, relaxation_comparison, relaxation_time,
    second_eigenvalue_modulus, spectral_gap, ComparisonReport, COMPARISON_TOLERANCE,
};
pub use monte_carlo::{empirical_tv, sn_lumping_distributions, EmpiricalTv, BOOTSTRAP_REPLICATES};

use std::fmt;
use std::hash::Hash;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::chains::ChainKernel;
use crate::error::{Error, Result};
use crate::rational::{lcm_denominators, to_f64, Rational};

/// Distances from stationarity after `t` steps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DistanceProfile {
    pub t: usize,
    pub tv: f64,
    pub chi2: f64,
}

/// Limits on exact evolution; beyond either, evolution continues in f64.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExactBudget {
    pub max_states: usize,
    pub max_steps: usize,
}

impl Default for ExactBudget {
    fn default() -> Self {
        Self {
            max_states: 5_000,
            max_steps: 150,
        }
    }
}

impl ExactBudget {
    pub const FLOAT_ONLY: ExactBudget = ExactBudget {
        max_states: 0,
        max_steps: 0,
    };
}

/// A distance profile with the step at which exact arithmetic stopped.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProfileRun {
    pub points: Vec<DistanceProfile>,
    /// First step computed in floating point, if any.
    pub switched_at: Option<usize>,
}

/// Kernel rows over one common integer denominator.
#[derive(Clone, Debug)]
pub struct IntegerKernel {
    pub den: BigInt,
    pub rows: Vec<Vec<(usize, BigInt)>>,
}

impl IntegerKernel {
    pub fn new<S: Clone + Eq + Hash + fmt::Display>(kernel: &ChainKernel<S>) -> Self {
        let den = lcm_denominators(kernel.rows().iter().flatten().map(|(_, p)| p));
        let rows = kernel
            .rows()
            .iter()
            .map(|r| {
                r.iter()
                    .map(|(y, p)| (*y, (p * Rational::from_integer(den.clone())).to_integer()))
                    .collect()
            })
            .collect();
        Self { den, rows }
    }

    /// One step on numerators; the denominator grows by `den`.
    pub fn step(&self, num: &[BigInt]) -> Vec<BigInt> {
        let mut out = vec![BigInt::zero(); num.len()];
        for (x, row) in self.rows.iter().enumerate() {
            if num[x].is_zero() {
                continue;
            }
            for (y, w) in row {
                out[*y] += &num[x] * w;
            }
        }
        out
    }
}

/// A distribution as integer numerators over one denominator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScaledDistribution {
    pub num: Vec<BigInt>,
    pub den: BigInt,
}

impl ScaledDistribution {
    pub fn from_rationals(p: &[Rational]) -> Self {
        let den = lcm_denominators(p);
        let num = p
            .iter()
            .map(|v| (v * Rational::from_integer(den.clone())).to_integer())
            .collect();
        Self { num, den }
    }

    pub fn point_mass(states: usize, x: usize) -> Self {
        let mut num = vec![BigInt::zero(); states];
        num[x] = BigInt::one();
        Self { num, den: BigInt::one() }
    }

    pub fn to_rationals(&self) -> Vec<Rational> {
        self.num
            .iter()
            .map(|v| Rational::new(v.clone(), self.den.clone()))
            .collect()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.to_rationals().iter().map(to_f64).collect()
    }

    pub fn step(&self, kernel: &IntegerKernel) -> Self {
        let num = kernel.step(&self.num);
        let den = &self.den * &kernel.den;
        // Keep numbers small when a common factor appears.
        let g = num.iter().fold(den.clone(), |acc, v| acc.gcd(v));
        if g.is_one() || g.is_zero() {
            Self { num, den }
        } else {
            Self {
                num: num.into_iter().map(|v| v / &g).collect(),
                den: den / &g,
            }
        }
    }
}

/// Exact left-multiplication of `start` by the kernel, `t` times.
pub fn evolve_exact<S: Clone + Eq + Hash + fmt::Display>(
    kernel: &ChainKernel<S>,
    start: &[Rational],
    t: usize,
) -> Result<Vec<Rational>> {
    check_len(kernel.len(), start.len())?;
    let ik = IntegerKernel::new(kernel);
    let mut d = ScaledDistribution::from_rationals(start);
    for _ in 0..t {
        d = d.step(&ik);
    }
    Ok(d.to_rationals())
}

/// Floating-point left-multiplication by the kernel, `t` times.
pub fn evolve_f64<S: Clone + Eq + Hash + fmt::Display>(
    kernel: &ChainKernel<S>,
    start: &[f64],
    t: usize,
) -> Result<Vec<f64>> {
    check_len(kernel.len(), start.len())?;
    let rows = kernel.float_rows();
    let mut p = start.to_vec();
    for _ in 0..t {
        p = step_f64(&rows, &p);
    }
    Ok(p)
}

pub(crate) fn step_f64(rows: &[Vec<(usize, f64)>], p: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; p.len()];
    for (x, row) in rows.iter().enumerate() {
        if p[x] == 0.0 {
            continue;
        }
        for &(y, w) in row {
            out[y] += p[x] * w;
        }
    }
    out
}

/// Result of [`evolve_distribution`]: floats always, rationals while exact.
#[derive(Clone, Debug, PartialEq)]
pub struct Evolved {
    pub probs: Vec<f64>,
    pub exact: Option<Vec<Rational>>,
    pub switched_at: Option<usize>,
}

/// Evolves exactly while within `budget`, then in f64 from the switch point.
pub fn evolve_distribution<S: Clone + Eq + Hash + fmt::Display>(
    kernel: &ChainKernel<S>,
    start: &[Rational],
    t: usize,
    budget: ExactBudget,
) -> Result<Evolved> {
    check_len(kernel.len(), start.len())?;
    if kernel.len() > budget.max_states {
        let p0: Vec<f64> = start.iter().map(to_f64).collect();
        return Ok(Evolved {
            probs: evolve_f64(kernel, &p0, t)?,
            exact: None,
            switched_at: Some(0),
        });
    }
    let exact_steps = t.min(budget.max_steps);
    let exact = evolve_exact(kernel, start, exact_steps)?;
    if exact_steps == t {
        return Ok(Evolved {
            probs: exact.iter().map(to_f64).collect(),
            exact: Some(exact),
            switched_at: None,
        });
    }
    let p: Vec<f64> = exact.iter().map(to_f64).collect();
    Ok(Evolved {
        probs: evolve_f64(kernel, &p, t - exact_steps)?,
        exact: None,
        switched_at: Some(exact_steps),
    })
}

fn check_len(states: usize, len: usize) -> Result<()> {
    if states != len {
        return Err(Error::InvalidParameter(format!(
            "distribution has {len} entries for {states} states"
        )));
    }
    Ok(())
}

/// ½ Σ |p − q|.
pub fn tv_distance(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

pub fn tv_distance_exact(p: &[Rational], q: &[Rational]) -> Rational {
    let s: Rational = p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum();
    s / Rational::from_integer(BigInt::from(2))
}

/// Σ (p(y) − π(y))² / π(y).
pub fn chi2_from(p: &[f64], pi: &[f64]) -> f64 {
    p.iter().zip(pi).map(|(a, b)| (a - b) * (a - b) / b).sum()
}

pub fn chi2_from_exact(p: &[Rational], pi: &[Rational]) -> Rational {
    p.iter()
        .zip(pi)
        .map(|(a, b)| {
            let d = a - b;
            &d * &d / b
        })
        .sum()
}

/// χ²_{x0}(t) by exact evolution from the point mass at `x0`.
pub fn chi2_distance<S: Clone + Eq + Hash + fmt::Display>(
    kernel: &ChainKernel<S>,
    x0: usize,
    t: usize,
) -> Result<Rational> {
    let p = evolve_exact(kernel, &point_mass(kernel.len(), x0)?, t)?;
    Ok(chi2_from_exact(&p, kernel.stationary()))
}

pub fn point_mass(states: usize, x0: usize) -> Result<Vec<Rational>> {
    if x0 >= states {
        return Err(Error::InvalidParameter(format!(
            "start index {x0} outside {states} states"
        )));
    }
    let mut v = vec![Rational::zero(); states];
    v[x0] = Rational::one();
    Ok(v)
}

/// TV and χ² from the point mass at `x0` for t = 0..=t_max.
pub fn distance_profile<S: Clone + Eq + Hash + fmt::Display>(
    kernel: &ChainKernel<S>,
    x0: usize,
    t_max: usize,
    budget: ExactBudget,
) -> Result<ProfileRun> {
    let start = point_mass(kernel.len(), x0)?;
    let pi = kernel.stationary();
    let pi_f = kernel.stationary_f64();
    let mut points = Vec::with_capacity(t_max + 1);
    let exact_steps = if kernel.len() > budget.max_states {
        None
    } else {
        Some(budget.max_steps)
    };
    let ik = exact_steps.map(|_| IntegerKernel::new(kernel));
    let rows = kernel.float_rows();
    let mut exact = exact_steps.map(|_| ScaledDistribution::from_rationals(&start));
    let mut float: Vec<f64> = start.iter().map(to_f64).collect();
    let mut switched_at = if exact.is_none() { Some(0) } else { None };
    for t in 0..=t_max {
        if t > 0 {
            match (&mut exact, &ik) {
                (Some(d), Some(k)) if t <= budget.max_steps => *d = d.step(k),
                (Some(d), Some(_)) => {
                    float = d.to_f64();
                    exact = None;
                    switched_at = Some(t);
                    float = step_f64(&rows, &float);
                }
                _ => float = step_f64(&rows, &float),
            }
        }
        let point = match &exact {
            Some(d) => {
                let p = d.to_rationals();
                DistanceProfile {
                    t,
                    tv: to_f64(&tv_distance_exact(&p, pi)),
                    chi2: to_f64(&chi2_from_exact(&p, pi)),
                }
            }
            None => DistanceProfile {
                t,
                tv: tv_distance(&float, &pi_f),
                chi2: chi2_from(&float, &pi_f),
            },
        };
        points.push(point);
    }
    Ok(ProfileRun { points, switched_at })
}

/// Worst-case mixing time from the full transition powers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct MixingTime {
    pub t: usize,
    /// Whether every comparison was made in exact arithmetic.
    pub exact: bool,
}

/// Smallest t with max_x ‖P^t(x,·) − π‖_TV < ε, scanning t upward to `t_max`.
/// Exact (integer-scaled) while the state count is within `budget`.
pub fn t_mix<S: Clone + Eq + Hash + fmt::Display>(
    kernel: &ChainKernel<S>,
    eps: &Rational,
    t_max: usize,
    budget: ExactBudget,
) -> Result<Option<MixingTime>> {
    let n = kernel.len();
    if n == 0 {
        return Err(Error::InvalidParameter("empty state space".into()));
    }
    if n <= budget.max_states && t_max <= budget.max_steps {
        let ik = IntegerKernel::new(kernel);
        let pi = ScaledDistribution::from_rationals(kernel.stationary());
        let mut dists: Vec<ScaledDistribution> = (0..n).map(|x| ScaledDistribution::point_mass(n, x)).collect();
        for t in 0..=t_max {
            if t > 0 {
                dists = dists.iter().map(|d| d.step(&ik)).collect();
            }
            if dists.iter().all(|d| tv_below(d, &pi, eps)) {
                return Ok(Some(MixingTime { t, exact: true }));
            }
        }
        return Ok(None);
    }
    let rows = kernel.float_rows();
    let pi = kernel.stationary_f64();
    let e = to_f64(eps);
    let mut dists: Vec<Vec<f64>> = (0..n)
        .map(|x| {
            let mut v = vec![0.0; n];
            v[x] = 1.0;
            v
        })
        .collect();
    for t in 0..=t_max {
        if t > 0 {
            dists = dists.iter().map(|d| step_f64(&rows, d)).collect();
        }
        if dists.iter().all(|d| tv_distance(d, &pi) < e) {
            return Ok(Some(MixingTime { t, exact: false }));
        }
    }
    Ok(None)
}

/// ½ Σ |p − π| < ε without leaving integer arithmetic.
fn tv_below(p: &ScaledDistribution, pi: &ScaledDistribution, eps: &Rational) -> bool {
    let mut s = BigInt::zero();
    for (a, b) in p.num.iter().zip(&pi.num) {
        s += (a * &pi.den - b * &p.den).abs();
    }
    // s / (2 p.den pi.den) < eps.numer / eps.denom
    s * eps.denom() < BigInt::from(2) * &p.den * &pi.den * eps.numer()
}

/// Σ_x π(x) χ²_x(t) by exact evolution from every state.
pub fn average_chi2<S: Clone + Eq + Hash + fmt::Display>(kernel: &ChainKernel<S>, t: usize) -> Result<Rational> {
    let n = kernel.len();
    let ik = IntegerKernel::new(kernel);
    let pi = kernel.stationary();
    let mut total = Rational::zero();
    for x in 0..n {
        let mut d = ScaledDistribution::point_mass(n, x);
        for _ in 0..t {
            d = d.step(&ik);
        }
        total += &pi[x] * chi2_from_exact(&d.to_rationals(), pi);
    }
    Ok(total)
}

/// Σ_{ρ ≠ (n)} m_ρ^power β_ρ^{2t} over a closed-form spectrum.
pub fn average_chi2_spectral(spectrum: &crate::spectral::Spectrum, t: u32, power: u32) -> Rational {
    spectrum
        .entries
        .iter()
        .filter(|e| !e.beta.is_one())
        .map(|e| {
            let m = Rational::from_integer(BigInt::from(e.multiplicity).pow(power));
            m * pow_rational(&e.beta, 2 * t)
        })
        .sum()
}

/// Spectral upper bound χ²_x(t) ≤ (1/π(x) − 1)·β*^{2t}, with β* the largest
/// modulus among the non-trivial eigenvalues.
pub fn chi2_spectral_bound(pi_x: f64, beta_star: f64, t: usize) -> f64 {
    (1.0 / pi_x - 1.0) * beta_star.powi(2 * t as i32)
}

pub(crate) fn pow_rational(r: &Rational, e: u32) -> Rational {
    Rational::new(r.numer().pow(e), r.denom().pow(e))
}
