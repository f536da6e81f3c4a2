use std::fmt;
use std::hash::Hash;

use serde::Serialize;

use crate::chains::{table_kernel, ChainKernel, KernelKind};
use crate::error::{Error, Result};
use crate::spectral::brute_force_spectrum;
use crate::tables::ContingencyTable;

/// 1 − β₂ with β₂ the second-largest eigenvalue; 1 on a single state.
pub fn spectral_gap<S: Clone + Eq + Hash + fmt::Display>(kernel: &ChainKernel<S>) -> Result<f64> {
    if kernel.len() <= 1 {
        return Ok(1.0);
    }
    let eig = brute_force_spectrum(kernel)?;
    Ok(1.0 - eig[1])
}

/// max |β| over the eigenvalues other than the top one; 0 on a single state.
pub fn second_eigenvalue_modulus<S: Clone + Eq + Hash + fmt::Display>(kernel: &ChainKernel<S>) -> Result<f64> {
    if kernel.len() <= 1 {
        return Ok(0.0);
    }
    let eig = brute_force_spectrum(kernel)?;
    Ok(eig[1].abs().max(eig[eig.len() - 1].abs()))
}

pub fn relaxation_time<S: Clone + Eq + Hash + fmt::Display>(kernel: &ChainKernel<S>) -> Result<f64> {
    Ok(1.0 / spectral_gap(kernel)?)
}

pub fn min_positive_entry_over_tables(tables: &[ContingencyTable]) -> Option<u32> {
    tables.iter().flat_map(|t| t.entries().iter().copied()).filter(|&v| v > 0).min()
}

pub fn max_entry_over_tables(tables: &[ContingencyTable]) -> Option<u32> {
    tables.iter().flat_map(|t| t.entries().iter().copied()).max()
}

/// Relaxation times of the four chains and the two comparison sandwiches.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub states: usize,
    pub n: u32,
    pub cells: usize,
    pub m_min: u32,
    pub m_max: u32,
    pub tau_fy: f64,
    pub tau_u: f64,
    pub tau_u_metropolis: f64,
    pub tau_fy_metropolis: f64,
    /// m²(IJ)²/n² τ_U^M ≤ τ_U ≤ M²(IJ)²/n² τ_U^M.
    pub uniform_bounds: (f64, f64),
    /// n²/((IJ)²M⁴) τ_FY^M ≤ τ_FY ≤ n²/((IJ)²m⁴) τ_FY^M.
    pub fisher_yates_bounds: (f64, f64),
    pub uniform_holds: bool,
    pub fisher_yates_holds: bool,
    /// Set on a single-state space, where nothing is compared.
    pub skipped: bool,
}

/// Relative slack allowed on each inequality.
pub const COMPARISON_TOLERANCE: f64 = 1e-9;

pub fn relaxation_comparison(lambda: &[u32], mu: &[u32]) -> Result<ComparisonReport> {
    let kernels = [
        KernelKind::RandomTranspositions,
        KernelKind::UniformSwap,
        KernelKind::MetropolisUniform,
        KernelKind::MetropolisFisherYates,
    ]
    .map(|kind| table_kernel(kind, lambda, mu));
    let [fy, u, um, fym] = kernels;
    let (fy, u, um, fym) = (fy?, u?, um?, fym?);
    let tables = fy.states();
    let n: u32 = lambda.iter().sum();
    let cells = lambda.iter().filter(|&&v| v > 0).count() * mu.iter().filter(|&&v| v > 0).count();
    let m_min = min_positive_entry_over_tables(tables).unwrap_or(0);
    let m_max = max_entry_over_tables(tables).unwrap_or(0);
    if tables.len() <= 1 {
        return Ok(ComparisonReport {
            states: tables.len(),
            n,
            cells,
            m_min,
            m_max,
            tau_fy: 1.0,
            tau_u: 1.0,
            tau_u_metropolis: 1.0,
            tau_fy_metropolis: 1.0,
            uniform_bounds: (0.0, 0.0),
            fisher_yates_bounds: (0.0, 0.0),
            uniform_holds: true,
            fisher_yates_holds: true,
            skipped: true,
        });
    }
    if m_min == 0 {
        return Err(Error::InvalidParameter("all tables are empty".into()));
    }
    let tau_fy = relaxation_time(&fy)?;
    let tau_u = relaxation_time(&u)?;
    let tau_um = relaxation_time(&um)?;
    let tau_fym = relaxation_time(&fym)?;
    let (nf, ij) = (f64::from(n), cells as f64);
    let (lo, hi) = (f64::from(m_min), f64::from(m_max));
    let uniform_bounds = (lo * lo * ij * ij / (nf * nf) * tau_um, hi * hi * ij * ij / (nf * nf) * tau_um);
    let fisher_yates_bounds = (
        nf * nf / (ij * ij * hi.powi(4)) * tau_fym,
        nf * nf / (ij * ij * lo.powi(4)) * tau_fym,
    );
    let within = |(a, b): (f64, f64), x: f64| {
        a <= x * (1.0 + COMPARISON_TOLERANCE) && x <= b * (1.0 + COMPARISON_TOLERANCE)
    };
    Ok(ComparisonReport {
        states: tables.len(),
        n,
        cells,
        m_min,
        m_max,
        tau_fy,
        tau_u,
        tau_u_metropolis: tau_um,
        tau_fy_metropolis: tau_fym,
        uniform_holds: within(uniform_bounds, tau_u),
        fisher_yates_holds: within(fisher_yates_bounds, tau_fy),
        uniform_bounds,
        fisher_yates_bounds,
        skipped: false,
    })
}
