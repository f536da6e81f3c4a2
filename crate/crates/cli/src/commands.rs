//! One adapter per subcommand: parse, call the library, format.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use coset_chains::chains::{check_three_way, simulate_trajectory, table_kernel, to_json_lines};
use coset_chains::mixing::{
    avg_chi2_bound, distance_profile, chi2_spectral_bound, empirical_tv, evolve_distribution,
    extreme_state_bounds, extreme_state_table, point_mass, relaxation_comparison, second_eigenvalue_modulus,
    t_mix, wilson_lower_bound, ExactBudget, MixingTime,
};
use coset_chains::rational::{fraction_string, parse_rational, rat, to_f64};
use coset_chains::spectral::{brute_force_spectrum, spectrum, spectrum_matches};
use coset_chains::stats::{
    builtin, chi2_decomposition, chi2_p_value, degrees_of_freedom, pearson_residuals, quadratic_residual_panel,
    PanelOptions,
};
use coset_chains::tables::{
    chi_square_statistic, count_tables, coset_size, enumerate_tables, fisher_yates_pmf, load_table,
    max_states, sample_fisher_yates, TableFormat,
};
use coset_chains::{ChainKernel, ContingencyTable, KernelKind, Rational};

use crate::error::{CliError, Result};
use crate::output::{align, Format, Sink};
use crate::{Command, Margins, OptionalMargins, Output, Start};

/// Tolerance for comparing brute-force and closed-form eigenvalues.
const SPECTRUM_TOLERANCE: f64 = 1e-9;
/// Horizon for the exact t_mix printed next to Wilson bounds.
const WILSON_T_MAX: usize = 2_000;

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Enumerate { margins, count_only, output } => enumerate(&margins, count_only, &output),
        Command::Pmf { margins, start, output } => pmf(&margins, &start, &output),
        Command::Sample { margins, count, seed, output } => sample(&margins, count, seed, &output),
        Command::Spectrum { margins, brute_force, output } => spectrum_cmd(&margins, brute_force, &output),
        Command::Evolve { margins, start, steps, chain, trajectory, seed, output } => {
            evolve(&margins, &start, steps, &chain, trajectory, seed, &output)
        }
        Command::Mix { margins, start, t_max, chain, paths, jobs, seed, eps, output } => {
            let mc = (paths > 0).then_some(MonteCarlo { paths, jobs, seed });
            mix(&margins, &start, t_max, &chain, mc, eps.as_deref(), &output)
        }
        Command::Wilson { margins, cell, c, with_exact, output } => {
            wilson(&margins, cell.as_deref(), c, with_exact, &output)
        }
        Command::Bounds { margins, c, output } => bounds(&margins, c, &output),
        Command::Compare { margins, output } => compare(&margins, &output),
        Command::Analyze { dataset, table, state, panel, draws, seed, output } => {
            let t = match (dataset.as_deref(), table.as_deref(), state.as_deref()) {
                (Some(name), _, _) => builtin(name)?.table,
                (_, Some(path), _) => read_table(path)?,
                (_, _, Some(s)) => parse_state(s)?,
                _ => return Err(CliError::Usage("analyze needs --dataset, --table or --state".into())),
            };
            let labels = dataset.as_deref().map(builtin).transpose()?.map(|d| (d.row_labels, d.col_labels));
            let panel = panel.then_some(PanelOptions { draws, seed, ..PanelOptions::default() });
            analyze(&t, labels, panel, &output)
        }
        Command::ThreeWay { margins, layers, output } => three_way(&margins, &layers, &output),
    }
}

fn prob(r: &Rational, exact: bool) -> String {
    if exact {
        fraction_string(r)
    } else {
        to_f64(r).to_string()
    }
}

fn read_table(path: &Path) -> Result<ContingencyTable> {
    Ok(load_table(path, TableFormat::from_path(path))?)
}

fn parse_state(s: &str) -> Result<ContingencyTable> {
    Ok(s.parse::<ContingencyTable>()?)
}

fn parse_chain(name: &str) -> Result<KernelKind> {
    Ok(name.parse::<KernelKind>()?)
}

/// The table named by `--table`/`--state`, checked against any margins given.
fn given_table(margins: &OptionalMargins, start: &Start) -> Result<Option<ContingencyTable>> {
    let t = match (&start.table, &start.state) {
        (Some(p), _) => read_table(p)?,
        (_, Some(s)) => parse_state(s)?,
        _ => return Ok(None),
    };
    if let Some(rows) = &margins.rows {
        if rows.as_slice() != t.row_sums() {
            return Err(CliError::Usage(format!("table row sums {:?} differ from --rows {rows:?}", t.row_sums())));
        }
    }
    if let Some(cols) = &margins.cols {
        if cols.as_slice() != t.col_sums() {
            return Err(CliError::Usage(format!(
                "table column sums {:?} differ from --cols {cols:?}",
                t.col_sums()
            )));
        }
    }
    Ok(Some(t))
}

fn required_margins(margins: &OptionalMargins) -> Result<(Vec<u32>, Vec<u32>)> {
    match (&margins.rows, &margins.cols) {
        (Some(r), Some(c)) => Ok((r.clone(), c.clone())),
        _ => Err(CliError::Usage("give --rows and --cols, or a starting table".into())),
    }
}

/// Kernel for the margins of the start, and the start's index in it.
fn kernel_and_start(
    kind: KernelKind,
    margins: &OptionalMargins,
    start: &Start,
) -> Result<(ChainKernel<ContingencyTable>, usize)> {
    if let Some(t) = given_table(margins, start)? {
        let k = table_kernel(kind, t.row_sums(), t.col_sums())?;
        let x0 = k.index_of(&t).ok_or_else(|| CliError::Compute(format!("{t} is not among the enumerated states")))?;
        return Ok((k, x0));
    }
    let (rs, cs) = required_margins(margins)?;
    let k = table_kernel(kind, &rs, &cs)?;
    let x0 = start.start.unwrap_or(0);
    if x0 >= k.len() {
        return Err(CliError::Usage(format!("--start {x0} outside the {} states", k.len())));
    }
    Ok((k, x0))
}

fn enumerate(m: &Margins, count_only: bool, out: &Output) -> Result<()> {
    let mut sink = Sink::open(out.out.as_deref())?;
    if count_only {
        let count = count_tables(&m.rows, &m.cols)?;
        match out.format {
            Format::Json => sink.json(&json!({ "count": count.to_string() }))?,
            Format::Text | Format::Csv => sink.line(count.to_string())?,
        }
        return Ok(sink.finish()?);
    }
    let tables = enumerate_tables(&m.rows, &m.cols)?;
    let records: Vec<Vec<String>> = tables
        .iter()
        .enumerate()
        .map(|(i, t)| vec![i.to_string(), t.to_string(), coset_size(t).to_string(), prob(&fisher_yates_pmf(t), out.exact)])
        .collect();
    match out.format {
        Format::Json => {
            let v: Vec<_> = tables
                .iter()
                .zip(&records)
                .enumerate()
                .map(|(i, (t, r))| json!({ "index": i, "rows": t.to_rows(), "coset_size": r[2], "pmf": r[3] }))
                .collect();
            sink.json(&v)?;
        }
        Format::Csv => sink.csv(&["index", "table", "coset_size", "pmf"], &records)?,
        Format::Text => {
            let mut rows = vec![vec!["index".into(), "table".into(), "coset_size".into(), "pmf".into()]];
            rows.extend(records);
            for l in align(&rows) {
                sink.line(l)?;
            }
        }
    }
    Ok(sink.finish()?)
}

fn pmf(margins: &OptionalMargins, start: &Start, out: &Output) -> Result<()> {
    let tables = match given_table(margins, start)? {
        Some(t) => vec![t],
        None => {
            let (rs, cs) = required_margins(margins)?;
            let all = enumerate_tables(&rs, &cs)?;
            match start.start {
                Some(i) => vec![all
                    .get(i)
                    .cloned()
                    .ok_or_else(|| CliError::Usage(format!("--start {i} outside the {} states", all.len())))?],
                None => all,
            }
        }
    };
    let records: Vec<Vec<String>> =
        tables.iter().map(|t| vec![t.to_string(), prob(&fisher_yates_pmf(t), out.exact)]).collect();
    let mut sink = Sink::open(out.out.as_deref())?;
    match out.format {
        Format::Json => {
            let v: Vec<_> =
                tables.iter().zip(&records).map(|(t, r)| json!({ "rows": t.to_rows(), "pmf": r[1] })).collect();
            sink.json(&v)?;
        }
        Format::Csv => sink.csv(&["table", "pmf"], &records)?,
        Format::Text => {
            for l in align(&records) {
                sink.line(l)?;
            }
        }
    }
    Ok(sink.finish()?)
}

fn sample(m: &Margins, count: usize, seed: u64, out: &Output) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws = (0..count)
        .map(|_| sample_fisher_yates(&m.rows, &m.cols, &mut rng))
        .collect::<coset_chains::Result<Vec<_>>>()?;
    let mut sink = Sink::open(out.out.as_deref())?;
    match out.format {
        Format::Json => sink.json(&draws.iter().map(ContingencyTable::to_rows).collect::<Vec<_>>())?,
        Format::Csv => {
            let records: Vec<Vec<String>> =
                draws.iter().enumerate().map(|(i, t)| vec![i.to_string(), t.to_string()]).collect();
            sink.csv(&["draw", "table"], &records)?;
        }
        Format::Text => {
            for t in &draws {
                sink.line(t.to_string())?;
            }
        }
    }
    Ok(sink.finish()?)
}

fn spectrum_cmd(m: &Margins, brute_force: bool, out: &Output) -> Result<()> {
    let s = spectrum(&m.rows, &m.cols)?;
    let check = if brute_force {
        let k = table_kernel(KernelKind::RandomTranspositions, &m.rows, &m.cols)?;
        let eig = brute_force_spectrum(&k)?;
        Some(spectrum_matches(&s, &eig, SPECTRUM_TOLERANCE))
    } else {
        None
    };
    let mut sink = Sink::open(out.out.as_deref())?;
    match out.format {
        Format::Json => match check {
            Some(ok) => sink.json(&json!({ "spectrum": s.to_json(), "brute_force_match": ok }))?,
            None => sink.json(&s.to_json())?,
        },
        Format::Csv => {
            let records: Vec<Vec<String>> = s
                .entries
                .iter()
                .map(|e| {
                    vec![
                        e.partition.to_string(),
                        fraction_string(&e.beta),
                        to_f64(&e.beta).to_string(),
                        e.multiplicity.to_string(),
                    ]
                })
                .collect();
            sink.csv(&["partition", "beta", "beta_float", "multiplicity"], &records)?;
        }
        Format::Text => {
            let mut rows = vec![vec!["rho".into(), "beta".into(), "float".into(), "multiplicity".into()]];
            rows.extend(s.entries.iter().map(|e| {
                vec![
                    e.partition.to_string(),
                    fraction_string(&e.beta),
                    format!("{:.6}", to_f64(&e.beta)),
                    e.multiplicity.to_string(),
                ]
            }));
            for l in align(&rows) {
                sink.line(l)?;
            }
            if let Some(ok) = check {
                sink.line(format!("brute force: {}", if ok { "match" } else { "MISMATCH" }))?;
            }
        }
    }
    sink.finish()?;
    match check {
        Some(false) => Err(CliError::Compute("brute-force eigenvalues differ from the closed form".into())),
        _ => Ok(()),
    }
}

fn evolve(
    margins: &OptionalMargins,
    start: &Start,
    steps: usize,
    chain: &str,
    trajectory: bool,
    seed: u64,
    out: &Output,
) -> Result<()> {
    let kind = parse_chain(chain)?;
    let mut sink = Sink::open(out.out.as_deref())?;
    if trajectory {
        // Paths need only the start; the kernel is built only to label states.
        let (k, x0) = kernel_and_start(kind, margins, start)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let records = simulate_trajectory(kind, k.state(x0), steps, &mut rng, Some(&k));
        match out.format {
            Format::Csv => {
                let rows: Vec<Vec<String>> = records
                    .iter()
                    .map(|r| {
                        let t = ContingencyTable::from_rows(r.entries.clone()).map(|t| t.to_string());
                        vec![
                            r.t.to_string(),
                            r.state_index.map_or_else(String::new, |i| i.to_string()),
                            t.unwrap_or_default(),
                        ]
                    })
                    .collect();
                sink.csv(&["t", "state_index", "table"], &rows)?;
            }
            Format::Json | Format::Text => sink.line(to_json_lines(&records)?.trim_end())?,
        }
        return Ok(sink.finish()?);
    }
    let (k, x0) = kernel_and_start(kind, margins, start)?;
    let ev = evolve_distribution(&k, &point_mass(k.len(), x0)?, steps, ExactBudget::default())?;
    if out.exact && ev.exact.is_none() {
        eprintln!(
            "note: exact arithmetic stopped at step {}; printing floats",
            ev.switched_at.unwrap_or_default()
        );
    }
    let cell = |i: usize| match (&ev.exact, out.exact) {
        (Some(e), true) => fraction_string(&e[i]),
        _ => ev.probs[i].to_string(),
    };
    let records: Vec<Vec<String>> =
        (0..k.len()).map(|i| vec![i.to_string(), k.state(i).to_string(), cell(i)]).collect();
    match out.format {
        Format::Json => {
            let v: Vec<_> = records
                .iter()
                .enumerate()
                .map(|(i, r)| json!({ "index": i, "rows": k.state(i).to_rows(), "probability": r[2] }))
                .collect();
            sink.json(&json!({ "chain": kind.name(), "start": x0, "steps": steps, "switched_at": ev.switched_at, "distribution": v }))?;
        }
        Format::Csv => sink.csv(&["index", "table", "probability"], &records)?,
        Format::Text => {
            for l in align(&records) {
                sink.line(l)?;
            }
        }
    }
    Ok(sink.finish()?)
}

struct MonteCarlo {
    paths: usize,
    jobs: usize,
    seed: u64,
}

#[derive(Serialize)]
struct MixRow {
    t: usize,
    tv: f64,
    chi2: f64,
    bound: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    mc_tv: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mc_ci: Option<(f64, f64)>,
}

/// Largest non-trivial eigenvalue modulus; closed form for random transpositions.
fn beta_star(kind: KernelKind, k: &ChainKernel<ContingencyTable>) -> Result<f64> {
    if kind != KernelKind::RandomTranspositions {
        return Ok(second_eigenvalue_modulus(k)?);
    }
    let s = spectrum(k.states()[0].row_sums(), k.states()[0].col_sums())?;
    Ok(s.entries
        .iter()
        .filter(|e| e.beta != rat(1, 1))
        .map(|e| to_f64(&e.beta).abs())
        .fold(0.0, f64::max))
}

fn mix(
    margins: &OptionalMargins,
    start: &Start,
    t_max: usize,
    chain: &str,
    mc: Option<MonteCarlo>,
    eps: Option<&str>,
    out: &Output,
) -> Result<()> {
    let kind = parse_chain(chain)?;
    let (k, x0) = kernel_and_start(kind, margins, start)?;
    let run = distance_profile(&k, x0, t_max, ExactBudget::default())?;
    let bstar = beta_star(kind, &k)?;
    let pi_x = to_f64(&k.stationary()[x0]);
    let empirical = match mc {
        Some(mc) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(mc.jobs)
                .build()
                .map_err(|e| CliError::Compute(e.to_string()))?;
            Some(pool.install(|| empirical_tv(&k, kind, x0, t_max, mc.paths, mc.seed))?)
        }
        None => None,
    };
    let rows: Vec<MixRow> = run
        .points
        .iter()
        .map(|p| {
            let e = empirical.as_ref().map(|v| &v[p.t]);
            MixRow {
                t: p.t,
                tv: p.tv,
                chi2: p.chi2,
                bound: chi2_spectral_bound(pi_x, bstar, p.t),
                mc_tv: e.map(|e| e.estimate),
                mc_ci: e.map(|e| (e.ci_low, e.ci_high)),
            }
        })
        .collect();
    let tmix = match eps {
        Some(s) => {
            let e = parse_rational(s)?;
            if e <= rat(0, 1) || e >= rat(1, 1) {
                return Err(CliError::Usage(format!("--eps must lie in (0, 1), got {s}")));
            }
            Some(t_mix(&k, &e, t_max, ExactBudget::default())?)
        }
        None => None,
    };
    let mut sink = Sink::open(out.out.as_deref())?;
    match out.format {
        Format::Json => sink.json(&json!({
            "chain": kind.name(),
            "start": x0,
            "beta_star": bstar,
            "switched_at": run.switched_at,
            "t_mix": tmix.map(|m| m.map(|m| json!({ "t": m.t, "exact": m.exact }))),
            "profile": rows,
        }))?,
        Format::Csv | Format::Text => {
            let mut header = vec!["t", "tv", "chi2", "bound"];
            if empirical.is_some() {
                header.extend(["mc_tv", "mc_low", "mc_high"]);
            }
            let f = |x: f64| if out.format == Format::Csv { x.to_string() } else { format!("{x:.6}") };
            let records: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    let mut v = vec![r.t.to_string(), f(r.tv), f(r.chi2), f(r.bound)];
                    if let (Some(tv), Some((lo, hi))) = (r.mc_tv, r.mc_ci) {
                        v.extend([f(tv), f(lo), f(hi)]);
                    }
                    v
                })
                .collect();
            if out.format == Format::Csv {
                sink.csv(&header, &records)?;
            } else {
                let mut all = vec![header.iter().map(|h| h.to_string()).collect()];
                all.extend(records);
                for l in align(&all) {
                    sink.line(l)?;
                }
                if let Some(m) = tmix {
                    sink.line(match m {
                        Some(m) => format!("t_mix({}) = {}{}", eps.unwrap_or_default(), m.t, if m.exact { "" } else { " (float)" }),
                        None => format!("t_mix({}) > {t_max}", eps.unwrap_or_default()),
                    })?;
                }
            }
        }
    }
    Ok(sink.finish()?)
}

fn parse_cell(s: &str, m: &Margins) -> Result<(usize, usize)> {
    let v = coset_chains::partitions::parse_list(s)?;
    match v.as_slice() {
        &[i, j] if (1..=m.rows.len()).contains(&(i as usize)) && (1..=m.cols.len()).contains(&(j as usize)) => {
            Ok((i as usize - 1, j as usize - 1))
        }
        _ => Err(CliError::Usage(format!(
            "--cell wants i,j with 1 <= i <= {} and 1 <= j <= {}, got {s:?}",
            m.rows.len(),
            m.cols.len()
        ))),
    }
}

/// Exact scan over the exact-arithmetic horizon, then a longer float scan.
fn worst_case_t_mix(k: &ChainKernel<ContingencyTable>, eps: &Rational) -> Result<Option<MixingTime>> {
    let budget = ExactBudget::default();
    if let Some(t) = t_mix(k, eps, budget.max_steps, budget)? {
        return Ok(Some(t));
    }
    Ok(t_mix(k, eps, WILSON_T_MAX, ExactBudget::FLOAT_ONLY)?)
}

fn wilson(m: &Margins, cell: Option<&str>, c: f64, with_exact: bool, out: &Output) -> Result<()> {
    let cells: Vec<(usize, usize)> = match cell {
        Some(s) => vec![parse_cell(s, m)?],
        None => (0..m.rows.len())
            .flat_map(|i| (0..m.cols.len()).map(move |j| (i, j)))
            .filter(|&(i, j)| m.rows[i] > 0 && m.cols[j] > 0)
            .collect(),
    };
    let bounds = cells
        .iter()
        .map(|&(i, j)| wilson_lower_bound(&m.rows, &m.cols, i, j, c).map(|b| (i, j, b)))
        .collect::<coset_chains::Result<Vec<_>>>()?;
    let exact = if with_exact {
        let k = table_kernel(KernelKind::RandomTranspositions, &m.rows, &m.cols)?;
        worst_case_t_mix(&k, &rat(1, 4))?
    } else {
        None
    };
    let mut sink = Sink::open(out.out.as_deref())?;
    match out.format {
        Format::Json => {
            let v: Vec<_> = bounds
                .iter()
                .map(|(i, j, b)| json!({ "cell": [i + 1, j + 1], "bound": b }))
                .collect();
            sink.json(&json!({ "c": c, "bounds": v, "t_mix": exact }))?;
        }
        Format::Csv | Format::Text => {
            let records: Vec<Vec<String>> = bounds
                .iter()
                .map(|(i, j, b)| {
                    vec![
                        (i + 1).to_string(),
                        (j + 1).to_string(),
                        format!("{:?}", b.case).to_lowercase(),
                        fraction_string(&b.log_argument),
                        b.t_lower.to_string(),
                        b.degenerate.to_string(),
                    ]
                })
                .collect();
            let header = ["i", "j", "case", "argument", "t_lower", "degenerate"];
            if out.format == Format::Csv {
                sink.csv(&header, &records)?;
            } else {
                let mut all = vec![header.iter().map(|h| h.to_string()).collect()];
                all.extend(records);
                for l in align(&all) {
                    sink.line(l)?;
                }
                if with_exact {
                    sink.line(match exact {
                        Some(m) => format!("t_mix(1/4) = {}{}", m.t, if m.exact { "" } else { " (float)" }),
                        None => format!("t_mix(1/4) > {WILSON_T_MAX}"),
                    })?;
                }
            }
        }
    }
    Ok(sink.finish()?)
}

fn bounds(m: &Margins, c: f64, out: &Output) -> Result<()> {
    let [_, k] = m.rows.as_slice() else {
        return Err(CliError::Usage("bounds needs two row sums (n-k,k)".into()));
    };
    let k = *k;
    let n: u32 = m.rows.iter().sum();
    let mut extreme = Vec::new();
    for (j, &mj) in m.cols.iter().enumerate() {
        if mj <= k {
            continue;
        }
        let b = extreme_state_bounds(k, &m.cols, j, c)?;
        extreme.push((j, extreme_state_table(k, &m.cols, j)?, b));
    }
    if extreme.is_empty() {
        return Err(CliError::Compute(format!("no column sum exceeds k = {k}, so no extreme state exists")));
    }
    let average = match m.cols.as_slice() {
        [a, b] => {
            let (lo_r, lo_c) = (k.min(n - k), (*a).min(*b));
            let (kk, ll) = (lo_r.min(lo_c), lo_r.max(lo_c));
            Some(avg_chi2_bound(kk, ll, n, c)?)
        }
        _ => None,
    };
    let mut sink = Sink::open(out.out.as_deref())?;
    match out.format {
        Format::Json => {
            let v: Vec<_> = extreme
                .iter()
                .map(|(j, t, b)| json!({ "column": j + 1, "state": t.to_rows(), "t_upper": b.t_upper, "t_lower": b.t_lower }))
                .collect();
            sink.json(&json!({ "k": k, "n": n, "c": c, "extreme": v, "average": average }))?;
        }
        Format::Csv | Format::Text => {
            let records: Vec<Vec<String>> = extreme
                .iter()
                .map(|(j, t, b)| vec![(j + 1).to_string(), t.to_string(), b.t_upper.to_string(), b.t_lower.to_string()])
                .collect();
            let header = ["column", "state", "t_upper", "t_lower"];
            if out.format == Format::Csv {
                sink.csv(&header, &records)?;
            } else {
                let mut all = vec![header.iter().map(|h| h.to_string()).collect()];
                all.extend(records);
                for l in align(&all) {
                    sink.line(l)?;
                }
                if let Some(a) = average {
                    sink.line(format!(
                        "average chi2: <= {} at t = {}; >= {} at t = {}",
                        a.upper_bound, a.t_upper, a.lower_bound, a.t_lower
                    ))?;
                }
            }
        }
    }
    Ok(sink.finish()?)
}

fn compare(m: &Margins, out: &Output) -> Result<()> {
    let r = relaxation_comparison(&m.rows, &m.cols)?;
    let mut sink = Sink::open(out.out.as_deref())?;
    let fields = [
        ("states", r.states.to_string()),
        ("m_min", r.m_min.to_string()),
        ("m_max", r.m_max.to_string()),
        ("tau_fy", r.tau_fy.to_string()),
        ("tau_u", r.tau_u.to_string()),
        ("tau_u_metropolis", r.tau_u_metropolis.to_string()),
        ("tau_fy_metropolis", r.tau_fy_metropolis.to_string()),
        ("uniform_low", r.uniform_bounds.0.to_string()),
        ("uniform_high", r.uniform_bounds.1.to_string()),
        ("fisher_yates_low", r.fisher_yates_bounds.0.to_string()),
        ("fisher_yates_high", r.fisher_yates_bounds.1.to_string()),
        ("uniform_holds", r.uniform_holds.to_string()),
        ("fisher_yates_holds", r.fisher_yates_holds.to_string()),
        ("skipped", r.skipped.to_string()),
    ];
    match out.format {
        Format::Json => sink.json(&r)?,
        Format::Csv => {
            let header: Vec<&str> = fields.iter().map(|(k, _)| *k).collect();
            sink.csv(&header, &[fields.iter().map(|(_, v)| v.clone()).collect()])?;
        }
        Format::Text => {
            let rows: Vec<Vec<String>> = fields.iter().map(|(k, v)| vec![k.to_string(), v.clone()]).collect();
            for l in align(&rows) {
                sink.line(l)?;
            }
        }
    }
    Ok(sink.finish()?)
}

type Labels = (Vec<&'static str>, Vec<&'static str>);

fn analyze(t: &ContingencyTable, labels: Option<Labels>, panel: Option<PanelOptions>, out: &Output) -> Result<()> {
    let chi2 = chi_square_statistic(t);
    let df = degrees_of_freedom(t);
    let p = chi2_p_value(to_f64(&chi2), df)?;
    let residuals = pearson_residuals(t)?;
    let decomposition = chi2_decomposition(t)?;
    let panel = panel.map(|o| quadratic_residual_panel(t, o)).transpose()?;
    let (row_labels, col_labels): (Vec<String>, Vec<String>) = match &labels {
        Some((r, c)) => (r.iter().map(|s| s.to_string()).collect(), c.iter().map(|s| s.to_string()).collect()),
        None => ((1..=t.rows()).map(|i| i.to_string()).collect(), (1..=t.cols()).map(|j| j.to_string()).collect()),
    };
    let mut sink = Sink::open(out.out.as_deref())?;
    match out.format {
        Format::Json => sink.json(&json!({
            "table": t.to_rows(),
            "chi2": { "fraction": fraction_string(&chi2), "float": to_f64(&chi2) },
            "df": df,
            "p_value": p,
            "residuals": residuals,
            "decomposition": decomposition,
            "panel": panel,
        }))?,
        Format::Csv => {
            let mut records = Vec::new();
            for (i, row) in residuals.iter().enumerate() {
                for (j, r) in row.iter().enumerate() {
                    records.push(vec![
                        row_labels[i].clone(),
                        col_labels[j].clone(),
                        t.get(i, j).to_string(),
                        r.to_string(),
                    ]);
                }
            }
            sink.csv(&["row", "col", "observed", "residual"], &records)?;
        }
        Format::Text => {
            sink.line(format!("chi2 = {} ({})", to_f64(&chi2), fraction_string(&chi2)))?;
            sink.line(format!("df = {df}, p = {p:.6}"))?;
            sink.line("")?;
            sink.line("Pearson residuals")?;
            let mut grid = vec![std::iter::once(String::new()).chain(col_labels.iter().cloned()).collect::<Vec<_>>()];
            for (i, row) in residuals.iter().enumerate() {
                grid.push(std::iter::once(row_labels[i].clone()).chain(row.iter().map(|r| format!("{r:.3}"))).collect());
            }
            for l in align(&grid) {
                sink.line(l)?;
            }
            sink.line("")?;
            sink.line("chi2 decomposition")?;
            let parts = [
                ("quadratic", &decomposition.quadratic),
                ("linear", &decomposition.linear),
                ("constant", &decomposition.constant),
            ];
            let rows: Vec<Vec<String>> = parts
                .iter()
                .map(|(name, v)| vec![name.to_string(), format!("{:.6}", to_f64(v))])
                .collect();
            for l in align(&rows) {
                sink.line(l)?;
            }
            if let Some(panel) = &panel {
                sink.line("")?;
                sink.line(format!("normalized quadratic residuals ({:?})", panel.normalization))?;
                let mut rows = vec![vec!["kind".into(), "raw".into(), "sd".into(), "value".into()]];
                rows.extend(panel.entries.iter().map(|e| {
                    vec![e.kind.clone(), format!("{:.4}", e.raw), format!("{:.4}", e.sd), format!("{:.4}", e.value)]
                }));
                for l in align(&rows) {
                    sink.line(l)?;
                }
            }
        }
    }
    Ok(sink.finish()?)
}

fn three_way(m: &Margins, layers: &[u32], out: &Output) -> Result<()> {
    let r = check_three_way(&m.rows, &m.cols, layers, max_states())?;
    let mut sink = Sink::open(out.out.as_deref())?;
    let fields = [
        ("states", r.states.to_string()),
        ("rows_stochastic", r.rows_stochastic.to_string()),
        ("detailed_balance", r.detailed_balance.to_string()),
        ("irreducible", r.irreducible.to_string()),
    ];
    match out.format {
        Format::Json => sink.json(&json!({
            "states": r.states,
            "rows_stochastic": r.rows_stochastic,
            "detailed_balance": r.detailed_balance,
            "irreducible": r.irreducible,
        }))?,
        Format::Csv => {
            let header: Vec<&str> = fields.iter().map(|(k, _)| *k).collect();
            sink.csv(&header, &[fields.iter().map(|(_, v)| v.clone()).collect()])?;
        }
        Format::Text => {
            let rows: Vec<Vec<String>> = fields.iter().map(|(k, v)| vec![k.to_string(), v.clone()]).collect();
            for l in align(&rows) {
                sink.line(l)?;
            }
        }
    }
    sink.finish()?;
    if r.passed() {
        Ok(())
    } else {
        Err(CliError::Compute("three-way chain check failed".into()))
    }
}
