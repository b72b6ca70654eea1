//! One function per subcommand. Each writes its data files into the run's
//! output directory and returns the exit status.

use efc_core::equilibrium::{
    stationary_distribution, theorem_diagnostics, time_to_stationarity, transient_distribution, Distribution,
};
use efc_core::measures::{comes_down_diagnostic, validate_characteristics, BlockRateOptions};
use efc_core::scalar::Exact;
use efc_core::simulator::{
    dust_chain_from_characteristics, logistic_hitting_time, run_ensemble, simulate_dust_chain, simulate_dust_sde,
    simulate_path, LogisticParams, LogisticStart, MeanEstimate, PathOptions, Trajectory,
};
use efc_core::{build_generator, compatibility_gaps, Characteristics, Execution, RateEngine};
use serde::Serialize;

use crate::config::{parse_init, ExperimentConfig, StartSpec};
use crate::error::CliError;
use crate::output::{Cell, OutputDir, Table};

pub struct Context<'a> {
    pub config: &'a ExperimentConfig,
    pub seed: Option<u64>,
    pub exec: Execution,
}

impl Context<'_> {
    fn chars(&self) -> &Characteristics {
        &self.config.characteristics
    }

    fn seed(&self, command: &str) -> Result<u64, CliError> {
        self.seed.ok_or_else(|| {
            CliError::Config(format!("{command} is stochastic: give a seed in the config or with --seed"))
        })
    }
}

/// Result of a command that ran to completion. A nonzero `exit_code` marks a
/// check that failed after all files were written.
pub struct Outcome {
    pub exit_code: i32,
    pub message: String,
}

impl Outcome {
    fn ok(message: impl Into<String>) -> Self {
        Self {
            exit_code: 0,
            message: message.into(),
        }
    }
}

/// Rejects invalid characteristics before any command does work.
pub fn require_valid(chars: &Characteristics) -> Result<(), CliError> {
    let report = validate_characteristics(chars);
    if report.is_valid() {
        Ok(())
    } else {
        Err(CliError::Validation(Box::new(report)))
    }
}

/// `points` equally spaced times on `[0, horizon]`.
fn grid(horizon: f64, points: usize) -> Result<Vec<f64>, CliError> {
    if points < 2 {
        return Err(CliError::Config(format!("grid_points = {points} must be at least 2")));
    }
    Ok((0..points).map(|i| horizon * i as f64 / (points - 1) as f64).collect())
}

fn mean_row(t: f64, xs: &[f64]) -> Vec<Cell> {
    let est = MeanEstimate::from_samples(xs);
    vec![t.into(), est.mean.into(), est.std_err.into()]
}

pub fn validate(ctx: &Context, out: &mut OutputDir) -> Result<Outcome, CliError> {
    let report = validate_characteristics(ctx.chars());
    out.json("validation.json", &report)?;
    if report.is_valid() {
        Ok(Outcome::ok(format!("characteristics are valid ({} notes)", report.notes.len())))
    } else {
        Err(CliError::Validation(Box::new(report)))
    }
}

pub fn rates(ctx: &Context, out: &mut OutputDir) -> Result<Outcome, CliError> {
    let n = ctx.config.rates.n;
    let g = build_generator(ctx.chars(), n, ctx.exec)?;
    let mut states = Table::new(&["index", "partition"]);
    for (i, p) in g.states().iter().enumerate() {
        states.push(vec![i.into(), p.to_string().into()]);
    }
    let mut entries = Table::new(&["from", "to", "rate"]);
    for i in 0..g.len() {
        let (cols, vals) = g.row(i);
        let mut diag = Some(-g.exit_rate(i));
        for (&j, &r) in cols.iter().zip(vals) {
            if j > i {
                if let Some(d) = diag.take() {
                    entries.push(vec![i.into(), i.into(), d.into()]);
                }
            }
            entries.push(vec![i.into(), j.into(), r.into()]);
        }
        if let Some(d) = diag {
            entries.push(vec![i.into(), i.into(), d.into()]);
        }
    }
    out.table("states", &states)?;
    out.table("generator", &entries)?;
    Ok(Outcome::ok(format!(
        "n = {n}: {} states, {} off-diagonal rates",
        g.len(),
        g.nnz_off_diagonal()
    )))
}

pub fn stationary(ctx: &Context, out: &mut OutputDir) -> Result<Outcome, CliError> {
    let params = &ctx.config.stationary;
    let n = params.n;
    if n < 2 {
        return Err(CliError::Config(format!("stationary.n = {n} must be at least 2")));
    }
    let k_max = params.k_max.unwrap_or(4.min(n - 1));
    let b_max = params.b_max.unwrap_or(5.min(n - 1));
    let report = theorem_diagnostics(ctx.chars(), n, k_max, b_max, ctx.exec)?;
    let g = build_generator(ctx.chars(), n, ctx.exec)?;

    let mut weights = Table::new(&["index", "partition", "weight"]);
    for (i, (p, w)) in g.states().iter().zip(report.stationary.distribution.weights()).enumerate() {
        weights.push(vec![i.into(), p.to_string().into(), (*w).into()]);
    }
    let mut counts = Table::new(&["k", "mass"]);
    for (k, a) in report.block_counts.iter().enumerate() {
        counts.push(vec![(k + 1).into(), (*a).into()]);
    }
    out.table("stationary", &weights)?;
    out.table("block_counts", &counts)?;
    out.json("report.json", &report)?;
    Ok(Outcome::ok(format!(
        "n = {n}: {:?} solve over {} states, residual {:e}",
        report.stationary.method,
        g.len(),
        report.stationary.residual
    )))
}

#[derive(Serialize)]
struct TransientReport {
    n: usize,
    init: String,
    threshold: f64,
    t_max: f64,
    t_reached: Option<f64>,
    truncation_error: f64,
}

pub fn transient(ctx: &Context, out: &mut OutputDir) -> Result<Outcome, CliError> {
    let params = &ctx.config.transient;
    let init_state = parse_init(&params.init, params.n)?;
    let g = build_generator(ctx.chars(), params.n, ctx.exec)?;
    let init = Distribution::dirac(params.n, &init_state);

    let mut law = Table::new(&["time", "index", "partition", "weight"]);
    let mut truncation = 0.0f64;
    for &t in &params.times {
        let step = transient_distribution(&g, &init, t, params.tolerance)?;
        truncation = truncation.max(step.truncation_error);
        for (i, (p, w)) in g.states().iter().zip(step.distribution.weights()).enumerate() {
            law.push(vec![t.into(), i.into(), p.to_string().into(), (*w).into()]);
        }
    }
    let target = stationary_distribution(&g)?.distribution;
    let conv = time_to_stationarity(&g, &init, &target, params.threshold, params.t_max)?;
    let mut tv = Table::new(&["time", "tv"]);
    for &(t, d) in &conv.grid {
        tv.push(vec![t.into(), d.into()]);
    }
    out.table("transient", &law)?;
    out.table("convergence", &tv)?;
    out.json(
        "report.json",
        &TransientReport {
            n: params.n,
            init: init_state.to_string(),
            threshold: params.threshold,
            t_max: params.t_max,
            t_reached: conv.t_reached,
            truncation_error: truncation.max(conv.truncation_error),
        },
    )?;
    let reached = conv
        .t_reached
        .map_or_else(|| format!("not reached by t = {}", params.t_max), |t| format!("reached at t = {t}"));
    Ok(Outcome::ok(format!("TV <= {} {reached}", params.threshold)))
}

#[derive(Serialize)]
struct SimulationReport {
    n: usize,
    paths: usize,
    seed: u64,
    horizon: f64,
    mean_jumps: f64,
    absorbed: usize,
    truncated: usize,
}

pub fn simulate(ctx: &Context, out: &mut OutputDir) -> Result<Outcome, CliError> {
    let params = &ctx.config.simulate;
    let seed = ctx.seed("simulate")?;
    if params.paths == 0 {
        return Err(CliError::Config("simulate.paths must be positive".into()));
    }
    let init = parse_init(&params.init, params.n)?;
    let mut opts = PathOptions::new(params.mode, params.horizon);
    opts.track_dust = params.track_dust;
    if let Some(m) = params.max_jumps {
        opts.max_jumps = m;
    }
    let times = grid(params.horizon, params.grid_points)?;
    let chars = ctx.chars();
    let paths: Vec<Trajectory> = run_ensemble(params.paths, ctx.exec, |i| {
        simulate_path(chars, params.n, &init, &opts, seed, i)
    })
    .into_iter()
    .collect::<Result<_, _>>()?;

    let n = params.n as f64;
    let mut summary = Table::new(&[
        "time",
        "block_count_mean",
        "block_count_std_err",
        "singleton_fraction_mean",
        "singleton_fraction_std_err",
        "dust_fraction_mean",
        "dust_fraction_std_err",
    ]);
    for &t in &times {
        let at: Vec<usize> = paths.iter().map(|p| p.index_at(t)).collect();
        let blocks: Vec<f64> = paths.iter().zip(&at).map(|(p, &i)| p.block_counts[i] as f64).collect();
        let singles: Vec<f64> = paths.iter().zip(&at).map(|(p, &i)| p.singleton_counts[i] as f64 / n).collect();
        let b = MeanEstimate::from_samples(&blocks);
        let s = MeanEstimate::from_samples(&singles);
        let mut row = vec![t.into(), b.mean.into(), b.std_err.into(), s.mean.into(), s.std_err.into()];
        if params.track_dust {
            let dust: Vec<f64> = paths
                .iter()
                .zip(&at)
                .map(|(p, &i)| p.dust_counts.as_ref().expect("tracked")[i] as f64 / n)
                .collect();
            let d = MeanEstimate::from_samples(&dust);
            row.extend([d.mean.into(), d.std_err.into()]);
        } else {
            row.extend([Cell::Empty, Cell::Empty]);
        }
        summary.push(row);
    }
    out.table("summary", &summary)?;

    let mut first = Vec::new();
    paths[0].write_csv(&mut first).expect("write to memory");
    out.write("path_0.csv", &first)?;
    let mut log = Vec::new();
    paths[0].write_event_log(&mut log).expect("write to memory");
    out.write("events_0.csv", &log)?;

    let report = SimulationReport {
        n: params.n,
        paths: paths.len(),
        seed,
        horizon: params.horizon,
        mean_jumps: paths.iter().map(|p| p.jumps() as f64).sum::<f64>() / paths.len() as f64,
        absorbed: paths.iter().filter(|p| p.absorbed).count(),
        truncated: paths.iter().filter(|p| p.truncated).count(),
    };
    out.json("report.json", &report)?;
    Ok(Outcome::ok(format!(
        "{} paths, {:.1} jumps per path, {} truncated",
        report.paths, report.mean_jumps, report.truncated
    )))
}

pub fn dust_chain(ctx: &Context, out: &mut OutputDir) -> Result<Outcome, CliError> {
    let params = &ctx.config.dust_chain;
    let seed = ctx.seed("dust-chain")?;
    let chain = dust_chain_from_characteristics(ctx.chars(), params.n)?;
    let times = grid(params.horizon, params.grid_points)?;

    let mut rates = Table::new(&["k", "to", "rate"]);
    for k in 0..=chain.n {
        for (r, q) in chain.down_rates(k).into_iter().enumerate() {
            if q > 0.0 {
                rates.push(vec![k.into(), r.into(), q.into()]);
            }
        }
        if k < chain.n && chain.up_rate(k) > 0.0 {
            rates.push(vec![k.into(), (k + 1).into(), chain.up_rate(k).into()]);
        }
    }
    let paths = run_ensemble(params.paths, ctx.exec, |i| {
        simulate_dust_chain(&chain, params.k0, params.horizon, seed, i)
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    let mut summary = Table::new(&["time", "mean", "std_err"]);
    for &t in &times {
        let xs: Vec<f64> = paths.iter().map(|p| p.value_at(t)).collect();
        summary.push(mean_row(t, &xs));
    }
    out.table("rates", &rates)?;
    out.table("summary", &summary)?;
    let last = summary.len();
    Ok(Outcome::ok(format!("{} paths of K_t / n on {last} grid times", paths.len())))
}

pub fn dust_sde(ctx: &Context, out: &mut OutputDir) -> Result<Outcome, CliError> {
    let params = &ctx.config.dust_sde;
    let seed = ctx.seed("dust-sde")?;
    let retention = dust_chain_from_characteristics(ctx.chars(), 1)?.retention;
    let c_e = ctx.chars().c_e;
    let times = grid(params.horizon, params.grid_points)?;
    let paths = run_ensemble(params.paths, ctx.exec, |i| {
        simulate_dust_sde(c_e, &retention, params.d0, params.horizon, seed, i)
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    let mut summary = Table::new(&["time", "mean", "std_err"]);
    for &t in &times {
        let xs: Vec<f64> = paths.iter().map(|p| p.value_at(t)).collect();
        summary.push(mean_row(t, &xs));
    }
    out.table("summary", &summary)?;
    Ok(Outcome::ok(format!("{} paths of the dust proportion", paths.len())))
}

pub fn logistic(ctx: &Context, out: &mut OutputDir) -> Result<Outcome, CliError> {
    let params = &ctx.config.logistic;
    let seed = ctx.seed("logistic")?;
    let chain = LogisticParams::from_characteristics(ctx.chars())?;
    let start = match &params.start {
        StartSpec::Count(0) => return Err(CliError::Config("logistic.start must be positive".into())),
        StartSpec::Count(i) => LogisticStart::Count(*i),
        StartSpec::Named(s) if s == "large" => LogisticStart::Large { n_big: params.n_big },
        StartSpec::Named(s) => {
            return Err(CliError::Config(format!(
                "logistic.start = {s:?}: expected a positive integer or \"large\""
            )))
        }
    };
    let taus = run_ensemble(params.paths, ctx.exec, |i| {
        logistic_hitting_time(&chain, start, params.horizon, seed, i)
    });
    let mut table = Table::new(&["path", "tau"]);
    for (i, tau) in taus.iter().enumerate() {
        table.push(vec![i.into(), (*tau).into()]);
    }
    let hits: Vec<f64> = taus.iter().flatten().copied().collect();
    let est = MeanEstimate::from_samples(&hits);
    let mut summary = Table::new(&["start", "split_rate", "c_k", "paths", "hits", "mean_tau", "std_err"]);
    summary.push(vec![
        start.level().into(),
        chain.split_rate().into(),
        chain.c_k.into(),
        taus.len().into(),
        hits.len().into(),
        (!hits.is_empty()).then_some(est.mean).into(),
        (!hits.is_empty()).then_some(est.std_err).into(),
    ]);
    out.table("hitting_times", &table)?;
    out.table("summary", &summary)?;
    Ok(Outcome::ok(format!(
        "{} of {} paths reached 1; mean hitting time {:.4}",
        hits.len(),
        taus.len(),
        est.mean
    )))
}

pub fn cdi(ctx: &Context, out: &mut OutputDir) -> Result<Outcome, CliError> {
    let params = &ctx.config.cdi;
    let sampled = params.horizon > params.exact_threshold && !ctx.chars().nu_coag.is_empty();
    let seed = if sampled { ctx.seed("cdi above the exact threshold")? } else { ctx.seed.unwrap_or(0) };
    let options = BlockRateOptions {
        exact_threshold: params.exact_threshold,
        mc_samples: params.mc_samples,
        seed,
        execution: ctx.exec,
    };
    let report = comes_down_diagnostic(ctx.chars(), params.horizon, &options)?;
    let mut table = Table::new(&["b", "lambda", "gamma", "gamma_std_err", "zeta", "method", "partial_sum"]);
    for (r, s) in report.rates.iter().zip(&report.partial_sums) {
        let method = serde_json::to_value(r.method).expect("enum serializes");
        table.push(vec![
            r.b.into(),
            r.lambda.into(),
            r.gamma.into(),
            r.gamma_std_err.into(),
            r.zeta.into(),
            method.as_str().unwrap_or_default().into(),
            (*s).into(),
        ]);
    }
    out.table("partial_sums", &table)?;
    out.json("report.json", &report)?;
    let total = report.partial_sums.last().copied().unwrap_or(0.0);
    Ok(Outcome::ok(format!(
        "partial sum to B = {}: {total}; {}",
        params.horizon, report.verdict_label
    )))
}

pub fn compat_check(ctx: &Context, out: &mut OutputDir) -> Result<Outcome, CliError> {
    let params = &ctx.config.compat_check;
    if params.n_max < 2 {
        return Err(CliError::Config(format!("compat_check.n_max = {} must be at least 2", params.n_max)));
    }
    let engine = RateEngine::<f64>::new(ctx.chars(), params.n_max, ctx.exec)?;
    let scale = build_generator(ctx.chars(), params.n_max, ctx.exec)?.max_exit_rate().max(1.0);
    let mut table = Table::new(&["arithmetic", "n", "m", "identities", "max_abs_gap", "mismatches"]);
    let mut failures = 0;
    let mut float_gap = 0.0f64;
    for l in compatibility_gaps(&engine)? {
        float_gap = float_gap.max(l.max_abs_gap);
        if l.max_abs_gap > params.tolerance * scale {
            failures += 1;
        }
        table.push(vec![
            "float".into(),
            l.n.into(),
            l.m.into(),
            l.identities.into(),
            l.max_abs_gap.into(),
            l.mismatches.into(),
        ]);
    }
    if params.exact {
        let engine = RateEngine::<Exact>::new(ctx.chars(), params.n_max, Execution::Sequential)?;
        for l in compatibility_gaps(&engine)? {
            failures += usize::from(l.mismatches > 0);
            table.push(vec![
                "exact".into(),
                l.n.into(),
                l.m.into(),
                l.identities.into(),
                l.max_abs_gap.into(),
                l.mismatches.into(),
            ]);
        }
    }
    out.table("compat", &table)?;
    let message = format!("levels up to n = {}: largest float gap {float_gap:e}", params.n_max);
    if failures > 0 {
        Ok(Outcome {
            exit_code: 3,
            message: format!("{failures} level pairs are not compatible; {message}"),
        })
    } else {
        Ok(Outcome::ok(message))
    }
}
