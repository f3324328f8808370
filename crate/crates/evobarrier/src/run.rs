//! Subcommand dispatch.

use std::io::Write;
use std::path::Path;

use evobarrier_core::builtin::BuiltinExample;
use evobarrier_core::diagnostics::{noise_decomposition, q2_diagnostics};
use evobarrier_core::fit::LineFit;
use evobarrier_core::kernel::{
    default_eps_grid, limit_distribution, spectral_scaling_check, KernelAnalysis, RoutingFunction,
};
use evobarrier_core::linalg::vec_dist_inf;
use evobarrier_core::potential::PotentialReport;
use evobarrier_core::schedule::MutationSchedule;
use evobarrier_core::simulate::simulate_chain;
use evobarrier_core::EvolutionModel;

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::experiments::{rate_experiment, Experiment, RateRun};
use crate::model_file::model_to_json;
use crate::output::{loglog_script, num, short, write_file, Curve, OutDir, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Analyze,
    Kernel,
    Simulate,
    Rate,
    Diagnose,
    EmitExample,
}

/// Streams for the text report and for warnings.
pub struct Console<'a> {
    pub out: &'a mut dyn Write,
    pub err: &'a mut dyn Write,
}

macro_rules! say {
    ($w:expr, $($arg:tt)*) => {
        writeln!($w, $($arg)*).map_err(|source| CliError::Write { path: "<stdout>".into(), source })?
    };
}

pub fn run(command: Command, cfg: &ExperimentConfig, console: &mut Console<'_>) -> Result<()> {
    match command {
        Command::Analyze => analyze(cfg, console),
        Command::Kernel => kernel(cfg, console),
        Command::Simulate => simulate(cfg, console),
        Command::Rate => rate(cfg, console),
        Command::Diagnose => diagnose(cfg, console),
        Command::EmitExample => emit_example(cfg, console),
    }
}

/// The warning printed when `2 A e(c) >= 1`.
pub fn schedule_warning(a: f64, barrier: f64) -> Option<String> {
    (2.0 * a * barrier >= 1.0).then(|| {
        format!(
            "warning: 2A e(c) = {} >= 1; the schedule violates the convergence hypothesis and the occupation measure may not converge",
            2.0 * a * barrier
        )
    })
}

fn put(w: &mut dyn Write, bytes: &[u8]) -> Result<()> {
    w.write_all(bytes).map_err(|source| CliError::Write { path: "<stdout>".into(), source })
}

fn out_dir(cfg: &ExperimentConfig) -> Result<Option<OutDir>> {
    cfg.out.as_deref().map(OutDir::create).transpose()
}

fn state_name(model: &EvolutionModel, x: usize) -> String {
    model.graph().name(x).to_string()
}

pub fn potential_tables(model: &EvolutionModel, r: &PotentialReport) -> (Table, Table) {
    let mut states = Table::new(["state", "tilde_V", "V"]);
    for x in 0..model.len() {
        states.push(vec![state_name(model, x), num(r.tilde_v[x]), num(r.v[x])]);
    }
    let mut summary = Table::new(["key", "value"]);
    let (wx, wy) = match r.energy_barrier.pair {
        Some((x, y)) => (state_name(model, x), state_name(model, y)),
        None => (String::new(), String::new()),
    };
    let s0: Vec<String> = r.s0.iter().map(|&x| state_name(model, x)).collect();
    for (k, v) in [
        ("c0", num(r.c0)),
        ("theta", num(r.theta)),
        ("energy_barrier", num(r.energy_barrier.value)),
        ("mCR", num(r.min_coradius.value)),
        ("mCR_state", state_name(model, r.min_coradius.state)),
        ("witness_x", wx),
        ("witness_y", wy),
        ("S0", s0.join(";")),
        ("eps_max", num(model.eps_max())),
    ] {
        summary.push(vec![k.into(), v]);
    }
    (states, summary)
}

fn analyze(cfg: &ExperimentConfig, con: &mut Console<'_>) -> Result<()> {
    let (model, _) = cfg.resolve_model()?;
    let r = PotentialReport::compute(model.graph(), cfg.cap())?;
    let (states, summary) = potential_tables(&model, &r);
    put(con.out, &states.to_bytes()?)?;
    say!(con.out, "c0 = {}", short(r.c0));
    say!(con.out, "theta = {}", short(r.theta));
    say!(con.out, "energy_barrier = {}", short(r.energy_barrier.value));
    if let Some((x, y)) = r.energy_barrier.pair {
        say!(con.out, "witness = ({}, {})", state_name(&model, x), state_name(&model, y));
    }
    say!(con.out, "mCR = {} (at {})", short(r.min_coradius.value), state_name(&model, r.min_coradius.state));
    say!(con.out, "eps_max = {}", short(model.eps_max()));
    if let Some(dir) = out_dir(cfg)? {
        states.write(&dir.path("analyze.csv"))?;
        summary.write(&dir.path("analyze_summary.csv"))?;
    }
    Ok(())
}

fn kernel(cfg: &ExperimentConfig, con: &mut Console<'_>) -> Result<()> {
    let (model, _) = cfg.resolve_model()?;
    if cfg.eps.is_none() && cfg.grid != Some(true) {
        return Err(CliError::Flags("kernel needs --eps or --grid".into()));
    }
    let pi_star = limit_distribution(&model, cfg.cap())?;
    let dir = out_dir(cfg)?;
    if let Some(eps) = cfg.eps {
        let a = KernelAnalysis::new(&model, eps)?;
        let bound = a.poincare_bound(&RoutingFunction::from_elevation(model.graph()))?;
        let mut table = Table::new(["state", "pi", "pi_star"]);
        for x in 0..model.len() {
            table.push(vec![state_name(&model, x), num(a.pi[x]), num(pi_star[x])]);
        }
        put(con.out, &table.to_bytes()?)?;
        say!(con.out, "eps = {eps}");
        say!(con.out, "gap = {}", short(a.gap));
        say!(con.out, "poincare_bound = {}", short(bound));
        say!(con.out, "pi_err = {}", short(vec_dist_inf(&a.pi, &pi_star)));
        say!(con.out, "poisson_residuals = {}, {}", short(a.poisson_residuals.0), short(a.poisson_residuals.1));
        say!(con.out, "stationarity_residual = {}", short(a.stationarity_residual));
        if let Some(dir) = &dir {
            table.write(&dir.path("kernel.csv"))?;
        }
    }
    if cfg.grid == Some(true) {
        let barrier = PotentialReport::compute(model.graph(), cfg.cap())?.energy_barrier.value;
        let grid = default_eps_grid(model.eps_max());
        let check = spectral_scaling_check(&model, &grid, &pi_star, barrier)?;
        let mut table = Table::new(["eps", "gap", "bound", "pi_err"]);
        for p in &check.points {
            table.push(vec![num(p.eps), num(p.gap), num(p.bound), num(p.pi_err)]);
        }
        say!(con.out, "energy_barrier = {}", short(barrier));
        say!(con.out, "gap_slope = {} (se {})", short(check.gap_fit.slope), short(check.gap_fit.slope_se));
        say!(con.out, "bound_slope = {} (se {})", short(check.bound_fit.slope), short(check.bound_fit.slope_se));
        say!(con.out, "min gap / eps^e = {}", short(check.min_constant));
        if let Some(dir) = &dir {
            table.write(&dir.path("kernel_grid.csv"))?;
            let curves = [
                Curve { csv: "kernel_grid.csv", x_column: 1, y_column: 2, title: "gap" },
                Curve { csv: "kernel_grid.csv", x_column: 1, y_column: 3, title: "Poincare bound" },
                Curve { csv: "kernel_grid.csv", x_column: 1, y_column: 4, title: "|pi_eps - pi*|" },
            ];
            let script = loglog_script("kernel_grid.png", "eps", "value", &curves, Some(&check.gap_fit));
            write_file(&dir.path("kernel_grid.gp"), script.as_bytes())?;
        } else {
            put(con.out, &table.to_bytes()?)?;
        }
    }
    Ok(())
}

struct ScheduledRun {
    model: EvolutionModel,
    schedule: MutationSchedule,
    report: PotentialReport,
    pi_star: Vec<f64>,
    initial: usize,
}

fn scheduled(cfg: &ExperimentConfig, con: &mut Console<'_>) -> Result<ScheduledRun> {
    let (model, example) = cfg.resolve_model()?;
    let schedule = cfg.schedule(&model, example.as_ref())?;
    let report = PotentialReport::compute(model.graph(), cfg.cap())?;
    if let Some(w) = schedule_warning(schedule.exponent(), report.energy_barrier.value) {
        say!(con.err, "{w}");
    }
    let pi_star = limit_distribution(&model, cfg.cap())?;
    let initial = cfg.initial_state(&model)?;
    Ok(ScheduledRun { model, schedule, report, pi_star, initial })
}

fn simulate(cfg: &ExperimentConfig, con: &mut Console<'_>) -> Result<()> {
    let s = scheduled(cfg, con)?;
    let series = simulate_chain(&s.model, &s.schedule, cfg.horizon(), cfg.seed(), s.initial)?;
    let mut table = Table::new(std::iter::once("n".to_string()).chain(s.model.graph().states().iter().cloned()));
    for (i, &n) in series.checkpoints.iter().enumerate() {
        let mut row = vec![n.to_string()];
        row.extend(series.occupation(i).into_iter().map(num));
        table.push(row);
    }
    let errors = series.errors(&s.pi_star);
    say!(con.out, "horizon = {}", cfg.horizon());
    say!(con.out, "seed = {}", cfg.seed());
    say!(con.out, "initial = {}", state_name(&s.model, s.initial));
    say!(con.out, "final_err = {}", short(errors.last().copied().unwrap_or(f64::NAN)));
    match out_dir(cfg)? {
        Some(dir) => table.write(&dir.path("simulate.csv"))?,
        None => put(con.out, &table.to_bytes()?)?,
    }
    Ok(())
}

/// `rate.csv`: checkpoint, mean error, standard error and optional term norms.
pub fn rate_table(run: &RateRun) -> Table {
    let mut header = vec!["checkpoint_n", "mean_err", "stderr"];
    if run.terms.is_some() {
        header.extend(["u0", "u1", "u2", "u3"]);
    }
    let mut table = Table::new(header);
    let e = &run.estimate;
    for i in 0..e.checkpoints.len() {
        let mut row = vec![e.checkpoints[i].to_string(), num(e.mean[i]), num(e.stderr[i])];
        if let Some(terms) = &run.terms {
            row.extend(terms[i].iter().map(|&u| num(u)));
        }
        table.push(row);
    }
    table
}

/// `replications.csv`: seed and final error of every replication.
pub fn replication_table(run: &RateRun) -> Table {
    let mut table = Table::new(["replication", "seed", "final_err"]);
    for (r, (seed, err)) in run.seeds.iter().zip(run.final_errors()).enumerate() {
        table.push(vec![r.to_string(), seed.to_string(), num(err)]);
    }
    table
}

/// Key-value summary of the slope fit.
pub fn fit_table(fit: &LineFit, half_width: f64) -> Table {
    let mut table = Table::new(["key", "value"]);
    table.push(vec!["slope".into(), num(fit.slope)]);
    table.push(vec!["slope_half_width".into(), num(half_width)]);
    table.push(vec!["intercept".into(), num(fit.intercept)]);
    table.push(vec!["points".into(), fit.points.to_string()]);
    table
}

fn rate(cfg: &ExperimentConfig, con: &mut Console<'_>) -> Result<()> {
    let s = scheduled(cfg, con)?;
    let exp = Experiment {
        model: &s.model,
        schedule: &s.schedule,
        horizon: cfg.horizon(),
        initial: s.initial,
        target: &s.pi_star,
    };
    let run = rate_experiment(&exp, cfg.reps(), cfg.seed(), cfg.workers(), cfg.terms == Some(true))?;
    let fit = &run.estimate.fit;
    say!(con.out, "replications = {}", run.estimate.replications);
    say!(con.out, "slope = {} +/- {} ({} points)", short(fit.slope), short(run.estimate.slope_half_width), fit.points);
    say!(con.out, "final_mean_err = {}", short(run.estimate.mean.last().copied().unwrap_or(f64::NAN)));
    let table = rate_table(&run);
    match out_dir(cfg)? {
        Some(dir) => {
            table.write(&dir.path("rate.csv"))?;
            replication_table(&run).write(&dir.path("replications.csv"))?;
            fit_table(fit, run.estimate.slope_half_width).write(&dir.path("rate_fit.csv"))?;
            let mut curves = vec![Curve { csv: "rate.csv", x_column: 1, y_column: 2, title: "mean error" }];
            if run.terms.is_some() {
                for (k, title) in ["U0", "U1", "U2", "U3"].iter().enumerate() {
                    curves.push(Curve { csv: "rate.csv", x_column: 1, y_column: 4 + k, title });
                }
            }
            let script = loglog_script("rate.png", "n", "|v_n - pi*|", &curves, Some(fit));
            write_file(&dir.path("rate.gp"), script.as_bytes())?;
        }
        None => put(con.out, &table.to_bytes()?)?,
    }
    Ok(())
}

fn diagnose(cfg: &ExperimentConfig, con: &mut Console<'_>) -> Result<()> {
    let s = scheduled(cfg, con)?;
    let horizon = cfg.horizon();
    let exact = cfg.exact == Some(true);
    let grid = evobarrier_core::simulate::checkpoints(horizon);
    let q2 = q2_diagnostics(&s.model, &s.schedule, &grid, &s.pi_star, s.report.energy_barrier.value, s.report.theta)?;
    let noise = noise_decomposition(&s.model, &s.schedule, horizon, cfg.seed(), s.initial, &s.pi_star, exact)?;

    let mut q2_table = Table::new(["n", "q_norm", "dp_norm", "pi_err", "dpi_norm", "update_residual"]);
    for r in &q2.rows {
        q2_table.push(vec![
            r.n.to_string(),
            num(r.q_norm),
            num(r.dp_norm),
            num(r.pi_err),
            num(r.dpi_norm),
            num(r.update_residual),
        ]);
    }
    let mut noise_table = Table::new(["n", "u0", "u1", "u2", "u3", "error", "residual"]);
    for r in &noise.rows {
        let mut row = vec![r.n.to_string()];
        row.extend(r.u.iter().map(|&u| num(u)));
        row.push(num(r.error));
        row.push(num(r.residual));
        noise_table.push(row);
    }

    say!(con.out, "alpha = {}", short(q2.alpha));
    for (k, name) in ["q_norm / log", "dp_norm", "pi_err", "dpi_norm / log"].iter().enumerate() {
        let fitted = q2.fitted_exponents[k].map_or("n/a (below floor)".to_string(), |f| short(f.slope));
        say!(con.out, "{name}: bound exponent {}, fitted {fitted}", short(q2.bound_exponents[k]));
    }
    let max_update = q2.rows.iter().map(|r| r.update_residual).fold(0.0, f64::max);
    let max_noise = noise.rows.iter().map(|r| r.residual).fold(0.0, f64::max);
    say!(con.out, "max_update_residual = {}", short(max_update));
    say!(con.out, "max_decomposition_residual = {} ({})", short(max_noise), if exact { "exact" } else { "binned" });
    match out_dir(cfg)? {
        Some(dir) => {
            q2_table.write(&dir.path("q2.csv"))?;
            noise_table.write(&dir.path("noise.csv"))?;
            let curves = [
                Curve { csv: "q2.csv", x_column: 1, y_column: 2, title: "|Q_n|" },
                Curve { csv: "q2.csv", x_column: 1, y_column: 3, title: "|P_n+1 - P_n|" },
                Curve { csv: "q2.csv", x_column: 1, y_column: 4, title: "|pi_n - pi*|" },
                Curve { csv: "q2.csv", x_column: 1, y_column: 5, title: "|pi_n+1 - pi_n|" },
            ];
            write_file(&dir.path("q2.gp"), loglog_script("q2.png", "n", "norm", &curves, None).as_bytes())?;
            let curves: Vec<Curve> = ["U0", "U1", "U2", "U3", "error"]
                .iter()
                .enumerate()
                .map(|(k, title)| Curve { csv: "noise.csv", x_column: 1, y_column: 2 + k, title })
                .collect();
            write_file(&dir.path("noise.gp"), loglog_script("noise.png", "n", "norm", &curves, None).as_bytes())?;
        }
        None => {
            put(con.out, &q2_table.to_bytes()?)?;
        }
    }
    Ok(())
}

fn emit_example(cfg: &ExperimentConfig, con: &mut Console<'_>) -> Result<()> {
    let example: BuiltinExample =
        cfg.builtin()?.ok_or_else(|| CliError::Flags("emit-example needs --example".into()))?;
    let json = model_to_json(&example.model()?);
    match cfg.out.as_deref() {
        Some(path) => write_json(path, &json)?,
        None => put(con.out, json.as_bytes())?,
    }
    Ok(())
}

fn write_json(path: &Path, json: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        OutDir::create(parent)?;
    }
    write_file(path, json.as_bytes())
}
