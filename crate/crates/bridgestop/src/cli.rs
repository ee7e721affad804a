//! Command implementations behind the `bridgestop` binary.
//!
//! Every command writes `report.txt` and `manifest.txt` into the output
//! directory; most also write `solution.csv`.

use std::fs;
use std::path::Path;

use bridgestop_core::beta_solver::{solve_a_with, BetaSolution, SolverOptions};
use bridgestop_core::classical::{b_residual, solve_b, ClassicalSolution};
use bridgestop_core::filter::{drift_factor, f_beta, PosteriorState};
use bridgestop_core::gamma_solver::{solve_gamma, solve_gamma_prior};
use bridgestop_core::priors::Prior;
use bridgestop_core::urn::{solve_known_n, solve_unknown_n, NPrior};
use log::info;

use crate::config::{Command, FigureCase, PriorSpec, RunConfig};
use crate::io::{fmt12, load_tabulated_prior, write_paths, write_policy, Report, Table};
use crate::simulate::{
    optimality_probe, simulate_path, validate_compensator, validate_filter, Pinning, SimConfig, StoppingRule,
};
use crate::{Error, Result};

/// Betas drawn in the value figures.
pub const FIGURE_BETAS: [f64; 4] = [0.25, 0.5, 1.0, 2.0];
/// Betas drawn in the filter figure.
pub const FILTER_BETAS: [f64; 4] = [0.5, 1.0, 1.5, 2.0];

pub fn run(cfg: &RunConfig) -> Result<Report> {
    fs::create_dir_all(&cfg.out).map_err(|e| Error::io(&cfg.out, e))?;
    let manifest = cfg.out.join("manifest.txt");
    fs::write(&manifest, cfg.manifest()).map_err(|e| Error::io(&manifest, e))?;
    info!("running {} into {}", cfg.command.name(), cfg.out.display());
    let mut report = Report::new();
    report.text("command", cfg.command.name());
    match cfg.command {
        Command::SolveClassical => solve_classical_cmd(cfg, &mut report)?,
        Command::SolveGamma => solve_gamma_cmd(cfg, &mut report)?,
        Command::SolveBeta => solve_beta_cmd(cfg, &mut report)?,
        Command::Simulate => simulate_cmd(cfg, &mut report)?,
        Command::Validate => validate_cmd(cfg, &mut report)?,
        Command::Urn => urn_cmd(cfg, &mut report)?,
        Command::Figures => figures_cmd(cfg, &mut report)?,
    }
    report.write(&cfg.out.join("report.txt"))?;
    Ok(report)
}

fn solver_options(cfg: &RunConfig) -> SolverOptions {
    SolverOptions {
        epsilon: cfg.epsilon,
        z_max: cfg.z_max,
        nodes: cfg.nodes,
        ..SolverOptions::default()
    }
}

fn prior_of(cfg: &RunConfig) -> Result<Pinning> {
    Ok(match &cfg.prior {
        PriorSpec::Gamma => Pinning::Random(Prior::gamma_half(cfg.n, cfg.beta)?),
        PriorSpec::Beta => Pinning::Random(Prior::beta_half(cfg.beta)?),
        PriorSpec::Fixed => Pinning::Fixed(cfg.t_pin),
        PriorSpec::Table(path) => Pinning::Random(load_tabulated_prior(path)?),
    })
}

/// Grid of `count + 1` points on `[lo, hi]`.
fn grid(lo: f64, hi: f64, count: usize) -> impl Iterator<Item = f64> {
    (0..=count).map(move |i| lo + (hi - lo) * i as f64 / count as f64)
}

/// Long-format `(t, x, value, stop)` table for a value `V(t,x)` with boundary `b(t)`.
fn value_grid(
    t_end: f64,
    x_scale: f64,
    value: impl Fn(f64, f64) -> Result<f64>,
    boundary: impl Fn(f64) -> Result<f64>,
) -> Result<(Table, Table)> {
    let mut values = Table::new(["t", "x", "value", "stop"]);
    for t in grid(0.0, 0.9 * t_end, 9) {
        let b = boundary(t)?;
        for x in grid(-2.0 * x_scale, 2.0 * x_scale, 80) {
            values.push(vec![t, x, value(t, x)?, f64::from(u8::from(x >= b))]);
        }
    }
    let mut bounds = Table::new(["t", "boundary"]);
    for t in grid(0.0, t_end, 100) {
        bounds.push(vec![t, boundary(t)?]);
    }
    Ok((values, bounds))
}

fn solve_classical_cmd(cfg: &RunConfig, report: &mut Report) -> Result<()> {
    let sol = ClassicalSolution::new(cfg.t_pin)?;
    let b = solve_b();
    report
        .num("B", b)
        .num("B_residual", b_residual(b))
        .num("t_pin", cfg.t_pin)
        .num("value_0_0", sol.value(0.0, 0.0)?)
        .num("boundary_0", sol.boundary(0.0)?);
    let (values, bounds) = value_grid(
        cfg.t_pin,
        cfg.t_pin.sqrt(),
        |t, x| Ok(sol.value(t, x)?),
        |t| Ok(sol.boundary(t)?),
    )?;
    values.write(&cfg.out.join("solution.csv"))?;
    bounds.write(&cfg.out.join("boundary.csv"))
}

fn solve_gamma_cmd(cfg: &RunConfig, report: &mut Report) -> Result<()> {
    let prior = Prior::gamma_half(cfg.n, cfg.beta)?;
    let sol = solve_gamma_prior(&prior)?;
    let res = sol.verify_fbp_residuals();
    report
        .num("beta", sol.beta)
        .num("b", sol.b)
        .num("value_0", sol.value(0.0))
        .num("residual_max", res.max());
    let mut table = Table::new(["x", "value", "stop"]);
    for x in grid(-2.0 * sol.b, 3.0 * sol.b, 200) {
        table.push(vec![x, sol.value(x), f64::from(u8::from(x >= sol.b))]);
    }
    table.write(&cfg.out.join("solution.csv"))
}

fn solve_beta_cmd(cfg: &RunConfig, report: &mut Report) -> Result<()> {
    let sol = solve_a_with(cfg.beta, &solver_options(cfg))?;
    let res = sol.residuals()?;
    report
        .num("beta", sol.beta)
        .num("A", sol.a)
        .num("C", sol.c)
        .num("D", sol.d)
        .num("C_minus", sol.c_minus())
        .num("value_0_0", sol.value(0.0, 0.0)?)
        .num("classical_value_0_0", ClassicalSolution::new(1.0)?.value(0.0, 0.0)?)
        .num("residual_boundary_equation", res.boundary_equation)
        .num("residual_kink", res.kink)
        .num("residual_continuity", res.continuity)
        .num("residual_value_match", res.value_match)
        .num("residual_smooth_pasting", res.smooth_pasting)
        .num("residual_interior", res.interior);
    let (values, bounds) = value_grid(1.0, 1.0, |t, x| Ok(sol.value(t, x)?), |t| Ok(sol.boundary(t)?))?;
    values.write(&cfg.out.join("solution.csv"))?;
    bounds.write(&cfg.out.join("boundary.csv"))
}

/// The solver's rule for the configured prior, with its value at the start
/// when that value is known.
fn rule_for(cfg: &RunConfig, pinning: &Pinning) -> Result<(StoppingRule, Option<f64>, &'static str)> {
    let at_origin = cfg.x0 == 0.0;
    Ok(match (&cfg.prior, pinning) {
        (PriorSpec::Gamma, Pinning::Random(prior)) => {
            let sol = solve_gamma_prior(prior)?;
            let v = at_origin.then(|| sol.value(0.0));
            (StoppingRule::Threshold(sol.b), v, "gamma threshold b")
        }
        (PriorSpec::Beta, _) => {
            let sol = solve_a_with(cfg.beta, &solver_options(cfg))?;
            let v = if at_origin { Some(sol.value(0.0, 0.0)?) } else { None };
            let rule = StoppingRule::SqrtBoundary { coef: sol.a, t_pin: 1.0 };
            (rule, v, "beta boundary A*sqrt(1-t)")
        }
        (PriorSpec::Fixed, _) => {
            let sol = ClassicalSolution::new(cfg.t_pin)?;
            let rule = StoppingRule::SqrtBoundary { coef: sol.b, t_pin: cfg.t_pin };
            (rule, Some(sol.value(0.0, cfg.x0)?), "classical boundary B*sqrt(T-t)")
        }
        _ => {
            // no solver for tabulated priors: use the known-θ rule at the support end
            let t_end = pinning.support_upper();
            let rule = StoppingRule::SqrtBoundary {
                coef: solve_b(),
                t_pin: t_end,
            };
            (rule, None, "classical boundary at the support end")
        }
    })
}

fn simulate_cmd(cfg: &RunConfig, report: &mut Report) -> Result<()> {
    let pinning = prior_of(cfg)?;
    let (rule, reference, rule_name) = rule_for(cfg, &pinning)?;
    let sim = SimConfig::new(pinning)
        .paths(cfg.paths)
        .dt(cfg.dt)
        .seed(cfg.seed)
        .start(0.0, cfg.x0);
    let table = optimality_probe(&sim, &rule, &cfg.probe)?;
    let c = table.candidate;
    report
        .text("prior", cfg.prior.to_string())
        .text("rule", rule_name)
        .num("x0", cfg.x0)
        .num("estimate", c.estimate)
        .num("std_error", c.std_error)
        .num("ci95_lo", c.ci95.0)
        .num("ci95_hi", c.ci95.1)
        .text("n_paths", c.n_paths.to_string())
        .text("seed", c.seed.to_string())
        .num("dt", cfg.dt);
    if let Some(v) = reference {
        report.num("reference_value", v).num("z_score", c.z_score(v));
    }
    if !cfg.probe.is_empty() {
        report
            .text("candidate_is_maximal", table.candidate_is_maximal().to_string())
            .text("gaps_beyond_ci", table.gaps_beyond_ci().to_string());
    }
    let mut out = Table::new(["factor", "estimate", "std_error", "ci95_lo", "ci95_hi", "gap", "gap_std_error"]);
    out.push(vec![1.0, c.estimate, c.std_error, c.ci95.0, c.ci95.1, 0.0, 0.0]);
    for r in &table.rows {
        let v = r.value;
        out.push(vec![r.factor, v.estimate, v.std_error, v.ci95.0, v.ci95.1, r.gap.estimate, r.gap.std_error]);
    }
    out.write(&cfg.out.join("solution.csv"))?;
    if cfg.dump > 0 {
        let paths: Vec<_> = (0..cfg.dump.min(cfg.paths))
            .map(|i| simulate_path(&sim, &mut sim.path_stream(i)))
            .collect();
        write_paths(&cfg.out.join("paths.csv"), &paths)?;
    }
    Ok(())
}

fn validate_cmd(cfg: &RunConfig, report: &mut Report) -> Result<()> {
    let pinning = prior_of(cfg)?;
    let Pinning::Random(prior) = &pinning else {
        return Err(Error::config("validate needs a random pinning time"));
    };
    let sim = SimConfig::new(pinning.clone())
        .paths(cfg.paths)
        .dt(cfg.dt)
        .seed(cfg.seed)
        .start(0.0, cfg.x0);
    report.text("prior", cfg.prior.to_string()).num("time", cfg.time);

    let (lo, hi) = cfg.bin;
    for (tag, bin) in [("filter", (lo, hi)), ("filter_mirror", (-hi, -lo))] {
        let r = validate_filter(&sim, cfg.time, bin)?;
        report
            .text(&format!("{tag}_bin"), format!("{},{}", fmt12(bin.0), fmt12(bin.1)))
            .text(&format!("{tag}_in_bin"), r.in_bin.to_string())
            .num(&format!("{tag}_mean_inverse_gap"), r.inverse_gap.estimate)
            .num(&format!("{tag}_std_error"), r.inverse_gap.std_error)
            .num(&format!("{tag}_f_center"), r.f_center)
            .num(&format!("{tag}_f_bin_average"), r.f_bin_average)
            .num(&format!("{tag}_z_score"), r.z_score());
    }

    let c = validate_compensator(&sim, cfg.time, cfg.window)?;
    report
        .num("compensator_window", c.window)
        .num("compensator_bandwidth", c.bandwidth)
        .text("compensator_survivors", c.survivors.to_string())
        .num("pin_frequency", c.pin_frequency.estimate)
        .num("pin_frequency_std_error", c.pin_frequency.std_error)
        .num("local_time_compensator", c.compensator.estimate)
        .num("local_time_compensator_std_error", c.compensator.std_error)
        .num("compensator_z_score", c.z_score());

    let mut table = Table::new(["x", "f", "drift"]);
    for x in grid(-3.0, 3.0, 120) {
        if x.abs() < 1e-12 {
            continue;
        }
        let d = drift_factor(&PosteriorState::new(prior, cfg.time, x, cfg.x0)?)?;
        table.push(vec![x, d.f_value, d.drift]);
    }
    table.write(&cfg.out.join("solution.csv"))
}

fn urn_cmd(cfg: &RunConfig, report: &mut Report) -> Result<()> {
    let policy = if cfg.n_prior.is_empty() {
        let policy = solve_known_n(cfg.n)?;
        let v = policy.value(0, 0).unwrap_or(f64::NAN);
        report
            .text("n", cfg.n.to_string())
            .num("value_0_0", v)
            .num("scaled_value", v / (2.0 * f64::from(cfg.n)).sqrt())
            .num("classical_value_0_0", ClassicalSolution::new(1.0)?.value(0.0, 0.0)?);
        policy
    } else {
        let prior = NPrior::new(cfg.n_prior.clone())?;
        let policy = solve_unknown_n(&prior)?;
        report
            .num("prior_mean_n", prior.mean())
            .num("value_0_0", policy.value(0, 0).unwrap_or(f64::NAN));
        policy
    };
    write_policy(&cfg.out.join("solution.csv"), &policy)
}

fn figures_cmd(cfg: &RunConfig, report: &mut Report) -> Result<()> {
    let single = cfg.case != FigureCase::All;
    let wants = |c: FigureCase| cfg.case == FigureCase::All || cfg.case == c;
    let emit = |name: &str, table: &Table, main: bool| -> Result<()> {
        table.write(&cfg.out.join(name))?;
        if main && single {
            table.write(&cfg.out.join("solution.csv"))?;
        }
        Ok(())
    };
    if wants(FigureCase::Gamma) {
        let (values, curve) = gamma_figure()?;
        emit("gamma_values.csv", &values, true)?;
        emit("gamma_boundary.csv", &curve, false)?;
        report.num("b_at_half", solve_gamma(0.5)?.b);
    }
    if wants(FigureCase::Filter) {
        emit("filter_values.csv", &filter_figure()?, true)?;
    }
    if wants(FigureCase::Beta) {
        let (values, curve, a_half) = beta_figure(&solver_options(cfg))?;
        emit("beta_values.csv", &values, true)?;
        emit("beta_a.csv", &curve, false)?;
        report.num("A_at_half", a_half);
    }
    Ok(())
}

fn beta_column(prefix: &str, beta: f64) -> String {
    format!("{prefix}_beta_{}", fmt12(beta))
}

/// `(x, V for each β)` and the `(β, b)` curve.
pub fn gamma_figure() -> Result<(Table, Table)> {
    let sols = FIGURE_BETAS
        .iter()
        .map(|&b| solve_gamma(b))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let mut values = Table::new(std::iter::once("x".to_string()).chain(FIGURE_BETAS.iter().map(|&b| beta_column("V", b))));
    for x in grid(-1.0, 1.5, 250) {
        let mut row = vec![x];
        row.extend(sols.iter().map(|s| s.value(x)));
        values.push(row);
    }
    let mut curve = Table::new(["beta", "b"]);
    for i in 1..=80 {
        let beta = 0.05 * f64::from(i);
        curve.push(vec![beta, solve_gamma(beta)?.b]);
    }
    Ok((values, curve))
}

/// `(x, f(0,x) and -x·f(0,x) for each β)` under the beta prior.
pub fn filter_figure() -> Result<Table> {
    let header = std::iter::once("x".to_string())
        .chain(FILTER_BETAS.iter().map(|&b| beta_column("f", b)))
        .chain(FILTER_BETAS.iter().map(|&b| beta_column("minus_x_f", b)));
    let mut table = Table::new(header);
    // midpoints keep the grid off the singular point x = 0
    for i in 0..240 {
        let x = -3.0 + 6.0 * (f64::from(i) + 0.5) / 240.0;
        let fs = FILTER_BETAS
            .iter()
            .map(|&b| Ok(f_beta(b, 0.0, x)?.f_value))
            .collect::<Result<Vec<f64>>>()?;
        let mut row = vec![x];
        row.extend(fs.iter().copied());
        row.extend(fs.iter().map(|f| -x * f));
        table.push(row);
    }
    Ok(table)
}

/// `(x, V(0,x) for each β, classical V)`, the `(β, A)` curve and `A(1/2)`.
pub fn beta_figure(opts: &SolverOptions) -> Result<(Table, Table, f64)> {
    let sols = FIGURE_BETAS
        .iter()
        .map(|&b| solve_a_with(b, opts))
        .collect::<std::result::Result<Vec<BetaSolution>, _>>()?;
    let classical = ClassicalSolution::new(1.0)?;
    let header = std::iter::once("x".to_string())
        .chain(FIGURE_BETAS.iter().map(|&b| beta_column("V", b)))
        .chain(std::iter::once("V_classical".to_string()));
    let mut values = Table::new(header);
    for x in grid(-1.5, 1.5, 300) {
        let mut row = vec![x];
        for s in &sols {
            row.push(s.value(0.0, x)?);
        }
        row.push(classical.value(0.0, x)?);
        values.push(row);
    }
    let mut curve = Table::new(["beta", "A"]);
    for beta in [0.01, 0.05, 0.1, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 4.0] {
        let a = match sols.iter().find(|s| s.beta == beta) {
            Some(s) => s.a,
            None => solve_a_with(beta, opts)?.a,
        };
        curve.push(vec![beta, a]);
    }
    let a_half = sols[1].a;
    Ok((values, curve, a_half))
}

/// Reads `report.txt` from a run directory.
pub fn read_report(dir: &Path) -> Result<Report> {
    let path = dir.join("report.txt");
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    Ok(Report::parse(&text))
}
