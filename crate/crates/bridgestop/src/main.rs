use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use bridgestop::config::{read_config_file, Command, RunConfig};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bridgestop", version, about = "Optimal stopping of a Brownian bridge with an unknown pinning time")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Known pinning time: the constant B and the value on a grid.
    SolveClassical,
    /// Gamma(1/2, beta) prior: threshold b and value function.
    SolveGamma,
    /// Beta(1/2, beta) prior: boundary constant A and value function.
    SolveBeta,
    /// Monte Carlo value of the optimal rule for the chosen prior.
    Simulate,
    /// Statistical checks of the filter and of the killing rate.
    Validate,
    /// Urn problem by backward induction (known n, or --n-prior).
    Urn,
    /// Data behind the value, filter and boundary figures.
    Figures,
}

#[derive(Args)]
struct Flags {
    /// gamma, beta, fixed or table:<path>
    #[arg(long, global = true)]
    prior: Option<String>,
    #[arg(long, global = true)]
    beta: Option<f64>,
    /// Gamma shape index, or the number of balls of each colour for `urn`
    #[arg(long, global = true)]
    n: Option<u32>,
    /// Urn prior over n, e.g. 2:0.5,4:0.5
    #[arg(long, global = true)]
    n_prior: Option<String>,
    #[arg(long, global = true)]
    paths: Option<u64>,
    #[arg(long, global = true)]
    dt: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    x0: Option<f64>,
    /// Pinning time for --prior fixed and solve-classical
    #[arg(long, global = true)]
    t_pin: Option<f64>,
    /// Time at which `validate` inspects the paths
    #[arg(long, global = true)]
    time: Option<f64>,
    #[arg(long, global = true)]
    window: Option<f64>,
    /// Level bin for the filter check, lo,hi
    #[arg(long, global = true, allow_hyphen_values = true)]
    bin: Option<String>,
    /// Boundary scale factors evaluated alongside the rule, e.g. 0.8,1.25
    #[arg(long, global = true)]
    probe: Option<String>,
    /// Number of simulated paths to write to paths.csv
    #[arg(long, global = true)]
    dump: Option<u64>,
    /// gamma, filter, beta or all
    #[arg(long, global = true)]
    case: Option<String>,
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    #[arg(long, global = true)]
    z_max: Option<f64>,
    #[arg(long, global = true)]
    nodes: Option<usize>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// key = value file; flags take precedence
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

impl Flags {
    fn to_map(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                m.insert(k.to_string(), v);
            }
        };
        let s = |v: Option<f64>| v.map(|x| x.to_string());
        put("prior", self.prior.clone());
        put("beta", s(self.beta));
        put("n", self.n.map(|v| v.to_string()));
        put("n_prior", self.n_prior.clone());
        put("paths", self.paths.map(|v| v.to_string()));
        put("dt", s(self.dt));
        put("seed", self.seed.map(|v| v.to_string()));
        put("x0", s(self.x0));
        put("t_pin", s(self.t_pin));
        put("time", s(self.time));
        put("window", s(self.window));
        put("bin", self.bin.clone());
        put("probe", self.probe.clone());
        put("dump", self.dump.map(|v| v.to_string()));
        put("case", self.case.clone());
        put("epsilon", s(self.epsilon));
        put("z_max", s(self.z_max));
        put("nodes", self.nodes.map(|v| v.to_string()));
        put("out", self.out.as_ref().map(|p| p.display().to_string()));
        m
    }
}

fn command(cmd: Cmd) -> Command {
    match cmd {
        Cmd::SolveClassical => Command::SolveClassical,
        Cmd::SolveGamma => Command::SolveGamma,
        Cmd::SolveBeta => Command::SolveBeta,
        Cmd::Simulate => Command::Simulate,
        Cmd::Validate => Command::Validate,
        Cmd::Urn => Command::Urn,
        Cmd::Figures => Command::Figures,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = (|| {
        let file = match &cli.flags.config {
            Some(p) => read_config_file(p)?,
            None => BTreeMap::new(),
        };
        let cfg = RunConfig::resolve(command(cli.command), &file, &cli.flags.to_map())?;
        bridgestop::cli::run(&cfg)
    })();
    match result {
        Ok(report) => {
            print!("{}", report.render());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
