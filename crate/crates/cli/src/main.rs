use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use symbroadcast::SdiChannelSpec;
use symbroadcast_cli::bounds::bounds_table;
use symbroadcast_cli::mc::{identity_rows, reduced_rows};
use symbroadcast_cli::scenario::{Check, InputState, McConfig, RouteChoice};
use symbroadcast_cli::suite::{run_suite, DEFAULT_SAMPLES};
use symbroadcast_cli::{emit, parse_list, parse_scenarios, run_all, CliError, Format, RunOptions, ScenarioConfig};

const THREADS_ENV: &str = "SYMBROADCAST_THREADS";

#[derive(Parser)]
#[command(name = "symbroadcast", version, about = "Separable approximations of symmetric broadcast channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form bound tables over sweeps of d, M and k.
    Bounds(Common),
    /// Run a scenario file, or a cloner sweep built from flags.
    Run {
        /// Scenario JSON (one object or an array). Its fields take precedence over flags.
        config: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Monte Carlo cross-checks against closed forms.
    Mc {
        #[arg(long, value_enum, default_value_t = McTarget::Reduced)]
        target: McTarget,
        #[command(flatten)]
        common: Common,
    },
    /// The bundled scenario suite.
    Suite(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum McTarget {
    /// Sampled separable approximation against the exact one.
    Reduced,
    /// Haar moments against the symmetrizer (`--k` lists the tensor powers).
    Identity,
}

/// List-valued flags accept `2`, `1,3` or `2..6`.
#[derive(Args, Clone)]
struct Common {
    #[arg(long, default_value = "2")]
    d: String,
    #[arg(long = "N", default_value = "1")]
    n: String,
    #[arg(long = "M")]
    m: Option<String>,
    #[arg(long, default_value = "1")]
    k: String,
    /// Depolarizing noise; selects the noisy cloner.
    #[arg(long)]
    p: Option<f64>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Output file; stdout when absent or `-`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Record wall_time_ms (makes output run-dependent).
    #[arg(long)]
    timing: bool,
}

impl Common {
    fn format(&self) -> Format {
        self.format.unwrap_or_default()
    }

    fn ms(&self) -> Result<Vec<usize>, CliError> {
        let m = self.m.as_deref().ok_or_else(|| CliError::config("M", "--M is required"))?;
        parse_list("M", m)
    }

    fn cloner(&self, d: usize, n: usize, m: usize) -> SdiChannelSpec {
        match self.p {
            Some(p) => SdiChannelSpec::NoisyCloner { d, n, m, p },
            None => SdiChannelSpec::UniversalCloner { d, n, m },
        }
    }

    /// Cloner sweep over `d x N x M`, skipping `N > M`.
    fn sweep(&self) -> Result<Vec<ScenarioConfig>, CliError> {
        let ks = parse_list("k", &self.k)?;
        let mut out = Vec::new();
        for d in parse_list("d", &self.d)? {
            for n in parse_list("N", &self.n)? {
                for m in self.ms()?.into_iter().filter(|&m| m >= n) {
                    let k_list: Vec<usize> = ks.iter().copied().filter(|&k| k <= m).collect();
                    if k_list.is_empty() {
                        return Err(CliError::config("k", format!("no k <= M={m}")));
                    }
                    let mut checks = vec![
                        if self.p.is_some() { Check::Theorem2 } else { Check::Lemma1 },
                        Check::Perr,
                        Check::FidelityGap,
                    ];
                    let mc = self.samples.map(|samples| McConfig { samples, seed: self.seed });
                    if mc.is_some() {
                        checks.push(Check::McCrosscheck);
                    }
                    out.push(ScenarioConfig {
                        schema: 1,
                        name: None,
                        channel: self.cloner(d, n, m),
                        input_state: Some(InputState::Random { seed: self.seed }),
                        k_list,
                        checks,
                        route: RouteChoice::Auto,
                        mc,
                        output: None,
                    });
                }
            }
        }
        if out.is_empty() {
            return Err(CliError::config("M", "no scenario with N <= M"));
        }
        Ok(out)
    }
}

/// 0 when every check holds, 2 on any violation.
fn verdict(ok: bool) -> ExitCode {
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}

fn warn(lines: &[String]) {
    for w in lines {
        eprintln!("warning: {w}");
    }
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Bounds(c) => {
            let rows = bounds_table(&parse_list("d", &c.d)?, &c.ms()?, &parse_list("k", &c.k)?)?;
            emit(&rows, c.format(), c.out.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Run { config, common } => {
            let (configs, format, out) = match config {
                Some(path) => {
                    let text = std::fs::read_to_string(&path).map_err(|source| CliError::Io {
                        path: path.display().to_string(),
                        source,
                    })?;
                    let mut configs = parse_scenarios(&text)?;
                    for cfg in &mut configs {
                        if cfg.mc.is_none() {
                            if let Some(samples) = common.samples {
                                cfg.mc = Some(McConfig { samples, seed: common.seed });
                            }
                        }
                    }
                    let output = configs[0].output.clone();
                    let format = output.as_ref().map(|o| o.format).unwrap_or(common.format());
                    let out = output.and_then(|o| o.path).or(common.out.clone());
                    (configs, format, out)
                }
                None => (common.sweep()?, common.format(), common.out.clone()),
            };
            let outcome = run_all(&configs, &RunOptions { timing: common.timing })?;
            warn(&outcome.warnings);
            emit(&outcome.records, format, out.as_deref())?;
            Ok(verdict(outcome.records.iter().all(|r| r.all_satisfied())))
        }
        Command::Mc { target, common } => {
            let samples = common.samples.unwrap_or(DEFAULT_SAMPLES);
            let ks = parse_list("k", &common.k)?;
            let rows = match target {
                McTarget::Identity => {
                    let mut rows = Vec::new();
                    for d in parse_list("d", &common.d)? {
                        rows.extend(identity_rows(d, &ks, samples, common.seed)?);
                    }
                    rows
                }
                McTarget::Reduced => {
                    let mut rows = Vec::new();
                    for cfg in common.sweep()? {
                        rows.extend(reduced_rows(&cfg.channel, &cfg.k_list, samples, common.seed)?);
                    }
                    rows
                }
            };
            emit(&rows, common.format(), common.out.as_deref())?;
            Ok(verdict(rows.iter().all(|r| r.satisfied)))
        }
        Command::Suite(c) => {
            let outcome = run_suite(c.seed, c.samples.unwrap_or(DEFAULT_SAMPLES), &RunOptions { timing: c.timing })?;
            warn(&outcome.warnings);
            for r in &outcome.identity {
                eprintln!(
                    "identity d={} n={}: max z-score {:.3} ({})",
                    r.d,
                    r.k,
                    r.max_z_score,
                    if r.satisfied { "ok" } else { "FAILED" }
                );
            }
            emit(&outcome.records, c.format(), c.out.as_deref())?;
            Ok(verdict(outcome.all_satisfied()))
        }
    }
}

fn main() -> ExitCode {
    if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse::<usize>().ok()) {
        // ignore failure: the pool can only be configured once per process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
