use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use symic::experiment::{run_experiment, AlgorithmChoice, ExperimentConfig, InstanceSource};
use symic::instances::{fixture_instance, gen_random_instance, Fixture};
use symic::mechanisms::DeviationKind;
use symic::slope::{fit_slope, read_summaries};
use symic::verify::{run_verification, VerifyOptions};
use symic::{Error, Result};

#[derive(Parser)]
#[command(
    name = "symic",
    version,
    about = "Symmetric IC mechanisms: offline LP and online learners"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Deviations {
    ExAnte,
    Interim,
}

impl From<Deviations> for DeviationKind {
    fn from(d: Deviations) -> Self {
        match d {
            Deviations::ExAnte => DeviationKind::ExAnte,
            Deviations::Interim => DeviationKind::InterimReduced,
        }
    }
}

#[derive(Args)]
struct Common {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    #[arg(long, value_enum, default_value = "interim")]
    deviations: Deviations,
    /// TOML experiment config; instance and run settings come from the file.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct InstanceArgs {
    /// JSON instance file.
    #[arg(long, conflicts_with_all = ["fixture", "random"])]
    instance: Option<PathBuf>,
    /// Built-in fixture: thimp-X, thimp-Y, lb-X, lb-Y.
    #[arg(long)]
    fixture: Option<Fixture>,
    #[arg(long, default_value_t = 0.05)]
    eps: f64,
    /// Random instance "n,states,signals,actions", drawn from --seed.
    #[arg(long, value_parser = parse_dims)]
    random: Option<[usize; 4]>,
}

fn parse_dims(s: &str) -> std::result::Result<[usize; 4], String> {
    let v: Vec<usize> = s
        .split(',')
        .map(|x| x.trim().parse().map_err(|_| format!("bad integer {x:?}")))
        .collect::<std::result::Result<_, _>>()?;
    v.try_into()
        .map_err(|_| "expected four comma-separated integers".to_string())
}

impl InstanceArgs {
    fn source(&self, seed: u64) -> Result<InstanceSource> {
        if let Some(path) = &self.instance {
            return Ok(InstanceSource::File { path: path.clone() });
        }
        if let Some(name) = self.fixture {
            return Ok(InstanceSource::Fixture {
                name,
                eps: self.eps,
            });
        }
        if let Some([n, states, signals, actions]) = self.random {
            return Ok(InstanceSource::Random {
                seed,
                n,
                states,
                signals,
                actions,
            });
        }
        Err(Error::Config(
            "give one of --instance, --fixture, --random or --config".into(),
        ))
    }
}

#[derive(Args)]
struct OnlineArgs {
    #[arg(long, default_value_t = 10_000)]
    horizon: u64,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    /// Seeds to run; defaults to --seed alone.
    #[arg(long, value_delimiter = ',')]
    seeds: Vec<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the mechanism LP for one instance.
    Solve {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        instance: InstanceArgs,
        /// IC slack; 0 gives the exactly IC optimum.
        #[arg(long, default_value_t = 0.0)]
        epsilon: f64,
        /// Also write the LP in CPLEX LP format.
        #[arg(long)]
        dump_lp: bool,
    },
    /// Online learner with full feedback on signals.
    SimulateFull {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        instance: InstanceArgs,
        #[command(flatten)]
        online: OnlineArgs,
    },
    /// Explore-then-optimize learner with bandit feedback.
    SimulateBandit {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        instance: InstanceArgs,
        #[command(flatten)]
        online: OnlineArgs,
        /// Exploration rounds per action.
        #[arg(long, conflicts_with = "alpha")]
        exploration: Option<u64>,
        /// Exploration E = floor(T^alpha), alpha in [1/2, 1].
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Write an instance JSON file.
    GenInstance {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        states: usize,
        #[arg(long, default_value_t = 2)]
        signals: usize,
        #[arg(long, default_value_t = 2)]
        actions: usize,
        #[arg(long)]
        fixture: Option<Fixture>,
        #[arg(long, default_value_t = 0.05)]
        eps: f64,
    },
    /// Cross-check the compact formulation against full-profile enumeration.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 50)]
        instances: usize,
    },
    /// Fit log-log growth slopes from summary.csv files.
    FitSlope {
        #[command(flatten)]
        common: Common,
        #[arg(required = true)]
        summaries: Vec<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        bootstrap: usize,
    },
}

fn load_config(common: &Common) -> Result<Option<ExperimentConfig>> {
    let Some(path) = &common.config else {
        return Ok(None);
    };
    let text = std::fs::read_to_string(path)?;
    ExperimentConfig::from_toml(&text).map(Some)
}

fn run_config(cfg: ExperimentConfig) -> Result<()> {
    let report = run_experiment(&cfg)?;
    if let Some(v) = report.offline_value {
        println!("optimal value {v:.12}");
    }
    for row in &report.summary {
        println!(
            "seed {:>6}  regret {:>14.6}  viol {:>14.6}  {}",
            row.seed, row.regret, row.viol_raw, row.status
        );
    }
    for f in &report.files {
        println!("wrote {}", f.display());
    }
    if report.failures.is_empty() {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "{} run(s) failed",
            report.failures.len()
        )))
    }
}

fn online_config(
    common: &Common,
    instance: &InstanceArgs,
    online: &OnlineArgs,
    algorithm: AlgorithmChoice,
) -> Result<ExperimentConfig> {
    Ok(ExperimentConfig {
        algorithm,
        deviations: common.deviations.into(),
        horizon: online.horizon,
        exploration: None,
        alpha: None,
        delta: online.delta,
        epsilon: None,
        seeds: if online.seeds.is_empty() {
            vec![common.seed]
        } else {
            online.seeds.clone()
        },
        out_dir: common.out_dir.clone(),
        dump_lp: false,
        instance: instance.source(common.seed)?,
    })
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Solve {
            common,
            instance,
            epsilon,
            dump_lp,
        } => {
            let cfg = match load_config(&common)? {
                Some(cfg) => cfg,
                None => ExperimentConfig {
                    algorithm: AlgorithmChoice::Offline,
                    deviations: common.deviations.into(),
                    horizon: 0,
                    exploration: None,
                    alpha: None,
                    delta: 0.05,
                    epsilon: Some(epsilon),
                    seeds: Vec::new(),
                    out_dir: common.out_dir.clone(),
                    dump_lp,
                    instance: instance.source(common.seed)?,
                },
            };
            run_config(cfg)?;
        }
        Command::SimulateFull {
            common,
            instance,
            online,
        } => {
            let cfg = match load_config(&common)? {
                Some(cfg) => cfg,
                None => online_config(&common, &instance, &online, AlgorithmChoice::FullFeedback)?,
            };
            run_config(cfg)?;
        }
        Command::SimulateBandit {
            common,
            instance,
            online,
            exploration,
            alpha,
        } => {
            let cfg = match load_config(&common)? {
                Some(cfg) => cfg,
                None => {
                    let mut cfg =
                        online_config(&common, &instance, &online, AlgorithmChoice::Bandit)?;
                    cfg.exploration = exploration;
                    cfg.alpha = alpha.or(exploration.is_none().then_some(0.5));
                    cfg
                }
            };
            run_config(cfg)?;
        }
        Command::GenInstance {
            common,
            n,
            states,
            signals,
            actions,
            fixture,
            eps,
        } => {
            let inst = match fixture {
                Some(f) => fixture_instance(f, eps)?,
                None => gen_random_instance(common.seed, n, states, signals, actions)?,
            };
            std::fs::create_dir_all(&common.out_dir)?;
            let path = common.out_dir.join("instance.json");
            std::fs::write(&path, inst.to_json()?)?;
            println!("wrote {}", path.display());
        }
        Command::Verify { common, instances } => {
            let report = run_verification(VerifyOptions {
                seed: common.seed,
                instances,
                ..Default::default()
            })?;
            for c in &report.checks {
                println!(
                    "{} {:<45} cases {:>6}  worst {:.3e}  {}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.cases,
                    c.worst,
                    c.detail
                );
            }
            return Ok(report.passed());
        }
        Command::FitSlope {
            summaries,
            bootstrap,
            ..
        } => {
            for metric in ["regret", "viol_raw"] {
                let groups = read_summaries(&summaries, metric)?;
                match fit_slope(&groups, bootstrap) {
                    Ok(fit) => println!(
                        "{metric:<9} slope {:.4}  95% band [{:.4}, {:.4}]  over {} horizons",
                        fit.slope,
                        fit.band.0,
                        fit.band.1,
                        fit.medians.len()
                    ),
                    Err(e) => println!("{metric:<9} {e}"),
                }
            }
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
