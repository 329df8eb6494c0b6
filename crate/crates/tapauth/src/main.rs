use std::io::IsTerminal;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tracing::{error, info};

use tapauth::formats::link::LinkBudgetInput;
use tapauth::formats::read_json;
use tapauth::run::{
    run_attack, run_enroll, run_eval, run_export, run_linkbudget, run_schedule_audit, ExportKind, ExportSource,
    RunContext, RunOutput,
};
use tapauth::scenario::AttackMode;
use tapauth::{HarnessError, Result, Scenario};

/// Simulate tap-rhythm RFID authentication experiments.
#[derive(Parser)]
#[command(name = "tapauth", version)]
struct Cli {
    /// Scenario JSON; without it `--seed` is required and defaults apply.
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, env = "RFR_OUT_DIR", default_value = "out")]
    out: PathBuf,
    /// Overrides the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Log JSON lines to stderr.
    #[arg(long, global = true)]
    json_logs: bool,
    /// Leave the creation time out of bundles so reruns are byte-identical.
    #[arg(long, global = true)]
    no_provenance_time: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Capture the population, train per-user models and write the dataset.
    Enroll,
    /// Held-out accuracy for every K in the scenario.
    Eval,
    /// Run one attack against the enrolled population.
    Attack {
        /// Overrides attack.mode.
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
    },
    /// Generate hopping schedules and check their invariants.
    ScheduleAudit {
        /// Overrides protocol.audit_count.
        #[arg(long)]
        count: Option<usize>,
    },
    /// Received powers and sniffer feasibility for one geometry.
    Linkbudget(LinkArgs),
    /// Write plot data as tidy CSV.
    Export {
        #[arg(long, value_enum)]
        kind: KindArg,
        /// Phase-report CSV to ingest instead of simulating.
        #[arg(long)]
        reports: Option<PathBuf>,
        /// Output directory of an earlier command.
        #[arg(long)]
        bundle: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    BruteForce,
    Visual,
    BasicEavesdrop,
    AdvancedEavesdrop,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Phase,
    PhaseDiff,
    Iq,
    Boxplot,
}

/// Link budget fields; each replaces the scenario's value.
#[derive(Args)]
struct LinkArgs {
    /// JSON file with link budget fields.
    #[arg(long)]
    budget: Option<PathBuf>,
    #[arg(long)]
    p_t: Option<f64>,
    #[arg(long)]
    p_t_dbm: Option<f64>,
    #[arg(long)]
    g_t: Option<f64>,
    #[arg(long)]
    g_t_dbi: Option<f64>,
    #[arg(long)]
    g_r: Option<f64>,
    #[arg(long)]
    g_r_dbi: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    sigma_rcs: Option<f64>,
    #[arg(long)]
    d0: Option<f64>,
    #[arg(long)]
    d1: Option<f64>,
    #[arg(long)]
    d2: Option<f64>,
}

impl LinkArgs {
    fn input(&self) -> LinkBudgetInput {
        LinkBudgetInput {
            p_t: self.p_t,
            p_t_dbm: self.p_t_dbm,
            g_t: self.g_t,
            g_t_dbi: self.g_t_dbi,
            g_r: self.g_r,
            g_r_dbi: self.g_r_dbi,
            lambda: self.lambda,
            sigma_rcs: self.sigma_rcs,
            d0: self.d0,
            d1: self.d1,
            d2: self.d2,
        }
    }
}

fn load_scenario(cli: &Cli) -> Result<Scenario> {
    let mut s = match (&cli.scenario, cli.seed) {
        (Some(p), _) => Scenario::load(p)?,
        (None, Some(seed)) => Scenario::minimal(seed),
        (None, None) => return Err(HarnessError::config("give --scenario or --seed")),
    };
    if let Some(seed) = cli.seed {
        s.seed = seed;
    }
    match &cli.command {
        Command::Attack { mode: Some(m) } => {
            s.attack.mode = match m {
                ModeArg::BruteForce => AttackMode::BruteForce,
                ModeArg::Visual => AttackMode::Visual,
                ModeArg::BasicEavesdrop => AttackMode::BasicEavesdrop,
                ModeArg::AdvancedEavesdrop => AttackMode::AdvancedEavesdrop,
            }
        }
        Command::ScheduleAudit { count: Some(n) } => s.protocol.audit_count = *n,
        Command::Linkbudget(args) => {
            let mut lb = s.channel.link_budget;
            if let Some(p) = &args.budget {
                let file: LinkBudgetInput = read_json(p).map_err(|e| HarnessError::config(e.to_string()))?;
                lb = lb.overlay(&file);
            }
            s.channel.link_budget = lb.overlay(&args.input());
        }
        _ => {}
    }
    s.validate()?;
    Ok(s)
}

fn execute(cli: &Cli) -> Result<RunOutput> {
    let scenario = load_scenario(cli)?;
    let ctx = RunContext {
        out: cli.out.clone(),
        provenance_time: !cli.no_provenance_time,
    };
    info!(seed = scenario.seed, hash = %scenario.hash(), out = %ctx.out.display(), "scenario loaded");
    match &cli.command {
        Command::Enroll => run_enroll(&scenario, &ctx),
        Command::Eval => run_eval(&scenario, &ctx),
        Command::Attack { .. } => run_attack(&scenario, &ctx),
        Command::ScheduleAudit { .. } => run_schedule_audit(&scenario, &ctx),
        Command::Linkbudget(_) => run_linkbudget(&scenario, &ctx),
        Command::Export { kind, reports, bundle } => {
            let kind = match kind {
                KindArg::Phase => ExportKind::Phase,
                KindArg::PhaseDiff => ExportKind::PhaseDiff,
                KindArg::Iq => ExportKind::Iq,
                KindArg::Boxplot => ExportKind::Boxplot,
            };
            let source = ExportSource {
                reports: reports.clone(),
                bundle: bundle.clone(),
            };
            run_export(&scenario, &ctx, kind, &source)
        }
    }
}

fn init_logging(json: bool) {
    let builder = tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_target(false)
        .with_ansi(std::io::stderr().is_terminal());
    if json {
        builder.json().init();
    } else {
        builder.init();
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(cli.json_logs);
    match execute(&cli) {
        Ok(out) => {
            println!("{}", cli.out.join("bundle.json").display());
            match out.failure {
                None => ExitCode::SUCCESS,
                Some(msg) => {
                    error!("{msg}");
                    ExitCode::from(3)
                }
            }
        }
        Err(e) => {
            error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
