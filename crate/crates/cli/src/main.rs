use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use ibcv::harness::{builtin, run_case_with, CaseConfig, MethodToggle, RunOptions, BUILTIN_CASES};

#[derive(Parser)]
#[command(name = "ibcv", version, about = "Immersed boundary benchmark cases with control-volume force diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a builtin case or a configuration file.
    Run(RunArgs),
    /// List the builtin cases.
    ListCases,
    /// Check a configuration file without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args)]
#[command(group(clap::ArgGroup::new("source").required(true).args(["case", "config"])))]
struct RunArgs {
    /// Builtin case name (see `list-cases`).
    #[arg(long)]
    case: Option<String>,
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Coarsening factor: grid cells and duration divided by S.
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    /// Output directory [default: out/<case name>].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated subset of cv, noca, lm.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<MethodToggle>>,
    #[arg(long)]
    checkpoint_every: Option<u64>,
    /// Resume from a checkpoint written into the output directory.
    #[arg(long)]
    restart: Option<PathBuf>,
    /// Write the resolved configuration next to the results.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    save_config: bool,
}

fn resolve(args: &RunArgs) -> anyhow::Result<CaseConfig> {
    let mut cfg = match (&args.case, &args.config) {
        (_, Some(path)) => CaseConfig::load(path)
            .with_context(|| format!("loading {}", path.display()))?
            .scaled(args.scale)?,
        (Some(name), None) => builtin(name, args.scale)?,
        (None, None) => unreachable!("clap requires --case or --config"),
    };
    if let Some(m) = &args.methods {
        cfg.run.methods = m.clone();
    }
    if let Some(n) = args.checkpoint_every {
        cfg.run.checkpoint_every = n;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(args: RunArgs) -> anyhow::Result<()> {
    let cfg = resolve(&args)?;
    let out = args.out.clone().unwrap_or_else(|| PathBuf::from("out").join(&cfg.name));
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    if args.save_config && args.restart.is_none() {
        std::fs::write(out.join("case.toml"), cfg.to_toml()?)?;
    }
    let g = cfg.dimensionless();
    log::info!(
        "{}: {}x{} cells, Re = {:.4}{}{}",
        cfg.name,
        cfg.grid.nx,
        cfg.grid.ny,
        g.re,
        g.kc.map(|k| format!(", KC = {k:.4}")).unwrap_or_default(),
        g.frequency_ratio.map(|f| format!(", f_e/f_0 = {f:.4}")).unwrap_or_default(),
    );
    let opts = RunOptions {
        out: Some(out.clone()),
        restart: args.restart,
        stop_after: None,
    };
    let res = run_case_with(&cfg, &opts)?;
    let s = &res.summary;
    println!(
        "{}: {} steps to t = {}, max CFL {:.3}, max slip {:.2e}",
        s.case, s.stats.steps, s.stats.final_time, s.stats.max_cfl, s.stats.max_slip
    );
    println!("{:<24} {:<14} {:>12} {:>12} {:>12} {:>10}", "target", "method", "mean C_D", "mean C_L", "mean C_T", "max jump");
    for r in &s.series {
        println!(
            "{:<24} {:<14} {:>12.5} {:>12.5} {:>12.5} {:>10.2}",
            r.target, r.method, r.mean_cd, r.mean_cl, r.mean_ct, r.max_jump_ratio_cd
        );
    }
    for w in &s.stats.warnings {
        println!("warning: {w}");
    }
    println!("results in {}", out.display());
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    err.chain()
        .find_map(|e| e.downcast_ref::<ibcv::Error>())
        .map_or(1, |e| e.exit_code() as u8)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::ListCases => {
            for (name, about) in BUILTIN_CASES {
                println!("{name:<28} {about}");
            }
            Ok(())
        }
        Command::Validate { config } => CaseConfig::load(&config)
            .map(|c| println!("{}: ok ({} bodies, {} control volumes)", c.name, c.bodies.len(), c.control_volumes.len()))
            .map_err(Into::into),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
