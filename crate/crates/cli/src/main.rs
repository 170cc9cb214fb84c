use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use medlens::pipeline::{explain, run_pipeline, RunConfig, Stage};
use medlens::{Error, Result};

#[derive(Parser)]
#[command(name = "medlens", version, about = "Multi-view anomaly detection for inpatient claims")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// key = value configuration file
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Output directory (overrides the configuration file)
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// key=value override, repeatable
    #[arg(short = 's', long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run every stage, or a contiguous range of them
    Run {
        #[command(flatten)]
        common: Common,
        /// First stage to run
        #[arg(long)]
        from: Option<String>,
        /// Last stage to run
        #[arg(long)]
        to: Option<String>,
    },
    /// Write a synthetic corpus
    Generate(Common),
    /// Filter claims and build profiles and patient histories
    Ingest(Common),
    /// Fixed-effects expenditure regression
    DetectRegression(Common),
    /// Subspace outlier ensemble over ICD codes
    DetectSubspace(Common),
    /// Peer-group excess spending
    DetectPeer(Common),
    /// Instant-runoff fusion of all rankings
    Fuse(Common),
    /// Explain the top fused providers, or one provider with --provider
    Explain {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        provider: Option<String>,
    },
    /// Precision-recall, lift and KS against labels
    Evaluate(Common),
    /// Covariate profile of the top-ranked providers
    Characterize(Common),
    /// Markdown summary of a finished run
    Report(Common),
}

fn load(c: &Common) -> Result<RunConfig> {
    let mut cfg = match &c.config {
        Some(p) => RunConfig::from_file(p, None)?,
        None => RunConfig::new("out"),
    };
    if let Some(o) = &c.out {
        cfg.out_dir = o.clone();
    }
    for kv in &c.overrides {
        cfg.apply_override(kv)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run_stages(c: &Common, stages: &[Stage]) -> Result<()> {
    let cfg = load(c)?;
    let m = run_pipeline(&cfg, stages)?;
    for s in &m.requested {
        let r = &m.stages[s];
        eprintln!("{s}: {} outputs in {} ms", r.outputs.len(), r.duration_ms);
    }
    Ok(())
}

fn range(from: Option<&str>, to: Option<&str>) -> Result<Vec<Stage>> {
    let lo = from.map(str::parse::<Stage>).transpose()?.unwrap_or(Stage::Generate);
    let hi = to.map(str::parse::<Stage>).transpose()?.unwrap_or(Stage::Report);
    if lo > hi {
        return Err(Error::Config(format!("--from {lo} comes after --to {hi}")));
    }
    Ok(Stage::ALL.into_iter().filter(|s| (lo..=hi).contains(s)).collect())
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Run { common, from, to } => run_stages(&common, &range(from.as_deref(), to.as_deref())?),
        Command::Generate(c) => run_stages(&c, &[Stage::Generate]),
        Command::Ingest(c) => run_stages(&c, &[Stage::Ingest]),
        Command::DetectRegression(c) => run_stages(&c, &[Stage::DetectRegression]),
        Command::DetectSubspace(c) => run_stages(&c, &[Stage::DetectSubspace]),
        Command::DetectPeer(c) => run_stages(&c, &[Stage::DetectPeer]),
        Command::Fuse(c) => run_stages(&c, &[Stage::Fuse]),
        Command::Explain { common, provider: None } => run_stages(&common, &[Stage::Explain]),
        Command::Explain {
            common,
            provider: Some(p),
        } => {
            let report = explain(&p, &load(&common)?)?;
            let js = serde_json::to_string_pretty(&report)
                .map_err(|e| Error::Consistency(format!("cannot serialize report: {e}")))?;
            println!("{js}");
            Ok(())
        }
        Command::Evaluate(c) => run_stages(&c, &[Stage::Evaluate]),
        Command::Characterize(c) => run_stages(&c, &[Stage::Characterize]),
        Command::Report(c) => run_stages(&c, &[Stage::Report]),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, Error::StaleDigest { .. }) {
                eprintln!("hint: re-run the upstream stages so their artifacts match the manifest");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
