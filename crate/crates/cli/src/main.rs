use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod cmd;
mod inputs;

#[derive(Parser, Debug)]
#[command(name = "unicorr", version, about = "Dense correspondence ground truth, pair sampling and flow evaluation")]
pub struct Cli {
    /// Flat key = value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every random stream.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Directory for written files.
    #[arg(long, global = true, default_value = ".")]
    output_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Flow, covisibility, supervision and FoV masks for one pair.
    GenCovis,
    /// Angle-controlled pair manifests from voxelized scenes.
    SamplePairs,
    /// Flow metrics of one prediction.
    EvalFlow(cmd::eval::EvalFlowArgs),
    /// Dataset-level flow metrics and pose AUC.
    EvalWb(cmd::eval::EvalWbArgs),
    /// Backward-warped views and the 2x2 comparison grid.
    WarpViz(cmd::viz::WarpVizArgs),
    /// Local refinement of a flow field from feature maps.
    Refine(cmd::refine::RefineArgs),
    /// Training losses of a prediction against ground truth.
    LossCheck(cmd::loss::LossCheckArgs),
    /// Per-epoch pair plan over dataset manifests.
    EpochPlan,
}

pub struct Ctx {
    pub config: unicorr::io::config::Config,
    pub seed: u64,
    pub jobs: usize,
    pub output_dir: PathBuf,
}

impl Ctx {
    pub fn output(&self, name: &str) -> PathBuf {
        self.output_dir.join(name)
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let config = match &cli.config {
        Some(p) => unicorr::io::config::Config::load(p)?,
        None => Default::default(),
    };
    let seed = match cli.seed {
        Some(s) => s,
        None => config.get_or("seed", 0u64)?,
    };
    let jobs = match cli.jobs {
        Some(j) => j,
        None => config.get_or("jobs", 0usize)?,
    };
    if jobs > 0 {
        // a pool may already exist when embedded; the explicit pools below still honor `jobs`
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    std::fs::create_dir_all(&cli.output_dir)
        .map_err(|e| unicorr::Error::Io { path: cli.output_dir.clone(), source: e })?;
    let ctx = Ctx {
        config,
        seed,
        jobs,
        output_dir: cli.output_dir,
    };
    match cli.command {
        Command::GenCovis => cmd::covis::gen_covis(&ctx),
        Command::SamplePairs => cmd::sample::sample_pairs(&ctx),
        Command::EvalFlow(a) => cmd::eval::eval_flow(&ctx, &a),
        Command::EvalWb(a) => cmd::eval::eval_wb(&ctx, &a),
        Command::WarpViz(a) => cmd::viz::warp_viz(&ctx, &a),
        Command::Refine(a) => cmd::refine::refine(&ctx, &a),
        Command::LossCheck(a) => cmd::loss::loss_check(&ctx, &a),
        Command::EpochPlan => cmd::epoch::epoch_plan(&ctx),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let kind = err
                .chain()
                .find_map(|e| e.downcast_ref::<unicorr::Error>())
                .map_or("error", unicorr::Error::kind);
            let msg = format!("{err:#}").replace('\n', " ");
            eprintln!("error[{kind}]: {msg}");
            ExitCode::FAILURE
        }
    }
}
