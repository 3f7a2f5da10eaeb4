use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use plrank::dynamic_model::{phi_from_continuous_time, run_dynamic_gibbs, simulate_dynamic_dataset, SimulationConfig};
use plrank::io::{
    chain_header, read_chains, write_chains, write_summaries, EpochKey, ModelKind, RankingData, RunConfig,
};
use plrank::measures::sample_top_m;
use plrank::oracle::{run_suite, Suite};
use plrank::static_model::run_static_gibbs;
use plrank::{dist, rng_stream, AtomicMeasure, Error, GammaProcessParams, ItemId, PosteriorChain, Result};

#[derive(Parser)]
#[command(name = "plrank", version, about = "Nonparametric Plackett-Luce models for top-m rankings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate rankings and write data.csv and truth.json.
    Simulate(SimulateArgs),
    /// Run the Gibbs sampler and write chain, summary and posterior files.
    Fit(FitArgs),
    /// Run an oracle suite and print a JSON report.
    Diagnose(DiagnoseArgs),
    /// Recompute summary.csv and posterior.json from a chain file.
    Summarize(SummarizeArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Static,
    Dynamic,
}

impl From<Model> for ModelKind {
    fn from(m: Model) -> Self {
        match m {
            Model::Static => ModelKind::Static,
            Model::Dynamic => ModelKind::Dynamic,
        }
    }
}

#[derive(Args)]
struct OutDir {
    /// Output directory (falls back to PLRANK_OUTPUT_DIR).
    #[arg(long, env = "PLRANK_OUTPUT_DIR")]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, value_enum)]
    model: Model,
    #[arg(long)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    tau: f64,
    /// Dependence between consecutive epochs (dynamic model).
    #[arg(long, conflicts_with = "xi")]
    phi: Option<f64>,
    /// Continuous-time rate; epochs are one time unit apart.
    #[arg(long)]
    xi: Option<f64>,
    /// Number of epochs (one list each); for the static model, the number of lists.
    #[arg(long)]
    epochs: usize,
    #[arg(long)]
    list_len: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    out: OutDir,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long, value_enum)]
    model: Option<Model>,
    #[arg(long)]
    data: PathBuf,
    /// JSON run configuration; unspecified fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    chains: Option<usize>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long)]
    thinning: Option<usize>,
    #[command(flatten)]
    out: OutDir,
}

#[derive(Args)]
struct DiagnoseArgs {
    #[arg(long, value_parser = parse_suite)]
    suite: Suite,
    #[arg(long, default_value_t = 20_240_601)]
    seed: u64,
}

#[derive(Args)]
struct SummarizeArgs {
    #[arg(long)]
    chain: PathBuf,
    #[command(flatten)]
    out: OutDir,
}

fn parse_suite(s: &str) -> std::result::Result<Suite, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Serialize, Deserialize)]
struct Truth {
    model: String,
    alpha: f64,
    tau: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    xi: Option<f64>,
    phis: Vec<f64>,
    epochs: Vec<String>,
    /// Labels of the ranked items, in the order of each weight row.
    items: Vec<String>,
    /// One row per measure: a single row for the static model.
    weights: Vec<Vec<f64>>,
    unseen: Vec<f64>,
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut f = fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    writeln!(f)?;
    Ok(())
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let mut rng = rng_stream(a.seed, 0);
    let params = GammaProcessParams::new(a.alpha, a.tau)?;
    if a.epochs == 0 {
        return Err(Error::Config("epochs must be at least 1".into()));
    }
    let epochs: Vec<EpochKey> = (1..=a.epochs as i64).map(EpochKey::Index).collect();
    let names: Vec<String> = epochs.iter().map(|e| e.to_string()).collect();
    let (data, truth) = match a.model {
        Model::Static => {
            let mut g = AtomicMeasure::from_remainder(dist::gamma(&mut rng, a.alpha, a.tau))?;
            let lists = (0..a.epochs)
                .map(|_| sample_top_m(&params, &mut g, a.list_len, &mut rng))
                .collect::<Result<Vec<_>>>()?;
            let data = RankingData::from_lists(epochs, lists)?;
            let ids: Vec<ItemId> = g.atoms().keys().copied().collect();
            let observed: Vec<ItemId> = ids
                .into_iter()
                .filter(|id| data.labels.contains(&id.to_string()))
                .collect();
            let weights: Vec<f64> = observed.iter().map(|id| g.atoms()[id]).collect();
            let unseen = g.total_mass() - weights.iter().sum::<f64>();
            let truth = Truth {
                model: "static".into(),
                alpha: a.alpha,
                tau: a.tau,
                xi: None,
                phis: Vec::new(),
                epochs: names,
                items: observed.iter().map(|id| id.to_string()).collect(),
                weights: vec![weights],
                unseen: vec![unseen.max(0.0)],
            };
            (data, truth)
        }
        Model::Dynamic => {
            let phi = match (a.phi, a.xi) {
                (Some(p), None) => p,
                (None, Some(xi)) => phi_from_continuous_time(a.tau, xi, 1.0)?,
                _ => return Err(Error::Config("the dynamic model needs one of --phi or --xi".into())),
            };
            let cfg = SimulationConfig {
                epochs: a.epochs,
                lists_per_epoch: 1,
                list_len: a.list_len,
                tau: a.tau,
            };
            let phis = vec![phi; a.epochs - 1];
            let ds = simulate_dynamic_dataset(&cfg, a.alpha, &phis, &mut rng)?;
            let lists = ds.rankings.into_iter().map(|mut l| l.remove(0)).collect();
            let data = RankingData::from_lists(epochs, lists)?;
            let truth = Truth {
                model: "dynamic".into(),
                alpha: a.alpha,
                tau: a.tau,
                xi: a.xi,
                phis,
                epochs: names,
                items: ds.truth.items.iter().map(|id| id.to_string()).collect(),
                weights: ds.truth.weights,
                unseen: ds.truth.unseen,
            };
            (data, truth)
        }
    };
    fs::create_dir_all(&a.out.out)?;
    data.write_csv(&a.out.out.join("data.csv"))?;
    write_json(&a.out.out.join("truth.json"), &truth)
}

fn fit(a: FitArgs) -> Result<()> {
    let mut cfg = match &a.config {
        Some(p) => RunConfig::from_path(p)?,
        None => RunConfig::default(),
    };
    if let Some(m) = a.model {
        cfg.model = m.into();
    }
    if let Some(s) = a.seed {
        cfg.seed = Some(s);
    }
    if let Some(c) = a.chains {
        cfg.chains = c;
    }
    if let Some(i) = a.iterations {
        cfg.iterations = i;
    }
    if let Some(b) = a.burn_in {
        cfg.burn_in = b;
    }
    if let Some(t) = a.thinning {
        cfg.thinning = t;
    }
    cfg.validate()?;
    let seed = cfg.seed.unwrap_or(0);
    let data = RankingData::read_csv(&a.data)?;
    let chain_cfg = cfg.chain_config();
    let (chains, epochs) = match cfg.model {
        ModelKind::Static => {
            let chains = (0..cfg.chains as u64)
                .into_par_iter()
                .map(|i| run_static_gibbs(&data.lists, &chain_cfg, &mut rng_stream(seed, i)))
                .collect::<Result<Vec<PosteriorChain>>>()?;
            (chains, vec!["all".to_string()])
        }
        ModelKind::Dynamic => {
            let dyn_cfg = cfg.dynamic_config(|unit| data.gaps(unit));
            let epochs = data.epoch_lists();
            let chains = (0..cfg.chains as u64)
                .into_par_iter()
                .map(|i| run_dynamic_gibbs(&epochs, &chain_cfg, &dyn_cfg, &mut rng_stream(seed, i)))
                .collect::<Result<Vec<PosteriorChain>>>()?;
            (chains, data.epochs.iter().map(|e| e.to_string()).collect())
        }
    };
    let header = chain_header(cfg.model.name(), &chains, epochs, |id| data.label(id).to_string())?;
    let out = &a.out.out;
    fs::create_dir_all(out)?;
    write_chains(&out.join(&cfg.output.chain), &header, &chains)?;
    write_summaries(
        &header,
        &chains,
        &out.join(&cfg.output.summary),
        &out.join(&cfg.output.posterior),
    )
}

fn summarize(a: SummarizeArgs) -> Result<()> {
    let (header, chains) = read_chains(&a.chain)?;
    fs::create_dir_all(&a.out.out)?;
    write_summaries(
        &header,
        &chains,
        &a.out.out.join("summary.csv"),
        &a.out.out.join("posterior.json"),
    )
}

fn diagnose(a: DiagnoseArgs) -> Result<bool> {
    let report = run_suite(a.suite, a.seed)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(report.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate(a).map(|_| true),
        Command::Fit(a) => fit(a).map(|_| true),
        Command::Diagnose(a) => diagnose(a),
        Command::Summarize(a) => summarize(a).map(|_| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
