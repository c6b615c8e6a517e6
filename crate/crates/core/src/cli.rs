//! Command-line front end: synth, fit, train, eval and sweep.
//!
//! A JSON run configuration supplies defaults; flags override it. Artifacts
//! are named by fold and direction so a stage-wise run (`fit`, `train`,
//! `eval`) writes and reads the same files as `eval --end-to-end`.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::cca::{self, CcaMode, CcaModel};
use crate::dataset::{kfold_split, load_dataset, save_dataset, synth_clustered, FoldAssignment, PairedDataset, SynthSpec};
use crate::error::Error;
use crate::eval::{
    assemble_report, crossval_evaluate, evaluate_direction, fold_split, train_direction, train_seed, write_prc_csv,
    CrossValReport, PipelineConfig,
};
use crate::mining::MiningStrategy;
use crate::seed;
use crate::tnn::{Direction, EpochStats, TnnModel, TrainConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

const FOLD_STREAM: u64 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Run(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Run(Error::Numerical(_)) => EXIT_NUMERICAL,
            CliError::Run(_) => EXIT_DATA,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

// ---------------------------------------------------------------------------
// Arguments

#[derive(Debug, Parser)]
#[command(name = "tnn-ccca", version, about = "Cluster-CCA + triplet network cross-modal retrieval")]
pub struct Cli {
    /// JSON run configuration; flags override its fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic two-view dataset.
    Synth(SynthArgs),
    /// Fit CCA or Cluster-CCA.
    Fit(FitArgs),
    /// Train triplet networks on CCA projections.
    Train(TrainArgs),
    /// Cross-validated MAP and PRC.
    Eval(EvalArgs),
    /// Evaluate a grid of values for one parameter.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub classes: Option<usize>,
    #[arg(long)]
    pub per_class: Option<usize>,
    #[arg(long)]
    pub latent: Option<usize>,
    #[arg(long)]
    pub dim_x: Option<usize>,
    #[arg(long)]
    pub dim_y: Option<usize>,
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long)]
    pub separation: Option<f64>,
}

/// Settings shared by every pipeline command.
#[derive(Debug, Args, Default)]
pub struct PipelineArgs {
    /// Dataset manifest written by `synth`.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub mode: Option<CcaMode>,
    #[arg(long, value_parser = positive)]
    pub k: Option<usize>,
    #[arg(long)]
    pub reg: Option<f64>,
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long)]
    pub margin: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batches: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub mining: Option<MiningStrategy>,
    #[arg(long)]
    pub dropout: Option<f64>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    /// Fit on the training part of this fold instead of the whole dataset.
    #[arg(long)]
    pub fold: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[arg(long)]
    pub fold: Option<usize>,
    /// Train only this direction.
    #[arg(long)]
    pub direction: Option<Direction>,
    /// CCA model to project with; defaults to the one `fit` wrote for the same fold.
    #[arg(long)]
    pub cca: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Baseline {
    ClusterCcaOnly,
    CcaOnly,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    /// Fit and train every fold here instead of loading `fit`/`train` artifacts.
    #[arg(long)]
    pub end_to_end: bool,
    /// Rank CCA projections directly, without a triplet network. Fits its own CCA.
    #[arg(long, value_enum)]
    pub baseline: Option<Baseline>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepParam {
    Margin,
    Batches,
    Components,
}

impl SweepParam {
    pub fn default_values(self) -> Vec<f64> {
        match self {
            SweepParam::Margin => (1..=11).map(|i| i as f64 / 10.0).collect(),
            SweepParam::Batches => (0..=12).map(|i| (300 + 50 * i) as f64).collect(),
            SweepParam::Components => vec![10.0, 20.0, 30.0, 40.0, 50.0],
        }
    }
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[arg(long, value_enum)]
    pub param: SweepParam,
    /// Comma-separated values; the standard grid for the parameter if omitted.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    pub values: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    pub baseline: Option<Baseline>,
}

// ---------------------------------------------------------------------------
// Run configuration

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    /// Dataset manifest; takes precedence over `synth`.
    pub data: Option<PathBuf>,
    pub synth: Option<SynthSpec>,
    pub mode: CcaMode,
    pub k: usize,
    pub reg: Option<f64>,
    pub train: TrainConfig,
    pub folds: usize,
    pub directions: Vec<Direction>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            data: None,
            synth: None,
            mode: CcaMode::ClusterCca,
            k: cca::DEFAULT_COMPONENTS,
            reg: None,
            train: TrainConfig::default(),
            folds: 5,
            directions: Direction::BOTH.to_vec(),
            out: None,
            seed: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> crate::Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::load(path, format!("bad run config: {e}")))
    }

    fn apply(&mut self, p: &PipelineArgs) {
        if let Some(v) = &p.data {
            self.data = Some(v.clone());
        }
        if let Some(v) = p.mode {
            self.mode = v;
        }
        if let Some(v) = p.k {
            self.k = v;
        }
        if let Some(v) = p.reg {
            self.reg = Some(v);
        }
        if let Some(v) = p.folds {
            self.folds = v;
        }
        let t = &mut self.train;
        if let Some(v) = p.margin {
            t.margin = v;
        }
        if let Some(v) = p.epochs {
            t.epochs = v;
        }
        if let Some(v) = p.batches {
            t.batch_count = v;
        }
        if let Some(v) = p.lr {
            t.learning_rate = v;
        }
        if let Some(v) = p.mining {
            t.mining = v;
        }
        if let Some(v) = p.dropout {
            t.dropout_rate = v;
        }
    }

    fn validate(&self) -> CliResult<()> {
        if self.k == 0 {
            return Err(usage("k must be at least 1"));
        }
        if self.folds < 2 {
            return Err(usage(format!("folds must be at least 2, got {}", self.folds)));
        }
        if matches!(self.reg, Some(r) if !(r >= 0.0 && r.is_finite())) {
            return Err(usage("reg must be finite and >= 0"));
        }
        if self.directions.is_empty() {
            return Err(usage("directions must not be empty"));
        }
        self.train.validate().map_err(|e| usage(e.to_string()))?;
        if let Some(s) = &self.synth {
            s.validate().map_err(|e| usage(e.to_string()))?;
        }
        Ok(())
    }

    fn pipeline(&self, seed: u64, baseline: Option<Baseline>) -> PipelineConfig {
        let base = PipelineConfig {
            mode: self.mode,
            k: self.k,
            reg: self.reg,
            tnn: Some(self.train.clone()),
            seed,
        };
        match baseline {
            None => base,
            Some(Baseline::ClusterCcaOnly) => base.cluster_cca_only(),
            Some(Baseline::CcaOnly) => base.cca_only(),
        }
    }
}

/// Config file, then global flags, then command flags.
struct Context {
    config: RunConfig,
    seed: u64,
    out: PathBuf,
}

impl Context {
    fn new(cli: &Cli, pipeline: Option<&PipelineArgs>) -> CliResult<Self> {
        let mut config = match &cli.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(s) = cli.seed {
            config.seed = Some(s);
        }
        if let Some(o) = &cli.out {
            config.out = Some(o.clone());
        }
        if let Some(p) = pipeline {
            config.apply(p);
        }
        config.validate()?;
        let seed = config.seed.ok_or_else(|| usage("a seed is required (--seed or \"seed\" in --config)"))?;
        let out = config.out.clone().ok_or_else(|| usage("an output directory is required (--out)"))?;
        fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
        Ok(Context { config, seed, out })
    }

    fn dataset(&self) -> CliResult<PairedDataset> {
        match (&self.config.data, &self.config.synth) {
            (Some(path), _) => Ok(load_dataset(path)?),
            (None, Some(spec)) => Ok(synth_clustered(spec)?),
            (None, None) => Err(usage("no dataset: pass --data or set \"data\" / \"synth\" in the config")),
        }
    }

    fn folds(&self, ds: &PairedDataset, seed: u64) -> CliResult<FoldAssignment> {
        Ok(kfold_split(ds, self.config.folds, fold_seed(seed))?)
    }

    fn path(&self, name: String) -> PathBuf {
        self.out.join(name)
    }
}

/// Seed of the fold assignment for a run seed.
pub fn fold_seed(run_seed: u64) -> u64 {
    seed::derive(run_seed, FOLD_STREAM)
}

pub fn cca_file(fold: Option<usize>) -> String {
    match fold {
        Some(f) => format!("cca_fold{f}.json"),
        None => "cca.json".into(),
    }
}

pub fn tnn_file(direction: Direction, fold: Option<usize>) -> String {
    match fold {
        Some(f) => format!("tnn_{direction}_fold{f}.json"),
        None => format!("tnn_{direction}.json"),
    }
}

fn loss_file(direction: Direction, fold: Option<usize>) -> String {
    match fold {
        Some(f) => format!("loss_{direction}_fold{f}.csv"),
        None => format!("loss_{direction}.csv"),
    }
}

// ---------------------------------------------------------------------------
// Commands

/// Parse `args` (program name first), run, and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Synth(a) => cmd_synth(cli, a),
        Command::Fit(a) => cmd_fit(cli, a),
        Command::Train(a) => cmd_train(cli, a),
        Command::Eval(a) => cmd_eval(cli, a),
        Command::Sweep(a) => cmd_sweep(cli, a),
    }
}

fn cmd_synth(cli: &Cli, a: &SynthArgs) -> CliResult<()> {
    let ctx = Context::new(cli, None)?;
    let mut spec = ctx.config.synth.clone().unwrap_or_default();
    let fields = [
        (&mut spec.class_count, a.classes),
        (&mut spec.samples_per_class, a.per_class),
        (&mut spec.latent_dim, a.latent),
        (&mut spec.dim_x, a.dim_x),
        (&mut spec.dim_y, a.dim_y),
    ];
    for (field, v) in fields {
        if let Some(v) = v {
            *field = v;
        }
    }
    if let Some(v) = a.noise {
        spec.noise_sigma = v;
    }
    if let Some(v) = a.separation {
        spec.class_separation = v;
    }
    spec.seed = ctx.seed;
    spec.validate().map_err(|e| usage(e.to_string()))?;
    let ds = synth_clustered(&spec)?;
    let manifest = save_dataset(&ds, &ctx.out)?;
    println!("wrote {}", manifest.display());
    Ok(())
}

fn cmd_fit(cli: &Cli, a: &FitArgs) -> CliResult<()> {
    let ctx = Context::new(cli, Some(&a.pipeline))?;
    let ds = ctx.dataset()?;
    let train = match a.fold {
        Some(f) => fold_split(&ds, &ctx.folds(&ds, ctx.seed)?, f)?.0,
        None => ds,
    };
    let model = cca::fit(&train, ctx.config.mode, ctx.config.k, ctx.config.reg)?;
    let path = ctx.path(cca_file(a.fold));
    model.save(&path)?;
    let rho: Vec<String> = model.correlations.iter().map(|r| format!("{r:.6}")).collect();
    println!("correlations: {}", rho.join(" "));
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_train(cli: &Cli, a: &TrainArgs) -> CliResult<()> {
    let ctx = Context::new(cli, Some(&a.pipeline))?;
    let ds = ctx.dataset()?;
    let train = match a.fold {
        Some(f) => fold_split(&ds, &ctx.folds(&ds, ctx.seed)?, f)?.0,
        None => ds,
    };
    let cca_path = a.cca.clone().unwrap_or_else(|| ctx.path(cca_file(a.fold)));
    let projected = CcaModel::load(&cca_path)?.project_dataset(&train)?;
    let directions = match a.direction {
        Some(d) => vec![d],
        None => ctx.config.directions.clone(),
    };
    for direction in directions {
        let seed = train_seed(ctx.seed, a.fold.unwrap_or(0), direction);
        let out = train_direction(&projected, direction, &ctx.config.train, seed)?;
        let path = ctx.path(tnn_file(direction, a.fold));
        out.model.save(&path)?;
        write_loss_trace(&ctx.path(loss_file(direction, a.fold)), &out.history)?;
        if out.history.windows(2).any(|w| w[1].mean_loss > w[0].mean_loss) {
            warn!("{direction}: epoch-mean loss is not monotonically decreasing");
        }
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_eval(cli: &Cli, a: &EvalArgs) -> CliResult<()> {
    let ctx = Context::new(cli, Some(&a.pipeline))?;
    let ds = ctx.dataset()?;
    let folds = ctx.folds(&ds, ctx.seed)?;
    let report = if a.end_to_end || a.baseline.is_some() {
        let run = crossval_evaluate(&ds, &folds, &ctx.config.pipeline(ctx.seed, a.baseline))?;
        if a.baseline.is_none() {
            for (f, m) in run.cca_models.iter().enumerate() {
                m.save(ctx.path(cca_file(Some(f))))?;
            }
            for (f, models) in run.tnn_models.iter().enumerate() {
                for m in models {
                    m.save(ctx.path(tnn_file(m.direction, Some(f))))?;
                }
            }
        }
        for w in &run.warnings {
            warn!("{w}");
        }
        run.report
    } else {
        eval_from_artifacts(&ctx, &ds, &folds)?
    };
    write_report(&ctx.out, &report)?;
    for d in Direction::BOTH {
        let r = report.direction(d);
        println!("{d}: MAP {:.4} (fold mean {:.4})", r.map, r.fold_map_mean);
    }
    Ok(())
}

fn eval_from_artifacts(ctx: &Context, ds: &PairedDataset, folds: &FoldAssignment) -> CliResult<CrossValReport> {
    let mut per_dir = vec![Vec::new(), Vec::new()];
    for fold in 0..folds.k {
        let (_, test) = fold_split(ds, folds, fold)?;
        let cca_path = ctx.path(cca_file(Some(fold)));
        let projected = load_artifact(&cca_path, |p| CcaModel::load(p))?.project_dataset(&test)?;
        for (d, direction) in Direction::BOTH.into_iter().enumerate() {
            let model = load_artifact(&ctx.path(tnn_file(direction, Some(fold))), |p| TnnModel::load(p))?;
            let result = evaluate_direction(&projected, direction, Some(&model))?;
            per_dir[d].push((fold, folds.test_indices(fold), result));
        }
    }
    let mut reports = Direction::BOTH.into_iter().zip(per_dir).map(|(d, r)| assemble_report(d, r));
    Ok(CrossValReport {
        audio2visual: reports.next().expect("two directions"),
        visual2audio: reports.next().expect("two directions"),
    })
}

fn load_artifact<T>(path: &Path, load: impl Fn(&Path) -> crate::Result<T>) -> CliResult<T> {
    if !path.exists() {
        return Err(Error::load(
            path,
            "missing model file; run fit/train per fold first or pass --end-to-end",
        )
        .into());
    }
    Ok(load(path)?)
}

fn cmd_sweep(cli: &Cli, a: &SweepArgs) -> CliResult<()> {
    let ctx = Context::new(cli, Some(&a.pipeline))?;
    let values = a.values.clone().unwrap_or_else(|| a.param.default_values());
    if values.is_empty() {
        return Err(usage("sweep needs at least one value"));
    }
    let ds = ctx.dataset()?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["value", "map_a2v", "map_v2a", "wall_seconds"]).map_err(csv_err)?;
    for (i, &value) in values.iter().enumerate() {
        let mut config = ctx.config.clone();
        match a.param {
            SweepParam::Margin => config.train.margin = value,
            SweepParam::Batches => config.train.batch_count = whole(value, "batch count")?,
            SweepParam::Components => config.k = whole(value, "component count")?,
        }
        config.validate()?;
        let seed = ctx.seed.wrapping_add(i as u64);
        let folds = ctx.folds(&ds, seed)?;
        let start = Instant::now();
        let run = crossval_evaluate(&ds, &folds, &config.pipeline(seed, a.baseline))?;
        let secs = start.elapsed().as_secs_f64();
        let r = &run.report;
        info!("{:?} = {value}: a2v {:.4} v2a {:.4}", a.param, r.audio2visual.map, r.visual2audio.map);
        w.write_record([
            format!("{value}"),
            format!("{:?}", r.audio2visual.map),
            format!("{:?}", r.visual2audio.map),
            format!("{secs:.3}"),
        ])
        .map_err(csv_err)?;
    }
    let path = ctx.path("sweep.csv".into());
    let bytes = w.into_inner().map_err(|e| Error::InvalidInput(e.to_string()))?;
    fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn positive(s: &str) -> std::result::Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(v) => Ok(v),
        Err(e) => Err(e.to_string()),
    }
}

fn whole(v: f64, what: &str) -> CliResult<usize> {
    if v >= 1.0 && v.fract() == 0.0 {
        Ok(v as usize)
    } else {
        Err(usage(format!("{what} must be a positive integer, got {v}")))
    }
}

fn csv_err(e: csv::Error) -> CliError {
    Error::InvalidInput(e.to_string()).into()
}

pub fn write_report(dir: &Path, report: &CrossValReport) -> crate::Result<()> {
    report.save(dir.join("report.json"))?;
    for d in Direction::BOTH {
        write_prc_csv(dir.join(format!("prc_{d}.csv")), &report.direction(d).prc)?;
    }
    Ok(())
}

pub fn write_loss_trace(path: &Path, history: &[EpochStats]) -> crate::Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::load(path, e.to_string()))?;
    let err = |e: csv::Error| Error::load(path, e.to_string());
    w.write_record(["epoch", "mean_loss", "active_triplets", "total_triplets", "updates", "skipped_batches"])
        .map_err(err)?;
    for s in history {
        w.write_record([
            s.epoch.to_string(),
            format!("{:?}", s.mean_loss),
            s.active_triplets.to_string(),
            s.total_triplets.to_string(),
            s.updates.to_string(),
            s.skipped_batches.to_string(),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
