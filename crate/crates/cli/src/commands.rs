use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use levy_attack::attack::run_attack;
use levy_attack::metrics::{lp_norm, perturbation_sparsity, Norm};
use levy_attack::oracle::{save_model, train_toy_classifier, TrainConfig, TrainedModel};
use levy_attack::validation::{
    validate_sampler, CF_TOLERANCE, KS_TOLERANCE, MIN_VALIDATION_SAMPLES,
};
use levy_attack::{load_model, Bounds, Config, Dataset, Model, PixelScale, RngSeed};
use serde::Serialize;

use crate::data_source::{BlobParams, DataSource, Split};
use crate::dump::dump_result;
use crate::sweep::{report_json, run_sweep, SweepOptions};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn parse_alpha(s: &str) -> Result<f64, String> {
    let a: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if a > 0.0 && a <= 2.0 {
        Ok(a)
    } else {
        Err(format!("alpha must lie in (0, 2], got {a}"))
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "levy-attack",
    version,
    about = "Decision-based adversarial attack with alpha-stable random walks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a small classifier and write it as a model file.
    Train(TrainArgs),
    /// Attack a single sample.
    Attack(AttackArgs),
    /// Attack N samples for each alpha and write a report.
    Sweep(SweepArgs),
    /// Check the alpha-stable sampler against its characteristic function.
    ValidateSampler(ValidateArgs),
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Use generated Gaussian blobs instead of IDX files.
    #[arg(long)]
    synthetic: bool,
    #[arg(long, value_name = "PATH")]
    dataset_images: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    dataset_labels: Option<PathBuf>,
    /// Scale IDX pixels to [0, 1] instead of keeping raw bytes.
    #[arg(long)]
    scale_01: bool,
    /// Number of classes in the IDX label file.
    #[arg(long, default_value_t = 10)]
    num_classes: usize,
    /// Keep only these IDX classes, relabelled 0.. in the given order.
    #[arg(long, value_delimiter = ',')]
    classes: Option<Vec<usize>>,
    #[arg(long, default_value_t = BlobParams::default().classes)]
    blob_classes: usize,
    #[arg(long, default_value_t = BlobParams::default().dim)]
    blob_dim: usize,
    #[arg(long, default_value_t = BlobParams::default().points_per_class)]
    blob_points: usize,
    #[arg(long, default_value_t = BlobParams::default().separation)]
    blob_separation: f64,
    #[arg(long, default_value_t = BlobParams::default().data_seed)]
    data_seed: u64,
}

impl DataArgs {
    fn source(&self) -> Result<DataSource, CliError> {
        match (self.synthetic, &self.dataset_images, &self.dataset_labels) {
            (true, None, None) => Ok(DataSource::Synthetic(BlobParams {
                classes: self.blob_classes,
                dim: self.blob_dim,
                points_per_class: self.blob_points,
                separation: self.blob_separation,
                data_seed: self.data_seed,
            })),
            (true, _, _) => Err(CliError::Usage(
                "--synthetic conflicts with --dataset-images/--dataset-labels".into(),
            )),
            (false, Some(images), Some(labels)) => {
                for p in [images, labels] {
                    require_file(p)?;
                }
                Ok(DataSource::Idx {
                    images: images.clone(),
                    labels: labels.clone(),
                    scale: if self.scale_01 {
                        PixelScale::Unit
                    } else {
                        PixelScale::Raw
                    },
                    scale_01: self.scale_01,
                    num_classes: self.num_classes,
                    classes: self.classes.clone(),
                })
            }
            _ => Err(CliError::Usage(
                "give either --synthetic or both --dataset-images and --dataset-labels".into(),
            )),
        }
    }
}

fn require_file(p: &Path) -> Result<(), CliError> {
    if p.is_file() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("no such file: {}", p.display())))
    }
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// Model file; when absent with --synthetic a model is trained in memory.
    #[arg(long, value_name = "PATH")]
    model: Option<PathBuf>,
    #[command(flatten)]
    train: TrainKnobs,
}

#[derive(Debug, Args)]
struct TrainKnobs {
    /// Hidden layer width; 0 trains softmax regression.
    #[arg(long, default_value_t = 32)]
    hidden: usize,
    #[arg(long, default_value_t = TrainConfig::default().epochs)]
    epochs: usize,
    #[arg(long, default_value_t = TrainConfig::default().learning_rate)]
    learning_rate: f64,
    #[arg(long, default_value_t = 0)]
    train_seed: u64,
    /// Use only the first N training points.
    #[arg(long)]
    train_samples: Option<usize>,
}

impl TrainKnobs {
    fn config(&self) -> TrainConfig {
        TrainConfig {
            hidden: (self.hidden > 0).then_some(self.hidden),
            epochs: self.epochs,
            learning_rate: self.learning_rate,
            ..TrainConfig::default()
        }
    }

    fn train(&self, source: &DataSource) -> Result<(TrainedModel<f64>, Bounds<f64>), CliError> {
        let mut data = source.load(Split::Train).map_err(runtime)?;
        if let Some(n) = self.train_samples {
            data = data.split_at(n.min(data.len())).0;
        }
        let mut rng = RngSeed(self.train_seed).rng();
        let trained = train_toy_classifier(&data, &self.config(), &mut rng).map_err(runtime)?;
        Ok((trained, data.bounds))
    }
}

impl ModelArgs {
    fn resolve(&self, source: &DataSource, data: &Dataset) -> Result<(Model, String), CliError> {
        match (&self.model, source) {
            (Some(path), _) => {
                require_file(path)?;
                let m = load_model(path, data.bounds).map_err(runtime)?;
                Ok((m, path.display().to_string()))
            }
            (None, DataSource::Synthetic(_)) => {
                let (trained, bounds) = self.train.train(source)?;
                eprintln!(
                    "trained in-memory model, train accuracy {:.4}",
                    trained.train_accuracy
                );
                let m = trained.into_oracle(bounds);
                let t = &self.train;
                Ok((
                    m,
                    format!(
                        "inline(hidden={},epochs={},lr={},train_seed={})",
                        t.hidden, t.epochs, t.learning_rate, t.train_seed
                    ),
                ))
            }
            (None, DataSource::Idx { .. }) => {
                Err(CliError::Usage("--model is required with IDX data".into()))
            }
        }
    }
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    train: TrainKnobs,
    /// Destination model file.
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct AttackArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    model: ModelArgs,
    /// Index of the sample to attack.
    #[arg(long, default_value_t = 0)]
    index: usize,
    #[arg(long, default_value_t = 2.0, value_parser = parse_alpha)]
    alpha: f64,
    #[arg(long, default_value_t = 5000)]
    max_steps: usize,
    #[arg(long, default_value_t = 1e-7)]
    psi: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the result as JSON here instead of stdout.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    dump_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    model: ModelArgs,
    /// Exponent to evaluate; repeat for several.
    #[arg(long = "alpha", value_parser = parse_alpha, default_values_t = [2.0, 1.5, 1.0, 0.5])]
    alphas: Vec<f64>,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 5000)]
    max_steps: usize,
    #[arg(long, default_value_t = 1e-7)]
    psi: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker count; overrides LEVY_ATTACK_THREADS.
    #[arg(long)]
    threads: Option<usize>,
    /// Write the JSON report here instead of stdout.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Also write the per-alpha table as CSV.
    #[arg(long, value_name = "PATH")]
    csv: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    dump_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[arg(long = "alpha", value_parser = parse_alpha, default_values_t = [0.5, 1.0, 1.5, 2.0])]
    alphas: Vec<f64>,
    #[arg(long, default_value_t = 100_000)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, A>(args: I) -> i32
where
    I: IntoIterator<Item = A>,
    A: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Train(a) => cmd_train(a),
        Command::Attack(a) => cmd_attack(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::ValidateSampler(a) => cmd_validate(a),
    }
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => {
            fs::write(p, text).map_err(|e| runtime(format!("cannot write {}: {e}", p.display())))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_train(a: TrainArgs) -> Result<(), CliError> {
    let source = a.data.source()?;
    let (trained, _) = a.train.train(&source)?;
    save_model(&trained.network, &a.out).map_err(runtime)?;
    println!(
        "wrote {} (train accuracy {:.4})",
        a.out.display(),
        trained.train_accuracy
    );
    Ok(())
}

#[derive(Serialize)]
struct AttackRecord<'a> {
    index: usize,
    label: usize,
    config: &'a Config,
    final_label: usize,
    success: bool,
    terminated_by: levy_attack::Termination,
    steps_taken: usize,
    queries_used: u64,
    linf: f64,
    l1: f64,
    l2: f64,
    sparsity: Option<f64>,
    final_distance: f64,
}

fn cmd_attack(a: AttackArgs) -> Result<(), CliError> {
    let source = a.data.source()?;
    let data = source.load(Split::Test).map_err(runtime)?;
    if a.index >= data.len() {
        return Err(CliError::Usage(format!(
            "--index {} out of range ({} samples)",
            a.index,
            data.len()
        )));
    }
    let (mut oracle, _) = a.model.resolve(&source, &data)?;
    let config = Config {
        alpha: a.alpha,
        max_steps: a.max_steps,
        psi: a.psi,
        seed: RngSeed(a.seed),
        ..Config::default()
    };
    config
        .validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let x = &data.points[a.index];
    let y = data.labels[a.index];
    let r = run_attack(&mut oracle, x, y, &config).map_err(runtime)?;
    let tau = &r.perturbation;
    let record = AttackRecord {
        index: a.index,
        label: y.0,
        config: &config,
        final_label: r.final_label.0,
        success: r.is_success(),
        terminated_by: r.terminated_by,
        steps_taken: r.steps_taken,
        queries_used: r.queries_used,
        linf: lp_norm(tau, Norm::Linf),
        l1: lp_norm(tau, Norm::L1),
        l2: lp_norm(tau, Norm::L2),
        sparsity: perturbation_sparsity(tau).ok(),
        final_distance: r.final_distance(),
    };
    if let Some(dir) = &a.dump_dir {
        let (h, w) = source.image_shape(data.dim());
        dump_result(dir, h, w, &data.bounds, x, y.0, &r, a.alpha, a.index).map_err(runtime)?;
    }
    let mut json = serde_json::to_string_pretty(&record).map_err(runtime)?;
    json.push('\n');
    write_or_print(a.out.as_deref(), &json)
}

fn cmd_sweep(a: SweepArgs) -> Result<(), CliError> {
    if a.samples == 0 {
        return Err(CliError::Usage("--samples must be positive".into()));
    }
    if a.threads == Some(0) {
        return Err(CliError::Usage("--threads must be positive".into()));
    }
    let source = a.data.source()?;
    let data = source.load(Split::Test).map_err(runtime)?;
    let (oracle, desc) = a.model.resolve(&source, &data)?;
    if oracle.input_dim() != data.dim() {
        return Err(CliError::Usage(format!(
            "model expects {}-dimensional inputs, dataset has {}",
            oracle.input_dim(),
            data.dim()
        )));
    }
    let opts = SweepOptions {
        alphas: a.alphas,
        samples: a.samples,
        max_steps: a.max_steps,
        psi: a.psi,
        seed: a.seed,
        threads: a.threads,
        dump_dir: a.dump_dir,
    };
    crate::sweep::sample_config(&opts, 2.0, 0)
        .validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let outcome = run_sweep(&oracle, &data, &source, &desc, &opts).map_err(runtime)?;
    for row in &outcome.report.per_alpha {
        eprintln!(
            "alpha {}: {} success, {} fail, {} skipped, mean iterations {}",
            row.alpha,
            row.n_success,
            row.n_fail,
            row.n_skipped,
            row.mean_iterations
                .map_or("-".into(), |v| format!("{v:.1}"))
        );
    }
    if let Some(p) = &a.csv {
        fs::write(p, outcome.report.to_csv())
            .map_err(|e| runtime(format!("cannot write {}: {e}", p.display())))?;
    }
    write_or_print(a.out.as_deref(), &report_json(&outcome.report))
}

fn cmd_validate(a: ValidateArgs) -> Result<(), CliError> {
    if a.n < MIN_VALIDATION_SAMPLES {
        return Err(CliError::Usage(format!(
            "--n must be at least {MIN_VALIDATION_SAMPLES}, got {}",
            a.n
        )));
    }
    let diag = validate_sampler(&a.alphas, a.n, RngSeed(a.seed)).map_err(runtime)?;
    println!("n = {}", diag.n);
    for d in &diag.per_alpha {
        let cf: Vec<String> = d
            .cf_residuals
            .iter()
            .map(|(s, r)| format!("s={s}: {r:.5}"))
            .collect();
        print!(
            "alpha {}: cf residuals [{}] (< {CF_TOLERANCE})",
            d.alpha,
            cf.join(", ")
        );
        if let Some(ks) = d.ks {
            print!(", ks {ks:.5} (< {KS_TOLERANCE})");
        }
        println!(
            ", impulsiveness {:.3}, {}",
            d.impulsiveness,
            if d.passed() { "pass" } else { "FAIL" }
        );
    }
    println!(
        "impulsiveness decreasing in alpha: {}",
        if diag.monotone_impulsiveness {
            "pass"
        } else {
            "FAIL"
        }
    );
    if diag.passed() {
        println!("sampler checks passed");
        Ok(())
    } else {
        Err(CliError::Runtime("sampler checks failed".into()))
    }
}
