//! `enn` command line: `train`, `evaluate`, `predict`, `roc`.
//!
//! Results go to stdout as `key=value` pairs, diagnostics to stderr. Exit
//! status is 0 on success, 1 on data or runtime errors, 2 on usage errors.

use std::ffi::OsString;
use std::fmt::Display;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::belief::Frame;
use crate::enn::{init_model, EvidentialModel, ModelConfig, DEFAULT_HIDDEN, DEFAULT_PROTOTYPES};
use crate::io::{self as dataio, FeatureDataset, TrainingMeta};
use crate::metrics;
use crate::training::{self, LossMode, OptimizerKind, TrainConfig};

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "enn", version, about = "Evidential prototype classifier on feature-vector CSV files")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a model and write it to a JSON file.
    Train(TrainArgs),
    /// Print accuracy, F1 and AUC on a labeled dataset.
    Evaluate(EvalArgs),
    /// Write per-instance masses, plausibilities and decisions.
    Predict(IoArgs),
    /// Write the ROC curve as CSV.
    Roc(RocArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LossArg {
    /// Squared error on plausibilities with the α penalty.
    #[value(alias = "mse-pl")]
    Eq8,
    /// Cross-entropy on singleton masses.
    #[value(alias = "evidential-ce")]
    Eq9,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OptimizerArg {
    Adam,
    Sgd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ScoreArg {
    /// Plausibility of the positive (first) class.
    Pl,
    /// Mass of the positive singleton.
    Mass,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Training CSV (`?` marks unlabeled rows).
    #[arg(long)]
    train: PathBuf,
    /// Fully labeled validation CSV used for early stopping.
    #[arg(long)]
    val: PathBuf,
    /// Output model path.
    #[arg(long)]
    out: PathBuf,
    /// Number of prototypes.
    #[arg(long, default_value_t = DEFAULT_PROTOTYPES, value_parser = at_least_one)]
    prototypes: usize,
    /// Reduced feature dimension.
    #[arg(long, default_value_t = DEFAULT_HIDDEN, value_parser = at_least_one)]
    hidden: usize,
    #[arg(long, value_enum, default_value_t = LossArg::Eq9)]
    loss: LossArg,
    /// Weight of the consistency loss on unlabeled rows.
    #[arg(long, default_value_t = 1.0, value_parser = non_negative)]
    consistency_weight: f64,
    /// Standard deviation of the Gaussian feature perturbation.
    #[arg(long, default_value_t = 0.1, value_parser = non_negative)]
    noise_sigma: f64,
    /// Perturbed copies per unlabeled row.
    #[arg(long, default_value_t = 2, value_parser = at_least_one)]
    t_perturb: usize,
    #[arg(long, default_value_t = 1e-3, value_parser = positive)]
    lr: f64,
    #[arg(long, default_value_t = 32, value_parser = at_least_one)]
    batch: usize,
    #[arg(long, default_value_t = 200)]
    max_epochs: usize,
    /// Epochs without validation improvement before stopping.
    #[arg(long, default_value_t = 5, value_parser = at_least_one)]
    patience: usize,
    /// Weight of the Σα penalty.
    #[arg(long, default_value_t = 0.01, value_parser = non_negative)]
    lambda: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = OptimizerArg::Adam)]
    optimizer: OptimizerArg,
    /// Comma-separated class names; the first is the positive class.
    #[arg(long, default_value = "positive,negative", value_delimiter = ',')]
    classes: Vec<String>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Scalar used for AUC.
    #[arg(long, value_enum, default_value_t = ScoreArg::Pl)]
    score: ScoreArg,
}

#[derive(Debug, Args)]
struct IoArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct RocArgs {
    #[command(flatten)]
    io: IoArgs,
    #[arg(long, value_enum, default_value_t = ScoreArg::Pl)]
    score: ScoreArg,
}

fn at_least_one(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(v) if v >= 1 => Ok(v),
        Ok(_) => Err("must be at least 1".into()),
        Err(e) => Err(e.to_string()),
    }
}

fn non_negative(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.is_finite() => Ok(v),
        Ok(_) => Err("must be a finite value >= 0".into()),
        Err(e) => Err(e.to_string()),
    }
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        Ok(_) => Err("must be a finite value > 0".into()),
        Err(e) => Err(e.to_string()),
    }
}

/// A failure reported on stderr with its exit status.
struct Failure {
    code: u8,
    message: String,
}

fn runtime(context: impl Display, err: impl Display) -> Failure {
    Failure {
        code: EXIT_FAILURE,
        message: format!("{context}: {err}"),
    }
}

fn io_failure(path: &Path, err: std::io::Error) -> Failure {
    runtime(path.display(), err)
}

/// Runs the CLI on `args` (including the program name) and returns the exit status.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(stderr, "{text}");
                EXIT_USAGE
            } else {
                let _ = write!(stdout, "{text}");
                EXIT_OK
            };
        }
    };
    let result = match cli.command {
        Command::Train(a) => cmd_train(&a, stdout),
        Command::Evaluate(a) => cmd_evaluate(&a, stdout),
        Command::Predict(a) => cmd_predict(&a, stdout),
        Command::Roc(a) => cmd_roc(&a, stdout),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}

fn load_data(path: &Path, class_names: &[String]) -> Result<FeatureDataset, Failure> {
    dataio::load_csv_with_classes(path, class_names).map_err(|e| runtime(path.display(), e))
}

fn load_model(path: &Path) -> Result<EvidentialModel, Failure> {
    dataio::load_model(path)
        .map(|(m, _)| m)
        .map_err(|e| runtime(path.display(), e))
}

fn check_dims(model: &EvidentialModel, data: &FeatureDataset, path: &Path) -> Result<(), Failure> {
    if model.config().d_in != data.d_in() {
        return Err(runtime(
            path.display(),
            format!("data has {} features, model expects {}", data.d_in(), model.config().d_in),
        ));
    }
    Ok(())
}

fn cmd_train(a: &TrainArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let frame = Frame::new(a.classes.iter().cloned()).map_err(|e| Failure {
        code: EXIT_USAGE,
        message: format!("--classes: {e}"),
    })?;
    let frame = Arc::new(frame);
    let train_set = load_data(&a.train, frame.labels())?;
    let val_set = load_data(&a.val, frame.labels())?;
    if val_set.d_in() != train_set.d_in() {
        return Err(runtime(
            a.val.display(),
            format!("has {} features, training data has {}", val_set.d_in(), train_set.d_in()),
        ));
    }
    if let Some(row) = val_set.first_unlabeled_row() {
        return Err(runtime(a.val.display(), format!("row {row}: validation rows must be labeled")));
    }

    let model_cfg = ModelConfig::new(train_set.d_in(), a.hidden, a.prototypes, frame.len()).map_err(|e| Failure {
        code: EXIT_USAGE,
        message: e.to_string(),
    })?;
    let cfg = TrainConfig {
        loss_mode: match a.loss {
            LossArg::Eq8 => LossMode::MsePl,
            LossArg::Eq9 => LossMode::EvidentialCe,
        },
        lambda: a.lambda,
        consistency_weight: a.consistency_weight,
        noise_sigma: a.noise_sigma,
        t_perturb: a.t_perturb,
        learning_rate: a.lr,
        batch_size: a.batch,
        max_epochs: a.max_epochs,
        patience: a.patience,
        seed: a.seed,
        optimizer: match a.optimizer {
            OptimizerArg::Adam => OptimizerKind::Adam,
            OptimizerArg::Sgd => OptimizerKind::Sgd,
        },
        ..TrainConfig::default()
    };

    let (xs, ys): (Vec<Vec<f64>>, Vec<usize>) = train_set
        .features()
        .iter()
        .zip(train_set.labels())
        .filter_map(|(x, y)| y.map(|y| (x.clone(), y)))
        .unzip();
    let model = init_model(model_cfg, frame, &xs, &ys, a.seed).map_err(|e| runtime(a.train.display(), e))?;
    let (model, history) = training::train(model, &train_set, &val_set, &cfg).map_err(|e| runtime("training", e))?;

    for rec in &history.epochs {
        writeln!(out, "epoch={} loss={:.6} val_acc={:.4}", rec.epoch, rec.train_loss, rec.val_accuracy)
            .map_err(|e| runtime("stdout", e))?;
    }
    let meta = TrainingMeta {
        seed: a.seed,
        config: cfg,
        best_val_accuracy: history.best_val_accuracy,
    };
    dataio::save_model(&model, Some(meta), &a.out).map_err(|e| runtime(a.out.display(), e))?;
    writeln!(
        out,
        "best_epoch={} best_val_acc={:.4} epochs={} stopped_early={} model={}",
        history.best_epoch,
        history.best_val_accuracy,
        history.epochs.len(),
        history.stopped_early,
        a.out.display()
    )
    .map_err(|e| runtime("stdout", e))
}

/// Decisions and ROC scores for every row.
fn score_rows(model: &EvidentialModel, data: &FeatureDataset, score: ScoreArg) -> Result<(Vec<usize>, Vec<f64>), Failure> {
    let mut preds = Vec::with_capacity(data.len());
    let mut scores = Vec::with_capacity(data.len());
    for (i, x) in data.features().iter().enumerate() {
        let o = model.forward(x).map_err(|e| runtime(format!("row {}", i + 1), e))?;
        preds.push(o.decide());
        scores.push(match score {
            ScoreArg::Pl => o.pl()[0],
            ScoreArg::Mass => o.singleton(0),
        });
    }
    Ok((preds, scores))
}

fn labels_of(data: &FeatureDataset, path: &Path) -> Result<Vec<usize>, Failure> {
    data.dense_labels().map_err(|e| runtime(path.display(), e))
}

fn cmd_evaluate(a: &EvalArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let model = load_model(&a.model)?;
    let data = load_data(&a.data, model.frame().labels())?;
    check_dims(&model, &data, &a.data)?;
    let truth = labels_of(&data, &a.data)?;
    let (preds, scores) = score_rows(&model, &data, a.score)?;
    let report = metrics::evaluate(&preds, &truth, &scores, 0).map_err(|e| runtime(a.data.display(), e))?;
    writeln!(
        out,
        "accuracy={:.4} f1={:.4} auc={:.4} n={}",
        report.accuracy, report.f1, report.auc, report.n
    )
    .map_err(|e| runtime("stdout", e))
}

fn cmd_predict(a: &IoArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let model = load_model(&a.model)?;
    let data = load_data(&a.data, model.frame().labels())?;
    check_dims(&model, &data, &a.data)?;
    let summary = dataio::export_predictions(&model, &data, &a.out).map_err(|e| runtime(a.out.display(), e))?;
    writeln!(out, "rows={}", summary.rows).map_err(|e| runtime("stdout", e))
}

fn cmd_roc(a: &RocArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let paths = &a.io;
    let model = load_model(&paths.model)?;
    let data = load_data(&paths.data, model.frame().labels())?;
    check_dims(&model, &data, &paths.data)?;
    let truth = labels_of(&data, &paths.data)?;
    let (_, scores) = score_rows(&model, &data, a.score)?;
    let positives: Vec<bool> = truth.iter().map(|&t| t == 0).collect();
    let curve = metrics::roc_points(&scores, &positives).map_err(|e| runtime(paths.data.display(), e))?;
    let area = metrics::auc(&scores, &positives).map_err(|e| runtime(paths.data.display(), e))?;

    let file = File::create(&paths.out).map_err(|e| io_failure(&paths.out, e))?;
    let mut w = BufWriter::new(file);
    let write_all = |w: &mut BufWriter<File>| -> std::io::Result<()> {
        writeln!(w, "fpr,tpr,threshold")?;
        for p in &curve.points {
            writeln!(w, "{},{},{}", p.fpr, p.tpr, p.threshold)?;
        }
        writeln!(w, "# auc={area}")?;
        w.flush()
    };
    write_all(&mut w).map_err(|e| io_failure(&paths.out, e))?;
    writeln!(out, "points={} auc={:.4}", curve.points.len(), area).map_err(|e| runtime("stdout", e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (u8, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(std::iter::once("enn").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn missing_required_flag_is_usage_error() {
        let (code, _, err) = run_args(&["train", "--val", "v.csv", "--out", "m.json"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("--train"));
        assert!(err.contains("Usage"));
    }

    #[test]
    fn out_of_range_flag_is_usage_error() {
        let (code, _, err) = run_args(&["train", "--train", "t", "--val", "v", "--out", "o", "--patience", "0"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("at least 1"));
        let (code, _, _) = run_args(&["train", "--train", "t", "--val", "v", "--out", "o", "--lambda", "-1"]);
        assert_eq!(code, EXIT_USAGE);
        let (code, _, _) = run_args(&["train", "--train", "t", "--val", "v", "--out", "o", "--loss", "eq7"]);
        assert_eq!(code, EXIT_USAGE);
    }

    #[test]
    fn help_lists_defaults() {
        let (code, out, _) = run_args(&["train", "--help"]);
        assert_eq!(code, EXIT_OK);
        for needle in ["[default: 0.01]", "[default: 5]", "[default: 64]", "[default: eq9]"] {
            assert!(out.contains(needle), "help lacks {needle}");
        }
    }

    #[test]
    fn missing_file_is_runtime_error() {
        let (code, _, err) = run_args(&["evaluate", "--model", "/nonexistent/m.json", "--data", "d.csv"]);
        assert_eq!(code, EXIT_FAILURE);
        assert!(err.contains("/nonexistent/m.json"));
    }
}
