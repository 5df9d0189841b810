//! Batch front end: generate data, fit detectors, score, evaluate, explain,
//! and reproduce the toy benchmark table.
//!
//! Every subcommand accepts `--config <file>` with flat `key=value` lines;
//! command-line flags override config values and unknown keys are rejected.
//! Errors are emitted as one JSON object on stderr with a nonzero exit.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Parser, Subcommand};

use anoscope::bench::{bench_rows_to_csv, thyroid_pipeline, toy_benchmark, BenchConfig};
use anoscope::checkpoint::{load_model, save_model};
use anoscope::data::{gen_two_moons, TwoMoonsConfig};
use anoscope::deep::{Activation, MlpSpec};
use anoscope::eval::{EvalReport, LabeledScores};
use anoscope::explain::{lrp_heatmap, neuralize_kde, write_heatmaps_csv};
use anoscope::prob::select_bandwidth;
use anoscope::recon::{select_kpca_gamma, VqNorm};
use anoscope::{
    build_detector, calibrate_threshold, Dataset, DetectorModel, Error, FeatureMap, KernelSpec,
    Label, Loss, ModelFamily, ModelingDimensions, Regularization, Result,
};

#[derive(Parser)]
#[command(name = "anoscope", about = "anomaly detection toolkit", version)]
struct Cli {
    /// Flat key=value config file; flags given on the command line win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset as CSV.
    Generate {
        /// Generator name; currently `two-moons`.
        #[arg(long)]
        toy: Option<String>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit a detector on a CSV dataset and write a checkpoint.
    Fit {
        /// One of: gaussian, gmm, kde, ppca, mve, svdd, svdd-input, ocsvm,
        /// pca, kpca, vq, autoencoder, deep-svdd, deep-svdd-soft, deep-svdd-sad.
        #[arg(long)]
        method: Option<String>,
        /// rbf or linear; defaults to rbf for kernel methods.
        #[arg(long)]
        kernel: Option<String>,
        /// RBF bandwidth; selected automatically when omitted.
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        nu: Option<f64>,
        /// Component / prototype count (gmm, vq).
        #[arg(long)]
        k: Option<usize>,
        /// Latent dimension (ppca, autoencoder, deep-svdd).
        #[arg(long)]
        bottleneck: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long = "in")]
        input: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Zero-based label column in the input CSV (+1 / -1 / blank).
        #[arg(long)]
        labels_col: Option<usize>,
        /// Treat the first input line as a header.
        #[arg(long)]
        header: bool,
    },
    /// Score a CSV dataset with a saved checkpoint; writes `row_id,score,label`.
    Score {
        /// Checkpoint path from `fit`.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long = "in")]
        input: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        labels_col: Option<usize>,
        #[arg(long)]
        header: bool,
    },
    /// Evaluate a `row_id,score,label` CSV produced by `score`.
    Eval {
        #[arg(long = "in")]
        input: Option<PathBuf>,
        /// Target false-alarm level; adds threshold metrics at the empirical
        /// quantile of the scores in the file.
        #[arg(long)]
        alpha: Option<f64>,
        /// csv (default) or json.
        #[arg(long)]
        format: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// LRP heatmaps for every probe row under a saved KDE checkpoint.
    Explain {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long = "in")]
        input: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        labels_col: Option<usize>,
        #[arg(long)]
        header: bool,
    },
    /// Two-moons AUROC table, one row per implemented method.
    BenchToy {
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Robust-scale -> 60:10:30 split -> gamma grid search -> test report.
    ThyroidPipeline {
        /// Labeled CSV; labels in the last column by default.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        nu: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        labels_col: Option<usize>,
        #[arg(long)]
        header: bool,
        /// Report destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Flat key=value file; every key must be consumed by the active command.
struct FileCfg(BTreeMap<String, String>);

impl FileCfg {
    fn load(path: Option<&Path>) -> Result<FileCfg> {
        let mut map = BTreeMap::new();
        let Some(path) = path else {
            return Ok(FileCfg(map));
        };
        let text = std::fs::read_to_string(path).map_err(|source| Error::MissingFile {
            path: path.display().to_string(),
            source,
        })?;
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::ConfigError(format!("line {line:?} is not key=value")));
            };
            map.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(FileCfg(map))
    }

    /// CLI value wins; otherwise the config value is parsed.
    fn merge<T: FromStr>(&mut self, cli: Option<T>, key: &str) -> Result<Option<T>> {
        let file = self.0.remove(key);
        if cli.is_some() {
            return Ok(cli);
        }
        match file {
            None => Ok(None),
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|_| Error::ConfigError(format!("bad value {raw:?} for key {key:?}"))),
        }
    }

    fn merge_flag(&mut self, cli: bool, key: &str) -> Result<bool> {
        Ok(self.merge(Some(cli).filter(|&b| b), key)?.unwrap_or(false))
    }

    fn finish(self) -> Result<()> {
        if let Some(key) = self.0.keys().next() {
            return Err(Error::ConfigError(format!("unknown config key {key:?}")));
        }
        Ok(())
    }
}

fn required<T>(value: Option<T>, key: &str) -> Result<T> {
    value.ok_or_else(|| Error::ConfigError(format!("missing required option --{key}")))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let payload = serde_json::json!({ "error": err.to_string() });
            eprintln!("{payload}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = FileCfg::load(cli.config.as_deref())?;
    match cli.command {
        Command::Generate { toy, n, seed, out } => {
            let toy = cfg.merge(toy, "toy")?.unwrap_or_else(|| "two-moons".into());
            let n = cfg.merge(n, "n")?.unwrap_or(1000);
            let seed = cfg.merge(seed, "seed")?.unwrap_or(0);
            let out = required(cfg.merge(out, "out")?, "out")?;
            cfg.finish()?;
            if toy != "two-moons" {
                return Err(Error::ConfigError(format!("unknown generator {toy:?}")));
            }
            let ds = gen_two_moons(&TwoMoonsConfig {
                n_train: n,
                seed,
                ..TwoMoonsConfig::default()
            })?;
            ds.save_csv(&out)
        }
        Command::Fit {
            method,
            kernel,
            gamma,
            nu,
            k,
            bottleneck,
            seed,
            input,
            out,
            labels_col,
            header,
        } => {
            let method = required(cfg.merge(method, "method")?, "method")?;
            let kernel = cfg.merge(kernel, "kernel")?;
            let gamma = cfg.merge(gamma, "gamma")?;
            let nu = cfg.merge(nu, "nu")?.unwrap_or(0.1);
            let k = cfg.merge(k, "k")?;
            let bottleneck = cfg.merge(bottleneck, "bottleneck")?;
            let seed = cfg.merge(seed, "seed")?.unwrap_or(0);
            let input = required(cfg.merge(input, "in")?, "in")?;
            let out = required(cfg.merge(out, "out")?, "out")?;
            let labels_col = cfg.merge(labels_col, "labels-col")?;
            let header = cfg.merge_flag(header, "header")?;
            cfg.finish()?;
            let train = Dataset::load_csv(&input, header, labels_col)?;
            let dims = resolve_method(&method, &train, kernel.as_deref(), gamma, nu, k, bottleneck, seed)?;
            let model = build_detector(dims)?.fit(&train)?;
            save_model(&out, &model)
        }
        Command::Score {
            model,
            input,
            out,
            labels_col,
            header,
        } => {
            let model_path = required(cfg.merge(model, "model")?, "model")?;
            let input = required(cfg.merge(input, "in")?, "in")?;
            let out = required(cfg.merge(out, "out")?, "out")?;
            let labels_col = cfg.merge(labels_col, "labels-col")?;
            let header = cfg.merge_flag(header, "header")?;
            cfg.finish()?;
            let model = load_model(&model_path)?;
            let data = Dataset::load_csv(&input, header, labels_col)?;
            let scores = score_parallel(&model, &data)?;
            let mut text = String::from("row_id,score,label\n");
            for (i, s) in scores.iter().enumerate() {
                let label = match data.labels()[i] {
                    Label::Normal => "+1",
                    Label::Anomaly => "-1",
                    Label::Unlabeled => "",
                };
                text.push_str(&format!("{i},{s},{label}\n"));
            }
            write_text(&out, &text)
        }
        Command::Eval {
            input,
            alpha,
            format,
            out,
        } => {
            let input = required(cfg.merge(input, "in")?, "in")?;
            let alpha = cfg.merge(alpha, "alpha")?;
            let format = cfg.merge(format, "format")?.unwrap_or_else(|| "csv".into());
            let out = cfg.merge(out, "out")?;
            cfg.finish()?;
            let (scores, labels) = read_score_csv(&input)?;
            let ls = LabeledScores::from_scores(&scores, &labels)?;
            let threshold = alpha.map(|a| calibrate_threshold(&scores, a)).transpose()?;
            let ks: Vec<usize> = [1, 5, 10]
                .into_iter()
                .filter(|&k| k <= scores.len())
                .collect();
            let report = EvalReport::compute(&ls, &ks, threshold.as_ref())?;
            let text = match format.as_str() {
                "csv" => report.to_csv(),
                "json" => report.to_json(),
                other => return Err(Error::ConfigError(format!("unknown format {other:?}"))),
            };
            match out {
                Some(path) => write_text(&path, &text),
                None => {
                    print!("{text}");
                    Ok(())
                }
            }
        }
        Command::Explain {
            model,
            input,
            out,
            labels_col,
            header,
        } => {
            let model_path = required(cfg.merge(model, "model")?, "model")?;
            let input = required(cfg.merge(input, "in")?, "in")?;
            let out = required(cfg.merge(out, "out")?, "out")?;
            let labels_col = cfg.merge(labels_col, "labels-col")?;
            let header = cfg.merge_flag(header, "header")?;
            cfg.finish()?;
            let DetectorModel::Kde(kde) = load_model(&model_path)? else {
                return Err(Error::ConfigError(
                    "explain requires a kde checkpoint".into(),
                ));
            };
            // the neuralized view and the direct score must agree; scoring via
            // the layered form keeps the emitted scores on the explained path
            let net = neuralize_kde(&kde);
            let probes = Dataset::load_csv(&input, header, labels_col)?;
            let heatmaps: Vec<_> = probes
                .iter_rows()
                .enumerate()
                .map(|(i, x)| {
                    debug_assert!((net.score(&x) - kde.score(&x)).abs() < 1e-9);
                    (i, lrp_heatmap(&kde, &x))
                })
                .collect();
            let mut file = std::fs::File::create(&out)?;
            write_heatmaps_csv(&mut file, &heatmaps)
        }
        Command::BenchToy { seed, out } => {
            let seed = cfg.merge(seed, "seed")?.unwrap_or(0);
            let out = required(cfg.merge(out, "out")?, "out")?;
            cfg.finish()?;
            let rows = toy_benchmark(&BenchConfig {
                seed,
                ..BenchConfig::default()
            })?;
            write_text(&out, &bench_rows_to_csv(&rows))
        }
        Command::ThyroidPipeline {
            data,
            nu,
            seed,
            labels_col,
            header,
            out,
        } => {
            let data_path = required(cfg.merge(data, "data")?, "data")?;
            let nu = cfg.merge(nu, "nu")?.unwrap_or(0.15);
            let seed = cfg.merge(seed, "seed")?.unwrap_or(0);
            let labels_col = cfg.merge(labels_col, "labels-col")?;
            let header = cfg.merge_flag(header, "header")?;
            cfg.finish()?;
            let probe = Dataset::load_csv(&data_path, header, None)?;
            let labels_col = labels_col.unwrap_or(probe.dim().saturating_sub(1));
            let data = Dataset::load_csv(&data_path, header, Some(labels_col))?;
            let r = thyroid_pipeline(&data, nu, seed)?;
            let text = format!(
                "gamma_unscaled,{}\ngamma_scaled,{}\nnu,{}\ntest_auroc,{}\n\
                 false_alarm_rate,{}\nmiss_rate,{}\nn_train,{}\nn_val,{}\nn_test,{}\n",
                r.gamma_unscaled,
                r.gamma_scaled,
                r.nu,
                r.test_auroc,
                r.metrics.false_alarm_rate,
                r.metrics.miss_rate,
                r.n_train,
                r.n_val,
                r.n_test
            );
            match out {
                Some(path) => write_text(&path, &text),
                None => {
                    print!("{text}");
                    Ok(())
                }
            }
        }
    }
}

/// Maps a method name plus flags onto the (loss, family, feature map) triple.
#[allow(clippy::too_many_arguments)]
fn resolve_method(
    method: &str,
    train: &Dataset,
    kernel: Option<&str>,
    gamma: Option<f64>,
    nu: f64,
    k: Option<usize>,
    bottleneck: Option<usize>,
    seed: u64,
) -> Result<ModelingDimensions> {
    let reg = Regularization {
        seed,
        ..Regularization::default()
    };
    let kernel_spec = |gamma_auto: &dyn Fn() -> Result<f64>| -> Result<KernelSpec> {
        match kernel.unwrap_or("rbf") {
            "linear" => Ok(KernelSpec::Linear),
            "rbf" => {
                let gamma = match gamma {
                    Some(g) => g,
                    None => gamma_auto()?,
                };
                Ok(KernelSpec::Rbf { gamma })
            }
            other => Err(Error::ConfigError(format!("unknown kernel {other:?}"))),
        }
    };
    // bandwidth fallbacks: held-out likelihood for density models, median
    // pairwise similarity for boundary/subspace models
    let likelihood_gamma = || {
        let n_fit = (train.n() * 4) / 5;
        let idx_fit: Vec<usize> = (0..n_fit).collect();
        let idx_val: Vec<usize> = (n_fit..train.n()).collect();
        select_bandwidth(&train.select(&idx_fit), &train.select(&idx_val))
    };
    let median_gamma = || select_kpca_gamma(train);
    let net = |out_dim: usize, use_bias: bool| {
        MlpSpec::new(
            vec![train.dim(), 32, out_dim],
            Activation::Elu,
            use_bias,
            seed,
        )
    };
    let (loss, model_family, feature_map) = match method {
        "gaussian" => (Loss::NegLogLikelihood, ModelFamily::Gaussian, FeatureMap::RawInput),
        "gmm" => (
            Loss::NegLogLikelihood,
            ModelFamily::Mixture { k: k.unwrap_or(3) },
            FeatureMap::RawInput,
        ),
        "kde" => (
            Loss::NegLogLikelihood,
            ModelFamily::KernelDensity,
            FeatureMap::Kernel(kernel_spec(&likelihood_gamma)?),
        ),
        "ppca" => (
            Loss::NegLogLikelihood,
            ModelFamily::ProbabilisticPca {
                d: bottleneck.unwrap_or(1),
            },
            FeatureMap::RawInput,
        ),
        "mve" => (Loss::Hinge, ModelFamily::Ellipsoid, FeatureMap::RawInput),
        "svdd" => (
            Loss::ShiftedHinge(nu),
            ModelFamily::Hypersphere,
            FeatureMap::Kernel(kernel_spec(&median_gamma)?),
        ),
        "svdd-input" => (
            Loss::ShiftedHinge(nu),
            ModelFamily::Hypersphere,
            FeatureMap::RawInput,
        ),
        "ocsvm" => (
            Loss::ShiftedHinge(nu),
            ModelFamily::Halfspace,
            FeatureMap::Kernel(kernel_spec(&median_gamma)?),
        ),
        "pca" => (
            Loss::SquaredError,
            ModelFamily::Subspace {
                variance_fraction: 0.9,
            },
            FeatureMap::RawInput,
        ),
        "kpca" => (
            Loss::SquaredError,
            ModelFamily::Subspace {
                variance_fraction: 0.9,
            },
            FeatureMap::Kernel(kernel_spec(&median_gamma)?),
        ),
        "vq" => (
            Loss::SquaredError,
            ModelFamily::Prototypes {
                k: k.unwrap_or(8),
                norm: VqNorm::L2,
            },
            FeatureMap::RawInput,
        ),
        "autoencoder" => (
            Loss::SquaredError,
            ModelFamily::Autoencoder,
            FeatureMap::Neural(net(bottleneck.unwrap_or(1), true)?),
        ),
        "deep-svdd" => (
            Loss::LinearOneClass,
            ModelFamily::Hypersphere,
            FeatureMap::Neural(net(bottleneck.unwrap_or(8), false)?),
        ),
        "deep-svdd-soft" => (
            Loss::ShiftedHinge(nu),
            ModelFamily::Hypersphere,
            FeatureMap::Neural(net(bottleneck.unwrap_or(8), false)?),
        ),
        "deep-svdd-sad" => (
            Loss::SemiSupExponent,
            ModelFamily::Hypersphere,
            FeatureMap::Neural(net(bottleneck.unwrap_or(8), false)?),
        ),
        other => {
            return Err(Error::ConfigError(format!("unknown method {other:?}")))
        }
    };
    Ok(ModelingDimensions {
        loss,
        model_family,
        feature_map,
        regularization: reg,
    })
}

/// Batch scoring with at most ANOSCOPE_THREADS worker threads (default 1).
fn score_parallel(model: &DetectorModel, data: &Dataset) -> Result<Vec<f64>> {
    let threads = match std::env::var("ANOSCOPE_THREADS") {
        Err(_) => 1,
        Ok(raw) => raw
            .parse::<usize>()
            .ok()
            .filter(|&t| t >= 1)
            .ok_or_else(|| {
                Error::ConfigError(format!("ANOSCOPE_THREADS={raw:?} is not a positive integer"))
            })?,
    };
    let n = data.n();
    if threads == 1 || n < 2 * threads {
        return Ok(model.score_dataset(data));
    }
    let chunk = n.div_ceil(threads);
    let mut scores = vec![0.0; n];
    std::thread::scope(|scope| {
        for (t, slot) in scores.chunks_mut(chunk).enumerate() {
            scope.spawn(move || {
                for (off, s) in slot.iter_mut().enumerate() {
                    *s = model.score(&data.row(t * chunk + off));
                }
            });
        }
    });
    Ok(scores)
}

/// Reads a `row_id,score,label` CSV back into scores and labels.
fn read_score_csv(path: &Path) -> Result<(Vec<f64>, Vec<Label>)> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::MissingFile {
        path: path.display().to_string(),
        source,
    })?;
    let mut scores = Vec::new();
    let mut labels = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 && line.starts_with("row_id") {
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 3 {
            return Err(Error::ParseError {
                row: i,
                col: 0,
                msg: "expected row_id,score,label".into(),
            });
        }
        let score: f64 = cells[1].parse().map_err(|_| Error::ParseError {
            row: i,
            col: 1,
            msg: format!("{:?} is not a number", cells[1]),
        })?;
        let label = match cells[2].trim() {
            "1" | "+1" => Label::Normal,
            "-1" => Label::Anomaly,
            "" => Label::Unlabeled,
            other => {
                return Err(Error::ParseError {
                    row: i,
                    col: 2,
                    msg: format!("label {other:?} not in {{+1, -1, \"\"}}"),
                })
            }
        };
        scores.push(score);
        labels.push(label);
    }
    Ok((scores, labels))
}
