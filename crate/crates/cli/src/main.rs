use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use cmll::data::parse_dataset_bytes;
use cmll::embedding::{GammaSpec, KernelKind, KernelSpec};
use cmll::harness::report::{bounds_table, eval_table, grid_table, sensitivity_table, Cell, Column, ColumnKind};
use cmll::harness::{
    alpha_sensitivity, bounds_experiment, cross_validate, default_alphas, emit_report, fit_pipeline,
    full_grid, ratio_grid_search, report_metrics, score_split, Format, Method, Table,
};
use cmll::learner::RegressorKind;
use cmll::metrics::{EvalReport, Metric};
use cmll::model_io::{load_model, save_model};
use cmll::{Config, Data, Error};

#[derive(Parser)]
#[command(name = "cmll", version, about = "Compact multi-label learning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a pipeline on a dataset and write the model file.
    Fit {
        #[command(flatten)]
        common: Common,
    },
    /// Score a dataset with a saved model.
    Predict {
        #[command(flatten)]
        io: ModelIo,
    },
    /// Evaluate a saved model on a labeled dataset.
    Eval {
        #[command(flatten)]
        io: ModelIo,
    },
    /// K-fold cross-validation.
    Cv {
        #[command(flatten)]
        common: Common,
    },
    /// Compression-ratio search: μ at a fixed ν, then ν at the best μ.
    Grid {
        #[command(flatten)]
        common: Common,
        /// Evaluate every (μ, ν) pair instead of the two-stage search.
        #[arg(long)]
        full: bool,
        /// ν held fixed during the μ scan.
        #[arg(long, default_value_t = 0.5)]
        nu0: f64,
        /// Selection metric, e.g. average_precision or ranking_loss.
        #[arg(long, default_value = "average_precision")]
        metric: String,
    },
    /// Dependence/recovery trade-off across α.
    Sensitivity {
        #[command(flatten)]
        common: Common,
        /// Comma-separated α values (default 1e-4,1e-3,...,1e4).
        #[arg(long, value_delimiter = ',')]
        alphas: Vec<f64>,
    },
    /// Realized misclassification bounds for MDDM, CMLL_y and CMLL.
    Bounds {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Cmll,
    Kcmll,
    #[value(name = "cmll_y")]
    CmllY,
    Mddm,
    Ori,
}

#[derive(Clone, Copy, ValueEnum)]
enum KernelArg {
    Linear,
    Rbf,
}

#[derive(Clone, Copy, ValueEnum)]
enum LearnerArg {
    Ridge,
    Kridge,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    Csv,
    Jsonl,
}

#[derive(Args)]
struct Output {
    /// Report destination (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    format: FormatArg,
}

#[derive(Args)]
struct ModelIo {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value = "cmll")]
    method: MethodArg,
    /// Feature compression ratio d/D.
    #[arg(long, default_value_t = 0.5)]
    mu: f64,
    /// Label compression ratio m/M.
    #[arg(long, default_value_t = 0.5)]
    nu: f64,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 0.0)]
    lambda: f64,
    /// Learner regularization.
    #[arg(long, default_value_t = 0.1)]
    rho: f64,
    #[arg(long, default_value_t = 0.5)]
    delta: f64,
    #[arg(long, value_enum, default_value = "rbf")]
    kernel: KernelArg,
    /// RBF bandwidth, or "median".
    #[arg(long, default_value = "median")]
    gamma: String,
    /// Jitter on the kernel metric (default 1e-8 trace(Q)/N).
    #[arg(long)]
    kernel_ridge: Option<f64>,
    /// Learner override (default kridge for kcmll, ridge otherwise).
    #[arg(long, value_enum)]
    learner: Option<LearnerArg>,
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,
    #[arg(long, default_value_t = 50)]
    maxc: usize,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Cutoff for precision@k and nDCG@k.
    #[arg(long, default_value_t = 3)]
    at_k: usize,
    #[arg(long)]
    standardize: bool,
    /// Run folds and grid cells in parallel.
    #[arg(long)]
    parallel: bool,
    /// Model file written by `fit`.
    #[arg(long)]
    model: Option<PathBuf>,
    #[command(flatten)]
    output: Output,
}

impl Common {
    fn config(&self) -> Result<Config> {
        let gamma = match self.gamma.as_str() {
            "median" => GammaSpec::Median,
            g => GammaSpec::Value(
                g.parse::<f64>()
                    .map_err(|_| Error::InvalidInput(format!("--gamma expects a number or \"median\", got {g:?}")))?,
            ),
        };
        let kernel = match self.kernel {
            KernelArg::Linear => KernelSpec::linear(),
            KernelArg::Rbf => KernelSpec { kind: KernelKind::Rbf, gamma },
        };
        let cfg = Config {
            method: match self.method {
                MethodArg::Cmll => Method::Cmll,
                MethodArg::Kcmll => Method::Kcmll,
                MethodArg::CmllY => Method::CmllY,
                MethodArg::Mddm => Method::Mddm,
                MethodArg::Ori => Method::Ori,
            },
            mu: self.mu,
            nu: self.nu,
            alpha: self.alpha,
            lambda: self.lambda,
            rho: self.rho,
            delta: self.delta,
            tol: self.tol,
            maxc: self.maxc,
            folds: self.folds,
            seed: self.seed,
            kernel,
            kernel_ridge: self.kernel_ridge,
            learner: self.learner.map(|l| match l {
                LearnerArg::Ridge => RegressorKind::Ridge,
                LearnerArg::Kridge => RegressorKind::KernelRidge,
            }),
            standardize: self.standardize,
            parallel: self.parallel,
            at_k: self.at_k,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn read_data(path: &Path) -> Result<Data> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let name = path.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
    Ok(parse_dataset_bytes(&bytes, &name).with_context(|| format!("parsing {}", path.display()))?)
}

fn write_report(table: &Table, output: &Output) -> Result<()> {
    let format = match output.format {
        FormatArg::Text => Format::Text,
        FormatArg::Csv => Format::Csv,
        FormatArg::Jsonl => Format::Jsonl,
    };
    let bytes = emit_report(table, format)?;
    match &output.out {
        Some(path) => fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))?,
        None => std::io::stdout().write_all(&bytes)?,
    }
    Ok(())
}

fn prediction_table(scores: &cmll::Mat, labels: &cmll::Mat) -> Table {
    let mut columns = vec![Column::new("instance", ColumnKind::Text), Column::new("labels", ColumnKind::Text)];
    columns.extend((0..scores.cols()).map(|j| Column::new(format!("s{j}"), ColumnKind::Num)));
    let rows = (0..scores.rows())
        .map(|i| {
            let on: Vec<String> = (0..labels.cols()).filter(|&j| labels[(i, j)] > 0.5).map(|j| j.to_string()).collect();
            let mut row = vec![Cell::Text(i.to_string()), Cell::Text(on.join(" "))];
            row.extend(scores.row(i).iter().map(|&s| Cell::Num(s)));
            row
        })
        .collect();
    Table { columns, rows }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fit { common } => {
            let cfg = common.config()?;
            let data = read_data(&common.data)?;
            let pipe = fit_pipeline(&data, &cfg)?;
            let path = common
                .model
                .as_ref()
                .ok_or_else(|| Error::InvalidInput("fit requires --model PATH".into()))?;
            fs::write(path, save_model(&pipe)).with_context(|| format!("writing {}", path.display()))?;
            log::info!("wrote {}", path.display());
        }
        Command::Predict { io } => {
            let data = read_data(&io.data)?;
            let pipe = load_model::<f64>(&fs::read(&io.model).with_context(|| format!("reading {}", io.model.display()))?)?;
            let scores = pipe.predict_scores(&data.x)?;
            let labels = pipe.predict_labels(&data.x)?;
            write_report(&prediction_table(&scores, &labels), &io.output)?;
        }
        Command::Eval { io } => {
            let data = read_data(&io.data)?;
            let pipe = load_model::<f64>(&fs::read(&io.model).with_context(|| format!("reading {}", io.model.display()))?)?;
            let metrics = Metric::standard().to_vec();
            let values = score_split(&pipe, &data, &metrics)?;
            let report = EvalReport::from_folds(&metrics, &[values]);
            write_report(&eval_table("model", &report), &io.output)?;
        }
        Command::Cv { common } => {
            let cfg = common.config()?;
            let data = read_data(&common.data)?;
            let report = cross_validate(&data, &cfg)?;
            write_report(&eval_table(&cfg.method.to_string(), &report), &common.output)?;
        }
        Command::Grid { common, full, nu0, metric } => {
            let cfg = common.config()?;
            let metric: Metric = metric.parse()?;
            let data = read_data(&common.data)?;
            let cells = if full {
                full_grid(&data, &cfg)?
            } else {
                let res = ratio_grid_search(&data, &cfg, nu0, metric)?;
                eprintln!("mu* = {}  nu* = {}", res.mu_star, res.nu_star);
                res.cells
            };
            write_report(&grid_table(&cells, &report_metrics(&cfg)), &common.output)?;
        }
        Command::Sensitivity { common, alphas } => {
            let cfg = common.config()?;
            let data = read_data(&common.data)?;
            let alphas = if alphas.is_empty() { default_alphas() } else { alphas };
            let report = alpha_sensitivity(&data, &cfg, &alphas)?;
            eprintln!(
                "anchors: dep in [{}, {}], rec in [{}, {}]",
                report.dep_min, report.dep_max, report.rec_min, report.rec_max
            );
            write_report(&sensitivity_table(&report, &report_metrics(&cfg)), &common.output)?;
        }
        Command::Bounds { common } => {
            let cfg = common.config()?;
            let data = read_data(&common.data)?;
            let table = bounds_experiment(&data, &cfg)?;
            write_report(&bounds_table(&table), &common.output)?;
        }
    }
    Ok(())
}

/// 2 for usage and invalid input, 3 for malformed files, 4 for numeric failures.
fn exit_code(err: &anyhow::Error) -> u8 {
    match err.chain().find_map(|e| e.downcast_ref::<Error>()) {
        Some(Error::Parse { .. } | Error::Deserialize(_) | Error::Version(_)) => 3,
        Some(Error::Numeric(_) | Error::NotPositiveDefinite { .. }) => 4,
        _ => 2,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
