//! Command-line surface: subcommands map onto the experiment drivers and
//! every run emits the same analysis-ready file set (metrics.csv,
//! filter_curve.csv, report.json, checkpoint.json, plus a gnuplot
//! template). Exit codes: 0 success, 1 config/input error, 2 numeric
//! failure.

use crate::train::{
    fit_filter_experiment, hyperparameter_search, overpass_demo, train_node_classification,
    ExperimentConfig, FinalMetrics, RunReport, SearchOutcome, TaskKind, TrainError, TrainOutcome,
    TransformModeCfg,
};
use crate::verify::{verify_basis_grid, verify_basis_point};
use clap::{Args, Parser, Subcommand};
use std::fs;
use std::path::{Path, PathBuf};

/// Environment variable that overrides the output directory when no
/// `--out` flag is given.
pub const OUTPUT_DIR_ENV: &str = "ORTHOGNN_OUTPUT_DIR";

#[derive(Parser, Debug)]
#[command(
    name = "orthognn",
    version,
    about = "Spectral graph filters over a learnable orthonormal Jacobi basis"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit the ground-truth spectral filters on grid-graph images.
    FitFilter(RunArgs),
    /// Train the node-classification model with early stopping.
    Classify(RunArgs),
    /// Train without regularization and run the coefficient-scaling
    /// (over-passing) checks on the result.
    OverpassDemo(RunArgs),
    /// Seeded random search over the hyperparameter grids.
    Search(SearchArgs),
    /// Check basis orthonormality, norms, and derivatives against the
    /// quadrature and finite-difference oracles.
    VerifyBasis(VerifyArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    /// JSON config file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Flat key=value config overrides (e.g. --set k=8 --set synthetic.nodes=200).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Convenience override for the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (falls back to ORTHOGNN_OUTPUT_DIR, then the config).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SearchArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Number of sampled trials.
    #[arg(long)]
    budget: Option<usize>,
    /// Task to tune: classify or fit-filter.
    #[arg(long, default_value = "classify")]
    task: String,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Maximum polynomial degree.
    #[arg(long = "K", default_value_t = 10)]
    k: usize,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    a: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    b: f64,
    /// Check the whole 7x7 exponent grid instead of a single point.
    #[arg(long)]
    grid: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// Parses argv and runs the selected subcommand, returning the process
/// exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            // clap renders its own message (naming the offending flag).
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            if err.is_numeric() {
                2
            } else {
                1
            }
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32, TrainError> {
    match cli.command {
        Command::FitFilter(args) => run_task(args, TaskKind::FitFilter),
        Command::Classify(args) => run_task(args, TaskKind::Classify),
        Command::OverpassDemo(args) => run_task(args, TaskKind::OverpassDemo),
        Command::Search(args) => run_search(args),
        Command::VerifyBasis(args) => run_verify(args),
    }
}

fn load_config(args: &RunArgs, task: TaskKind) -> Result<ExperimentConfig, TrainError> {
    let text = match &args.config {
        Some(path) => Some(fs::read_to_string(path).map_err(|e| {
            TrainError::Config(format!("cannot read config {}: {e}", path.display()))
        })?),
        None => None,
    };
    let mut cfg = ExperimentConfig::from_json_with_overrides(text.as_deref(), &args.overrides)?;
    cfg.task = task;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.output_dir = Some(out.clone());
    } else if cfg.output_dir.is_none() {
        if let Ok(dir) = std::env::var(OUTPUT_DIR_ENV) {
            cfg.output_dir = Some(PathBuf::from(dir));
        }
    }
    // Task-appropriate defaults when the user did not pin them: filter
    // fitting removes the feature transform entirely.
    if task == TaskKind::FitFilter {
        cfg.mode = TransformModeCfg::Identity;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn output_dir(cfg: &ExperimentConfig, task_name: &str) -> PathBuf {
    cfg.output_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("runs/{task_name}-seed{}", cfg.seed)))
}

fn run_task(args: RunArgs, task: TaskKind) -> Result<i32, TrainError> {
    let cfg = load_config(&args, task)?;
    let task_name = match task {
        TaskKind::FitFilter => "fit-filter",
        TaskKind::Classify => "classify",
        TaskKind::OverpassDemo => "overpass-demo",
        TaskKind::Verify => "verify",
    };
    let dir = output_dir(&cfg, task_name);
    write_config_echo(&cfg, &dir)?;

    let outcome: TrainOutcome = match task {
        TaskKind::FitFilter => fit_filter_experiment(&cfg)?,
        TaskKind::Classify => train_node_classification(&cfg)?,
        TaskKind::OverpassDemo => overpass_demo(&cfg)?,
        TaskKind::Verify => unreachable!("verify has its own subcommand"),
    };
    write_outputs(&outcome, &dir)?;
    print_summary(&outcome.report, &dir);
    Ok(0)
}

fn run_search(args: SearchArgs) -> Result<i32, TrainError> {
    let task = match args.task.as_str() {
        "classify" => TaskKind::Classify,
        "fit-filter" | "fit_filter" => TaskKind::FitFilter,
        other => {
            return Err(TrainError::Config(format!(
                "search task must be classify or fit-filter, got {other:?}"
            )))
        }
    };
    let mut cfg = load_config(&args.run, task)?;
    if let Some(budget) = args.budget {
        cfg.budget = budget;
    }
    cfg.validate()?;
    let dir = output_dir(&cfg, "search");
    write_config_echo(&cfg, &dir)?;

    let outcome: SearchOutcome = hyperparameter_search(&cfg, cfg.budget)?;
    write_trials_csv(&outcome, &dir)?;
    fs::write(
        dir.join("best_config.json"),
        pretty_json(&outcome.best_config.echo()),
    )?;
    write_outputs(&outcome.best, &dir)?;
    println!(
        "search: {} trials, best #{} (metric {})",
        outcome.trials.len(),
        outcome.best_index,
        fmt_float(outcome.trials[outcome.best_index].metric)
    );
    print_summary(&outcome.best.report, &dir);
    Ok(0)
}

fn run_verify(args: VerifyArgs) -> Result<i32, TrainError> {
    let outcome = if args.grid {
        verify_basis_grid(args.k, args.seed)?
    } else {
        verify_basis_point(args.k, args.a, args.b, args.seed)?
    };
    for check in &outcome.checks {
        println!(
            "{} {}: defect {} (tolerance {})",
            if check.passed() { "PASS" } else { "FAIL" },
            check.what,
            fmt_float(check.defect),
            check.tolerance
        );
    }
    println!(
        "max orthonormality defect: {}",
        fmt_float(outcome.max_defect("orthonormality"))
    );
    Ok(if outcome.passed() { 0 } else { 2 })
}

fn print_summary(report: &RunReport, dir: &Path) {
    match &report.final_metrics {
        FinalMetrics::Classification {
            best_epoch,
            val_accuracy,
            test_accuracy,
            oracle_accuracy,
            repeat_mean,
            repeat_ci95,
        } => {
            println!(
                "classify: best epoch {best_epoch}, val acc {:.4}, test acc {:.4}",
                val_accuracy, test_accuracy
            );
            if let Some(oracle) = oracle_accuracy {
                println!("exact low-pass oracle acc {oracle:.4}");
            }
            if let (Some(mean), Some(ci)) = (repeat_mean, repeat_ci95) {
                println!("test acc over repeats: {mean:.4} +/- {ci:.4} (95% CI)");
            }
        }
        FinalMetrics::FilterFit { per_kind } => {
            for (name, loss) in per_kind {
                println!("fit {name}: avg square loss {}", fmt_float(*loss));
            }
        }
        FinalMetrics::Demo { final_train_loss, final_rms_norm } => {
            println!(
                "demo: final train loss {}, rms norm {:?}",
                fmt_float(*final_train_loss),
                final_rms_norm
            );
            for check in &report.scaling_checks {
                println!(
                    "scaling q={}: argmax invariant {}, {} strictly-correct nodes, {} violations",
                    check.q, check.argmax_invariant, check.strictly_correct_nodes, check.violations
                );
            }
        }
    }
    println!("final (a, b) = ({:.6}, {:.6})", report.final_a, report.final_b);
    println!("wall time: {:.2}s", report.wall_time_secs);
    println!("outputs in {}", dir.display());
}

/// 17 significant digits, round-trip safe for f64.
fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_default()
}

fn pretty_json<T: serde::Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    text
}

/// The config echo is written before training starts so a crashed run
/// still records what it was asked to do.
fn write_config_echo(cfg: &ExperimentConfig, dir: &Path) -> Result<(), TrainError> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("config.json"), pretty_json(&cfg.echo()))?;
    Ok(())
}

/// Emits metrics.csv, filter_curve.csv, report.json, checkpoint.json and
/// a gnuplot template. All numbers use 17-significant-digit formatting;
/// repeated runs with the same seed produce byte-identical files.
pub fn write_outputs(outcome: &TrainOutcome, dir: &Path) -> Result<Vec<PathBuf>, TrainError> {
    fs::create_dir_all(dir)?;
    let report = &outcome.report;
    let mut written = Vec::new();

    let channels = report.channel_count();
    let mut metrics = String::new();
    metrics.push_str("epoch,train_loss,val_loss,val_metric,test_metric,a,b");
    for j in 0..channels {
        metrics.push_str(&format!(",rms_norm_{j}"));
    }
    metrics.push('\n');
    for row in &report.epochs {
        metrics.push_str(&format!(
            "{},{},{},{},{},{},{}",
            row.epoch,
            fmt_float(row.train_loss),
            fmt_opt(row.val_loss),
            fmt_opt(row.val_metric),
            fmt_opt(row.test_metric),
            fmt_float(row.a),
            fmt_float(row.b)
        ));
        for j in 0..channels {
            metrics.push(',');
            if let Some(v) = row.rms_norm.get(j) {
                metrics.push_str(&fmt_float(*v));
            }
        }
        metrics.push('\n');
    }
    let path = dir.join("metrics.csv");
    fs::write(&path, metrics)?;
    written.push(path);

    let mut curve = String::new();
    curve.push_str("lambda");
    for j in 0..channels {
        curve.push_str(&format!(",filter_{j}"));
    }
    curve.push('\n');
    for row in &report.filter_curve {
        curve.push_str(&fmt_float(row.lambda));
        for v in &row.values {
            curve.push(',');
            curve.push_str(&fmt_float(*v));
        }
        curve.push('\n');
    }
    let path = dir.join("filter_curve.csv");
    fs::write(&path, curve)?;
    written.push(path);

    let path = dir.join("report.json");
    fs::write(&path, pretty_json(report))?;
    written.push(path);

    let path = dir.join("checkpoint.json");
    fs::write(&path, pretty_json(&outcome.model.to_checkpoint(&report.config_hash)))?;
    written.push(path);

    let path = dir.join("plot.gp");
    fs::write(&path, gnuplot_template(channels))?;
    written.push(path);

    Ok(written)
}

fn write_trials_csv(outcome: &SearchOutcome, dir: &Path) -> Result<(), TrainError> {
    fs::create_dir_all(dir)?;
    let mut text = String::from("trial,lr,weight_decay,lr_ab,init_a,init_b,metric\n");
    for (i, t) in outcome.trials.iter().enumerate() {
        text.push_str(&format!(
            "{i},{},{},{},{},{},{}\n",
            fmt_float(t.lr),
            fmt_float(t.weight_decay),
            fmt_float(t.lr_ab),
            fmt_float(t.init_a),
            fmt_float(t.init_b),
            fmt_float(t.metric)
        ));
    }
    fs::write(dir.join("trials.csv"), text)?;
    Ok(())
}

fn gnuplot_template(channels: usize) -> String {
    let mut plot_cols = String::new();
    for j in 0..channels {
        if j > 0 {
            plot_cols.push_str(", ");
        }
        plot_cols.push_str(&format!(
            "'filter_curve.csv' using 1:{} with lines title 'channel {j}'",
            j + 2
        ));
    }
    format!(
        "# gnuplot template for run outputs\n\
         set datafile separator ','\n\
         set key autotitle columnhead\n\
         set terminal pngcairo size 900,600\n\
         set output 'loss.png'\n\
         set logscale y\n\
         plot 'metrics.csv' using 1:2 with lines title 'train loss'\n\
         unset logscale y\n\
         set output 'filter.png'\n\
         set xlabel 'lambda'\n\
         set ylabel 'filter value'\n\
         plot {plot_cols}\n"
    )
}
