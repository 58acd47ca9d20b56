use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::Value;

use qfourier::analysis::{integer_vectors, CoefficientTable};
use qfourier::config::{ExperimentConfig, SCHEMA_VERSION};
use qfourier::dataset;
use qfourier::experiment::{compare_coefficients, run_preset, run_training, CoefficientComparison, Preset, PresetOptions, Scale};
use qfourier::noise::{noisy_evaluate, NoiseModel};
use qfourier::spectrum::{spectrum_from_prefactors, MixedSpectrum, Spectrum1D};
use qfourier::training::{mse, predict, r2, TrainReport};
use qfourier::Error;

#[derive(Parser)]
#[command(name = "qfourier", version, about = "Frequency-selected quantum Fourier models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the frequency spectrum of a set of encoding prefactors.
    Spectrum(SpectrumArgs),
    /// Write the scaled grid dataset of a config as CSV.
    GenData(ConfigArgs),
    /// Train the model of a config and write its report.
    Train(TrainArgs),
    /// Run a comparison preset (exp2d or exp4d).
    Experiment(ExperimentArgs),
    /// Write model, target and difference coefficient tables for trained parameters.
    Coeffs(ThetaArgs),
    /// Evaluate trained parameters under shot noise and gate/readout errors.
    NoisyEval(NoisyArgs),
}

#[derive(Args)]
struct SpectrumArgs {
    /// Comma-separated prefactors used for every dimension.
    #[arg(long, alias = "per-dim", value_delimiter = ',', allow_hyphen_values = true, required = true)]
    prefactors: Vec<f64>,
    #[arg(long, default_value_t = 1)]
    dims: usize,
    /// Mixed-frequency groups as one-based features, e.g. `1,2/3,4`; default is one group.
    #[arg(long)]
    groups: Option<String>,
    /// Compare the spectrum size against this parameter count.
    #[arg(long)]
    params: Option<usize>,
    /// Print frequencies as one CSV column instead of text.
    #[arg(long)]
    csv: bool,
}

#[derive(Args)]
struct ConfigArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to the config's `out_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    common: ConfigArgs,
    /// Overrides `train.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Also write coefficient tables for the first run.
    #[arg(long)]
    coeffs: bool,
}

#[derive(Args)]
struct ExperimentArgs {
    preset: String,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Use the full grid, iteration, run and budget settings (very slow).
    #[arg(long)]
    paper_scale: bool,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    iterations: Option<usize>,
    /// Grid points per input dimension.
    #[arg(long)]
    grid: Option<usize>,
    /// Comma-separated parameter budgets for the block sweep.
    #[arg(long, value_delimiter = ',')]
    budgets: Option<Vec<usize>>,
    /// Comma-separated variant names to run, e.g. `selected-parallel,dense-parallel`.
    #[arg(long, value_delimiter = ',')]
    variants: Option<Vec<String>>,
    /// Concurrent trainings; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

#[derive(Args)]
struct ThetaArgs {
    #[command(flatten)]
    common: ConfigArgs,
    /// JSON array of parameters, a train report, or a run report.
    #[arg(long)]
    theta: PathBuf,
    /// Which run of a train report to read.
    #[arg(long, default_value_t = 0)]
    run: usize,
}

#[derive(Args)]
struct NoisyArgs {
    #[command(flatten)]
    theta: ThetaArgs,
    /// Evaluate only the first N test rows.
    #[arg(long)]
    subset: Option<usize>,
    /// Overrides the configured shot count.
    #[arg(long)]
    shots: Option<usize>,
    /// Sampling seed; defaults to `train.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Disable all gate and readout errors.
    #[arg(long)]
    noiseless: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Spectrum(a) => cmd_spectrum(&a),
        Command::GenData(a) => cmd_gen_data(&a),
        Command::Train(a) => cmd_train(&a),
        Command::Experiment(a) => cmd_experiment(&a),
        Command::Coeffs(a) => cmd_coeffs(&a),
        Command::NoisyEval(a) => cmd_noisy_eval(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numeric() { 3 } else { 2 })
        }
    }
}

type Result<T> = qfourier::Result<T>;

fn fmt_freq(w: f64) -> String {
    if w == w.round() {
        format!("{}", w as i64)
    } else {
        format!("{w}")
    }
}

fn parse_groups(text: &str, dims: usize) -> Result<Vec<Vec<usize>>> {
    text.split('/')
        .map(|g| {
            g.split(',')
                .map(|s| match s.trim().parse::<usize>() {
                    Ok(k) if k >= 1 && k <= dims => Ok(k - 1),
                    _ => Err(Error::Config(format!("bad feature index `{s}` in --groups (1..={dims})"))),
                })
                .collect()
        })
        .collect()
}

fn cmd_spectrum(a: &SpectrumArgs) -> Result<()> {
    let s: Spectrum1D = spectrum_from_prefactors(&a.prefactors)?;
    if a.dims == 0 {
        return Err(Error::Config("--dims must be at least 1".into()));
    }
    if a.csv {
        println!("frequency");
        for &w in s.frequencies() {
            println!("{}", fmt_freq(w));
        }
    } else {
        let list: Vec<String> = s.frequencies().iter().map(|&w| fmt_freq(w)).collect();
        println!("frequencies ({}): {{{}}}", s.len(), list.join(", "));
    }
    let groups = match &a.groups {
        Some(g) => parse_groups(g, a.dims)?,
        None => vec![(0..a.dims).collect()],
    };
    let mixed = MixedSpectrum::new(vec![s; a.dims], groups)?;
    let card = mixed.cardinality();
    if a.dims > 1 || a.params.is_some() {
        let per: Vec<String> = card.per_group.iter().map(u128::to_string).collect();
        println!("per-group cardinality: {}", per.join(" + "));
        println!("total: {}", card.total);
        println!("distinct vectors: {}", card.distinct);
    }
    if let Some(p) = a.params {
        let verdict = if p as u128 >= card.total { "sufficient" } else { "insufficient" };
        println!("parameters: {p} ({verdict} for {} frequencies)", card.total);
    }
    Ok(())
}

fn out_dir(common: &ConfigArgs, cfg: &ExperimentConfig) -> Result<PathBuf> {
    let dir = common.out.clone().unwrap_or_else(|| cfg.out_dir.clone());
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Parse(e.to_string()))?;
    fs::write(path, text + "\n")?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

fn cmd_gen_data(a: &ConfigArgs) -> Result<()> {
    let cfg = ExperimentConfig::load(&a.config)?;
    let data = cfg.dataset()?;
    let dir = out_dir(a, &cfg)?;
    let path = dir.join("data.csv");
    dataset::write_csv(&path, &data.inputs, &data.targets)?;
    eprintln!("wrote {} ({} rows)", path.display(), data.len());
    Ok(())
}

fn write_losses(path: &Path, runs: &[TrainReport]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["seed", "iteration", "train_loss", "test_loss"]).map_err(csv_err)?;
    for r in runs {
        for (i, loss) in r.loss_history.iter().enumerate() {
            let test = r.test_loss_history.as_ref().map_or(String::new(), |h| h[i].to_string());
            w.write_record([r.seed.to_string(), i.to_string(), loss.to_string(), test]).map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn write_coefficients(dir: &Path, cmp: &CoefficientComparison) -> Result<()> {
    cmp.model.write_csv(&dir.join("model_coefficients.csv"))?;
    cmp.target.write_csv(&dir.join("target_coefficients.csv"))?;
    let diff = CoefficientTable { dims: cmp.model.dims, n_grid: cmp.model.n_grid, entries: cmp.diff.entries.clone() };
    diff.write_csv(&dir.join("coefficient_diff.csv"))?;
    eprintln!(
        "coefficients: max on-target difference {:.4}, max off-target magnitude {:.4}",
        cmp.on_target_max, cmp.off_target_max
    );
    Ok(())
}

fn cmd_train(a: &TrainArgs) -> Result<()> {
    let mut cfg = ExperimentConfig::load(&a.common.config)?;
    if let Some(seed) = a.seed {
        cfg.train.seed = seed;
    }
    let dir = out_dir(&a.common, &cfg)?;
    let outcome = run_training(&cfg)?;
    for r in &outcome.report.runs {
        eprintln!("seed {}: r2_train {:.4} r2_test {:.4} ({:.1}s)", r.seed, r.r2_train, r.r2_test, r.wall_time_s);
    }
    write_json(&dir.join("report.json"), &outcome.report)?;
    write_losses(&dir.join("loss.csv"), &outcome.report.runs)?;
    if a.coeffs {
        let spec = cfg.target_spec()?;
        let cmp = compare_coefficients(&outcome.circuit, &outcome.report.runs[0].final_theta, &spec, &outcome.scaling)?;
        write_coefficients(&dir, &cmp)?;
    }
    Ok(())
}

fn cmd_experiment(a: &ExperimentArgs) -> Result<()> {
    let preset: Preset = a.preset.parse()?;
    let opts = PresetOptions {
        scale: if a.paper_scale { Scale::Paper } else { Scale::Desk },
        seed: a.seed,
        n_runs: a.runs,
        iterations: a.iterations,
        points_per_dim: a.grid,
        budgets: a.budgets.clone(),
        variants: a.variants.clone(),
        workers: a.workers,
    };
    if a.paper_scale {
        eprintln!("warning: {}", qfourier::experiment::PAPER_SCALE_WARNING);
    }
    let outcome = run_preset(preset, &opts)?;
    fs::create_dir_all(&a.out)?;
    let name = &a.preset;
    write_json(&a.out.join(format!("{name}_report.json")), &outcome.report)?;
    let mut w = csv::Writer::from_path(a.out.join(format!("{name}_scores.csv"))).map_err(csv_err)?;
    w.write_record(["variant", "budget", "blocks_per_layer", "n_params", "seed", "r2_train", "r2_test"])
        .map_err(csv_err)?;
    for v in &outcome.report.results {
        eprintln!(
            "{:<18} B={:<3} params={:<4} median r2_test {:.4} [q25 {:.4}, q75 {:.4}]",
            v.variant,
            v.blocks_per_layer,
            v.sufficiency.n_params,
            v.r2_test_summary.median,
            v.r2_test_summary.q25,
            v.r2_test_summary.q75
        );
        for r in &v.runs {
            w.write_record([
                v.variant.clone(),
                v.budget.to_string(),
                v.blocks_per_layer.to_string(),
                v.sufficiency.n_params.to_string(),
                r.seed.to_string(),
                r.r2_train.to_string(),
                r.r2_test.to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush()?;
    if let Some(cmp) = &outcome.coefficients {
        write_coefficients(&a.out, cmp)?;
    }
    Ok(())
}

/// Reads parameters from a bare JSON array, a single run (`final_theta`),
/// a train report (`runs[k].final_theta`) or an experiment report
/// (`best_parallel.final_theta`).
fn load_theta(path: &Path, run: usize) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read parameters {}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
    let arr = if value.is_array() {
        &value
    } else if let Some(t) = value.get("final_theta") {
        t
    } else if let Some(t) = value.get("runs").and_then(|r| r.get(run)).and_then(|r| r.get("final_theta")) {
        t
    } else if let Some(t) = value.get("best_parallel").and_then(|b| b.get("final_theta")) {
        t
    } else {
        return Err(Error::Config(format!("no parameter vector found in {}", path.display())));
    };
    serde_json::from_value(arr.clone()).map_err(|e| Error::Parse(e.to_string()))
}

fn checked_theta(a: &ThetaArgs, n_params: usize) -> Result<Vec<f64>> {
    let theta = load_theta(&a.theta, a.run)?;
    if theta.len() != n_params {
        return Err(Error::Contract(format!(
            "parameter file has {} values, the configured circuit needs {n_params}",
            theta.len()
        )));
    }
    Ok(theta)
}

fn cmd_coeffs(a: &ThetaArgs) -> Result<()> {
    let cfg = ExperimentConfig::load(&a.common.config)?;
    let circuit = cfg.circuit()?;
    let theta = checked_theta(a, circuit.n_params())?;
    let data = cfg.dataset()?;
    let dir = out_dir(&a.common, &cfg)?;
    let cmp = compare_coefficients(&circuit, &theta, &cfg.target_spec()?, &data.scaling)?;
    write_coefficients(&dir, &cmp)?;
    let spectrum = integer_vectors(circuit.spectrum())?.len();
    eprintln!("model spectrum has {spectrum} frequency vectors");
    Ok(())
}

#[derive(Serialize)]
struct NoisyEvalReport {
    schema_version: u32,
    config: ExperimentConfig,
    noise: NoiseModel,
    sampling_seed: u64,
    split_seed: u64,
    subset: Option<usize>,
    n_rows: usize,
    r2_noiseless: f64,
    mse_noiseless: f64,
    r2_noisy: f64,
    mse_noisy: f64,
    predictions_noisy: Vec<f64>,
    predictions_noiseless: Vec<f64>,
}

fn cmd_noisy_eval(a: &NoisyArgs) -> Result<()> {
    let cfg = ExperimentConfig::load(&a.theta.common.config)?;
    let circuit = cfg.circuit()?;
    let theta = checked_theta(&a.theta, circuit.n_params())?;
    let mut noise = if a.noiseless { NoiseModel::noiseless(4096) } else { cfg.noise.clone().unwrap_or_default() };
    if let Some(shots) = a.shots {
        noise.shots = shots;
    }
    noise.validate()?;
    if a.subset == Some(0) {
        return Err(Error::Config("--subset must be at least 1".into()));
    }
    let data = cfg.dataset()?;
    let split = data.split(cfg.train.seed)?;
    let full = data.view(&split.test);
    let view = match a.subset {
        Some(n) => full.head(n),
        None => full,
    };
    let seed = a.seed.unwrap_or(cfg.train.seed);
    let clean = predict(&circuit, &view.inputs, &theta)?;
    let eval = noisy_evaluate(&circuit, &view, &theta, &noise, seed)?;
    let report = NoisyEvalReport {
        schema_version: SCHEMA_VERSION,
        config: cfg.clone(),
        noise,
        sampling_seed: seed,
        split_seed: cfg.train.seed,
        subset: a.subset,
        n_rows: view.len(),
        r2_noiseless: r2(&clean, &view.targets)?,
        mse_noiseless: mse(&clean, &view.targets)?,
        r2_noisy: eval.r2,
        mse_noisy: eval.mse,
        predictions_noisy: eval.predictions,
        predictions_noiseless: clean,
    };
    eprintln!("r2 noiseless {:.4}, noisy {:.4} on {} rows", report.r2_noiseless, report.r2_noisy, report.n_rows);
    let dir = out_dir(&a.theta.common, &cfg)?;
    write_json(&dir.join("noisy_eval.json"), &report)
}
