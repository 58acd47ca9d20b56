//! Config-driven training runs and the two comparison presets: selected vs
//! dense frequencies on the 2D target, separated vs all-mixed groups on the
//! 4D target, each with serial and parallel encodings.

use std::collections::BTreeSet;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    exact_model_coefficients, integer_vectors, model_dft, scaled_target_coefficients, summarize_runs, coefficient_diff,
    CoefficientDiff, CoefficientTable, RunSummary,
};
use crate::circuit::{build_circuit, param_count, parameter_sufficiency, Architecture, ModelConfig, ParamCircuit, SufficiencyReport};
use crate::config::{ExperimentConfig, SCHEMA_VERSION};
use crate::dataset::{generate, Scaling, TargetSpec, DEFAULT_ROW_CAP};
use crate::error::{Error, Result};
use crate::training::{train, TrainConfig, TrainReport};

/// Model and target coefficients on a shared frequency set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientComparison {
    pub model: CoefficientTable,
    pub target: CoefficientTable,
    pub diff: CoefficientDiff,
    /// Largest `|model − target|` where the target is nonzero.
    pub on_target_max: f64,
    /// Largest `|model|` where the target is zero.
    pub off_target_max: f64,
}

fn target_vectors(spec: &TargetSpec) -> Result<Vec<Vec<i64>>> {
    let mut out = vec![vec![0; spec.d]];
    for t in &spec.terms {
        let w: Vec<i64> = t.omega.iter().map(|&v| v.round() as i64).collect();
        if t.omega.iter().zip(&w).any(|(a, &b)| (a - b as f64).abs() > 1e-9) {
            return Err(Error::config(format!("target frequency {:?} is not integer", t.omega)));
        }
        out.push(w.iter().map(|v| -v).collect());
        out.push(w);
    }
    Ok(out)
}

/// Compares a trained model with the scaled target on the union of the
/// model spectrum and the target's vectors.
///
/// Parallel models are read off exactly; otherwise the model output is
/// sampled on a Nyquist-valid grid.
pub fn compare_coefficients(
    circuit: &ParamCircuit,
    theta: &[f64],
    spec: &TargetSpec,
    scaling: &Scaling,
) -> Result<CoefficientComparison> {
    let mut set: BTreeSet<Vec<i64>> = integer_vectors(circuit.spectrum())?.into_iter().collect();
    set.extend(target_vectors(spec)?);
    let freqs: Vec<Vec<i64>> = set.into_iter().collect();
    let model = match exact_model_coefficients(circuit, theta) {
        Ok(t) => t.restrict(&freqs),
        Err(Error::Config(_)) => {
            let max = freqs.iter().flatten().map(|w| w.unsigned_abs()).max().unwrap_or(0) as usize;
            model_dft(circuit, theta, &freqs, 2 * max + 2)?
        }
        Err(e) => return Err(e),
    };
    let target = scaled_target_coefficients(spec, scaling, &freqs)?;
    let diff = coefficient_diff(&model, &target)?;
    let (mut on, mut off) = (0.0f64, 0.0f64);
    for ((m, t), d) in model.entries.iter().zip(&target.entries).zip(&diff.entries) {
        if t.value().norm() > 1e-12 {
            on = on.max(d.value().norm());
        } else {
            off = off.max(m.value().norm());
        }
    }
    Ok(CoefficientComparison { model, target, diff, on_target_max: on, off_target_max: off })
}

/// Report of a config-driven training: `n_runs` seeds starting at `train.seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingReport {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub target: TargetSpec,
    pub sufficiency: SufficiencyReport,
    pub runs: Vec<TrainReport>,
    pub r2_test_summary: RunSummary,
}

pub struct TrainingOutcome {
    pub report: TrainingReport,
    pub circuit: ParamCircuit,
    pub scaling: Scaling,
}

pub fn run_training(config: &ExperimentConfig) -> Result<TrainingOutcome> {
    config.validate()?;
    let target = config.target_spec()?;
    let dataset = config.dataset()?;
    let circuit = config.circuit()?;
    let runs = (0..config.n_runs as u64)
        .map(|k| train(&circuit, &dataset, &TrainConfig { seed: config.train.seed + k, ..config.train.clone() }))
        .collect::<Result<Vec<_>>>()?;
    let scores: Vec<f64> = runs.iter().map(|r| r.r2_test).collect();
    let report = TrainingReport {
        schema_version: SCHEMA_VERSION,
        config: config.clone(),
        target,
        sufficiency: parameter_sufficiency(&config.model)?,
        r2_test_summary: summarize_runs(&scores)?,
        runs,
    };
    Ok(TrainingOutcome { report, circuit, scaling: dataset.scaling })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Exp2d,
    Exp4d,
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exp2d" => Ok(Preset::Exp2d),
            "exp4d" => Ok(Preset::Exp4d),
            other => Err(Error::config(format!("unknown preset `{other}` (expected exp2d or exp4d)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    #[default]
    Desk,
    Paper,
}

/// Overrides on top of a preset's scale defaults.
#[derive(Debug, Clone, Default)]
pub struct PresetOptions {
    pub scale: Scale,
    pub seed: Option<u64>,
    pub n_runs: Option<usize>,
    pub iterations: Option<usize>,
    pub points_per_dim: Option<usize>,
    pub budgets: Option<Vec<usize>>,
    /// Restrict the run to these variant names.
    pub variants: Option<Vec<String>>,
    /// Concurrent trainings; 0 uses the global thread pool.
    pub workers: usize,
}

/// Fully resolved preset settings, embedded in the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PresetSettings {
    pub preset: Preset,
    pub scale: Scale,
    pub points_per_dim: usize,
    pub n_runs: usize,
    pub budgets: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variants: Option<Vec<String>>,
    pub train: TrainConfig,
}

impl PresetSettings {
    pub fn resolve(preset: Preset, opts: &PresetOptions) -> Result<Self> {
        let (points, iterations, runs, budgets) = match (preset, opts.scale) {
            (Preset::Exp2d, Scale::Desk) => (30, 3000, 3, vec![240]),
            (Preset::Exp4d, Scale::Desk) => (12, 3000, 3, vec![144]),
            (Preset::Exp2d, Scale::Paper) => (50, 5000, 100, vec![48, 96, 144, 192, 240, 288, 336]),
            (Preset::Exp4d, Scale::Paper) => (20, 5000, 100, vec![48, 96, 144, 192, 240]),
        };
        let train = TrainConfig {
            iterations: opts.iterations.unwrap_or(iterations),
            seed: opts.seed.unwrap_or(42),
            ..TrainConfig::default()
        };
        train.validate()?;
        let settings = PresetSettings {
            preset,
            scale: opts.scale,
            points_per_dim: opts.points_per_dim.unwrap_or(points),
            n_runs: opts.n_runs.unwrap_or(runs),
            budgets: opts.budgets.clone().unwrap_or(budgets),
            variants: opts.variants.clone(),
            train,
        };
        if settings.n_runs == 0 {
            return Err(Error::config("n_runs must be at least 1"));
        }
        if settings.budgets.is_empty() || settings.budgets.contains(&0) {
            return Err(Error::config("parameter budgets must be positive"));
        }
        Ok(settings)
    }
}

/// A model family compared by a preset; `model.blocks_per_layer` is set per budget.
#[derive(Debug, Clone, PartialEq)]
pub struct Variant {
    pub name: String,
    pub model: ModelConfig,
}

pub fn variants(preset: Preset) -> Vec<Variant> {
    let families: Vec<(&str, Vec<Vec<f64>>, Vec<Vec<usize>>)> = match preset {
        Preset::Exp2d => vec![
            ("selected", vec![vec![10.0, 20.0]; 2], vec![vec![0, 1]]),
            ("dense", vec![vec![1.0, 3.0, 9.0, 27.0]; 2], vec![vec![0, 1]]),
        ],
        Preset::Exp4d => vec![
            ("separated", vec![vec![10.0, 30.0]; 4], vec![vec![0, 1], vec![2, 3]]),
            ("all-mixed", vec![vec![10.0, 30.0]; 4], vec![vec![0, 1, 2, 3]]),
        ],
    };
    let mut out = Vec::new();
    for (family, prefactors, groups) in families {
        out.push(Variant {
            name: format!("{family}-parallel"),
            model: ModelConfig::parallel(prefactors.clone(), groups.clone(), 1),
        });
        out.push(Variant { name: format!("{family}-serial"), model: ModelConfig::serial(prefactors, groups, 1) });
    }
    out
}

/// `B = max(1, round(budget / params_per_block))`.
pub fn blocks_for_budget(model: &ModelConfig, budget: usize) -> usize {
    let per_block = param_count(&ModelConfig { blocks_per_layer: 1, ..model.clone() });
    ((budget as f64 / per_block as f64).round() as usize).max(1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunScore {
    pub seed: u64,
    pub r2_train: f64,
    pub r2_test: f64,
    pub final_train_mse: f64,
    pub final_test_mse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantResult {
    pub variant: String,
    pub architecture: Architecture,
    pub budget: usize,
    pub blocks_per_layer: usize,
    pub sufficiency: SufficiencyReport,
    pub runs: Vec<RunScore>,
    pub r2_test_summary: RunSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestRun {
    pub variant: String,
    pub budget: usize,
    pub blocks_per_layer: usize,
    pub seed: u64,
    pub r2_test: f64,
    pub final_theta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub settings: PresetSettings,
    pub target: TargetSpec,
    pub warnings: Vec<String>,
    pub results: Vec<VariantResult>,
    /// Best run of the parallel variant with the highest median test score.
    pub best_parallel: Option<BestRun>,
}

pub struct ExperimentOutcome {
    pub report: ExperimentReport,
    pub coefficients: Option<CoefficientComparison>,
}

pub const PAPER_SCALE_WARNING: &str =
    "--paper-scale trains every variant for 5000 iterations over 100 seeds and several budgets; expect days of CPU time";

struct Job {
    result: usize,
    seed: u64,
}

pub fn run_preset(preset: Preset, opts: &PresetOptions) -> Result<ExperimentOutcome> {
    let settings = PresetSettings::resolve(preset, opts)?;
    let target = match preset {
        Preset::Exp2d => TargetSpec::t2d(),
        Preset::Exp4d => TargetSpec::t4d(),
    };
    let dataset = generate(&target, settings.points_per_dim, DEFAULT_ROW_CAP).map_err(|e| match e {
        Error::Resource(m) => Error::Resource(format!("{m}; reduce --grid")),
        other => other,
    })?;

    let all = variants(preset);
    if let Some(wanted) = &opts.variants {
        if let Some(bad) = wanted.iter().find(|w| !all.iter().any(|v| &v.name == *w)) {
            let names: Vec<&str> = all.iter().map(|v| v.name.as_str()).collect();
            return Err(Error::config(format!("unknown variant `{bad}` (expected one of {})", names.join(", "))));
        }
    }
    // Resolve every (variant, budget) before training anything.
    let mut slots: Vec<(String, ModelConfig, usize, ParamCircuit)> = Vec::new();
    for v in all {
        if opts.variants.as_ref().is_some_and(|w| !w.contains(&v.name)) {
            continue;
        }
        let mut seen = BTreeSet::new();
        for &budget in &settings.budgets {
            let blocks = blocks_for_budget(&v.model, budget);
            if !seen.insert(blocks) {
                continue;
            }
            let model = ModelConfig { blocks_per_layer: blocks, ..v.model.clone() };
            let circuit = build_circuit(&model)?;
            slots.push((v.name.clone(), model, budget, circuit));
        }
    }
    let jobs: Vec<Job> = (0..slots.len())
        .flat_map(|result| (0..settings.n_runs as u64).map(move |k| (result, k)))
        .map(|(result, k)| Job { result, seed: settings.train.seed + k })
        .collect();
    let run_job = |job: &Job| {
        let cfg = TrainConfig { seed: job.seed, ..settings.train.clone() };
        train(&slots[job.result].3, &dataset, &cfg)
    };
    let reports: Vec<TrainReport> = if opts.workers > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(opts.workers)
            .build()
            .map_err(|e| Error::Resource(e.to_string()))?;
        pool.install(|| jobs.par_iter().map(run_job).collect::<Result<_>>())?
    } else {
        jobs.par_iter().map(run_job).collect::<Result<_>>()?
    };

    let mut results = Vec::with_capacity(slots.len());
    for (i, (name, model, budget, _)) in slots.iter().enumerate() {
        let runs: Vec<RunScore> = jobs
            .iter()
            .zip(&reports)
            .filter(|(j, _)| j.result == i)
            .map(|(j, r)| RunScore {
                seed: j.seed,
                r2_train: r.r2_train,
                r2_test: r.r2_test,
                final_train_mse: r.final_train_mse,
                final_test_mse: r.final_test_mse,
            })
            .collect();
        let scores: Vec<f64> = runs.iter().map(|r| r.r2_test).collect();
        results.push(VariantResult {
            variant: name.clone(),
            architecture: model.architecture,
            budget: *budget,
            blocks_per_layer: model.blocks_per_layer,
            sufficiency: parameter_sufficiency(model)?,
            r2_test_summary: summarize_runs(&scores)?,
            runs,
        });
    }

    let best_slot = results
        .iter()
        .enumerate()
        .filter(|(_, r)| r.architecture == Architecture::Parallel)
        .fold(None::<(usize, f64)>, |best, (i, r)| match best {
            Some((_, m)) if m >= r.r2_test_summary.median => best,
            _ => Some((i, r.r2_test_summary.median)),
        })
        .map(|(i, _)| i);
    let mut best_parallel = None;
    let mut coefficients = None;
    if let Some(i) = best_slot {
        let (j, report) = jobs
            .iter()
            .zip(&reports)
            .filter(|(j, _)| j.result == i)
            .fold(None::<(&Job, &TrainReport)>, |best, cur| match best {
                Some(b) if b.1.r2_test >= cur.1.r2_test => Some(b),
                _ => Some(cur),
            })
            .expect("every slot has runs");
        let r = &results[i];
        best_parallel = Some(BestRun {
            variant: r.variant.clone(),
            budget: r.budget,
            blocks_per_layer: r.blocks_per_layer,
            seed: j.seed,
            r2_test: report.r2_test,
            final_theta: report.final_theta.clone(),
        });
        coefficients = Some(compare_coefficients(&slots[i].3, &report.final_theta, &target, &dataset.scaling)?);
    }

    let mut warnings = Vec::new();
    if settings.scale == Scale::Paper {
        warnings.push(PAPER_SCALE_WARNING.to_string());
    }
    Ok(ExperimentOutcome {
        report: ExperimentReport { schema_version: SCHEMA_VERSION, settings, target, warnings, results, best_parallel },
        coefficients,
    })
}
