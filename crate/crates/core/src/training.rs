//! Full-batch Adam training of circuit models on MSE loss.

use std::f64::consts::PI;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{build_circuit, ModelConfig, ParamCircuit};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::simulator::{check_inputs, C64};
use crate::spectral::SpectralEngine;

/// Rows per work unit in data-parallel loops; fixes the reduction order.
pub(crate) const CHUNK: usize = 64;

/// How the loss gradient is evaluated. Both backends compute the same exact gradient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    /// Spectral when the circuit qualifies and it is cheaper, direct otherwise.
    #[default]
    Auto,
    /// Per-row statevector adjoint.
    Direct,
    /// Fourier-coefficient formulation over the data's coordinate grid.
    Spectral,
}

fn default_lr() -> f64 {
    0.001
}
fn default_iterations() -> usize {
    5000
}
fn default_beta1() -> f64 {
    0.9
}
fn default_beta2() -> f64 {
    0.999
}
fn default_epsilon() -> f64 {
    1e-8
}
fn default_init_high() -> f64 {
    2.0 * PI
}
fn default_seed() -> u64 {
    42
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default = "default_beta1")]
    pub beta1: f64,
    #[serde(default = "default_beta2")]
    pub beta2: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub init_low: f64,
    #[serde(default = "default_init_high")]
    pub init_high: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Record test-split loss every iteration (costs one extra prediction pass).
    #[serde(default)]
    pub track_test_loss: bool,
    #[serde(default)]
    pub backend: Backend,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: default_lr(),
            iterations: default_iterations(),
            beta1: default_beta1(),
            beta2: default_beta2(),
            epsilon: default_epsilon(),
            init_low: 0.0,
            init_high: default_init_high(),
            seed: default_seed(),
            track_test_loss: false,
            backend: Backend::Auto,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config(format!("learning_rate must be > 0, got {}", self.learning_rate)));
        }
        if self.iterations == 0 {
            return Err(Error::config("iterations must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::config("Adam betas must lie in [0, 1)"));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::config("epsilon must be finite and non-negative"));
        }
        if !(self.init_low < self.init_high) || !self.init_low.is_finite() || !self.init_high.is_finite() {
            return Err(Error::config("init_low must be below init_high"));
        }
        Ok(())
    }
}

/// Outcome of one training run. `wall_time_s` is the only non-reproducible
/// field and is left out of serialized reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub seed: u64,
    pub backend: Backend,
    pub n_params: usize,
    pub n_train: usize,
    pub n_test: usize,
    /// Train-split MSE before each update.
    pub loss_history: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_loss_history: Option<Vec<f64>>,
    pub final_train_mse: f64,
    pub final_test_mse: f64,
    pub r2_train: f64,
    pub r2_test: f64,
    pub final_theta: Vec<f64>,
    /// Set for training under sampled (noisy) expectations.
    #[serde(default)]
    pub experimental: bool,
    #[serde(skip)]
    pub wall_time_s: f64,
}

pub fn mse(pred: &[f64], actual: &[f64]) -> Result<f64> {
    if pred.len() != actual.len() || pred.is_empty() {
        return Err(Error::contract(format!(
            "mse needs equal nonzero lengths, got {} and {}",
            pred.len(),
            actual.len()
        )));
    }
    Ok(pred.iter().zip(actual).map(|(p, a)| (p - a) * (p - a)).sum::<f64>() / pred.len() as f64)
}

/// Coefficient of determination `1 − SS_res / SS_tot`.
pub fn r2(pred: &[f64], actual: &[f64]) -> Result<f64> {
    if pred.len() != actual.len() || pred.is_empty() {
        return Err(Error::contract(format!(
            "r2 needs equal nonzero lengths, got {} and {}",
            pred.len(),
            actual.len()
        )));
    }
    let mean = actual.iter().sum::<f64>() / actual.len() as f64;
    let ss_tot: f64 = actual.iter().map(|a| (a - mean) * (a - mean)).sum();
    if ss_tot == 0.0 {
        return Err(Error::DegenerateMetric("actual values have zero variance".into()));
    }
    let ss_res: f64 = pred.iter().zip(actual).map(|(p, a)| (p - a) * (p - a)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// Adam moments and step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(n: usize) -> Self {
        AdamState { m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }
}

/// One bias-corrected Adam update; `ε` is added outside the square root.
pub fn adam_step(state: &mut AdamState, theta: &mut [f64], grad: &[f64], config: &TrainConfig) -> Result<()> {
    if theta.len() != grad.len() || state.m.len() != grad.len() {
        return Err(Error::contract("Adam state, parameters and gradient differ in length"));
    }
    if let Some(k) = grad.iter().position(|g| !g.is_finite()) {
        return Err(Error::Numeric {
            iteration: state.t as usize,
            message: format!("gradient component {k} is {}", grad[k]),
        });
    }
    state.t += 1;
    let (b1, b2) = (config.beta1, config.beta2);
    let c1 = 1.0 - b1.powi(state.t as i32);
    let c2 = 1.0 - b2.powi(state.t as i32);
    for i in 0..theta.len() {
        state.m[i] = b1 * state.m[i] + (1.0 - b1) * grad[i];
        state.v[i] = b2 * state.v[i] + (1.0 - b2) * grad[i] * grad[i];
        let m_hat = state.m[i] / c1;
        let v_hat = state.v[i] / c2;
        theta[i] -= config.learning_rate * m_hat / (v_hat.sqrt() + config.epsilon);
    }
    Ok(())
}

/// Uniform draws on `[low, high)` from a ChaCha8 stream seeded with `seed`.
pub fn init_params(n: usize, low: f64, high: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(low..high)).collect()
}

/// Noiseless model outputs for many rows.
pub fn predict(circuit: &ParamCircuit, inputs: &[&[f64]], theta: &[f64]) -> Result<Vec<f64>> {
    for x in inputs {
        check_inputs(circuit, x, theta)?;
    }
    Ok(inputs.par_iter().map(|x| row_output(circuit, x, theta)).collect())
}

fn row_output(circuit: &ParamCircuit, x: &[f64], theta: &[f64]) -> f64 {
    circuit.output_scale() * circuit.blocks().iter().map(|b| b.observable(&b.forward(x, theta))).sum::<f64>()
}

/// Training loss on a fixed set of rows.
pub(crate) trait LossEngine {
    /// MSE at `theta`; `grad` receives its gradient.
    fn loss_grad(&mut self, theta: &[f64], grad: &mut [f64]) -> f64;
    fn predictions(&mut self, theta: &[f64]) -> Vec<f64>;
}

pub(crate) struct DirectEngine<'a> {
    circuit: &'a ParamCircuit,
    inputs: Vec<&'a [f64]>,
    targets: Vec<f64>,
}

impl<'a> DirectEngine<'a> {
    pub(crate) fn new(circuit: &'a ParamCircuit, inputs: Vec<&'a [f64]>, targets: Vec<f64>) -> Self {
        DirectEngine { circuit, inputs, targets }
    }

    /// Squared error of one row plus `coef · ∂f/∂θ · (f − y)` into `grad`.
    fn row(&self, x: &[f64], y: f64, theta: &[f64], coef: f64, grad: &mut [f64]) -> f64 {
        let scale = self.circuit.output_scale();
        let states: Vec<Vec<C64>> = self.circuit.blocks().iter().map(|b| b.forward(x, theta)).collect();
        let f = scale * self.circuit.blocks().iter().zip(&states).map(|(b, s)| b.observable(s)).sum::<f64>();
        let weight = coef * (f - y) * scale;
        for (block, mut psi) in self.circuit.blocks().iter().zip(states) {
            let mut lambda = psi.clone();
            for (i, l) in lambda.iter_mut().enumerate() {
                let z: f64 = block.measured.iter().map(|&q| if i >> q & 1 == 0 { 1.0 } else { -1.0 }).sum();
                *l *= weight * z;
            }
            block.backward(&mut psi, &mut lambda, x, theta, grad);
        }
        (f - y) * (f - y)
    }
}

impl LossEngine for DirectEngine<'_> {
    fn loss_grad(&mut self, theta: &[f64], grad: &mut [f64]) -> f64 {
        let n = self.targets.len() as f64;
        let coef = 2.0 / n;
        let partials: Vec<(f64, Vec<f64>)> = self
            .inputs
            .par_chunks(CHUNK)
            .zip(self.targets.par_chunks(CHUNK))
            .map(|(xs, ys)| {
                let mut g = vec![0.0; theta.len()];
                let sq: f64 = xs.iter().zip(ys).map(|(x, &y)| self.row(x, y, theta, coef, &mut g)).sum();
                (sq, g)
            })
            .collect();
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut total = 0.0;
        for (sq, g) in partials {
            total += sq;
            grad.iter_mut().zip(&g).for_each(|(a, b)| *a += b);
        }
        total / n
    }

    fn predictions(&mut self, theta: &[f64]) -> Vec<f64> {
        self.inputs.par_iter().map(|x| row_output(self.circuit, x, theta)).collect()
    }
}

fn make_engine<'a>(
    circuit: &'a ParamCircuit,
    inputs: Vec<&'a [f64]>,
    targets: Vec<f64>,
    backend: Backend,
) -> Result<(Box<dyn LossEngine + 'a>, Backend)> {
    match backend {
        Backend::Direct => Ok((Box::new(DirectEngine::new(circuit, inputs, targets)), Backend::Direct)),
        Backend::Spectral => {
            let engine = SpectralEngine::new(circuit, &inputs, targets)?;
            Ok((Box::new(engine), Backend::Spectral))
        }
        Backend::Auto => {
            if SpectralEngine::preferred(circuit, &inputs) {
                let engine = SpectralEngine::new(circuit, &inputs, targets)?;
                Ok((Box::new(engine), Backend::Spectral))
            } else {
                Ok((Box::new(DirectEngine::new(circuit, inputs, targets)), Backend::Direct))
            }
        }
    }
}

/// Trains `circuit` on the seed's train split, starting from seeded uniform parameters.
pub fn train(circuit: &ParamCircuit, dataset: &Dataset, config: &TrainConfig) -> Result<TrainReport> {
    let theta0 = init_params(circuit.n_params(), config.init_low, config.init_high, config.seed);
    train_from(circuit, dataset, config, theta0)
}

/// As [`train`] but from explicit initial parameters.
pub fn train_from(
    circuit: &ParamCircuit,
    dataset: &Dataset,
    config: &TrainConfig,
    mut theta: Vec<f64>,
) -> Result<TrainReport> {
    config.validate()?;
    if dataset.dims() != circuit.n_features() {
        return Err(Error::contract(format!(
            "dataset has {} features, circuit expects {}",
            dataset.dims(),
            circuit.n_features()
        )));
    }
    if theta.len() != circuit.n_params() {
        return Err(Error::contract("initial parameter vector has the wrong length"));
    }
    let start = Instant::now();
    let split = dataset.split(config.seed)?;
    let train_view = dataset.view(&split.train);
    let test_view = dataset.view(&split.test);

    let (mut engine, backend) = make_engine(circuit, train_view.inputs.clone(), train_view.targets.clone(), config.backend)?;
    let mut test_engine = if config.track_test_loss {
        Some(make_engine(circuit, test_view.inputs.clone(), test_view.targets.clone(), backend)?.0)
    } else {
        None
    };

    let mut state = AdamState::new(theta.len());
    let mut grad = vec![0.0; theta.len()];
    let mut loss_history = Vec::with_capacity(config.iterations);
    let mut test_history = test_engine.as_ref().map(|_| Vec::with_capacity(config.iterations));
    for it in 0..config.iterations {
        let loss = engine.loss_grad(&theta, &mut grad);
        if !loss.is_finite() {
            return Err(Error::Numeric { iteration: it, message: format!("training loss is {loss}") });
        }
        loss_history.push(loss);
        if let (Some(e), Some(h)) = (test_engine.as_mut(), test_history.as_mut()) {
            h.push(mse(&e.predictions(&theta), &test_view.targets)?);
        }
        adam_step(&mut state, &mut theta, &grad, config).map_err(|e| match e {
            Error::Numeric { message, .. } => Error::Numeric { iteration: it, message },
            other => other,
        })?;
    }

    let train_pred = engine.predictions(&theta);
    let test_pred = predict(circuit, &test_view.inputs, &theta)?;
    if train_pred.iter().chain(&test_pred).any(|p| !p.is_finite()) {
        return Err(Error::Numeric { iteration: config.iterations, message: "non-finite predictions".into() });
    }
    Ok(TrainReport {
        seed: config.seed,
        backend,
        n_params: circuit.n_params(),
        n_train: split.train.len(),
        n_test: split.test.len(),
        loss_history,
        test_loss_history: test_history,
        final_train_mse: mse(&train_pred, &train_view.targets)?,
        final_test_mse: mse(&test_pred, &test_view.targets)?,
        r2_train: r2(&train_pred, &train_view.targets)?,
        r2_test: r2(&test_pred, &test_view.targets)?,
        final_theta: theta,
        experimental: false,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// `n_runs` trainings; run `k` uses seed `config.seed + k` for init and split.
pub fn multi_run(
    model: &ModelConfig,
    dataset: &Dataset,
    config: &TrainConfig,
    n_runs: usize,
) -> Result<Vec<TrainReport>> {
    if n_runs == 0 {
        return Err(Error::config("n_runs must be at least 1"));
    }
    let circuit = build_circuit(model)?;
    (0..n_runs as u64)
        .map(|k| train(&circuit, dataset, &TrainConfig { seed: config.seed + k, ..config.clone() }))
        .collect()
}
