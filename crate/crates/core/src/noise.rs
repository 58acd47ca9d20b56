//! Shot-based noisy execution with Monte-Carlo trajectories.
//!
//! After every gate a depolarizing event fires with the gate-class
//! probability and applies a uniformly random non-identity Pauli to each
//! touched qubit. Measured bits flip with the readout probability. Shots
//! without any gate error reuse the cached ideal distribution; shots with
//! errors restart from the cached ideal state just before the first error.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{Block, ParamCircuit};
use crate::dataset::{DataView, Dataset};
use crate::error::{Error, Result};
use crate::simulator::{apply_resolved, apply_single_slice, check_inputs, Axis, Gate, C64};
use crate::training::{adam_step, init_params, mse, r2, AdamState, Backend, TrainConfig, TrainReport};

fn default_p_1q() -> f64 {
    2.789e-4
}
fn default_p_2q() -> f64 {
    2.656e-3
}
fn default_p_readout() -> f64 {
    8.423e-3
}
fn default_shots() -> usize {
    4096
}

/// Gate and readout error rates; defaults are median IBM Fez calibration values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    #[serde(default = "default_p_1q")]
    pub p_1q: f64,
    #[serde(default = "default_p_2q")]
    pub p_2q: f64,
    #[serde(default = "default_p_readout")]
    pub p_readout: f64,
    #[serde(default = "default_shots")]
    pub shots: usize,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel { p_1q: default_p_1q(), p_2q: default_p_2q(), p_readout: default_p_readout(), shots: default_shots() }
    }
}

impl NoiseModel {
    /// Shot sampling only.
    pub fn noiseless(shots: usize) -> Self {
        NoiseModel { p_1q: 0.0, p_2q: 0.0, p_readout: 0.0, shots }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("p_1q", self.p_1q), ("p_2q", self.p_2q), ("p_readout", self.p_readout)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::config(format!("{name} = {p} is not a probability")));
            }
        }
        if self.shots == 0 {
            return Err(Error::config("shots must be at least 1"));
        }
        Ok(())
    }

    fn gate_probability(&self, gate: &Gate) -> f64 {
        if gate.is_two_qubit() {
            self.p_2q
        } else {
            self.p_1q
        }
    }
}

/// RNG for one shot: key from `(seed, row)`, stream from the shot index.
fn shot_rng(seed: u64, row: u64, shot: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&row.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(shot);
    rng
}

const PAULIS: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

/// Ideal trajectory of one block for one input row.
struct BlockCache<'a> {
    block: &'a Block,
    /// `states[k]` is the state after the first `k` gates.
    states: Vec<Vec<C64>>,
    cdf: Vec<f64>,
    /// Index into the circuit's measured list for each local measured qubit.
    slots: Vec<usize>,
}

fn cumulative(amps: &[C64]) -> Vec<f64> {
    let mut acc = 0.0;
    amps.iter()
        .map(|a| {
            acc += a.norm_sqr();
            acc
        })
        .collect()
}

fn sample_index(cdf: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let u = rng.gen::<f64>() * cdf[cdf.len() - 1];
    cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
}

impl<'a> BlockCache<'a> {
    fn new(circuit: &ParamCircuit, block: &'a Block, x: &[f64], theta: &[f64]) -> Self {
        let mut state = vec![C64::new(0.0, 0.0); 1 << block.n_qubits];
        state[0] = C64::new(1.0, 0.0);
        let mut states = Vec::with_capacity(block.gates.len() + 1);
        states.push(state.clone());
        for g in &block.gates {
            apply_resolved(&mut state, g, x, theta);
            states.push(state.clone());
        }
        let slots = block
            .measured
            .iter()
            .map(|&q| circuit.measured().iter().position(|&m| m == block.qubits[q]).expect("measured qubit"))
            .collect();
        BlockCache { block, cdf: cumulative(&state), states, slots }
    }

    /// One shot: returns the sampled basis index of the block register.
    fn shot(&self, noise: &NoiseModel, x: &[f64], theta: &[f64], rng: &mut ChaCha8Rng) -> usize {
        let mut events: Vec<(usize, usize, Axis)> = Vec::new();
        for (k, g) in self.block.gates.iter().enumerate() {
            let p = noise.gate_probability(g);
            if p > 0.0 && rng.gen::<f64>() < p {
                for q in g.qubits() {
                    events.push((k, q, PAULIS[rng.gen_range(0..3)]));
                }
            }
        }
        let Some(&(first, _, _)) = events.first() else {
            return sample_index(&self.cdf, rng);
        };
        let mut amps = self.states[first + 1].clone();
        let mut next = 0;
        for k in first..self.block.gates.len() {
            if k > first {
                apply_resolved(&mut amps, &self.block.gates[k], x, theta);
            }
            while next < events.len() && events[next].0 == k {
                apply_single_slice(&mut amps, events[next].1, &events[next].2.pauli());
                next += 1;
            }
        }
        sample_index(&cumulative(&amps), rng)
    }
}

fn sample_row(
    circuit: &ParamCircuit,
    x: &[f64],
    theta: &[f64],
    noise: &NoiseModel,
    seed: u64,
    row: u64,
) -> Vec<f64> {
    let caches: Vec<BlockCache> = circuit.blocks().iter().map(|b| BlockCache::new(circuit, b, x, theta)).collect();
    let mut sums = vec![0i64; circuit.measured().len()];
    for shot in 0..noise.shots as u64 {
        let mut rng = shot_rng(seed, row, shot);
        for cache in &caches {
            let outcome = cache.shot(noise, x, theta, &mut rng);
            for (&q, &slot) in cache.block.measured.iter().zip(&cache.slots) {
                let mut bit = outcome >> q & 1;
                if noise.p_readout > 0.0 && rng.gen::<f64>() < noise.p_readout {
                    bit ^= 1;
                }
                sums[slot] += if bit == 0 { 1 } else { -1 };
            }
        }
    }
    sums.iter().map(|&s| s as f64 / noise.shots as f64).collect()
}

/// Estimated `⟨Z⟩` per measured qubit, in the circuit's measurement order.
pub fn sample_expectation(
    circuit: &ParamCircuit,
    x: &[f64],
    theta: &[f64],
    noise: &NoiseModel,
    seed: u64,
) -> Result<Vec<f64>> {
    noise.validate()?;
    check_inputs(circuit, x, theta)?;
    Ok(sample_row(circuit, x, theta, noise, seed, 0))
}

/// Sampled model outputs for many rows; row `j` draws from streams keyed by `(seed, j)`.
pub fn noisy_predict(
    circuit: &ParamCircuit,
    inputs: &[&[f64]],
    theta: &[f64],
    noise: &NoiseModel,
    seed: u64,
) -> Result<Vec<f64>> {
    noise.validate()?;
    for x in inputs {
        check_inputs(circuit, x, theta)?;
    }
    let scale = circuit.output_scale();
    Ok(inputs
        .par_iter()
        .enumerate()
        .map(|(j, x)| scale * sample_row(circuit, x, theta, noise, seed, j as u64).iter().sum::<f64>())
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoisyEvaluation {
    pub noise: NoiseModel,
    pub seed: u64,
    pub n_rows: usize,
    pub predictions: Vec<f64>,
    pub mse: f64,
    pub r2: f64,
}

/// Sampled predictions on `view` scored against its targets.
pub fn noisy_evaluate(
    circuit: &ParamCircuit,
    view: &DataView<'_>,
    theta: &[f64],
    noise: &NoiseModel,
    seed: u64,
) -> Result<NoisyEvaluation> {
    let predictions = noisy_predict(circuit, &view.inputs, theta, noise, seed)?;
    Ok(NoisyEvaluation {
        noise: noise.clone(),
        seed,
        n_rows: view.len(),
        mse: mse(&predictions, &view.targets)?,
        r2: r2(&predictions, &view.targets)?,
        predictions,
    })
}

/// Parameter count above which [`noisy_train`] refuses to run by default.
pub const NOISY_TRAIN_MAX_PARAMS: usize = 300;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Training on sampled expectations with parameter-shift gradients.
///
/// Every trainable angle enters one Pauli rotation, so the `±π/2` shift rule
/// is exact in expectation. Costs `2·n_params + 1` sampled passes over the
/// train split per iteration; reports are flagged experimental.
pub fn noisy_train(
    circuit: &ParamCircuit,
    dataset: &Dataset,
    config: &TrainConfig,
    noise: &NoiseModel,
    max_params: Option<usize>,
) -> Result<TrainReport> {
    config.validate()?;
    noise.validate()?;
    let cap = max_params.unwrap_or(NOISY_TRAIN_MAX_PARAMS);
    if circuit.n_params() > cap {
        return Err(Error::Resource(format!(
            "noisy training of {} parameters exceeds the limit of {cap}",
            circuit.n_params()
        )));
    }
    if dataset.dims() != circuit.n_features() {
        return Err(Error::contract("dataset and circuit feature counts differ"));
    }
    let start = Instant::now();
    let split = dataset.split(config.seed)?;
    let train = dataset.view(&split.train);
    let test = dataset.view(&split.test);
    let n = circuit.n_params();
    let mut theta = init_params(n, config.init_low, config.init_high, config.seed);
    let mut state = AdamState::new(n);
    let mut loss_history = Vec::with_capacity(config.iterations);
    let mut grad = vec![0.0; n];
    let pass_seed = |it: usize, k: usize| splitmix64(config.seed ^ splitmix64((it * (2 * n + 1) + k) as u64));
    for it in 0..config.iterations {
        let preds = noisy_predict(circuit, &train.inputs, &theta, noise, pass_seed(it, 0))?;
        let loss = mse(&preds, &train.targets)?;
        loss_history.push(loss);
        let coef = 2.0 / train.len() as f64;
        for i in 0..n {
            let mut shifted = theta.clone();
            shifted[i] = theta[i] + std::f64::consts::FRAC_PI_2;
            let plus = noisy_predict(circuit, &train.inputs, &shifted, noise, pass_seed(it, 2 * i + 1))?;
            shifted[i] = theta[i] - std::f64::consts::FRAC_PI_2;
            let minus = noisy_predict(circuit, &train.inputs, &shifted, noise, pass_seed(it, 2 * i + 2))?;
            grad[i] = (0..train.len()).map(|j| coef * (preds[j] - train.targets[j]) * 0.5 * (plus[j] - minus[j])).sum();
        }
        adam_step(&mut state, &mut theta, &grad, config).map_err(|e| match e {
            Error::Numeric { message, .. } => Error::Numeric { iteration: it, message },
            other => other,
        })?;
    }
    let final_seed = pass_seed(config.iterations, 0);
    let train_pred = noisy_predict(circuit, &train.inputs, &theta, noise, final_seed)?;
    let test_pred = noisy_predict(circuit, &test.inputs, &theta, noise, final_seed ^ 1)?;
    Ok(TrainReport {
        seed: config.seed,
        backend: Backend::Direct,
        n_params: n,
        n_train: train.len(),
        n_test: test.len(),
        loss_history,
        test_loss_history: None,
        final_train_mse: mse(&train_pred, &train.targets)?,
        final_test_mse: mse(&test_pred, &test.targets)?,
        r2_train: r2(&train_pred, &train.targets)?,
        r2_test: r2(&test_pred, &test.targets)?,
        final_theta: theta,
        experimental: true,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{build_circuit, ModelConfig};
    use crate::dataset::{linspace_pi, minmax_scale};
    use crate::simulator::{run_circuit, Angle};
    use crate::training::train;

    fn random_circuit(seed: u64) -> (ParamCircuit, Vec<f64>) {
        let cfg = ModelConfig::parallel(vec![vec![1.0, 2.0], vec![3.0]], vec![vec![0], vec![1]], 2);
        let c = build_circuit(&cfg).unwrap();
        let theta = init_params(c.n_params(), 0.0, 6.3, seed);
        (c, theta)
    }

    fn exact_z(c: &ParamCircuit, x: &[f64], theta: &[f64]) -> Vec<f64> {
        let s = run_circuit(c, x, theta).unwrap();
        c.measured().iter().map(|&q| s.expectation_z(q).unwrap()).collect()
    }

    #[test]
    fn readout_only_on_zero_state() {
        let c = ParamCircuit::new(1, 0, 0, vec![], vec![0]).unwrap();
        let noise = NoiseModel { p_1q: 0.0, p_2q: 0.0, p_readout: 0.05, shots: 1_000_000 };
        let z = sample_expectation(&c, &[], &[], &noise, 7).unwrap();
        assert!((z[0] - 0.9).abs() < 0.002, "{z:?}");
    }

    #[test]
    fn zero_noise_concentrates() {
        let (c, theta) = random_circuit(1);
        let x = [0.4, -1.1];
        let exact = exact_z(&c, &x, &theta);
        let est = sample_expectation(&c, &x, &theta, &NoiseModel::noiseless(20_000), 3).unwrap();
        for (e, s) in exact.iter().zip(&est) {
            assert!((e - s).abs() <= 5.0 * ((1.0 - e * e) / 20_000.0).sqrt() + 1e-12);
        }
    }

    #[test]
    fn variance_scales_with_shots() {
        let gates = vec![Gate::Rotation { axis: Axis::X, qubit: 0, angle: Angle::Fixed(1.2) }];
        let c = ParamCircuit::new(1, 0, 0, gates, vec![0]).unwrap();
        let exact = 1.2f64.cos();
        let mut prev = None;
        for shots in [100usize, 400, 1600] {
            let noise = NoiseModel::noiseless(shots);
            let errs: Vec<f64> = (0..200).map(|s| sample_expectation(&c, &[], &[], &noise, s).unwrap()[0] - exact).collect();
            let var = errs.iter().map(|e| e * e).sum::<f64>() / errs.len() as f64;
            let expected = (1.0 - exact * exact) / shots as f64;
            assert!(var > expected / 2.0 && var < expected * 2.0, "shots {shots}: {var} vs {expected}");
            if let Some(p) = prev {
                let ratio: f64 = p / var;
                assert!(ratio > 2.0 && ratio < 8.0);
            }
            prev = Some(var);
        }
    }

    #[test]
    fn depolarizing_contracts() {
        let noise = NoiseModel { p_1q: 0.05, p_2q: 0.05, p_readout: 0.0, shots: 4000 };
        for seed in 0..4 {
            let (c, theta) = random_circuit(seed + 10);
            let x = [0.3 * seed as f64, 1.0];
            let exact = exact_z(&c, &x, &theta);
            let est = sample_expectation(&c, &x, &theta, &noise, seed).unwrap();
            for (e, s) in exact.iter().zip(&est) {
                let se = ((1.0 - s * s).max(0.0) / 4000.0).sqrt().max(1.0 / 4000.0);
                assert!(s.abs() <= e.abs() + 5.0 * se, "{s} vs {e}");
            }
        }
    }

    #[test]
    fn deterministic_and_validated() {
        let (c, theta) = random_circuit(2);
        let noise = NoiseModel { shots: 500, ..NoiseModel::default() };
        let a = sample_expectation(&c, &[0.1, 0.2], &theta, &noise, 9).unwrap();
        let b = sample_expectation(&c, &[0.1, 0.2], &theta, &noise, 9).unwrap();
        assert_eq!(a, b);
        let err = sample_expectation(&c, &[0.1, 0.2], &theta, &NoiseModel { shots: 0, ..noise.clone() }, 9);
        assert!(matches!(err, Err(Error::Config(_))));
        let err = sample_expectation(&c, &[0.1, 0.2], &theta, &NoiseModel { p_2q: 1.5, ..noise }, 9);
        assert!(matches!(err, Err(Error::Config(_))));
    }

    fn cos_data() -> Dataset {
        let xs = linspace_pi(40);
        minmax_scale(xs.iter().map(|&x| vec![x]).collect(), xs.iter().map(|x| x.cos()).collect()).unwrap()
    }

    #[test]
    fn zero_noise_evaluation_matches_noiseless() {
        let ds = cos_data();
        let c = build_circuit(&ModelConfig::parallel(vec![vec![1.0]], vec![vec![0]], 1)).unwrap();
        let rep = train(&c, &ds, &TrainConfig { iterations: 300, learning_rate: 0.05, ..Default::default() }).unwrap();
        let split = ds.split(42).unwrap();
        let view = ds.view(&split.test);
        let eval = noisy_evaluate(&c, &view, &rep.final_theta, &NoiseModel::noiseless(1 << 16), 5).unwrap();
        assert!((eval.r2 - rep.r2_test).abs() < 0.01, "{} vs {}", eval.r2, rep.r2_test);
        let again = noisy_evaluate(&c, &view.head(3), &rep.final_theta, &NoiseModel::noiseless(1 << 16), 5).unwrap();
        assert_eq!(again.predictions[..], eval.predictions[..3]);
    }

    #[test]
    fn noisy_training_tracks_noiseless() {
        let ds = cos_data();
        let c = build_circuit(&ModelConfig::parallel(vec![vec![1.0]], vec![vec![0]], 1)).unwrap();
        let cfg = TrainConfig { iterations: 150, learning_rate: 0.05, ..Default::default() };
        let clean = train(&c, &ds, &cfg).unwrap();
        let noisy = noisy_train(&c, &ds, &cfg, &NoiseModel::noiseless(2000), None).unwrap();
        assert!(noisy.experimental);
        assert!((noisy.r2_train - clean.r2_train).abs() < 0.05, "{} vs {}", noisy.r2_train, clean.r2_train);
        let big = build_circuit(&ModelConfig::parallel(vec![vec![10.0, 20.0]; 2], vec![vec![0, 1]], 20)).unwrap();
        let err = noisy_train(&big, &ds, &cfg, &NoiseModel::default(), None).unwrap_err();
        assert!(matches!(err, Error::Resource(_)));
    }
}
