//! Acceptance checks. Each test prints one PASS/FAIL line straight to the
//! terminal (bypassing the test harness capture) and then asserts.
//!
//! The two experiment checks train 3 seeds × 3000 iterations per compared
//! model and take several minutes each.

use std::collections::BTreeSet;
use std::io::Write;
use std::sync::OnceLock;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qfourier::analysis::{fourier_least_squares, frequency_box, integer_vectors, model_dft, target_coefficients};
use qfourier::circuit::{build_circuit, ModelConfig, ParamCircuit};
use qfourier::config::{ExperimentConfig, TargetConfig, TargetPreset};
use qfourier::dataset::{generate, TargetSpec, DEFAULT_ROW_CAP};
use qfourier::experiment::{run_preset, run_training, ExperimentOutcome, Preset, PresetOptions};
use qfourier::noise::{noisy_evaluate, sample_expectation, NoiseModel};
use qfourier::simulator::{apply_gate, gradient, model_output, Angle, Axis, Gate, StateVector};
use qfourier::spectrum::{spectrum_from_prefactors, ternary_prefactors, MixedSpectrum};
use qfourier::training::{init_params, TrainConfig};

fn report(n: u32, name: &str, pass: bool, detail: String, start: Instant) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let line = format!(
        "[{verdict}] criterion {n:>2} {name}: {detail} ({:.2} s)\n",
        start.elapsed().as_secs_f64()
    );
    let mut out = std::io::stdout().lock();
    out.write_all(line.as_bytes()).unwrap();
    out.flush().unwrap();
    assert!(pass, "criterion {n} failed: {detail}");
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[test]
fn c01_spectrum_exactness() {
    let start = Instant::now();
    let mut ok = true;
    let mut sizes = Vec::new();
    for l in 1..=6 {
        let s = spectrum_from_prefactors(&ternary_prefactors(l).unwrap()).unwrap();
        sizes.push(s.len());
        ok &= s.len() == 3usize.pow(l as u32);
    }
    let sel = spectrum_from_prefactors(&[10.0, 20.0]).unwrap();
    ok &= sel.frequencies() == [-30.0, -20.0, -10.0, 0.0, 10.0, 20.0, 30.0];
    let dim = spectrum_from_prefactors(&[10.0, 30.0]).unwrap();
    let sep = MixedSpectrum::new(vec![dim.clone(); 4], vec![vec![0, 1], vec![2, 3]]).unwrap().cardinality().total;
    let mix = MixedSpectrum::all_mixed(vec![dim; 4]).cardinality().total;
    ok &= sep == 162 && mix == 6561;
    ok &= start.elapsed().as_secs_f64() < 1.0;
    report(1, "spectrum exactness", ok, format!("ternary sizes {sizes:?}, separated {sep}, all-mixed {mix}"), start);
}

#[test]
fn c02_simulator_correctness() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst_cos = 0.0f64;
    for _ in 0..100 {
        let x: f64 = rng.gen_range(-10.0..10.0);
        let mut s = StateVector::zero(1);
        let g = Gate::Rotation { axis: Axis::X, qubit: 0, angle: Angle::Fixed(x) };
        apply_gate(&mut s, &g, &[x]).unwrap();
        worst_cos = worst_cos.max((s.expectation_z(0).unwrap() - x.cos()).abs());
    }
    let mut s = StateVector::zero(5);
    let mut worst_norm = 0.0f64;
    for _ in 0..1000 {
        let q = rng.gen_range(0..5);
        let (g, angles) = match rng.gen_range(0..3) {
            0 => {
                let axis = [Axis::X, Axis::Y, Axis::Z][rng.gen_range(0..3)];
                let phi = rng.gen_range(-7.0..7.0);
                (Gate::Rotation { axis, qubit: q, angle: Angle::Fixed(phi) }, vec![phi])
            }
            1 => (Gate::Rot { qubit: q, slot: 0 }, (0..3).map(|_| rng.gen_range(-7.0..7.0)).collect()),
            _ => (Gate::Cnot { control: q, target: (q + 1 + rng.gen_range(0..4)) % 5 }, vec![]),
        };
        apply_gate(&mut s, &g, &angles).unwrap();
        worst_norm = worst_norm.max((s.norm_sqr() - 1.0).abs());
    }
    let ok = worst_cos < 1e-10 && worst_norm < 1e-10 && start.elapsed().as_secs_f64() < 5.0;
    report(2, "simulator correctness", ok, format!("max |<Z> - cos x| {worst_cos:.1e}, max norm drift {worst_norm:.1e}"), start);
}

fn random_circuit(rng: &mut ChaCha8Rng) -> ParamCircuit {
    let n_qubits = rng.gen_range(1..=6);
    let n_params = rng.gen_range(3..=60);
    let n_features = 2;
    let mut gates = Vec::new();
    for _ in 0..rng.gen_range(5..40) {
        let q = rng.gen_range(0..n_qubits);
        let axis = [Axis::X, Axis::Y, Axis::Z][rng.gen_range(0..3)];
        gates.push(match rng.gen_range(0..5) {
            0 => Gate::Rot { qubit: q, slot: rng.gen_range(0..=n_params - 3) },
            1 => Gate::Rotation { axis, qubit: q, angle: Angle::Param(rng.gen_range(0..n_params)) },
            2 => Gate::Rotation {
                axis,
                qubit: q,
                angle: Angle::Feature { index: rng.gen_range(0..n_features), prefactor: rng.gen_range(0.5..3.0) },
            },
            3 if n_qubits > 1 => Gate::Cnot { control: q, target: (q + 1 + rng.gen_range(0..n_qubits - 1)) % n_qubits },
            _ => Gate::Rotation { axis, qubit: q, angle: Angle::Fixed(rng.gen_range(-3.0..3.0)) },
        });
    }
    let measured: Vec<usize> = (0..n_qubits).filter(|_| rng.gen_bool(0.5)).collect();
    let measured = if measured.is_empty() { vec![0] } else { measured };
    ParamCircuit::new(n_qubits, n_features, n_params, gates, measured).unwrap()
}

#[test]
fn c03_gradient_oracle() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let h = 1e-4;
    let mut worst = 0.0f64;
    let mut ok = true;
    for _ in 0..20 {
        let c = random_circuit(&mut rng);
        let x = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
        let theta: Vec<f64> = (0..c.n_params()).map(|_| rng.gen_range(0.0..6.3)).collect();
        let g = gradient(&c, &x, &theta).unwrap();
        for i in 0..theta.len() {
            let mut tp = theta.clone();
            tp[i] += h;
            let mut tm = theta.clone();
            tm[i] -= h;
            let fd = (model_output(&c, &x, &tp).unwrap() - model_output(&c, &x, &tm).unwrap()) / (2.0 * h);
            let err = (g[i] - fd).abs();
            let pass = if fd.abs() < 1e-2 { err < 1e-7 } else { err / fd.abs() < 1e-5 };
            ok &= pass;
            if fd.abs() >= 1e-2 {
                worst = worst.max(err / fd.abs());
            }
        }
    }
    ok &= start.elapsed().as_secs_f64() < 30.0;
    report(3, "gradient oracle", ok, format!("20 circuits, worst relative error {worst:.1e}"), start);
}

fn selected_2d(blocks: usize) -> ModelConfig {
    ModelConfig::parallel(vec![vec![10.0, 20.0]; 2], vec![vec![0, 1]], blocks)
}

#[test]
fn c04_spectral_confinement() {
    let start = Instant::now();
    let c = build_circuit(&selected_2d(10)).unwrap();
    let inside: BTreeSet<Vec<i64>> = integer_vectors(c.spectrum()).unwrap().into_iter().collect();
    let outside: Vec<Vec<i64>> = frequency_box(2, 63).into_iter().filter(|w| !inside.contains(w)).collect();
    let mut worst = 0.0f64;
    for seed in 0..10 {
        let theta = init_params(c.n_params(), 0.0, std::f64::consts::TAU, seed);
        let t = model_dft(&c, &theta, &outside, 128).unwrap();
        worst = t.entries.iter().map(|e| e.value().norm()).fold(worst, f64::max);
    }
    let ok = worst < 1e-8 && start.elapsed().as_secs_f64() < 60.0;
    report(4, "spectral confinement", ok, format!("{} off-spectrum vectors, max |c| {worst:.1e}", outside.len()), start);
}

#[test]
fn c05_fourier_round_trip() {
    let start = Instant::now();
    let spec = TargetSpec::t2d();
    let t = target_coefficients(&spec, &frequency_box(2, 40), 128).unwrap();
    let mut worst = (t.get(&[0, 0]).unwrap() - spec.c0).norm();
    for term in &spec.terms {
        let w: Vec<i64> = term.omega.iter().map(|&v| v as i64).collect();
        let neg: Vec<i64> = w.iter().map(|v| -v).collect();
        worst = worst.max((t.get(&w).unwrap() - term.coefficient()).norm());
        worst = worst.max((t.get(&neg).unwrap() - term.coefficient().conj()).norm());
    }
    report(5, "Fourier round trip", worst < 1e-9, format!("max coefficient error {worst:.1e}"), start);
}

fn exp2d() -> &'static (ExperimentOutcome, f64) {
    static CELL: OnceLock<(ExperimentOutcome, f64)> = OnceLock::new();
    CELL.get_or_init(|| {
        let start = Instant::now();
        let opts = PresetOptions {
            variants: Some(vec!["selected-parallel".into(), "dense-parallel".into()]),
            ..Default::default()
        };
        (run_preset(Preset::Exp2d, &opts).unwrap(), start.elapsed().as_secs_f64())
    })
}

#[test]
fn c06_experiment_2d() {
    let start = Instant::now();
    let (out, secs) = exp2d();
    let find = |name: &str| out.report.results.iter().find(|r| r.variant == name).unwrap();
    let sel = find("selected-parallel");
    let dense = find("dense-parallel");
    let sel_scores: Vec<f64> = sel.runs.iter().map(|r| r.r2_test).collect();
    let dense_scores: Vec<f64> = dense.runs.iter().map(|r| r.r2_test).collect();
    let (ms, md) = (median(sel_scores.clone()), median(dense_scores.clone()));
    let ok = sel.sufficiency.n_params == 240
        && dense.sufficiency.n_params <= 336
        && sel.runs.len() == 3
        && ms >= 0.95
        && md < ms;
    report(
        6,
        "2D experiment",
        ok,
        format!(
            "selected ({} params) median r2_test {ms:.4} {sel_scores:.4?}; dense ({} params) median {md:.4} {dense_scores:.4?}; trained in {secs:.0} s",
            sel.sufficiency.n_params, dense.sufficiency.n_params
        ),
        start,
    );
}

#[test]
fn c07_experiment_4d() {
    let start = Instant::now();
    let opts = PresetOptions {
        variants: Some(vec!["separated-parallel".into(), "all-mixed-parallel".into()]),
        ..Default::default()
    };
    let out = run_preset(Preset::Exp4d, &opts).unwrap();
    let find = |name: &str| out.report.results.iter().find(|r| r.variant == name).unwrap();
    let sep = find("separated-parallel");
    let mix = find("all-mixed-parallel");
    let sep_scores: Vec<f64> = sep.runs.iter().map(|r| r.r2_test).collect();
    let mix_scores: Vec<f64> = mix.runs.iter().map(|r| r.r2_test).collect();
    let (ms, mm) = (median(sep_scores.clone()), median(mix_scores.clone()));
    let ok = sep.sufficiency.n_params == 144 && mix.sufficiency.n_params == 144 && ms >= 0.95 && mm < ms;
    report(
        7,
        "4D experiment",
        ok,
        format!("separated median r2_test {ms:.4} {sep_scores:.4?}; all-mixed median {mm:.4} {mix_scores:.4?}"),
        start,
    );
}

#[test]
fn c08_coefficient_fidelity() {
    let start = Instant::now();
    let (out, _) = exp2d();
    let best = out.report.best_parallel.as_ref().unwrap();
    let cmp = out.coefficients.as_ref().unwrap();
    let target_vectors = cmp.target.entries.iter().filter(|e| e.value().norm() > 1e-12).count();
    let ok = best.variant == "selected-parallel"
        && target_vectors == 19
        && cmp.on_target_max <= 0.05
        && cmp.off_target_max <= 0.02;
    report(
        8,
        "coefficient fidelity",
        ok,
        format!(
            "{} (seed {}): max on-target |diff| {:.4}, max off-target |c| {:.4}",
            best.variant, best.seed, cmp.on_target_max, cmp.off_target_max
        ),
        start,
    );
}

#[test]
fn c09_classical_oracle() {
    let start = Instant::now();
    let mut scores = Vec::new();
    for (spec, grid) in [(TargetSpec::t2d(), 30), (TargetSpec::t4d(), 12)] {
        let ds = generate(&spec, grid, DEFAULT_ROW_CAP).unwrap();
        let split = ds.split(42).unwrap();
        let freqs: Vec<Vec<f64>> = spec.terms.iter().map(|t| t.omega.clone()).collect();
        let fit = fourier_least_squares(&ds, &split, &freqs).unwrap();
        scores.push((fit.r2_train, fit.r2_test));
    }
    let ok = scores.iter().all(|&(a, b)| a >= 0.9999 && b >= 0.9999) && start.elapsed().as_secs_f64() < 10.0;
    report(9, "classical oracle", ok, format!("(r2_train, r2_test) T2D {:.6?}, T4D {:.6?}", scores[0], scores[1]), start);
}

#[test]
fn c10_noise_degradation() {
    let start = Instant::now();
    let (out, _) = exp2d();
    let best = out.report.best_parallel.as_ref().unwrap();
    let circuit = build_circuit(&selected_2d(best.blocks_per_layer)).unwrap();
    let ds = generate(&TargetSpec::t2d(), 30, DEFAULT_ROW_CAP).unwrap();
    let split = ds.split(best.seed).unwrap();
    let view = ds.view(&split.test);
    let noise = NoiseModel::default();
    let eval = noisy_evaluate(&circuit, &view, &best.final_theta, &noise, best.seed).unwrap();
    let degrade_ok = noise.shots == 4096 && eval.r2 >= best.r2_test - 0.05;

    let zero = ParamCircuit::new(1, 0, 0, vec![], vec![0]).unwrap();
    let mut readout = Vec::new();
    for p in [0.05, noise.p_readout] {
        let m = NoiseModel { p_1q: 0.0, p_2q: 0.0, p_readout: p, shots: 1_000_000 };
        let z = sample_expectation(&zero, &[], &[], &m, 11).unwrap()[0];
        readout.push((z - (1.0 - 2.0 * p)).abs());
    }
    let readout_ok = readout.iter().all(|&e| e < 0.002);
    report(
        10,
        "noise degradation",
        degrade_ok && readout_ok,
        format!(
            "noiseless r2_test {:.4}, noisy r2 {:.4} ({} shots); readout-only |<Z> - (1-2p)| {readout:.5?}",
            best.r2_test, eval.r2, noise.shots
        ),
        start,
    );
}

#[test]
fn c11_determinism() {
    let start = Instant::now();
    let cfg = ExperimentConfig {
        target: TargetConfig::preset(TargetPreset::T2d),
        data: Default::default(),
        model: selected_2d(4),
        train: TrainConfig { iterations: 200, ..Default::default() },
        noise: None,
        n_runs: 2,
        out_dir: "out".into(),
    };
    let first = serde_json::to_string(&run_training(&cfg).unwrap().report).unwrap();
    let second = serde_json::to_string(&run_training(&cfg).unwrap().report).unwrap();
    let embedded: serde_json::Value = serde_json::from_str(&first).unwrap();
    let reloaded: ExperimentConfig = serde_json::from_value(embedded["config"].clone()).unwrap();
    let third = serde_json::to_string(&run_training(&reloaded).unwrap().report).unwrap();
    let ok = first == second && first == third;
    report(11, "determinism", ok, format!("{} byte reports identical across 3 runs: {ok}", first.len()), start);
}
