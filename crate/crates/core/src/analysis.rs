//! Fourier-coefficient extraction, coefficient comparison, the classical
//! Fourier least-squares fit and run summaries.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::ParamCircuit;
use crate::dataset::{eval_target, Dataset, Scaling, Split, TargetSpec};
use crate::error::{Error, Result};
use crate::simulator::{model_output, C64};
use crate::spectral::block_coefficients;
use crate::spectrum::MixedSpectrum;
use crate::training::r2;

/// Largest number of grid evaluations a DFT may request.
pub const MAX_DFT_POINTS: usize = 1 << 22;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub omega: Vec<i64>,
    pub re: f64,
    pub im: f64,
}

impl Coefficient {
    pub fn value(&self) -> C64 {
        C64::new(self.re, self.im)
    }
}

/// Complex coefficients keyed by integer frequency vector, sorted by vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientTable {
    pub dims: usize,
    /// Per-dimension grid size used for extraction; 0 for exact coefficients.
    pub n_grid: usize,
    pub entries: Vec<Coefficient>,
}

impl CoefficientTable {
    fn from_map(dims: usize, n_grid: usize, map: BTreeMap<Vec<i64>, C64>) -> Self {
        let entries = map.into_iter().map(|(omega, c)| Coefficient { omega, re: c.re, im: c.im }).collect();
        CoefficientTable { dims, n_grid, entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, omega: &[i64]) -> Option<C64> {
        self.entries
            .binary_search_by(|e| e.omega.as_slice().cmp(omega))
            .ok()
            .map(|i| self.entries[i].value())
    }

    pub fn frequencies(&self) -> Vec<Vec<i64>> {
        self.entries.iter().map(|e| e.omega.clone()).collect()
    }

    /// Table over exactly `freq_set`; vectors absent here read as zero.
    pub fn restrict(&self, freq_set: &[Vec<i64>]) -> CoefficientTable {
        let map = freq_set
            .iter()
            .map(|w| (w.clone(), self.get(w).unwrap_or(C64::new(0.0, 0.0))))
            .collect();
        CoefficientTable::from_map(self.dims, self.n_grid, map)
    }

    /// Largest `|c(−ω) − conj(c(ω))|` over pairs present in the table.
    pub fn hermitian_defect(&self) -> f64 {
        self.entries
            .iter()
            .filter_map(|e| {
                let neg: Vec<i64> = e.omega.iter().map(|w| -w).collect();
                self.get(&neg).map(|c| (c - e.value().conj()).norm())
            })
            .fold(0.0, f64::max)
    }

    /// Writes `w1..wd,re,im` rows.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        let header: Vec<String> = (1..=self.dims).map(|k| format!("w{k}")).collect();
        out.push_str(&header.join(","));
        out.push_str(",re,im\n");
        for e in &self.entries {
            let ws: Vec<String> = e.omega.iter().map(i64::to_string).collect();
            out.push_str(&format!("{},{:e},{:e}\n", ws.join(","), e.re, e.im));
        }
        std::fs::write(path, out)?;
        Ok(())
    }
}

/// Every integer vector with components in `[−k, k]`.
pub fn frequency_box(d: usize, k: i64) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..d {
        out = out.into_iter().flat_map(|v| (-k..=k).map(move |w| [v.clone(), vec![w]].concat())).collect();
    }
    out
}

/// Integer vectors of a mixed spectrum (all components must be integers).
pub fn integer_vectors(spectrum: &MixedSpectrum) -> Result<Vec<Vec<i64>>> {
    spectrum
        .vectors()?
        .into_iter()
        .map(|v| {
            v.iter()
                .map(|&w| {
                    let r = w.round();
                    if (w - r).abs() > 1e-9 {
                        Err(Error::config(format!("frequency {w} is not an integer")))
                    } else {
                        Ok(r as i64)
                    }
                })
                .collect()
        })
        .collect()
}

/// `c_ω = n^{−d} Σ_j f(x_j) e^{−iω·x_j}` on the endpoint-excluded grid
/// `x_k = −π + 2πk/n`.
///
/// The sum is contracted one dimension at a time over the distinct
/// components the requested vectors need, which equals direct summation.
pub fn dft_coefficients<F>(f: F, d: usize, freq_set: &[Vec<i64>], n_grid: usize) -> Result<CoefficientTable>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if d == 0 {
        return Err(Error::config("DFT dimension must be at least 1"));
    }
    for w in freq_set {
        if w.len() != d {
            return Err(Error::contract(format!("frequency {w:?} has {} components, expected {d}", w.len())));
        }
        if let Some(c) = w.iter().find(|c| n_grid as i64 <= 2 * c.abs()) {
            return Err(Error::config(format!(
                "frequency {w:?}: component {c} needs n_grid > {}, got {n_grid}",
                2 * c.abs()
            )));
        }
    }
    if n_grid == 0 {
        return Err(Error::config("n_grid must be positive"));
    }
    let total = u32::try_from(d).ok().and_then(|e| n_grid.checked_pow(e)).filter(|&t| t <= MAX_DFT_POINTS);
    let total = total.ok_or_else(|| {
        Error::Resource(format!("{n_grid}^{d} DFT grid exceeds {MAX_DFT_POINTS} points; reduce n_grid"))
    })?;
    let axis: Vec<f64> = (0..n_grid).map(|k| -PI + 2.0 * PI * k as f64 / n_grid as f64).collect();
    let values: Vec<f64> = (0..total)
        .into_par_iter()
        .map(|mut idx| {
            let mut x = vec![0.0; d];
            for k in (0..d).rev() {
                x[k] = axis[idx % n_grid];
                idx /= n_grid;
            }
            f(&x)
        })
        .collect();

    // Distinct components per dimension, in ascending order.
    let comps: Vec<Vec<i64>> = (0..d)
        .map(|k| {
            let mut c: Vec<i64> = freq_set.iter().map(|w| w[k]).collect();
            c.sort_unstable();
            c.dedup();
            c
        })
        .collect();
    // Contract dimension 0 first: tensor layout [ω_0..ω_{k-1}, x_k..x_{d-1}].
    let mut tensor: Vec<C64> = values.into_iter().map(|v| C64::new(v, 0.0)).collect();
    let mut lead = 1usize;
    for (k, cs) in comps.iter().enumerate() {
        let trail = n_grid.pow((d - k - 1) as u32);
        let phases: Vec<C64> = cs
            .iter()
            .flat_map(|&w| axis.iter().map(move |&x| C64::from_polar(1.0 / n_grid as f64, -(w as f64) * x)))
            .collect();
        let mut next = vec![C64::new(0.0, 0.0); lead * cs.len() * trail];
        for l in 0..lead {
            for (wi, ph) in phases.chunks_exact(n_grid).enumerate() {
                let dst = &mut next[(l * cs.len() + wi) * trail..(l * cs.len() + wi + 1) * trail];
                for (xi, &p) in ph.iter().enumerate() {
                    let src = &tensor[(l * n_grid + xi) * trail..(l * n_grid + xi + 1) * trail];
                    for (o, &v) in dst.iter_mut().zip(src) {
                        *o += p * v;
                    }
                }
            }
        }
        tensor = next;
        lead *= cs.len();
    }
    let mut map = BTreeMap::new();
    for w in freq_set {
        let mut idx = 0;
        for (k, cs) in comps.iter().enumerate() {
            idx = idx * cs.len() + cs.binary_search(&w[k]).expect("component listed");
        }
        map.insert(w.clone(), tensor[idx]);
    }
    Ok(CoefficientTable::from_map(d, n_grid, map))
}

/// DFT of a target series on the requested vectors.
pub fn target_coefficients(spec: &TargetSpec, freq_set: &[Vec<i64>], n_grid: usize) -> Result<CoefficientTable> {
    spec.validate()?;
    dft_coefficients(|x| eval_target(spec, x).expect("dimension checked"), spec.d, freq_set, n_grid)
}

/// Closed-form coefficients of `a·f + b`, the target after output min-max
/// scaling to `[-1, 1]`.
pub fn scaled_target_coefficients(spec: &TargetSpec, scaling: &Scaling, freq_set: &[Vec<i64>]) -> Result<CoefficientTable> {
    spec.validate()?;
    let span = scaling.output_max - scaling.output_min;
    if !(span > 0.0) {
        return Err(Error::DegenerateScaling("target output range is empty".into()));
    }
    let a = 2.0 / span;
    let b = -1.0 - a * scaling.output_min;
    let mut map: BTreeMap<Vec<i64>, C64> = BTreeMap::new();
    for w in freq_set {
        if w.len() != spec.d {
            return Err(Error::contract(format!("frequency {w:?} does not have {} components", spec.d)));
        }
        let mut c = if w.iter().all(|&v| v == 0) { C64::new(a * spec.c0 + b, 0.0) } else { C64::new(0.0, 0.0) };
        for t in &spec.terms {
            let term = C64::new(t.re, t.im);
            if t.omega.iter().zip(w).all(|(o, &v)| *o == v as f64) {
                c += a * term;
            }
            if t.omega.iter().zip(w).all(|(o, &v)| *o == -v as f64) {
                c += a * term.conj();
            }
        }
        map.insert(w.clone(), c);
    }
    Ok(CoefficientTable::from_map(spec.d, 0, map))
}

/// DFT of a model's output on the requested vectors.
pub fn model_dft(circuit: &ParamCircuit, theta: &[f64], freq_set: &[Vec<i64>], n_grid: usize) -> Result<CoefficientTable> {
    let probe = vec![0.0; circuit.n_features()];
    model_output(circuit, &probe, theta)?;
    dft_coefficients(|x| model_output(circuit, x, theta).expect("inputs checked"), circuit.n_features(), freq_set, n_grid)
}

/// Exact coefficients of a model whose blocks each have one encoding layer
/// with integer frequencies, read off the circuit instead of sampled.
pub fn exact_model_coefficients(circuit: &ParamCircuit, theta: &[f64]) -> Result<CoefficientTable> {
    let probe = vec![0.0; circuit.n_features()];
    model_output(circuit, &probe, theta)?;
    let d = circuit.n_features();
    let mut map: BTreeMap<Vec<i64>, C64> = BTreeMap::new();
    for block in circuit.blocks() {
        let (features, omegas, coeffs) = block_coefficients(block, theta)?;
        let ints: Vec<Vec<i64>> = omegas
            .iter()
            .map(|om| {
                om.iter()
                    .map(|&w| {
                        if (w - w.round()).abs() > 1e-9 {
                            Err(Error::config(format!("frequency {w} is not an integer")))
                        } else {
                            Ok(w.round() as i64)
                        }
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        for (flat, c) in coeffs.iter().enumerate() {
            let mut omega = vec![0i64; d];
            let mut rest = flat;
            for k in (0..features.len()).rev() {
                omega[features[k]] = ints[k][rest % ints[k].len()];
                rest /= ints[k].len();
            }
            *map.entry(omega).or_insert(C64::new(0.0, 0.0)) += c * circuit.output_scale();
        }
    }
    Ok(CoefficientTable::from_map(d, 0, map))
}

/// Elementwise `model − target` over a shared index set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientDiff {
    pub entries: Vec<Coefficient>,
    pub max_abs: f64,
    pub argmax: Vec<i64>,
}

pub fn coefficient_diff(model: &CoefficientTable, target: &CoefficientTable) -> Result<CoefficientDiff> {
    if model.frequencies() != target.frequencies() {
        return Err(Error::contract("coefficient tables cover different frequency vectors"));
    }
    let mut max_abs = 0.0;
    let mut argmax = model.entries.first().map(|e| e.omega.clone()).unwrap_or_default();
    let entries = model
        .entries
        .iter()
        .zip(&target.entries)
        .map(|(m, t)| {
            let d = m.value() - t.value();
            if d.norm() > max_abs {
                max_abs = d.norm();
                argmax = m.omega.clone();
            }
            Coefficient { omega: m.omega.clone(), re: d.re, im: d.im }
        })
        .collect();
    Ok(CoefficientDiff { entries, max_abs, argmax })
}

/// Least-squares fit on `[1, cos(ω·x), sin(ω·x)]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierFit {
    pub frequencies: Vec<Vec<f64>>,
    pub intercept: f64,
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
    pub r2_train: f64,
    pub r2_test: f64,
}

impl FourierFit {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut y = self.intercept;
        for ((w, a), b) in self.frequencies.iter().zip(&self.cos).zip(&self.sin) {
            let phase: f64 = w.iter().zip(x).map(|(w, x)| w * x).sum();
            let (s, c) = phase.sin_cos();
            y += a * c + b * s;
        }
        y
    }
}

fn design_row(x: &[f64], freqs: &[Vec<f64>]) -> Vec<f64> {
    let mut row = Vec::with_capacity(2 * freqs.len() + 1);
    row.push(1.0);
    for w in freqs {
        row.push(w.iter().zip(x).map(|(w, x)| w * x).sum::<f64>().cos());
    }
    for w in freqs {
        row.push(w.iter().zip(x).map(|(w, x)| w * x).sum::<f64>().sin());
    }
    row
}

/// Fits on the split's train rows via Householder QR and scores both splits.
pub fn fourier_least_squares(dataset: &Dataset, split: &Split, freq_set: &[Vec<f64>]) -> Result<FourierFit> {
    let d = dataset.dims();
    if let Some(w) = freq_set.iter().find(|w| w.len() != d) {
        return Err(Error::contract(format!("frequency {w:?} does not have {d} components")));
    }
    let train = dataset.view(&split.train);
    let test = dataset.view(&split.test);
    let cols = 2 * freq_set.len() + 1;
    if train.len() < cols {
        return Err(Error::contract(format!("{} train rows cannot determine {cols} coefficients", train.len())));
    }
    let a = DMatrix::from_row_iterator(
        train.len(),
        cols,
        train.inputs.iter().flat_map(|x| design_row(x, freq_set)),
    );
    let y = DVector::from_column_slice(&train.targets);
    let qr = a.qr();
    let r = qr.r();
    let diag_max = r.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = diag_max * 1e-10 * train.len().max(cols) as f64;
    if let Some(k) = r.diagonal().iter().position(|v| v.abs() <= tol) {
        return Err(Error::DegenerateFit(format!("design column {k} is linearly dependent on earlier columns")));
    }
    let qty = qr.q().transpose() * y;
    let coef = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::DegenerateFit("triangular solve failed".into()))?;
    let f = freq_set.len();
    let fit = FourierFit {
        frequencies: freq_set.to_vec(),
        intercept: coef[0],
        cos: coef.iter().skip(1).take(f).copied().collect(),
        sin: coef.iter().skip(1 + f).copied().collect(),
        r2_train: 0.0,
        r2_test: 0.0,
    };
    let pred_train: Vec<f64> = train.inputs.iter().map(|x| fit.predict(x)).collect();
    let pred_test: Vec<f64> = test.inputs.iter().map(|x| fit.predict(x)).collect();
    Ok(FourierFit { r2_train: r2(&pred_train, &train.targets)?, r2_test: r2(&pred_test, &test.targets)?, ..fit })
}

/// Order statistics of a score list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    pub q25: f64,
    pub q75: f64,
    pub min: f64,
    pub max: f64,
}

/// Percentile with linear interpolation between closest ranks.
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn summarize_runs(scores: &[f64]) -> Result<RunSummary> {
    if scores.is_empty() {
        return Err(Error::contract("cannot summarize an empty score list"));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::contract("scores contain NaN"));
    }
    let mut s = scores.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(RunSummary {
        n: s.len(),
        mean: s.iter().sum::<f64>() / s.len() as f64,
        median: percentile(&s, 0.5),
        q25: percentile(&s, 0.25),
        q75: percentile(&s, 0.75),
        min: s[0],
        max: s[s.len() - 1],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate, minmax_scale, split_indices, DEFAULT_ROW_CAP};
    use proptest::prelude::*;

    #[test]
    fn cosine_and_constant() {
        let t = dft_coefficients(|x| (10.0 * x[0]).cos(), 1, &frequency_box(1, 63), 128).unwrap();
        for e in &t.entries {
            let expect = if e.omega[0].abs() == 10 { 0.5 } else { 0.0 };
            assert!((e.value() - expect).norm() < 1e-10, "{e:?}");
        }
        let one = dft_coefficients(|_| 1.0, 2, &frequency_box(2, 3), 8).unwrap();
        assert!((one.get(&[0, 0]).unwrap() - 1.0).norm() < 1e-12);
        assert!(one.entries.iter().filter(|e| e.omega != [0, 0]).all(|e| e.value().norm() < 1e-12));
    }

    #[test]
    fn nyquist_violation_names_frequency() {
        let err = dft_coefficients(|_| 0.0, 1, &[vec![64]], 128).unwrap_err();
        assert!(matches!(err, Error::Config(ref m) if m.contains("[64]")), "{err}");
    }

    #[test]
    fn dft_matches_direct_sum() {
        let f = |x: &[f64]| (x[0] + 2.0 * x[1]).sin() + 0.3 * (x[2] - x[0]).cos() + x[1] * 0.1;
        let freqs = vec![vec![1, 2, 0], vec![-1, 0, 1], vec![0, 0, 0], vec![2, -1, 3]];
        let n = 9;
        let t = dft_coefficients(f, 3, &freqs, n).unwrap();
        let axis: Vec<f64> = (0..n).map(|k| -PI + 2.0 * PI * k as f64 / n as f64).collect();
        for w in &freqs {
            let mut c = C64::new(0.0, 0.0);
            for &a in &axis {
                for &b in &axis {
                    for &e in &axis {
                        let x = [a, b, e];
                        let ph: f64 = w.iter().zip(&x).map(|(w, x)| *w as f64 * x).sum();
                        c += C64::from_polar(f(&x), -ph);
                    }
                }
            }
            c /= (n * n * n) as f64;
            assert!((c - t.get(w).unwrap()).norm() < 1e-12);
        }
    }

    #[test]
    fn target_round_trip() {
        let spec = TargetSpec::t2d();
        let t = target_coefficients(&spec, &frequency_box(2, 30), 128).unwrap();
        for term in &spec.terms {
            let w: Vec<i64> = term.omega.iter().map(|&v| v as i64).collect();
            let neg: Vec<i64> = w.iter().map(|v| -v).collect();
            assert!((t.get(&w).unwrap() - term.coefficient()).norm() < 1e-9);
            assert!((t.get(&neg).unwrap() - term.coefficient().conj()).norm() < 1e-9);
        }
        assert!((t.get(&[0, 0]).unwrap() - 0.5).norm() < 1e-9);
        assert!(t.hermitian_defect() < 1e-9);
    }

    #[test]
    fn scaled_target_closed_form_matches_dft() {
        let spec = TargetSpec::t2d();
        let ds = generate(&spec, 30, DEFAULT_ROW_CAP).unwrap();
        let sc = ds.scaling.clone();
        let freqs = frequency_box(2, 40);
        let closed = scaled_target_coefficients(&spec, &sc, &freqs).unwrap();
        let sampled = dft_coefficients(|x| sc.scale_output(eval_target(&spec, x).unwrap()), 2, &freqs, 128).unwrap();
        assert!(coefficient_diff(&closed, &sampled).unwrap().max_abs < 1e-9);
        let nonzero = closed.entries.iter().filter(|e| e.value().norm() > 1e-12).count();
        assert_eq!(nonzero, 19);
        let r = closed.restrict(&[vec![0, 0], vec![99, 99]]);
        assert_eq!(r.get(&[99, 99]), Some(C64::new(0.0, 0.0)));
    }

    #[test]
    fn diff_cases() {
        let a = dft_coefficients(|x| x[0].cos(), 1, &frequency_box(1, 2), 8).unwrap();
        let d = coefficient_diff(&a, &a).unwrap();
        assert_eq!(d.max_abs, 0.0);
        let b = dft_coefficients(|x| x[0].sin(), 1, &frequency_box(1, 2), 8).unwrap();
        assert!(coefficient_diff(&a, &b).unwrap().max_abs > 0.5);
        let c = dft_coefficients(|x| x[0].sin(), 1, &frequency_box(1, 1), 8).unwrap();
        assert!(matches!(coefficient_diff(&a, &c), Err(Error::Contract(_))));
    }

    #[test]
    fn least_squares_recovers_cosine() {
        let xs: Vec<Vec<f64>> = (0..60).map(|i| vec![-3.0 + 0.1 * i as f64]).collect();
        let ys: Vec<f64> = xs.iter().map(|x| (10.0 * x[0]).cos()).collect();
        let ds = Dataset {
            inputs: xs,
            targets: ys,
            scaling: minmax_scale(vec![vec![0.0], vec![1.0]], vec![0.0, 1.0]).unwrap().scaling,
        };
        let split = split_indices(60, 3).unwrap();
        let fit = fourier_least_squares(&ds, &split, &[vec![10.0]]).unwrap();
        assert!((fit.cos[0] - 1.0).abs() < 1e-10 && fit.sin[0].abs() < 1e-10 && fit.intercept.abs() < 1e-10);
        let mean_fit = fourier_least_squares(&ds, &split, &[]).unwrap();
        assert!(mean_fit.r2_train.abs() < 1e-12);
        let dup = fourier_least_squares(&ds, &split, &[vec![10.0], vec![10.0]]);
        assert!(matches!(dup, Err(Error::DegenerateFit(_))));
    }

    #[test]
    fn least_squares_on_t2d() {
        let ds = generate(&TargetSpec::t2d(), 30, DEFAULT_ROW_CAP).unwrap();
        let split = ds.split(42).unwrap();
        let fit = fourier_least_squares(&ds, &split, &TargetSpec::t2d().frequency_vectors()).unwrap();
        assert!(fit.r2_train >= 0.9999 && fit.r2_test >= 0.9999, "{fit:?}");
    }

    #[test]
    fn summaries() {
        let s = summarize_runs(&[4.0, 1.0, 3.0, 2.0]).unwrap();
        assert_eq!((s.median, s.q25, s.q75, s.mean), (2.5, 1.75, 3.25, 2.5));
        let one = summarize_runs(&[0.7]).unwrap();
        assert_eq!((one.min, one.q25, one.median, one.q75, one.max), (0.7, 0.7, 0.7, 0.7, 0.7));
        let flat = summarize_runs(&[0.3; 5]).unwrap();
        assert_eq!(flat.q75 - flat.q25, 0.0);
        assert!(matches!(summarize_runs(&[]), Err(Error::Contract(_))));
    }

    proptest! {
        #[test]
        fn summary_quantiles_ordered(v in prop::collection::vec(-10.0f64..10.0, 1..30)) {
            let s = summarize_runs(&v).unwrap();
            prop_assert!(s.min <= s.q25 && s.q25 <= s.median && s.median <= s.q75 && s.q75 <= s.max);
        }

        #[test]
        fn dft_is_hermitian(a in -2.0f64..2.0, b in -2.0f64..2.0, c in -1.0f64..1.0) {
            let f = move |x: &[f64]| a * (3.0 * x[0] - x[1]).cos() + b * (2.0 * x[1]).sin() + c * x[0];
            let t = dft_coefficients(f, 2, &frequency_box(2, 4), 16).unwrap();
            prop_assert!(t.hermitian_defect() < 1e-9);
        }
    }
}
