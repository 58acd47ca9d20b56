//! Fourier-series targets, grid sampling, MinMax scaling and train/test splits.

use std::f64::consts::PI;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simulator::C64;

/// Default cap on generated grid rows.
pub const DEFAULT_ROW_CAP: usize = 1_000_000;

/// One term `2·Re[c·e^{iω·x}]` of a real Fourier series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub omega: Vec<f64>,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

impl Term {
    pub fn new(omega: Vec<f64>, c: C64) -> Self {
        Term { omega, re: c.re, im: c.im }
    }

    pub fn coefficient(&self) -> C64 {
        C64::new(self.re, self.im)
    }
}

/// A real-valued multivariate Fourier series `c0 + Σ 2·Re[c·e^{iω·x}]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSpec {
    pub d: usize,
    pub c0: f64,
    #[serde(default)]
    pub terms: Vec<Term>,
}

impl TargetSpec {
    /// Two-dimensional target over all combinations of `{10, 20, 30}`.
    pub fn t2d() -> Self {
        let omegas = [10.0, 20.0, 30.0];
        let mut terms = Vec::with_capacity(9);
        for (k, &wk) in omegas.iter().enumerate() {
            for (l, &wl) in omegas.iter().enumerate() {
                let v = 0.05 * (3 * k + l + 1) as f64;
                terms.push(Term::new(vec![wk, wl], C64::new(v, v)));
            }
        }
        TargetSpec { d: 2, c0: 0.5, terms }
    }

    /// Four-dimensional target with two separable mixed-frequency blocks.
    pub fn t4d() -> Self {
        let terms = vec![
            Term::new(vec![20.0, 30.0, 0.0, 0.0], C64::new(0.15, 0.17)),
            Term::new(vec![10.0, 40.0, 0.0, 0.0], C64::new(0.21, 0.23)),
            Term::new(vec![0.0, 0.0, 10.0, 20.0], C64::new(0.27, 0.34)),
            Term::new(vec![0.0, 0.0, 30.0, 40.0], C64::new(0.03, 0.71)),
        ];
        TargetSpec { d: 4, c0: 0.1, terms }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::config("target dimension must be at least 1"));
        }
        if !self.c0.is_finite() {
            return Err(Error::config("target c0 must be finite"));
        }
        for t in &self.terms {
            if t.omega.len() != self.d {
                return Err(Error::config(format!(
                    "term frequency {:?} has {} components, target has {}",
                    t.omega,
                    t.omega.len(),
                    self.d
                )));
            }
            if t.omega.iter().chain([&t.re, &t.im]).any(|v| !v.is_finite()) {
                return Err(Error::config("target terms must be finite"));
            }
        }
        Ok(())
    }

    /// Frequency vectors of the terms, in declaration order.
    pub fn frequency_vectors(&self) -> Vec<Vec<f64>> {
        self.terms.iter().map(|t| t.omega.clone()).collect()
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        eval_target(self, x)
    }
}

/// `c0 + Σ 2·Re[c·e^{iω·x}]`.
pub fn eval_target(spec: &TargetSpec, x: &[f64]) -> Result<f64> {
    if x.len() != spec.d {
        return Err(Error::contract(format!("input has {} components, target has {}", x.len(), spec.d)));
    }
    let mut y = spec.c0;
    for t in &spec.terms {
        let phase: f64 = t.omega.iter().zip(x).map(|(w, xi)| w * xi).sum();
        let (s, c) = phase.sin_cos();
        y += 2.0 * (t.re * c - t.im * s);
    }
    Ok(y)
}

/// `n` evenly spaced points on `[−π, π]`, both endpoints included.
pub fn linspace_pi(n: usize) -> Vec<f64> {
    (0..n).map(|k| if k + 1 == n { PI } else { -PI + 2.0 * PI * k as f64 / (n - 1) as f64 }).collect()
}

/// Cartesian grid with the default row cap.
pub fn cartesian_grid(n: usize, d: usize) -> Result<Vec<Vec<f64>>> {
    cartesian_grid_capped(n, d, DEFAULT_ROW_CAP)
}

/// `n^d` rows in lexicographic order, first dimension slowest.
pub fn cartesian_grid_capped(n: usize, d: usize, row_cap: usize) -> Result<Vec<Vec<f64>>> {
    if n < 2 {
        return Err(Error::config(format!("points per dimension must be at least 2, got {n}")));
    }
    if d == 0 {
        return Err(Error::config("grid dimension must be at least 1"));
    }
    let rows = u32::try_from(d).ok().and_then(|e| n.checked_pow(e)).filter(|&r| r <= row_cap);
    let Some(rows) = rows else {
        return Err(Error::Resource(format!(
            "{n}^{d} grid rows exceed the cap of {row_cap}; reduce points per dimension"
        )));
    };
    let axis = linspace_pi(n);
    let mut out = Vec::with_capacity(rows);
    let mut idx = vec![0usize; d];
    for _ in 0..rows {
        out.push(idx.iter().map(|&i| axis[i]).collect());
        for k in (0..d).rev() {
            idx[k] += 1;
            if idx[k] < n {
                break;
            }
            idx[k] = 0;
        }
    }
    Ok(out)
}

/// Affine maps applied by [`minmax_scale`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaling {
    pub input_min: Vec<f64>,
    pub input_max: Vec<f64>,
    pub output_min: f64,
    pub output_max: f64,
}

impl Scaling {
    pub fn scale_input(&self, k: usize, v: f64) -> f64 {
        map_range(v, self.input_min[k], self.input_max[k], -PI, PI)
    }

    pub fn scale_output(&self, y: f64) -> f64 {
        map_range(y, self.output_min, self.output_max, -1.0, 1.0)
    }

    pub fn unscale_output(&self, y: f64) -> f64 {
        map_range(y, -1.0, 1.0, self.output_min, self.output_max)
    }
}

fn map_range(v: f64, lo: f64, hi: f64, new_lo: f64, new_hi: f64) -> f64 {
    if v == lo {
        new_lo
    } else if v == hi {
        new_hi
    } else {
        new_lo + (v - lo) * (new_hi - new_lo) / (hi - lo)
    }
}

/// Scaled inputs in `[−π, π]` and targets in `[−1, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
    pub scaling: Scaling,
}

fn min_max(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

/// MinMax-scales raw data; the maps are fitted on every row.
pub fn minmax_scale(inputs: Vec<Vec<f64>>, targets: Vec<f64>) -> Result<Dataset> {
    if inputs.len() != targets.len() {
        return Err(Error::contract(format!("{} input rows for {} targets", inputs.len(), targets.len())));
    }
    let Some(d) = inputs.first().map(Vec::len) else {
        return Err(Error::contract("dataset is empty"));
    };
    if inputs.iter().any(|r| r.len() != d) {
        return Err(Error::contract("input rows have differing lengths"));
    }
    if inputs.iter().flatten().chain(&targets).any(|v| !v.is_finite()) {
        return Err(Error::contract("dataset values must be finite"));
    }
    let (mut input_min, mut input_max) = (Vec::with_capacity(d), Vec::with_capacity(d));
    for k in 0..d {
        let (lo, hi) = min_max(inputs.iter().map(|r| r[k]));
        if hi <= lo {
            return Err(Error::DegenerateScaling(format!("input dimension {} is constant", k + 1)));
        }
        input_min.push(lo);
        input_max.push(hi);
    }
    let (output_min, output_max) = min_max(targets.iter().copied());
    if output_max <= output_min {
        return Err(Error::DegenerateScaling("targets are constant".into()));
    }
    let scaling = Scaling { input_min, input_max, output_min, output_max };
    let inputs = inputs
        .into_iter()
        .map(|r| r.iter().enumerate().map(|(k, &v)| scaling.scale_input(k, v)).collect())
        .collect();
    let targets = targets.iter().map(|&y| scaling.scale_output(y)).collect();
    Ok(Dataset { inputs, targets, scaling })
}

/// Samples `target` on an `n^d` grid and scales the result.
pub fn generate(target: &TargetSpec, points_per_dim: usize, row_cap: usize) -> Result<Dataset> {
    target.validate()?;
    let inputs = cartesian_grid_capped(points_per_dim, target.d, row_cap)?;
    let targets = inputs.iter().map(|x| eval_target(target, x)).collect::<Result<Vec<_>>>()?;
    minmax_scale(inputs, targets)
}

/// Maps scaled predictions back to the raw target range.
pub fn unscale_predictions(dataset: &Dataset, preds: &[f64]) -> Vec<f64> {
    preds.iter().map(|&p| dataset.scaling.unscale_output(p)).collect()
}

/// Sorted, disjoint train/test row indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub seed: u64,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Seeded shuffle of `0..n`; the first `⌊0.2·n⌋` shuffled rows form the test set.
pub fn split_indices(n: usize, seed: u64) -> Result<Split> {
    if n < 5 {
        return Err(Error::config(format!("need at least 5 rows to split, got {n}")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_test = n / 5;
    let mut test = order[..n_test].to_vec();
    let mut train = order[n_test..].to_vec();
    test.sort_unstable();
    train.sort_unstable();
    Ok(Split { seed, train, test })
}

/// Borrowed rows of a dataset.
#[derive(Debug, Clone)]
pub struct DataView<'a> {
    pub inputs: Vec<&'a [f64]>,
    pub targets: Vec<f64>,
}

impl<'a> DataView<'a> {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    /// The first `n` rows (all of them if fewer).
    pub fn head(&self, n: usize) -> DataView<'a> {
        let n = n.min(self.len());
        DataView { inputs: self.inputs[..n].to_vec(), targets: self.targets[..n].to_vec() }
    }
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn dims(&self) -> usize {
        self.inputs.first().map_or(0, Vec::len)
    }

    pub fn split(&self, seed: u64) -> Result<Split> {
        split_indices(self.len(), seed)
    }

    pub fn view(&self, rows: &[usize]) -> DataView<'_> {
        DataView {
            inputs: rows.iter().map(|&i| self.inputs[i].as_slice()).collect(),
            targets: rows.iter().map(|&i| self.targets[i]).collect(),
        }
    }

    pub fn all(&self) -> DataView<'_> {
        DataView { inputs: self.inputs.iter().map(Vec::as_slice).collect(), targets: self.targets.clone() }
    }
}

/// Writes rows as CSV with header `x1..xd,y`.
pub fn write_csv(path: &Path, inputs: &[Vec<f64>], targets: &[f64]) -> Result<()> {
    let d = inputs.first().map_or(0, Vec::len);
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    let mut header: Vec<String> = (1..=d).map(|k| format!("x{k}")).collect();
    header.push("y".into());
    w.write_record(&header).map_err(csv_error)?;
    for (x, y) in inputs.iter().zip(targets) {
        let rec: Vec<String> = x.iter().chain(std::iter::once(y)).map(|v| format!("{v:e}")).collect();
        w.write_record(&rec).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a CSV written by [`write_csv`]: the last column is the target.
pub fn read_csv(path: &Path) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let mut r = csv::Reader::from_path(path).map_err(csv_error)?;
    let width = r.headers().map_err(csv_error)?.len();
    if width < 2 {
        return Err(Error::Parse(format!("{}: need at least one input column and y", path.display())));
    }
    let (mut inputs, mut targets) = (Vec::new(), Vec::new());
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_error)?;
        let vals = rec
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Parse(format!("{} row {}: {e}", path.display(), line + 1)))?;
        targets.push(vals[width - 1]);
        inputs.push(vals[..width - 1].to_vec());
    }
    Ok((inputs, targets))
}

fn csv_error(e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            _ => unreachable!(),
        }
    } else {
        Error::Parse(e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn target_values_at_origin() {
        assert!((eval_target(&TargetSpec::t2d(), &[0.0, 0.0]).unwrap() - 5.0).abs() < 1e-12);
        assert!((eval_target(&TargetSpec::t4d(), &[0.0; 4]).unwrap() - 1.42).abs() < 1e-12);
        let flat = TargetSpec { d: 3, c0: 0.7, terms: vec![] };
        assert_eq!(eval_target(&flat, &[1.0, 2.0, 3.0]).unwrap(), 0.7);
        assert!(matches!(eval_target(&flat, &[1.0]), Err(Error::Contract(_))));
    }

    #[test]
    fn t2d_coefficients_row_major() {
        let t = TargetSpec::t2d();
        assert_eq!(t.terms[1].omega, vec![10.0, 20.0]);
        assert_eq!(t.terms[1].coefficient(), C64::new(0.1, 0.1));
        assert_eq!(t.terms[5].omega, vec![20.0, 30.0]);
        assert!((t.terms[5].re - 0.3).abs() < 1e-15);
    }

    #[test]
    fn grid_shapes() {
        assert_eq!(cartesian_grid(50, 2).unwrap().len(), 2500);
        assert_eq!(cartesian_grid(2, 1).unwrap(), vec![vec![-PI], vec![PI]]);
        let g = cartesian_grid(3, 2).unwrap();
        assert_eq!(g[1], vec![-PI, 0.0]);
        assert_eq!(g[3], vec![0.0, -PI]);
        assert!(matches!(cartesian_grid_capped(20, 4, 100_000), Err(Error::Resource(_))));
        assert_eq!(cartesian_grid_capped(20, 4, 160_000).unwrap().len(), 160_000);
        assert!(matches!(cartesian_grid(1, 2), Err(Error::Config(_))));
    }

    #[test]
    fn scaling_examples() {
        let ds = minmax_scale(vec![vec![0.0], vec![1.0], vec![2.0]], vec![2.0, 4.0, 6.0]).unwrap();
        assert_eq!(ds.targets, vec![-1.0, 0.0, 1.0]);
        assert_eq!(ds.inputs, vec![vec![-PI], vec![0.0], vec![PI]]);
        let grid = cartesian_grid(7, 2).unwrap();
        let ys: Vec<f64> = grid.iter().map(|x| x[0] + 2.0 * x[1]).collect();
        let ds = minmax_scale(grid.clone(), ys).unwrap();
        for (a, b) in ds.inputs.iter().flatten().zip(grid.iter().flatten()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(matches!(
            minmax_scale(vec![vec![0.0], vec![1.0]], vec![3.0, 3.0]),
            Err(Error::DegenerateScaling(_))
        ));
    }

    #[test]
    fn scaled_t2d_hits_extremes() {
        let ds = generate(&TargetSpec::t2d(), 50, DEFAULT_ROW_CAP).unwrap();
        let (lo, hi) = min_max(ds.targets.iter().copied());
        assert_eq!((lo, hi), (-1.0, 1.0));
    }

    #[test]
    fn split_sizes() {
        let s = split_indices(2500, 42).unwrap();
        assert_eq!((s.train.len(), s.test.len()), (2000, 500));
        assert_eq!(split_indices(900, 1).unwrap().test.len(), 180);
        assert_eq!(split_indices(160_000, 42).unwrap().train.len(), 128_000);
        assert_eq!(split_indices(5, 0).unwrap().test.len(), 1);
        assert_eq!(s, split_indices(2500, 42).unwrap());
        assert_ne!(s, split_indices(2500, 43).unwrap());
        assert!(matches!(split_indices(4, 0), Err(Error::Config(_))));
    }

    #[test]
    fn csv_round_trip() {
        let dir = std::env::temp_dir().join(format!("qfourier-csv-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("d.csv");
        let inputs = vec![vec![0.1, -0.2], vec![1.0 / 3.0, PI]];
        let targets = vec![0.5, -1.0 / 7.0];
        write_csv(&path, &inputs, &targets).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("x1,x2,y\n"));
        assert_eq!(read_csv(&path).unwrap(), (inputs, targets));
        std::fs::remove_dir_all(&dir).unwrap();
    }

    proptest! {
        #[test]
        fn unscale_inverts_scale(ys in prop::collection::vec(-50.0f64..50.0, 3..40)) {
            prop_assume!(ys.iter().any(|&y| y != ys[0]));
            let inputs: Vec<Vec<f64>> = (0..ys.len()).map(|i| vec![i as f64]).collect();
            let ds = minmax_scale(inputs, ys.clone()).unwrap();
            for (a, b) in unscale_predictions(&ds, &ds.targets).iter().zip(&ys) {
                prop_assert!((a - b).abs() < 1e-12);
            }
            let (lo, hi) = min_max(ds.targets.iter().copied());
            prop_assert_eq!((lo, hi), (-1.0, 1.0));
        }

        #[test]
        fn target_is_real_valued(x1 in -PI..PI, x2 in -PI..PI) {
            let spec = TargetSpec::t2d();
            let mut z = C64::new(spec.c0, 0.0);
            for t in &spec.terms {
                let e = C64::from_polar(1.0, t.omega[0] * x1 + t.omega[1] * x2);
                z += t.coefficient() * e + (t.coefficient() * e).conj();
            }
            prop_assert!(z.im.abs() < 1e-12);
            prop_assert!((z.re - eval_target(&spec, &[x1, x2]).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn split_partitions_rows(n in 5usize..400, seed in any::<u64>()) {
            let s = split_indices(n, seed).unwrap();
            let mut all: Vec<usize> = s.train.iter().chain(&s.test).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
            prop_assert_eq!(s.test.len(), n / 5);
        }
    }
}
