//! Frequency-spectrum algebra for Pauli-rotation encodings.
//!
//! A feature encoded by `r` rotation gates with prefactors `p_1 … p_r` sees the
//! eigenvalue ladder `Σ ±p_i / 2`; the accessible frequencies are all pairwise
//! differences of that ladder. Several features combine through a Cartesian
//! product, restricted to the groups of features that share entanglement.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used to identify two real frequencies.
pub const FREQ_TOL: f64 = 1e-9;

/// Mixed spectra larger than this are never materialized.
pub const MAX_MATERIALIZED: u128 = 1_000_000;

fn validate_prefactors(prefactors: &[f64]) -> Result<()> {
    if prefactors.is_empty() {
        return Err(Error::config("prefactor list is empty"));
    }
    if let Some(p) = prefactors.iter().find(|p| !p.is_finite() || **p <= 0.0) {
        return Err(Error::config(format!("prefactor {p} must be finite and > 0")));
    }
    Ok(())
}

fn integral(prefactors: &[f64]) -> Option<Vec<i64>> {
    prefactors
        .iter()
        .map(|&p| (p.fract() == 0.0 && p.abs() < (1u64 << 52) as f64).then_some(p as i64))
        .collect()
}

/// All sign-combination sums `Σ ±p_i / 2`, in basis-enumeration order.
///
/// Basis index `a` assigns a minus sign to prefactor `i` when bit `r-1-i` of
/// `a` is set, so the first prefactor is the most significant bit.
pub fn eigenvalue_ladder(prefactors: &[f64]) -> Result<Vec<f64>> {
    validate_prefactors(prefactors)?;
    let r = prefactors.len();
    if r > 30 {
        return Err(Error::Resource(format!("{r} prefactors exceed the ladder size cap")));
    }
    Ok((0..1usize << r)
        .map(|a| {
            prefactors
                .iter()
                .enumerate()
                .map(|(i, &p)| if (a >> (r - 1 - i)) & 1 == 0 { p } else { -p })
                .sum::<f64>()
                / 2.0
        })
        .collect())
}

/// A sorted set of frequencies accessible to one input dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum1D {
    frequencies: Vec<f64>,
}

impl Spectrum1D {
    /// Builds a spectrum from arbitrary values: sorted, deduplicated within [`FREQ_TOL`].
    pub fn from_values(mut values: Vec<f64>) -> Self {
        values.sort_by(f64::total_cmp);
        values.dedup_by(|a, b| (*a - *b).abs() <= FREQ_TOL);
        Spectrum1D { frequencies: values }
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    /// Position of `w` in the sorted frequency list, if present.
    pub fn index_of(&self, w: f64) -> Option<usize> {
        let i = self.frequencies.partition_point(|&f| f < w - FREQ_TOL);
        (i < self.frequencies.len() && (self.frequencies[i] - w).abs() <= FREQ_TOL).then_some(i)
    }

    pub fn contains(&self, w: f64) -> bool {
        self.index_of(w).is_some()
    }

    /// The frequencies as exact integers, when they all are.
    pub fn as_integers(&self) -> Option<Vec<i64>> {
        integral(&self.frequencies)
    }

    pub fn max_abs(&self) -> f64 {
        self.frequencies.iter().fold(0.0, |m, f| m.max(f.abs()))
    }

    /// True iff the set is closed under negation.
    pub fn is_symmetric(&self) -> bool {
        self.frequencies.iter().all(|&f| self.contains(-f))
    }

    pub fn covers(&self, targets: &[f64]) -> Coverage<f64> {
        let missing: Vec<f64> = targets.iter().copied().filter(|&t| !self.contains(t)).collect();
        Coverage { covered: missing.is_empty(), missing }
    }
}

/// Unique pairwise differences of the eigenvalue ladder of `prefactors`.
///
/// Every difference `λ_a − λ_b` equals `Σ d_i p_i` with `d_i ∈ {−1, 0, 1}`
/// chosen independently, so the set is built as an iterated Minkowski sum.
/// Integer prefactors are handled in exact integer arithmetic.
pub fn spectrum_from_prefactors(prefactors: &[f64]) -> Result<Spectrum1D> {
    validate_prefactors(prefactors)?;
    if let Some(ints) = integral(prefactors) {
        let mut set: Vec<i64> = vec![0];
        for p in ints {
            let mut next: Vec<i64> = set.iter().flat_map(|&s| [s - p, s, s + p]).collect();
            next.sort_unstable();
            next.dedup();
            set = next;
        }
        return Ok(Spectrum1D { frequencies: set.into_iter().map(|f| f as f64).collect() });
    }
    let mut set = vec![0.0];
    for &p in prefactors {
        set = Spectrum1D::from_values(set.iter().flat_map(|&s| [s - p, s, s + p]).collect())
            .frequencies;
    }
    Ok(Spectrum1D { frequencies: set })
}

/// Prefactors `3^0 … 3^(L−1)`, which give the largest dense spectrum `3^L`.
pub fn ternary_prefactors(layers: usize) -> Result<Vec<f64>> {
    if layers < 1 {
        return Err(Error::config("ternary encoding needs at least one layer"));
    }
    Ok((0..layers).map(|i| 3f64.powi(i as i32)).collect())
}

/// Result of a membership query over a set of target frequencies.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Coverage<F> {
    pub covered: bool,
    pub missing: Vec<F>,
}

/// Cardinalities of a grouped mixed spectrum.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MixedCardinality {
    /// Product of per-dimension sizes for each group.
    pub per_group: Vec<u128>,
    /// Plain sum over groups.
    pub total: u128,
    /// Extra copies of the all-zero vector counted in `total` (one per additional group).
    pub shared_zero: u128,
    /// Number of distinct frequency vectors once embedded in the full input space.
    pub distinct: u128,
}

/// Per-dimension spectra together with the partition of dimensions into
/// mixed-frequency groups. Mixed frequencies exist only within a group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedSpectrum {
    dims: Vec<Spectrum1D>,
    groups: Vec<Vec<usize>>,
}

pub(crate) fn validate_partition(groups: &[Vec<usize>], d: usize) -> Result<()> {
    let mut seen = vec![false; d];
    for g in groups {
        if g.is_empty() {
            return Err(Error::config("empty feature group"));
        }
        for &i in g {
            if i >= d {
                return Err(Error::config(format!("group member {i} out of range for {d} dimensions")));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::config(format!("dimension {i} appears in more than one group")));
            }
        }
    }
    if let Some(i) = seen.iter().position(|s| !s) {
        return Err(Error::config(format!("dimension {i} is not assigned to any group")));
    }
    Ok(())
}

impl MixedSpectrum {
    pub fn new(dims: Vec<Spectrum1D>, groups: Vec<Vec<usize>>) -> Result<Self> {
        validate_partition(&groups, dims.len())?;
        Ok(MixedSpectrum { dims, groups })
    }

    /// A single group spanning every dimension.
    pub fn all_mixed(dims: Vec<Spectrum1D>) -> Self {
        let groups = vec![(0..dims.len()).collect()];
        MixedSpectrum { dims, groups }
    }

    pub fn dims(&self) -> &[Spectrum1D] {
        &self.dims
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn cardinality(&self) -> MixedCardinality {
        mixed_cardinality(self)
    }

    /// True iff `v` is zero outside some group and each of its in-group
    /// components lies in that dimension's spectrum.
    pub fn contains(&self, v: &[f64]) -> Result<bool> {
        if v.len() != self.dims.len() {
            return Err(Error::contract(format!(
                "frequency vector has {} components, spectrum has {} dimensions",
                v.len(),
                self.dims.len()
            )));
        }
        Ok(self.groups.iter().any(|g| {
            v.iter().enumerate().all(|(i, &w)| {
                if g.contains(&i) {
                    self.dims[i].contains(w)
                } else {
                    w.abs() <= FREQ_TOL
                }
            })
        }))
    }

    pub fn covers(&self, targets: &[Vec<f64>]) -> Result<Coverage<Vec<f64>>> {
        let mut missing = Vec::new();
        for t in targets {
            if !self.contains(t)? {
                missing.push(t.clone());
            }
        }
        Ok(Coverage { covered: missing.is_empty(), missing })
    }

    /// All distinct frequency vectors, embedded in the full input space.
    ///
    /// Refuses to materialize more than [`MAX_MATERIALIZED`] vectors.
    pub fn vectors(&self) -> Result<Vec<Vec<f64>>> {
        let card = self.cardinality();
        if card.total > MAX_MATERIALIZED {
            return Err(Error::Resource(format!(
                "mixed spectrum has {} vectors; only cardinalities are available above {}",
                card.total, MAX_MATERIALIZED
            )));
        }
        let d = self.dims.len();
        let mut out: Vec<Vec<f64>> = Vec::with_capacity(card.distinct as usize);
        let mut zero_seen = false;
        for g in &self.groups {
            let mut partial: Vec<Vec<f64>> = vec![vec![0.0; d]];
            for &i in g {
                partial = partial
                    .into_iter()
                    .flat_map(|v| {
                        self.dims[i].frequencies().iter().map(move |&w| {
                            let mut v = v.clone();
                            v[i] = w;
                            v
                        })
                    })
                    .collect();
            }
            for v in partial {
                let is_zero = v.iter().all(|w| w.abs() <= FREQ_TOL);
                if is_zero {
                    if zero_seen {
                        continue;
                    }
                    zero_seen = true;
                }
                out.push(v);
            }
        }
        Ok(out)
    }
}

/// Product-rule cardinality per group and their plain sum.
pub fn mixed_cardinality(spec: &MixedSpectrum) -> MixedCardinality {
    let per_group: Vec<u128> = spec
        .groups
        .iter()
        .map(|g| g.iter().map(|&i| spec.dims[i].len() as u128).product())
        .collect();
    let total = per_group.iter().sum();
    let zero_groups = spec
        .groups
        .iter()
        .filter(|g| g.iter().all(|&i| spec.dims[i].contains(0.0)))
        .count() as u128;
    let shared_zero = zero_groups.saturating_sub(1);
    MixedCardinality { per_group, total, shared_zero, distinct: total - shared_zero }
}
