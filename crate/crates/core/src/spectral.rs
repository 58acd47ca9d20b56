//! Exact MSE loss and gradient through the model's Fourier coefficients.
//!
//! For a block whose encodings form one contiguous layer `E(x)` between a
//! prefix `W₁` and a suffix `W₂`, write each encoding as `V D(x) V†` with `D`
//! diagonal. With `u = V† W₁|0⟩` and `Õ = V† W₂† M W₂ V` the block output is
//! `Σ_ab conj(u_a) Õ_ab u_b e^{iω_ab·x}`, so the coefficients `c_ω` follow
//! from one matrix pass instead of one statevector pass per data row.
//! Row values and the residual transform `R(ω) = Σ_j r_j e^{iω·x_j}` are
//! evaluated by separable contractions over a trie of the rows' coordinates.

use crate::circuit::{Block, ParamCircuit};
use crate::error::{Error, Result};
use crate::simulator::{
    apply_resolved, backward_gates, dagger, rot_derivatives, rotation_derivative,
    Angle, Axis, Gate, Mat2, C64,
};
use crate::spectrum::{spectrum_from_prefactors, Spectrum1D};
use crate::training::LossEngine;

/// Largest coefficient tensor a block may use.
const MAX_COEFFS: usize = 1_000_000;
/// Largest block register handled with dense matrices.
const MAX_QUBITS: usize = 10;

const ZERO: C64 = C64::new(0.0, 0.0);

fn basis_change(axis: Axis) -> Mat2 {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let r = C64::new(h, 0.0);
    let i = C64::new(0.0, h);
    match axis {
        Axis::X => [[r, r], [r, -r]],
        Axis::Y => [[r, r], [i, -i]],
        Axis::Z => [[C64::new(1.0, 0.0), ZERO], [ZERO, C64::new(1.0, 0.0)]],
    }
}

/// Coordinate trie of data rows over an ordered feature list.
struct Trie {
    dims: Vec<usize>,
    /// `parents[l][node]` indexes the node's parent at level `l − 1` (root for `l = 0`).
    parents: Vec<Vec<u32>>,
    /// `phases[l][node · dims[l] + i] = e^{i ω_i v}` for the node's coordinate `v`.
    phases: Vec<Vec<C64>>,
    leaf_of_row: Vec<u32>,
    n_leaves: usize,
}

impl Trie {
    fn new(rows: &[&[f64]], features: &[usize], omegas: &[Vec<f64>]) -> Self {
        let dims: Vec<usize> = omegas.iter().map(Vec::len).collect();
        let m = features.len();
        let mut order: Vec<usize> = (0..rows.len()).collect();
        order.sort_by(|&a, &b| {
            features
                .iter()
                .map(|&f| rows[a][f].total_cmp(&rows[b][f]))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let mut parents: Vec<Vec<u32>> = vec![Vec::new(); m];
        let mut values: Vec<Vec<f64>> = vec![Vec::new(); m];
        let mut leaf_of_row = vec![0u32; rows.len()];
        let mut prev: Option<usize> = None;
        for &row in &order {
            let first_diff = match prev {
                None => 0,
                Some(p) => features.iter().position(|&f| rows[p][f] != rows[row][f]).unwrap_or(m),
            };
            for l in first_diff..m {
                let parent = if l == 0 { 0 } else { parents[l - 1].len() as u32 - 1 };
                parents[l].push(parent);
                values[l].push(rows[row][features[l]]);
            }
            leaf_of_row[row] = if m == 0 { 0 } else { parents[m - 1].len() as u32 - 1 };
            prev = Some(row);
        }
        let phases = values
            .iter()
            .zip(omegas)
            .map(|(vals, om)| vals.iter().flat_map(|&v| om.iter().map(move |&w| C64::from_polar(1.0, w * v))).collect())
            .collect();
        let n_leaves = if m == 0 { 1 } else { parents[m - 1].len() };
        Trie { dims, parents, phases, leaf_of_row, n_leaves }
    }

    /// Multiply-adds per transform, used for backend selection.
    fn cost(&self) -> usize {
        let mut width: usize = self.dims.iter().product();
        let mut total = 0;
        for (l, p) in self.parents.iter().enumerate() {
            total += p.len() * width;
            width /= self.dims[l];
        }
        total
    }

    /// `Σ_ω c_ω e^{iω·x}` at every leaf.
    fn synthesize(&self, coeffs: &[C64]) -> Vec<C64> {
        let mut cur = coeffs.to_vec();
        let mut width = coeffs.len();
        for (l, parents) in self.parents.iter().enumerate() {
            let d = self.dims[l];
            let rest = width / d;
            let mut next = vec![ZERO; parents.len() * rest];
            for (node, &p) in parents.iter().enumerate() {
                let src = &cur[p as usize * width..(p as usize + 1) * width];
                let dst = &mut next[node * rest..(node + 1) * rest];
                for (i, &w) in self.phases[l][node * d..(node + 1) * d].iter().enumerate() {
                    for (o, &v) in dst.iter_mut().zip(&src[i * rest..(i + 1) * rest]) {
                        *o += w * v;
                    }
                }
            }
            cur = next;
            width = rest;
        }
        cur
    }

    /// `R(ω) = Σ_j r_j e^{iω·x_j}` over the full coefficient index.
    fn analyze(&self, residuals: &[f64]) -> Vec<C64> {
        let mut cur = vec![ZERO; self.n_leaves];
        for (&leaf, &r) in self.leaf_of_row.iter().zip(residuals) {
            cur[leaf as usize] += r;
        }
        let mut width = 1;
        for l in (0..self.parents.len()).rev() {
            let d = self.dims[l];
            let n_up = if l == 0 { 1 } else { self.parents[l - 1].len() };
            let up_width = d * width;
            let mut prev = vec![ZERO; n_up * up_width];
            for (node, &p) in self.parents[l].iter().enumerate() {
                let src = &cur[node * width..(node + 1) * width];
                let base = p as usize * up_width;
                for (i, &w) in self.phases[l][node * d..(node + 1) * d].iter().enumerate() {
                    let dst = &mut prev[base + i * width..base + (i + 1) * width];
                    for (o, &v) in dst.iter_mut().zip(src) {
                        *o += w * v;
                    }
                }
            }
            cur = prev;
            width = up_width;
        }
        cur
    }
}

/// Dense `n × n` complex matrix helpers, row-major.
fn left_apply(m: &mut [C64], n: usize, q: usize, g: &Mat2) {
    let bit = 1 << q;
    for i0 in (0..n).filter(|i| i & bit == 0) {
        let (lo, hi) = m.split_at_mut((i0 | bit) * n);
        let r0 = &mut lo[i0 * n..(i0 + 1) * n];
        let r1 = &mut hi[..n];
        for (a, b) in r0.iter_mut().zip(r1.iter_mut()) {
            let (x0, x1) = (*a, *b);
            *a = g[0][0] * x0 + g[0][1] * x1;
            *b = g[1][0] * x0 + g[1][1] * x1;
        }
    }
}

/// `M ← M · B` with `B` acting on qubit `q`.
fn right_apply(m: &mut [C64], n: usize, q: usize, b: &Mat2) {
    let bit = 1 << q;
    for row in m.chunks_exact_mut(n) {
        for chunk in row.chunks_exact_mut(2 * bit) {
            let (lo, hi) = chunk.split_at_mut(bit);
            for (a, c) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x0, x1) = (*a, *c);
                *a = x0 * b[0][0] + x1 * b[1][0];
                *c = x0 * b[0][1] + x1 * b[1][1];
            }
        }
    }
}

/// `M ← C M C` for a CNOT `C` (a self-inverse permutation).
fn cnot_conjugate(m: &mut [C64], n: usize, control: usize, target: usize) {
    let (cb, tb) = (1usize << control, 1usize << target);
    let pairs: Vec<usize> = (0..n).filter(|i| i & cb != 0 && i & tb == 0).collect();
    for &i in &pairs {
        let (lo, hi) = m.split_at_mut((i | tb) * n);
        lo[i * n..(i + 1) * n].swap_with_slice(&mut hi[..n]);
    }
    for row in m.chunks_exact_mut(n) {
        for &i in &pairs {
            row.swap(i, i | tb);
        }
    }
}

/// `T[α][β] = Σ_{rest,i} conj(O[(α,rest), i]) · Y[(β,rest), i]` for Hermitian `O`.
fn pair_trace(o: &[C64], y: &[C64], n: usize, q: usize) -> Mat2 {
    let bit = 1 << q;
    let mut t = [[ZERO; 2]; 2];
    for r in (0..n).filter(|r| r & bit == 0) {
        let rows = [r, r | bit];
        for (a, &ra) in rows.iter().enumerate() {
            let orow = &o[ra * n..(ra + 1) * n];
            for (b, &rb) in rows.iter().enumerate() {
                let yrow = &y[rb * n..(rb + 1) * n];
                t[a][b] += orow.iter().zip(yrow).map(|(x, z)| x.conj() * z).sum::<C64>();
            }
        }
    }
    t
}

/// Per-block constants.
struct Plan {
    n: usize,
    prefix: Vec<Gate>,
    suffix: Vec<Gate>,
    /// Basis change per encoded qubit.
    basis: Vec<(usize, Mat2)>,
    /// Diagonal of the unscaled measured observable.
    observable: Vec<f64>,
    /// Coefficient-tensor index of each matrix entry `(a, b)`.
    pair_index: Vec<u32>,
    n_coeffs: usize,
    trie: Trie,
}

/// Per-iteration intermediates of a block.
struct Work {
    phi: Vec<C64>,
    u: Vec<C64>,
    o_tilde: Vec<C64>,
    /// Heisenberg observable after each trainable suffix gate, by suffix position.
    o_after: Vec<Option<Vec<C64>>>,
    coeffs: Vec<C64>,
}

struct Split {
    prefix: Vec<Gate>,
    encodings: Vec<Gate>,
    suffix: Vec<Gate>,
}

/// Splits a block into prefix, encoding layer and suffix, if it has that shape.
fn split_block(block: &Block) -> Option<Split> {
    let enc: Vec<usize> = (0..block.gates.len()).filter(|&i| block.gates[i].is_encoding()).collect();
    let (start, end) = match (enc.first(), enc.last()) {
        (Some(&s), Some(&e)) => (s, e + 1),
        _ => (block.gates.len(), block.gates.len()),
    };
    if enc.len() != end - start {
        return None;
    }
    let mut qubits: Vec<usize> = block.gates[start..end].iter().map(|g| g.qubits()[0]).collect();
    qubits.sort_unstable();
    if qubits.windows(2).any(|w| w[0] == w[1]) {
        return None;
    }
    Some(Split {
        prefix: block.gates[..start].to_vec(),
        encodings: block.gates[start..end].to_vec(),
        suffix: block.gates[end..].to_vec(),
    })
}

/// Features and per-feature frequency lists of an encoding layer.
fn layer_spectrum(encodings: &[Gate]) -> Result<(Vec<usize>, Vec<Spectrum1D>)> {
    let mut features: Vec<usize> = encodings
        .iter()
        .filter_map(|g| match g {
            Gate::Rotation { angle: Angle::Feature { index, .. }, .. } => Some(*index),
            _ => None,
        })
        .collect();
    features.sort_unstable();
    features.dedup();
    let spectra = features
        .iter()
        .map(|&f| {
            let ps: Vec<f64> = encodings
                .iter()
                .filter_map(|g| match *g {
                    Gate::Rotation { angle: Angle::Feature { index, prefactor }, .. } if index == f => {
                        Some(prefactor.abs())
                    }
                    _ => None,
                })
                .collect();
            spectrum_from_prefactors(&ps)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((features, spectra))
}

fn plan_block(block: &Block, rows: &[&[f64]]) -> Result<Plan> {
    let split = split_block(block).ok_or_else(|| Error::config("circuit has no single contiguous encoding layer"))?;
    if block.n_qubits > MAX_QUBITS {
        return Err(Error::config(format!("block of {} qubits is too wide for the spectral backend", block.n_qubits)));
    }
    let (features, spectra) = layer_spectrum(&split.encodings)?;
    let dims: Vec<usize> = spectra.iter().map(Spectrum1D::len).collect();
    let n_coeffs = dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d).filter(|&v| v <= MAX_COEFFS));
    let n_coeffs = n_coeffs.ok_or_else(|| Error::Resource("model spectrum too large for the spectral backend".into()))?;
    let n = 1usize << block.n_qubits;

    let mut pair_index = vec![0u32; n * n];
    let mut omega = vec![0.0; features.len()];
    for a in 0..n {
        for b in 0..n {
            omega.iter_mut().for_each(|w| *w = 0.0);
            for g in &split.encodings {
                if let Gate::Rotation { qubit, angle: Angle::Feature { index, prefactor }, .. } = *g {
                    let k = features.binary_search(&index).expect("feature listed");
                    omega[k] += prefactor * ((b >> qubit & 1) as f64 - (a >> qubit & 1) as f64);
                }
            }
            let mut idx = 0usize;
            for (k, s) in spectra.iter().enumerate() {
                let i = s
                    .index_of(omega[k])
                    .ok_or_else(|| Error::contract(format!("frequency {} outside its spectrum", omega[k])))?;
                idx = idx * dims[k] + i;
            }
            pair_index[a * n + b] = idx as u32;
        }
    }

    let basis = split
        .encodings
        .iter()
        .map(|g| match *g {
            Gate::Rotation { axis, qubit, .. } => (qubit, basis_change(axis)),
            _ => unreachable!("encoding layer holds rotations only"),
        })
        .collect();
    let observable = (0..n)
        .map(|i| block.measured.iter().map(|&q| if i >> q & 1 == 0 { 1.0 } else { -1.0 }).sum())
        .collect();
    let omegas: Vec<Vec<f64>> = spectra.iter().map(|s| s.frequencies().to_vec()).collect();
    let trie = Trie::new(rows, &features, &omegas);
    Ok(Plan { n, prefix: split.prefix, suffix: split.suffix, basis, observable, pair_index, n_coeffs, trie })
}

fn single_matrix(gate: &Gate, theta: &[f64]) -> Option<(usize, Mat2)> {
    match *gate {
        Gate::Cnot { .. } => None,
        Gate::Rotation { qubit, .. } | Gate::Rot { qubit, .. } => {
            Some((qubit, gate.matrix(&gate.resolve(&[], theta)).expect("single-qubit gate")))
        }
    }
}

impl Plan {
    /// Conjugates `m` by the encoding basis change: `V m V†` or `V† m V`.
    fn change_basis(&self, m: &mut [C64], forward: bool) {
        for (q, v) in &self.basis {
            let (l, r) = if forward { (*v, dagger(v)) } else { (dagger(v), *v) };
            left_apply(m, self.n, *q, &l);
            right_apply(m, self.n, *q, &r);
        }
    }

    /// Evaluates the block's coefficients, reusing buffers from `reuse`.
    fn prepare(&self, theta: &[f64], reuse: Option<Work>) -> Work {
        let n = self.n;
        let mut phi = vec![ZERO; n];
        phi[0] = C64::new(1.0, 0.0);
        for g in &self.prefix {
            apply_resolved(&mut phi, g, &[], theta);
        }
        let mut u = phi.clone();
        for (q, v) in &self.basis {
            crate::simulator::apply_single_slice(&mut u, *q, &dagger(v));
        }

        let mut o = vec![ZERO; n * n];
        for (i, &z) in self.observable.iter().enumerate() {
            o[i * n + i] = C64::new(z, 0.0);
        }
        let mut o_after = reuse.map_or_else(|| vec![None; self.suffix.len()], |w| w.o_after);
        for (k, g) in self.suffix.iter().enumerate().rev() {
            if !g.param_slots().is_empty() {
                match &mut o_after[k] {
                    Some(buf) => buf.copy_from_slice(&o),
                    slot => *slot = Some(o.clone()),
                }
            }
            match single_matrix(g, theta) {
                Some((q, m)) => {
                    left_apply(&mut o, n, q, &dagger(&m));
                    right_apply(&mut o, n, q, &m);
                }
                None => {
                    if let Gate::Cnot { control, target } = *g {
                        cnot_conjugate(&mut o, n, control, target);
                    }
                }
            }
        }
        self.change_basis(&mut o, false);

        let mut coeffs = vec![ZERO; self.n_coeffs];
        for a in 0..n {
            let ua = u[a].conj();
            for b in 0..n {
                coeffs[self.pair_index[a * n + b] as usize] += ua * o[a * n + b] * u[b];
            }
        }
        Work { phi, u, o_tilde: o, o_after, coeffs }
    }

    /// Accumulates `Σ_ab ∂K_ab/∂θ · R(ω_ab)` into `grad`.
    fn gradient(&self, work: &Work, residual_transform: &[C64], theta: &[f64], grad: &mut [f64]) {
        let n = self.n;
        let p: Vec<C64> = self.pair_index.iter().map(|&i| residual_transform[i as usize]).collect();

        if self.prefix.iter().any(|g| !g.param_slots().is_empty()) {
            // λ = V (Õ∘P) V† φ, and V† φ = u.
            let mut lambda = vec![ZERO; n];
            for (i, l) in lambda.iter_mut().enumerate() {
                let row = i * n..(i + 1) * n;
                *l = work.o_tilde[row.clone()].iter().zip(&p[row]).zip(&work.u).map(|((o, r), b)| o * r * b).sum();
            }
            for (q, v) in &self.basis {
                crate::simulator::apply_single_slice(&mut lambda, *q, v);
            }
            let mut psi = work.phi.clone();
            backward_gates(&self.prefix, &mut psi, &mut lambda, &[], theta, grad);
        }

        if work.o_after.iter().all(Option::is_none) {
            return;
        }
        let mut rho = vec![ZERO; n * n];
        for b in 0..n {
            for a in 0..n {
                rho[b * n + a] = work.u[b] * work.u[a].conj() * p[a * n + b];
            }
        }
        self.change_basis(&mut rho, true);
        for (k, g) in self.suffix.iter().enumerate() {
            let Some((q, m)) = single_matrix(g, theta) else {
                if let Gate::Cnot { control, target } = *g {
                    cnot_conjugate(&mut rho, n, control, target);
                }
                continue;
            };
            right_apply(&mut rho, n, q, &dagger(&m));
            if let Some(o) = &work.o_after[k] {
                let t = pair_trace(o, &rho, n, q);
                match *g {
                    Gate::Rot { slot, .. } => {
                        let derivs = rot_derivatives(theta[slot], theta[slot + 1], theta[slot + 2]);
                        for (j, d) in derivs.iter().enumerate() {
                            grad[slot + j] += 2.0 * crate::simulator::contract(d, &t).re;
                        }
                    }
                    Gate::Rotation { axis, angle: Angle::Param(slot), .. } => {
                        let d = rotation_derivative(axis, theta[slot]);
                        grad[slot] += 2.0 * crate::simulator::contract(&d, &t).re;
                    }
                    _ => {}
                }
            }
            left_apply(&mut rho, n, q, &m);
        }
    }

    fn cost(&self) -> usize {
        let singles = self.suffix.iter().filter(|g| !g.is_two_qubit()).count();
        (2 * singles + 8) * 4 * self.n * self.n + 2 * self.trie.cost()
    }
}

/// Loss engine over a circuit whose blocks all have a single encoding layer.
pub(crate) struct SpectralEngine<'a> {
    circuit: &'a ParamCircuit,
    plans: Vec<Plan>,
    targets: Vec<f64>,
    cache: Vec<Option<Work>>,
}

impl<'a> SpectralEngine<'a> {
    pub(crate) fn new(circuit: &'a ParamCircuit, rows: &[&[f64]], targets: Vec<f64>) -> Result<Self> {
        if rows.len() != targets.len() || rows.is_empty() {
            return Err(Error::contract("rows and targets must be nonempty and equally long"));
        }
        let plans = circuit.blocks().iter().map(|b| plan_block(b, rows)).collect::<Result<Vec<_>>>()?;
        let cache = plans.iter().map(|_| None).collect();
        Ok(SpectralEngine { circuit, plans, targets, cache })
    }

    /// True when every block qualifies and the spectral pass is estimated cheaper.
    pub(crate) fn preferred(circuit: &ParamCircuit, rows: &[&[f64]]) -> bool {
        let eligible = circuit.blocks().iter().all(|b| {
            b.n_qubits <= MAX_QUBITS
                && split_block(b).is_some_and(|s| {
                    layer_spectrum(&s.encodings).is_ok_and(|(_, sp)| {
                        sp.iter().try_fold(1usize, |acc, s| acc.checked_mul(s.len()).filter(|&v| v <= MAX_COEFFS)).is_some()
                    })
                })
        });
        if !eligible || rows.is_empty() {
            return false;
        }
        let direct: usize =
            circuit.blocks().iter().map(|b| rows.len() * b.gates.len() * (1 << b.n_qubits) * 12).sum();
        let Ok(plans) = circuit.blocks().iter().map(|b| plan_block(b, rows)).collect::<Result<Vec<_>>>() else {
            return false;
        };
        plans.iter().map(Plan::cost).sum::<usize>() < direct
    }

    fn prepare_all(&mut self, theta: &[f64]) -> Vec<Work> {
        self.plans.iter().zip(self.cache.iter_mut()).map(|(p, c)| p.prepare(theta, c.take())).collect()
    }

    fn outputs(&self, works: &[Work]) -> Vec<f64> {
        let scale = self.circuit.output_scale();
        let mut out = vec![0.0; self.targets.len()];
        for (plan, work) in self.plans.iter().zip(works) {
            let leaves = plan.trie.synthesize(&work.coeffs);
            for (o, &leaf) in out.iter_mut().zip(&plan.trie.leaf_of_row) {
                *o += leaves[leaf as usize].re;
            }
        }
        out.iter_mut().for_each(|o| *o *= scale);
        out
    }
}

impl LossEngine for SpectralEngine<'_> {
    fn loss_grad(&mut self, theta: &[f64], grad: &mut [f64]) -> f64 {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let works = self.prepare_all(theta);
        let preds = self.outputs(&works);
        let n = self.targets.len() as f64;
        let coef = 2.0 * self.circuit.output_scale() / n;
        let residuals: Vec<f64> = preds.iter().zip(&self.targets).map(|(f, y)| coef * (f - y)).collect();
        let loss = preds.iter().zip(&self.targets).map(|(f, y)| (f - y) * (f - y)).sum::<f64>() / n;
        for (plan, work) in self.plans.iter().zip(&works) {
            let transform = plan.trie.analyze(&residuals);
            plan.gradient(work, &transform, theta, grad);
        }
        self.cache = works.into_iter().map(Some).collect();
        loss
    }

    fn predictions(&mut self, theta: &[f64]) -> Vec<f64> {
        let works = self.prepare_all(theta);
        let out = self.outputs(&works);
        self.cache = works.into_iter().map(Some).collect();
        out
    }
}

/// Exact Fourier coefficients of one block: `(feature indices, per-feature
/// frequencies, row-major coefficient tensor)`.
pub(crate) fn block_coefficients(block: &Block, theta: &[f64]) -> Result<(Vec<usize>, Vec<Vec<f64>>, Vec<C64>)> {
    let split = split_block(block).ok_or_else(|| Error::config("circuit has no single contiguous encoding layer"))?;
    let (features, spectra) = layer_spectrum(&split.encodings)?;
    let plan = plan_block(block, &[])?;
    let work = plan.prepare(theta, None);
    Ok((features, spectra.iter().map(|s| s.frequencies().to_vec()).collect(), work.coeffs))
}
