//! Exact statevector simulation of rotation/CNOT circuits.
//!
//! Basis index bit `k` holds qubit `k`; qubit 0 is the top wire. Gradients use
//! reverse-pass adjoint differentiation, one forward and one backward sweep.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circuit::{Block, ParamCircuit};
use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type Mat2 = [[C64; 2]; 2];

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// Pauli axis of a rotation gate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn pauli(self) -> Mat2 {
        match self {
            Axis::X => [[ZERO, ONE], [ONE, ZERO]],
            Axis::Y => [[ZERO, -I], [I, ZERO]],
            Axis::Z => [[ONE, ZERO], [ZERO, -ONE]],
        }
    }
}

/// Where a rotation angle comes from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Angle {
    /// Trainable parameter slot.
    Param(usize),
    /// Encoding angle `prefactor · x[index]`.
    Feature { index: usize, prefactor: f64 },
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gate {
    /// `R_σ(φ) = exp(−i φ σ / 2)`.
    Rotation { axis: Axis, qubit: usize, angle: Angle },
    /// General rotation `RZ(c)·RY(b)·RZ(a)` bound to slots `slot, slot+1, slot+2`
    /// as `(a, b, c)`; `RZ(a)` acts first.
    Rot { qubit: usize, slot: usize },
    Cnot { control: usize, target: usize },
}

impl Gate {
    /// Qubits touched by the gate (target first).
    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::Rotation { qubit, .. } | Gate::Rot { qubit, .. } => vec![qubit],
            Gate::Cnot { control, target } => vec![target, control],
        }
    }

    pub fn is_two_qubit(&self) -> bool {
        matches!(self, Gate::Cnot { .. })
    }

    /// True for rotations driven by an input feature.
    pub fn is_encoding(&self) -> bool {
        matches!(self, Gate::Rotation { angle: Angle::Feature { .. }, .. })
    }

    /// Number of resolved angles `apply_gate` expects.
    pub fn n_angles(&self) -> usize {
        match self {
            Gate::Rotation { .. } => 1,
            Gate::Rot { .. } => 3,
            Gate::Cnot { .. } => 0,
        }
    }

    /// Trainable slots read by the gate.
    pub fn param_slots(&self) -> Vec<usize> {
        match *self {
            Gate::Rotation { angle: Angle::Param(s), .. } => vec![s],
            Gate::Rot { slot, .. } => vec![slot, slot + 1, slot + 2],
            _ => Vec::new(),
        }
    }

    pub(crate) fn with_qubits(&self, map: impl Fn(usize) -> usize) -> Gate {
        match *self {
            Gate::Rotation { axis, qubit, angle } => Gate::Rotation { axis, qubit: map(qubit), angle },
            Gate::Rot { qubit, slot } => Gate::Rot { qubit: map(qubit), slot },
            Gate::Cnot { control, target } => Gate::Cnot { control: map(control), target: map(target) },
        }
    }

    /// Angles resolved against an input vector and a parameter vector.
    pub fn resolve(&self, x: &[f64], theta: &[f64]) -> [f64; 3] {
        match *self {
            Gate::Rotation { angle, .. } => [resolve_angle(angle, x, theta), 0.0, 0.0],
            Gate::Rot { slot, .. } => [theta[slot], theta[slot + 1], theta[slot + 2]],
            Gate::Cnot { .. } => [0.0; 3],
        }
    }

    /// The single-qubit unitary for resolved angles, `None` for CNOT.
    pub fn matrix(&self, angles: &[f64; 3]) -> Option<Mat2> {
        match *self {
            Gate::Rotation { axis, .. } => Some(rotation_matrix(axis, angles[0])),
            Gate::Rot { .. } => Some(rot_matrix(angles[0], angles[1], angles[2])),
            Gate::Cnot { .. } => None,
        }
    }
}

fn resolve_angle(angle: Angle, x: &[f64], theta: &[f64]) -> f64 {
    match angle {
        Angle::Param(s) => theta[s],
        Angle::Feature { index, prefactor } => prefactor * x[index],
        Angle::Fixed(v) => v,
    }
}

pub fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[ZERO; 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

pub fn dagger(m: &Mat2) -> Mat2 {
    [[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]]
}

fn scale(m: &Mat2, s: C64) -> Mat2 {
    [[m[0][0] * s, m[0][1] * s], [m[1][0] * s, m[1][1] * s]]
}

pub fn rotation_matrix(axis: Axis, phi: f64) -> Mat2 {
    let (s, c) = (phi / 2.0).sin_cos();
    match axis {
        Axis::X => [[C64::new(c, 0.0), C64::new(0.0, -s)], [C64::new(0.0, -s), C64::new(c, 0.0)]],
        Axis::Y => [[C64::new(c, 0.0), C64::new(-s, 0.0)], [C64::new(s, 0.0), C64::new(c, 0.0)]],
        Axis::Z => [[C64::new(c, -s), ZERO], [ZERO, C64::new(c, s)]],
    }
}

/// `RZ(c)·RY(b)·RZ(a)`.
pub fn rot_matrix(a: f64, b: f64, c: f64) -> Mat2 {
    mat_mul(&rotation_matrix(Axis::Z, c), &mat_mul(&rotation_matrix(Axis::Y, b), &rotation_matrix(Axis::Z, a)))
}

/// `dR_σ(φ)/dφ = −(i/2) σ R_σ(φ)`.
pub fn rotation_derivative(axis: Axis, phi: f64) -> Mat2 {
    scale(&mat_mul(&axis.pauli(), &rotation_matrix(axis, phi)), C64::new(0.0, -0.5))
}

/// Partial derivatives of [`rot_matrix`] with respect to `a`, `b` and `c`.
pub fn rot_derivatives(a: f64, b: f64, c: f64) -> [Mat2; 3] {
    let rza = rotation_matrix(Axis::Z, a);
    let ry = rotation_matrix(Axis::Y, b);
    let rzc = rotation_matrix(Axis::Z, c);
    [
        mat_mul(&rzc, &mat_mul(&ry, &rotation_derivative(Axis::Z, a))),
        mat_mul(&rzc, &mat_mul(&rotation_derivative(Axis::Y, b), &rza)),
        mat_mul(&rotation_derivative(Axis::Z, c), &mat_mul(&ry, &rza)),
    ]
}

/// Complex amplitudes over `2^n` basis states.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<C64>,
}

impl StateVector {
    /// `|0…0⟩` on `n_qubits` qubits.
    pub fn zero(n_qubits: usize) -> Self {
        Self::basis(n_qubits, 0)
    }

    pub fn basis(n_qubits: usize, index: usize) -> Self {
        let mut amps = vec![ZERO; 1 << n_qubits];
        amps[index] = ONE;
        StateVector { n_qubits, amps }
    }

    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        if amps.len() < 2 || !amps.len().is_power_of_two() {
            return Err(Error::contract(format!("{} amplitudes is not 2^n with n ≥ 1", amps.len())));
        }
        Ok(StateVector { n_qubits: amps.len().trailing_zeros() as usize, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.n_qubits {
            return Err(Error::config(format!("qubit {q} out of range for {} qubits", self.n_qubits)));
        }
        Ok(())
    }

    /// Applies a 2×2 unitary to qubit `q`. The index is not checked.
    pub fn apply_single(&mut self, q: usize, m: &Mat2) {
        apply_single_slice(&mut self.amps, q, m);
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) {
        apply_cnot_slice(&mut self.amps, control, target);
    }

    /// Applies the Pauli matrix of `axis` to qubit `q`.
    pub fn apply_pauli(&mut self, q: usize, axis: Axis) {
        self.apply_single(q, &axis.pauli());
    }

    pub fn expectation_z(&self, qubit: usize) -> Result<f64> {
        self.check_qubit(qubit)?;
        Ok(z_expectation(&self.amps, qubit))
    }
}

pub(crate) fn apply_single_slice(amps: &mut [C64], q: usize, m: &Mat2) {
    let stride = 1usize << q;
    let [[m00, m01], [m10, m11]] = *m;
    for chunk in amps.chunks_exact_mut(2 * stride) {
        let (lo, hi) = chunk.split_at_mut(stride);
        for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
            let (x0, x1) = (*a0, *a1);
            *a0 = m00 * x0 + m01 * x1;
            *a1 = m10 * x0 + m11 * x1;
        }
    }
}

pub(crate) fn apply_cnot_slice(amps: &mut [C64], control: usize, target: usize) {
    let (cb, tb) = (1usize << control, 1usize << target);
    for i in 0..amps.len() {
        if i & cb != 0 && i & tb == 0 {
            amps.swap(i, i | tb);
        }
    }
}

pub(crate) fn z_expectation(amps: &[C64], qubit: usize) -> f64 {
    let bit = 1usize << qubit;
    amps.iter()
        .enumerate()
        .map(|(i, a)| if i & bit == 0 { a.norm_sqr() } else { -a.norm_sqr() })
        .sum()
}

/// `T[m][n] = Σ_rest conj(λ_(m,rest)) ψ_(n,rest)` for qubit `q`, so that
/// `⟨λ| D_q |ψ⟩ = Σ_mn D[m][n] T[m][n]` for any 2×2 `D` acting on `q`.
pub(crate) fn transition_matrix(lambda: &[C64], psi: &[C64], q: usize) -> Mat2 {
    let stride = 1usize << q;
    let mut t = [[ZERO; 2]; 2];
    for (lc, pc) in lambda.chunks_exact(2 * stride).zip(psi.chunks_exact(2 * stride)) {
        let (l0, l1) = lc.split_at(stride);
        let (p0, p1) = pc.split_at(stride);
        for k in 0..stride {
            let (a, b) = (l0[k].conj(), l1[k].conj());
            t[0][0] += a * p0[k];
            t[0][1] += a * p1[k];
            t[1][0] += b * p0[k];
            t[1][1] += b * p1[k];
        }
    }
    t
}

pub(crate) fn contract(d: &Mat2, t: &Mat2) -> C64 {
    d[0][0] * t[0][0] + d[0][1] * t[0][1] + d[1][0] * t[1][0] + d[1][1] * t[1][1]
}

/// Applies `gate` with already-resolved angles.
///
/// `angles` must hold [`Gate::n_angles`] finite values.
pub fn apply_gate(state: &mut StateVector, gate: &Gate, angles: &[f64]) -> Result<()> {
    for q in gate.qubits() {
        state.check_qubit(q)?;
    }
    if let Gate::Cnot { control, target } = *gate {
        if control == target {
            return Err(Error::config("CNOT control and target coincide"));
        }
        state.apply_cnot(control, target);
        return Ok(());
    }
    if angles.len() != gate.n_angles() || angles.iter().any(|a| !a.is_finite()) {
        return Err(Error::contract(format!(
            "gate expects {} finite angles, got {:?}",
            gate.n_angles(),
            angles
        )));
    }
    let mut resolved = [0.0; 3];
    resolved[..angles.len()].copy_from_slice(angles);
    let m = gate.matrix(&resolved).expect("single-qubit gate");
    state.apply_single(gate.qubits()[0], &m);
    Ok(())
}

/// `⟨Z⟩` on `qubit`: `Σ |amp|² · (±1)` by the value of that bit.
pub fn expectation_z(state: &StateVector, qubit: usize) -> Result<f64> {
    state.expectation_z(qubit)
}

pub(crate) fn check_inputs(circuit: &ParamCircuit, x: &[f64], theta: &[f64]) -> Result<()> {
    if x.len() != circuit.n_features() {
        return Err(Error::contract(format!(
            "input has {} features, circuit expects {}",
            x.len(),
            circuit.n_features()
        )));
    }
    if theta.len() != circuit.n_params() {
        return Err(Error::contract(format!(
            "parameter vector has {} entries, circuit expects {}",
            theta.len(),
            circuit.n_params()
        )));
    }
    if x.iter().chain(theta).any(|v| !v.is_finite()) {
        return Err(Error::contract("inputs and parameters must be finite"));
    }
    Ok(())
}

pub(crate) fn apply_resolved(amps: &mut [C64], gate: &Gate, x: &[f64], theta: &[f64]) {
    match *gate {
        Gate::Cnot { control, target } => apply_cnot_slice(amps, control, target),
        Gate::Rotation { qubit, .. } | Gate::Rot { qubit, .. } => {
            let m = gate.matrix(&gate.resolve(x, theta)).expect("single-qubit gate");
            apply_single_slice(amps, qubit, &m);
        }
    }
}

/// Final state of the full register from `|0…0⟩`.
pub fn run_circuit(circuit: &ParamCircuit, x: &[f64], theta: &[f64]) -> Result<StateVector> {
    check_inputs(circuit, x, theta)?;
    let mut state = StateVector::zero(circuit.n_qubits());
    for gate in circuit.gates() {
        apply_resolved(&mut state.amps, gate, x, theta);
    }
    Ok(state)
}

impl Block {
    pub(crate) fn forward(&self, x: &[f64], theta: &[f64]) -> Vec<C64> {
        let mut amps = vec![ZERO; 1 << self.n_qubits];
        amps[0] = ONE;
        for gate in &self.gates {
            apply_resolved(&mut amps, gate, x, theta);
        }
        amps
    }

    pub(crate) fn observable(&self, amps: &[C64]) -> f64 {
        self.measured.iter().map(|&q| z_expectation(amps, q)).sum()
    }

    /// Output of this block and accumulation of `weight · ∂output/∂θ` into `grad`.
    pub(crate) fn adjoint(&self, x: &[f64], theta: &[f64], weight: f64, grad: &mut [f64]) -> f64 {
        let mut psi = self.forward(x, theta);
        let out = self.observable(&psi);
        let mut lambda = psi.clone();
        for (i, l) in lambda.iter_mut().enumerate() {
            let z: f64 = self.measured.iter().map(|&q| if i >> q & 1 == 0 { 1.0 } else { -1.0 }).sum();
            *l *= weight * z;
        }
        self.backward(&mut psi, &mut lambda, x, theta, grad);
        out
    }

    /// Reverse sweep over the whole block; see [`backward_gates`].
    pub(crate) fn backward(
        &self,
        psi: &mut [C64],
        lambda: &mut [C64],
        x: &[f64],
        theta: &[f64],
        grad: &mut [f64],
    ) {
        backward_gates(&self.gates, psi, lambda, x, theta, grad);
    }
}

/// Reverse sweep: `psi` holds the state after `gates`, `lambda` the weighted
/// observable applied to it. Accumulates `2 Re⟨λ|∂U ψ⟩` per slot.
pub(crate) fn backward_gates(
    gates: &[Gate],
    psi: &mut [C64],
    lambda: &mut [C64],
    x: &[f64],
    theta: &[f64],
    grad: &mut [f64],
) {
    for gate in gates.iter().rev() {
        match *gate {
            Gate::Cnot { control, target } => {
                apply_cnot_slice(psi, control, target);
                apply_cnot_slice(lambda, control, target);
            }
            Gate::Rotation { axis, qubit, angle } => {
                let phi = resolve_angle(angle, x, theta);
                let inv = dagger(&rotation_matrix(axis, phi));
                apply_single_slice(psi, qubit, &inv);
                if let Angle::Param(slot) = angle {
                    let t = transition_matrix(lambda, psi, qubit);
                    grad[slot] += 2.0 * contract(&rotation_derivative(axis, phi), &t).re;
                }
                apply_single_slice(lambda, qubit, &inv);
            }
            Gate::Rot { qubit, slot } => {
                let (a, b, c) = (theta[slot], theta[slot + 1], theta[slot + 2]);
                let inv = dagger(&rot_matrix(a, b, c));
                apply_single_slice(psi, qubit, &inv);
                let t = transition_matrix(lambda, psi, qubit);
                for (k, d) in rot_derivatives(a, b, c).iter().enumerate() {
                    grad[slot + k] += 2.0 * contract(d, &t).re;
                }
                apply_single_slice(lambda, qubit, &inv);
            }
        }
    }
}

/// Scalar model output: the (scaled) sum of `⟨Z⟩` over the measurement qubits.
///
/// Entanglement-isolated blocks are simulated on their own sub-registers.
pub fn model_output(circuit: &ParamCircuit, x: &[f64], theta: &[f64]) -> Result<f64> {
    check_inputs(circuit, x, theta)?;
    Ok(circuit.output_scale()
        * circuit.blocks().iter().map(|b| b.observable(&b.forward(x, theta))).sum::<f64>())
}

/// `∂ model_output / ∂θ_k` for every trainable slot.
pub fn gradient(circuit: &ParamCircuit, x: &[f64], theta: &[f64]) -> Result<Vec<f64>> {
    check_inputs(circuit, x, theta)?;
    let mut grad = vec![0.0; circuit.n_params()];
    for block in circuit.blocks() {
        block.adjoint(x, theta, circuit.output_scale(), &mut grad);
    }
    Ok(grad)
}
