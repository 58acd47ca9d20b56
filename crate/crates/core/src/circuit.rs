//! Model configuration and compilation into parameterized circuits.
//!
//! Every ansatz layer holds, per mixed-frequency group, `B` training blocks.
//! A block walks the group's qubits bottom-to-top: a general rotation on the
//! lowest wire, then for each higher wire a reverse CNOT (control on the wire
//! below) followed by a rotation on that wire. Encoding layers sit between
//! ansatz layers. The top qubit of each group is measured in Z.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simulator::{Angle, Axis, Gate};
use crate::spectrum::{spectrum_from_prefactors, validate_partition, MixedSpectrum, Spectrum1D};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Architecture {
    /// Repeated encodings of a feature share one qubit, separated by ansatz layers.
    Serial,
    /// One qubit per (feature, prefactor) pair, single encoding layer.
    Parallel,
}

/// How per-group expectations combine into the model output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputCombination {
    #[default]
    Sum,
    Mean,
}

fn default_axis() -> Axis {
    Axis::X
}

/// Declarative architecture description.
///
/// In files, `groups` lists 1-based feature numbers (`[[1, 2], [3, 4]]`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub architecture: Architecture,
    pub n_features: usize,
    /// Encoding prefactors per feature, one entry per repetition.
    pub prefactors: Vec<Vec<f64>>,
    /// Partition of 0-based feature indices into mixed-frequency groups.
    #[serde(with = "one_based_groups")]
    pub groups: Vec<Vec<usize>>,
    pub blocks_per_layer: usize,
    #[serde(default = "default_axis")]
    pub encoding_axis: Axis,
    #[serde(default)]
    pub output: OutputCombination,
    /// Serial only: explicit qubit for each feature (default: qubit = feature index).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feature_qubits: Option<Vec<usize>>,
}

mod one_based_groups {
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(groups: &[Vec<usize>], s: S) -> Result<S::Ok, S::Error> {
        let shifted: Vec<Vec<usize>> = groups.iter().map(|g| g.iter().map(|i| i + 1).collect()).collect();
        serde::Serialize::serialize(&shifted, s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<usize>>, D::Error> {
        let raw = Vec::<Vec<usize>>::deserialize(d)?;
        raw.into_iter()
            .map(|g| {
                g.into_iter()
                    .map(|i| i.checked_sub(1).ok_or_else(|| D::Error::custom("feature numbers start at 1")))
                    .collect()
            })
            .collect()
    }
}

impl ModelConfig {
    pub fn parallel(prefactors: Vec<Vec<f64>>, groups: Vec<Vec<usize>>, blocks_per_layer: usize) -> Self {
        Self::new(Architecture::Parallel, prefactors, groups, blocks_per_layer)
    }

    pub fn serial(prefactors: Vec<Vec<f64>>, groups: Vec<Vec<usize>>, blocks_per_layer: usize) -> Self {
        Self::new(Architecture::Serial, prefactors, groups, blocks_per_layer)
    }

    fn new(
        architecture: Architecture,
        prefactors: Vec<Vec<f64>>,
        groups: Vec<Vec<usize>>,
        blocks_per_layer: usize,
    ) -> Self {
        ModelConfig {
            architecture,
            n_features: prefactors.len(),
            prefactors,
            groups,
            blocks_per_layer,
            encoding_axis: Axis::X,
            output: OutputCombination::Sum,
            feature_qubits: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_features == 0 {
            return Err(Error::config("model needs at least one feature"));
        }
        if self.prefactors.len() != self.n_features {
            return Err(Error::config(format!(
                "{} prefactor lists for {} features",
                self.prefactors.len(),
                self.n_features
            )));
        }
        for (f, ps) in self.prefactors.iter().enumerate() {
            if ps.is_empty() {
                return Err(Error::config(format!("feature {} has no prefactors", f + 1)));
            }
            if let Some(p) = ps.iter().find(|p| !p.is_finite() || **p <= 0.0) {
                return Err(Error::config(format!("feature {} prefactor {p} must be > 0", f + 1)));
            }
        }
        validate_partition(&self.groups, self.n_features)?;
        if self.blocks_per_layer == 0 {
            return Err(Error::config("blocks_per_layer must be at least 1"));
        }
        if let Some(fq) = &self.feature_qubits {
            if self.architecture != Architecture::Serial {
                return Err(Error::config("feature_qubits applies to serial architectures only"));
            }
            if fq.len() != self.n_features {
                return Err(Error::config("feature_qubits needs one qubit per feature"));
            }
            let mut owner = vec![None; self.n_features];
            for (f, &q) in fq.iter().enumerate() {
                if q >= self.n_features {
                    return Err(Error::config(format!("qubit {q} out of range for {} features", self.n_features)));
                }
                if let Some(other) = owner[q].replace(f) {
                    return Err(Error::config(format!(
                        "qubit {q} would host prefactors of feature {} and feature {}",
                        other + 1,
                        f + 1
                    )));
                }
            }
        }
        Ok(())
    }

    /// Number of encoding layers `L`; the circuit has `L + 1` ansatz layers.
    pub fn encoding_layers(&self) -> usize {
        match self.architecture {
            Architecture::Parallel => 1,
            Architecture::Serial => self.prefactors.iter().map(Vec::len).max().unwrap_or(0),
        }
    }

    fn sorted_prefactors(&self, f: usize) -> Vec<f64> {
        let mut ps = self.prefactors[f].clone();
        ps.sort_by(f64::total_cmp);
        ps
    }

    /// Qubits carrying each feature's encodings.
    fn feature_qubit_map(&self) -> Vec<Vec<usize>> {
        match self.architecture {
            Architecture::Parallel => {
                let mut next = 0;
                self.prefactors
                    .iter()
                    .map(|ps| {
                        let qs = (next..next + ps.len()).collect();
                        next += ps.len();
                        qs
                    })
                    .collect()
            }
            Architecture::Serial => (0..self.n_features)
                .map(|f| vec![self.feature_qubits.as_ref().map_or(f, |fq| fq[f])])
                .collect(),
        }
    }

    /// The model's declared spectrum: per-feature spectra under its groups.
    pub fn spectrum(&self) -> Result<MixedSpectrum> {
        self.validate()?;
        let dims = self
            .prefactors
            .iter()
            .map(|ps| spectrum_from_prefactors(ps))
            .collect::<Result<Vec<_>>>()?;
        MixedSpectrum::new(dims, self.groups.clone())
    }
}

/// Qubit count without compiling.
pub fn qubit_count(config: &ModelConfig) -> usize {
    match config.architecture {
        Architecture::Parallel => config.prefactors.iter().map(Vec::len).sum(),
        Architecture::Serial => config.n_features,
    }
}

/// Trainable parameter count without compiling: `(L+1) · B · 3 · n_qubits`.
pub fn param_count(config: &ModelConfig) -> usize {
    (config.encoding_layers() + 1) * config.blocks_per_layer * 3 * qubit_count(config)
}

/// Parameter count against the size of the model's mixed spectrum.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SufficiencyReport {
    pub n_params: usize,
    pub spectrum_cardinality: u128,
    pub sufficient: bool,
}

/// Checks `n_params ≥ |Ω|` for the model's grouped mixed spectrum.
pub fn parameter_sufficiency(config: &ModelConfig) -> Result<SufficiencyReport> {
    let card = config.spectrum()?.cardinality().total;
    let n_params = param_count(config);
    Ok(SufficiencyReport { n_params, spectrum_cardinality: card, sufficient: n_params as u128 >= card })
}

/// An entanglement-isolated part of a circuit, simulated on its own register.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    /// Global qubit indices, ascending; local qubit `i` is `qubits[i]`.
    pub qubits: Vec<usize>,
    pub n_qubits: usize,
    /// Gates with local qubit indices, in circuit order.
    pub gates: Vec<Gate>,
    /// Measured qubits, local indices.
    pub measured: Vec<usize>,
    /// Features encoded inside the block, ascending.
    pub features: Vec<usize>,
}

/// A compiled circuit: immutable gate list with parameter slots.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamCircuit {
    n_qubits: usize,
    n_features: usize,
    n_params: usize,
    gates: Vec<Gate>,
    measured: Vec<usize>,
    output_scale: f64,
    spectrum: MixedSpectrum,
    blocks: Vec<Block>,
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

fn union(parent: &mut [usize], a: usize, b: usize) {
    let (ra, rb) = (find(parent, a), find(parent, b));
    if ra != rb {
        parent[ra.max(rb)] = ra.min(rb);
    }
}

impl ParamCircuit {
    /// Validates a gate list and derives its block structure and spectrum.
    pub fn new(
        n_qubits: usize,
        n_features: usize,
        n_params: usize,
        gates: Vec<Gate>,
        measured: Vec<usize>,
    ) -> Result<Self> {
        if n_qubits == 0 || n_qubits > 26 {
            return Err(Error::config(format!("{n_qubits} qubits is outside the supported range 1..=26")));
        }
        for gate in &gates {
            for q in gate.qubits() {
                if q >= n_qubits {
                    return Err(Error::config(format!("gate {gate:?} touches qubit {q} of {n_qubits}")));
                }
            }
            if let Gate::Cnot { control, target } = *gate {
                if control == target {
                    return Err(Error::config("CNOT control and target coincide"));
                }
            }
            if let Some(s) = gate.param_slots().into_iter().find(|&s| s >= n_params) {
                return Err(Error::config(format!("gate {gate:?} binds slot {s} of {n_params}")));
            }
            if let Gate::Rotation { angle: Angle::Feature { index, prefactor }, .. } = *gate {
                if index >= n_features {
                    return Err(Error::config(format!("encoding binds feature {index} of {n_features}")));
                }
                if prefactor == 0.0 || !prefactor.is_finite() {
                    return Err(Error::config("encoding prefactor must be finite and nonzero"));
                }
            }
            if let Gate::Rotation { angle: Angle::Fixed(v), .. } = *gate {
                if !v.is_finite() {
                    return Err(Error::config("fixed angle must be finite"));
                }
            }
        }
        if measured.is_empty() {
            return Err(Error::config("circuit needs at least one measured qubit"));
        }
        let mut seen = vec![false; n_qubits];
        for &q in &measured {
            if q >= n_qubits || std::mem::replace(&mut seen[q], true) {
                return Err(Error::config(format!("measured qubit {q} invalid or repeated")));
            }
        }

        let mut parent: Vec<usize> = (0..n_qubits).collect();
        for gate in &gates {
            if let Gate::Cnot { control, target } = *gate {
                union(&mut parent, control, target);
            }
        }
        let mut roots: Vec<usize> = measured.iter().map(|&q| find(&mut parent, q)).collect();
        roots.sort_unstable();
        roots.dedup();
        let blocks: Vec<Block> = roots
            .into_iter()
            .map(|root| {
                let qubits: Vec<usize> = (0..n_qubits).filter(|&q| find(&mut parent, q) == root).collect();
                let local = |q: usize| qubits.binary_search(&q).expect("qubit in block");
                let block_gates: Vec<Gate> = gates
                    .iter()
                    .filter(|g| qubits.binary_search(&g.qubits()[0]).is_ok())
                    .map(|g| g.with_qubits(local))
                    .collect();
                let mut features: Vec<usize> = block_gates
                    .iter()
                    .filter_map(|g| match g {
                        Gate::Rotation { angle: Angle::Feature { index, .. }, .. } => Some(*index),
                        _ => None,
                    })
                    .collect();
                features.sort_unstable();
                features.dedup();
                let block_measured = measured.iter().filter(|q| qubits.contains(q)).map(|&q| local(q)).collect();
                Block { n_qubits: qubits.len(), measured: block_measured, gates: block_gates, features, qubits }
            })
            .collect();

        let spectrum = derive_spectrum(n_features, &blocks)?;
        Ok(ParamCircuit { n_qubits, n_features, n_params, gates, measured, output_scale: 1.0, spectrum, blocks })
    }

    /// Multiplies the model output by `scale` (e.g. `1/g` for a mean over groups).
    pub fn with_output_scale(mut self, scale: f64) -> Self {
        self.output_scale = scale;
        self
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn measured(&self) -> &[usize] {
        &self.measured
    }

    pub fn output_scale(&self) -> f64 {
        self.output_scale
    }

    /// Frequency spectrum implied by the encoding gates and block structure.
    pub fn spectrum(&self) -> &MixedSpectrum {
        &self.spectrum
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// Largest output magnitude: number of measured qubits times the output scale.
    pub fn output_bound(&self) -> f64 {
        self.measured.len() as f64 * self.output_scale.abs()
    }
}

/// Spectrum per feature from all its prefactors; features sharing a block are mixed.
fn derive_spectrum(n_features: usize, blocks: &[Block]) -> Result<MixedSpectrum> {
    let mut prefactors: Vec<Vec<f64>> = vec![Vec::new(); n_features];
    let mut parent: Vec<usize> = (0..n_features).collect();
    for block in blocks {
        for g in &block.gates {
            if let Gate::Rotation { angle: Angle::Feature { index, prefactor }, .. } = *g {
                prefactors[index].push(prefactor.abs());
            }
        }
        for w in block.features.windows(2) {
            union(&mut parent, w[0], w[1]);
        }
    }
    let dims = prefactors
        .iter()
        .map(|ps| if ps.is_empty() { Ok(Spectrum1D::from_values(vec![0.0])) } else { spectrum_from_prefactors(ps) })
        .collect::<Result<Vec<_>>>()?;
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut root_of_group: Vec<usize> = Vec::new();
    for f in 0..n_features {
        let r = find(&mut parent, f);
        match root_of_group.iter().position(|&x| x == r) {
            Some(i) => groups[i].push(f),
            None => {
                root_of_group.push(r);
                groups.push(vec![f]);
            }
        }
    }
    MixedSpectrum::new(dims, groups)
}

/// Compiles a configuration into its gate sequence.
pub fn build_circuit(config: &ModelConfig) -> Result<ParamCircuit> {
    config.validate()?;
    let fq = config.feature_qubit_map();
    let n_qubits = qubit_count(config);
    let group_qubits: Vec<Vec<usize>> = config
        .groups
        .iter()
        .map(|g| {
            let mut qs: Vec<usize> = g.iter().flat_map(|&f| fq[f].iter().copied()).collect();
            qs.sort_unstable();
            qs
        })
        .collect();

    let layers = config.encoding_layers();
    let sorted: Vec<Vec<f64>> = (0..config.n_features).map(|f| config.sorted_prefactors(f)).collect();
    let mut gates = Vec::new();
    let mut slot = 0;
    for layer in 0..=layers {
        for qs in &group_qubits {
            for _ in 0..config.blocks_per_layer {
                let mut prev: Option<usize> = None;
                for &q in qs.iter().rev() {
                    if let Some(lower) = prev {
                        gates.push(Gate::Cnot { control: lower, target: q });
                    }
                    gates.push(Gate::Rot { qubit: q, slot });
                    slot += 3;
                    prev = Some(q);
                }
            }
        }
        if layer == layers {
            break;
        }
        for (f, ps) in sorted.iter().enumerate() {
            match config.architecture {
                Architecture::Parallel => {
                    for (&q, &p) in fq[f].iter().zip(ps) {
                        gates.push(encoding_gate(config.encoding_axis, q, f, p));
                    }
                }
                Architecture::Serial => {
                    if let Some(&p) = ps.get(layer) {
                        gates.push(encoding_gate(config.encoding_axis, fq[f][0], f, p));
                    }
                }
            }
        }
    }
    debug_assert_eq!(slot, param_count(config));

    let measured: Vec<usize> = group_qubits.iter().map(|qs| qs[0]).collect();
    let scale = match config.output {
        OutputCombination::Sum => 1.0,
        OutputCombination::Mean => 1.0 / measured.len() as f64,
    };
    Ok(ParamCircuit::new(n_qubits, config.n_features, slot, gates, measured)?.with_output_scale(scale))
}

fn encoding_gate(axis: Axis, qubit: usize, feature: usize, prefactor: f64) -> Gate {
    Gate::Rotation { axis, qubit, angle: Angle::Feature { index: feature, prefactor } }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::ternary_prefactors;
    use proptest::prelude::*;

    fn selected_2d(b: usize) -> ModelConfig {
        ModelConfig::parallel(vec![vec![10.0, 20.0]; 2], vec![vec![0, 1]], b)
    }

    #[test]
    fn reference_architectures() {
        let c = build_circuit(&selected_2d(10)).unwrap();
        assert_eq!((c.n_qubits(), c.n_params()), (4, 240));

        let sep = ModelConfig::parallel(vec![vec![10.0, 30.0]; 4], vec![vec![0, 1], vec![2, 3]], 3);
        let c = build_circuit(&sep).unwrap();
        assert_eq!((c.n_qubits(), c.n_params()), (8, 144));
        assert_eq!(c.measured(), &[0, 4]);
        assert_eq!(c.blocks().len(), 2);

        let tiny = ModelConfig::parallel(vec![vec![1.0]], vec![vec![0]], 1);
        let c = build_circuit(&tiny).unwrap();
        assert_eq!((c.n_qubits(), c.n_params()), (1, 6));
        assert!(c.gates().iter().all(|g| !g.is_two_qubit()));
    }

    #[test]
    fn closed_form_counts() {
        let dense = ModelConfig::parallel(vec![ternary_prefactors(4).unwrap(); 2], vec![vec![0, 1]], 7);
        assert_eq!(qubit_count(&dense), 8);
        assert_eq!(param_count(&dense), 336);
        let serial_sel = ModelConfig::serial(vec![vec![10.0, 20.0]; 2], vec![vec![0, 1]], 1);
        assert_eq!(qubit_count(&serial_sel), 2);
        assert_eq!(param_count(&serial_sel), 18);
        let serial_4d = ModelConfig::serial(vec![vec![10.0, 30.0]; 4], vec![vec![0, 1], vec![2, 3]], 1);
        assert_eq!(qubit_count(&serial_4d), 4);
    }

    #[test]
    fn sufficiency() {
        let mixed = ModelConfig::parallel(vec![vec![10.0, 30.0]; 4], vec![vec![0, 1, 2, 3]], 3);
        let r = parameter_sufficiency(&mixed).unwrap();
        assert_eq!((r.n_params, r.spectrum_cardinality, r.sufficient), (144, 6561, false));
        let sep = ModelConfig::parallel(vec![vec![10.0, 30.0]; 4], vec![vec![0, 1], vec![2, 3]], 5);
        let r = parameter_sufficiency(&sep).unwrap();
        assert_eq!((r.n_params, r.spectrum_cardinality, r.sufficient), (240, 162, true));
        let one = ModelConfig::parallel(vec![vec![1.0]], vec![vec![0]], 1);
        let r = parameter_sufficiency(&one).unwrap();
        assert_eq!((r.n_params, r.spectrum_cardinality, r.sufficient), (6, 3, true));
    }

    #[test]
    fn block_layout_matches_reference_drawing() {
        // 4 qubits, 2 serial FMs, groups {x1,x2} and {x3,x4} on 2 qubits each.
        let mut cfg = ModelConfig::serial(vec![vec![10.0, 30.0]; 4], vec![vec![0, 1], vec![2, 3]], 1);
        cfg.encoding_axis = Axis::X;
        let c = build_circuit(&cfg).unwrap();
        let first_layer: Vec<Gate> = c.gates()[..6].to_vec();
        assert_eq!(
            first_layer,
            vec![
                Gate::Rot { qubit: 1, slot: 0 },
                Gate::Cnot { control: 1, target: 0 },
                Gate::Rot { qubit: 0, slot: 3 },
                Gate::Rot { qubit: 3, slot: 6 },
                Gate::Cnot { control: 3, target: 2 },
                Gate::Rot { qubit: 2, slot: 9 },
            ]
        );
        assert_eq!(c.measured(), &[0, 2]);
        let encodings: Vec<&Gate> = c.gates().iter().filter(|g| g.is_encoding()).collect();
        assert_eq!(encodings.len(), 8);
    }

    #[test]
    fn config_errors() {
        let mut bad = selected_2d(1);
        bad.groups = vec![vec![0]];
        assert!(matches!(build_circuit(&bad), Err(Error::Config(_))));
        let mut bad = selected_2d(0);
        assert!(build_circuit(&bad).is_err());
        bad.blocks_per_layer = 1;
        bad.prefactors[1] = vec![];
        assert!(build_circuit(&bad).is_err());
        let mut serial = ModelConfig::serial(vec![vec![1.0, 3.0]; 3], vec![vec![0, 1, 2]], 1);
        serial.feature_qubits = Some(vec![0, 2, 2]);
        let err = build_circuit(&serial).unwrap_err();
        assert!(err.to_string().contains("would host prefactors"), "{err}");
        serial.feature_qubits = Some(vec![2, 0, 1]);
        let c = build_circuit(&serial).unwrap();
        assert_eq!(c.n_qubits(), 3);
        let mut par = selected_2d(1);
        par.feature_qubits = Some(vec![0, 1]);
        assert!(build_circuit(&par).is_err());
    }

    #[test]
    fn mean_output_scale() {
        let mut cfg = ModelConfig::parallel(vec![vec![10.0, 30.0]; 4], vec![vec![0, 1], vec![2, 3]], 1);
        cfg.output = OutputCombination::Mean;
        let c = build_circuit(&cfg).unwrap();
        assert_eq!(c.output_scale(), 0.5);
        assert_eq!(c.output_bound(), 1.0);
    }

    #[test]
    fn config_groups_are_one_based_in_files() {
        let cfg = ModelConfig::parallel(vec![vec![10.0, 30.0]; 4], vec![vec![0, 1], vec![2, 3]], 3);
        let text = toml::to_string(&cfg).unwrap();
        assert!(text.contains("groups = [[1, 2], [3, 4]]"), "{text}");
        let back: ModelConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        assert!(toml::from_str::<ModelConfig>(&text.replace("[[1, 2]", "[[0, 2]")).is_err());
        assert!(toml::from_str::<ModelConfig>(&format!("{text}\ntypo = 1\n")).is_err());
    }

    fn arb_config() -> impl Strategy<Value = ModelConfig> {
        (1usize..=3, 1usize..=3, 1usize..=3, any::<bool>(), any::<bool>()).prop_map(|(d, r, b, serial, split)| {
            let prefactors: Vec<Vec<f64>> = (0..d).map(|f| (0..r).map(|k| (f + 3 * k + 1) as f64).collect()).collect();
            let groups = if split && d > 1 { vec![vec![0], (1..d).collect()] } else { vec![(0..d).collect()] };
            if serial {
                ModelConfig::serial(prefactors, groups, b)
            } else {
                ModelConfig::parallel(prefactors, groups, b)
            }
        })
    }

    proptest! {
        #[test]
        fn compiled_counts_match_closed_form(cfg in arb_config()) {
            let c = build_circuit(&cfg).unwrap();
            prop_assert_eq!(c.n_params(), param_count(&cfg));
            prop_assert_eq!(c.n_qubits(), qubit_count(&cfg));
            prop_assert_eq!(c.spectrum(), &cfg.spectrum().unwrap());
        }

        #[test]
        fn no_cnot_crosses_groups(cfg in arb_config()) {
            let c = build_circuit(&cfg).unwrap();
            let fq = cfg.feature_qubit_map();
            let group_of_qubit = |q: usize| cfg.groups.iter().position(|g| g.iter().any(|&f| fq[f].contains(&q))).unwrap();
            for g in c.gates() {
                if let Gate::Cnot { control, target } = *g {
                    prop_assert_eq!(group_of_qubit(control), group_of_qubit(target));
                }
            }
            prop_assert_eq!(c.blocks().len(), cfg.groups.len());
        }

        #[test]
        fn serial_and_parallel_share_spectra(cfg in arb_config()) {
            let mut other = cfg.clone();
            other.architecture = match cfg.architecture {
                Architecture::Serial => Architecture::Parallel,
                Architecture::Parallel => Architecture::Serial,
            };
            let a = build_circuit(&cfg).unwrap();
            let b = build_circuit(&other).unwrap();
            prop_assert_eq!(a.spectrum(), b.spectrum());
        }
    }
}
