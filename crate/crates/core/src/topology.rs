//! Network structure: unit roles and trainable connectivity.
//!
//! Units are indexed so that inputs occupy `[0, n_inputs)`, hidden units
//! `[n_inputs, n_inputs + n_hidden)` and outputs the final `n_outputs`
//! indices. This convention is fixed so checkpoints stay portable.
//!
//! Couplings are stored once per unordered pair `{i, j}` with `i < j`.
//! Input-input pairs are excluded entirely: with inputs clamped they only add
//! a constant to the energy, so they carry no trainable information.
//! Self-couplings are likewise excluded (`cos 0` is a constant).

use thiserror::Error;

/// Role of a unit in the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnitRole {
    Input,
    Hidden,
    Output,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TopologyError {
    #[error("invalid topology: {0}")]
    InvalidConfig(String),
}

/// Immutable description of a network: unit counts, role assignment and the
/// set of trainable couplings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkTopology {
    n_inputs: usize,
    n_hidden: usize,
    n_outputs: usize,
    /// Unordered coupled pairs (i, j) with i < j, sorted lexicographically.
    pairs: Vec<(u32, u32)>,
    /// Layer sizes when built with [`NetworkTopology::layered`]; `None` for
    /// all-to-all connectivity.
    layer_sizes: Option<Vec<usize>>,
}

impl NetworkTopology {
    /// All-to-all connectivity: every unordered pair except input-input pairs.
    pub fn all_to_all(
        n_inputs: usize,
        n_hidden: usize,
        n_outputs: usize,
    ) -> Result<Self, TopologyError> {
        if n_inputs == 0 || n_outputs == 0 {
            return Err(TopologyError::InvalidConfig(
                "all-to-all topology needs at least one input and one output unit".into(),
            ));
        }
        let n = n_inputs + n_hidden + n_outputs;
        let mut pairs = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if j >= n_inputs {
                    pairs.push((i as u32, j as u32));
                }
            }
        }
        Ok(Self {
            n_inputs,
            n_hidden,
            n_outputs,
            pairs,
            layer_sizes: None,
        })
    }

    /// Layered connectivity: couplings exactly between consecutive layers.
    /// Layer 0 holds the inputs, the last layer the outputs.
    pub fn layered(layer_sizes: &[usize]) -> Result<Self, TopologyError> {
        if layer_sizes.len() < 2 {
            return Err(TopologyError::InvalidConfig(
                "layered topology needs at least two layers".into(),
            ));
        }
        if layer_sizes.iter().any(|&s| s == 0) {
            return Err(TopologyError::InvalidConfig(
                "every layer needs at least one unit".into(),
            ));
        }
        let n_inputs = layer_sizes[0];
        let n_outputs = *layer_sizes.last().unwrap();
        let n: usize = layer_sizes.iter().sum();
        let n_hidden = n - n_inputs - n_outputs;

        let mut pairs = Vec::new();
        let mut layer_start = 0usize;
        for w in layer_sizes.windows(2) {
            let (a, b) = (w[0], w[1]);
            for i in layer_start..layer_start + a {
                for j in layer_start + a..layer_start + a + b {
                    pairs.push((i as u32, j as u32));
                }
            }
            layer_start += a;
        }
        pairs.sort_unstable();
        Ok(Self {
            n_inputs,
            n_hidden,
            n_outputs,
            pairs,
            layer_sizes: Some(layer_sizes.to_vec()),
        })
    }

    pub fn n_units(&self) -> usize {
        self.n_inputs + self.n_hidden + self.n_outputs
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn n_hidden(&self) -> usize {
        self.n_hidden
    }

    pub fn n_outputs(&self) -> usize {
        self.n_outputs
    }

    /// Units that carry bias parameters and evolve during relaxation.
    pub fn n_free(&self) -> usize {
        self.n_hidden + self.n_outputs
    }

    /// Index of the first output unit.
    pub fn output_start(&self) -> usize {
        self.n_inputs + self.n_hidden
    }

    pub fn role(&self, unit: usize) -> UnitRole {
        assert!(unit < self.n_units(), "unit index out of range");
        if unit < self.n_inputs {
            UnitRole::Input
        } else if unit < self.output_start() {
            UnitRole::Hidden
        } else {
            UnitRole::Output
        }
    }

    pub fn roles(&self) -> impl Iterator<Item = UnitRole> + '_ {
        (0..self.n_units()).map(|u| self.role(u))
    }

    /// Coupled pairs (i, j) with i < j in canonical (sorted) order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.pairs.iter().map(|&(i, j)| (i as usize, j as usize))
    }

    pub fn n_pairs(&self) -> usize {
        self.pairs.len()
    }

    pub(crate) fn pairs_raw(&self) -> &[(u32, u32)] {
        &self.pairs
    }

    /// Canonical index of pair {i, j} in the weight vector, if coupled.
    pub fn pair_index(&self, i: usize, j: usize) -> Option<usize> {
        if i == j {
            return None;
        }
        let key = (i.min(j) as u32, i.max(j) as u32);
        self.pairs.binary_search(&key).ok()
    }

    pub fn layer_sizes(&self) -> Option<&[usize]> {
        self.layer_sizes.as_deref()
    }

    /// Layer index of a unit for layered topologies.
    pub fn layer_of(&self, unit: usize) -> Option<usize> {
        let sizes = self.layer_sizes.as_ref()?;
        let mut start = 0usize;
        for (l, &s) in sizes.iter().enumerate() {
            if unit < start + s {
                return Some(l);
            }
            start += s;
        }
        None
    }

    /// Total number of trainable parameters: one weight per coupled pair plus
    /// a (strength, angle) bias pair per non-input unit.
    pub fn parameter_count(&self) -> usize {
        self.pairs.len() + 2 * self.n_free()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_to_all_parameter_counts_match_reference_table() {
        // (n_inputs, n_hidden, n_outputs) -> expected trainable parameters
        let cases = [
            ((64, 11, 10), 1596),
            ((64, 65, 10), 7725),
            ((64, 111, 10), 15246),
            ((64, 148, 10), 22831),
        ];
        for ((n_in, n_h, n_out), expected) in cases {
            let topo = NetworkTopology::all_to_all(n_in, n_h, n_out).unwrap();
            let n = n_in + n_h + n_out;
            let formula = n * (n - 1) / 2 - n_in * (n_in - 1) / 2 + 2 * (n - n_in);
            assert_eq!(topo.parameter_count(), formula);
            assert_eq!(topo.parameter_count(), expected, "units={n}");
        }
    }

    #[test]
    fn layered_parameter_counts_match_reference_table() {
        let cases: [(&[usize], usize); 5] = [
            (&[64, 20, 10], 1540),
            (&[64, 100, 10], 7620),
            (&[64, 200, 10], 15220),
            (&[64, 300, 10], 22820),
            (&[2, 2], 8),
        ];
        for (sizes, expected) in cases {
            let topo = NetworkTopology::layered(sizes).unwrap();
            assert_eq!(topo.parameter_count(), expected, "layers={sizes:?}");
        }
    }

    #[test]
    fn smallest_all_to_all_network() {
        let topo = NetworkTopology::all_to_all(1, 0, 1).unwrap();
        assert_eq!(topo.n_pairs(), 1);
        assert_eq!(topo.parameter_count(), 3);
    }

    #[test]
    fn constructors_reject_degenerate_configs() {
        assert!(NetworkTopology::all_to_all(0, 3, 1).is_err());
        assert!(NetworkTopology::all_to_all(2, 3, 0).is_err());
        assert!(NetworkTopology::layered(&[5]).is_err());
        assert!(NetworkTopology::layered(&[]).is_err());
        assert!(NetworkTopology::layered(&[3, 0, 2]).is_err());
    }

    #[test]
    fn no_self_or_input_input_pairs() {
        let topo = NetworkTopology::all_to_all(3, 2, 2).unwrap();
        for (i, j) in topo.pairs() {
            assert!(i < j);
            assert!(!(i < 3 && j < 3), "input-input pair {i},{j}");
        }
        // 7 units: C(7,2) = 21 minus C(3,2) = 3 input-input pairs
        assert_eq!(topo.n_pairs(), 18);
    }

    #[test]
    fn layered_pairs_connect_consecutive_layers_only() {
        let topo = NetworkTopology::layered(&[2, 3, 2]).unwrap();
        assert_eq!(topo.n_pairs(), 2 * 3 + 3 * 2);
        for (i, j) in topo.pairs() {
            let (li, lj) = (topo.layer_of(i).unwrap(), topo.layer_of(j).unwrap());
            assert_eq!(lj, li + 1, "pair {i},{j} spans layers {li},{lj}");
        }
    }

    #[test]
    fn roles_partition_units() {
        let topo = NetworkTopology::all_to_all(2, 2, 1).unwrap();
        let roles: Vec<_> = topo.roles().collect();
        assert_eq!(
            roles,
            vec![
                UnitRole::Input,
                UnitRole::Input,
                UnitRole::Hidden,
                UnitRole::Hidden,
                UnitRole::Output
            ]
        );
    }

    #[test]
    fn pair_index_is_symmetric() {
        let topo = NetworkTopology::all_to_all(2, 2, 1).unwrap();
        for (i, j) in topo.pairs() {
            assert_eq!(topo.pair_index(i, j), topo.pair_index(j, i));
        }
        assert_eq!(topo.pair_index(0, 1), None); // input-input
        assert_eq!(topo.pair_index(3, 3), None); // self
    }
}
