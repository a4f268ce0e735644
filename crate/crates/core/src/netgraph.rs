//! Network topologies and their programmed coupling matrices.
//!
//! Hypercube nodes are indexed by the integer value of their bit-string
//! label, bit 0 being the least significant. A subcube split detunes a set of
//! "channel bits"; the diagonal of node `v` is `(Δω/2)·Σ_j ±1` over channel
//! bits `j`, with `+1` when bit `j` of `v` is 0 and `-1` when it is 1. Any
//! other convention differs by a global frequency offset, which only adds a
//! global phase to the dynamics.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Largest hypercube dimension accepted by [`build_hypercube`].
pub const MAX_HYPERCUBE_DIM: u32 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TopologyKind {
    Hypercube { dimension: u32 },
    Complete,
    Custom,
}

/// An undirected simple graph on nodes `0..node_count`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkTopology {
    kind: TopologyKind,
    nodes: usize,
    // sorted, each pair (u, v) with u < v
    edges: Vec<(usize, usize)>,
}

impl NetworkTopology {
    pub fn hypercube(dimension: u32) -> Result<Self> {
        if !(1..=MAX_HYPERCUBE_DIM).contains(&dimension) {
            return Err(Error::InvalidArgument(format!(
                "hypercube dimension must lie in 1..={MAX_HYPERCUBE_DIM}, got {dimension}"
            )));
        }
        let nodes = 1usize << dimension;
        let mut edges = Vec::with_capacity(dimension as usize * nodes / 2);
        for u in 0..nodes {
            for j in 0..dimension {
                let v = u ^ (1 << j);
                if u < v {
                    edges.push((u, v));
                }
            }
        }
        edges.sort_unstable();
        Ok(Self {
            kind: TopologyKind::Hypercube { dimension },
            nodes,
            edges,
        })
    }

    pub fn complete(nodes: usize) -> Result<Self> {
        if nodes < 2 {
            return Err(Error::InvalidArgument(format!(
                "a complete network needs at least 2 nodes, got {nodes}"
            )));
        }
        let mut edges = Vec::with_capacity(nodes * (nodes - 1) / 2);
        for u in 0..nodes {
            for v in u + 1..nodes {
                edges.push((u, v));
            }
        }
        Ok(Self {
            kind: TopologyKind::Complete,
            nodes,
            edges,
        })
    }

    /// A graph from an explicit edge list. Self-loops, duplicates (in either
    /// orientation) and out-of-range endpoints are rejected.
    pub fn custom<I>(nodes: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        if nodes == 0 {
            return Err(Error::InvalidArgument("a network needs at least one node".into()));
        }
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            for x in [a, b] {
                if x >= nodes {
                    return Err(Error::NodeOutOfRange { index: x, nodes });
                }
            }
            if a == b {
                return Err(Error::InvalidArgument(format!("self-loop at node {a}")));
            }
            let e = (a.min(b), a.max(b));
            if !set.insert(e) {
                return Err(Error::InvalidArgument(format!("duplicate edge {{{}, {}}}", e.0, e.1)));
            }
        }
        Ok(Self {
            kind: TopologyKind::Custom,
            nodes,
            edges: set.into_iter().collect(),
        })
    }

    pub fn kind(&self) -> TopologyKind {
        self.kind
    }

    pub fn node_count(&self) -> usize {
        self.nodes
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn dimension(&self) -> Option<u32> {
        match self.kind {
            TopologyKind::Hypercube { dimension } => Some(dimension),
            _ => None,
        }
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edges.binary_search(&(u.min(v), u.max(v))).is_ok()
    }

    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .edges
            .iter()
            .filter_map(|&(a, b)| match (a == v, b == v) {
                (true, _) => Some(b),
                (_, true) => Some(a),
                _ => None,
            })
            .collect();
        out.sort_unstable();
        out
    }

    /// Bit-string label of a hypercube node, most significant bit first.
    pub fn label(&self, v: usize) -> Option<String> {
        let d = self.dimension()?;
        if v >= self.nodes {
            return None;
        }
        Some((0..d).rev().map(|j| if (v >> j) & 1 == 1 { '1' } else { '0' }).collect())
    }
}

pub fn build_hypercube(dimension: u32) -> Result<NetworkTopology> {
    NetworkTopology::hypercube(dimension)
}

pub fn build_complete(nodes: usize) -> Result<NetworkTopology> {
    NetworkTopology::complete(nodes)
}

/// Real symmetric matrix of node frequencies (diagonal) and couplings
/// (off-diagonal), in rad/s.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl CouplingMatrix {
    /// Uniform coupling on every edge of `topology`, with the given diagonal.
    pub fn from_topology(topology: &NetworkTopology, frequencies: &[f64], coupling: f64) -> Result<Self> {
        let n = topology.node_count();
        if frequencies.len() != n {
            return Err(Error::InvalidArgument(format!(
                "{} frequencies given for {n} nodes",
                frequencies.len()
            )));
        }
        let mut entries = vec![0.0; n * n];
        for (v, &w) in frequencies.iter().enumerate() {
            entries[v * n + v] = w;
        }
        for &(u, v) in topology.edges() {
            entries[u * n + v] = coupling;
            entries[v * n + u] = coupling;
        }
        Ok(Self { n, entries })
    }

    /// Raw row-major entries; symmetry is not checked here (see
    /// [`crate::modevo::evolve_modes`]).
    pub fn from_row_major(n: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::InvalidArgument(format!(
                "{} entries cannot form a {n}x{n} matrix",
                entries.len()
            )));
        }
        Ok(Self { n, entries })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.entries[u * self.n + v]
    }

    pub fn frequency(&self, v: usize) -> f64 {
        self.get(v, v)
    }

    pub fn as_row_major(&self) -> &[f64] {
        &self.entries
    }

    /// Bitwise symmetry.
    pub fn is_symmetric(&self) -> bool {
        self.first_asymmetry().is_none()
    }

    pub(crate) fn first_asymmetry(&self) -> Option<(usize, usize, f64)> {
        let n = self.n;
        for i in 0..n {
            for j in i + 1..n {
                let (a, b) = (self.entries[i * n + j], self.entries[j * n + i]);
                if a.to_bits() != b.to_bits() && a != b {
                    return Some((i, j, (a - b).abs()));
                }
            }
        }
        None
    }

    pub fn commutator_max(&self, other: &CouplingMatrix) -> f64 {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += self.get(i, k) * other.get(k, j) - other.get(i, k) * self.get(k, j);
                }
                worst = worst.max(acc.abs());
            }
        }
        worst
    }
}

/// Programming of a d-cube into `2^m` subcube channels by detuning the `m`
/// channel bits by `Δω`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubcubeSplit {
    dimension: u32,
    channel_bits: Vec<u32>,
    detuning: f64,
    coupling: f64,
}

impl SubcubeSplit {
    /// `detuning` is ignored when `channel_bits` is empty.
    pub fn new(dimension: u32, channel_bits: &[u32], detuning: f64, coupling: f64) -> Result<Self> {
        if !(1..=MAX_HYPERCUBE_DIM).contains(&dimension) {
            return Err(Error::InvalidArgument(format!(
                "hypercube dimension must lie in 1..={MAX_HYPERCUBE_DIM}, got {dimension}"
            )));
        }
        let mut seen = 0u32;
        for &b in channel_bits {
            if b >= dimension {
                return Err(Error::InvalidArgument(format!(
                    "channel bit {b} outside 0..{dimension}"
                )));
            }
            if seen & (1 << b) != 0 {
                return Err(Error::InvalidArgument(format!("channel bit {b} repeated")));
            }
            seen |= 1 << b;
        }
        if !(coupling.is_finite() && coupling > 0.0) {
            return Err(Error::InvalidArgument(format!("coupling must be positive, got {coupling}")));
        }
        if !channel_bits.is_empty() && !(detuning.is_finite() && detuning > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "detuning must be positive and finite when channel bits are set, got {detuning}"
            )));
        }
        Ok(Self {
            dimension,
            channel_bits: channel_bits.to_vec(),
            detuning,
            coupling,
        })
    }

    /// Split with detuning chosen so that `2Ω0/Δω = eta`.
    pub fn with_eta(dimension: u32, channel_bits: &[u32], eta: f64, coupling: f64) -> Result<Self> {
        if !(eta >= 0.0) {
            return Err(Error::InvalidArgument(format!("eta must be non-negative, got {eta}")));
        }
        Self::new(dimension, channel_bits, 2.0 * coupling / eta, coupling)
    }

    /// The conventional split with the top `m` bits as channel bits.
    pub fn leading(dimension: u32, m: u32, detuning: f64, coupling: f64) -> Result<Self> {
        if m > dimension {
            return Err(Error::InvalidArgument(format!("m = {m} exceeds dimension {dimension}")));
        }
        let bits: Vec<u32> = (dimension - m..dimension).collect();
        Self::new(dimension, &bits, detuning, coupling)
    }

    pub fn dimension(&self) -> u32 {
        self.dimension
    }

    pub fn node_count(&self) -> usize {
        1 << self.dimension
    }

    pub fn channel_bits(&self) -> &[u32] {
        &self.channel_bits
    }

    pub fn channel_count(&self) -> u32 {
        self.channel_bits.len() as u32
    }

    pub fn detuning(&self) -> f64 {
        self.detuning
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn is_channel_bit(&self, bit: u32) -> bool {
        self.channel_bits.contains(&bit)
    }

    pub fn channel_mask(&self) -> usize {
        self.channel_bits.iter().fold(0, |acc, &b| acc | (1 << b))
    }

    pub fn transfer_mask(&self) -> usize {
        (self.node_count() - 1) & !self.channel_mask()
    }

    /// `η = 2Ω0/Δω`; `None` when there are no channel bits.
    pub fn eta(&self) -> Option<f64> {
        if self.channel_bits.is_empty() {
            None
        } else {
            Some(2.0 * self.coupling / self.detuning)
        }
    }

    /// The corner-to-corner transfer time `π/(2Ω0)`.
    pub fn transfer_time(&self) -> f64 {
        crate::transfer_time(self.coupling)
    }

    /// Channel-bit part of a node label: nodes with equal values share a
    /// subcube.
    pub fn subcube_of(&self, v: usize) -> usize {
        v & self.channel_mask()
    }

    /// Antipode of `v` within its subcube.
    pub fn antipode(&self, v: usize) -> usize {
        v ^ self.transfer_mask()
    }

    pub fn frequency(&self, v: usize) -> f64 {
        if self.channel_bits.is_empty() {
            return 0.0;
        }
        let half = 0.5 * self.detuning;
        self.channel_bits
            .iter()
            .map(|&j| if (v >> j) & 1 == 0 { half } else { -half })
            .sum()
    }
}

/// The coupling matrix `Ω0 Σ_j X^(j) + (Δω/2) Σ_{j ∈ channel bits} Z^(j)`.
pub fn program_subcube_split(split: &SubcubeSplit) -> Result<CouplingMatrix> {
    let topology = NetworkTopology::hypercube(split.dimension)?;
    let frequencies: Vec<f64> = (0..split.node_count()).map(|v| split.frequency(v)).collect();
    CouplingMatrix::from_topology(&topology, &frequencies, split.coupling)
}

/// The `d` mutually commuting summands of [`program_subcube_split`], one per
/// bit position: `Ω0 X^(j)`, plus `(Δω/2) Z^(j)` for channel bits.
pub fn subcube_terms(split: &SubcubeSplit) -> Vec<CouplingMatrix> {
    let n = split.node_count();
    let half = 0.5 * split.detuning;
    (0..split.dimension)
        .map(|j| {
            let mut entries = vec![0.0; n * n];
            for v in 0..n {
                entries[v * n + (v ^ (1 << j))] = split.coupling;
                if split.is_channel_bit(j) {
                    entries[v * n + v] = if (v >> j) & 1 == 0 { half } else { -half };
                }
            }
            CouplingMatrix { n, entries }
        })
        .collect()
}

/// A complete network programmed into `N/2` resonant pairs on a frequency
/// ladder: pair `k` sits at `base + k·Δω`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairingProgram {
    nodes: usize,
    matching: Vec<(usize, usize)>,
    detuning: f64,
    coupling: f64,
    base_frequency: f64,
}

impl PairingProgram {
    pub fn new(nodes: usize, matching: &[(usize, usize)], detuning: f64, coupling: f64) -> Result<Self> {
        if nodes < 2 || !nodes.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "pairing needs an even number of at least 2 nodes, got {nodes}"
            )));
        }
        if matching.len() != nodes / 2 {
            return Err(Error::InvalidArgument(format!(
                "perfect matching on {nodes} nodes needs {} pairs, got {}",
                nodes / 2,
                matching.len()
            )));
        }
        let mut seen = vec![false; nodes];
        for &(a, b) in matching {
            for x in [a, b] {
                if x >= nodes {
                    return Err(Error::NodeOutOfRange { index: x, nodes });
                }
                if core::mem::replace(&mut seen[x], true) {
                    return Err(Error::InvalidArgument(format!("node {x} matched twice")));
                }
            }
        }
        if !(coupling.is_finite() && coupling > 0.0) {
            return Err(Error::InvalidArgument(format!("coupling must be positive, got {coupling}")));
        }
        if !(detuning >= 0.0) {
            return Err(Error::InvalidArgument(format!("detuning must be non-negative, got {detuning}")));
        }
        Ok(Self {
            nodes,
            matching: matching.to_vec(),
            detuning,
            coupling,
            base_frequency: 0.0,
        })
    }

    pub fn with_base_frequency(mut self, base: f64) -> Self {
        self.base_frequency = base;
        self
    }

    pub fn node_count(&self) -> usize {
        self.nodes
    }

    pub fn matching(&self) -> &[(usize, usize)] {
        &self.matching
    }

    pub fn detuning(&self) -> f64 {
        self.detuning
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn eta(&self) -> f64 {
        2.0 * self.coupling / self.detuning
    }

    pub fn frequency(&self, v: usize) -> f64 {
        let k = self
            .matching
            .iter()
            .position(|&(a, b)| a == v || b == v)
            .expect("perfect matching covers every node");
        self.base_frequency + k as f64 * self.detuning
    }
}

/// Complete-graph coupling matrix for a pairing program.
pub fn program_pairing(program: &PairingProgram) -> Result<CouplingMatrix> {
    let topology = NetworkTopology::complete(program.nodes)?;
    let frequencies: Vec<f64> = (0..program.nodes).map(|v| program.frequency(v)).collect();
    CouplingMatrix::from_topology(&topology, &frequencies, program.coupling)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hypercube_counts() {
        let q1 = build_hypercube(1).unwrap();
        assert_eq!(q1.node_count(), 2);
        assert_eq!(q1.edges(), &[(0, 1)]);
        let q3 = build_hypercube(3).unwrap();
        assert_eq!((q3.node_count(), q3.edge_count()), (8, 12));
        for d in 1..=8u32 {
            let q = build_hypercube(d).unwrap();
            assert_eq!(q.edge_count(), d as usize * (1 << (d - 1)));
        }
    }

    #[test]
    fn hypercube_adjacency_is_single_bit_flip() {
        let q4 = build_hypercube(4).unwrap();
        assert_eq!(q4.neighbors(0b0101), vec![0b0001, 0b0100, 0b0111, 0b1101]);
        for &(u, v) in q4.edges() {
            assert_eq!((u ^ v).count_ones(), 1);
        }
        assert_eq!(q4.label(0b0101).as_deref(), Some("0101"));
    }

    #[test]
    fn hypercube_dimension_range() {
        assert!(matches!(build_hypercube(0), Err(Error::InvalidArgument(_))));
        assert!(matches!(build_hypercube(21), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn complete_counts() {
        assert_eq!(build_complete(2).unwrap().edge_count(), 1);
        assert_eq!(build_complete(8).unwrap().edge_count(), 28);
        assert_eq!(build_complete(3).unwrap().edges(), &[(0, 1), (0, 2), (1, 2)]);
        assert!(build_complete(1).is_err());
        assert!(build_complete(0).is_err());
    }

    #[test]
    fn custom_rejects_bad_edges() {
        assert!(NetworkTopology::custom(3, [(0, 0)]).is_err());
        assert!(NetworkTopology::custom(3, [(0, 1), (1, 0)]).is_err());
        assert!(matches!(
            NetworkTopology::custom(3, [(0, 3)]),
            Err(Error::NodeOutOfRange { index: 3, nodes: 3 })
        ));
        let g = NetworkTopology::custom(4, [(2, 1), (0, 3)]).unwrap();
        assert_eq!(g.edges(), &[(0, 3), (1, 2)]);
    }

    #[test]
    fn single_bit_split_matrix() {
        let split = SubcubeSplit::new(1, &[0], 3.0, 0.5).unwrap();
        let om = program_subcube_split(&split).unwrap();
        assert_eq!(om.as_row_major(), &[1.5, 0.5, 0.5, -1.5]);
    }

    #[test]
    fn unprogrammed_square() {
        let split = SubcubeSplit::new(2, &[], f64::NAN, 1.0).unwrap();
        let om = program_subcube_split(&split).unwrap();
        for v in 0..4 {
            assert_eq!(om.frequency(v), 0.0);
        }
        let q2 = build_hypercube(2).unwrap();
        for u in 0..4 {
            for v in 0..4 {
                let expect = if q2.has_edge(u, v) { 1.0 } else { 0.0 };
                if u != v {
                    assert_eq!(om.get(u, v), expect);
                }
            }
        }
    }

    #[test]
    fn subcube_nodes_share_frequency() {
        let split = SubcubeSplit::new(3, &[2], 10.0, 1.0).unwrap();
        let om = program_subcube_split(&split).unwrap();
        for v in 0..4 {
            assert_eq!(om.frequency(v), 5.0);
        }
        for v in 4..8 {
            assert_eq!(om.frequency(v), -5.0);
        }
        assert!(om.is_symmetric());
    }

    #[test]
    fn split_validation() {
        assert!(SubcubeSplit::new(3, &[3], 1.0, 1.0).is_err());
        assert!(SubcubeSplit::new(3, &[1, 1], 1.0, 1.0).is_err());
        assert!(SubcubeSplit::new(3, &[1], 0.0, 1.0).is_err());
        assert!(SubcubeSplit::new(3, &[1], f64::INFINITY, 1.0).is_err());
        assert!(SubcubeSplit::new(3, &[1], 1.0, -1.0).is_err());
        let s = SubcubeSplit::new(3, &[], 0.0, 1.0).unwrap();
        assert_eq!(s.eta(), None);
        let s = SubcubeSplit::with_eta(3, &[0, 2], 0.25, 2.0).unwrap();
        assert_eq!(s.detuning(), 16.0);
        assert_eq!(s.eta(), Some(0.25));
        assert_eq!(s.transfer_mask(), 0b010);
        assert_eq!(s.antipode(0b000), 0b010);
    }

    #[test]
    fn terms_commute_and_sum_to_program() {
        for d in 1..=4u32 {
            for mask in 0..(1u32 << d) {
                let bits: Vec<u32> = (0..d).filter(|j| mask & (1 << j) != 0).collect();
                let split = SubcubeSplit::new(d, &bits, 7.0, 1.3).unwrap();
                let terms = subcube_terms(&split);
                for a in &terms {
                    for b in &terms {
                        assert!(a.commutator_max(b) <= 1e-12);
                    }
                }
                let om = program_subcube_split(&split).unwrap();
                let n = split.node_count();
                for i in 0..n {
                    for j in 0..n {
                        let sum: f64 = terms.iter().map(|t| t.get(i, j)).sum();
                        assert!((sum - om.get(i, j)).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn pairing_ladder() {
        let p = PairingProgram::new(2, &[(0, 1)], 4.0, 1.0).unwrap();
        let om = program_pairing(&p).unwrap();
        assert_eq!(om.frequency(0), om.frequency(1));

        let p = PairingProgram::new(4, &[(0, 1), (2, 3)], 4.0, 1.0).unwrap().with_base_frequency(2.0);
        let om = program_pairing(&p).unwrap();
        assert_eq!([om.frequency(0), om.frequency(1)], [2.0, 2.0]);
        assert_eq!([om.frequency(2), om.frequency(3)], [6.0, 6.0]);
        for u in 0..4 {
            for v in 0..4 {
                if u != v {
                    assert_eq!(om.get(u, v), 1.0);
                }
            }
        }

        let matching = [(0, 7), (1, 6), (2, 5), (3, 4)];
        let p = PairingProgram::new(8, &matching, 3.0, 1.0).unwrap();
        let om = program_pairing(&p).unwrap();
        let mut freqs: Vec<f64> = (0..8).map(|v| om.frequency(v)).collect();
        freqs.sort_by(f64::total_cmp);
        freqs.dedup();
        assert_eq!(freqs, vec![0.0, 3.0, 6.0, 9.0]);
        assert_eq!(freqs[3] - freqs[0], (8.0 / 2.0 - 1.0) * 3.0);
    }

    #[test]
    fn pairing_rejects_odd_and_imperfect() {
        assert!(matches!(
            PairingProgram::new(3, &[(0, 1)], 1.0, 1.0),
            Err(Error::InvalidArgument(_))
        ));
        assert!(PairingProgram::new(4, &[(0, 1), (1, 2)], 1.0, 1.0).is_err());
        assert!(PairingProgram::new(4, &[(0, 1)], 1.0, 1.0).is_err());
    }
}
