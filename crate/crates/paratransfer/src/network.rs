//! The network document: a versioned TOML description of a topology and the
//! frequency program applied to it. See `docs/network-format.md`.

use paratransfer_core::netgraph::{
    program_pairing, program_subcube_split, CouplingMatrix, NetworkTopology, PairingProgram, SubcubeSplit,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::Failure;

pub const NETWORK_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkDocument {
    /// Must equal [`NETWORK_FORMAT_VERSION`] when read from a standalone
    /// file; optional inside an experiment config.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub version: Option<u32>,
    /// Uniform coupling `Ω0`. Defaults to 1, so times are in units of `1/Ω0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling: Option<f64>,
    pub topology: TopologySpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub program: Option<ProgramSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TopologySpec {
    Hypercube {
        dimension: u32,
    },
    Complete {
        nodes: usize,
    },
    Custom {
        nodes: usize,
        edges: Vec<[usize; 2]>,
    },
    /// Erdős–Rényi graph drawn from the experiment seed.
    Random {
        nodes: usize,
        edge_probability: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProgramSpec {
    /// Hypercube split; give exactly one of `eta` and `detuning`.
    Subcube {
        channel_bits: Vec<u32>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        eta: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        detuning: Option<f64>,
    },
    /// Complete graph tuned into resonant pairs on a frequency ladder.
    Pairing {
        matching: Vec<[usize; 2]>,
        detuning: f64,
    },
    /// Explicit node frequencies.
    Frequencies { values: Vec<f64> },
}

/// A document turned into core types.
#[derive(Debug, Clone)]
pub struct BuiltNetwork {
    pub topology: NetworkTopology,
    pub omega: CouplingMatrix,
    pub coupling: f64,
    pub split: Option<SubcubeSplit>,
}

impl NetworkDocument {
    pub fn parse(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("network documents always serialize")
    }

    pub fn hypercube(dimension: u32) -> Self {
        Self {
            version: Some(NETWORK_FORMAT_VERSION),
            coupling: None,
            topology: TopologySpec::Hypercube { dimension },
            program: None,
        }
    }

    pub fn build(&self, seed: u64) -> Result<BuiltNetwork, Failure> {
        if let Some(v) = self.version {
            if v != NETWORK_FORMAT_VERSION {
                return Err(Failure::config(format!(
                    "network document version {v} is not supported (expected {NETWORK_FORMAT_VERSION})"
                )));
            }
        }
        let coupling = self.coupling.unwrap_or(1.0);
        let topology = match &self.topology {
            TopologySpec::Hypercube { dimension } => NetworkTopology::hypercube(*dimension)?,
            TopologySpec::Complete { nodes } => NetworkTopology::complete(*nodes)?,
            TopologySpec::Custom { nodes, edges } => {
                NetworkTopology::custom(*nodes, edges.iter().map(|&[a, b]| (a, b)))?
            }
            TopologySpec::Random {
                nodes,
                edge_probability,
            } => {
                if !(0.0..=1.0).contains(edge_probability) {
                    return Err(Failure::config(format!(
                        "edge_probability must lie in [0, 1], got {edge_probability}"
                    )));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut edges = Vec::new();
                for a in 0..*nodes {
                    for b in a + 1..*nodes {
                        if rng.random_bool(*edge_probability) {
                            edges.push((a, b));
                        }
                    }
                }
                NetworkTopology::custom(*nodes, edges)?
            }
        };
        let n = topology.node_count();
        let (omega, split) = match &self.program {
            None => (CouplingMatrix::from_topology(&topology, &vec![0.0; n], coupling)?, None),
            Some(ProgramSpec::Frequencies { values }) => {
                (CouplingMatrix::from_topology(&topology, values, coupling)?, None)
            }
            Some(ProgramSpec::Subcube {
                channel_bits,
                eta,
                detuning,
            }) => {
                let Some(d) = topology.dimension() else {
                    return Err(Failure::config("a subcube program needs a hypercube topology"));
                };
                let split = match (eta, detuning) {
                    (Some(eta), None) => SubcubeSplit::with_eta(d, channel_bits, *eta, coupling)?,
                    (None, Some(det)) => SubcubeSplit::new(d, channel_bits, *det, coupling)?,
                    (None, None) if channel_bits.is_empty() => SubcubeSplit::new(d, &[], 0.0, coupling)?,
                    _ => {
                        return Err(Failure::config(
                            "a subcube program with channel bits needs exactly one of eta and detuning",
                        ))
                    }
                };
                (program_subcube_split(&split)?, Some(split))
            }
            Some(ProgramSpec::Pairing { matching, detuning }) => {
                if !matches!(self.topology, TopologySpec::Complete { .. }) {
                    return Err(Failure::config("a pairing program needs a complete topology"));
                }
                let pairs: Vec<(usize, usize)> = matching.iter().map(|&[a, b]| (a, b)).collect();
                (program_pairing(&PairingProgram::new(n, &pairs, *detuning, coupling)?)?, None)
            }
        };
        Ok(BuiltNetwork {
            topology,
            omega,
            coupling,
            split,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let doc = NetworkDocument {
            version: Some(1),
            coupling: Some(2.0),
            topology: TopologySpec::Hypercube { dimension: 3 },
            program: Some(ProgramSpec::Subcube {
                channel_bits: vec![2],
                eta: Some(0.2),
                detuning: None,
            }),
        };
        let text = doc.to_toml();
        assert_eq!(NetworkDocument::parse(&text).unwrap(), doc);
        let built = doc.build(0).unwrap();
        assert_eq!(built.omega.size(), 8);
        assert_eq!(built.split.unwrap().detuning(), 20.0);
    }

    #[test]
    fn parses_handwritten_documents() {
        let doc = NetworkDocument::parse(
            r#"
            version = 1
            [topology]
            kind = "custom"
            nodes = 3
            edges = [[0, 1], [1, 2]]
            [program]
            kind = "frequencies"
            values = [0.0, 0.5, 0.0]
            "#,
        )
        .unwrap();
        let b = doc.build(0).unwrap();
        assert_eq!(b.omega.get(1, 1), 0.5);
        assert_eq!(b.omega.get(0, 2), 0.0);
        assert_eq!(b.omega.get(0, 1), 1.0);
    }

    #[test]
    fn rejects_mismatched_programs() {
        let mut doc = NetworkDocument::hypercube(2);
        doc.program = Some(ProgramSpec::Pairing {
            matching: vec![[0, 1], [2, 3]],
            detuning: 1.0,
        });
        assert!(doc.build(0).is_err());
        doc.version = Some(7);
        assert!(doc.build(0).is_err());
        assert!(NetworkDocument::parse("[topology]\nkind = \"torus\"\n").is_err());
    }

    #[test]
    fn random_graphs_follow_the_seed() {
        let doc = NetworkDocument {
            version: None,
            coupling: None,
            topology: TopologySpec::Random {
                nodes: 6,
                edge_probability: 0.5,
            },
            program: None,
        };
        let a = doc.build(11).unwrap();
        let b = doc.build(11).unwrap();
        assert_eq!(a.topology, b.topology);
    }
}
