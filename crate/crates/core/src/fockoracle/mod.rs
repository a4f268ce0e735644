//! Exact simulation of entanglement transfer, used as ground truth for the
//! closed forms in [`crate::fidelity`].
//!
//! Every sender `s_j` owns an auxiliary qubit `b_j` and starts in the Bell
//! state `(|0⟩ + a†_{s_j} b†_j |0⟩)/√2`. States are stored sparsely as maps
//! from occupation tuples to amplitudes: the auxiliary qubits form a bitmask
//! (bit `j` for sender `j`) and each network mode has an occupation in
//! `0..=n_max`.
//!
//! Oscillator networks are evolved through the mode matrix `K(t)` (see
//! [`oscillator`]). Qubit networks obey a hard-core constraint and are evolved
//! sector by sector (see [`qubit`]).

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)] // inherent once std is linked
use num_traits::Float;

use crate::fidelity::{phase_correction, FidelityMethod, PairFidelity};
use crate::modevo::{evolve_modes, transfer_amplitude};
use crate::netgraph::{program_subcube_split, CouplingMatrix, SubcubeSplit};
use crate::{Error, Result};

pub mod oscillator;
pub mod qubit;

pub use oscillator::{evolve_oscillator, evolve_oscillator_with};
pub use qubit::{evolve_qubit, evolve_qubit_with, SectorMethod};

/// State-size guard: at most `2^12` branches.
pub const MAX_SENDERS: usize = 12;

/// Basis label: auxiliary-qubit bitmask plus network occupations.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FockKey {
    pub aux: u32,
    pub occupations: Vec<u8>,
}

impl FockKey {
    pub fn network_excitations(&self) -> usize {
        self.occupations.iter().map(|&n| n as usize).sum()
    }

    pub fn total_excitations(&self) -> usize {
        self.aux.count_ones() as usize + self.network_excitations()
    }
}

/// Truncated multi-mode Fock state with one auxiliary qubit per sender.
#[derive(Debug, Clone, PartialEq)]
pub struct FockStateVector {
    modes: usize,
    senders: Vec<usize>,
    n_max: u8,
    amplitudes: BTreeMap<FockKey, Complex64>,
}

impl FockStateVector {
    /// A state from explicit amplitudes. Zero amplitudes are dropped.
    pub fn from_amplitudes<I>(modes: usize, senders: &[usize], n_max: u8, amplitudes: I) -> Result<Self>
    where
        I: IntoIterator<Item = (FockKey, Complex64)>,
    {
        validate_senders(modes, senders)?;
        if n_max == 0 {
            return Err(Error::InvalidArgument("n_max must be at least 1".into()));
        }
        let mut map = BTreeMap::new();
        for (key, amp) in amplitudes {
            if key.occupations.len() != modes {
                return Err(Error::InvalidArgument(format!(
                    "occupation tuple of length {} for {modes} modes",
                    key.occupations.len()
                )));
            }
            if u64::from(key.aux) >> senders.len() != 0 {
                return Err(Error::InvalidArgument(format!(
                    "auxiliary mask {:#b} has bits beyond {} senders",
                    key.aux,
                    senders.len()
                )));
            }
            if let Some(&n) = key.occupations.iter().find(|&&n| n > n_max) {
                return Err(Error::Truncation {
                    n_max,
                    excitations: n as usize,
                });
            }
            if amp != Complex64::new(0.0, 0.0) {
                *map.entry(key).or_insert(Complex64::new(0.0, 0.0)) += amp;
            }
        }
        Ok(Self {
            modes,
            senders: senders.to_vec(),
            n_max,
            amplitudes: map,
        })
    }

    pub(crate) fn with_same_shape(&self, amplitudes: BTreeMap<FockKey, Complex64>) -> Self {
        Self {
            modes: self.modes,
            senders: self.senders.clone(),
            n_max: self.n_max,
            amplitudes,
        }
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn senders(&self) -> &[usize] {
        &self.senders
    }

    pub fn n_max(&self) -> u8 {
        self.n_max
    }

    /// Number of stored amplitudes.
    pub fn support_len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&FockKey, &Complex64)> {
        self.amplitudes.iter()
    }

    pub fn amplitude(&self, key: &FockKey) -> Complex64 {
        self.amplitudes.get(key).copied().unwrap_or_default()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.values().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest network excitation number present in the support.
    pub fn max_network_excitations(&self) -> usize {
        self.amplitudes.keys().map(FockKey::network_excitations).max().unwrap_or(0)
    }

    /// Distinct total excitation numbers (auxiliary plus network) present.
    pub fn excitation_sectors(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.amplitudes.keys().map(FockKey::total_excitations).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Squared weight of each total-excitation sector.
    pub fn sector_weights(&self) -> BTreeMap<usize, f64> {
        let mut out = BTreeMap::new();
        for (k, a) in &self.amplitudes {
            *out.entry(k.total_excitations()).or_insert(0.0) += a.norm_sqr();
        }
        out
    }

    pub fn is_hard_core(&self) -> bool {
        self.amplitudes.keys().all(|k| k.occupations.iter().all(|&n| n <= 1))
    }
}

fn validate_senders(modes: usize, senders: &[usize]) -> Result<()> {
    if senders.len() > MAX_SENDERS {
        return Err(Error::Resource(format!(
            "{} senders exceed the limit of {MAX_SENDERS}",
            senders.len()
        )));
    }
    for (i, &s) in senders.iter().enumerate() {
        if s >= modes {
            return Err(Error::NodeOutOfRange { index: s, nodes: modes });
        }
        if senders[..i].contains(&s) {
            return Err(Error::InvalidArgument(format!("sender {s} listed twice")));
        }
    }
    Ok(())
}

/// `2^{-M/2} Π_j (1 + a†_{s_j} b†_j) |vac⟩` with truncation `n_max`.
pub fn prepare_initial_truncated(modes: usize, senders: &[usize], n_max: u8) -> Result<FockStateVector> {
    validate_senders(modes, senders)?;
    if n_max == 0 {
        return Err(Error::InvalidArgument("n_max must be at least 1".into()));
    }
    let m = senders.len();
    let amp = Complex64::new((0.5f64).powi(m as i32).sqrt(), 0.0);
    let mut map = BTreeMap::new();
    for aux in 0..(1u32 << m) {
        let mut occ = vec![0u8; modes];
        for (j, &s) in senders.iter().enumerate() {
            if aux & (1 << j) != 0 {
                occ[s] = 1;
            }
        }
        map.insert(FockKey { aux, occupations: occ }, amp);
    }
    Ok(FockStateVector {
        modes,
        senders: senders.to_vec(),
        n_max,
        amplitudes: map,
    })
}

/// Initial product of Bell pairs with `n_max = max(M, 1)`, enough for every
/// excitation to pile onto one mode.
pub fn prepare_initial(modes: usize, senders: &[usize]) -> Result<FockStateVector> {
    let n_max = senders.len().max(1);
    let n_max = u8::try_from(n_max).map_err(|_| Error::Resource("too many senders".into()))?;
    prepare_initial_truncated(modes, senders, n_max)
}

/// Network state with hard-core (qubit) sites: every occupation is 0 or 1.
#[derive(Debug, Clone, PartialEq)]
pub struct QubitNetworkState(FockStateVector);

impl QubitNetworkState {
    pub fn prepare_initial(modes: usize, senders: &[usize]) -> Result<Self> {
        Ok(Self(prepare_initial_truncated(modes, senders, 1)?))
    }

    pub fn from_fock(state: FockStateVector) -> Result<Self> {
        if state.n_max != 1 || !state.is_hard_core() {
            return Err(Error::Contract("qubit network states need n_max = 1".into()));
        }
        Ok(Self(state))
    }

    pub fn as_fock(&self) -> &FockStateVector {
        &self.0
    }

    pub fn into_fock(self) -> FockStateVector {
        self.0
    }
}

/// `⟨Φ+| ρ |Φ+⟩` for the reduced state of auxiliary qubit `sender_index` and
/// network mode `receiver`, after the receiver applies the phase shift
/// `exp(iφ n_r)`. Receiver occupations of 2 or more carry trace weight but no
/// overlap with `|Φ+⟩`. The state is assumed normalised.
pub fn bell_fidelity(state: &FockStateVector, sender_index: usize, receiver: usize, phase: f64) -> Result<PairFidelity> {
    if sender_index >= state.senders.len() {
        return Err(Error::InvalidArgument(format!(
            "sender index {sender_index} but the state has {} senders",
            state.senders.len()
        )));
    }
    if receiver >= state.modes {
        return Err(Error::NodeOutOfRange {
            index: receiver,
            nodes: state.modes,
        });
    }
    let bit = 1u32 << sender_index;
    // environment -> (amplitude of |0_b 0_r⟩, amplitude of |1_b 1_r⟩)
    let mut env: BTreeMap<(u32, Vec<u8>), (Complex64, Complex64)> = BTreeMap::new();
    for (key, &amp) in &state.amplitudes {
        let b = key.aux & bit != 0;
        let n = key.occupations[receiver];
        if n != u8::from(b) {
            continue;
        }
        let mut occ = key.occupations.clone();
        occ[receiver] = 0;
        let slot = env.entry((key.aux & !bit, occ)).or_default();
        if b {
            slot.1 += amp;
        } else {
            slot.0 += amp;
        }
    }
    let rot = Complex64::cis(phase);
    let fidelity = 0.5 * env.values().map(|(a0, a1)| (a0 + rot * a1).norm_sqr()).sum::<f64>();
    Ok(PairFidelity {
        endpoints: Some((state.senders[sender_index], receiver)),
        fidelity: fidelity.clamp(0.0, 1.0),
        correction_phase: phase,
        method: FidelityMethod::ExactOracle,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NetworkKind {
    Oscillator,
    Qubit,
}

/// Exact fidelity of a lone sender on an arbitrary oscillator network, with
/// the phase correction taken from `K(t)`.
pub fn single_sender_fidelity(omega: &CouplingMatrix, sender: usize, receiver: usize, t: f64) -> Result<PairFidelity> {
    let k = evolve_modes(omega, t)?;
    let alpha = transfer_amplitude(&k, sender, receiver)?;
    let state = prepare_initial(omega.size(), &[sender])?;
    let evolved = evolve_oscillator_with(&state, &k)?;
    bell_fidelity(&evolved, 0, receiver, crate::fidelity::correction_phase_of(alpha))
}

/// Per-pair fidelities after one joint evolution of all senders on a
/// programmed hypercube. Every receiver must be its sender's subcube
/// antipode.
pub fn parallel_fidelities(
    senders: &[usize],
    receivers: &[usize],
    split: &SubcubeSplit,
    t: f64,
    kind: NetworkKind,
) -> Result<Vec<PairFidelity>> {
    if senders.len() != receivers.len() {
        return Err(Error::Contract(format!(
            "{} senders but {} receivers",
            senders.len(),
            receivers.len()
        )));
    }
    let n = split.node_count();
    for (&s, &r) in senders.iter().zip(receivers) {
        if s >= n || r >= n {
            return Err(Error::NodeOutOfRange { index: s.max(r), nodes: n });
        }
        if split.antipode(s) != r {
            return Err(Error::Contract(format!(
                "receiver {r} does not match sender {s}: its subcube antipode is {}",
                split.antipode(s)
            )));
        }
    }
    let omega = program_subcube_split(split)?;
    let evolved = match kind {
        NetworkKind::Oscillator => {
            let k = evolve_modes(&omega, t)?;
            evolve_oscillator_with(&prepare_initial(n, senders)?, &k)?
        }
        NetworkKind::Qubit => evolve_qubit(&QubitNetworkState::prepare_initial(n, senders)?, &omega, t)?.into_fock(),
    };
    senders
        .iter()
        .zip(receivers)
        .enumerate()
        .map(|(j, (&s, &r))| bell_fidelity(&evolved, j, r, phase_correction(split, s, r, t)?))
        .collect()
}

/// Senders for the qubit-compatible scheme: the all-zero transfer corner of
/// every subcube, so all channels transfer in the same direction.
pub fn qc_senders(split: &SubcubeSplit) -> Vec<usize> {
    let mask = split.channel_mask();
    let mut out: Vec<usize> = (0..split.node_count()).filter(|&v| v & !mask == 0).collect();
    out.sort_unstable();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netgraph::NetworkTopology;
    use core::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

    #[test]
    fn initial_state_shapes() {
        let vac = prepare_initial(4, &[]).unwrap();
        assert_eq!(vac.support_len(), 1);
        assert_eq!(vac.amplitude(&FockKey { aux: 0, occupations: vec![0; 4] }), Complex64::new(1.0, 0.0));

        let one = prepare_initial(2, &[0]).unwrap();
        assert_eq!(one.support_len(), 2);
        for (_, a) in one.iter() {
            assert!((a.re - FRAC_1_SQRT_2).abs() < 1e-15);
        }

        let two = prepare_initial(4, &[0, 3]).unwrap();
        assert_eq!(two.support_len(), 4);
        assert!(two.iter().all(|(_, a)| *a == Complex64::new(0.5, 0.0)));
        let mut sectors: Vec<usize> = two.iter().map(|(k, _)| k.network_excitations()).collect();
        sectors.sort_unstable();
        assert_eq!(sectors, vec![0, 1, 1, 2]);
        assert_eq!(two.excitation_sectors(), vec![0, 2, 4]);
    }

    #[test]
    fn sender_validation() {
        assert!(matches!(prepare_initial(4, &[1, 1]), Err(Error::InvalidArgument(_))));
        assert!(matches!(prepare_initial(4, &[4]), Err(Error::NodeOutOfRange { .. })));
        let many: Vec<usize> = (0..13).collect();
        assert!(matches!(prepare_initial(16, &many), Err(Error::Resource(_))));
    }

    #[test]
    fn fidelity_before_transfer_is_a_quarter() {
        let st = prepare_initial(2, &[0]).unwrap();
        assert!((bell_fidelity(&st, 0, 1, 0.0).unwrap().fidelity - 0.25).abs() < 1e-15);
        assert!((bell_fidelity(&st, 0, 0, 0.0).unwrap().fidelity - 1.0).abs() < 1e-15);
    }

    #[test]
    fn resonant_swap_is_perfect() {
        let topo = NetworkTopology::complete(2).unwrap();
        let om = CouplingMatrix::from_topology(&topo, &[0.0, 0.0], 1.0).unwrap();
        let st = evolve_oscillator(&prepare_initial(2, &[0]).unwrap(), &om, FRAC_PI_2).unwrap();
        let key = FockKey { aux: 1, occupations: vec![0, 1] };
        assert!((st.amplitude(&key) - Complex64::new(0.0, -FRAC_1_SQRT_2)).norm() < 1e-14);
        let f = bell_fidelity(&st, 0, 1, FRAC_PI_2).unwrap();
        assert!((f.fidelity - 1.0).abs() < 1e-14);
        assert_eq!(f.method, FidelityMethod::ExactOracle);
    }

    #[test]
    fn tuned_pair_matches_closed_form() {
        // |α| = sin(Ω0 t) = 0.9 on a resonant pair
        let topo = NetworkTopology::complete(2).unwrap();
        let om = CouplingMatrix::from_topology(&topo, &[0.0, 0.0], 1.0).unwrap();
        let t = 0.9f64.asin();
        let f = single_sender_fidelity(&om, 0, 1, t).unwrap();
        assert!((f.fidelity - 0.9025).abs() < 1e-12);
    }

    #[test]
    fn parallel_contract_checks() {
        let split = SubcubeSplit::with_eta(2, &[1], 0.2, 1.0).unwrap();
        let t = split.transfer_time();
        assert!(matches!(
            parallel_fidelities(&[0, 2], &[1, 2], &split, t, NetworkKind::Oscillator),
            Err(Error::Contract(_))
        ));
        assert!(matches!(
            parallel_fidelities(&[0, 2], &[1], &split, t, NetworkKind::Oscillator),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn mp_pairs_share_one_fidelity() {
        let split = SubcubeSplit::with_eta(2, &[1], 0.2, 1.0).unwrap();
        let t = split.transfer_time();
        let senders: Vec<usize> = (0..4).collect();
        let receivers: Vec<usize> = senders.iter().map(|&s| split.antipode(s)).collect();
        let fs = parallel_fidelities(&senders, &receivers, &split, t, NetworkKind::Oscillator).unwrap();
        for f in &fs {
            assert!((f.fidelity - fs[0].fidelity).abs() < 1e-9);
        }
        assert!(fs[0].fidelity < 1.0);
    }

    #[test]
    fn large_detuning_limit() {
        let split = SubcubeSplit::new(3, &[2], 1e4, 1.0).unwrap();
        let t = split.transfer_time();
        let senders = qc_senders(&split);
        assert_eq!(senders, vec![0, 4]);
        let receivers: Vec<usize> = senders.iter().map(|&s| split.antipode(s)).collect();
        for kind in [NetworkKind::Oscillator, NetworkKind::Qubit] {
            for f in parallel_fidelities(&senders, &receivers, &split, t, kind).unwrap() {
                assert!(f.fidelity >= 0.9999, "{kind:?}: {}", f.fidelity);
            }
        }
    }
}
