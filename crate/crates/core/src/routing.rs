//! Entanglement distribution schedules and their rates.
//!
//! A [`Schedule`] is an ordered list of rounds. Each round holds one frequency
//! program for the whole network and a set of directed transfer tasks that
//! run simultaneously for one swap time `T = π/(2Ω0)`. The distribution time
//! is `T_D = rounds · T` and the rate is the fidelity-weighted number of
//! directed transfers per `T_D`.
//!
//! Three schemes are built here:
//!
//! - qubit-compatible (QC): for every subcube split, `2^(d−m−1)` rounds with
//!   one excitation per subcube channel, so every unordered pair is used once;
//! - massively parallel (MP): one round per split in which every node sends
//!   to its subcube antipode;
//! - complete graph: a round-robin 1-factorization built by the circle method,
//!   each matched pair exchanging in both directions.
//!
//! Splits are visited by ascending `m` and, for equal `m`, by the
//! lexicographic order of the channel-bit set.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)] // inherent once std is linked
use num_traits::Float;

use crate::fidelity::{
    complete_bound, correction_phase_of, hypercube_bound_with, hypercube_bound_worst_case, XiConvention,
};
use crate::modevo::{evolve_modes, hypercube_factors, transfer_amplitude};
use crate::netgraph::{program_pairing, PairingProgram, SubcubeSplit, MAX_HYPERCUBE_DIM};
use crate::{transfer_time, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scheme {
    Qc,
    Mp,
    Complete,
    /// One task per round.
    Serial,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Qc => "QC",
            Scheme::Mp => "MP",
            Scheme::Complete => "COMPLETE",
            Scheme::Serial => "SERIAL",
        }
    }

    /// Parses the names produced by [`Scheme::as_str`], ignoring case.
    pub fn parse(name: &str) -> Option<Self> {
        [Scheme::Qc, Scheme::Mp, Scheme::Complete, Scheme::Serial]
            .into_iter()
            .find(|s| s.as_str().eq_ignore_ascii_case(name))
    }
}

impl core::fmt::Display for Scheme {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferTask {
    pub sender: usize,
    pub receiver: usize,
    /// Subcube index (hypercube) or pair index (complete graph) within the
    /// round.
    pub channel: usize,
    /// Receiver-side phase correction, once annotated.
    pub phase: Option<f64>,
}

impl TransferTask {
    fn new(sender: usize, receiver: usize, channel: usize) -> Self {
        Self {
            sender,
            receiver,
            channel,
            phase: None,
        }
    }
}

/// Frequency program applied during a round.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RoundProgram {
    /// Hypercube split with the given channel bits (ascending).
    Subcube { channel_bits: Vec<u32> },
    /// Complete graph tuned into resonant pairs; pair `k` sits on rung `k`
    /// of the frequency ladder.
    Pairing { matching: Vec<(usize, usize)> },
}

impl RoundProgram {
    /// Number of hypercube channel bits; `None` for pairings.
    pub fn channel_bits(&self) -> Option<u32> {
        match self {
            RoundProgram::Subcube { channel_bits } => Some(channel_bits.len() as u32),
            RoundProgram::Pairing { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Round {
    pub program: RoundProgram,
    pub tasks: Vec<TransferTask>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    scheme: Scheme,
    nodes: usize,
    dimension: Option<u32>,
    rounds: Vec<Round>,
}

fn check_dimension(d: u32) -> Result<()> {
    if !(1..=MAX_HYPERCUBE_DIM).contains(&d) {
        return Err(Error::InvalidArgument(format!(
            "hypercube dimension must lie in 1..={MAX_HYPERCUBE_DIM}, got {d}"
        )));
    }
    Ok(())
}

/// All `m`-subsets of `0..d` in lexicographic order.
fn combinations(d: u32, m: u32) -> Vec<Vec<u32>> {
    fn rec(start: u32, d: u32, m: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() as u32 == m {
            out.push(cur.clone());
            return;
        }
        let need = m - cur.len() as u32;
        for b in start..=d - need {
            cur.push(b);
            rec(b + 1, d, m, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, d, m, &mut Vec::new(), &mut out);
    out
}

/// Splits in schedule order: ascending `m`, then lexicographic bit sets.
/// `m` runs over `0..d`, since `m = d` leaves no transfer bits.
pub fn splittings(d: u32) -> Vec<Vec<u32>> {
    (0..d).flat_map(|m| combinations(d, m)).collect()
}

/// Deposits the low bits of `value` into the positions listed in `bits`.
fn deposit(value: usize, bits: &[u32]) -> usize {
    bits.iter()
        .enumerate()
        .fold(0, |acc, (i, &b)| acc | (((value >> i) & 1) << b))
}

/// Inverse of [`deposit`].
fn extract(v: usize, bits: &[u32]) -> usize {
    bits.iter()
        .enumerate()
        .fold(0, |acc, (i, &b)| acc | (((v >> b) & 1) << i))
}

fn transfer_bits(d: u32, channel_bits: &[u32]) -> Vec<u32> {
    (0..d).filter(|b| !channel_bits.contains(b)).collect()
}

/// Qubit-compatible schedule on the d-cube: `(3^d − 1)/2` rounds.
///
/// In round `r` of a split, the sender in every subcube has its highest
/// transfer bit clear and the remaining transfer bits set to `r`.
pub fn qc_schedule(d: u32) -> Result<Schedule> {
    check_dimension(d)?;
    let mut rounds = Vec::new();
    for bits in splittings(d) {
        let free = transfer_bits(d, &bits);
        let (low, top) = free.split_at(free.len() - 1);
        let transfer_mask = deposit(usize::MAX, &free);
        for r in 0..1usize << low.len() {
            let base = deposit(r, low);
            debug_assert_eq!(base & (1 << top[0]), 0);
            let tasks = (0..1usize << bits.len())
                .map(|c| {
                    let s = base | deposit(c, &bits);
                    TransferTask::new(s, s ^ transfer_mask, c)
                })
                .collect();
            rounds.push(Round {
                program: RoundProgram::Subcube {
                    channel_bits: bits.clone(),
                },
                tasks,
            });
        }
    }
    Ok(Schedule {
        scheme: Scheme::Qc,
        nodes: 1 << d,
        dimension: Some(d),
        rounds,
    })
}

/// Massively parallel schedule: `2^d − 1` rounds in which every node sends.
pub fn mp_schedule(d: u32) -> Result<Schedule> {
    check_dimension(d)?;
    let n = 1usize << d;
    let rounds = splittings(d)
        .into_iter()
        .map(|bits| {
            let transfer_mask = deposit(usize::MAX, &transfer_bits(d, &bits));
            let tasks = (0..n)
                .map(|s| TransferTask::new(s, s ^ transfer_mask, extract(s, &bits)))
                .collect();
            Round {
                program: RoundProgram::Subcube { channel_bits: bits },
                tasks,
            }
        })
        .collect();
    Ok(Schedule {
        scheme: Scheme::Mp,
        nodes: n,
        dimension: Some(d),
        rounds,
    })
}

/// Round-robin perfect matchings of `K_N` by the circle method. Round `k`
/// pairs `k` with `N−1` and `(k+i) mod (N−1)` with `(k−i) mod (N−1)`.
pub fn round_robin(nodes: usize) -> Result<Vec<Vec<(usize, usize)>>> {
    if nodes < 2 || !nodes.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "round-robin pairing needs an even number of at least 2 nodes, got {nodes}"
        )));
    }
    let q = nodes - 1;
    Ok((0..q)
        .map(|k| {
            let mut pairs = vec![(k, q)];
            pairs.extend((1..nodes / 2).map(|i| ((k + i) % q, (k + q - i) % q)));
            pairs
        })
        .collect())
}

/// Complete-graph schedule: `N − 1` rounds, each pair exchanging both ways.
pub fn complete_schedule(nodes: usize) -> Result<Schedule> {
    let rounds = round_robin(nodes)?
        .into_iter()
        .map(|matching| {
            let tasks = matching
                .iter()
                .enumerate()
                .flat_map(|(c, &(a, b))| [TransferTask::new(a, b, c), TransferTask::new(b, a, c)])
                .collect();
            Round {
                program: RoundProgram::Pairing { matching },
                tasks,
            }
        })
        .collect();
    Ok(Schedule {
        scheme: Scheme::Complete,
        nodes,
        dimension: None,
        rounds,
    })
}

/// Builds the schedule for `scheme`. Hypercube schemes take `nodes = 2^d`.
/// [`Scheme::Serial`] serializes the complete-graph schedule.
pub fn schedule_for(scheme: Scheme, nodes: usize) -> Result<Schedule> {
    let dim = || -> Result<u32> {
        if nodes.is_power_of_two() && nodes >= 2 {
            Ok(nodes.trailing_zeros())
        } else {
            Err(Error::InvalidArgument(format!(
                "hypercube schemes need a power-of-two node count, got {nodes}"
            )))
        }
    };
    match scheme {
        Scheme::Qc => qc_schedule(dim()?),
        Scheme::Mp => mp_schedule(dim()?),
        Scheme::Complete => complete_schedule(nodes),
        Scheme::Serial => Ok(complete_schedule(nodes)?.serialized()),
    }
}

impl Schedule {
    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn dimension(&self) -> Option<u32> {
        self.dimension
    }

    pub fn rounds(&self) -> &[Round] {
        &self.rounds
    }

    pub fn round_count(&self) -> usize {
        self.rounds.len()
    }

    pub fn task_count(&self) -> usize {
        self.rounds.iter().map(|r| r.tasks.len()).sum()
    }

    /// `T_D` in units of the swap time.
    pub fn distribution_time_units(&self) -> f64 {
        self.rounds.len() as f64
    }

    /// `T_D` in seconds for coupling `Ω0`.
    pub fn distribution_time(&self, coupling: f64) -> f64 {
        self.distribution_time_units() * transfer_time(coupling)
    }

    /// The same tasks, one per round, in their original order.
    pub fn serialized(&self) -> Schedule {
        let rounds = self
            .rounds
            .iter()
            .flat_map(|r| {
                r.tasks.iter().map(move |&t| Round {
                    program: r.program.clone(),
                    tasks: vec![t],
                })
            })
            .collect();
        Schedule {
            scheme: Scheme::Serial,
            nodes: self.nodes,
            dimension: self.dimension,
            rounds,
        }
    }

    /// Number of tasks touching each unordered pair `(min, max)`.
    pub fn pair_coverage(&self) -> BTreeMap<(usize, usize), usize> {
        let mut out = BTreeMap::new();
        for t in self.rounds.iter().flat_map(|r| &r.tasks) {
            *out.entry((t.sender.min(t.receiver), t.sender.max(t.receiver))).or_insert(0) += 1;
        }
        out
    }

    /// Whether every unordered pair of distinct nodes appears in some task.
    pub fn covers_all_pairs(&self) -> bool {
        let cov = self.pair_coverage();
        let n = self.nodes;
        cov.len() == n * (n - 1) / 2 && cov.keys().all(|&(a, b)| a < b && b < n)
    }

    /// Checks the structural invariant of every round.
    pub fn validate(&self) -> Result<()> {
        for (i, round) in self.rounds.iter().enumerate() {
            self.validate_round(round)
                .map_err(|e| Error::Contract(format!("round {i}: {e}")))?;
        }
        Ok(())
    }

    fn validate_round(&self, round: &Round) -> core::result::Result<(), alloc::string::String> {
        let n = self.nodes;
        for t in &round.tasks {
            if t.sender >= n || t.receiver >= n {
                return Err(format!("task {}→{} outside 0..{n}", t.sender, t.receiver));
            }
            if t.sender == t.receiver {
                return Err(format!("task sends node {} to itself", t.sender));
            }
        }
        if self.scheme == Scheme::Serial && round.tasks.len() != 1 {
            return Err(format!("serial round carries {} tasks", round.tasks.len()));
        }
        match &round.program {
            RoundProgram::Subcube { channel_bits } => {
                let d = self
                    .dimension
                    .ok_or_else(|| "subcube program on a non-hypercube schedule".into())
                    .map_err(|e: alloc::string::String| e)?;
                if channel_bits.windows(2).any(|w| w[0] >= w[1]) || channel_bits.iter().any(|&b| b >= d) {
                    return Err(format!("bad channel bits {channel_bits:?}"));
                }
                if channel_bits.len() as u32 >= d {
                    return Err("no transfer bits left".into());
                }
                let transfer_mask = deposit(usize::MAX, &transfer_bits(d, channel_bits));
                for t in &round.tasks {
                    if t.receiver != t.sender ^ transfer_mask {
                        return Err(format!("{} is not the subcube antipode of {}", t.receiver, t.sender));
                    }
                    if t.channel != extract(t.sender, channel_bits) {
                        return Err(format!("task {}→{} labelled channel {}", t.sender, t.receiver, t.channel));
                    }
                }
                let channels = 1usize << channel_bits.len();
                match self.scheme {
                    Scheme::Qc => {
                        let mut seen = vec![false; channels];
                        for t in &round.tasks {
                            if core::mem::replace(&mut seen[t.channel], true) {
                                return Err(format!("channel {} carries two tasks", t.channel));
                            }
                        }
                        if !seen.iter().all(|&x| x) {
                            return Err("a subcube channel is idle".into());
                        }
                    }
                    Scheme::Mp => {
                        let mut senders: Vec<usize> = round.tasks.iter().map(|t| t.sender).collect();
                        senders.sort_unstable();
                        if senders != (0..n).collect::<Vec<_>>() {
                            return Err("not every node sends exactly once".into());
                        }
                    }
                    _ => {}
                }
            }
            RoundProgram::Pairing { matching } => {
                if matching.len() * 2 != n {
                    return Err(format!("{} pairs do not match {n} nodes", matching.len()));
                }
                let mut partner = vec![usize::MAX; n];
                for &(a, b) in matching {
                    if a >= n || b >= n || a == b || partner[a] != usize::MAX || partner[b] != usize::MAX {
                        return Err(format!("pair ({a}, {b}) breaks the perfect matching"));
                    }
                    partner[a] = b;
                    partner[b] = a;
                }
                for t in &round.tasks {
                    if partner[t.receiver] != t.sender {
                        return Err(format!("task {}→{} is not a matched pair", t.sender, t.receiver));
                    }
                    let (a, b) = matching[t.channel];
                    if !((a, b) == (t.sender, t.receiver) || (b, a) == (t.sender, t.receiver)) {
                        return Err(format!("task {}→{} labelled pair {}", t.sender, t.receiver, t.channel));
                    }
                }
                if self.scheme == Scheme::Complete {
                    let mut directed: Vec<(usize, usize)> = round.tasks.iter().map(|t| (t.sender, t.receiver)).collect();
                    directed.sort_unstable();
                    directed.dedup();
                    if directed.len() != round.tasks.len() || directed.len() != 2 * matching.len() {
                        return Err("every matched pair must exchange once in each direction".into());
                    }
                }
            }
        }
        Ok(())
    }
}

/// Frequency window available to the network, in rad/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandwidthBudget {
    min: f64,
    max: f64,
}

impl BandwidthBudget {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        if !(max > min) || min.is_nan() || max.is_nan() {
            return Err(Error::InvalidArgument(format!(
                "bandwidth needs ω_max > ω_min, got [{min}, {max}]"
            )));
        }
        Ok(Self { min, max })
    }

    /// Window `[0, width]`. An infinite width is the ideal, cross-talk free
    /// limit.
    pub fn from_width(width: f64) -> Result<Self> {
        Self::new(0.0, width)
    }

    pub fn unlimited() -> Self {
        Self {
            min: 0.0,
            max: f64::INFINITY,
        }
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    pub fn width(&self) -> f64 {
        self.max - self.min
    }
}

/// Dissipation (`T1`) and dephasing (`T2`) times in seconds; `None` is ideal.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Decoherence {
    t1: Option<f64>,
    t2: Option<f64>,
}

impl Decoherence {
    pub fn new(t1: Option<f64>, t2: Option<f64>) -> Result<Self> {
        for (name, t) in [("T1", t1), ("T2", t2)] {
            if let Some(t) = t {
                if !(t > 0.0) {
                    return Err(Error::InvalidArgument(format!("{name} must be positive, got {t}")));
                }
            }
        }
        Ok(Self { t1, t2 })
    }

    pub fn ideal() -> Self {
        Self::default()
    }

    pub fn t1(&self) -> Option<f64> {
        self.t1
    }

    pub fn t2(&self) -> Option<f64> {
        self.t2
    }

    /// Fidelity attenuation over one swap time `t`: `e^(−t/T1)` for the
    /// massively parallel scheme and `e^(−t/T2)` for every single-excitation
    /// scheme.
    pub fn attenuation(&self, scheme: Scheme, t: f64) -> f64 {
        let time = match scheme {
            Scheme::Mp => self.t1,
            Scheme::Qc | Scheme::Complete | Scheme::Serial => self.t2,
        };
        time.map_or(1.0, |tau| (-t / tau).exp())
    }
}

/// Cross-talk parameter `η = 2Ω0/Δω` for a hypercube split with `m` channel
/// bits spread over width `W`: `Δω = W/m`, so `η = 2Ω0·m/W`. Zero for
/// `m = 0`.
pub fn hypercube_eta(channel_bits: u32, coupling: f64, budget: &BandwidthBudget) -> f64 {
    if channel_bits == 0 {
        return 0.0;
    }
    2.0 * coupling * channel_bits as f64 / budget.width()
}

/// Complete graph of `N` nodes in `N/2` pairs: `Δω = 2W/N`, so `η = Ω0·N/W`.
pub fn complete_eta(nodes: usize, coupling: f64, budget: &BandwidthBudget) -> f64 {
    coupling * nodes as f64 / budget.width()
}

/// `η` used by a round of a schedule with `nodes` nodes.
pub fn round_eta(program: &RoundProgram, nodes: usize, coupling: f64, budget: &BandwidthBudget) -> f64 {
    match program {
        RoundProgram::Subcube { channel_bits } => hypercube_eta(channel_bits.len() as u32, coupling, budget),
        RoundProgram::Pairing { .. } => complete_eta(nodes, coupling, budget),
    }
}

/// `η` for every round of a schedule.
pub fn eta_from_bandwidth(schedule: &Schedule, coupling: f64, budget: &BandwidthBudget) -> Vec<f64> {
    schedule
        .rounds
        .iter()
        .map(|r| round_eta(&r.program, schedule.nodes, coupling, budget))
        .collect()
}

/// Per-task fidelity used in rate sums.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FidelityModel {
    /// Hypercube bound with `sin²ξ_T = 1`, complete-graph pairing bound.
    #[default]
    WorstCase,
    /// Hypercube bound with the oscillating `sin²ξ_T` at the transfer time.
    ExactXi,
    /// Hypercube rounds detune less, down to the nearest resonance
    /// `η_n = 1/√(4n² − 1)` at or above the budget's `η`, where `sin ξ_T`
    /// vanishes. Falls back to [`FidelityModel::ExactXi`] above the first
    /// resonance.
    ResonanceTuned,
    /// Every transfer is perfect.
    Ideal,
}

impl FidelityModel {
    pub fn as_str(self) -> &'static str {
        match self {
            FidelityModel::WorstCase => "worst-case",
            FidelityModel::ExactXi => "exact-xi",
            FidelityModel::ResonanceTuned => "resonance-tuned",
            FidelityModel::Ideal => "ideal",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        [
            FidelityModel::WorstCase,
            FidelityModel::ExactXi,
            FidelityModel::ResonanceTuned,
            FidelityModel::Ideal,
        ]
        .into_iter()
        .find(|m| m.as_str().eq_ignore_ascii_case(name))
    }

    /// Fidelity of one task in a round with this program and `η`.
    pub fn task_fidelity(self, program: &RoundProgram, eta: f64) -> f64 {
        match (self, program) {
            (FidelityModel::Ideal, _) => 1.0,
            (_, RoundProgram::Pairing { .. }) => complete_bound(eta),
            (FidelityModel::WorstCase, RoundProgram::Subcube { channel_bits }) => {
                hypercube_bound_worst_case(channel_bits.len() as u32, eta)
            }
            (FidelityModel::ExactXi, RoundProgram::Subcube { channel_bits }) => {
                hypercube_bound_with(channel_bits.len() as u32, eta, XiConvention::TransferTime)
            }
            (FidelityModel::ResonanceTuned, RoundProgram::Subcube { channel_bits }) => {
                let m = channel_bits.len() as u32;
                let eta = resonance_at_or_above(eta).unwrap_or(eta);
                hypercube_bound_with(m, eta, XiConvention::TransferTime)
            }
        }
    }
}

/// Smallest `η_n = 1/√(4n² − 1)` with `η_n ≥ eta`, if any. The resonances
/// decrease with `n`, the largest being `1/√3`.
pub fn resonance_at_or_above(eta: f64) -> Option<f64> {
    if !(eta > 0.0) {
        return None;
    }
    let res = |n: f64| 1.0 / (4.0 * n * n - 1.0).sqrt();
    // η_n ≥ η  ⇔  n ≤ ½√(1 + η⁻²)
    let mut n = (0.5 * (1.0 + 1.0 / (eta * eta)).sqrt()).floor() + 1.0;
    while n >= 1.0 && res(n) < eta {
        n -= 1.0;
    }
    (n >= 1.0).then(|| res(n))
}

/// Contribution of one round to a rate report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundRate {
    pub index: usize,
    /// Hypercube channel bits; `None` for pairings.
    pub channel_bits: Option<u32>,
    pub eta: f64,
    pub tasks: usize,
    pub task_fidelity: f64,
    /// `Σ F` over the round's tasks, before attenuation.
    pub sum_fidelity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub scheme: Scheme,
    pub nodes: usize,
    pub dimension: Option<u32>,
    pub model: FidelityModel,
    /// Swap time `T` in seconds.
    pub transfer_time: f64,
    /// `T_D` in units of `T`.
    pub distribution_time: f64,
    /// `Σ F` over all tasks, before attenuation.
    pub sum_fidelity: f64,
    pub attenuation: f64,
    /// `R` in units of `1/T`: `(Σ F / T_D) · attenuation`.
    pub rate: f64,
    /// Largest `η` over the rounds.
    pub eta: f64,
    pub rounds: Vec<RoundRate>,
}

impl RateReport {
    /// `R` in 1/s.
    pub fn rate_per_second(&self) -> f64 {
        self.rate / self.transfer_time
    }

    /// Assembles a report from per-round contributions, summed in round
    /// order.
    pub fn from_rounds(
        schedule: &Schedule,
        coupling: f64,
        decoherence: &Decoherence,
        model: FidelityModel,
        rounds: Vec<RoundRate>,
    ) -> Result<Self> {
        if rounds.len() != schedule.round_count() || rounds.iter().enumerate().any(|(i, r)| r.index != i) {
            return Err(Error::Contract("round contributions do not match the schedule".into()));
        }
        let t = transfer_time(coupling);
        let sum_fidelity: f64 = rounds.iter().map(|r| r.sum_fidelity).sum();
        let t_d = schedule.distribution_time_units();
        let attenuation = decoherence.attenuation(schedule.scheme, t);
        let rate = if t_d > 0.0 { sum_fidelity / t_d * attenuation } else { 0.0 };
        Ok(Self {
            scheme: schedule.scheme,
            nodes: schedule.nodes,
            dimension: schedule.dimension,
            model,
            transfer_time: t,
            distribution_time: t_d,
            sum_fidelity,
            attenuation,
            rate,
            eta: rounds.iter().map(|r| r.eta).fold(0.0, f64::max),
            rounds,
        })
    }
}

fn check_coupling(coupling: f64) -> Result<()> {
    if !(coupling.is_finite() && coupling > 0.0) {
        return Err(Error::InvalidArgument(format!("coupling must be positive, got {coupling}")));
    }
    Ok(())
}

/// Rate contribution of round `index`.
pub fn round_rate(
    schedule: &Schedule,
    index: usize,
    coupling: f64,
    budget: &BandwidthBudget,
    model: FidelityModel,
) -> Result<RoundRate> {
    let round = schedule
        .rounds
        .get(index)
        .ok_or_else(|| Error::InvalidArgument(format!("round {index} out of range")))?;
    let eta = round_eta(&round.program, schedule.nodes, coupling, budget);
    let f = model.task_fidelity(&round.program, eta);
    Ok(RoundRate {
        index,
        channel_bits: round.program.channel_bits(),
        eta,
        tasks: round.tasks.len(),
        task_fidelity: f,
        sum_fidelity: f * round.tasks.len() as f64,
    })
}

/// Fidelity-weighted directed transfers per distribution time.
pub fn distribution_rate(
    schedule: &Schedule,
    coupling: f64,
    budget: &BandwidthBudget,
    decoherence: &Decoherence,
    model: FidelityModel,
) -> Result<RateReport> {
    check_coupling(coupling)?;
    let rounds = (0..schedule.round_count())
        .map(|i| round_rate(schedule, i, coupling, budget, model))
        .collect::<Result<Vec<_>>>()?;
    RateReport::from_rounds(schedule, coupling, decoherence, model, rounds)
}

/// `Ω0 = 2π · 20 MHz`.
pub const FIGURE3_COUPLING: f64 = 2.0 * core::f64::consts::PI * 20.0e6;
/// `W = 2π · 2 GHz`.
pub const FIGURE3_BANDWIDTH: f64 = 2.0 * core::f64::consts::PI * 2.0e9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub scheme: Scheme,
    pub nodes: usize,
    pub rate: f64,
    pub eta: f64,
}

/// Rates of the MP, QC and complete-graph schemes for every `N` in
/// `nodes`. Hypercube points are produced only for powers of two and
/// complete-graph points only for even `N`; other sizes are skipped.
pub fn figure3_sweep(
    nodes: &[usize],
    coupling: f64,
    budget: &BandwidthBudget,
    decoherence: &Decoherence,
    model: FidelityModel,
) -> Result<Vec<SweepPoint>> {
    let mut out = Vec::new();
    for scheme in [Scheme::Mp, Scheme::Qc, Scheme::Complete] {
        for &n in nodes {
            let eligible = match scheme {
                Scheme::Complete => n >= 2 && n % 2 == 0,
                _ => n >= 2 && n.is_power_of_two() && n.trailing_zeros() <= MAX_HYPERCUBE_DIM,
            };
            if !eligible {
                continue;
            }
            let schedule = schedule_for(scheme, n)?;
            let report = distribution_rate(&schedule, coupling, budget, decoherence, model)?;
            out.push(SweepPoint {
                scheme,
                nodes: n,
                rate: report.rate,
                eta: report.eta,
            });
        }
    }
    Ok(out)
}

/// The frequency program of a round, realised for coupling `Ω0` and
/// bandwidth `W`.
#[derive(Debug, Clone, PartialEq)]
pub enum RealisedProgram {
    Subcube(SubcubeSplit),
    Pairing(PairingProgram),
}

pub fn realise_round(
    schedule: &Schedule,
    index: usize,
    coupling: f64,
    budget: &BandwidthBudget,
) -> Result<RealisedProgram> {
    let round = schedule
        .rounds
        .get(index)
        .ok_or_else(|| Error::InvalidArgument(format!("round {index} out of range")))?;
    match &round.program {
        RoundProgram::Subcube { channel_bits } => {
            let d = schedule
                .dimension
                .ok_or_else(|| Error::Contract("subcube program without a dimension".into()))?;
            let m = channel_bits.len();
            let detuning = if m == 0 { 0.0 } else { budget.width() / m as f64 };
            Ok(RealisedProgram::Subcube(SubcubeSplit::new(d, channel_bits, detuning, coupling)?))
        }
        RoundProgram::Pairing { matching } => {
            let detuning = 2.0 * budget.width() / schedule.nodes as f64;
            Ok(RealisedProgram::Pairing(PairingProgram::new(
                schedule.nodes,
                matching,
                detuning,
                coupling,
            )?))
        }
    }
}

impl Schedule {
    /// Fills in every task's phase correction from the exact single-particle
    /// amplitude of its round's program.
    pub fn annotate_phases(&mut self, coupling: f64, budget: &BandwidthBudget) -> Result<()> {
        check_coupling(coupling)?;
        let t = transfer_time(coupling);
        for i in 0..self.rounds.len() {
            let program = realise_round(self, i, coupling, budget)?;
            let round = &mut self.rounds[i];
            match program {
                RealisedProgram::Subcube(split) => {
                    let factors = hypercube_factors(&split, t);
                    for task in &mut round.tasks {
                        if split.antipode(task.sender) != task.receiver {
                            return Err(Error::Contract(format!(
                                "round {i}: {} is not the subcube antipode of {}",
                                task.receiver, task.sender
                            )));
                        }
                        let alpha = factors.iter().enumerate().fold(Complex64::new(1.0, 0.0), |acc, (j, f)| {
                            acc * f[(task.receiver >> j) & 1][(task.sender >> j) & 1]
                        });
                        task.phase = Some(correction_phase_of(alpha));
                    }
                }
                RealisedProgram::Pairing(pairing) => {
                    let k = evolve_modes(&program_pairing(&pairing)?, t)?;
                    for task in &mut round.tasks {
                        task.phase = Some(correction_phase_of(transfer_amplitude(&k, task.sender, task.receiver)?));
                    }
                }
            }
        }
        Ok(())
    }
}
