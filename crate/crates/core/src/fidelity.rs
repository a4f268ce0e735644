//! Bell-pair fidelities: closed forms, cross-talk bounds and resonances.
//!
//! The hypercube bound is `1 − (3/2)·m·η²·sin²ξ_T` with `η = 2Ω0/Δω`. The
//! phase `ξ_T` is written as `√(1 + η⁻²)`, which has no time dependence. The
//! exact mode evolution of a detuned channel bit over `T = π/(2Ω0)` is a
//! rotation by `Ω0·T·√(1 + η⁻²) = (π/2)·√(1 + η⁻²)`, and its leakage vanishes
//! where that angle is a multiple of π. Both readings are available through
//! [`XiConvention`]; [`calibrate_xi_scale`] recovers the factor from the
//! located resonances instead of assuming it.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64;
#[allow(unused_imports)] // inherent once std is linked
use num_traits::Float;

use crate::modevo::{evolve_hypercube_fast, evolve_modes, hypercube_amplitude, transfer_amplitude};
use crate::netgraph::{program_subcube_split, SubcubeSplit};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FidelityMethod {
    AnalyticBound,
    Amplitude,
    ExactOracle,
}

impl FidelityMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            FidelityMethod::AnalyticBound => "analytic-bound",
            FidelityMethod::Amplitude => "amplitude",
            FidelityMethod::ExactOracle => "exact-oracle",
        }
    }
}

/// Fidelity of the pair shared between a sender's auxiliary qubit and its
/// receiver, after the receiver applies `correction_phase`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairFidelity {
    /// `(sender, receiver)`, when known.
    pub endpoints: Option<(usize, usize)>,
    pub fidelity: f64,
    pub correction_phase: f64,
    pub method: FidelityMethod,
}

impl PairFidelity {
    pub fn with_endpoints(mut self, sender: usize, receiver: usize) -> Self {
        self.endpoints = Some((sender, receiver));
        self
    }
}

/// Phase in `[0, 2π)` that undoes the phase of `alpha`.
pub fn correction_phase_of(alpha: Complex64) -> f64 {
    if alpha == Complex64::new(0.0, 0.0) {
        return 0.0;
    }
    let mut phi = -alpha.arg();
    if phi < 0.0 {
        phi += TAU;
    }
    if phi >= TAU {
        0.0
    } else {
        phi
    }
}

/// Single-sender Bell fidelity `((1 + |α|)/2)²` after the correction
/// `φ = −arg α`.
pub fn pair_fidelity_from_amplitude(alpha: Complex64) -> Result<PairFidelity> {
    let mag = alpha.norm();
    if !mag.is_finite() || mag > 1.0 + 1e-9 {
        return Err(Error::InvalidAmplitude(mag));
    }
    let mag = mag.min(1.0);
    let f = 0.5 * (1.0 + mag);
    Ok(PairFidelity {
        endpoints: None,
        fidelity: f * f,
        correction_phase: correction_phase_of(alpha),
        method: FidelityMethod::Amplitude,
    })
}

/// How `ξ_T` is evaluated in the hypercube bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum XiConvention {
    /// `ξ_T = √(1 + η⁻²)`, no time factor.
    Printed,
    /// `ξ_T = Ω0·T·√(1 + η⁻²)` with `T = π/(2Ω0)`; matches the exact
    /// single-bit evolution.
    TransferTime,
    /// `ξ_T = scale·√(1 + η⁻²)` with a scale from [`calibrate_xi_scale`].
    Scaled(f64),
}

impl XiConvention {
    pub fn scale(self) -> f64 {
        match self {
            XiConvention::Printed => 1.0,
            XiConvention::TransferTime => FRAC_PI_2,
            XiConvention::Scaled(s) => s,
        }
    }
}

pub fn xi_t(eta: f64, convention: XiConvention) -> f64 {
    convention.scale() * (1.0 + 1.0 / (eta * eta)).sqrt()
}

fn clamp_unit(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

/// Hypercube parallel-transfer bound with the printed `ξ_T`.
pub fn hypercube_bound(channel_bits: u32, eta: f64) -> f64 {
    hypercube_bound_with(channel_bits, eta, XiConvention::Printed)
}

/// `1 − (3/2)·m·η²·sin²ξ_T`, clamped to `[0, 1]`. `m = 0` gives 1.
pub fn hypercube_bound_with(channel_bits: u32, eta: f64, convention: XiConvention) -> f64 {
    if channel_bits == 0 || eta == 0.0 {
        return 1.0;
    }
    let s = xi_t(eta, convention).sin();
    clamp_unit(1.0 - 1.5 * channel_bits as f64 * eta * eta * s * s)
}

/// The bound with `sin²ξ_T = 1`.
pub fn hypercube_bound_worst_case(channel_bits: u32, eta: f64) -> f64 {
    if channel_bits == 0 {
        return 1.0;
    }
    clamp_unit(1.0 - 1.5 * channel_bits as f64 * eta * eta)
}

/// Complete-graph pairing bound `1 − (π²/2)·η²`, clamped to `[0, 1]`.
pub fn complete_bound(eta: f64) -> f64 {
    clamp_unit(1.0 - 0.5 * PI * PI * eta * eta)
}

/// Leakage `|K|` from a sender into the neighbouring channel's receiver,
/// measured on an `(m+1)`-cube split with channel bits `1..=m` and unit
/// coupling over `T = π/2`.
pub fn channel_leakage(channel_bits: u32, eta: f64) -> Result<f64> {
    if channel_bits == 0 {
        return Ok(0.0);
    }
    let d = channel_bits + 1;
    let bits: Vec<u32> = (1..=channel_bits).collect();
    let split = SubcubeSplit::with_eta(d, &bits, eta, 1.0)?;
    let t = split.transfer_time();
    let (sender, leak_target) = (0usize, 0b11usize);
    let amp = if d <= 6 {
        let k = evolve_modes(&program_subcube_split(&split)?, t)?;
        transfer_amplitude(&k, sender, leak_target)?
    } else {
        transfer_amplitude(&evolve_hypercube_fast(&split, t), sender, leak_target)?
    };
    Ok(amp.norm())
}

/// Resonant detuning ratios in `[lo, hi]` at which the exact channel leakage
/// vanishes (`≤ 1e−10`), largest first, at most `count` of them.
///
/// The range is scanned with a step proportional to `η²`, which is finer than
/// the spacing of consecutive resonances, and every local minimum of the
/// leakage is refined by golden-section search.
pub fn find_resonances(channel_bits: u32, range: (f64, f64), count: usize) -> Result<Vec<f64>> {
    let (lo, hi) = range;
    if channel_bits == 0 {
        return Err(Error::InvalidArgument("resonances need at least one channel bit".into()));
    }
    if !(lo > 0.0 && hi <= 2.0 && lo < hi) {
        return Err(Error::InvalidArgument(format!(
            "resonance search range must satisfy 0 < lo < hi <= 2, got [{lo}, {hi}]"
        )));
    }
    let leak = |eta: f64| channel_leakage(channel_bits, eta);

    let mut found = Vec::new();
    let mut prev2 = (hi, leak(hi)?);
    let first = (hi - scan_step(hi)).max(lo);
    let mut prev1 = (first, leak(first)?);
    while found.len() < count && prev1.0 > lo {
        let eta = (prev1.0 - scan_step(prev1.0)).max(lo);
        let cur = (eta, leak(eta)?);
        if prev1.1 < prev2.1 && prev1.1 <= cur.1 {
            let root = golden_section(&leak, cur.0, prev2.0)?;
            if leak(root)? <= 1e-10 {
                found.push(root);
            }
        }
        prev2 = prev1;
        prev1 = cur;
    }
    found.sort_by(|a, b| b.total_cmp(a));
    found.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());
    Ok(found)
}

fn scan_step(eta: f64) -> f64 {
    0.02 * eta * eta * (1.0 + eta * eta).sqrt()
}

fn golden_section<F>(f: &F, mut a: f64, mut b: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let inv_phi = 0.5 * (5.0f64.sqrt() - 1.0);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    for _ in 0..200 {
        if (b - a).abs() <= 4.0 * f64::EPSILON * b.abs() {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc < fd { c } else { d })
}

/// Scale of `ξ_T` recovered from the two largest resonances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XiCalibration {
    /// `ξ_T = scale·√(1 + η⁻²)`.
    pub scale: f64,
    /// The two resonances used, largest first.
    pub resonances: [f64; 2],
}

impl XiCalibration {
    pub fn convention(&self) -> XiConvention {
        XiConvention::Scaled(self.scale)
    }

    /// Ratio to the printed formula's scale of 1.
    pub fn discrepancy_factor(&self) -> f64 {
        self.scale
    }
}

/// Consecutive zeros of `sin ξ_T` are π apart, so two consecutive exact
/// resonances fix the scale in front of `√(1 + η⁻²)`.
pub fn calibrate_xi_scale(channel_bits: u32) -> Result<XiCalibration> {
    let res = find_resonances(channel_bits, (0.05, 2.0), 2)?;
    if res.len() < 2 {
        return Err(Error::Numerical("fewer than two resonances in (0.05, 2]".into()));
    }
    let p = |eta: f64| (1.0 + 1.0 / (eta * eta)).sqrt();
    Ok(XiCalibration {
        scale: PI / (p(res[1]) - p(res[0])),
        resonances: [res[0], res[1]],
    })
}

/// Phase `φ = −arg α` the receiver applies after a subcube transfer from
/// `sender` to its antipode `receiver`.
pub fn phase_correction(split: &SubcubeSplit, sender: usize, receiver: usize, t: f64) -> Result<f64> {
    let n = split.node_count();
    for index in [sender, receiver] {
        if index >= n {
            return Err(Error::NodeOutOfRange { index, nodes: n });
        }
    }
    if split.antipode(sender) != receiver {
        return Err(Error::Contract(format!(
            "node {receiver} is not the subcube antipode of {sender} (expected {})",
            split.antipode(sender)
        )));
    }
    Ok(correction_phase_of(hypercube_amplitude(split, t, sender, receiver)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn amplitude_closed_form() {
        let f = pair_fidelity_from_amplitude(Complex64::new(1.0, 0.0)).unwrap();
        assert_eq!(f.fidelity, 1.0);
        let f = pair_fidelity_from_amplitude(Complex64::new(0.0, 0.0)).unwrap();
        assert_eq!(f.fidelity, 0.25);
        let f = pair_fidelity_from_amplitude(Complex64::from_polar(0.9, PI / 3.0)).unwrap();
        assert!((f.fidelity - 0.9025).abs() < 1e-12);
        assert!((f.correction_phase - (TAU - PI / 3.0)).abs() < 1e-12);
        assert_eq!(f.method, FidelityMethod::Amplitude);
    }

    #[test]
    fn amplitude_above_one_is_rejected() {
        assert!(matches!(
            pair_fidelity_from_amplitude(Complex64::new(1.0 + 1e-6, 0.0)),
            Err(Error::InvalidAmplitude(_))
        ));
        // roundoff above 1 is tolerated
        let f = pair_fidelity_from_amplitude(Complex64::new(1.0 + 1e-12, 0.0)).unwrap();
        assert_eq!(f.fidelity, 1.0);
    }

    #[test]
    fn hypercube_bound_values() {
        assert_eq!(hypercube_bound(0, 0.7), 1.0);
        assert!((hypercube_bound_worst_case(2, 0.1) - 0.97).abs() < 1e-12);
        // η = 1/√3 puts the transfer-time angle at π
        let eta = 1.0 / 3.0f64.sqrt();
        assert!((hypercube_bound_with(1, eta, XiConvention::TransferTime) - 1.0).abs() < 1e-12);
        // η = 1/√(π² − 1) puts the printed angle at π
        let eta = 1.0 / (PI * PI - 1.0).sqrt();
        assert!((hypercube_bound(1, eta) - 1.0).abs() < 1e-12);
        assert_eq!(hypercube_bound_worst_case(3, 2.0), 0.0);
    }

    #[test]
    fn complete_bound_values() {
        assert!((complete_bound(0.1) - 0.950_651_977_995_1).abs() < 1e-12);
        assert_eq!(complete_bound(0.0), 1.0);
        assert!((complete_bound(0.45) - (1.0 - 0.5 * PI * PI * 0.2025)).abs() < 1e-15);
        assert!(complete_bound(0.45) > 0.0 && complete_bound(0.45) < 1e-3);
        assert_eq!(complete_bound(0.5), 0.0);
    }

    #[test]
    fn bounds_are_monotone_in_eta() {
        let mut last = (1.0, 1.0);
        for i in 1..=400 {
            let eta = i as f64 * 0.005;
            let cur = (hypercube_bound_worst_case(2, eta), complete_bound(eta));
            assert!(cur.0 <= last.0 && cur.1 <= last.1);
            last = cur;
        }
    }

    #[test]
    fn resonances_are_sorted_and_leak_free() {
        let res = find_resonances(1, (0.1, 2.0), 10).unwrap();
        assert!(res.len() >= 3);
        for w in res.windows(2) {
            assert!(w[0] > w[1]);
        }
        for &eta in &res {
            assert!(channel_leakage(1, eta).unwrap() <= 1e-10);
        }
        // zeros of sin((π/2)√(1+η⁻²)) sit at η = 1/√(4n² − 1)
        for (n, &eta) in res.iter().enumerate() {
            let expect = 1.0 / (4.0 * ((n + 1) * (n + 1)) as f64 - 1.0).sqrt();
            assert!((eta - expect).abs() < 1e-9, "{eta} vs {expect}");
        }
        assert_eq!(find_resonances(1, (0.1, 2.0), 1).unwrap().len(), 1);
    }

    #[test]
    fn no_resonance_is_not_an_error() {
        assert!(find_resonances(1, (0.6, 2.0), 5).unwrap().is_empty());
        assert!(find_resonances(0, (0.1, 2.0), 5).is_err());
        assert!(find_resonances(1, (0.0, 2.0), 5).is_err());
        assert!(find_resonances(1, (0.5, 2.5), 5).is_err());
    }

    #[test]
    fn calibration_recovers_transfer_time_factor() {
        for m in 1..=2 {
            let cal = calibrate_xi_scale(m).unwrap();
            assert!((cal.scale - FRAC_PI_2).abs() < 1e-8, "{}", cal.scale);
        }
    }

    #[test]
    fn phase_corrections() {
        let split = SubcubeSplit::new(1, &[], 0.0, 1.0).unwrap();
        let phi = phase_correction(&split, 0, 1, FRAC_PI_2).unwrap();
        assert!((phi - FRAC_PI_2).abs() < 1e-12);

        let split = SubcubeSplit::new(3, &[], 0.0, 1.0).unwrap();
        let phi = phase_correction(&split, 0, 7, FRAC_PI_2).unwrap();
        assert!((phi - 3.0 * FRAC_PI_2).abs() < 1e-12);

        assert!(matches!(phase_correction(&split, 0, 3, FRAC_PI_2), Err(Error::Contract(_))));
        assert!(phase_correction(&split, 0, 8, FRAC_PI_2).is_err());
    }

    #[test]
    fn phase_fast_matches_dense() {
        let split = SubcubeSplit::with_eta(3, &[2], 0.2, 1.0).unwrap();
        let t = split.transfer_time();
        let dense = evolve_modes(&program_subcube_split(&split).unwrap(), t).unwrap();
        for s in 0..8 {
            let r = split.antipode(s);
            let a = correction_phase_of(transfer_amplitude(&dense, s, r).unwrap());
            let b = phase_correction(&split, s, r, t).unwrap();
            let diff = (a - b).rem_euclid(TAU);
            assert!(diff.min(TAU - diff) < 1e-9);
        }
    }
}
