//! Single-particle mode evolution `K(t) = exp(-iΩt)`.
//!
//! A single excitation created on mode `s` evolves to `Σ_k K[k][s] a†_k`, so
//! the transfer amplitude from sender `s` to receiver `r` is `K[r][s]`. With a
//! real symmetric `Ω` the matrix `K` is symmetric too, so the convention only
//! matters for bookkeeping.
//!
//! Two routes are offered. [`evolve_modes`] diagonalises an arbitrary
//! coupling matrix. [`evolve_hypercube_fast`] uses the fact that a programmed
//! hypercube is a sum of commuting single-bit terms, so `K` is a tensor
//! product of `2×2` exponentials and never needs to be materialised.

use alloc::format;
use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)] // inherent once std is linked
use num_traits::Float;

use crate::linalg::{fingerprint, SymmetricSpectrum};
use crate::netgraph::{CouplingMatrix, SubcubeSplit};
use crate::{Error, Result};

/// Largest coupling matrix handled by the dense path (a 12-cube).
pub const MAX_DENSE_MODES: usize = 4096;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub type Factor2 = [[Complex64; 2]; 2];

#[derive(Debug, Clone, PartialEq)]
enum Repr {
    Dense(Vec<Complex64>),
    /// One 2×2 factor per bit position, bit 0 first.
    Factored(Vec<Factor2>),
}

/// The unitary `K(t)` together with the time and a fingerprint of the
/// coupling matrix it was computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeEvolution {
    n: usize,
    time: f64,
    fingerprint: u64,
    repr: Repr,
}

impl ModeEvolution {
    pub fn size(&self) -> usize {
        self.n
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn is_factored(&self) -> bool {
        matches!(self.repr, Repr::Factored(_))
    }

    /// Entry `K[row][col]`.
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        match &self.repr {
            Repr::Dense(k) => k[row * self.n + col],
            Repr::Factored(factors) => factored_entry(factors, row, col),
        }
    }

    /// Row-major dense copy. Costs `O(d·4^d)` for a factored evolution.
    pub fn to_dense(&self) -> Vec<Complex64> {
        match &self.repr {
            Repr::Dense(k) => k.clone(),
            Repr::Factored(factors) => {
                let n = self.n;
                let mut out = Vec::with_capacity(n * n);
                for r in 0..n {
                    for c in 0..n {
                        out.push(factored_entry(factors, r, c));
                    }
                }
                out
            }
        }
    }

    /// `max |K†K − I|` over all entries.
    pub fn unitarity_defect(&self) -> f64 {
        match &self.repr {
            Repr::Factored(factors) => {
                // K†K − I for a tensor product is bounded by the factor defects;
                // report the dense value when it is cheap enough
                if self.n <= 256 {
                    dense_unitarity_defect(self.n, &self.to_dense())
                } else {
                    factors.iter().map(factor_unitarity_defect).fold(0.0, f64::max)
                }
            }
            Repr::Dense(k) => dense_unitarity_defect(self.n, k),
        }
    }

    /// Matrix product `self · other` (dense).
    pub fn compose(&self, other: &ModeEvolution) -> Result<ModeEvolution> {
        if self.n != other.n {
            return Err(Error::InvalidArgument(format!(
                "cannot compose evolutions of size {} and {}",
                self.n, other.n
            )));
        }
        let n = self.n;
        let (a, b) = (self.to_dense(), other.to_dense());
        let mut out = alloc::vec![ZERO; n * n];
        for i in 0..n {
            for k in 0..n {
                let aik = a[i * n + k];
                if aik == ZERO {
                    continue;
                }
                for j in 0..n {
                    out[i * n + j] += aik * b[k * n + j];
                }
            }
        }
        let fp = if self.fingerprint == other.fingerprint { self.fingerprint } else { 0 };
        Ok(ModeEvolution {
            n,
            time: self.time + other.time,
            fingerprint: fp,
            repr: Repr::Dense(out),
        })
    }
}

fn dense_unitarity_defect(n: usize, k: &[Complex64]) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            let mut acc = ZERO;
            for r in 0..n {
                acc += k[r * n + i].conj() * k[r * n + j];
            }
            if i == j {
                acc -= ONE;
            }
            worst = worst.max(acc.norm());
        }
    }
    worst
}

fn factor_unitarity_defect(f: &Factor2) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let acc = f[0][i].conj() * f[0][j] + f[1][i].conj() * f[1][j];
            let expect = if i == j { ONE } else { ZERO };
            worst = worst.max((acc - expect).norm());
        }
    }
    worst
}

fn factored_entry(factors: &[Factor2], row: usize, col: usize) -> Complex64 {
    let mut acc = ONE;
    for (j, f) in factors.iter().enumerate() {
        acc *= f[(row >> j) & 1][(col >> j) & 1];
        if acc == ZERO {
            break;
        }
    }
    acc
}

/// Cached eigendecomposition of a coupling matrix, for evaluating `K(t)` at
/// many times.
pub struct ModeSpectrum {
    spectrum: SymmetricSpectrum,
    fingerprint: u64,
}

impl ModeSpectrum {
    pub fn new(omega: &CouplingMatrix) -> Result<Self> {
        let n = omega.size();
        if n > MAX_DENSE_MODES {
            return Err(Error::Resource(format!(
                "dense mode evolution is capped at {MAX_DENSE_MODES} modes, got {n}; use the factored hypercube path"
            )));
        }
        let entries = omega.as_row_major();
        if let Some(pos) = entries.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: pos / n, col: pos % n });
        }
        if let Some((row, col, defect)) = omega.first_asymmetry() {
            return Err(Error::NonSymmetric { row, col, defect });
        }
        Ok(Self {
            spectrum: SymmetricSpectrum::new(n, entries)?,
            fingerprint: fingerprint(n, |i, j| omega.get(i, j)),
        })
    }

    /// Normal-mode frequencies, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut v = self.spectrum.eigenvalues().to_vec();
        v.sort_by(f64::total_cmp);
        v
    }

    pub fn evolve(&self, t: f64) -> ModeEvolution {
        let n = self.spectrum.dim();
        let repr = if t == 0.0 {
            Repr::Dense(identity(n))
        } else {
            Repr::Dense(self.spectrum.propagator(t))
        };
        ModeEvolution {
            n,
            time: t,
            fingerprint: self.fingerprint,
            repr,
        }
    }
}

fn identity(n: usize) -> Vec<Complex64> {
    let mut k = alloc::vec![ZERO; n * n];
    for i in 0..n {
        k[i * n + i] = ONE;
    }
    k
}

/// `K(t) = exp(-iΩt)` by real-symmetric eigendecomposition. `K(0)` is the
/// identity exactly.
pub fn evolve_modes(omega: &CouplingMatrix, t: f64) -> Result<ModeEvolution> {
    Ok(ModeSpectrum::new(omega)?.evolve(t))
}

/// `exp(-i(a X + b Z) t)` in the basis (bit 0, bit 1).
pub fn two_level_propagator(coupling: f64, half_detuning: f64, t: f64) -> Factor2 {
    let lambda = coupling.hypot(half_detuning);
    if lambda == 0.0 {
        return [[ONE, ZERO], [ZERO, ONE]];
    }
    let (s, c) = (lambda * t).sin_cos();
    let x = s * coupling / lambda;
    let z = s * half_detuning / lambda;
    [
        [Complex64::new(c, -z), Complex64::new(0.0, -x)],
        [Complex64::new(0.0, -x), Complex64::new(c, z)],
    ]
}

/// Per-bit factors of `K(t)` for a programmed hypercube.
pub fn hypercube_factors(split: &SubcubeSplit, t: f64) -> Vec<Factor2> {
    (0..split.dimension())
        .map(|j| {
            let half = if split.is_channel_bit(j) { 0.5 * split.detuning() } else { 0.0 };
            if t == 0.0 {
                [[ONE, ZERO], [ZERO, ONE]]
            } else {
                two_level_propagator(split.coupling(), half, t)
            }
        })
        .collect()
}

/// `K(t)` of a programmed hypercube as a tensor product of `2×2` factors.
/// Individual entries cost `O(d)`; [`ModeEvolution::to_dense`] costs
/// `O(d·4^d)`.
pub fn evolve_hypercube_fast(split: &SubcubeSplit, t: f64) -> ModeEvolution {
    let n = split.node_count();
    let fp = if n <= MAX_DENSE_MODES {
        fingerprint(n, |i, j| {
            if i == j {
                split.frequency(i)
            } else if (i ^ j).count_ones() == 1 {
                split.coupling()
            } else {
                0.0
            }
        })
    } else {
        0
    };
    ModeEvolution {
        n,
        time: t,
        fingerprint: fp,
        repr: Repr::Factored(hypercube_factors(split, t)),
    }
}

/// `K[receiver][sender]` of a programmed hypercube in `O(d)`, without
/// building a [`ModeEvolution`].
pub fn hypercube_amplitude(split: &SubcubeSplit, t: f64, sender: usize, receiver: usize) -> Result<Complex64> {
    let n = split.node_count();
    for index in [sender, receiver] {
        if index >= n {
            return Err(Error::NodeOutOfRange { index, nodes: n });
        }
    }
    Ok(factored_entry(&hypercube_factors(split, t), receiver, sender))
}

/// Amplitude `α = K[receiver][sender]` carried from sender to receiver.
pub fn transfer_amplitude(k: &ModeEvolution, sender: usize, receiver: usize) -> Result<Complex64> {
    for index in [sender, receiver] {
        if index >= k.size() {
            return Err(Error::NodeOutOfRange { index, nodes: k.size() });
        }
    }
    Ok(k.get(receiver, sender))
}
