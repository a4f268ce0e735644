//! Hard-core (qubit) networks.
//!
//! Replacing `a†` by a qubit raising operator makes the network interacting,
//! so `K(t)` no longer suffices. The Hamiltonian conserves the number of
//! network excitations, and the auxiliary qubits are static, so each
//! `(auxiliary mask, k)` block evolves under the Hamiltonian restricted to
//! the `C(N, k)` configurations with `k` excited sites.
//!
//! Sector configurations are bitmasks enumerated in increasing numeric order,
//! which is colexicographic order, so the rank of a configuration is
//! `Σ_i C(p_i, i + 1)` over its set bits `p_0 < p_1 < …`.

use alloc::collections::btree_map::Entry;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use super::{FockKey, QubitNetworkState};
use crate::linalg::{SparseSymmetric, SymmetricSpectrum};
use crate::netgraph::CouplingMatrix;
use crate::{Error, Result};

/// Largest number of simultaneous network excitations.
pub const MAX_QUBIT_EXCITATIONS: usize = 4;
/// Largest sector dimension `C(N, k)`.
pub const MAX_SECTOR_DIM: usize = 200_000;
/// Sectors up to this dimension are diagonalised densely; larger ones use
/// sparse Taylor propagation.
pub const DENSE_SECTOR_LIMIT: usize = 512;

const MAX_QUBIT_SITES: usize = 64;

/// How a sector propagator is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SectorMethod {
    /// Dense eigendecomposition up to [`DENSE_SECTOR_LIMIT`], sparse Taylor
    /// beyond.
    Auto,
    Dense,
    SparseTaylor,
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    usize::try_from(acc).unwrap_or(usize::MAX)
}

struct Sector {
    sites: usize,
    excitations: usize,
    basis: Vec<u64>,
    binom: Vec<Vec<usize>>,
}

impl Sector {
    fn new(sites: usize, excitations: usize) -> Result<Self> {
        let dim = binomial(sites, excitations);
        if dim > MAX_SECTOR_DIM {
            return Err(Error::Resource(format!(
                "qubit sector C({sites}, {excitations}) = {dim} exceeds {MAX_SECTOR_DIM}"
            )));
        }
        let binom = (0..=sites).map(|n| (0..=excitations).map(|k| binomial(n, k)).collect()).collect();
        let mut basis = Vec::with_capacity(dim);
        if excitations == 0 {
            basis.push(0);
        } else {
            // Gosper's hack
            let limit = 1u128 << sites;
            let mut x: u64 = (1u64 << excitations) - 1;
            while u128::from(x) < limit {
                basis.push(x);
                let c = x & x.wrapping_neg();
                let r = x.wrapping_add(c);
                if r == 0 {
                    break;
                }
                x = (((r ^ x) >> 2) / c) | r;
            }
        }
        debug_assert_eq!(basis.len(), dim);
        Ok(Self {
            sites,
            excitations,
            basis,
            binom,
        })
    }

    fn dim(&self) -> usize {
        self.basis.len()
    }

    fn rank(&self, mask: u64) -> usize {
        let mut r = 0;
        let mut m = mask;
        let mut i = 0;
        while m != 0 {
            let p = m.trailing_zeros() as usize;
            i += 1;
            r += self.binom[p][i];
            m &= m - 1;
        }
        r
    }

    fn hamiltonian(&self, omega: &CouplingMatrix) -> SparseSymmetric {
        let n = self.sites;
        let neighbours: Vec<Vec<(usize, f64)>> = (0..n)
            .map(|u| (0..n).filter(|&v| v != u && omega.get(u, v) != 0.0).map(|v| (v, omega.get(u, v))).collect())
            .collect();
        let rows = self
            .basis
            .iter()
            .map(|&b| {
                let mut row = Vec::with_capacity(1 + self.excitations * 8);
                let mut diag = 0.0;
                let mut occ = b;
                while occ != 0 {
                    let u = occ.trailing_zeros() as usize;
                    occ &= occ - 1;
                    diag += omega.get(u, u);
                    for &(v, w) in &neighbours[u] {
                        if b & (1 << v) == 0 {
                            row.push((self.rank(b ^ (1 << u) ^ (1 << v)), w));
                        }
                    }
                }
                row.push((self.rank(b), diag));
                row
            })
            .collect();
        SparseSymmetric::from_rows(rows)
    }
}

enum Propagator {
    Dense(SymmetricSpectrum),
    Sparse(SparseSymmetric),
}

impl Propagator {
    fn build(h: SparseSymmetric, method: SectorMethod) -> Result<Self> {
        let dense = match method {
            SectorMethod::Auto => h.dim() <= DENSE_SECTOR_LIMIT,
            SectorMethod::Dense => true,
            SectorMethod::SparseTaylor => false,
        };
        Ok(if dense {
            Propagator::Dense(SymmetricSpectrum::new(h.dim(), &h.to_dense())?)
        } else {
            Propagator::Sparse(h)
        })
    }

    fn apply(&self, t: f64, v: &[Complex64]) -> Vec<Complex64> {
        match self {
            Propagator::Dense(s) => s.apply(t, v),
            Propagator::Sparse(h) => h.propagate(t, v),
        }
    }
}

/// `U(t)|ψ⟩` for a hard-core network with coupling matrix `omega`.
pub fn evolve_qubit(state: &QubitNetworkState, omega: &CouplingMatrix, t: f64) -> Result<QubitNetworkState> {
    evolve_qubit_with(state, omega, t, SectorMethod::Auto)
}

pub fn evolve_qubit_with(
    state: &QubitNetworkState,
    omega: &CouplingMatrix,
    t: f64,
    method: SectorMethod,
) -> Result<QubitNetworkState> {
    let fock = state.as_fock();
    let n = fock.modes();
    if omega.size() != n {
        return Err(Error::InvalidArgument(format!(
            "coupling matrix has {} sites but the state has {n}",
            omega.size()
        )));
    }
    if n > MAX_QUBIT_SITES {
        return Err(Error::Resource(format!("qubit networks are limited to {MAX_QUBIT_SITES} sites")));
    }
    if let Some((row, col, defect)) = omega.first_asymmetry() {
        return Err(Error::NonSymmetric { row, col, defect });
    }
    let k_max = fock.max_network_excitations();
    if k_max > MAX_QUBIT_EXCITATIONS {
        return Err(Error::Resource(format!(
            "{k_max} network excitations exceed the qubit limit of {MAX_QUBIT_EXCITATIONS}"
        )));
    }

    let mut sectors: BTreeMap<usize, (Sector, Propagator)> = BTreeMap::new();
    let mut blocks: BTreeMap<(u32, usize), Vec<Complex64>> = BTreeMap::new();
    for (key, &amp) in fock.iter() {
        let k = key.network_excitations();
        let sector = match sectors.entry(k) {
            Entry::Occupied(e) => &e.into_mut().0,
            Entry::Vacant(e) => {
                let sector = Sector::new(n, k)?;
                let prop = Propagator::build(sector.hamiltonian(omega), method)?;
                &e.insert((sector, prop)).0
            }
        };
        let mask = key
            .occupations
            .iter()
            .enumerate()
            .fold(0u64, |m, (i, &o)| if o == 1 { m | (1 << i) } else { m });
        let block = blocks
            .entry((key.aux, k))
            .or_insert_with(|| vec![Complex64::new(0.0, 0.0); sector.dim()]);
        block[sector.rank(mask)] = amp;
    }

    let mut out = BTreeMap::new();
    for ((aux, k), v) in blocks {
        let (sector, prop) = &sectors[&k];
        let evolved = if t == 0.0 { v } else { prop.apply(t, &v) };
        for (i, a) in evolved.into_iter().enumerate() {
            if a == Complex64::new(0.0, 0.0) {
                continue;
            }
            let b = sector.basis[i];
            let occupations = (0..n).map(|s| ((b >> s) & 1) as u8).collect();
            out.insert(FockKey { aux, occupations }, a);
        }
    }
    QubitNetworkState::from_fock(fock.with_same_shape(out))
}

#[cfg(test)]
mod tests {
    use super::super::{bell_fidelity, evolve_oscillator, prepare_initial, QubitNetworkState};
    use super::*;
    use crate::netgraph::{program_subcube_split, SubcubeSplit};

    #[test]
    fn colex_rank_is_position() {
        let s = Sector::new(7, 3).unwrap();
        assert_eq!(s.dim(), 35);
        for (i, &b) in s.basis.iter().enumerate() {
            assert_eq!(b.count_ones(), 3);
            assert_eq!(s.rank(b), i);
        }
        assert_eq!(Sector::new(64, 2).unwrap().dim(), 2016);
    }

    #[test]
    fn oversized_sector_is_a_resource_error() {
        assert!(matches!(Sector::new(64, 4), Err(Error::Resource(_))));
    }

    #[test]
    fn single_excitation_matches_oscillator() {
        let split = SubcubeSplit::with_eta(3, &[2], 0.3, 1.0).unwrap();
        let om = program_subcube_split(&split).unwrap();
        let t = 1.234;
        let q = evolve_qubit(&QubitNetworkState::prepare_initial(8, &[5]).unwrap(), &om, t).unwrap();
        let o = evolve_oscillator(&prepare_initial(8, &[5]).unwrap(), &om, t).unwrap();
        for (k, a) in o.iter() {
            assert!((q.as_fock().amplitude(k) - a).norm() < 1e-10);
        }
        assert_eq!(q.as_fock().support_len(), o.support_len());
    }

    #[test]
    fn dense_and_taylor_sectors_agree() {
        let split = SubcubeSplit::with_eta(4, &[3], 0.15, 1.0).unwrap();
        let om = program_subcube_split(&split).unwrap();
        let st = QubitNetworkState::prepare_initial(16, &[0, 8, 3]).unwrap();
        let t = split.transfer_time();
        let a = evolve_qubit_with(&st, &om, t, SectorMethod::Dense).unwrap();
        let b = evolve_qubit_with(&st, &om, t, SectorMethod::SparseTaylor).unwrap();
        for (k, x) in a.as_fock().iter() {
            assert!((b.as_fock().amplitude(k) - x).norm() < 1e-10);
        }
        assert!((a.as_fock().norm() - 1.0).abs() < 1e-10);
        assert!((b.as_fock().norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn excitation_cap() {
        let split = SubcubeSplit::new(3, &[], 0.0, 1.0).unwrap();
        let om = program_subcube_split(&split).unwrap();
        let st = QubitNetworkState::prepare_initial(8, &[0, 1, 2, 3, 4]).unwrap();
        assert!(matches!(evolve_qubit(&st, &om, 1.0), Err(Error::Resource(_))));
    }

    #[test]
    fn hard_core_blocks_perfect_transfer() {
        // two excitations swapping across a resonant pair cannot pass
        let split = SubcubeSplit::new(1, &[], 0.0, 1.0).unwrap();
        let om = program_subcube_split(&split).unwrap();
        let t = split.transfer_time();
        let st = QubitNetworkState::prepare_initial(2, &[0, 1]).unwrap();
        let out = evolve_qubit(&st, &om, t).unwrap().into_fock();
        assert!(out.is_hard_core());
        let f = bell_fidelity(&out, 0, 1, core::f64::consts::FRAC_PI_2).unwrap();
        assert!(f.fidelity < 1.0 - 1e-3);
    }
}
