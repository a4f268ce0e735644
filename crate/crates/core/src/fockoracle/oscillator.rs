//! Linear (bosonic) evolution through the mode matrix.
//!
//! A basis state `Π_k (a†_k)^{n_k} / √(n_k!) |0⟩` evolves to
//! `Π_k (Σ_l K[l][k] a†_l)^{n_k} / √(n_k!) |0⟩`; the product is re-expanded
//! in the occupation basis one creation operator at a time, where
//! `a†_l |…n_l…⟩ = √(n_l + 1) |…n_l + 1…⟩`. No Hamiltonian in the Fock basis
//! is ever built.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)] // inherent once std is linked
use num_traits::Float;

use super::{FockKey, FockStateVector};
use crate::modevo::{evolve_modes, ModeEvolution};
use crate::netgraph::CouplingMatrix;
use crate::{Error, Result};

/// `U(t)|ψ⟩` for an oscillator network with coupling matrix `omega`.
pub fn evolve_oscillator(state: &FockStateVector, omega: &CouplingMatrix, t: f64) -> Result<FockStateVector> {
    check_truncation(state)?;
    if omega.size() != state.modes() {
        return Err(Error::InvalidArgument(format!(
            "coupling matrix has {} modes but the state has {}",
            omega.size(),
            state.modes()
        )));
    }
    let k = evolve_modes(omega, t)?;
    evolve_oscillator_with(state, &k)
}

fn check_truncation(state: &FockStateVector) -> Result<()> {
    let needed = state.max_network_excitations().max(state.senders().len());
    if (state.n_max() as usize) < needed {
        return Err(Error::Truncation {
            n_max: state.n_max(),
            excitations: needed,
        });
    }
    Ok(())
}

/// As [`evolve_oscillator`] with a precomputed `K(t)`.
pub fn evolve_oscillator_with(state: &FockStateVector, k: &ModeEvolution) -> Result<FockStateVector> {
    check_truncation(state)?;
    let n = state.modes();
    if k.size() != n {
        return Err(Error::InvalidArgument(format!(
            "mode evolution has {} modes but the state has {n}",
            k.size()
        )));
    }
    let zero = Complex64::new(0.0, 0.0);
    // columns[k] = nonzero (l, K[l][k])
    let columns: Vec<Vec<(usize, Complex64)>> = (0..n)
        .map(|c| (0..n).filter_map(|l| Some((l, k.get(l, c))).filter(|p| p.1 != zero)).collect())
        .collect();
    let sqrt_table: Vec<f64> = (0..=state.n_max() as usize + 1).map(|i| (i as f64).sqrt()).collect();

    let mut out: BTreeMap<FockKey, Complex64> = BTreeMap::new();
    for (key, &amp) in state.iter() {
        let mut norm = 1.0;
        for &nk in &key.occupations {
            norm *= sqrt_table[2..=(nk as usize).max(1)].iter().product::<f64>();
        }
        let mut cur: BTreeMap<Vec<u8>, Complex64> = BTreeMap::new();
        cur.insert(vec![0u8; n], amp / norm);
        for (mode, &nk) in key.occupations.iter().enumerate() {
            for _ in 0..nk {
                cur = apply_creation(&cur, &columns[mode], &sqrt_table);
            }
        }
        for (occ, a) in cur {
            let slot = out
                .entry(FockKey {
                    aux: key.aux,
                    occupations: occ,
                })
                .or_insert(zero);
            *slot += a;
        }
    }
    out.retain(|_, a| *a != zero);
    Ok(state.with_same_shape(out))
}

/// Applies `Σ_l c_l a†_l`.
fn apply_creation(
    state: &BTreeMap<Vec<u8>, Complex64>,
    column: &[(usize, Complex64)],
    sqrt_table: &[f64],
) -> BTreeMap<Vec<u8>, Complex64> {
    let mut next: BTreeMap<Vec<u8>, Complex64> = BTreeMap::new();
    for (occ, &a) in state {
        for &(l, c) in column {
            let mut o = occ.clone();
            let before = o[l] as usize;
            o[l] += 1;
            *next.entry(o).or_insert(Complex64::new(0.0, 0.0)) += a * c * sqrt_table[before + 1];
        }
    }
    next
}

#[cfg(test)]
mod tests {
    use super::super::{prepare_initial, prepare_initial_truncated};
    use super::*;
    use crate::netgraph::{program_subcube_split, SubcubeSplit};

    #[test]
    fn truncation_too_small_is_an_error() {
        let split = SubcubeSplit::new(2, &[], 0.0, 1.0).unwrap();
        let om = program_subcube_split(&split).unwrap();
        let st = prepare_initial_truncated(4, &[0, 3], 1).unwrap();
        assert!(matches!(
            evolve_oscillator(&st, &om, 1.0),
            Err(Error::Truncation { n_max: 1, excitations: 2 })
        ));
    }

    #[test]
    fn two_senders_on_square_bunch_and_keep_norm() {
        let split = SubcubeSplit::new(2, &[], 0.0, 1.0).unwrap();
        let om = program_subcube_split(&split).unwrap();
        let st = prepare_initial(4, &[0b00, 0b11]).unwrap();
        // quarter transfer time spreads both excitations over the square
        let out = evolve_oscillator(&st, &om, split.transfer_time() / 2.0).unwrap();
        assert!((out.norm() - 1.0).abs() < 1e-10);
        assert!(out.iter().any(|(k, a)| k.occupations.contains(&2) && a.norm() > 1e-3));
        // sector weights are conserved branch by branch
        for (sector, w) in out.sector_weights() {
            let expect = match sector {
                0 | 4 => 0.25,
                2 => 0.5,
                _ => panic!("unexpected sector {sector}"),
            };
            assert!((w - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn size_mismatch() {
        let split = SubcubeSplit::new(2, &[], 0.0, 1.0).unwrap();
        let om = program_subcube_split(&split).unwrap();
        let st = prepare_initial(3, &[0]).unwrap();
        assert!(evolve_oscillator(&st, &om, 1.0).is_err());
    }
}
