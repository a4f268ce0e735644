//! Small dense/sparse helpers shared by the evolution code.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
#[allow(unused_imports)] // inherent once std is linked
use num_traits::Float;

use crate::{Error, Result};

/// Eigendecomposition `H = V Λ Vᵀ` of a real symmetric matrix.
pub(crate) struct SymmetricSpectrum {
    n: usize,
    values: Vec<f64>,
    // column-major, column k is the k-th eigenvector
    vectors: DMatrix<f64>,
}

impl SymmetricSpectrum {
    /// `entries` is row-major and must already be known to be symmetric.
    pub(crate) fn new(n: usize, entries: &[f64]) -> Result<Self> {
        debug_assert_eq!(entries.len(), n * n);
        if n == 0 {
            return Ok(Self {
                n,
                values: Vec::new(),
                vectors: DMatrix::zeros(0, 0),
            });
        }
        let m = DMatrix::from_row_slice(n, n, entries);
        let eig = SymmetricEigen::try_new(m, f64::EPSILON, 0).ok_or_else(|| {
            Error::Numerical(format!("symmetric QR iteration did not converge for a {n}x{n} matrix"))
        })?;
        if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("non-finite eigenvalue for a {n}x{n} matrix")));
        }
        Ok(Self {
            n,
            values: eig.eigenvalues.iter().copied().collect(),
            vectors: eig.eigenvectors,
        })
    }

    pub(crate) fn dim(&self) -> usize {
        self.n
    }

    pub(crate) fn eigenvalues(&self) -> &[f64] {
        &self.values
    }

    /// Dense `exp(-iHt)`, row-major.
    pub(crate) fn propagator(&self, t: f64) -> Vec<Complex64> {
        let n = self.n;
        let mut vc = self.vectors.clone();
        let mut vs = self.vectors.clone();
        for (k, &lam) in self.values.iter().enumerate() {
            let (s, c) = (lam * t).sin_cos();
            vc.column_mut(k).scale_mut(c);
            vs.column_mut(k).scale_mut(s);
        }
        let vt = self.vectors.transpose();
        let re = vc * &vt;
        let im = vs * &vt;
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                out.push(Complex64::new(re[(i, j)], -im[(i, j)]));
            }
        }
        out
    }

    /// `exp(-iHt) v` without forming the propagator.
    pub(crate) fn apply(&self, t: f64, v: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        let mut w = vec![Complex64::new(0.0, 0.0); n];
        for (k, wk) in w.iter_mut().enumerate() {
            let col = self.vectors.column(k);
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..n {
                acc += v[i] * col[i];
            }
            *wk = acc * Complex64::cis(-self.values[k] * t);
        }
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for (k, wk) in w.iter().enumerate() {
            let col = self.vectors.column(k);
            for i in 0..n {
                out[i] += *wk * col[i];
            }
        }
        out
    }
}

/// Real symmetric matrix in compressed-row form.
pub(crate) struct SparseSymmetric {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseSymmetric {
    /// Builds from per-row `(col, value)` lists. Duplicate columns are summed.
    pub(crate) fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            let mut last: Option<usize> = None;
            for (c, v) in row {
                if last == Some(c) {
                    *vals.last_mut().unwrap() += v;
                } else {
                    cols.push(c);
                    vals.push(v);
                    last = Some(c);
                }
            }
            row_ptr.push(cols.len());
        }
        Self { n, row_ptr, cols, vals }
    }

    pub(crate) fn dim(&self) -> usize {
        self.n
    }

    pub(crate) fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n * self.n];
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                out[i * self.n + self.cols[k]] += self.vals[k];
            }
        }
        out
    }

    /// Gershgorin enclosure of the spectrum.
    fn spectral_bounds(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..self.n {
            let mut diag = 0.0;
            let mut radius = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                if self.cols[k] == i {
                    diag += self.vals[k];
                } else {
                    radius += self.vals[k].abs();
                }
            }
            lo = lo.min(diag - radius);
            hi = hi.max(diag + radius);
        }
        if self.n == 0 {
            (0.0, 0.0)
        } else {
            (lo, hi)
        }
    }

    /// `y = (H - shift) x`
    fn apply_shifted(&self, shift: f64, x: &[Complex64], y: &mut [Complex64]) {
        for i in 0..self.n {
            let mut acc = -x[i] * shift;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += x[self.cols[k]] * self.vals[k];
            }
            y[i] = acc;
        }
    }

    /// `exp(-iHt) v` by a time-stepped Taylor series on the spectrally
    /// centred matrix. Each step has `‖H - c‖·dt ≤ 1/2`, and the series is
    /// summed until the next term falls below machine precision.
    pub(crate) fn propagate(&self, t: f64, v: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        let (lo, hi) = self.spectral_bounds();
        let centre = 0.5 * (lo + hi);
        let radius = (0.5 * (hi - lo)).max(f64::MIN_POSITIVE);
        let steps = ((2.0 * radius * t.abs()).ceil() as usize).max(1);
        let dt = t / steps as f64;
        let minus_i_dt = Complex64::new(0.0, -dt);

        let mut psi = v.to_vec();
        let mut term = vec![Complex64::new(0.0, 0.0); n];
        let mut next = vec![Complex64::new(0.0, 0.0); n];
        for _ in 0..steps {
            term.copy_from_slice(&psi);
            let scale = norm(&psi).max(f64::MIN_POSITIVE);
            for k in 1..=60 {
                self.apply_shifted(centre, &term, &mut next);
                let factor = minus_i_dt / k as f64;
                for (tk, nk) in term.iter_mut().zip(next.iter()) {
                    *tk = *nk * factor;
                }
                for (p, tk) in psi.iter_mut().zip(term.iter()) {
                    *p += *tk;
                }
                if norm(&term) <= 1e-17 * scale {
                    break;
                }
            }
        }
        let phase = Complex64::cis(-centre * t);
        for p in psi.iter_mut() {
            *p *= phase;
        }
        psi
    }
}

pub(crate) fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// FNV-1a over the bit patterns of a row-major matrix.
pub(crate) fn fingerprint<F: Fn(usize, usize) -> f64>(n: usize, entry: F) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = OFFSET;
    let mut eat = |word: u64| {
        for b in word.to_le_bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(PRIME);
        }
    };
    eat(n as u64);
    for i in 0..n {
        for j in 0..n {
            // +0.0 and -0.0 are the same coupling
            let v = entry(i, j);
            eat(if v == 0.0 { 0 } else { v.to_bits() });
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_graph(n: usize, detune: f64) -> SparseSymmetric {
        let rows = (0..n)
            .map(|i| {
                let mut r = alloc::vec![(i, detune * i as f64)];
                if i > 0 {
                    r.push((i - 1, 1.0));
                }
                if i + 1 < n {
                    r.push((i + 1, 1.0));
                }
                r
            })
            .collect();
        SparseSymmetric::from_rows(rows)
    }

    #[test]
    fn taylor_matches_eigendecomposition() {
        let h = path_graph(12, 7.5);
        let spec = SymmetricSpectrum::new(h.dim(), &h.to_dense()).unwrap();
        let mut v = vec![Complex64::new(0.0, 0.0); 12];
        v[0] = Complex64::new(0.6, 0.0);
        v[5] = Complex64::new(0.0, 0.8);
        for &t in &[0.0, 0.3, 1.7, 25.0] {
            let a = spec.apply(t, &v);
            let b = h.propagate(t, &v);
            for (x, y) in a.iter().zip(b.iter()) {
                assert!((x - y).norm() < 1e-11, "t={t}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn propagator_is_unitary() {
        let h = path_graph(9, -3.0);
        let spec = SymmetricSpectrum::new(9, &h.to_dense()).unwrap();
        let u = spec.propagator(2.2);
        for i in 0..9 {
            for j in 0..9 {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..9 {
                    acc += u[k * 9 + i].conj() * u[k * 9 + j];
                }
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((acc - expect).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn fingerprint_ignores_signed_zero() {
        let a = fingerprint(2, |i, j| if i == j { 0.0 } else { 1.0 });
        let b = fingerprint(2, |i, j| if i == j { -0.0 } else { 1.0 });
        assert_eq!(a, b);
        let c = fingerprint(2, |_, _| 1.0);
        assert_ne!(a, c);
    }
}
