//! Exact time evolution in the single-excitation sector.
//!
//! A Hermitian matrix is diagonalized once; transition-amplitude matrices
//! `f(t) = V·diag(e^{-iλt})·V†` are then produced for any number of times,
//! each exactly unitary up to roundoff. Degenerate eigenvalues need no
//! special handling: any orthonormal eigenbasis yields the same `f(t)`.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::graph::SiteId;
use crate::hamiltonian::{hermiticity_defect, SingleExcHamiltonian};

const HERMITICITY_TOL: f64 = 1e-10;

/// Cached spectral decomposition of a single-excitation Hamiltonian.
#[derive(Debug, Clone)]
pub struct Propagator {
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<C64>,
    fingerprint: u64,
}

/// Spectral decomposition with eigenvalues in ascending order. The output is
/// deterministic for identical input.
pub fn diagonalize(h: &SingleExcHamiltonian) -> Result<Propagator> {
    let defect = hermiticity_defect(h.matrix());
    if defect > HERMITICITY_TOL {
        return Err(Error::InvalidInput(format!(
            "matrix is not Hermitian: defect {defect:.3e} exceeds {HERMITICITY_TOL:.0e}"
        )));
    }
    let fingerprint = fingerprint_matrix(h.matrix());
    let eigen = h.matrix().clone().symmetric_eigen();
    let n = h.n_sites();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eigen.eigenvalues[a].total_cmp(&eigen.eigenvalues[b]));
    let mut eigenvalues = DVector::<f64>::zeros(n);
    let mut eigenvectors = DMatrix::<C64>::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        eigenvalues[dst] = eigen.eigenvalues[src];
        eigenvectors.set_column(dst, &eigen.eigenvectors.column(src));
    }
    Ok(Propagator { eigenvalues, eigenvectors, fingerprint })
}

impl Propagator {
    pub fn n_sites(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> &[f64] {
        self.eigenvalues.as_slice()
    }

    pub fn eigenvectors(&self) -> &DMatrix<C64> {
        &self.eigenvectors
    }

    /// Hash of the source matrix, for identifying which system a cached
    /// decomposition belongs to.
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    /// Single entry `f_{to,from}(t) = ⟨to|e^{-iHt}|from⟩` without building
    /// the whole matrix.
    pub fn amplitude(&self, t: f64, to: SiteId, from: SiteId) -> C64 {
        let n = self.n_sites();
        let mut sum = C64::new(0.0, 0.0);
        for k in 0..n {
            let phase = C64::new(0.0, -self.eigenvalues[k] * t).exp();
            sum += self.eigenvectors[(to.0, k)] * phase * self.eigenvectors[(from.0, k)].conj();
        }
        sum
    }

    /// Applies `e^{-iHt}` to a state vector.
    pub fn evolve(&self, t: f64, state: &DVector<C64>) -> DVector<C64> {
        let coeffs = self.eigenvectors.adjoint() * state;
        let rotated = DVector::from_iterator(
            self.n_sites(),
            coeffs
                .iter()
                .zip(self.eigenvalues.iter())
                .map(|(c, &e)| c * C64::new(0.0, -e * t).exp()),
        );
        &self.eigenvectors * rotated
    }
}

/// Full matrix of transition amplitudes at one time.
#[derive(Debug, Clone)]
pub struct AmplitudeMatrix {
    t: f64,
    f: DMatrix<C64>,
}

impl AmplitudeMatrix {
    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.f
    }

    /// `f_{to,from}(t)`.
    pub fn entry(&self, to: SiteId, from: SiteId) -> C64 {
        self.f[(to.0, from.0)]
    }

    pub fn n_sites(&self) -> usize {
        self.f.nrows()
    }
}

/// `f(t) = V·diag(e^{-iλt})·V†`.
pub fn transition_amplitudes(p: &Propagator, t: f64) -> AmplitudeMatrix {
    let n = p.n_sites();
    let mut scaled = p.eigenvectors.clone();
    for k in 0..n {
        let phase = C64::new(0.0, -p.eigenvalues[k] * t).exp();
        for r in 0..n {
            scaled[(r, k)] *= phase;
        }
    }
    AmplitudeMatrix { t, f: scaled * p.eigenvectors.adjoint() }
}

/// One row of an amplitude time series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplitudeSample {
    pub t: f64,
    pub i: SiteId,
    pub j: SiteId,
    pub f: C64,
    pub abs2: f64,
}

/// Tabulates `f_ij(t)` for every requested time and site pair, row-major in
/// time then pair order.
pub fn amplitude_series(
    p: &Propagator,
    times: &[f64],
    pairs: &[(SiteId, SiteId)],
) -> Result<Vec<AmplitudeSample>> {
    if times.is_empty() {
        return Err(Error::InvalidInput("amplitude series needs at least one time".into()));
    }
    let n = p.n_sites();
    for &(i, j) in pairs {
        if i.0 >= n || j.0 >= n {
            return Err(Error::InvalidInput(format!("pair ({i},{j}) out of range for {n} sites")));
        }
    }
    let mut rows = Vec::with_capacity(times.len() * pairs.len());
    for &t in times {
        let f = transition_amplitudes(p, t);
        for &(i, j) in pairs {
            let value = f.entry(i, j);
            rows.push(AmplitudeSample { t, i, j, f: value, abs2: value.norm_sqr() });
        }
    }
    Ok(rows)
}

/// Writes a series as CSV with header `t,i,j,re_f,im_f,abs2`, floats at 12
/// significant digits.
pub fn write_series_csv<W: Write>(mut out: W, rows: &[AmplitudeSample]) -> std::io::Result<()> {
    writeln!(out, "t,i,j,re_f,im_f,abs2")?;
    for row in rows {
        writeln!(
            out,
            "{:.11e},{},{},{:.11e},{:.11e},{:.11e}",
            row.t, row.i, row.j, row.f.re, row.f.im, row.abs2
        )?;
    }
    Ok(())
}

fn fingerprint_matrix(m: &DMatrix<C64>) -> u64 {
    // FNV-1a over the raw bit patterns; stable across runs and platforms
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    let mut eat = |bits: u64| {
        for byte in bits.to_le_bytes() {
            hash ^= u64::from(byte);
            hash = hash.wrapping_mul(0x1000_0000_01b3);
        }
    };
    eat(m.nrows() as u64);
    for z in m.iter() {
        eat(z.re.to_bits());
        eat(z.im.to_bits());
    }
    hash
}
