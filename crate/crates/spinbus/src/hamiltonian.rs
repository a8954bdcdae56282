//! Effective single-excitation Hamiltonians for XY and Heisenberg graphs,
//! plus a full 2^N Hilbert-space oracle used to verify the effective builder
//! and the magnetization-conservation property.
//!
//! Pauli convention: `σ^z|up⟩ = +|up⟩` and an excitation is an up spin.
//! Global constant terms (they only shift `e^{-iHt}` by a global phase) are
//! dropped from the effective matrix; the oracle comparison accounts for the
//! offset explicitly.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::graph::{Model, SpinGraph};

/// Hard ceiling for the 2^N full-space construction.
pub const FULL_SPACE_MAX_SITES: usize = 12;

/// N×N Hermitian matrix over the one-excitation basis; row/column `k`
/// corresponds to the state with site `k` flipped up.
#[derive(Debug, Clone)]
pub struct SingleExcHamiltonian {
    matrix: DMatrix<C64>,
}

impl SingleExcHamiltonian {
    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn n_sites(&self) -> usize {
        self.matrix.nrows()
    }

    /// Largest absolute deviation from Hermiticity.
    pub fn hermiticity_defect(&self) -> f64 {
        hermiticity_defect(&self.matrix)
    }

    /// Wraps an explicit matrix; intended for tests and adapters.
    pub fn from_matrix(matrix: DMatrix<C64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() == 0 {
            return Err(Error::InvalidSize(format!(
                "expected a nonempty square matrix, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(SingleExcHamiltonian { matrix })
    }
}

/// 2^N × 2^N Hermitian matrix over computational product states.
///
/// Basis index `b` encodes site `k` as up when bit `N-1-k` of `b` is clear,
/// so index 0 is the all-up state and states sort by descending excitation
/// count within each bit pattern, matching the two-qubit layout used for the
/// pair state.
#[derive(Debug, Clone)]
pub struct FullSpaceHamiltonian {
    matrix: DMatrix<C64>,
    n_sites: usize,
}

impl FullSpaceHamiltonian {
    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    /// Wraps an explicit matrix; intended for tests building counterexamples.
    pub fn from_matrix(matrix: DMatrix<C64>, n_sites: usize) -> Result<Self> {
        if matrix.nrows() != 1 << n_sites || matrix.ncols() != 1 << n_sites {
            return Err(Error::InvalidSize(format!(
                "matrix is {}x{}, expected 2^{n_sites} square",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(FullSpaceHamiltonian { matrix, n_sites })
    }

    fn site_is_up(&self, basis: usize, site: usize) -> bool {
        basis >> (self.n_sites - 1 - site) & 1 == 0
    }

    /// Number of up spins in basis state `basis`.
    fn excitations(&self, basis: usize) -> u32 {
        self.n_sites as u32 - basis.count_ones()
    }

    /// Eigenvalue of total σ^z on basis state `basis`.
    fn total_sz(&self, basis: usize) -> f64 {
        2.0 * self.excitations(basis) as f64 - self.n_sites as f64
    }

    /// Basis index of the state with only `site` flipped up.
    fn one_excitation_index(&self, site: usize) -> usize {
        ((1usize << self.n_sites) - 1) ^ (1 << (self.n_sites - 1 - site))
    }
}

/// Builds the effective Hamiltonian on the one-excitation sector.
///
/// XY: `H_ij = 2·J_ij·e^{i·phase(i→j)}` on bonds and `H_ii = 2·B_i`.
/// Heisenberg: same off-diagonal, `H_ii = 2·B_i − 2·Σ_{k~i} J_ik`.
pub fn build_single_excitation(g: &SpinGraph) -> SingleExcHamiltonian {
    let n = g.n_sites();
    let mut h = DMatrix::<C64>::zeros(n, n);
    for bond in g.bonds() {
        let hop = 2.0 * bond.coupling;
        h[(bond.i.0, bond.j.0)] = hop * C64::new(0.0, bond.phase).exp();
        h[(bond.j.0, bond.i.0)] = hop * C64::new(0.0, -bond.phase).exp();
    }
    for i in 0..n {
        let mut diag = 2.0 * g.fields()[i];
        if g.model() == Model::Heisenberg {
            let neighbor_sum: f64 =
                g.bonds().iter().filter(|b| b.i.0 == i || b.j.0 == i).map(|b| b.coupling).sum();
            diag -= 2.0 * neighbor_sum;
        }
        h[(i, i)] = C64::new(diag, 0.0);
    }
    SingleExcHamiltonian { matrix: h }
}

/// Exact tensor-product construction of the model Hamiltonian on the full
/// 2^N space. Bond phases attach to the hopping (`σ^+σ^-`) part so both
/// builders describe the same physics.
pub fn build_full_space(g: &SpinGraph) -> Result<FullSpaceHamiltonian> {
    let n = g.n_sites();
    if n > FULL_SPACE_MAX_SITES {
        return Err(Error::Resource(format!(
            "full-space construction is limited to {FULL_SPACE_MAX_SITES} sites, got {n}"
        )));
    }
    let dim = 1usize << n;
    let mut matrix = DMatrix::<C64>::zeros(dim, dim);
    let shell = FullSpaceHamiltonian { matrix: DMatrix::zeros(0, 0), n_sites: n };
    for b in 0..dim {
        // field term  Σ B_k σ_k^z  and Heisenberg  Σ J_ij σ_i^z σ_j^z
        let mut diag = 0.0;
        for k in 0..n {
            let z = if shell.site_is_up(b, k) { 1.0 } else { -1.0 };
            diag += g.fields()[k] * z;
        }
        if g.model() == Model::Heisenberg {
            for bond in g.bonds() {
                let zi = if shell.site_is_up(b, bond.i.0) { 1.0 } else { -1.0 };
                let zj = if shell.site_is_up(b, bond.j.0) { 1.0 } else { -1.0 };
                diag += bond.coupling * zi * zj;
            }
        }
        matrix[(b, b)] = C64::new(diag, 0.0);
        // hopping  2 J (e^{iφ} σ_i^+ σ_j^- + e^{-iφ} σ_i^- σ_j^+)
        for bond in g.bonds() {
            let (i, j) = (bond.i.0, bond.j.0);
            if shell.site_is_up(b, j) && !shell.site_is_up(b, i) {
                let flipped = b ^ (1 << (n - 1 - j)) ^ (1 << (n - 1 - i));
                let amp = 2.0 * bond.coupling * C64::new(0.0, bond.phase).exp();
                matrix[(flipped, b)] += amp;
                matrix[(b, flipped)] += amp.conj();
            }
        }
    }
    Ok(FullSpaceHamiltonian { matrix, n_sites: n })
}

/// Max-norm of the commutator `[σ^z_total, H]`; a value at numerical zero
/// certifies that the dynamics never leaves a fixed-excitation sector.
pub fn check_excitation_conservation(h: &FullSpaceHamiltonian) -> f64 {
    let dim = h.matrix.nrows();
    let mut worst = 0.0f64;
    for a in 0..dim {
        for b in 0..dim {
            let gap = h.total_sz(a) - h.total_sz(b);
            worst = worst.max((gap * h.matrix[(a, b)]).norm());
        }
    }
    worst
}

const LEAKAGE_TOL: f64 = 1e-10;

/// Extracts the N×N block over weight-1 basis states, ordered by the index
/// of the flipped site. Equals [`build_single_excitation`] up to the dropped
/// global constant times identity.
pub fn extract_single_excitation_block(h: &FullSpaceHamiltonian) -> Result<SingleExcHamiltonian> {
    let n = h.n_sites;
    let dim = h.matrix.nrows();
    let sector: Vec<usize> = (0..n).map(|k| h.one_excitation_index(k)).collect();
    let mut max_leak = 0.0f64;
    for &row in &sector {
        for col in 0..dim {
            if h.excitations(col) != 1 {
                max_leak = max_leak.max(h.matrix[(row, col)].norm());
                max_leak = max_leak.max(h.matrix[(col, row)].norm());
            }
        }
    }
    if max_leak > LEAKAGE_TOL {
        return Err(Error::BlockLeakage { max_leak });
    }
    let mut block = DMatrix::<C64>::zeros(n, n);
    for (r, &row) in sector.iter().enumerate() {
        for (c, &col) in sector.iter().enumerate() {
            block[(r, c)] = h.matrix[(row, col)];
        }
    }
    Ok(SingleExcHamiltonian { matrix: block })
}

pub(crate) fn hermiticity_defect(m: &DMatrix<C64>) -> f64 {
    let mut worst = 0.0f64;
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            worst = worst.max((m[(r, c)] - m[(c, r)].conj()).norm());
        }
    }
    worst
}

/// Largest modulus among the entries of `m`.
#[cfg(test)]
pub(crate) fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
}
