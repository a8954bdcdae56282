//! Pair amplitudes, the reduced two-site state, and concurrence.
//!
//! For an initial encoding `α|μ⟩ + β|ν⟩` evolved to time `t`, the amplitudes
//! on a target pair `(m, n)` are `A = α f_mμ + β f_mν` and
//! `B = α f_nμ + β f_nν`. The reduced state of the pair is an X-shaped 4×4
//! density matrix whose concurrence has the closed form `C = 2|A||B|`; the
//! general Wootters eigenvalue formula is implemented as an independent
//! cross-check.
//!
//! Two-qubit basis order is `{|11⟩, |10⟩, |01⟩, |00⟩}` (excitation count
//! descending, first label = site m).

use nalgebra::Matrix4;
use num_complex::Complex64 as C64;

use crate::dynamics::AmplitudeMatrix;
use crate::error::{Error, Result};
use crate::graph::SiteId;

const NORM_TOL: f64 = 1e-12;
const STATE_TOL: f64 = 1e-10;

/// Initial encoding `α|μ⟩ + β|ν⟩` over two sites.
///
/// A single-site excitation is encoded as `α = 1, β = 0` (in that case
/// `ν = μ` is allowed).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Encoding {
    mu: SiteId,
    nu: SiteId,
    alpha: C64,
    beta: C64,
}

impl Encoding {
    /// Validating constructor: requires `|α|² + |β|² = 1` and `μ ≠ ν`
    /// unless `β = 0`.
    pub fn new(mu: SiteId, nu: SiteId, alpha: C64, beta: C64) -> Result<Self> {
        let norm = alpha.norm_sqr() + beta.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!(
                "encoding amplitudes have |α|²+|β|² = {norm}, expected 1"
            )));
        }
        if mu == nu && beta.norm() != 0.0 {
            return Err(Error::InvalidState("two-site encoding needs distinct sites μ ≠ ν".into()));
        }
        Ok(Encoding { mu, nu, alpha, beta })
    }

    /// Rescales arbitrary nonzero amplitudes onto the unit sphere.
    pub fn normalized(mu: SiteId, nu: SiteId, alpha: C64, beta: C64) -> Result<Self> {
        let norm = (alpha.norm_sqr() + beta.norm_sqr()).sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidState("encoding amplitudes are both zero".into()));
        }
        Self::new(mu, nu, alpha / norm, beta / norm)
    }

    /// Disentangled encoding: a bare excitation on `mu`.
    pub fn excitation(mu: SiteId) -> Self {
        Encoding { mu, nu: mu, alpha: C64::new(1.0, 0.0), beta: C64::new(0.0, 0.0) }
    }

    /// Maximally entangled (Bell) encoding of the two sites.
    pub fn me(mu: SiteId, nu: SiteId) -> Result<Self> {
        let amp = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self::new(mu, nu, amp, amp)
    }

    pub fn mu(&self) -> SiteId {
        self.mu
    }

    pub fn nu(&self) -> SiteId {
        self.nu
    }

    pub fn alpha(&self) -> C64 {
        self.alpha
    }

    pub fn beta(&self) -> C64 {
        self.beta
    }

    /// Concurrence of the encoded pair at time zero, `2|αβ|`.
    pub fn initial_concurrence(&self) -> f64 {
        2.0 * (self.alpha * self.beta).norm()
    }
}

/// Evolved amplitudes on a target pair.
#[derive(Debug, Clone, Copy)]
pub struct PairAmplitudes {
    pub a: C64,
    pub b: C64,
    pub m: SiteId,
    pub n: SiteId,
    pub t: f64,
}

/// `A = α f_mμ + β f_mν`, `B = α f_nμ + β f_nν`.
pub fn pair_amplitudes(
    f: &AmplitudeMatrix,
    e: &Encoding,
    m: SiteId,
    n: SiteId,
) -> Result<PairAmplitudes> {
    if m == n {
        return Err(Error::InvalidTarget(format!("target sites must differ, got m = n = {m}")));
    }
    let sites = f.n_sites();
    for s in [m, n, e.mu, e.nu] {
        if s.0 >= sites {
            return Err(Error::InvalidTarget(format!("site {s} out of range for {sites} sites")));
        }
    }
    let a = e.alpha * f.entry(m, e.mu) + e.beta * f.entry(m, e.nu);
    let b = e.alpha * f.entry(n, e.mu) + e.beta * f.entry(n, e.nu);
    Ok(PairAmplitudes { a, b, m, n, t: f.t() })
}

/// Reduced two-site density matrix in the basis `{|11⟩,|10⟩,|01⟩,|00⟩}`.
#[derive(Debug, Clone)]
pub struct TwoQubitState {
    rho: Matrix4<C64>,
}

impl TwoQubitState {
    pub fn rho(&self) -> &Matrix4<C64> {
        &self.rho
    }

    /// Validates a general density matrix: Hermitian, unit trace, positive
    /// semidefinite (all to 1e-10).
    pub fn from_density_matrix(rho: Matrix4<C64>) -> Result<Self> {
        let mut herm = 0.0f64;
        for r in 0..4 {
            for c in 0..4 {
                herm = herm.max((rho[(r, c)] - rho[(c, r)].conj()).norm());
            }
        }
        if herm > STATE_TOL {
            return Err(Error::InvalidState(format!(
                "density matrix is not Hermitian (defect {herm:.3e})"
            )));
        }
        let trace = rho.trace();
        if (trace.re - 1.0).abs() > STATE_TOL || trace.im.abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("density matrix trace is {trace}")));
        }
        let eigen = rho.symmetric_eigen();
        if let Some(min) = eigen.eigenvalues.iter().cloned().reduce(f64::min) {
            if min < -STATE_TOL {
                return Err(Error::InvalidState(format!(
                    "density matrix has negative eigenvalue {min:.3e}"
                )));
            }
        }
        Ok(TwoQubitState { rho })
    }
}

/// Builds the pair state: middle block `[[|A|², AB*], [BA*, |B|²]]` and the
/// leftover population `1 − |A|² − |B|²` in the `|00⟩` corner.
pub fn pair_state(pa: &PairAmplitudes) -> Result<TwoQubitState> {
    let weight = pa.a.norm_sqr() + pa.b.norm_sqr();
    if weight > 1.0 + STATE_TOL {
        return Err(Error::InvalidState(format!("pair amplitudes carry weight {weight} > 1")));
    }
    let mut rho = Matrix4::<C64>::zeros();
    rho[(1, 1)] = C64::new(pa.a.norm_sqr(), 0.0);
    rho[(1, 2)] = pa.a * pa.b.conj();
    rho[(2, 1)] = pa.b * pa.a.conj();
    rho[(2, 2)] = C64::new(pa.b.norm_sqr(), 0.0);
    rho[(3, 3)] = C64::new((1.0 - weight).max(0.0), 0.0);
    Ok(TwoQubitState { rho })
}

/// Closed-form concurrence of the pair state: `2|A||B|`.
pub fn concurrence_closed_form(pa: &PairAmplitudes) -> f64 {
    2.0 * pa.a.norm() * pa.b.norm()
}

/// General Wootters concurrence
/// `C = max(0, λ₁ − λ₂ − λ₃ − λ₄)`, the λ being the descending square roots
/// of the eigenvalues of `ρ·(σ^y⊗σ^y)·ρ*·(σ^y⊗σ^y)`.
///
/// The non-Hermitian product is avoided: with `A = √ρ` the λ equal the
/// singular values of the complex symmetric matrix `A·(σ^y⊗σ^y)·Aᵀ`, since
/// that matrix times its adjoint is `√ρ·ρ̃·√ρ`. Computing them as singular
/// values keeps the near-zero λ at absolute machine precision, which a
/// square root of near-zero eigenvalues would not.
pub fn concurrence_wootters(state: &TwoQubitState) -> Result<f64> {
    let yy = sigma_y_sigma_y();
    let sqrt_rho = psd_sqrt(&state.rho)?;
    let g = sqrt_rho * yy * sqrt_rho.transpose();
    let mut lambdas: Vec<f64> = g.svd(false, false).singular_values.iter().copied().collect();
    lambdas.sort_by(|a, b| b.total_cmp(a));
    Ok((lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3]).max(0.0))
}

/// Entanglement of formation corresponding to a concurrence value: the
/// binary entropy of `(1 + √(1−C²))/2`. Provided as a documented helper;
/// everything else in the crate works directly in concurrence.
pub fn entanglement_of_formation(concurrence: f64) -> f64 {
    let c = concurrence.clamp(0.0, 1.0);
    let x = 0.5 * (1.0 + (1.0 - c * c).sqrt());
    let h = |p: f64| if p <= 0.0 || p >= 1.0 { 0.0 } else { -p * p.log2() };
    h(x) + h(1.0 - x)
}

/// The four terms of the expanded product `A·B`:
/// `(α²f_mμf_nμ, αβf_mμf_nν, αβf_mνf_nμ, β²f_mνf_nν)`.
///
/// Twice the modulus of their sum is exactly the closed-form concurrence;
/// the individual magnitudes are diagnostics for how far apart the maxima
/// of the contributing transition amplitudes lie.
#[derive(Debug, Clone, Copy)]
pub struct FourTerms {
    pub terms: [C64; 4],
}

impl FourTerms {
    pub fn concurrence(&self) -> f64 {
        2.0 * self.terms.iter().sum::<C64>().norm()
    }

    pub fn magnitudes(&self) -> [f64; 4] {
        [self.terms[0].norm(), self.terms[1].norm(), self.terms[2].norm(), self.terms[3].norm()]
    }
}

/// Expands `A·B` into its four amplitude products.
pub fn four_term_decomposition(
    f: &AmplitudeMatrix,
    e: &Encoding,
    m: SiteId,
    n: SiteId,
) -> Result<FourTerms> {
    if m == n {
        return Err(Error::InvalidTarget(format!("target sites must differ, got m = n = {m}")));
    }
    let f_mmu = f.entry(m, e.mu);
    let f_mnu = f.entry(m, e.nu);
    let f_nmu = f.entry(n, e.mu);
    let f_nnu = f.entry(n, e.nu);
    let ab = e.alpha * e.beta;
    Ok(FourTerms {
        terms: [
            e.alpha * e.alpha * f_mmu * f_nmu,
            ab * f_mmu * f_nnu,
            ab * f_mnu * f_nmu,
            e.beta * e.beta * f_mnu * f_nnu,
        ],
    })
}

/// `σ^y ⊗ σ^y` in the `{|11⟩,|10⟩,|01⟩,|00⟩}` basis.
fn sigma_y_sigma_y() -> Matrix4<C64> {
    let mut yy = Matrix4::<C64>::zeros();
    yy[(0, 3)] = C64::new(-1.0, 0.0);
    yy[(1, 2)] = C64::new(1.0, 0.0);
    yy[(2, 1)] = C64::new(1.0, 0.0);
    yy[(3, 0)] = C64::new(-1.0, 0.0);
    yy
}

const RANK_TOL: f64 = 1e-12;

/// Hermitian square root of a positive semidefinite matrix. Eigenvalues
/// below `RANK_TOL` relative to the largest are treated as exact zeros so
/// that rank-deficient states keep an exact null space.
fn psd_sqrt(m: &Matrix4<C64>) -> Result<Matrix4<C64>> {
    let eigen = m.symmetric_eigen();
    let top = eigen.eigenvalues.iter().fold(0.0f64, |acc, &x| acc.max(x));
    let mut out = Matrix4::<C64>::zeros();
    for k in 0..4 {
        let value = eigen.eigenvalues[k];
        if value < -STATE_TOL {
            return Err(Error::InvalidState(format!(
                "matrix is not positive semidefinite (eigenvalue {value:.3e})"
            )));
        }
        if value <= top * RANK_TOL {
            continue;
        }
        let root = value.sqrt();
        let col = eigen.eigenvectors.column(k);
        for r in 0..4 {
            for c in 0..4 {
                out[(r, c)] += col[r] * C64::new(root, 0.0) * col[c].conj();
            }
        }
    }
    Ok(out)
}

/// Uniformly distributed pair amplitude sampler used by randomized
/// cross-check tests; deterministic in its seed.
#[doc(hidden)]
pub fn sample_pair_amplitudes(seed: u64) -> PairAmplitudes {
    // splitmix64 stream; plenty for test-point generation
    let mut state = seed;
    let mut next = move || {
        state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z = z ^ (z >> 31);
        (z >> 11) as f64 / (1u64 << 53) as f64
    };
    loop {
        let a = C64::new(next() * 2.0 - 1.0, next() * 2.0 - 1.0);
        let b = C64::new(next() * 2.0 - 1.0, next() * 2.0 - 1.0);
        if a.norm_sqr() + b.norm_sqr() <= 1.0 {
            return PairAmplitudes { a, b, m: SiteId(0), n: SiteId(1), t: 0.0 };
        }
    }
}
