//! Mirror-symmetry detection and the class-I / class-II configuration
//! analysis.
//!
//! An involution of the graph is an order-≤2 site permutation that maps the
//! weighted structure onto itself: couplings and fields are preserved and
//! bond phases are preserved either exactly or with a global sign flip (a
//! reflection reverses the orientation of every loop, so on flux-carrying
//! rings mirrors match the conjugated Hamiltonian).
//!
//! A configuration (encoded sites, target pair) is **class I** when some
//! involution fixes the encoded site μ and swaps the targets m ↔ n, which
//! equalizes the amplitudes inside the `α²f_mμf_nμ` term; it is **class II**
//! when some involution swaps μ ↔ ν and m ↔ n, equalizing the amplitudes
//! inside the cross terms. Near the transfer peak the attainable concurrence
//! is approximately `2|f_mμ|²` (class I, best encoding is the bare
//! excitation) or `|f_mμ|²` (class II, best encoding is maximally
//! entangled). Those class predictions are asserted for flux-free graphs;
//! flux is applied to break symmetry, not to preserve it.

use std::collections::BTreeSet;
use std::f64::consts::TAU;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::dynamics::Propagator;
use crate::error::{Error, Result};
use crate::graph::{SiteId, SpinGraph};
use crate::hamiltonian::build_single_excitation;

/// Exhaustive involution search is limited to this many sites; larger
/// graphs are only handled by the uniform-ring fast path.
pub const INVOLUTION_SEARCH_MAX_SITES: usize = 16;

const MATCH_TOL: f64 = 1e-12;

/// An order-≤2 site permutation preserving the weighted graph structure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Involution {
    perm: Vec<usize>,
    fixed_sites: Vec<SiteId>,
    swap_pairs: Vec<(SiteId, SiteId)>,
    phase_negated: bool,
}

impl Involution {
    fn from_perm(perm: Vec<usize>, phase_negated: bool) -> Self {
        let fixed_sites =
            perm.iter().enumerate().filter(|&(i, &p)| i == p).map(|(i, _)| SiteId(i)).collect();
        let swap_pairs = perm
            .iter()
            .enumerate()
            .filter(|&(i, &p)| i < p)
            .map(|(i, &p)| (SiteId(i), SiteId(p)))
            .collect();
        Involution { perm, fixed_sites, swap_pairs, phase_negated }
    }

    /// Image of each site.
    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn apply(&self, site: SiteId) -> SiteId {
        SiteId(self.perm[site.0])
    }

    /// Sites on the mirror line.
    pub fn fixed_sites(&self) -> &[SiteId] {
        &self.fixed_sites
    }

    /// Counterpart pairs, each with the smaller site first.
    pub fn swap_pairs(&self) -> &[(SiteId, SiteId)] {
        &self.swap_pairs
    }

    /// True when the involution matches the graph only with all bond phases
    /// negated (orientation-reversing mirror on a flux loop).
    pub fn phase_negated(&self) -> bool {
        self.phase_negated
    }

    pub fn is_identity(&self) -> bool {
        self.swap_pairs.is_empty()
    }

    pub fn fixes(&self, site: SiteId) -> bool {
        self.perm[site.0] == site.0
    }

    pub fn swaps(&self, a: SiteId, b: SiteId) -> bool {
        a != b && self.perm[a.0] == b.0
    }

    /// One-line cycle notation, fixed points omitted; `()` for the identity.
    pub fn cycle_notation(&self) -> String {
        if self.is_identity() {
            return "()".into();
        }
        self.swap_pairs.iter().map(|(a, b)| format!("({a} {b})")).collect::<Vec<_>>().join("")
    }
}

/// All order-≤2 permutations preserving the weighted structure, in
/// lexicographic order of the permutation image. Includes the identity.
///
/// Graphs above [`INVOLUTION_SEARCH_MAX_SITES`] sites are only supported
/// when they are canonical uniform rings (the dihedral reflections are then
/// written down directly); anything else is a resource error.
pub fn find_involutions(g: &SpinGraph) -> Result<Vec<Involution>> {
    let n = g.n_sites();
    let h = build_single_excitation(g);
    let candidates: Vec<Vec<usize>> = if n <= INVOLUTION_SEARCH_MAX_SITES {
        let mut set: BTreeSet<Vec<usize>> = BTreeSet::new();
        backtrack_involutions(g, false, &mut set);
        if g.bonds().iter().any(|b| !angle_eq(b.phase, 0.0) && !angle_eq(b.phase, TAU / 2.0)) {
            backtrack_involutions(g, true, &mut set);
        }
        set.into_iter().collect()
    } else {
        ring_fast_path_candidates(g)?
    };
    let mut out = Vec::new();
    for perm in candidates {
        if let Some(negated) = involution_mode(h.matrix(), &perm) {
            out.push(Involution::from_perm(perm, negated));
        }
    }
    Ok(out)
}

/// Checks a permutation against the Hamiltonian: returns `Some(false)` when
/// `H_{p(a)p(b)} = H_{ab}` everywhere, `Some(true)` when it matches the
/// conjugate instead, `None` when neither holds (tolerance 1e-12).
fn involution_mode(h: &DMatrix<C64>, perm: &[usize]) -> Option<bool> {
    let n = perm.len();
    let mut exact = true;
    let mut conj = true;
    for a in 0..n {
        for b in 0..n {
            let mapped = h[(perm[a], perm[b])];
            let original = h[(a, b)];
            if (mapped - original).norm() > MATCH_TOL {
                exact = false;
            }
            if (mapped - original.conj()).norm() > MATCH_TOL {
                conj = false;
            }
            if !exact && !conj {
                return None;
            }
        }
    }
    if exact {
        Some(false)
    } else {
        Some(true)
    }
}

fn angle_eq(x: f64, y: f64) -> bool {
    let d = (x - y).rem_euclid(TAU);
    d < 1e-9 || TAU - d < 1e-9
}

/// Depth-first enumeration of involutions compatible with the graph data.
/// Sites are processed in ascending order; each unassigned site is either
/// fixed or paired with a later unassigned site, and every partial
/// assignment is checked against all previously assigned sites so that
/// incompatible branches are cut early.
fn backtrack_involutions(g: &SpinGraph, conjugate: bool, out: &mut BTreeSet<Vec<usize>>) {
    let n = g.n_sites();
    let mut perm: Vec<Option<usize>> = vec![None; n];
    let degree: Vec<usize> = (0..n).map(|i| g.neighbors(SiteId(i)).len()).collect();

    fn pair_ok(
        g: &SpinGraph,
        perm: &[Option<usize>],
        conjugate: bool,
        a: usize,
        pa: usize,
    ) -> bool {
        for (b, image) in perm.iter().enumerate() {
            let Some(pb) = *image else { continue };
            let bond = g.bond_from(SiteId(a), SiteId(b));
            let image = g.bond_from(SiteId(pa), SiteId(pb));
            match (bond, image) {
                (None, None) => {}
                (Some((j1, p1)), Some((j2, p2))) => {
                    if (j1 - j2).abs() > MATCH_TOL {
                        return false;
                    }
                    let want = if conjugate { -p1 } else { p1 };
                    if !angle_eq(want, p2) {
                        return false;
                    }
                }
                _ => return false,
            }
        }
        true
    }

    fn recurse(
        g: &SpinGraph,
        degree: &[usize],
        conjugate: bool,
        perm: &mut Vec<Option<usize>>,
        out: &mut BTreeSet<Vec<usize>>,
    ) {
        let Some(i) = perm.iter().position(Option::is_none) else {
            out.insert(perm.iter().map(|p| p.unwrap()).collect());
            return;
        };
        let n = perm.len();
        let fields = g.fields();
        // candidate images: i itself, then any later unassigned site
        for j in std::iter::once(i).chain((i + 1)..n) {
            if perm[j].is_some() && j != i {
                continue;
            }
            if (fields[i] - fields[j]).abs() > MATCH_TOL || degree[i] != degree[j] {
                continue;
            }
            perm[i] = Some(j);
            perm[j] = Some(i);
            let consistent =
                pair_ok(g, perm, conjugate, i, j) && (i == j || pair_ok(g, perm, conjugate, j, i));
            if consistent {
                recurse(g, degree, conjugate, perm, out);
            }
            perm[i] = None;
            if j != i {
                perm[j] = None;
            }
        }
    }

    recurse(g, &degree, conjugate, &mut perm, out);
}

/// Dihedral involution candidates for a canonical uniform ring: the
/// identity, the n reflections `k ↦ a − k (mod n)`, and for even n the
/// antipodal rotation.
fn ring_fast_path_candidates(g: &SpinGraph) -> Result<Vec<Vec<usize>>> {
    let n = g.n_sites();
    let is_uniform_ring = g.bonds().len() == n
        && g.bonds().iter().enumerate().all(|(k, b)| {
            b.i.0 == k
                && b.j.0 == (k + 1) % n
                && (b.coupling - g.bonds()[0].coupling).abs() <= MATCH_TOL
                && (b.phase - g.bonds()[0].phase).abs() <= MATCH_TOL
        })
        && g.fields().iter().all(|&f| (f - g.fields()[0]).abs() <= MATCH_TOL);
    if !is_uniform_ring {
        return Err(Error::Resource(format!(
            "exhaustive involution search is limited to {INVOLUTION_SEARCH_MAX_SITES} sites and \
             the {n}-site graph is not a canonical uniform ring"
        )));
    }
    let mut candidates = vec![(0..n).collect::<Vec<usize>>()];
    for axis in 0..n {
        candidates.push((0..n).map(|k| (axis + n - k) % n).collect());
    }
    if n.is_multiple_of(2) {
        candidates.push((0..n).map(|k| (k + n / 2) % n).collect());
    }
    candidates.sort();
    candidates.dedup();
    Ok(candidates)
}

/// Symmetry class of an (encoding sites, target pair) configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymmetryClass {
    ClassI,
    ClassII,
    None,
}

impl std::fmt::Display for SymmetryClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SymmetryClass::ClassI => write!(f, "class-i"),
            SymmetryClass::ClassII => write!(f, "class-ii"),
            SymmetryClass::None => write!(f, "none"),
        }
    }
}

/// Result of [`classify`], carrying the witnessing involution and the
/// classified configuration.
#[derive(Debug, Clone)]
pub struct SymmetryClassification {
    pub class: SymmetryClass,
    pub witness: Option<Involution>,
    pub mu: SiteId,
    pub nu: Option<SiteId>,
    pub m: SiteId,
    pub n: SiteId,
}

/// Classifies a configuration: class I if some involution fixes μ and swaps
/// m ↔ n (ν unconstrained), else class II if some involution swaps μ ↔ ν
/// and m ↔ n. Class I takes precedence when both hold, since its predicted
/// optimum `2|f|²` dominates.
pub fn classify(
    g: &SpinGraph,
    mu: SiteId,
    nu: Option<SiteId>,
    m: SiteId,
    n: SiteId,
) -> Result<SymmetryClassification> {
    if m == n {
        return Err(Error::InvalidTarget(format!("target sites must differ, got m = n = {m}")));
    }
    let sites = g.n_sites();
    for s in [Some(mu), nu, Some(m), Some(n)].into_iter().flatten() {
        if s.0 >= sites {
            return Err(Error::InvalidInput(format!("site {s} out of range for {sites} sites")));
        }
    }
    let involutions = find_involutions(g)?;
    let class_i = involutions.iter().find(|inv| inv.fixes(mu) && inv.swaps(m, n));
    if let Some(witness) = class_i {
        return Ok(SymmetryClassification {
            class: SymmetryClass::ClassI,
            witness: Some(witness.clone()),
            mu,
            nu,
            m,
            n,
        });
    }
    if let Some(nu) = nu {
        let class_ii = involutions.iter().find(|inv| inv.swaps(mu, nu) && inv.swaps(m, n));
        if let Some(witness) = class_ii {
            return Ok(SymmetryClassification {
                class: SymmetryClass::ClassII,
                witness: Some(witness.clone()),
                mu,
                nu: Some(nu),
                m,
                n,
            });
        }
    }
    Ok(SymmetryClassification { class: SymmetryClass::None, witness: None, mu, nu, m, n })
}

/// Predicted attainable concurrence at a transfer peak, together with the
/// raw transfer amplitude and the cross-amplitude magnitudes the prediction
/// neglects (reported instead of guessing a validity window).
#[derive(Debug, Clone, Copy)]
pub struct CmaxPrediction {
    pub class: SymmetryClass,
    pub predicted: f64,
    /// `|f_mμ(t*)|`.
    pub amplitude: f64,
    pub t_star: f64,
    /// `(|f_mν(t*)|, |f_nν(t*)|)` when the configuration names ν.
    pub cross_amplitudes: Option<(f64, f64)>,
}

/// Evaluates the class prediction at a caller-supplied peak time, typically
/// the argmax of `|f_mμ|`: class I → `2|f_mμ(t*)|²`, class II → `|f_mμ(t*)|²`.
pub fn predicted_cmax(
    cls: &SymmetryClassification,
    p: &Propagator,
    mu: SiteId,
    m: SiteId,
    t_star: f64,
) -> Result<CmaxPrediction> {
    let amplitude = p.amplitude(t_star, m, mu).norm();
    let predicted = match cls.class {
        SymmetryClass::ClassI => 2.0 * amplitude * amplitude,
        SymmetryClass::ClassII => amplitude * amplitude,
        SymmetryClass::None => {
            return Err(Error::InvalidClassification(
                "no class prediction exists for an unclassified configuration".into(),
            ))
        }
    };
    let cross_amplitudes =
        cls.nu.map(|nu| (p.amplitude(t_star, m, nu).norm(), p.amplitude(t_star, cls.n, nu).norm()));
    Ok(CmaxPrediction { class: cls.class, predicted, amplitude, t_star, cross_amplitudes })
}

/// All target pairs entanglable from μ through class I: the union of the
/// swap pairs of every involution fixing μ.
pub fn counterpart_coverage(g: &SpinGraph, mu: SiteId) -> Result<Vec<(SiteId, SiteId)>> {
    if mu.0 >= g.n_sites() {
        return Err(Error::InvalidInput(format!(
            "site {mu} out of range for {} sites",
            g.n_sites()
        )));
    }
    let mut pairs: BTreeSet<(SiteId, SiteId)> = BTreeSet::new();
    for inv in find_involutions(g)? {
        if inv.fixes(mu) {
            pairs.extend(inv.swap_pairs().iter().copied());
        }
    }
    Ok(pairs.into_iter().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{diagonalize, transition_amplitudes};
    use crate::graph::{Bond, Model};
    use crate::hamiltonian::build_single_excitation;

    fn uniform_chain(n: usize) -> SpinGraph {
        SpinGraph::make_chain(n, 1.0, &vec![0.0; n]).unwrap()
    }

    #[test]
    fn five_chain_has_one_mirror() {
        let invs = find_involutions(&uniform_chain(5)).unwrap();
        let nontrivial: Vec<_> = invs.iter().filter(|i| !i.is_identity()).collect();
        assert_eq!(nontrivial.len(), 1);
        let mirror = nontrivial[0];
        assert_eq!(mirror.perm(), &[4, 3, 2, 1, 0]);
        assert_eq!(mirror.fixed_sites(), &[SiteId(2)]);
        assert_eq!(mirror.swap_pairs(), &[(SiteId(0), SiteId(4)), (SiteId(1), SiteId(3))]);
        assert_eq!(mirror.cycle_notation(), "(0 4)(1 3)");
    }

    #[test]
    fn broken_mirror_leaves_identity() {
        let g = SpinGraph::make_weighted_chain(&[1.0, 1.0, 1.0, 0.7], &[0.0; 5]).unwrap();
        let invs = find_involutions(&g).unwrap();
        assert_eq!(invs.len(), 1);
        assert!(invs[0].is_identity());
    }

    #[test]
    fn odd_ring_reflections_each_fix_one_site() {
        let g = SpinGraph::make_ring(5, 1.0, 0.0).unwrap();
        let invs = find_involutions(&g).unwrap();
        let reflections: Vec<_> = invs.iter().filter(|i| !i.is_identity()).collect();
        assert_eq!(reflections.len(), 5);
        for r in &reflections {
            assert_eq!(r.fixed_sites().len(), 1);
            assert_eq!(r.swap_pairs().len(), 2);
        }
    }

    #[test]
    fn even_ring_has_reflections_and_antipode() {
        let g = SpinGraph::make_ring(6, 1.0, 0.0).unwrap();
        let invs = find_involutions(&g).unwrap();
        let nontrivial = invs.iter().filter(|i| !i.is_identity()).count();
        // 6 reflections (3 through sites, 3 through bonds) + antipodal rotation
        assert_eq!(nontrivial, 7);
        let site_free =
            invs.iter().filter(|i| !i.is_identity() && i.fixed_sites().is_empty()).count();
        assert_eq!(site_free, 4);
    }

    #[test]
    fn flux_ring_mirrors_are_phase_negated() {
        let g = SpinGraph::make_ring(5, 1.0, 0.3).unwrap();
        let invs = find_involutions(&g).unwrap();
        let reflections: Vec<_> = invs.iter().filter(|i| !i.is_identity()).collect();
        assert_eq!(reflections.len(), 5, "flux keeps all five mirrors, conjugated");
        assert!(reflections.iter().all(|i| i.phase_negated()));
    }

    #[test]
    fn involutions_reproduce_the_hamiltonian() {
        let graphs = vec![
            uniform_chain(6),
            SpinGraph::make_ring(4, 0.8, 0.0).unwrap().with_model(Model::Heisenberg),
            SpinGraph::make_chain(4, 1.0, &[0.05, 0.0, 0.0, 0.05]).unwrap(),
        ];
        for g in &graphs {
            let h = build_single_excitation(g);
            for inv in find_involutions(g).unwrap() {
                for a in 0..g.n_sites() {
                    for b in 0..g.n_sites() {
                        let mapped = h.matrix()[(inv.perm()[a], inv.perm()[b])];
                        let want = if inv.phase_negated() {
                            h.matrix()[(a, b)].conj()
                        } else {
                            h.matrix()[(a, b)]
                        };
                        assert!((mapped - want).norm() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn classification_examples() {
        let five = uniform_chain(5);
        let cls = classify(&five, SiteId(2), None, SiteId(1), SiteId(3)).unwrap();
        assert_eq!(cls.class, SymmetryClass::ClassI);
        assert!(cls.witness.unwrap().fixes(SiteId(2)));

        let four = uniform_chain(4);
        let cls = classify(&four, SiteId(0), Some(SiteId(3)), SiteId(1), SiteId(2)).unwrap();
        assert_eq!(cls.class, SymmetryClass::ClassII);

        let cls = classify(&five, SiteId(0), None, SiteId(1), SiteId(3)).unwrap();
        assert_eq!(cls.class, SymmetryClass::None);
        assert!(cls.witness.is_none());
    }

    #[test]
    fn class_i_takes_precedence() {
        // on a 4-ring, μ=0 ν=2: the mirror through 0 and 2 fixes μ and swaps
        // (1,3); the antipodal rotation swaps 0↔2 and 1↔3 (class II)
        let g = SpinGraph::make_ring(4, 1.0, 0.0).unwrap();
        let cls = classify(&g, SiteId(0), Some(SiteId(2)), SiteId(1), SiteId(3)).unwrap();
        assert_eq!(cls.class, SymmetryClass::ClassI);
    }

    #[test]
    fn classify_rejects_bad_sites() {
        let g = uniform_chain(4);
        assert!(classify(&g, SiteId(0), None, SiteId(1), SiteId(1)).is_err());
        assert!(classify(&g, SiteId(9), None, SiteId(1), SiteId(2)).is_err());
    }

    #[test]
    fn coverage_examples() {
        let five = uniform_chain(5);
        assert_eq!(
            counterpart_coverage(&five, SiteId(2)).unwrap(),
            vec![(SiteId(0), SiteId(4)), (SiteId(1), SiteId(3))]
        );
        assert!(counterpart_coverage(&five, SiteId(0)).unwrap().is_empty());

        let ring = SpinGraph::make_ring(5, 1.0, 0.0).unwrap();
        assert_eq!(
            counterpart_coverage(&ring, SiteId(0)).unwrap(),
            vec![(SiteId(1), SiteId(4)), (SiteId(2), SiteId(3))]
        );
    }

    #[test]
    fn class_i_amplitude_symmetry_is_exact_without_flux() {
        let g = uniform_chain(5);
        let p = diagonalize(&build_single_excitation(&g)).unwrap();
        for k in 0..100 {
            let t = 0.37 * k as f64;
            let f = transition_amplitudes(&p, t);
            let d = (f.entry(SiteId(1), SiteId(2)) - f.entry(SiteId(3), SiteId(2))).norm();
            assert!(d < 1e-10, "t={t}: asymmetry {d:.2e}");
        }
    }

    #[test]
    fn class_ii_amplitude_symmetry_is_exact_without_flux() {
        let g = uniform_chain(4);
        let p = diagonalize(&build_single_excitation(&g)).unwrap();
        for k in 0..100 {
            let t = 0.41 * k as f64;
            let f = transition_amplitudes(&p, t);
            let (m, n, mu, nu) = (SiteId(1), SiteId(2), SiteId(0), SiteId(3));
            assert!((f.entry(m, nu) - f.entry(n, mu)).norm() < 1e-10);
            assert!((f.entry(m, mu) - f.entry(n, nu)).norm() < 1e-10);
        }
    }

    #[test]
    fn prediction_formulas() {
        let g = uniform_chain(5);
        let p = diagonalize(&build_single_excitation(&g)).unwrap();
        let cls = classify(&g, SiteId(2), None, SiteId(1), SiteId(3)).unwrap();
        let pred = predicted_cmax(&cls, &p, SiteId(2), SiteId(1), 0.0).unwrap();
        // at t = 0 the transfer amplitude is zero, so the prediction is too
        assert!(pred.predicted < 1e-20);
        assert_eq!(pred.class, SymmetryClass::ClassI);

        let none = SymmetryClassification {
            class: SymmetryClass::None,
            witness: None,
            mu: SiteId(0),
            nu: None,
            m: SiteId(1),
            n: SiteId(2),
        };
        assert!(matches!(
            predicted_cmax(&none, &p, SiteId(0), SiteId(1), 1.0),
            Err(Error::InvalidClassification(_))
        ));
    }

    #[test]
    fn large_uniform_ring_uses_fast_path() {
        let g = SpinGraph::make_ring(20, 1.0, 0.0).unwrap();
        let invs = find_involutions(&g).unwrap();
        // identity + 20 reflections + antipodal rotation
        assert_eq!(invs.len(), 22);
    }

    #[test]
    fn large_non_ring_is_a_resource_error() {
        let g = uniform_chain(20);
        assert!(matches!(find_involutions(&g), Err(Error::Resource(_))));
    }

    #[test]
    fn heisenberg_field_dressed_graph_symmetries() {
        // fields must match under the permutation too
        let mut fields = vec![0.0; 5];
        fields[0] = 1.0;
        let g = SpinGraph::make_chain(5, 1.0, &fields).unwrap();
        let invs = find_involutions(&g).unwrap();
        assert_eq!(invs.len(), 1, "field on one end breaks the mirror");

        let mut sym_fields = vec![0.0; 5];
        sym_fields[0] = 1.0;
        sym_fields[4] = 1.0;
        let g = SpinGraph::make_chain(5, 1.0, &sym_fields).unwrap().with_model(Model::Heisenberg);
        let invs = find_involutions(&g).unwrap();
        assert_eq!(invs.iter().filter(|i| !i.is_identity()).count(), 1);
    }

    #[test]
    fn disconnected_graph_component_swap() {
        // two identical 2-chains: swapping the components is an involution
        let g = SpinGraph::new(
            Model::Xy,
            4,
            vec![0.0; 4],
            vec![
                Bond { i: SiteId(0), j: SiteId(1), coupling: 1.0, phase: 0.0 },
                Bond { i: SiteId(2), j: SiteId(3), coupling: 1.0, phase: 0.0 },
            ],
        )
        .unwrap();
        let invs = find_involutions(&g).unwrap();
        assert!(invs.iter().any(|i| i.perm() == [2, 3, 0, 1]));
        assert!(invs.iter().any(|i| i.perm() == [3, 2, 1, 0]));
    }
}
