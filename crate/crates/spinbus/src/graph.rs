//! Spin-graph data model: weighted interaction graphs with local fields and
//! directed bond phases, canonical chain/ring constructors, config parsing,
//! and gauge transformations.
//!
//! All values are immutable after construction and safe to share between
//! threads.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fmt;

use serde::Deserialize;

use crate::error::{Error, Result};

/// Index of a site; valid range is `[0, n_sites)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SiteId(pub usize);

impl fmt::Display for SiteId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<usize> for SiteId {
    fn from(index: usize) -> Self {
        SiteId(index)
    }
}

/// Interaction model. Both conserve the total magnetization, which is what
/// confines the dynamics to the single-excitation sector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    Xy,
    Heisenberg,
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Model::Xy => write!(f, "xy"),
            Model::Heisenberg => write!(f, "heisenberg"),
        }
    }
}

/// Weighted bond between two sites. `coupling` is in units of J; `phase` is
/// in radians and is directed `i -> j`: reading the bond in the opposite
/// direction negates it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bond {
    pub i: SiteId,
    pub j: SiteId,
    pub coupling: f64,
    pub phase: f64,
}

/// Per-site gauge phases χ_i used by [`SpinGraph::gauge_transform`].
#[derive(Debug, Clone, PartialEq)]
pub struct GaugePhases(pub Vec<f64>);

impl GaugePhases {
    pub fn zeros(n: usize) -> Self {
        GaugePhases(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Weighted spin graph with per-site local fields and bond phases.
///
/// The graph may be disconnected; there is no connectivity requirement.
#[derive(Debug, Clone)]
pub struct SpinGraph {
    model: Model,
    fields: Vec<f64>,
    bonds: Vec<Bond>,
    // unordered pair -> index into `bonds`
    pair_index: BTreeMap<(usize, usize), usize>,
}

impl SpinGraph {
    /// Builds a graph from explicit parts, validating every structural
    /// invariant of the data model.
    pub fn new(model: Model, n_sites: usize, fields: Vec<f64>, bonds: Vec<Bond>) -> Result<Self> {
        if n_sites == 0 {
            return Err(Error::InvalidSize("graph must have at least one site".into()));
        }
        if fields.len() != n_sites {
            return Err(Error::Validation(format!(
                "fields list has length {} but the graph has {} sites",
                fields.len(),
                n_sites
            )));
        }
        let mut pair_index = BTreeMap::new();
        for (idx, bond) in bonds.iter().enumerate() {
            let (a, b) = (bond.i.0, bond.j.0);
            if a == b {
                return Err(Error::Validation(format!("self-loop bond on site {a}")));
            }
            if a >= n_sites || b >= n_sites {
                return Err(Error::Validation(format!(
                    "bond ({a},{b}) references a site outside [0, {n_sites})"
                )));
            }
            let key = (a.min(b), a.max(b));
            if pair_index.insert(key, idx).is_some() {
                return Err(Error::Validation(format!(
                    "duplicate bond between sites {} and {}",
                    key.0, key.1
                )));
            }
        }
        Ok(SpinGraph { model, fields, bonds, pair_index })
    }

    /// Open chain of `n` sites with uniform coupling and the given fields.
    pub fn make_chain(n: usize, coupling: f64, fields: &[f64]) -> Result<Self> {
        Self::make_weighted_chain(&vec![coupling; n.saturating_sub(1)], fields)
    }

    /// Open chain with per-bond couplings; `couplings.len() + 1` sites.
    pub fn make_weighted_chain(couplings: &[f64], fields: &[f64]) -> Result<Self> {
        let n = fields.len();
        if n == 0 {
            return Err(Error::InvalidSize("chain must have at least one site".into()));
        }
        if couplings.len() + 1 != n {
            return Err(Error::Validation(format!(
                "{} couplings do not fit a chain of {} sites",
                couplings.len(),
                n
            )));
        }
        let bonds = couplings
            .iter()
            .enumerate()
            .map(|(k, &coupling)| Bond { i: SiteId(k), j: SiteId(k + 1), coupling, phase: 0.0 })
            .collect();
        Self::new(Model::Xy, n, fields.to_vec(), bonds)
    }

    /// Ring of `n >= 3` sites threaded by `flux` flux quanta, spread
    /// uniformly: every directed bond `k -> k+1 (mod n)` carries the phase
    /// `2π·flux/n`.
    pub fn make_ring(n: usize, coupling: f64, flux: f64) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidSize(format!("ring needs at least 3 sites, got {n}")));
        }
        let phase = TAU * flux / n as f64;
        let bonds = (0..n)
            .map(|k| Bond { i: SiteId(k), j: SiteId((k + 1) % n), coupling, phase })
            .collect();
        Self::new(Model::Xy, n, vec![0.0; n], bonds)
    }

    /// Returns the same graph with a different interaction model.
    pub fn with_model(mut self, model: Model) -> Self {
        self.model = model;
        self
    }

    pub fn model(&self) -> Model {
        self.model
    }

    pub fn n_sites(&self) -> usize {
        self.fields.len()
    }

    pub fn fields(&self) -> &[f64] {
        &self.fields
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    /// Coupling and directed phase read from `a` towards `b`, if bonded.
    pub fn bond_from(&self, a: SiteId, b: SiteId) -> Option<(f64, f64)> {
        let key = (a.0.min(b.0), a.0.max(b.0));
        self.pair_index.get(&key).map(|&idx| {
            let bond = self.bonds[idx];
            let phase = if bond.i == a { bond.phase } else { -bond.phase };
            (bond.coupling, phase)
        })
    }

    /// Neighbors of `site` in ascending order.
    pub fn neighbors(&self, site: SiteId) -> Vec<SiteId> {
        let mut out: Vec<SiteId> = self
            .bonds
            .iter()
            .filter_map(|b| {
                if b.i == site {
                    Some(b.j)
                } else if b.j == site {
                    Some(b.i)
                } else {
                    None
                }
            })
            .collect();
        out.sort();
        out
    }

    /// Applies per-site gauge phases: `phase(i->j) += χ_j − χ_i`. Couplings
    /// and fields are unchanged, and the phase sum around every cycle is
    /// invariant.
    pub fn gauge_transform(&self, chi: &GaugePhases) -> Result<SpinGraph> {
        if chi.len() != self.n_sites() {
            return Err(Error::InvalidInput(format!(
                "{} gauge phases for a graph of {} sites",
                chi.len(),
                self.n_sites()
            )));
        }
        let bonds = self
            .bonds
            .iter()
            .map(|b| Bond { phase: b.phase + chi.0[b.j.0] - chi.0[b.i.0], ..*b })
            .collect();
        SpinGraph::new(self.model, self.n_sites(), self.fields.clone(), bonds)
    }

    /// Component label per site. Labels are assigned in ascending order of
    /// each component's smallest site, starting at 0.
    pub fn connected_components(&self) -> Vec<usize> {
        let n = self.n_sites();
        let mut label = vec![usize::MAX; n];
        let mut next = 0;
        for start in 0..n {
            if label[start] != usize::MAX {
                continue;
            }
            let mut stack = vec![SiteId(start)];
            label[start] = next;
            while let Some(site) = stack.pop() {
                for nb in self.neighbors(site) {
                    if label[nb.0] == usize::MAX {
                        label[nb.0] = next;
                        stack.push(nb);
                    }
                }
            }
            next += 1;
        }
        label
    }

    /// Fundamental cycles of the graph, one per non-tree bond of a BFS
    /// spanning forest. Each cycle is a site sequence in which consecutive
    /// sites are bonded and the last site is bonded back to the first.
    pub fn fundamental_cycles(&self) -> Vec<Vec<SiteId>> {
        let n = self.n_sites();
        let mut parent: Vec<Option<SiteId>> = vec![None; n];
        let mut depth = vec![0usize; n];
        let mut seen = vec![false; n];
        let mut tree: Vec<(usize, usize)> = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut queue = std::collections::VecDeque::from([SiteId(start)]);
            while let Some(site) = queue.pop_front() {
                for nb in self.neighbors(site) {
                    if !seen[nb.0] {
                        seen[nb.0] = true;
                        parent[nb.0] = Some(site);
                        depth[nb.0] = depth[site.0] + 1;
                        tree.push((site.0.min(nb.0), site.0.max(nb.0)));
                        queue.push_back(nb);
                    }
                }
            }
        }
        let mut cycles = Vec::new();
        for bond in &self.bonds {
            let key = (bond.i.0.min(bond.j.0), bond.i.0.max(bond.j.0));
            if tree.contains(&key) {
                continue;
            }
            // walk both endpoints up to their common ancestor
            let (mut u, mut v) = (bond.i, bond.j);
            let mut left = vec![u];
            let mut right = vec![v];
            while depth[u.0] > depth[v.0] {
                u = parent[u.0].expect("deeper site has a parent");
                left.push(u);
            }
            while depth[v.0] > depth[u.0] {
                v = parent[v.0].expect("deeper site has a parent");
                right.push(v);
            }
            while u != v {
                u = parent[u.0].expect("sites in one component share an ancestor");
                v = parent[v.0].expect("sites in one component share an ancestor");
                left.push(u);
                right.push(v);
            }
            right.pop(); // drop duplicated ancestor
            right.reverse();
            left.extend(right);
            cycles.push(left);
        }
        cycles
    }

    /// Sum of directed phases around a closed site walk.
    pub fn cycle_phase(&self, cycle: &[SiteId]) -> Result<f64> {
        let mut total = 0.0;
        for k in 0..cycle.len() {
            let a = cycle[k];
            let b = cycle[(k + 1) % cycle.len()];
            let (_, phase) = self
                .bond_from(a, b)
                .ok_or_else(|| Error::InvalidInput(format!("no bond between {a} and {b}")))?;
            total += phase;
        }
        Ok(total)
    }

    /// Parses a graph config document (JSON object model).
    ///
    /// Full form:
    /// `{ "model": "xy"|"heisenberg", "sites": [{"id": 0, "field": 0.0}, ...],
    ///    "bonds": [{"i": 0, "j": 1, "J": 1.0, "phase": 0.0}, ...] }`
    /// plus the shorthands `"chain": {"n": 5, "J": 1.0}` and
    /// `"ring": {"n": 5, "J": 1.0, "flux": 0.3}`. Omitted `field`/`phase`
    /// entries default to 0.
    pub fn parse(text: &str) -> Result<SpinGraph> {
        let raw: RawConfig = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let model = match raw.model.as_deref() {
            None | Some("xy") => Model::Xy,
            Some("heisenberg") => Model::Heisenberg,
            Some(other) => {
                return Err(Error::Validation(format!(
                    "unknown model '{other}' (expected 'xy' or 'heisenberg')"
                )))
            }
        };
        let explicit = raw.sites.is_some() || raw.bonds.is_some();
        let forms = explicit as u8 + raw.chain.is_some() as u8 + raw.ring.is_some() as u8;
        if forms != 1 {
            return Err(Error::Validation(
                "config must contain exactly one of sites+bonds, 'chain', or 'ring'".into(),
            ));
        }
        if let Some(chain) = raw.chain {
            let fields = vec![0.0; chain.n];
            return if chain.n == 0 {
                Err(Error::InvalidSize("chain must have at least one site".into()))
            } else {
                Ok(Self::make_chain(chain.n, chain.coupling, &fields)?.with_model(model))
            };
        }
        if let Some(ring) = raw.ring {
            return Ok(Self::make_ring(ring.n, ring.coupling, ring.flux)?.with_model(model));
        }
        let sites = raw.sites.unwrap_or_default();
        if sites.is_empty() {
            return Err(Error::Validation("sites list must not be empty".into()));
        }
        let n = sites.len();
        let mut fields = vec![f64::NAN; n];
        for site in &sites {
            if site.id >= n {
                return Err(Error::Validation(format!(
                    "site id {} out of range for {} sites",
                    site.id, n
                )));
            }
            if !fields[site.id].is_nan() {
                return Err(Error::Validation(format!("duplicate site id {}", site.id)));
            }
            fields[site.id] = site.field;
        }
        let bonds = raw
            .bonds
            .unwrap_or_default()
            .iter()
            .map(|b| Bond { i: SiteId(b.i), j: SiteId(b.j), coupling: b.coupling, phase: b.phase })
            .collect();
        Self::new(model, n, fields, bonds)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    model: Option<String>,
    sites: Option<Vec<RawSite>>,
    bonds: Option<Vec<RawBond>>,
    chain: Option<RawChain>,
    ring: Option<RawRing>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSite {
    id: usize,
    #[serde(default)]
    field: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBond {
    i: usize,
    j: usize,
    #[serde(rename = "J")]
    coupling: f64,
    #[serde(default)]
    phase: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChain {
    n: usize,
    #[serde(rename = "J")]
    coupling: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRing {
    n: usize,
    #[serde(rename = "J")]
    coupling: f64,
    #[serde(default)]
    flux: f64,
}
