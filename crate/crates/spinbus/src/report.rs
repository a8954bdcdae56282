//! JSON report structures emitted by the CLI.
//!
//! Every float is rounded to 12 significant digits before serialization, so
//! repeated runs of the same command produce byte-identical artifacts, and
//! every report deserializes back into the structure that produced it.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::entanglement::Encoding;
use crate::optimizer::{
    EncodingOptimum, FluxTransferResult, PlanBudgets, SearchBudgets, TargetPlan,
};
use crate::symmetry::{CmaxPrediction, Involution, SymmetryClassification};

/// Rounds to 12 significant digits (the precision of all CLI output).
pub fn sig12(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().expect("formatted float reparses")
}

/// Complex number as an explicit re/im pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexValue {
    pub re: f64,
    pub im: f64,
}

impl From<C64> for ComplexValue {
    fn from(z: C64) -> Self {
        ComplexValue { re: sig12(z.re), im: sig12(z.im) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodingReport {
    pub mu: usize,
    pub nu: usize,
    pub alpha: ComplexValue,
    pub beta: ComplexValue,
    pub initial_concurrence: f64,
}

impl From<&Encoding> for EncodingReport {
    fn from(e: &Encoding) -> Self {
        EncodingReport {
            mu: e.mu().0,
            nu: e.nu().0,
            alpha: e.alpha().into(),
            beta: e.beta().into(),
            initial_concurrence: sig12(e.initial_concurrence()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateRow {
    pub t: f64,
    pub a: ComplexValue,
    pub b: ComplexValue,
    pub concurrence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateReport {
    pub command: String,
    pub encoding: EncodingReport,
    pub target: [usize; 2],
    pub rows: Vec<SimulateRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeRow {
    pub t: f64,
    pub i: usize,
    pub j: usize,
    pub f: ComplexValue,
    pub abs2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudesReport {
    pub command: String,
    pub pairs: Vec<[usize; 2]>,
    pub rows: Vec<AmplitudeRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimumReport {
    pub t: f64,
    pub concurrence: f64,
    pub alpha: ComplexValue,
    pub beta: ComplexValue,
    pub method: String,
}

impl From<&EncodingOptimum> for OptimumReport {
    fn from(o: &EncodingOptimum) -> Self {
        OptimumReport {
            t: sig12(o.t),
            concurrence: sig12(o.c),
            alpha: o.alpha.into(),
            beta: o.beta.into(),
            method: o.method.to_string(),
        }
    }
}

/// Per-term diagnostics of the four-way amplitude-product decomposition at
/// the reported optimum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermReport {
    pub value: ComplexValue,
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeReport {
    pub command: String,
    pub mu: usize,
    pub nu: usize,
    pub m: usize,
    pub n: usize,
    pub horizon: f64,
    pub steps: usize,
    pub best: OptimumReport,
    pub four_terms: Vec<TermReport>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchBudgetsReport {
    pub flux_points: usize,
    pub time_points: usize,
    pub time_horizon: f64,
    pub refine_passes: usize,
}

impl From<&SearchBudgets> for SearchBudgetsReport {
    fn from(b: &SearchBudgets) -> Self {
        SearchBudgetsReport {
            flux_points: b.flux_points,
            time_points: b.time_points,
            time_horizon: sig12(b.time_horizon),
            refine_passes: b.refine_passes,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluxScanReport {
    pub command: String,
    pub n: usize,
    pub coupling: f64,
    pub source: usize,
    pub target: usize,
    pub budgets: SearchBudgetsReport,
    pub flux: f64,
    pub t: f64,
    pub amplitude: f64,
    pub probability: f64,
}

impl FluxScanReport {
    pub fn new(
        n: usize,
        coupling: f64,
        source: usize,
        target: usize,
        budgets: &SearchBudgets,
        found: &FluxTransferResult,
    ) -> Self {
        FluxScanReport {
            command: "scan-flux".into(),
            n,
            coupling: sig12(coupling),
            source,
            target,
            budgets: budgets.into(),
            flux: sig12(found.flux),
            t: sig12(found.t),
            amplitude: sig12(found.amplitude),
            probability: sig12(found.probability),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub flux: f64,
    pub duration: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanReport {
    pub command: String,
    pub n: usize,
    pub coupling: f64,
    pub mu: usize,
    pub target: [usize; 2],
    pub flux_budgets: SearchBudgetsReport,
    pub stage2_time_points: usize,
    pub stage2_horizon: f64,
    pub stages: Vec<StageReport>,
    pub transfer_site: usize,
    pub transfer_amplitude: f64,
    pub encoding: EncodingReport,
    pub achieved_c: f64,
}

impl PlanReport {
    pub fn new(n: usize, coupling: f64, budgets: &PlanBudgets, plan: &TargetPlan) -> Self {
        PlanReport {
            command: "plan".into(),
            n,
            coupling: sig12(coupling),
            mu: plan.encoding.mu().0,
            target: [plan.target.0 .0, plan.target.1 .0],
            flux_budgets: (&budgets.flux).into(),
            stage2_time_points: budgets.stage2_time_points,
            stage2_horizon: sig12(budgets.stage2_horizon),
            stages: plan
                .stages
                .iter()
                .map(|s| StageReport { flux: sig12(s.flux), duration: sig12(s.duration) })
                .collect(),
            transfer_site: plan.transfer_site.0,
            transfer_amplitude: sig12(plan.transfer_amplitude),
            encoding: (&plan.encoding).into(),
            achieved_c: sig12(plan.achieved_c),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvolutionReport {
    pub permutation: Vec<usize>,
    pub cycles: String,
    pub fixed_sites: Vec<usize>,
    pub swap_pairs: Vec<[usize; 2]>,
    pub phase_negated: bool,
}

impl From<&Involution> for InvolutionReport {
    fn from(inv: &Involution) -> Self {
        InvolutionReport {
            permutation: inv.perm().to_vec(),
            cycles: inv.cycle_notation(),
            fixed_sites: inv.fixed_sites().iter().map(|s| s.0).collect(),
            swap_pairs: inv.swap_pairs().iter().map(|&(a, b)| [a.0, b.0]).collect(),
            phase_negated: inv.phase_negated(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub class: String,
    pub witness: Option<String>,
    pub mu: usize,
    pub nu: Option<usize>,
    pub m: usize,
    pub n: usize,
    pub t_star: Option<f64>,
    pub amplitude: Option<f64>,
    pub predicted_cmax: Option<f64>,
    pub cross_amplitudes: Option<[f64; 2]>,
}

impl ClassificationReport {
    pub fn new(cls: &SymmetryClassification, prediction: Option<&CmaxPrediction>) -> Self {
        ClassificationReport {
            class: cls.class.to_string(),
            witness: cls.witness.as_ref().map(Involution::cycle_notation),
            mu: cls.mu.0,
            nu: cls.nu.map(|s| s.0),
            m: cls.m.0,
            n: cls.n.0,
            t_star: prediction.map(|p| sig12(p.t_star)),
            amplitude: prediction.map(|p| sig12(p.amplitude)),
            predicted_cmax: prediction.map(|p| sig12(p.predicted)),
            cross_amplitudes: prediction
                .and_then(|p| p.cross_amplitudes)
                .map(|(a, b)| [sig12(a), sig12(b)]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetryReport {
    pub command: String,
    pub n_sites: usize,
    pub involutions: Vec<InvolutionReport>,
    pub classification: Option<ClassificationReport>,
}
