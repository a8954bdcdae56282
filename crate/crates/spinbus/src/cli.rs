//! Command-line front end: one subcommand per concern (dynamics traces,
//! encoding optimization, flux scans, targeting plans, symmetry analysis),
//! emitting CSV or JSON artifacts.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 validation failure. Repeated
//! runs with the same arguments produce byte-identical artifacts regardless
//! of `SPINBUS_THREADS`; wall time goes to stderr only.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64 as C64;

use crate::dynamics::{
    amplitude_series, diagonalize, transition_amplitudes, write_series_csv, Propagator,
};
use crate::entanglement::{
    concurrence_closed_form, four_term_decomposition, pair_amplitudes, Encoding,
};
use crate::error::{Error, Result};
use crate::graph::{SiteId, SpinGraph};
use crate::hamiltonian::build_single_excitation;
use crate::optimizer::{
    flux_transfer_search, max_transfer_amplitude, optimize_over_time, plan_targeting, PlanBudgets,
    SearchBudgets,
};
use crate::report::{
    sig12, AmplitudeRow, AmplitudesReport, ClassificationReport, FluxScanReport, OptimizeReport,
    PlanReport, SimulateReport, SimulateRow, SymmetryReport, TermReport,
};
use crate::symmetry::{classify, find_involutions, predicted_cmax};

/// Environment variable capping sweep parallelism.
pub const THREADS_ENV: &str = "SPINBUS_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "spinbus",
    version,
    about = "Entanglement distribution through unmodulated spin graphs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct EncodingArgs {
    /// First encoded site μ
    #[arg(long)]
    pub mu: usize,
    /// Second encoded site ν (omit for a bare excitation of μ)
    #[arg(long)]
    pub nu: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub alpha_re: f64,
    #[arg(long, default_value_t = 0.0)]
    pub alpha_im: f64,
    #[arg(long, default_value_t = 0.0)]
    pub beta_re: f64,
    #[arg(long, default_value_t = 0.0)]
    pub beta_im: f64,
}

impl EncodingArgs {
    /// Builds the (normalized) encoding.
    pub fn encoding(&self) -> Result<Encoding> {
        let alpha = C64::new(self.alpha_re, self.alpha_im);
        let beta = C64::new(self.beta_re, self.beta_im);
        match self.nu {
            Some(nu) => Encoding::normalized(SiteId(self.mu), SiteId(nu), alpha, beta),
            None => {
                if beta.norm() != 0.0 {
                    return Err(Error::Validation(
                        "a nonzero β requires a second encoded site --nu".into(),
                    ));
                }
                Ok(Encoding::excitation(SiteId(self.mu)))
            }
        }
    }
}

#[derive(Debug, Args)]
pub struct FluxBudgetArgs {
    /// Flux grid points over [0, 1) flux quanta
    #[arg(long, default_value_t = 512)]
    pub flux_points: usize,
    /// Time grid points over [0, horizon]
    #[arg(long, default_value_t = 4096)]
    pub time_points: usize,
    /// Time horizon in units of 1/J
    #[arg(long, default_value_t = 40.0)]
    pub horizon: f64,
    /// Local refinement passes around the best grid cell
    #[arg(long, default_value_t = 1)]
    pub refine: usize,
}

impl FluxBudgetArgs {
    pub fn budgets(&self) -> SearchBudgets {
        SearchBudgets {
            flux_points: self.flux_points,
            time_points: self.time_points,
            time_horizon: self.horizon,
            refine_passes: self.refine,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evolve an encoding and tabulate the target-pair amplitudes and
    /// concurrence over a time grid
    Simulate {
        /// Graph config document (JSON)
        #[arg(long)]
        graph: PathBuf,
        #[command(flatten)]
        encoding: EncodingArgs,
        /// First target site
        #[arg(long)]
        m: usize,
        /// Second target site
        #[arg(long)]
        n: usize,
        #[arg(long)]
        t_max: f64,
        #[arg(long, default_value_t = 1000)]
        steps: usize,
        #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
        format: OutputFormat,
        /// Output path (stdout when omitted)
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Tabulate transition amplitudes f_ij(t) for chosen site pairs
    Amplitudes {
        #[arg(long)]
        graph: PathBuf,
        /// Pairs as `i:j` separated by commas, e.g. `0:1,0:2`
        #[arg(long)]
        pairs: String,
        #[arg(long)]
        t_max: f64,
        #[arg(long, default_value_t = 1000)]
        steps: usize,
        #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
        format: OutputFormat,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Jointly optimize the encoding and evolution time for a target pair
    Optimize {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        mu: usize,
        #[arg(long)]
        nu: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 40.0)]
        horizon: f64,
        #[arg(long, default_value_t = 4096)]
        steps: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Search ring flux and time for the best excitation transfer
    ScanFlux {
        /// Ring size
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        coupling: f64,
        #[arg(long)]
        source: usize,
        #[arg(long)]
        target: usize,
        #[command(flatten)]
        budgets: FluxBudgetArgs,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Two-stage fixed-site targeting plan on a ring
    Plan {
        /// Ring size
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        coupling: f64,
        /// Fixed excited site
        #[arg(long)]
        mu: usize,
        /// First target site
        #[arg(long)]
        m: usize,
        /// Second target site
        #[arg(long)]
        n_site: usize,
        #[command(flatten)]
        budgets: FluxBudgetArgs,
        #[arg(long, default_value_t = 4096)]
        stage2_time_points: usize,
        #[arg(long, default_value_t = 40.0)]
        stage2_horizon: f64,
        /// Keep the stage-1 flux on during stage 2
        #[arg(long, default_value_t = false)]
        keep_flux: bool,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// List involutions; optionally classify a configuration and evaluate
    /// the class prediction
    Symmetry {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        mu: Option<usize>,
        #[arg(long)]
        nu: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        n: Option<usize>,
        /// Horizon of the |f_mμ| peak scan behind the prediction
        #[arg(long, default_value_t = 40.0)]
        horizon: f64,
        #[arg(long, default_value_t = 4096)]
        steps: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

/// Maps an error to the documented process exit code.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) => 1,
        _ => 2,
    }
}

/// Executes one parsed command, writing its artifact to the requested
/// output.
pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { graph, encoding, m, n, t_max, steps, format, output } => {
            let p = load_propagator(&graph)?;
            let e = encoding.encoding()?;
            let times = time_grid(t_max, steps)?;
            let mut rows = Vec::with_capacity(times.len());
            for &t in &times {
                let f = transition_amplitudes(&p, t);
                let pa = pair_amplitudes(&f, &e, SiteId(m), SiteId(n))?;
                rows.push(SimulateRow {
                    t: sig12(t),
                    a: pa.a.into(),
                    b: pa.b.into(),
                    concurrence: sig12(concurrence_closed_form(&pa)),
                });
            }
            match format {
                OutputFormat::Csv => {
                    let mut buf = Vec::new();
                    writeln!(buf, "t,re_a,im_a,re_b,im_b,concurrence")?;
                    for r in &rows {
                        writeln!(
                            buf,
                            "{:.11e},{:.11e},{:.11e},{:.11e},{:.11e},{:.11e}",
                            r.t, r.a.re, r.a.im, r.b.re, r.b.im, r.concurrence
                        )?;
                    }
                    write_output(output.as_deref(), &buf)
                }
                OutputFormat::Json => {
                    let report = SimulateReport {
                        command: "simulate".into(),
                        encoding: (&e).into(),
                        target: [m, n],
                        rows,
                    };
                    write_json(output.as_deref(), &report)
                }
            }
        }
        Command::Amplitudes { graph, pairs, t_max, steps, format, output } => {
            let p = load_propagator(&graph)?;
            let pairs = parse_pairs(&pairs)?;
            let times = time_grid(t_max, steps)?;
            let rows = amplitude_series(&p, &times, &pairs)?;
            match format {
                OutputFormat::Csv => {
                    let mut buf = Vec::new();
                    write_series_csv(&mut buf, &rows)?;
                    write_output(output.as_deref(), &buf)
                }
                OutputFormat::Json => {
                    let report = AmplitudesReport {
                        command: "amplitudes".into(),
                        pairs: pairs.iter().map(|&(a, b)| [a.0, b.0]).collect(),
                        rows: rows
                            .iter()
                            .map(|r| AmplitudeRow {
                                t: sig12(r.t),
                                i: r.i.0,
                                j: r.j.0,
                                f: r.f.into(),
                                abs2: sig12(r.abs2),
                            })
                            .collect(),
                    };
                    write_json(output.as_deref(), &report)
                }
            }
        }
        Command::Optimize { graph, mu, nu, m, n, horizon, steps, output } => {
            let p = load_propagator(&graph)?;
            let best = optimize_over_time(
                &p,
                SiteId(mu),
                SiteId(nu),
                SiteId(m),
                SiteId(n),
                horizon,
                steps,
            )?;
            let f = transition_amplitudes(&p, best.t);
            let e = Encoding::normalized(SiteId(mu), SiteId(nu), best.alpha, best.beta)?;
            let terms = four_term_decomposition(&f, &e, SiteId(m), SiteId(n))?;
            let report = OptimizeReport {
                command: "optimize".into(),
                mu,
                nu,
                m,
                n,
                horizon: sig12(horizon),
                steps,
                best: (&best).into(),
                four_terms: terms
                    .terms
                    .iter()
                    .map(|&z| TermReport { value: z.into(), magnitude: sig12(z.norm()) })
                    .collect(),
            };
            write_json(output.as_deref(), &report)
        }
        Command::ScanFlux { n, coupling, source, target, budgets, output } => {
            let budgets = budgets.budgets();
            let found =
                flux_transfer_search(n, coupling, SiteId(source), SiteId(target), &budgets)?;
            let report = FluxScanReport::new(n, coupling, source, target, &budgets, &found);
            write_json(output.as_deref(), &report)
        }
        Command::Plan {
            n,
            coupling,
            mu,
            m,
            n_site,
            budgets,
            stage2_time_points,
            stage2_horizon,
            keep_flux,
            output,
        } => {
            let budgets = PlanBudgets {
                flux: budgets.budgets(),
                stage2_time_points,
                stage2_horizon,
                stage2_refine_passes: 1,
                keep_flux_in_stage2: keep_flux,
            };
            let plan =
                plan_targeting(n, coupling, SiteId(mu), SiteId(m), SiteId(n_site), &budgets)?;
            let report = PlanReport::new(n, coupling, &budgets, &plan);
            write_json(output.as_deref(), &report)
        }
        Command::Symmetry { graph, mu, nu, m, n, horizon, steps, output } => {
            let g = load_graph(&graph)?;
            let involutions = find_involutions(&g)?;
            let classification = match (mu, m, n) {
                (Some(mu), Some(m), Some(n)) => {
                    let cls = classify(&g, SiteId(mu), nu.map(SiteId), SiteId(m), SiteId(n))?;
                    let prediction = if cls.class == crate::symmetry::SymmetryClass::None {
                        None
                    } else {
                        let p = diagonalize(&build_single_excitation(&g))?;
                        let (t_star, _) =
                            max_transfer_amplitude(&p, SiteId(mu), SiteId(m), horizon, steps, 4)?;
                        Some(predicted_cmax(&cls, &p, SiteId(mu), SiteId(m), t_star)?)
                    };
                    Some(ClassificationReport::new(&cls, prediction.as_ref()))
                }
                (None, None, None) => None,
                _ => {
                    return Err(Error::Validation(
                        "classification needs --mu, --m and --n together".into(),
                    ))
                }
            };
            let report = SymmetryReport {
                command: "symmetry".into(),
                n_sites: g.n_sites(),
                involutions: involutions.iter().map(Into::into).collect(),
                classification,
            };
            write_json(output.as_deref(), &report)
        }
    }
}

fn load_graph(path: &Path) -> Result<SpinGraph> {
    let text = fs::read_to_string(path)?;
    SpinGraph::parse(&text)
}

fn load_propagator(path: &Path) -> Result<Propagator> {
    let g = load_graph(path)?;
    diagonalize(&build_single_excitation(&g))
}

/// Uniform inclusive grid `0 ..= t_max` with `steps` points.
fn time_grid(t_max: f64, steps: usize) -> Result<Vec<f64>> {
    if t_max.is_nan() || t_max <= 0.0 {
        return Err(Error::Validation(format!("t-max must be positive, got {t_max}")));
    }
    if steps < 2 {
        return Err(Error::Validation(format!("steps must be at least 2, got {steps}")));
    }
    Ok((0..steps).map(|i| t_max * i as f64 / (steps - 1) as f64).collect())
}

/// Parses `i:j,k:l` pair lists.
fn parse_pairs(text: &str) -> Result<Vec<(SiteId, SiteId)>> {
    let mut pairs = Vec::new();
    for chunk in text.split(',') {
        let (a, b) = chunk
            .split_once(':')
            .ok_or_else(|| Error::Validation(format!("pair '{chunk}' is not of the form i:j")))?;
        let parse = |s: &str| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| Error::Validation(format!("'{s}' is not a site index")))
        };
        pairs.push((SiteId(parse(a)?), SiteId(parse(b)?)));
    }
    if pairs.is_empty() {
        return Err(Error::Validation("at least one pair is required".into()));
    }
    Ok(pairs)
}

fn write_output(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(path) => fs::write(path, bytes)?,
        None => std::io::stdout().write_all(bytes)?,
    }
    Ok(())
}

fn write_json<T: serde::Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Validation(format!("serialization failed: {e}")))?;
    text.push('\n');
    write_output(path, text.as_bytes())
}
