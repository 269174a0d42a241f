//! Command-line front end. Every command prints one report; exit code 0 means
//! success, 1 a failed mathematical verdict and 2 a usage or input error.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use crate::cubecomplex::{build_complex, CubeComplex, CubeError, Limits, MedianReport, DEFAULT_MAX_PAIRS};
use crate::instance::{Instance, InstanceError, NonCanonical};
use crate::minimal::{
    build_cubings, explore_orders, inclusion_cubing, almost_cubing, repair_good_position, st_cross,
    very_good_position_family, verify_embedding, Cubing, DichotomyVerdict, EmbeddingReport, MinimalError,
    OrderExploration, Repair, RepairBudget, StWitnesses,
};
use crate::pocset::{Pocset, PocsetError};
use crate::relations::{analyze_symmetries, check_condition_star, parallel_orbits, ParallelOrbit, RelationError, SymmetryReport};
use crate::window::{Policy, Window, WindowError, WindowSummary};

/// Environment variable overriding the pair cap of the cube complex builder.
pub const CAP_PAIRS_VAR: &str = "MINICUBE_CAP_PAIRS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Window(#[from] WindowError),
    #[error(transparent)]
    Minimal(#[from] MinimalError),
    #[error(transparent)]
    Cube(#[from] CubeError),
    #[error(transparent)]
    Relation(#[from] RelationError),
    #[error(transparent)]
    Pocset(#[from] PocsetError),
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Usage(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OrderMode {
    Inclusion,
    Almost,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Dot,
    Text,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    Lex,
    All,
}

impl From<PolicyArg> for Policy {
    fn from(p: PolicyArg) -> Policy {
        match p {
            PolicyArg::Lex => Policy::Lex,
            PolicyArg::All => Policy::All,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "minicube", version, about = "Cubings of almost invariant sets on finite windows")]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
    /// Window radius R (default: the instance's, else 3).
    #[arg(long, global = true)]
    pub radius: Option<usize>,
    /// Window margin Δ (default: the instance's, else 2).
    #[arg(long, global = true)]
    pub margin: Option<usize>,
    #[arg(long, global = true, value_enum, default_value = "lex")]
    pub policy: PolicyArg,
    /// Largest number of orbits toggled by the repair search.
    #[arg(long, global = true, default_value_t = 2)]
    pub budget: usize,
    #[arg(long, global = true, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check an instance file and the canonical form of its sets.
    Validate { instance: PathBuf },
    /// Classify the translate pairs of the window.
    Relations { instance: PathBuf },
    /// Move each set into good position; with --very-good also run the transform.
    Repair {
        instance: PathBuf,
        #[arg(long)]
        very_good: bool,
    },
    /// Build the cubing of one order.
    Cubing {
        instance: PathBuf,
        #[arg(long, value_enum, default_value = "inclusion")]
        order: OrderMode,
        /// Repair the family before building.
        #[arg(long)]
        repair: bool,
    },
    /// Build both cubings and check the embedding of L in C.
    Compare {
        instance: PathBuf,
        #[arg(long)]
        repair: bool,
    },
    /// Symmetries, S/T witnesses and parallel orbits; --orders explores alternative orders.
    Analyze {
        instance: PathBuf,
        #[arg(long)]
        orders: bool,
        /// Radius of the symmetry and witness scans.
        #[arg(long, default_value_t = 4)]
        scan_radius: usize,
    },
    /// Build the cubing of an abstract pocset given as text.
    Pocset { file: PathBuf },
}

/// Output of a successful run.
#[derive(Debug)]
pub struct Outcome {
    pub text: String,
    /// False when a mathematical verdict failed.
    pub verdict_ok: bool,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.verdict_ok {
            0
        } else {
            1
        }
    }
}

pub fn limits_from_env() -> Result<Limits, CliError> {
    let mut limits = Limits::default();
    if let Ok(v) = std::env::var(CAP_PAIRS_VAR) {
        limits.max_pairs = v
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("{CAP_PAIRS_VAR}={v} is not a number (default {DEFAULT_MAX_PAIRS})")))?;
    }
    Ok(limits)
}

fn json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("reports serialize") + "\n"
}

fn no_dot(command: &str) -> CliError {
    CliError::Usage(format!("`{command}` has no DOT output; use --format json or text"))
}

fn window_of(cfg: &RunConfig, inst: &Instance) -> Result<Window, CliError> {
    let radius = cfg.radius.unwrap_or(inst.window.radius);
    let margin = cfg.margin.unwrap_or(inst.window.margin);
    Ok(Window::build(inst, radius, margin)?)
}

fn budget_of(cfg: &RunConfig, inst: &Instance) -> RepairBudget {
    let check_radius = cfg.radius.unwrap_or(inst.window.radius);
    RepairBudget { max_toggles: cfg.budget, check_radius, ..RepairBudget::default() }
}

fn repaired(cfg: &RunConfig, inst: &Instance) -> Result<(Instance, Vec<Repair>), CliError> {
    let budget = budget_of(cfg, inst);
    let repairs: Vec<Repair> =
        inst.family.iter().map(|x| repair_good_position(x, &budget)).collect::<Result<_, _>>()?;
    let family = repairs.iter().map(|r| r.descriptor.clone()).collect();
    Ok((Instance::new(inst.backend, family, inst.window)?, repairs))
}

#[derive(Serialize)]
struct ValidateReport {
    backend: String,
    sets: Vec<String>,
    non_canonical: Vec<NonCanonical>,
}

#[derive(Serialize)]
struct ComplexReport {
    order: &'static str,
    pairs: usize,
    vertices: usize,
    edges: usize,
    cube_counts: Vec<usize>,
    dimension: usize,
    hyperplanes: usize,
    basic_vertices: usize,
    median: MedianReport,
}

fn complex_report(order: &'static str, cub: &Cubing) -> Result<ComplexReport, CliError> {
    let cx = &cub.complex;
    Ok(ComplexReport {
        order,
        pairs: cx.pocset().map_or(0, |p| p.pairs()),
        vertices: cub.vertices().len(),
        edges: cx.edges().len(),
        cube_counts: cx.cube_counts().to_vec(),
        dimension: cub.dimension(),
        hyperplanes: cx.hyperplanes(cub.component)?.len(),
        basic_vertices: cub.basic.len(),
        median: cx.check_median(cub.component)?,
    })
}

#[derive(Serialize)]
struct RepairReport {
    repairs: Vec<Repair>,
    family_good_position: bool,
    instance: serde_json::Value,
    very_good: Option<Vec<VeryGoodReport>>,
}

#[derive(Serialize)]
struct VeryGoodReport {
    vertex_at: String,
    transformed: Vec<Option<String>>,
    verdict: DichotomyVerdict,
}

#[derive(Serialize)]
struct CompareReport {
    embedding: EmbeddingReport,
    summary: String,
}

#[derive(Serialize)]
struct AnalyzeReport {
    symmetries: Vec<SymmetryReport>,
    st: Vec<StEntry>,
    parallel_orbits: Vec<ParallelOrbit>,
    orders: Option<Vec<OrderExploration>>,
}

#[derive(Serialize)]
struct StEntry {
    member: usize,
    target: usize,
    witnesses: StWitnesses,
}

#[derive(Serialize)]
struct PocsetReport {
    pairs: usize,
    vertices: usize,
    edges: usize,
    cube_counts: Vec<usize>,
    components: usize,
    median: Vec<MedianReport>,
}

fn embedding_summary(r: &EmbeddingReport) -> String {
    let relation = if r.vertices_l == r.vertices_c { "L = C" } else { "L ⊂ C" };
    if r.passed() {
        format!("{relation}, isometric")
    } else {
        format!("{relation}, embedding violated")
    }
}

pub fn run(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let limits = limits_from_env()?;
    match &cfg.command {
        Command::Validate { instance } => {
            let text = std::fs::read_to_string(instance)
                .map_err(|source| CliError::Io { path: instance.display().to_string(), source })?;
            let (inst, non_canonical) = Instance::parse_checked(&text)?;
            let report = ValidateReport {
                backend: inst.backend.to_string(),
                sets: inst.family.iter().map(|d| d.to_string()).collect(),
                non_canonical,
            };
            let text = match cfg.format {
                Format::Json => json(&report),
                Format::Text => {
                    let mut s = format!("valid {} instance with {} sets\n", report.backend, report.sets.len());
                    for n in &report.non_canonical {
                        let _ = writeln!(s, "set {}: {} is canonically {}", n.index, n.given, n.canonical);
                    }
                    s
                }
                Format::Dot => return Err(no_dot("validate")),
            };
            Ok(Outcome { text, verdict_ok: true })
        }
        Command::Relations { instance } => {
            let inst = Instance::load(instance)?;
            let w = window_of(cfg, &inst)?;
            let summary: WindowSummary = w.summary();
            let text = match cfg.format {
                Format::Json => json(&summary),
                Format::Text => format!(
                    "{} pairs; nested {}, semi-nested {}, crossing {}, double-small {}; good position: {}\n",
                    summary.pairs,
                    summary.census.nested,
                    summary.census.semi_nested,
                    summary.census.crossing,
                    summary.census.double_small_violation,
                    summary.good_position
                ),
                Format::Dot => return Err(no_dot("relations")),
            };
            Ok(Outcome { text, verdict_ok: true })
        }
        Command::Repair { instance, very_good } => {
            let inst = Instance::load(instance)?;
            let (fixed, repairs) = repaired(cfg, &inst)?;
            let radius = cfg.radius.unwrap_or(inst.window.radius);
            let family_good_position = check_condition_star(&fixed.family, radius)?.is_empty();
            let very_good = if *very_good {
                let w = window_of(cfg, &fixed)?;
                let l = almost_cubing(&w, cfg.policy.into(), &limits)?;
                let mut out = Vec::new();
                for (g, v) in l.basic.iter().filter(|(g, _)| *g == fixed.backend.identity()) {
                    let f = very_good_position_family(&w, &l.complex.vertices()[*v])?;
                    out.push(VeryGoodReport {
                        vertex_at: g.to_string(),
                        transformed: f.transforms.iter().map(|t| t.fitted.as_ref().map(|d| d.to_string())).collect(),
                        verdict: f.verdict,
                    });
                }
                Some(out)
            } else {
                None
            };
            let report = RepairReport {
                repairs,
                family_good_position,
                instance: serde_json::from_str(&fixed.to_json()).expect("instance JSON parses"),
                very_good,
            };
            let text = match cfg.format {
                Format::Json => json(&report),
                Format::Text => {
                    let mut s = String::new();
                    for r in &report.repairs {
                        let _ = writeln!(s, "{} -> {}", r.original, r.repaired);
                    }
                    let _ = writeln!(s, "family in good position: {}", report.family_good_position);
                    s
                }
                Format::Dot => return Err(no_dot("repair")),
            };
            Ok(Outcome { text, verdict_ok: true })
        }
        Command::Cubing { instance, order, repair } => {
            let mut inst = Instance::load(instance)?;
            if *repair {
                inst = repaired(cfg, &inst)?.0;
            }
            let w = window_of(cfg, &inst)?;
            let (name, cub) = match order {
                OrderMode::Inclusion => ("inclusion", inclusion_cubing(&w, &limits)?),
                OrderMode::Almost => ("almost", almost_cubing(&w, cfg.policy.into(), &limits)?),
            };
            let report = complex_report(name, &cub)?;
            let verdict_ok = report.median.passed();
            let text = match cfg.format {
                Format::Json => json(&report),
                Format::Dot => cub.complex.to_dot(Some(&cub.basic.iter().map(|(_, v)| *v).collect::<Vec<_>>())),
                Format::Text => format!(
                    "{} cubing: {} vertices, {} edges, dimension {}, median check {}\n",
                    name,
                    report.vertices,
                    report.edges,
                    report.dimension,
                    if verdict_ok { "passed" } else { "failed" }
                ),
            };
            Ok(Outcome { text, verdict_ok })
        }
        Command::Compare { instance, repair } => {
            let mut inst = Instance::load(instance)?;
            if *repair {
                inst = repaired(cfg, &inst)?.0;
            }
            let w = window_of(cfg, &inst)?;
            let cs = build_cubings(&w, cfg.policy.into(), &limits)?;
            let l = cs.l?;
            let embedding = verify_embedding(&cs.c, &l)?;
            let verdict_ok = embedding.passed();
            let text = match cfg.format {
                Format::Dot => {
                    let marked: Vec<usize> = embedding.vertex_map.iter().flatten().copied().collect();
                    cs.c.complex.to_dot(Some(&marked))
                }
                Format::Json => json(&CompareReport { summary: embedding_summary(&embedding), embedding }),
                Format::Text => embedding_summary(&embedding) + "\n",
            };
            Ok(Outcome { text, verdict_ok })
        }
        Command::Analyze { instance, orders, scan_radius } => {
            let inst = Instance::load(instance)?;
            let fam = &inst.family;
            let mut symmetries = Vec::new();
            for x in fam {
                symmetries.push(analyze_symmetries(x, *scan_radius)?.report());
            }
            let mut st = Vec::new();
            for (i, x) in fam.iter().enumerate() {
                for (j, y) in fam.iter().enumerate() {
                    st.push(StEntry { member: i, target: j, witnesses: st_cross(x, y, *scan_radius)? });
                }
            }
            let verdict_ok = st.iter().all(|e| e.witnesses.s_within_t());
            let orders = if *orders {
                let budget = budget_of(cfg, &inst);
                Some(fam.iter().map(|x| explore_orders(x, &budget, 12)).collect::<Result<Vec<_>, _>>()?)
            } else {
                None
            };
            let report = AnalyzeReport { symmetries, st, parallel_orbits: parallel_orbits(fam, *scan_radius)?, orders };
            let text = match cfg.format {
                Format::Json => json(&report),
                Format::Text => {
                    let mut s = String::new();
                    for e in &report.st {
                        let _ = writeln!(
                            s,
                            "X{} against X{}: {} crossing, {} non-nested witnesses",
                            e.member,
                            e.target,
                            e.witnesses.s.len(),
                            e.witnesses.t.len()
                        );
                    }
                    s
                }
                Format::Dot => return Err(no_dot("analyze")),
            };
            Ok(Outcome { text, verdict_ok })
        }
        Command::Pocset { file } => {
            let text =
                std::fs::read_to_string(file).map_err(|source| CliError::Io { path: file.display().to_string(), source })?;
            let p = Pocset::parse_text(&text)?;
            let cx: CubeComplex = build_complex(&p, &limits)?;
            let median: Vec<MedianReport> =
                (0..cx.components().len()).map(|c| cx.check_median(c)).collect::<Result<_, _>>()?;
            let verdict_ok = median.iter().all(|m| m.passed());
            let report = PocsetReport {
                pairs: p.pairs(),
                vertices: cx.vertex_count(),
                edges: cx.edges().len(),
                cube_counts: cx.cube_counts().to_vec(),
                components: cx.components().len(),
                median,
            };
            let text = match cfg.format {
                Format::Json => json(&report),
                Format::Dot => cx.to_dot(None),
                Format::Text => format!(
                    "{} pairs, {} vertices, {} edges, dimension {}\n",
                    report.pairs,
                    report.vertices,
                    report.edges,
                    cx.dimension()
                ),
            };
            Ok(Outcome { text, verdict_ok })
        }
    }
}
