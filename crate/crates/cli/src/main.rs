//! Command-line front end: load graph descriptions, run verification
//! suites, and emit deterministic reports.

use clap::{Parser, Subcommand, ValueEnum};
use pgraph_core::algebra::checks;
use pgraph_core::algebra::{Flavor, Representation};
use pgraph_core::error::Error;
use pgraph_core::filters::{enumerate_filters, UltraStatus};
use pgraph_core::graph::PGraph;
use pgraph_core::qlo::vee_closure;
use pgraph_core::report::{CheckRecord, CheckStatus, SuiteReport};
use pgraph_core::specfile::{parse_spec, ParsedDoc, ParsedGraph};
use pgraph_core::spielberg::{check_spielberg_relations, verify_t4_hybrid};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

#[derive(Parser)]
#[command(
    name = "pgraph",
    about = "Finitely aligned P-graphs: build, explore, and verify the defining relations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FlavorArg {
    T,
    Omega,
}

impl From<FlavorArg> for Flavor {
    fn from(f: FlavorArg) -> Flavor {
        match f {
            FlavorArg::T => Flavor::Filters,
            FlavorArg::Omega => Flavor::Ultrafilters,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Relations,
    Gaps,
    Theta,
    Decomp85,
    Norms,
    Spielberg,
    Grading,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Check every axiom on the enumerated data and report violations.
    Validate {
        spec: PathBuf,
        #[arg(long)]
        bound: Option<String>,
    },
    /// Print the minimal common extensions of a pair of paths.
    Mce {
        spec: PathBuf,
        #[arg(long, num_args = 2)]
        pair: Vec<String>,
        #[arg(long)]
        bound: Option<String>,
    },
    /// List the filters of the graph, or only the maximal ones.
    Filters {
        spec: PathBuf,
        #[arg(long)]
        ultra: bool,
        #[arg(long)]
        bound: Option<String>,
        #[arg(long)]
        cap: Option<usize>,
    },
    /// Run one verification suite.
    Check {
        spec: PathBuf,
        #[arg(long, value_enum)]
        suite: SuiteArg,
        #[arg(long, value_enum, default_value = "t")]
        flavor: FlavorArg,
        #[arg(long)]
        bound: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        cap: Option<usize>,
        /// Maximum size of the swept subsets (gaps, theta, decomp85).
        #[arg(long, default_value_t = 3)]
        size: usize,
        /// Number of seeded random trials (norms, grading).
        #[arg(long, default_value_t = 25)]
        trials: usize,
    },
    /// Run every applicable suite and write a combined report.
    Report {
        spec: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "text")]
        format: FormatArg,
        #[arg(long)]
        bound: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        cap: Option<usize>,
    },
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Parse { .. } | Error::IncompleteSquares(..) | Error::InconsistentSquares(_) => 3,
        Error::CapExceeded(_) => 4,
        _ => 1,
    }
}

fn load(spec: &PathBuf, bound: &Option<String>) -> Result<ParsedDoc, Error> {
    let text = std::fs::read_to_string(spec).map_err(|e| Error::Parse {
        line: 0,
        msg: format!("cannot read {}: {e}", spec.display()),
    })?;
    let text = match bound {
        None => text,
        Some(b) => {
            // Override or insert the bound line.
            let mut lines: Vec<String> = Vec::new();
            let mut replaced = false;
            for line in text.lines() {
                if line.trim_start().starts_with("bound") {
                    lines.push(format!("bound {b}"));
                    replaced = true;
                } else {
                    lines.push(line.to_string());
                }
            }
            if !replaced {
                lines.insert(1.min(lines.len()), format!("bound {b}"));
            }
            lines.join("\n") + "\n"
        }
    };
    parse_spec(&text)
}

/// The generator degrees of a graph: its minimal nonzero degrees.
fn generator_degrees(graph: &PGraph) -> Vec<pgraph_core::qlo::GroupElement> {
    let nonzero: Vec<_> = graph
        .degrees()
        .filter(|d| !d.is_identity())
        .cloned()
        .collect();
    if nonzero.is_empty() {
        return Vec::new();
    }
    pgraph_core::qlo::minimal_elements(&nonzero).unwrap_or(nonzero)
}

fn run_suite(
    doc: &ParsedDoc,
    suite: SuiteArg,
    flavor: Flavor,
    seed: u64,
    size: usize,
    trials: usize,
    cap: Option<usize>,
) -> Result<SuiteReport, Error> {
    let start = Instant::now();
    let graph: Arc<PGraph> = match &doc.graph {
        ParsedGraph::Hybrid(h) => h.graph.clone(),
        ParsedGraph::Plain(g) => Arc::new(g.clone()),
    };
    if let Some(cap) = cap {
        if graph.len() > cap {
            return Err(Error::CapExceeded(format!(
                "{} filters exceed the cap {cap}",
                graph.len()
            )));
        }
    }
    let rep = Representation::new(graph.clone(), flavor)?;
    let (suite_name, checks): (&str, Vec<CheckRecord>) = match suite {
        SuiteArg::Relations => {
            let mut records = checks::check_balanced_relations(&rep, Some(20_000))?;
            records.extend(checks::check_path_relations(&rep, Some(20_000))?);
            ("relations", records)
        }
        SuiteArg::Gaps => ("gaps", checks::suite_gaps(&rep, size)?),
        SuiteArg::Theta => {
            let degrees = generator_degrees(&graph);
            let mut closed = vee_closure(&degrees)?;
            closed.retain(|d| !d.is_identity());
            ("theta", checks::suite_theta(&rep, &closed, size.min(2))?)
        }
        SuiteArg::Decomp85 => ("decomp85", checks::suite_decomposition(&rep, size)?),
        SuiteArg::Norms => {
            let degrees = generator_degrees(&graph);
            ("norms", checks::suite_norms(&rep, &degrees, trials, seed)?)
        }
        SuiteArg::Spielberg => {
            let hybrid = doc.graph.as_hybrid().ok_or_else(|| {
                Error::InvalidGraph("the spielberg suite needs a [hybrid] graph".into())
            })?;
            let mut records = check_spielberg_relations(hybrid, &rep)?;
            let max_blocks = hybrid.bound().max_blocks.saturating_sub(1).max(1);
            let small = hybrid.paths_up_to_blocks(max_blocks);
            let mut pairs = Vec::new();
            for &a in &small {
                for &b in &small {
                    pairs.push((a, b));
                }
            }
            records.extend(verify_t4_hybrid(hybrid, &pairs, &rep)?);
            ("spielberg", records)
        }
        SuiteArg::Grading => ("grading", checks::suite_grading(&rep, trials.max(1), seed)?),
    };
    Ok(SuiteReport {
        suite: format!("{suite_name}/{}", flavor.label()),
        graph_hash: doc.source_hash.clone(),
        checks,
        bounds: doc.bound_label.clone(),
        seed: Some(seed),
        elapsed_ms: start.elapsed().as_millis(),
    })
}

fn print_report_text(report: &SuiteReport) {
    println!(
        "suite {} on graph {} ({} ms)",
        report.suite,
        &report.graph_hash[..12],
        report.elapsed_ms
    );
    if let Some(b) = &report.bounds {
        println!("  bound: {b}");
    }
    for check in &report.checks {
        let status = match check.status {
            CheckStatus::Pass => "pass",
            CheckStatus::Fail => "FAIL",
            CheckStatus::Skipped => "skip",
        };
        match &check.witness {
            Some(w) => println!("  [{status}] {} ({}): {w}", check.id, check.anchor),
            None => println!("  [{status}] {} ({})", check.id, check.anchor),
        }
    }
    println!(
        "  {} passed, {} failed, {} skipped",
        report.passed(),
        report.failed(),
        report.skipped()
    );
}

fn run() -> Result<u8, Error> {
    let cli = Cli::parse();
    match cli.command {
        Command::Validate { spec, bound } => {
            let doc = load(&spec, &bound)?;
            let report = doc.graph.graph().validate();
            for v in &report.violations {
                println!("violation: {v}");
            }
            println!(
                "{} violations ({} checks run, {} skipped at the bound)",
                report.violations.len(),
                report.checks_run,
                report.skipped
            );
            Ok(if report.is_clean() { 0 } else { 1 })
        }
        Command::Mce { spec, pair, bound } => {
            let doc = load(&spec, &bound)?;
            let g = doc.graph.graph();
            let mu = g.lookup(&pair[0])?;
            let nu = g.lookup(&pair[1])?;
            let mces = g.mce(mu, nu)?;
            if mces.is_empty() {
                println!("MCE({}, {}) = {{}}", pair[0], pair[1]);
            } else {
                println!(
                    "MCE({}, {}) = {{{}}}",
                    pair[0],
                    pair[1],
                    mces.iter().map(|&l| g.id(l)).collect::<Vec<_>>().join(", ")
                );
            }
            Ok(0)
        }
        Command::Filters {
            spec,
            ultra,
            bound,
            cap,
        } => {
            let doc = load(&spec, &bound)?;
            let g = doc.graph.graph();
            let space = enumerate_filters(g, ultra, cap.or(Some(20_000)))?;
            for (f, status) in space.iter() {
                let tag = match status {
                    UltraStatus::Ultra => "ultra",
                    UltraStatus::MaximalWithinBound => "max-in-bound",
                    UltraStatus::NotMaximal => "filter",
                };
                println!("{tag:13} {}", f.describe(g));
            }
            println!(
                "{} filters ({})",
                space.len(),
                if space.truncated {
                    "relative to the bound"
                } else {
                    "complete"
                }
            );
            Ok(0)
        }
        Command::Check {
            spec,
            suite,
            flavor,
            bound,
            seed,
            cap,
            size,
            trials,
        } => {
            let doc = load(&spec, &bound)?;
            let report = run_suite(&doc, suite, flavor.into(), seed, size, trials, cap)?;
            print_report_text(&report);
            Ok(if report.is_clean() { 0 } else { 1 })
        }
        Command::Report {
            spec,
            out,
            format,
            bound,
            seed,
            cap,
        } => {
            let doc = load(&spec, &bound)?;
            let mut reports: Vec<SuiteReport> = Vec::new();

            // Axioms first.
            let start = Instant::now();
            let validation = doc.graph.graph().validate();
            let mut axiom_checks: Vec<CheckRecord> = validation
                .violations
                .iter()
                .map(|v| CheckRecord::fail("axioms", v.rule.clone(), v.witness.clone()))
                .collect();
            if validation.is_clean() {
                axiom_checks.push(CheckRecord::pass_with(
                    "axioms",
                    "category-laws",
                    format!("{} checks", validation.checks_run),
                ));
            }
            reports.push(SuiteReport {
                suite: "validate".into(),
                graph_hash: doc.source_hash.clone(),
                checks: axiom_checks,
                bounds: doc.bound_label.clone(),
                seed: None,
                elapsed_ms: start.elapsed().as_millis(),
            });

            let is_hybrid = matches!(doc.graph, ParsedGraph::Hybrid(_));
            let suites: Vec<(SuiteArg, Flavor)> = if is_hybrid {
                vec![(SuiteArg::Spielberg, Flavor::Ultrafilters)]
            } else {
                vec![
                    (SuiteArg::Relations, Flavor::Filters),
                    (SuiteArg::Relations, Flavor::Ultrafilters),
                    (SuiteArg::Gaps, Flavor::Filters),
                    (SuiteArg::Gaps, Flavor::Ultrafilters),
                    (SuiteArg::Theta, Flavor::Filters),
                    (SuiteArg::Decomp85, Flavor::Filters),
                    (SuiteArg::Norms, Flavor::Filters),
                    (SuiteArg::Grading, Flavor::Filters),
                ]
            };
            for (suite, flavor) in suites {
                reports.push(run_suite(&doc, suite, flavor, seed, 3, 25, cap)?);
            }

            let rendered = match format {
                FormatArg::Json => {
                    serde_json::to_string_pretty(&reports).expect("reports serialise") + "\n"
                }
                FormatArg::Text => {
                    let mut buf = String::new();
                    for r in &reports {
                        buf.push_str(&format!(
                            "suite {} on graph {} ({} ms): {} passed, {} failed, {} skipped\n",
                            r.suite,
                            &r.graph_hash[..12],
                            r.elapsed_ms,
                            r.passed(),
                            r.failed(),
                            r.skipped()
                        ));
                        for check in &r.checks {
                            if check.status != CheckStatus::Pass {
                                buf.push_str(&format!(
                                    "  [{}] {}: {}\n",
                                    match check.status {
                                        CheckStatus::Fail => "FAIL",
                                        _ => "skip",
                                    },
                                    check.id,
                                    check.witness.clone().unwrap_or_default()
                                ));
                            }
                        }
                    }
                    buf
                }
            };
            match &out {
                Some(path) => std::fs::write(path, &rendered).map_err(|e| {
                    Error::InvalidGraph(format!("cannot write {}: {e}", path.display()))
                })?,
                None => print!("{rendered}"),
            }
            let failed: usize = reports.iter().map(|r| r.failed()).sum();
            Ok(if failed == 0 { 0 } else { 1 })
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
