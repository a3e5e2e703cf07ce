use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use wfnet::fixtures::{self, check_manifest};
use wfnet::metrics::MetricsError;
use wfnet::pnml::{write_pnml_named, PnmlError};
use wfnet::state_space::{soundness_of_graph, SoundnessReport, StateSpaceError};
use wfnet::{full_report, parse_pnml, reachability_graph, validate_workflow, MetricsReport, PetriNet, WorkflowNet};

#[derive(Parser)]
#[command(name = "wfnet", version, about = "Analyze 1-safe workflow Petri nets stored as PNML")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Density, extended cyclomatic and structuredness metrics
    Metrics {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long, default_value_t = wfnet::DEFAULT_STATE_CAP)]
        cap: usize,
    },
    /// Export the reachability graph as Graphviz DOT
    Reach {
        path: PathBuf,
        #[arg(long)]
        dot: PathBuf,
        #[arg(long, default_value_t = wfnet::DEFAULT_STATE_CAP)]
        cap: usize,
    },
    /// Check workflow structure and soundness
    Validate {
        path: PathBuf,
        #[arg(long, default_value_t = wfnet::DEFAULT_STATE_CAP)]
        cap: usize,
    },
    /// Play the token game with a seeded random choice among enabled transitions
    Simulate {
        path: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        max_steps: usize,
    },
    /// Write the reference nets and their conformance reports
    Fixtures {
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

/// Error with the process exit code it maps to.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn validation(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    fn unexpected(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }

    fn at(self, path: &Path) -> Self {
        Self {
            message: format!("{}: {}", path.display(), self.message),
            ..self
        }
    }
}

impl From<StateSpaceError> for Failure {
    fn from(e: StateSpaceError) -> Self {
        match e {
            StateSpaceError::CapExceeded(_) => Self {
                code: 3,
                message: e.to_string(),
            },
            _ => Self::unexpected(e.to_string()),
        }
    }
}

impl From<MetricsError> for Failure {
    fn from(e: MetricsError) -> Self {
        match e {
            MetricsError::StateSpace(s) => s.into(),
            other => Self::validation(other.to_string()),
        }
    }
}

impl From<PnmlError> for Failure {
    fn from(e: PnmlError) -> Self {
        Self::validation(e.to_string())
    }
}

fn load_net(path: &Path) -> Result<PetriNet, Failure> {
    let bytes = fs::read(path).map_err(|e| Failure::validation(e.to_string()).at(path))?;
    parse_pnml(&bytes).map_err(|e| Failure::from(e).at(path))
}

fn load_workflow(path: &Path) -> Result<WorkflowNet, Failure> {
    validate_workflow(load_net(path)?).map_err(|e| Failure::validation(format!("{e:?}: {e}")).at(path))
}

#[derive(Serialize)]
struct ReportDocument {
    tool_version: &'static str,
    input_path: String,
    report: MetricsReport,
    soundness: SoundnessReport,
    timing_ms: u64,
}

fn report_for(path: &Path, cap: usize) -> Result<ReportDocument, Failure> {
    let start = Instant::now();
    let wf = load_workflow(path)?;
    let report = full_report(&wf, cap).map_err(|e| Failure::from(e).at(path))?;
    let rg = reachability_graph(wf.net(), cap).map_err(|e| Failure::from(e).at(path))?;
    Ok(ReportDocument {
        tool_version: env!("CARGO_PKG_VERSION"),
        input_path: path.display().to_string(),
        soundness: soundness_of_graph(&wf, &rg),
        report,
        timing_ms: start.elapsed().as_millis() as u64,
    })
}

fn csv_rows(doc: &ReportDocument, out: &mut String) {
    let r = &doc.report;
    let mut rows: Vec<(String, String)> = vec![
        ("places".into(), r.census.places.to_string()),
        ("transitions".into(), r.census.transitions.to_string()),
        ("arcs".into(), r.census.arcs.to_string()),
        ("density".into(), r.density_rounded.clone()),
        ("density_exact".into(), r.density.to_string()),
        ("extended_cyclomatic".into(), r.extended_cyclomatic.to_string()),
        (
            "structuredness".into(),
            r.structuredness.map(|s| s.to_string()).unwrap_or_default(),
        ),
        ("states".into(), r.state_space.vertex_count.to_string()),
        ("state_edges".into(), r.state_space.edge_count.to_string()),
        ("sccs".into(), r.state_space.scc_count.to_string()),
        ("largest_scc".into(), r.state_space.largest_scc.to_string()),
        ("sound".into(), doc.soundness.sound.to_string()),
    ];
    for (kind, n) in &r.component_census {
        rows.push((format!("components_{kind}"), n.to_string()));
    }
    for (metric, value) in rows {
        let _ = writeln!(out, "{},{metric},{value}", csv_field(&doc.input_path));
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn cmd_metrics(paths: &[PathBuf], format: Format, cap: usize) -> Result<(), Failure> {
    let results: Vec<Result<ReportDocument, Failure>> = paths.par_iter().map(|p| report_for(p, cap)).collect();
    let mut first_failure = None;
    let mut docs = Vec::new();
    for r in results {
        match r {
            Ok(doc) => docs.push(doc),
            Err(f) => {
                eprintln!("error: {}", f.message);
                first_failure.get_or_insert(f);
            }
        }
    }
    let text = match format {
        Format::Json if paths.len() == 1 && docs.len() == 1 => serde_json::to_string_pretty(&docs[0]),
        Format::Json => serde_json::to_string_pretty(&docs),
        Format::Csv => {
            let mut out = String::from("input,metric,value\n");
            for d in &docs {
                csv_rows(d, &mut out);
            }
            Ok(out.trim_end().to_string())
        }
    }
    .map_err(|e| Failure::unexpected(e.to_string()))?;
    if !docs.is_empty() {
        println!("{text}");
    }
    first_failure.map_or(Ok(()), Err)
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn cmd_reach(path: &Path, dot: &Path, cap: usize) -> Result<(), Failure> {
    let net = load_net(path)?;
    let rg = reachability_graph(&net, cap).map_err(|e| Failure::from(e).at(path))?;
    let mut out = String::from("digraph reachability {\n");
    for (v, m) in rg.vertices().iter().enumerate() {
        let shape = if v == rg.initial() { "doublecircle" } else { "circle" };
        let _ = writeln!(out, "  \"{}\" [shape={shape}];", m.bit_string());
    }
    for e in rg.edges() {
        let _ = writeln!(
            out,
            "  \"{}\" -> \"{}\" [label=\"{}\"];",
            rg.vertices()[e.from].bit_string(),
            rg.vertices()[e.to].bit_string(),
            dot_escape(net.transition_name(e.transition))
        );
    }
    out.push_str("}\n");
    fs::write(dot, out).map_err(|e| Failure::unexpected(format!("{}: {e}", dot.display())))?;
    println!("{} states, {} edges", rg.vertex_count(), rg.edge_count());
    Ok(())
}

fn cmd_validate(path: &Path, cap: usize) -> Result<(), Failure> {
    let wf = load_workflow(path)?;
    println!("source: {}", wf.source_id());
    println!("sink: {}", wf.sink_id());
    let rg = reachability_graph(wf.net(), cap).map_err(|e| Failure::from(e).at(path))?;
    let report = soundness_of_graph(&wf, &rg);
    if report.sound {
        println!("sound");
        return Ok(());
    }
    println!("not sound");
    for t in &report.dead_transitions {
        println!("dead transition: {t}");
    }
    for &v in &report.nonterminating_states {
        println!("cannot complete from: {}", rg.vertices()[v].bit_string());
    }
    for &v in &report.improper_completions {
        println!("improper completion: {}", rg.vertices()[v].bit_string());
    }
    Err(Failure::validation("net is not sound").at(path))
}

fn cmd_simulate(path: &Path, seed: u64, max_steps: usize) -> Result<(), Failure> {
    let net = load_net(path)?;
    let fin = validate_workflow(net.clone()).ok().map(|wf| wf.final_marking());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = net.initial_marking().clone();
    for step in 1..=max_steps {
        if fin.as_ref() == Some(&m) {
            break;
        }
        let enabled = net.enabled(&m);
        if enabled.is_empty() {
            break;
        }
        let t = enabled[rng.gen_range(0..enabled.len())];
        m = net.fire(&m, t).map_err(|e| Failure::unexpected(e.to_string()))?;
        println!("{step}\t{}\t{}", net.transitions()[t].id, net.transition_name(t));
    }
    println!("marking {}", m.bit_string());
    Ok(())
}

fn cmd_fixtures(out: &Path) -> Result<(), Failure> {
    let io = |e: std::io::Error| Failure::unexpected(format!("{}: {e}", out.display()));
    fs::create_dir_all(out).map_err(io)?;
    for f in fixtures::all() {
        fs::write(
            out.join(format!("{}.pnml", f.name)),
            write_pnml_named(f.net.net(), f.name),
        )
        .map_err(io)?;
        let report = check_manifest(&f.net, &f.manifest);
        let json = serde_json::to_string_pretty(&report).map_err(|e| Failure::unexpected(e.to_string()))?;
        fs::write(out.join(format!("{}.conformance.json", f.name)), json + "\n").map_err(io)?;
        let passed = report.checks.iter().filter(|c| c.pass).count();
        println!("{}: {passed}/{} checks pass", f.name, report.checks.len());
        for c in report.failures() {
            println!("  {}: expected {}, computed {}", c.field, c.expected, c.computed);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Metrics { paths, format, cap } => cmd_metrics(paths, *format, *cap),
        Command::Reach { path, dot, cap } => cmd_reach(path, dot, *cap),
        Command::Validate { path, cap } => cmd_validate(path, *cap),
        Command::Simulate { path, seed, max_steps } => cmd_simulate(path, *seed, *max_steps),
        Command::Fixtures { out } => cmd_fixtures(out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            // metrics already reported each file's error
            if !matches!(cli.command, Command::Metrics { .. }) {
                eprintln!("error: {}", f.message);
            }
            ExitCode::from(f.code)
        }
    }
}
