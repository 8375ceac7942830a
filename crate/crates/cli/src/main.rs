//! `carekg`: generate a cohort, materialize its graphs, run experiments and
//! emit report data.
//!
//! Exit codes: 0 on success, 1 on a runtime failure, 2 on a configuration or
//! usage error.

mod manifest;
mod pipeline;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use carekg::eval::{make_split, write_metrics_csv, RunRecord, Runner, Summary};
use carekg::exec::Execution;
use carekg::kg::{build_cohort_graph_with, SchemaVariant, SplitTag};
use carekg::pathway::{generate_cohort, read_cohort_csv, transition_flows, write_cohort_csv, write_flows_csv, PatientRecord};
use carekg::rdf::serialize_ntriples;
use clap::{Parser, Subcommand};
use thiserror::Error;

use manifest::write_artifact;
use pipeline::Pipeline;

#[global_allocator]
static ALLOC: mimalloc::MiMalloc = mimalloc::MiMalloc;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Runtime(format!("{}: {e}", path.display()))
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "carekg", version, about = "Care-pathway knowledge graphs and outcome prediction")]
struct Cli {
    /// Pipeline configuration file.
    #[arg(long, global = true, default_value = "configs/pipeline.json")]
    config: PathBuf,
    /// Global seed, overriding the cohort and experiment seeds.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write the synthetic cohort CSV.
    Generate {
        /// Output directory; defaults to the directory of `cohort_csv`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write one N-Triples file and one labels sidecar per graph variant.
    BuildKg {
        /// Comma-separated variant names, or `all`.
        #[arg(long, default_value = "all")]
        variants: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the configured experiments; writes metrics.csv and summary.json.
    Run {
        /// Experiment spec files replacing the configured list.
        #[arg(long = "spec")]
        specs: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write flows.csv, the observed care-event transitions.
    ReportData {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("carekg: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let mut pipeline = Pipeline::load(&cli.config, cli.seed)?;
    match cli.command {
        Command::Generate { out } => generate(&pipeline, out),
        Command::BuildKg { variants, out } => build_kg(&pipeline, &parse_variants(&variants)?, out),
        Command::Run { specs, out } => {
            if !specs.is_empty() {
                pipeline.set_experiments(&specs)?;
            }
            run(&pipeline, out)
        }
        Command::ReportData { out } => report_data(&pipeline, out),
    }
}

fn parse_variants(list: &str) -> Result<Vec<SchemaVariant>, CliError> {
    if list.trim().eq_ignore_ascii_case("all") {
        return Ok(SchemaVariant::ALL.to_vec());
    }
    list.split(',')
        .map(|v| v.trim().parse().map_err(|e: carekg::kg::KgError| CliError::Config(e.to_string())))
        .collect()
}

fn cohort_bytes(pipeline: &Pipeline, cohort: &[PatientRecord]) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    write_cohort_csv(&mut buf, &pipeline.cohort, cohort).map_err(runtime)?;
    Ok(buf)
}

/// The cohort CSV if it exists, otherwise a freshly generated cohort read
/// back through the same CSV representation.
fn load_cohort(pipeline: &Pipeline) -> Result<Vec<PatientRecord>, CliError> {
    let bytes = if pipeline.cohort_csv.exists() {
        std::fs::read(&pipeline.cohort_csv).map_err(|e| CliError::io(&pipeline.cohort_csv, e))?
    } else {
        let cohort = generate_cohort(&pipeline.cohort).map_err(runtime)?;
        cohort_bytes(pipeline, &cohort)?
    };
    read_cohort_csv(bytes.as_slice(), &pipeline.cohort)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", pipeline.cohort_csv.display())))
}

fn generate(pipeline: &Pipeline, out: Option<PathBuf>) -> Result<(), CliError> {
    let cohort = generate_cohort(&pipeline.cohort).map_err(runtime)?;
    let path = match out {
        Some(dir) => dir.join("cohort.csv"),
        None => pipeline.cohort_csv.clone(),
    };
    let bytes = cohort_bytes(pipeline, &cohort)?;
    write_artifact(&path, &bytes, "generate", &pipeline.config_hash(), Some(pipeline.cohort.seed))?;
    eprintln!("wrote {} ({} patients)", path.display(), cohort.len());
    Ok(())
}

fn build_kg(pipeline: &Pipeline, variants: &[SchemaVariant], out: Option<PathBuf>) -> Result<(), CliError> {
    let cohort = load_cohort(pipeline)?;
    let dir = out.unwrap_or_else(|| pipeline.graph_dir.clone());
    let labels: Vec<usize> = cohort.iter().map(|r| r.outcome.index()).collect();
    let split_seed = pipeline.cohort.seed;
    let split = make_split(&labels, split_seed).map_err(runtime)?;
    let mut tags = vec![SplitTag::Train; cohort.len()];
    for &i in &split.validation {
        tags[i] = SplitTag::Validation;
    }
    for &i in &split.test {
        tags[i] = SplitTag::Test;
    }
    let hash = pipeline.config_hash();
    for &v in variants {
        let g = build_cohort_graph_with(&cohort, v, false, Execution::default()).map_err(runtime)?;
        let nt = serialize_ntriples(&g.graph);
        let nt_path = dir.join(format!("{}.nt", v.file_stem()));
        write_artifact(&nt_path, nt.as_bytes(), "build-kg", &hash, Some(split_seed))?;
        let mut sidecar = g.sidecar();
        sidecar.split_seed = Some(split_seed);
        for (p, t) in sidecar.patients.iter_mut().zip(&tags) {
            p.split = Some(*t);
        }
        let json = serde_json::to_string_pretty(&sidecar).expect("sidecar serialises") + "\n";
        let side_path = dir.join(format!("{}.labels.json", v.file_stem()));
        write_artifact(&side_path, json.as_bytes(), "build-kg", &hash, Some(split_seed))?;
        eprintln!("wrote {} ({} triples)", nt_path.display(), g.graph.len());
    }
    Ok(())
}

fn run(pipeline: &Pipeline, out: Option<PathBuf>) -> Result<(), CliError> {
    if pipeline.experiments.is_empty() {
        return Err(CliError::Config("no experiments configured".into()));
    }
    let cohort = load_cohort(pipeline)?;
    let mut runner = Runner::new(pipeline.cohort.clone(), cohort, Execution::default());
    runner.verbose = true;
    let mut records: Vec<RunRecord> = Vec::new();
    for (path, spec) in &pipeline.experiments {
        eprintln!("experiment {} ({})", spec.name, path.display());
        records.extend(runner.run(spec).map_err(runtime)?);
    }
    let dir = out.unwrap_or_else(|| pipeline.report_dir.clone());
    let hash = pipeline.config_hash();
    let mut csv = Vec::new();
    write_metrics_csv(&records, &mut csv).map_err(runtime)?;
    write_artifact(&dir.join("metrics.csv"), &csv, "run", &hash, pipeline.seed)?;
    let summary = Summary::from_records(&records).to_json() + "\n";
    write_artifact(&dir.join("summary.json"), summary.as_bytes(), "run", &hash, pipeline.seed)?;
    eprintln!("wrote {}", dir.join("summary.json").display());
    Ok(())
}

fn report_data(pipeline: &Pipeline, out: Option<PathBuf>) -> Result<(), CliError> {
    let cohort = load_cohort(pipeline)?;
    let flows = transition_flows(&cohort, &pipeline.cohort.transitions);
    let mut buf = Vec::new();
    write_flows_csv(&flows, &mut buf).map_err(runtime)?;
    let path = out.unwrap_or_else(|| pipeline.report_dir.clone()).join("flows.csv");
    write_artifact(&path, &buf, "report-data", &pipeline.config_hash(), Some(pipeline.cohort.seed))?;
    eprintln!("wrote {}", path.display());
    Ok(())
}
