//! Pipeline configuration: where inputs live and where artifacts go.
//!
//! Relative paths are resolved against the directory of the configuration
//! file.

use std::path::{Path, PathBuf};

use carekg::eval::ExperimentSpec;
use carekg::pathway::CohortConfig;
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct PipelineFile {
    cohort: PathBuf,
    #[serde(default)]
    n_patients: Option<usize>,
    #[serde(default)]
    seed: Option<u64>,
    cohort_csv: PathBuf,
    graph_dir: PathBuf,
    report_dir: PathBuf,
    #[serde(default)]
    experiments: Vec<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct Pipeline {
    /// Cohort configuration with the pipeline overrides applied.
    pub cohort: CohortConfig,
    /// Global seed: cohort generation, the split recorded next to graphs,
    /// and the base seed of every experiment.
    pub seed: Option<u64>,
    pub cohort_csv: PathBuf,
    pub graph_dir: PathBuf,
    pub report_dir: PathBuf,
    pub experiments: Vec<(PathBuf, ExperimentSpec)>,
    config_bytes: Vec<u8>,
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))
}

impl Pipeline {
    pub fn load(path: &Path, seed: Option<u64>) -> Result<Self, CliError> {
        let text = read(path)?;
        let file: PipelineFile =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };

        let cohort_path = resolve(&file.cohort);
        let cohort_text = read(&cohort_path)?;
        let mut cohort = CohortConfig::from_json(&cohort_text)
            .map_err(|e| CliError::Config(format!("{}: {e}", cohort_path.display())))?;
        if let Some(n) = file.n_patients {
            cohort.n_patients = n;
        }
        let seed = seed.or(file.seed);
        if let Some(s) = seed {
            cohort.seed = s;
        }
        cohort
            .validate()
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;

        let mut config_bytes = cohort.to_json().into_bytes();
        let mut experiments = Vec::new();
        for p in &file.experiments {
            let p = resolve(p);
            let (spec, text) = load_spec(&p, seed)?;
            config_bytes.extend_from_slice(text.as_bytes());
            experiments.push((p, spec));
        }
        Ok(Pipeline {
            cohort,
            seed,
            cohort_csv: resolve(&file.cohort_csv),
            graph_dir: resolve(&file.graph_dir),
            report_dir: resolve(&file.report_dir),
            experiments,
            config_bytes,
        })
    }

    /// Replaces the experiment list.
    pub fn set_experiments(&mut self, paths: &[PathBuf]) -> Result<(), CliError> {
        let mut bytes = self.cohort.to_json().into_bytes();
        let mut experiments = Vec::new();
        for p in paths {
            let (spec, text) = load_spec(p, self.seed)?;
            bytes.extend_from_slice(text.as_bytes());
            experiments.push((p.clone(), spec));
        }
        self.experiments = experiments;
        self.config_bytes = bytes;
        Ok(())
    }

    /// SHA-256 over the effective cohort configuration and the experiment
    /// spec files, hex encoded.
    pub fn config_hash(&self) -> String {
        let digest = Sha256::digest(&self.config_bytes);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn load_spec(path: &Path, seed: Option<u64>) -> Result<(ExperimentSpec, String), CliError> {
    let text = read(path)?;
    let mut spec =
        ExperimentSpec::from_json(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    if let Some(s) = seed {
        spec.seed = s;
    }
    Ok((spec, text))
}
