use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use carekg::eval::ExperimentSpec;

fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn carekg(config: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_carekg"))
        .arg("--config")
        .arg(config)
        .args(args)
        .output()
        .expect("binary runs")
}

/// A pipeline config in `dir` for a small cohort.
fn pipeline(dir: &Path, n: usize, experiments: &[&Path]) -> PathBuf {
    let cohort = repo().join("configs/default_cohort.json");
    let config = serde_json::json!({
        "cohort": cohort,
        "n_patients": n,
        "cohort_csv": "cohort.csv",
        "graph_dir": "graphs",
        "report_dir": "reports",
        "experiments": experiments,
    });
    let path = dir.join("pipeline.json");
    std::fs::write(&path, config.to_string()).unwrap();
    path
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn generate_writes_one_row_per_patient_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = pipeline(dir.path(), 50, &[]);
    let out = carekg(&cfg, &["generate"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = dir.path().join("cohort.csv");
    let first = std::fs::read(&csv).unwrap();
    assert_eq!(String::from_utf8_lossy(&first).lines().count(), 51);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("cohort.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "generate");
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
    assert!(manifest["seed"].is_u64());

    assert!(carekg(&cfg, &["generate"]).status.success());
    assert_eq!(std::fs::read(&csv).unwrap(), first);

    let reseeded = carekg(&cfg, &["--seed", "7", "generate", "--out", dir.path().join("other").to_str().unwrap()]);
    assert!(reseeded.status.success());
    assert_ne!(std::fs::read(dir.path().join("other/cohort.csv")).unwrap(), first);
}

#[test]
fn configuration_errors_exit_with_two() {
    let missing = Path::new("/nonexistent/pipeline.json");
    let out = carekg(missing, &["generate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("/nonexistent/pipeline.json"));

    let dir = tempfile::tempdir().unwrap();
    let cfg = pipeline(dir.path(), 50, &[]);
    let out = carekg(&cfg, &["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("Usage"));

    let out = carekg(&cfg, &["build-kg", "--variants", "SPHN-xx"]);
    assert_eq!(out.status.code(), Some(2));

    let out = carekg(&cfg, &["run"]);
    assert_eq!(out.status.code(), Some(2), "no experiments configured");
}

fn line_count(path: &Path) -> usize {
    std::fs::read_to_string(path).unwrap().lines().count()
}

#[test]
fn build_kg_writes_requested_variants() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = pipeline(dir.path(), 40, &[]);
    let one = dir.path().join("one");
    let out = carekg(&cfg, &["build-kg", "--variants", "SPHN-nl", "--out", one.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let nt: Vec<_> = std::fs::read_dir(&one)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "nt"))
        .collect();
    assert_eq!(nt.len(), 1);
    let text = std::fs::read_to_string(&nt[0]).unwrap();
    assert!(!text.is_empty());
    assert_eq!(text.lines().filter(|l| l.contains('"')).count(), 0);
    let sidecar: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(one.join("sphn-nl.labels.json")).unwrap()).unwrap();
    assert_eq!(sidecar["patients"].as_array().unwrap().len(), 40);
    assert!(sidecar["patients"][0]["split"].is_string());

    let out = carekg(&cfg, &["build-kg", "--variants", "all"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let graphs = dir.path().join("graphs");
    let nt_count = std::fs::read_dir(&graphs)
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|e| e == "nt"))
        .count();
    assert_eq!(nt_count, 8);
    let (tr, sat1, sat2) = (
        line_count(&graphs.join("sphn-tr.nt")),
        line_count(&graphs.join("sphn-sat1.nt")),
        line_count(&graphs.join("sphn-sat2.nt")),
    );
    assert!(sat2 >= sat1 && sat1 >= tr, "{tr} {sat1} {sat2}");
    assert!(graphs.join("caresm-ts.nt.manifest.json").exists());
}

#[test]
fn report_data_flows_cover_the_cohort() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = pipeline(dir.path(), 80, &[]);
    let out = carekg(&cfg, &["report-data"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = std::fs::read_to_string(dir.path().join("reports/flows.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("source,target,weight"));
    let (mut from_start, mut to_end) = (0.0, 0.0);
    for l in lines {
        let cols: Vec<&str> = l.split(',').collect();
        let w: f64 = cols[2].parse().unwrap();
        assert!(w >= 0.0);
        if cols[0] == "START" {
            from_start += w;
        }
        if cols[1] == "END" {
            to_end += w;
        }
    }
    assert_eq!(from_start, 80.0);
    assert_eq!(to_end, 80.0);
    assert!(dir.path().join("reports/flows.csv.manifest.json").exists());
}

fn shipped(name: &str) -> ExperimentSpec {
    ExperimentSpec::from_json(&std::fs::read_to_string(repo().join("experiments").join(name)).unwrap()).unwrap()
}

/// A shipped spec made cheap: one repetition and short training.
fn shrunk(spec: &ExperimentSpec, dir: &Path) -> PathBuf {
    let mut s = spec.clone();
    s.repetitions = 1;
    s.settings.rgcn.epochs = 2;
    s.settings.rgcn.input_dim = 4;
    s.settings.rgcn.hidden = 4;
    s.settings.transe.epochs = 2;
    s.settings.transe.dim = 4;
    s.settings.rdf2vec.epochs = 1;
    s.settings.rdf2vec.dim = 4;
    s.settings.nn.epochs = 2;
    s.settings.head.epochs = 2;
    s.settings.logreg.epochs = 2;
    s.settings.forest.trees = 3;
    let path = dir.join(format!("{}.json", s.name));
    std::fs::write(&path, serde_json::to_string(&s).unwrap()).unwrap();
    path
}

fn summary(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("reports/summary.json")).unwrap()).unwrap()
}

#[test]
fn shipped_table_specs_have_the_table_rows() {
    let t1 = shipped("table1.json");
    let models: Vec<String> = t1.cells.iter().map(|c| c.model.name()).collect();
    assert_eq!(models, ["LR", "RF", "NN", "TransE", "RDF2Vec", "RGCN3+lit"]);
    assert_eq!(t1.repetitions, 10);
    let t3 = shipped("table3.json");
    let variants: Vec<String> = t3.cells.iter().map(|c| c.variant_label()).collect();
    assert_eq!(variants, ["SPHN-nl", "SPHN-nt", "SPHN-ts", "SPHN-tr", "SPHN-tsr", "SPHN-sat1", "SPHN-sat2"]);
    let t2 = shipped("table2.json");
    assert!(t2.cells.iter().any(|c| c.model.name() == "RGCN5+lit"));
}

#[test]
fn run_reports_every_cell_and_is_byte_identical_on_rerun() {
    let dir = tempfile::tempdir().unwrap();
    let t1 = shrunk(&shipped("table1.json"), dir.path());
    let t3 = shrunk(&shipped("table3.json"), dir.path());
    let cfg = pipeline(dir.path(), 60, &[&t1, &t3]);
    let out = carekg(&cfg, &["run"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let s = summary(dir.path());
    let exps = s["experiments"].as_array().unwrap();
    assert_eq!(exps.len(), 2);
    let models: Vec<&str> = exps[0]["cells"].as_array().unwrap().iter().map(|c| c["model"].as_str().unwrap()).collect();
    assert_eq!(models, ["LR", "RF", "NN", "TransE", "RDF2Vec", "RGCN3+lit"]);
    assert_eq!(exps[1]["cells"].as_array().unwrap().len(), 7);

    let metrics = dir.path().join("reports/metrics.csv");
    let first = std::fs::read(&metrics).unwrap();
    let text = String::from_utf8_lossy(&first).into_owned();
    assert!(text.starts_with(
        "experiment,model,kg_variant,repetition,f1_backhome,f1_rehab,f1_death,f1_macro,f1_weighted,accuracy,auc\n"
    ));
    assert_eq!(text.lines().count(), 1 + 6 + 7);
    assert!(dir.path().join("reports/summary.json.manifest.json").exists());

    assert!(carekg(&cfg, &["run"]).status.success());
    assert_eq!(std::fs::read(&metrics).unwrap(), first);

    let only = dir.path().join("only");
    let out = carekg(&cfg, &["run", "--spec", t1.to_str().unwrap(), "--out", only.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(String::from_utf8_lossy(&std::fs::read(only.join("metrics.csv")).unwrap()).lines().count(), 7);
}
