//! The `run`, `validate` and `synth` commands.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{ExperimentConfig, TraceLevel};
use crate::error::{Error, Result};
use crate::graph::{load_graph_with_nodes, read_edge_tsv, WeightedGraph};
use crate::pipeline::{cross_validate, fold_seed, ExperimentResult};
use crate::seeds::derive_seed;
use crate::synth::{write_dataset, SynthFiles, SynthSpec};
use crate::tasks::{build_labeling, read_label_tsv, TaskLabeling};

pub const SCORES_FILE: &str = "scores.tsv";
pub const METRICS_FILE: &str = "metrics.json";
pub const PARAMS_FILE: &str = "learned_params.txt";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Parsed inputs of an experiment.
#[derive(Debug, Clone)]
pub struct Inputs {
    pub graph: WeightedGraph,
    pub labeling: TaskLabeling,
    pub warnings: Vec<String>,
}

fn read(path: &Path, field: &str) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::config(field, format!("cannot read {}: {e}", path.display())))
}

/// Load the graph (plus isolated labeled nodes) and the labeling.
pub fn load_inputs(cfg: &ExperimentConfig) -> Result<Inputs> {
    let graph_bytes = read(&cfg.graph_path, "graph_path")?;
    let label_bytes = read(&cfg.labels_path, "labels_path")?;
    let edges = read_edge_tsv(graph_bytes.as_slice(), &cfg.graph_path.display().to_string())?;
    let labels = read_label_tsv(label_bytes.as_slice(), &cfg.labels_path.display().to_string())?;
    let mut endpoint_ids: Vec<&str> = edges.iter().flat_map(|e| [e.id_a.as_str(), e.id_b.as_str()]).collect();
    endpoint_ids.sort_unstable();
    endpoint_ids.dedup();
    let mut isolated: Vec<String> = labels
        .iter()
        .filter(|r| endpoint_ids.binary_search(&r.node_id.as_str()).is_err())
        .map(|r| r.node_id.clone())
        .collect();
    isolated.sort_unstable();
    isolated.dedup();
    let mut warnings = Vec::new();
    if !isolated.is_empty() {
        warnings.push(format!("{} labeled node(s) have no edges, e.g. `{}`", isolated.len(), isolated[0]));
    }
    let graph = load_graph_with_nodes(edges, isolated)?;
    let labeling = build_labeling(&graph, &labels, cfg.implicit_negatives)?;
    Ok(Inputs { graph, labeling, warnings })
}

/// SHA-256 of a file, with its role and size.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub role: String,
    pub path: PathBuf,
    pub bytes: u64,
    pub sha256: String,
}

fn digest(role: &str, path: &Path) -> Result<FileDigest> {
    let data = fs::read(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    Ok(FileDigest {
        role: role.into(),
        path: path.to_path_buf(),
        bytes: data.len() as u64,
        sha256: hex::encode(Sha256::digest(&data)),
    })
}

/// Seeds used by a run; all derive from `master`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub master: u64,
    pub folds: u64,
    pub per_fold: Vec<u64>,
    pub derivation: String,
}

/// Reproducibility record written next to the outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config: ExperimentConfig,
    pub seeds: SeedRecord,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(format!("reading manifest {}", path.display()), e))?;
        serde_json::from_str(&text).map_err(|e| Error::config("manifest", e.to_string()))
    }

    /// The recorded configuration, after checking the inputs are unchanged.
    pub fn replay_config(&self) -> Result<ExperimentConfig> {
        for rec in &self.inputs {
            let now = digest(&rec.role, &rec.path).map_err(|_| Error::config(&rec.role, format!("missing input {}", rec.path.display())))?;
            if now.sha256 != rec.sha256 {
                return Err(Error::config(&rec.role, format!("{} changed since the manifest was written", rec.path.display())));
            }
        }
        Ok(self.config.clone())
    }
}

/// Files written by [`cmd_run`] and the in-memory result.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub scores: PathBuf,
    pub metrics: PathBuf,
    pub params: PathBuf,
    pub manifest: PathBuf,
    pub traces: Vec<PathBuf>,
    pub result: ExperimentResult,
    pub warnings: Vec<String>,
}

fn absolute(p: &Path) -> PathBuf {
    fs::canonicalize(p).unwrap_or_else(|_| p.to_path_buf())
}

fn write(path: &Path, body: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, body).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

fn params_report(inputs: &Inputs, result: &ExperimentResult) -> String {
    use std::fmt::Write as _;
    let mut s = String::new();
    for f in &result.folds {
        writeln!(s, "fold {} train={} unlabeled={} test={}", f.fold, f.train_size, f.unlabeled_size, f.test_nodes.len()).unwrap();
        for k in &f.excluded {
            writeln!(s, "  excluded task {} (no training positives)", inputs.labeling.task_ids()[*k]).unwrap();
        }
        for g in &f.groups {
            writeln!(
                s,
                "  group {} alpha={} beta={} tau={} F={} learning_iterations={} learning_converged={} sweeps={} dynamics_converged={}",
                g.label, g.alpha, g.beta, g.tau, g.achieved_f, g.learning_iterations, g.learning_converged, g.dynamics_sweeps, g.dynamics_converged
            )
            .unwrap();
            for (j, t) in g.tasks.iter().enumerate() {
                writeln!(s, "    task {t} gamma={} rho={} predicted_positives={}", g.gamma[j], g.rho[j], g.predicted_positives[j]).unwrap();
            }
        }
    }
    s
}

/// Run the cross-validated experiment and write all artifacts.
pub fn cmd_run(cfg: &ExperimentConfig) -> Result<RunArtifacts> {
    cfg.validate()?;
    let seed = cfg.seed()?;
    let mut cfg = cfg.clone();
    cfg.graph_path = absolute(&cfg.graph_path);
    cfg.labels_path = absolute(&cfg.labels_path);
    let inputs = load_inputs(&cfg)?;
    let result = cross_validate(&inputs.graph, &inputs.labeling, cfg.k_folds, &cfg.grid, &cfg.pipeline(), seed)?;

    fs::create_dir_all(&cfg.output_dir).map_err(|e| Error::io(format!("creating {}", cfg.output_dir.display()), e))?;
    cfg.output_dir = absolute(&cfg.output_dir);
    let out = cfg.output_dir.clone();
    let scores = out.join(SCORES_FILE);
    let mut buf = Vec::new();
    result
        .scores
        .write_tsv(&inputs.graph, &inputs.labeling, &mut buf)
        .map_err(|e| Error::io("formatting scores", e))?;
    write(&scores, &buf)?;
    let metrics = out.join(METRICS_FILE);
    let json = serde_json::to_string_pretty(&result.report).map_err(|e| Error::Serialization(e.to_string()))?;
    write(&metrics, json + "\n")?;
    let params = out.join(PARAMS_FILE);
    write(&params, params_report(&inputs, &result))?;

    let mut traces = Vec::new();
    if cfg.trace == TraceLevel::Dynamics {
        let dir = out.join("traces");
        fs::create_dir_all(&dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
        for f in &result.folds {
            for (g, grp) in f.groups.iter().enumerate() {
                let mut body = String::from("sweep\tenergy\tflips\n");
                for (s, e) in grp.energy_per_sweep.iter().enumerate() {
                    let flips = if s == 0 { 0 } else { grp.flips_per_sweep[s - 1] };
                    body.push_str(&format!("{s}\t{e}\t{flips}\n"));
                }
                let path = dir.join(format!("fold{}_group{g}.tsv", f.fold));
                write(&path, body)?;
                traces.push(path);
            }
        }
    }

    let mut outputs = vec![digest("scores", &scores)?, digest("metrics", &metrics)?, digest("learned_params", &params)?];
    for t in &traces {
        outputs.push(digest("trace", t)?);
    }
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        seeds: SeedRecord {
            master: seed,
            folds: derive_seed(seed, "folds"),
            per_fold: (0..cfg.k_folds).map(|f| fold_seed(seed, f)).collect(),
            derivation: "splitmix64(master ^ fnv1a64(label)); labels: folds, fold{f}, fold{f}/group{g}/{select,learn,dynamics}".into(),
        },
        inputs: vec![digest("graph_path", &cfg.graph_path)?, digest("labels_path", &cfg.labels_path)?],
        outputs,
        config: cfg,
    };
    let manifest_path = out.join(MANIFEST_FILE);
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Serialization(e.to_string()))?;
    write(&manifest_path, json + "\n")?;

    let mut warnings = inputs.warnings.clone();
    warnings.extend(result.report.folds.iter().flat_map(|f| f.warnings.iter().cloned()));
    for t in result.plan.flagged_tasks() {
        warnings.push(format!(
            "task {} has fewer positives than folds; some folds train without its positives",
            inputs.labeling.task_ids()[t]
        ));
    }
    Ok(RunArtifacts {
        scores,
        metrics,
        params,
        manifest: manifest_path,
        traces,
        result,
        warnings,
    })
}

/// Per-task line of the validation report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaskSummary {
    pub task_id: String,
    pub positives: usize,
    pub negatives: usize,
    pub positive_rate: f64,
    pub imbalance_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub n: usize,
    pub m: usize,
    pub labeled: usize,
    pub unlabeled: usize,
    pub edges: usize,
    pub tasks: Vec<TaskSummary>,
    pub warnings: Vec<String>,
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "nodes n = {}, tasks m = {}, edges = {}", self.n, self.m, self.edges)?;
        writeln!(f, "labeled |L| = {}, never labeled |U| = {}", self.labeled, self.unlabeled)?;
        writeln!(f, "task\tpositives\tnegatives\tp_plus\timbalance")?;
        for t in &self.tasks {
            writeln!(f, "{}\t{}\t{}\t{:.6}\t{:.6}", t.task_id, t.positives, t.negatives, t.positive_rate, t.imbalance_ratio)?;
        }
        for w in &self.warnings {
            writeln!(f, "warning: {w}")?;
        }
        Ok(())
    }
}

/// Parse and cross-check the inputs without running anything.
pub fn cmd_validate(cfg: &ExperimentConfig) -> Result<ValidationReport> {
    cfg.validate()?;
    let inputs = load_inputs(cfg)?;
    let l = &inputs.labeling;
    let mut warnings = inputs.warnings.clone();
    let tasks: Vec<TaskSummary> = (0..l.m())
        .map(|k| {
            let p = l.positive_count(k);
            TaskSummary {
                task_id: l.task_ids()[k].clone(),
                positives: p,
                negatives: l.labeled().len() - p,
                positive_rate: l.positive_rate(k),
                imbalance_ratio: l.imbalance_ratio(k),
            }
        })
        .collect();
    for t in &tasks {
        if t.positives == 0 {
            warnings.push(format!("task {} has no positives and will be excluded", t.task_id));
        } else if t.positives < cfg.k_folds {
            warnings.push(format!("task {} has {} positives, fewer than {} folds", t.task_id, t.positives, cfg.k_folds));
        }
    }
    Ok(ValidationReport {
        n: inputs.graph.n(),
        m: l.m(),
        labeled: l.labeled().len(),
        unlabeled: inputs.graph.n() - l.labeled().len(),
        edges: inputs.graph.edge_count(),
        tasks,
        warnings,
    })
}

/// Write a synthetic dataset into `dir`.
pub fn cmd_synth(spec: &SynthSpec, dir: &Path) -> Result<SynthFiles> {
    write_dataset(spec, dir)
}
