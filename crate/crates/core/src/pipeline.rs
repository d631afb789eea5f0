//! Cross-validated pipeline: similarity, grouping, learning, inference and
//! scoring, with nested hyper-parameter selection.
//!
//! Every fold trains on the labels of the other folds. Its unlabeled set `U`
//! is every graph node outside the training labels, so held-out nodes and
//! never-labeled nodes are inferred together. The score of a held-out
//! `(node, task)` pair is its final neuron input, which is positive exactly
//! when the node is predicted positive.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{bipartition, run_inference, DynamicsConfig, InferenceProblem};
use crate::error::{Error, Result};
use crate::folds::{make_folds, FoldPlan, TaskFoldReport};
use crate::graph::{submatrix, SparseMatrix, WeightedGraph};
use crate::hopfield::{regularization_coefficients, ModelParams, NetworkState};
use crate::learning::{learn, LearnOutcome, LearningConfig, LearningProblem, MembershipConfig};
use crate::metrics::{auc, aupr, f_measure, mean_defined};
use crate::seeds::derive_seed;
use crate::tasks::{group_by_cardinality, jaccard_similarity, threshold_similarity, TaskLabeling, TaskSimilarity};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMetric {
    Aupr,
    Auc,
    F,
}

/// Candidate hyper-parameters for nested selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HyperGrid {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub tau: Vec<f64>,
    pub metric: SelectionMetric,
    pub inner_folds: usize,
}

impl Default for HyperGrid {
    fn default() -> Self {
        Self {
            alpha: vec![0.0, 0.5, 1.0, 2.0],
            beta: vec![0.0, 1.0, 2.0, 4.0],
            tau: vec![1000.0],
            metric: SelectionMetric::Aupr,
            inner_folds: 3,
        }
    }
}

impl HyperGrid {
    pub fn fixed(h: Hyper) -> Self {
        Self {
            alpha: vec![h.alpha],
            beta: vec![h.beta],
            tau: vec![h.tau],
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("grid.alpha", &self.alpha), ("grid.beta", &self.beta), ("grid.tau", &self.tau)] {
            if v.is_empty() {
                return Err(Error::config(name, "grid must not be empty"));
            }
            if v.iter().any(|x| !x.is_finite() || *x < 0.0) {
                return Err(Error::config(name, "values must be finite and >= 0"));
            }
        }
        if self.tau.iter().any(|&t| t <= 0.0) {
            return Err(Error::config("grid.tau", "values must be > 0"));
        }
        if self.inner_folds < 2 {
            return Err(Error::config("grid.inner_folds", "must be >= 2"));
        }
        Ok(())
    }

    /// Grid points ordered by `(α, β, τ)` ascending, duplicates removed.
    pub fn points(&self) -> Vec<Hyper> {
        let mut pts = Vec::new();
        for &alpha in &self.alpha {
            for &beta in &self.beta {
                for &tau in &self.tau {
                    pts.push(Hyper { alpha, beta, tau });
                }
            }
        }
        pts.sort_by(|a, b| a.key().partial_cmp(&b.key()).unwrap());
        pts.dedup();
        pts
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyper {
    pub alpha: f64,
    pub beta: f64,
    pub tau: f64,
}

impl Hyper {
    fn key(&self) -> (f64, f64, f64) {
        (self.alpha, self.beta, self.tau)
    }
}

/// Everything the pipeline needs besides data, grid and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub membership: MembershipConfig,
    pub learning: LearningConfig,
    pub dynamics: DynamicsConfig,
    /// Cardinality bin edges for task grouping; empty means one group.
    pub bin_edges: Vec<usize>,
    /// Similarities below this value are zeroed.
    pub similarity_cutoff: f64,
    /// Treat dynamics that hit `max_sweeps` as an error instead of a warning.
    pub nonconvergence_fatal: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            membership: MembershipConfig::default(),
            learning: LearningConfig::default(),
            dynamics: DynamicsConfig::new(0),
            bin_edges: vec![9, 20, 50, 100],
            similarity_cutoff: 0.0,
            nonconvergence_fatal: false,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.membership.validate().map_err(|e| Error::config("membership", e.to_string()))?;
        self.learning.validate().map_err(|e| Error::config("learning", e.to_string()))?;
        self.dynamics.validate().map_err(|e| Error::config("dynamics", e.to_string()))?;
        if self.bin_edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config("bin_edges", "must be strictly increasing"));
        }
        if !(0.0..=1.0).contains(&self.similarity_cutoff) {
            return Err(Error::config("similarity_cutoff", "must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Sub-matrices of one train/predict split.
#[derive(Debug, Clone)]
pub struct Split {
    /// Training labeled nodes `L`, ascending.
    pub train: Vec<usize>,
    /// Every other graph node `U`, ascending.
    pub unlabeled: Vec<usize>,
    /// Position of each graph node in `unlabeled`, or `usize::MAX`.
    u_index: Vec<usize>,
    w_ll: SparseMatrix,
    w_uu: SparseMatrix,
    w_ul: SparseMatrix,
    train_labels: TaskLabeling,
}

impl Split {
    pub fn new(graph: &WeightedGraph, labeling: &TaskLabeling, train: &[usize]) -> Result<Self> {
        let mut train = train.to_vec();
        train.sort_unstable();
        train.dedup();
        let mut in_train = vec![false; graph.n()];
        for &i in &train {
            if i >= graph.n() {
                return Err(Error::IndexOutOfRange { index: i, n: graph.n() });
            }
            in_train[i] = true;
        }
        let unlabeled: Vec<usize> = (0..graph.n()).filter(|&i| !in_train[i]).collect();
        let mut u_index = vec![usize::MAX; graph.n()];
        for (p, &i) in unlabeled.iter().enumerate() {
            u_index[i] = p;
        }
        Ok(Self {
            w_ll: submatrix(graph, &train, &train)?,
            w_uu: submatrix(graph, &unlabeled, &unlabeled)?,
            w_ul: submatrix(graph, &unlabeled, &train)?,
            train_labels: labeling.restrict(&train),
            train,
            unlabeled,
            u_index,
        })
    }

    pub fn u_position(&self, node: usize) -> Option<usize> {
        self.u_index.get(node).copied().filter(|&p| p != usize::MAX)
    }

    pub fn train_labels(&self) -> &TaskLabeling {
        &self.train_labels
    }

    /// Task similarity from training positives, after the cutoff.
    pub fn similarity(&self, cutoff: f64) -> Result<TaskSimilarity> {
        threshold_similarity(&jaccard_similarity(&self.train_labels), cutoff)
    }

    /// Training positive rate `p_{k,+}` of each listed task.
    pub fn positive_rates(&self, tasks: &[usize]) -> Vec<f64> {
        let l = self.train.len().max(1) as f64;
        tasks.iter().map(|&k| self.train_labels.positive_count(k) as f64 / l).collect()
    }

    /// Learn `(γ̂, ρ̂)` for `tasks` (global indices) on the training labels.
    pub fn learn_group(
        &self,
        tasks: &[usize],
        similarity: &TaskSimilarity,
        alpha: f64,
        membership: &MembershipConfig,
        learning: &LearningConfig,
    ) -> Result<LearnOutcome> {
        let positive = tasks
            .iter()
            .map(|&k| self.train.iter().map(|&i| self.train_labels.is_positive(i, k)).collect())
            .collect();
        let problem = LearningProblem::new(
            self.w_ll.clone(),
            positive,
            similarity.restrict(tasks),
            alpha,
            learning.crosstask_activation,
        )?;
        learn(&problem, membership, learning)
    }

    /// Run the unlabeled dynamics for `tasks` with learned parameters.
    pub fn infer_group(
        &self,
        tasks: &[usize],
        similarity: &TaskSimilarity,
        learned: &LearnOutcome,
        hyper: &Hyper,
        dynamics: &DynamicsConfig,
        nonconvergence_fatal: bool,
    ) -> Result<GroupInference> {
        let params = ModelParams::new(learned.gamma.clone(), learned.rho.clone(), hyper.alpha, hyper.beta, hyper.tau)?;
        let sim = similarity.restrict(tasks);
        let p_plus = self.positive_rates(tasks);
        let mut warnings = Vec::new();
        let reg = if hyper.beta > 0.0 {
            let (reg, w) = regularization_coefficients(hyper.beta, &params.rho, &p_plus, self.unlabeled.len())?;
            warnings.extend(w);
            Some(reg)
        } else {
            None
        };
        let clamped = NetworkState::from_fn(self.train.len(), &params, |i, k| {
            self.train_labels.is_positive(self.train[i], tasks[k])
        });
        let problem = InferenceProblem {
            w_uu: &self.w_uu,
            w_ul: &self.w_ul,
            clamped: &clamped,
            similarity: &sim,
            params: &params,
            regularization: reg.as_ref(),
            p_plus: &p_plus,
        };
        let trace = run_inference(&problem, dynamics)?;
        let part = bipartition(&trace, !nonconvergence_fatal)?;
        warnings.extend(part.warning);
        let g = tasks.len();
        let h = self.unlabeled.len();
        let mut predicted = vec![false; h * g];
        for (k, pos) in part.positives.iter().enumerate() {
            for &i in pos {
                predicted[i * g + k] = true;
            }
        }
        Ok(GroupInference {
            scores: trace.final_inputs,
            predicted,
            sweeps: trace.sweeps_run,
            converged: trace.converged,
            energy_per_sweep: trace.energy_per_sweep,
            flips_per_sweep: trace.flips_per_sweep,
            warnings,
        })
    }
}

/// Scores and predictions over `U × tasks`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupInference {
    pub scores: Vec<f64>,
    pub predicted: Vec<bool>,
    pub sweeps: usize,
    pub converged: bool,
    pub energy_per_sweep: Vec<f64>,
    pub flips_per_sweep: Vec<usize>,
    pub warnings: Vec<String>,
}

/// Mean inner-CV metric of one grid point; `None` when never defined.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridScore {
    pub alpha: f64,
    pub beta: f64,
    pub tau: f64,
    pub score: Option<f64>,
}

/// Per-task metric over `nodes` (which must all lie in `split.unlabeled`).
fn group_metric(
    split: &Split,
    labeling: &TaskLabeling,
    tasks: &[usize],
    inf: &GroupInference,
    nodes: &[usize],
    metric: SelectionMetric,
) -> Option<f64> {
    let g = tasks.len();
    mean_defined(tasks.iter().enumerate().map(|(kl, &k)| {
        let mut scores = Vec::with_capacity(nodes.len());
        let mut predicted = Vec::with_capacity(nodes.len());
        let mut truth = Vec::with_capacity(nodes.len());
        for &i in nodes {
            let p = split.u_position(i).expect("held-out node outside U");
            scores.push(inf.scores[p * g + kl]);
            predicted.push(inf.predicted[p * g + kl]);
            truth.push(labeling.is_positive(i, k));
        }
        match metric {
            SelectionMetric::Aupr => aupr(&scores, &truth).ok(),
            SelectionMetric::Auc => auc(&scores, &truth).ok(),
            SelectionMetric::F => f_measure(&predicted, &truth).ok(),
        }
    }))
}

/// A grid point with its metric on one inner fold.
type PointScore = (Hyper, Option<f64>);

/// Choose `(α, β, τ)` for one task group by inner cross-validation on
/// `train`. Ties go to the smallest `(α, β, τ)`; a single grid point is
/// returned without inner runs.
#[allow(clippy::too_many_arguments)]
pub fn select_hyperparams(
    graph: &WeightedGraph,
    labeling: &TaskLabeling,
    train: &[usize],
    tasks: &[usize],
    grid: &HyperGrid,
    cfg: &PipelineConfig,
    seed: u64,
) -> Result<(Hyper, Vec<GridScore>)> {
    grid.validate()?;
    let points = grid.points();
    if points.len() == 1 {
        return Ok((points[0], Vec::new()));
    }
    let group_labels = labeling.select_tasks(tasks);
    let k_inner = grid.inner_folds.min(train.len());
    if k_inner < 2 {
        return Ok((points[0], Vec::new()));
    }
    let plan = make_folds(train, &group_labels, k_inner, derive_seed(seed, "inner-folds"))?;
    let mut learn_keys: Vec<(f64, f64)> = points.iter().map(|p| (p.alpha, p.tau)).collect();
    learn_keys.sort_by(|a, b| a.partial_cmp(b).unwrap());
    learn_keys.dedup();
    let jobs: Vec<(usize, (f64, f64))> = (0..k_inner).flat_map(|f| learn_keys.iter().map(move |&lk| (f, lk))).collect();
    // (fold, α, τ) -> metric per β, in grid order
    let results: Vec<Result<Vec<PointScore>>> = jobs
        .par_iter()
        .map(|&(f, (alpha, tau))| {
            let inner_seed = derive_seed(seed, &format!("inner{f}"));
            let split = Split::new(graph, labeling, &plan.train_nodes(f))?;
            let test = plan.test_nodes(f);
            let active: Vec<usize> = tasks.iter().copied().filter(|&k| split.train_labels.positive_count(k) > 0).collect();
            let betas: Vec<Hyper> = points.iter().filter(|p| p.alpha == alpha && p.tau == tau).copied().collect();
            if active.is_empty() {
                return Ok(betas.into_iter().map(|h| (h, None)).collect());
            }
            let sim = split.similarity(cfg.similarity_cutoff)?;
            let membership = MembershipConfig { tau, ..cfg.membership };
            let learning = LearningConfig {
                seed: derive_seed(inner_seed, "learn"),
                ..cfg.learning.clone()
            };
            let learned = split.learn_group(&active, &sim, alpha, &membership, &learning)?;
            let dynamics = DynamicsConfig {
                seed: derive_seed(inner_seed, "dynamics"),
                ..cfg.dynamics
            };
            betas
                .into_iter()
                .map(|h| {
                    let inf = split.infer_group(&active, &sim, &learned, &h, &dynamics, false)?;
                    Ok((h, group_metric(&split, labeling, &active, &inf, &test, grid.metric)))
                })
                .collect()
        })
        .collect();
    let mut per_point: Vec<Vec<Option<f64>>> = vec![Vec::new(); points.len()];
    for r in results {
        for (h, v) in r? {
            let idx = points.iter().position(|p| *p == h).expect("grid point");
            per_point[idx].push(v);
        }
    }
    let table: Vec<GridScore> = points
        .iter()
        .zip(&per_point)
        .map(|(p, vals)| GridScore {
            alpha: p.alpha,
            beta: p.beta,
            tau: p.tau,
            score: mean_defined(vals.iter().copied()),
        })
        .collect();
    let mut best = 0;
    for (i, row) in table.iter().enumerate() {
        let better = match (row.score, table[best].score) {
            (Some(a), Some(b)) => a > b,
            (Some(_), None) => true,
            _ => false,
        };
        if better {
            best = i;
        }
    }
    Ok((points[best], table))
}

/// One `(node, task)` row of the score table.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRow {
    pub node: usize,
    pub task: usize,
    pub score: f64,
    pub predicted: bool,
    pub truth: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScoreTable {
    pub rows: Vec<ScoreRow>,
}

impl ScoreTable {
    /// `node_id  task_id  score  predicted  truth` with a header line.
    pub fn write_tsv<W: Write>(&self, graph: &WeightedGraph, labeling: &TaskLabeling, mut out: W) -> std::io::Result<()> {
        writeln!(out, "node_id\ttask_id\tscore\tpredicted\ttruth")?;
        let sign = |b: bool| if b { "+" } else { "-" };
        for r in &self.rows {
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}",
                graph.node_id(r.node),
                labeling.task_ids()[r.task],
                r.score,
                sign(r.predicted),
                r.truth.map_or("?", sign)
            )?;
        }
        Ok(())
    }

    pub fn scores_for(&self, task: usize) -> (Vec<f64>, Vec<bool>) {
        self.rows
            .iter()
            .filter(|r| r.task == task)
            .filter_map(|r| r.truth.map(|t| (r.score, t)))
            .unzip()
    }
}

/// What one task group did in one fold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupReport {
    pub label: String,
    pub tasks: Vec<String>,
    pub alpha: f64,
    pub beta: f64,
    pub tau: f64,
    pub gamma: Vec<f64>,
    pub rho: Vec<f64>,
    pub achieved_f: f64,
    pub learning_iterations: usize,
    pub learning_converged: bool,
    pub dynamics_sweeps: usize,
    pub dynamics_converged: bool,
    pub predicted_positives: Vec<usize>,
    pub selection: Vec<GridScore>,
    /// Energy before the first sweep and after each sweep.
    #[serde(skip)]
    pub energy_per_sweep: Vec<f64>,
    #[serde(skip)]
    pub flips_per_sweep: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldOutput {
    pub fold: usize,
    pub test_nodes: Vec<usize>,
    pub train_size: usize,
    pub unlabeled_size: usize,
    pub rows: Vec<ScoreRow>,
    pub groups: Vec<GroupReport>,
    pub excluded: Vec<usize>,
    pub warnings: Vec<String>,
}

/// Scope seed of fold `fold`.
pub fn fold_seed(master: u64, fold: usize) -> u64 {
    derive_seed(master, &format!("fold{fold}"))
}

/// Scope seed of group `group` inside a fold scope.
pub fn group_seed(fold_scope: u64, group: usize) -> u64 {
    derive_seed(fold_scope, &format!("group{group}"))
}

/// Train on every fold but `fold` and score its held-out nodes.
pub fn run_pipeline(
    graph: &WeightedGraph,
    labeling: &TaskLabeling,
    plan: &FoldPlan,
    fold: usize,
    grid: &HyperGrid,
    cfg: &PipelineConfig,
    master_seed: u64,
) -> Result<FoldOutput> {
    if fold >= plan.k_folds {
        return Err(Error::InvalidParameter(format!("fold {fold} >= k_folds {}", plan.k_folds)));
    }
    let scope = fold_seed(master_seed, fold);
    let train = plan.train_nodes(fold);
    let test = plan.test_nodes(fold);
    let split = Split::new(graph, labeling, &train)?;
    let m = labeling.m();
    let excluded: Vec<usize> = (0..m).filter(|&k| split.train_labels.positive_count(k) == 0).collect();
    let grouping = group_by_cardinality(&split.train_labels, &cfg.bin_edges)?;
    let sim = split.similarity(cfg.similarity_cutoff)?;
    let mut scores = vec![0.0; test.len() * m];
    let mut predicted = vec![false; test.len() * m];
    let mut groups = Vec::new();
    let mut warnings = Vec::new();
    for (g, (tasks, label)) in grouping.groups.iter().zip(&grouping.labels).enumerate() {
        let tasks: Vec<usize> = tasks.iter().copied().filter(|k| !excluded.contains(k)).collect();
        if tasks.is_empty() {
            continue;
        }
        let gs = group_seed(scope, g);
        let (hyper, selection) = select_hyperparams(graph, labeling, &train, &tasks, grid, cfg, derive_seed(gs, "select"))?;
        let membership = MembershipConfig {
            tau: hyper.tau,
            ..cfg.membership
        };
        let learning = LearningConfig {
            seed: derive_seed(gs, "learn"),
            ..cfg.learning.clone()
        };
        let learned = split.learn_group(&tasks, &sim, hyper.alpha, &membership, &learning)?;
        let dynamics = DynamicsConfig {
            seed: derive_seed(gs, "dynamics"),
            ..cfg.dynamics
        };
        let inf = split.infer_group(&tasks, &sim, &learned, &hyper, &dynamics, cfg.nonconvergence_fatal)?;
        warnings.extend(inf.warnings.iter().map(|w| format!("fold {fold}, group {label}: {w}")));
        let gl = tasks.len();
        for (t, &i) in test.iter().enumerate() {
            let p = split.u_position(i).expect("held-out node outside U");
            for (kl, &k) in tasks.iter().enumerate() {
                scores[t * m + k] = inf.scores[p * gl + kl];
                predicted[t * m + k] = inf.predicted[p * gl + kl];
            }
        }
        groups.push(GroupReport {
            label: label.clone(),
            tasks: tasks.iter().map(|&k| labeling.task_ids()[k].clone()).collect(),
            alpha: hyper.alpha,
            beta: hyper.beta,
            tau: hyper.tau,
            gamma: learned.gamma.clone(),
            rho: learned.rho.clone(),
            achieved_f: learned.achieved_f,
            learning_iterations: learned.iterations,
            learning_converged: learned.converged,
            dynamics_sweeps: inf.sweeps,
            dynamics_converged: inf.converged,
            predicted_positives: (0..gl).map(|kl| (0..split.unlabeled.len()).filter(|&p| inf.predicted[p * gl + kl]).count()).collect(),
            selection,
            energy_per_sweep: inf.energy_per_sweep,
            flips_per_sweep: inf.flips_per_sweep,
        });
    }
    let rows = test
        .iter()
        .enumerate()
        .flat_map(|(t, &i)| {
            let (scores, predicted) = (&scores, &predicted);
            (0..m).map(move |k| ScoreRow {
                node: i,
                task: k,
                score: scores[t * m + k],
                predicted: predicted[t * m + k],
                truth: labeling.is_labeled(i).then(|| labeling.is_positive(i, k)),
            })
        })
        .collect();
    Ok(FoldOutput {
        fold,
        train_size: train.len(),
        unlabeled_size: split.unlabeled.len(),
        test_nodes: test,
        rows,
        groups,
        excluded,
        warnings,
    })
}

/// Metric of one task in one fold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoldTaskMetrics {
    pub fold: usize,
    pub auc: Option<f64>,
    pub aupr: Option<f64>,
    pub excluded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaskMetrics {
    pub task_id: String,
    pub positives: usize,
    pub auc: Option<f64>,
    pub aupr: Option<f64>,
    pub folds: Vec<FoldTaskMetrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoldSummary {
    pub fold: usize,
    pub test_size: usize,
    pub train_size: usize,
    pub unlabeled_size: usize,
    pub excluded_tasks: Vec<String>,
    pub groups: Vec<GroupReport>,
    pub warnings: Vec<String>,
}

/// Structured metrics report written as JSON.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub seed: u64,
    pub k_folds: usize,
    pub n_nodes: usize,
    pub n_labeled: usize,
    pub n_tasks: usize,
    pub macro_auc: Option<f64>,
    pub macro_aupr: Option<f64>,
    pub tasks: Vec<TaskMetrics>,
    pub folds: Vec<FoldSummary>,
    pub fold_feasibility: Vec<TaskFoldReport>,
    pub undefined_metrics: Vec<String>,
    pub all_converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub plan: FoldPlan,
    pub folds: Vec<FoldOutput>,
    pub scores: ScoreTable,
    pub report: MetricsReport,
}

/// Run every fold (concurrently) and aggregate scores and metrics.
pub fn cross_validate(
    graph: &WeightedGraph,
    labeling: &TaskLabeling,
    k_folds: usize,
    grid: &HyperGrid,
    cfg: &PipelineConfig,
    seed: u64,
) -> Result<ExperimentResult> {
    cfg.validate()?;
    grid.validate()?;
    let plan = make_folds(labeling.labeled(), labeling, k_folds, derive_seed(seed, "folds"))?;
    let folds: Vec<FoldOutput> = (0..k_folds)
        .into_par_iter()
        .map(|f| run_pipeline(graph, labeling, &plan, f, grid, cfg, seed))
        .collect::<Result<_>>()?;
    let mut rows: Vec<ScoreRow> = folds.iter().flat_map(|f| f.rows.iter().cloned()).collect();
    rows.sort_by_key(|r| (r.node, r.task));
    let scores = ScoreTable { rows };
    let report = build_report(graph, labeling, &plan, &folds, seed);
    Ok(ExperimentResult {
        plan,
        folds,
        scores,
        report,
    })
}

fn build_report(graph: &WeightedGraph, labeling: &TaskLabeling, plan: &FoldPlan, folds: &[FoldOutput], seed: u64) -> MetricsReport {
    let m = labeling.m();
    let mut undefined = Vec::new();
    let tasks: Vec<TaskMetrics> = (0..m)
        .map(|k| {
            let id = &labeling.task_ids()[k];
            let per_fold: Vec<FoldTaskMetrics> = folds
                .iter()
                .map(|f| {
                    let (s, t): (Vec<f64>, Vec<bool>) = f.rows.iter().filter(|r| r.task == k).filter_map(|r| r.truth.map(|t| (r.score, t))).unzip();
                    let a = auc(&s, &t).ok();
                    let p = aupr(&s, &t).ok();
                    if a.is_none() {
                        undefined.push(format!("task {id}, fold {}: AUC undefined (single class)", f.fold));
                    }
                    if p.is_none() {
                        undefined.push(format!("task {id}, fold {}: AUPR undefined (no positives)", f.fold));
                    }
                    FoldTaskMetrics {
                        fold: f.fold,
                        auc: a,
                        aupr: p,
                        excluded: f.excluded.contains(&k),
                    }
                })
                .collect();
            TaskMetrics {
                task_id: id.clone(),
                positives: labeling.positive_count(k),
                auc: mean_defined(per_fold.iter().map(|f| f.auc)),
                aupr: mean_defined(per_fold.iter().map(|f| f.aupr)),
                folds: per_fold,
            }
        })
        .collect();
    let all_converged = folds.iter().all(|f| f.groups.iter().all(|g| g.dynamics_converged));
    MetricsReport {
        seed,
        k_folds: plan.k_folds,
        n_nodes: graph.n(),
        n_labeled: labeling.labeled().len(),
        n_tasks: m,
        macro_auc: mean_defined(tasks.iter().map(|t| t.auc)),
        macro_aupr: mean_defined(tasks.iter().map(|t| t.aupr)),
        folds: folds
            .iter()
            .map(|f| FoldSummary {
                fold: f.fold,
                test_size: f.test_nodes.len(),
                train_size: f.train_size,
                unlabeled_size: f.unlabeled_size,
                excluded_tasks: f.excluded.iter().map(|&k| labeling.task_ids()[k].clone()).collect(),
                groups: f.groups.clone(),
                warnings: f.warnings.clone(),
            })
            .collect(),
        tasks,
        fold_feasibility: plan.stratified.clone(),
        undefined_metrics: undefined,
        all_converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{load_graph, EdgeRecord};

    /// Two dense clusters joined by one bridge; task positives are cluster A.
    fn two_clusters(a: usize, b: usize) -> (WeightedGraph, TaskLabeling) {
        let mut recs = Vec::new();
        let name = |i: usize| format!("n{i:03}");
        for i in 0..a {
            for j in (i + 1)..a {
                recs.push(EdgeRecord::new(name(i), name(j), 1.0));
            }
        }
        for i in a..a + b {
            for j in (i + 1)..a + b {
                recs.push(EdgeRecord::new(name(i), name(j), 1.0));
            }
        }
        recs.push(EdgeRecord::new(name(0), name(a), 0.1));
        let g = load_graph(recs).unwrap();
        let all: Vec<usize> = (0..a + b).collect();
        let l = TaskLabeling::new(a + b, vec!["A".into()], &all, &[(0..a).collect()]).unwrap();
        (g, l)
    }

    fn fast_cfg() -> PipelineConfig {
        PipelineConfig {
            bin_edges: vec![],
            ..PipelineConfig::default()
        }
    }

    #[test]
    fn separable_instance_is_ranked_perfectly() {
        let (g, l) = two_clusters(9, 21);
        let grid = HyperGrid::fixed(Hyper { alpha: 0.0, beta: 0.0, tau: 1000.0 });
        let res = cross_validate(&g, &l, 3, &grid, &fast_cfg(), 5).unwrap();
        assert_eq!(res.report.macro_aupr, Some(1.0));
        assert_eq!(res.report.macro_auc, Some(1.0));
        assert_eq!(res.scores.rows.len(), 30);
        for r in &res.scores.rows {
            assert_eq!(r.predicted, r.score > 0.0);
        }
    }

    #[test]
    fn runs_are_deterministic() {
        let (g, l) = two_clusters(6, 14);
        let grid = HyperGrid {
            alpha: vec![0.0],
            beta: vec![0.0, 1.0],
            ..HyperGrid::default()
        };
        let a = cross_validate(&g, &l, 3, &grid, &fast_cfg(), 17).unwrap();
        let b = cross_validate(&g, &l, 3, &grid, &fast_cfg(), 17).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn singleton_grid_skips_selection() {
        let (g, l) = two_clusters(5, 10);
        let grid = HyperGrid::fixed(Hyper { alpha: 1.0, beta: 2.0, tau: 10.0 });
        let train: Vec<usize> = (0..10).collect();
        let (h, table) = select_hyperparams(&g, &l, &train, &[0], &grid, &fast_cfg(), 0).unwrap();
        assert_eq!(h, Hyper { alpha: 1.0, beta: 2.0, tau: 10.0 });
        assert!(table.is_empty());
    }

    #[test]
    fn ties_go_to_the_simplest_point() {
        // perfectly separable: every grid point reaches AUPR 1
        let (g, l) = two_clusters(9, 21);
        let grid = HyperGrid {
            alpha: vec![1.0, 0.0],
            beta: vec![2.0, 0.0],
            ..HyperGrid::default()
        };
        let train: Vec<usize> = (0..30).collect();
        let (h, table) = select_hyperparams(&g, &l, &train, &[0], &grid, &fast_cfg(), 3).unwrap();
        assert!(table.iter().all(|r| r.score == Some(1.0)), "{table:?}");
        assert_eq!((h.alpha, h.beta), (0.0, 0.0));
    }

    #[test]
    fn task_without_training_positives_is_excluded() {
        let (g, l) = two_clusters(6, 6);
        let all: Vec<usize> = (0..12).collect();
        let l2 = TaskLabeling::new(12, vec!["A".into(), "Z".into()], &all, &[(0..6).collect(), vec![11]]).unwrap();
        let grid = HyperGrid::fixed(Hyper { alpha: 0.0, beta: 0.0, tau: 1000.0 });
        let res = cross_validate(&g, &l2, 3, &grid, &fast_cfg(), 1).unwrap();
        let f = res.folds.iter().find(|f| f.test_nodes.contains(&11)).unwrap();
        assert_eq!(f.excluded, vec![1]);
        assert!(!res.report.fold_feasibility[1].feasible);
        drop(l);
    }
}
