//! Learning `(γ̂, ρ̂)` for a group of tasks by maximizing the fuzzy F objective
//! over the labeled sub-network.
//!
//! For fixed parameters each labeled neuron `ik` has input
//!
//! ```text
//! φ^L_ik = Σ_{j∈L} w_ij v_k(χ_jk) - θ_ik + α Σ_{r≠k} s_kr v(χ_ir)
//! ```
//!
//! with `v_k(1) = sin ρ_k`, `v_k(0) = -cos ρ_k`. Soft memberships `f(τ φ)` give
//! per-task fuzzy F-measures which are combined by an aggregator `σ`. The
//! search visits the `2m` coordinates in a seeded random order, maximizing F
//! along each one over a grid, until successive parameter vectors agree to
//! `delta_norm_tol` in max-norm.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{run_dynamics, DynamicsConfig};
use crate::error::{Error, Result};
use crate::graph::{submatrix, SparseMatrix, WeightedGraph};
use crate::hopfield::{activation_gap, rho_max, ModelParams, Network, NetworkState, RHO_MIN};
use crate::seeds;
use crate::tasks::{TaskLabeling, TaskSimilarity};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MembershipKind {
    /// `1 / (1 + e^{-x})`
    Sigmoid,
    /// `½ (2/π · arctan x + 1)`
    Arctangent,
    /// 1 for `x > 0`, else 0 (crisp memberships).
    Heaviside,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregator {
    HarmonicMean,
    Mean,
    Minimum,
}

/// Which activation pair the cross-task term of `φ^L_ik` uses for task `r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CrossTaskActivation {
    /// `sin ρ_k / -cos ρ_k` of the task being evaluated.
    Own,
    /// `sin ρ_r / -cos ρ_r` of the source task, matching the network state.
    #[default]
    Source,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MembershipConfig {
    pub f_kind: MembershipKind,
    pub tau: f64,
    pub sigma_kind: Aggregator,
}

impl Default for MembershipConfig {
    fn default() -> Self {
        Self {
            f_kind: MembershipKind::Arctangent,
            tau: 1000.0,
            sigma_kind: Aggregator::HarmonicMean,
        }
    }
}

impl MembershipConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0) {
            return Err(Error::InvalidParameter(format!("tau = {} must be > 0", self.tau)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LearningConfig {
    pub rho_grid_size: usize,
    pub gamma_grid_size: usize,
    pub max_outer_iters: usize,
    pub delta_norm_tol: f64,
    /// Derived per run by the pipeline, so not part of configuration files.
    #[serde(skip)]
    pub seed: u64,
    pub crosstask_activation: CrossTaskActivation,
}

impl Default for LearningConfig {
    fn default() -> Self {
        Self {
            rho_grid_size: 16,
            gamma_grid_size: 21,
            max_outer_iters: 20,
            delta_norm_tol: 1e-3,
            seed: 0,
            crosstask_activation: CrossTaskActivation::Source,
        }
    }
}

impl LearningConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rho_grid_size < 2 || self.gamma_grid_size < 2 {
            return Err(Error::InvalidParameter("grid sizes must be >= 2".into()));
        }
        if !(self.delta_norm_tol > 0.0) {
            return Err(Error::InvalidParameter("delta_norm_tol must be > 0".into()));
        }
        if self.max_outer_iters == 0 {
            return Err(Error::InvalidParameter("max_outer_iters must be >= 1".into()));
        }
        Ok(())
    }

    /// `rho_grid_size` equispaced angles over `[π/4, π/2 - 1e-6]`.
    pub fn rho_grid(&self) -> Vec<f64> {
        let g = self.rho_grid_size;
        let (lo, hi) = (RHO_MIN, rho_max());
        (0..g).map(|i| lo + (hi - lo) * i as f64 / (g - 1) as f64).collect()
    }
}

pub fn membership(kind: MembershipKind, x: f64) -> f64 {
    match kind {
        MembershipKind::Sigmoid => 1.0 / (1.0 + (-x).exp()),
        MembershipKind::Arctangent => 0.5 * (2.0 / std::f64::consts::PI * x.atan() + 1.0),
        MembershipKind::Heaviside => {
            if x > 0.0 {
                1.0
            } else {
                0.0
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Positive,
    Negative,
}

/// `(TP, FN)` for a positive neuron, `(FP, 0)` for a negative one.
pub fn memberships(phi: f64, side: Side, cfg: &MembershipConfig) -> (f64, f64) {
    let f = membership(cfg.f_kind, cfg.tau * phi);
    match side {
        Side::Positive => (f, 1.0 - f),
        Side::Negative => (f, 0.0),
    }
}

/// `2 TP / (2 TP + FP + FN)`; 0 when the denominator vanishes.
pub fn fuzzy_f(tp: f64, fp: f64, fneg: f64) -> f64 {
    let den = 2.0 * tp + fp + fneg;
    if den > 0.0 {
        2.0 * tp / den
    } else {
        0.0
    }
}

/// `σ(F_1, …, F_m)`. The harmonic mean is 0 as soon as any `F_k` is 0.
pub fn aggregate(kind: Aggregator, values: &[f64]) -> f64 {
    aggregate_by(kind, values.len(), |k| values[k])
}

fn aggregate_by(kind: Aggregator, m: usize, get: impl Fn(usize) -> f64) -> f64 {
    if m == 0 {
        return 0.0;
    }
    if m == 1 {
        return get(0);
    }
    match kind {
        Aggregator::Mean => (0..m).map(&get).sum::<f64>() / m as f64,
        Aggregator::Minimum => (0..m).map(&get).fold(f64::INFINITY, f64::min),
        Aggregator::HarmonicMean => {
            let mut inv = 0.0;
            for k in 0..m {
                let v = get(k);
                if v <= 0.0 {
                    return 0.0;
                }
                inv += 1.0 / v;
            }
            m as f64 / inv
        }
    }
}

/// Labeled sub-network of one task group with precomputed neighbor sums.
#[derive(Debug, Clone)]
pub struct LearningProblem {
    w_ll: SparseMatrix,
    positive: Vec<Vec<bool>>,
    similarity: TaskSimilarity,
    alpha: f64,
    crosstask: CrossTaskActivation,
    n: usize,
    m: usize,
    /// `Σ_j w_ij χ_jk`, row-major `n × m`.
    pos_field: Vec<f64>,
    /// `Σ_j w_ij (1 - χ_jk)`.
    neg_field: Vec<f64>,
    /// `Σ_r s_kr χ_ir` and `Σ_r s_kr (1 - χ_ir)`, used by [`CrossTaskActivation::Own`].
    cross_pos: Vec<f64>,
    cross_neg: Vec<f64>,
}

impl LearningProblem {
    /// `positive[k][i]` marks local labeled node `i` as positive for task `k`.
    pub fn new(
        w_ll: SparseMatrix,
        positive: Vec<Vec<bool>>,
        similarity: TaskSimilarity,
        alpha: f64,
        crosstask: CrossTaskActivation,
    ) -> Result<Self> {
        let n = w_ll.nrows();
        let m = positive.len();
        if w_ll.ncols() != n {
            return Err(Error::InvalidParameter("W_LL must be square".into()));
        }
        if similarity.m() != m {
            return Err(Error::InvalidParameter("similarity / task count mismatch".into()));
        }
        if positive.iter().any(|c| c.len() != n) {
            return Err(Error::InvalidParameter("label column length mismatch".into()));
        }
        if !(alpha >= 0.0) {
            return Err(Error::InvalidParameter(format!("alpha = {alpha} must be >= 0")));
        }
        let mut pos_field = vec![0.0; n * m];
        let mut neg_field = vec![0.0; n * m];
        let mut cross_pos = vec![0.0; n * m];
        let mut cross_neg = vec![0.0; n * m];
        for i in 0..n {
            for k in 0..m {
                let (mut p, mut q) = (0.0, 0.0);
                for &(j, w) in w_ll.row(i) {
                    if positive[k][j] {
                        p += w;
                    } else {
                        q += w;
                    }
                }
                pos_field[i * m + k] = p;
                neg_field[i * m + k] = q;
                let (mut cp, mut cn) = (0.0, 0.0);
                for (r, col) in positive.iter().enumerate() {
                    if r != k {
                        let s = similarity.get(k, r);
                        if col[i] {
                            cp += s;
                        } else {
                            cn += s;
                        }
                    }
                }
                cross_pos[i * m + k] = cp;
                cross_neg[i * m + k] = cn;
            }
        }
        Ok(Self {
            w_ll,
            positive,
            similarity,
            alpha,
            crosstask,
            n,
            m,
            pos_field,
            neg_field,
            cross_pos,
            cross_neg,
        })
    }

    /// Build from a graph, a labeling (whose `L` is used) and a task subset.
    pub fn from_labeling(
        graph: &WeightedGraph,
        labeling: &TaskLabeling,
        tasks: &[usize],
        similarity: TaskSimilarity,
        alpha: f64,
        crosstask: CrossTaskActivation,
    ) -> Result<Self> {
        let l = labeling.labeled();
        let w_ll = submatrix(graph, l, l)?;
        let positive = tasks
            .iter()
            .map(|&k| l.iter().map(|&i| labeling.is_positive(i, k)).collect())
            .collect();
        Self::new(w_ll, positive, similarity, alpha, crosstask)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn similarity(&self) -> &TaskSimilarity {
        &self.similarity
    }

    pub fn weights(&self) -> &SparseMatrix {
        &self.w_ll
    }

    pub fn is_positive(&self, i: usize, k: usize) -> bool {
        self.positive[k][i]
    }

    pub fn positive_count(&self, k: usize) -> usize {
        self.positive[k].iter().filter(|&&p| p).count()
    }

    #[inline]
    fn activation(&self, positive: bool, rho: f64) -> f64 {
        if positive {
            rho.sin()
        } else {
            -rho.cos()
        }
    }

    /// `B_ik` with source-task activations.
    fn source_cross(&self, i: usize, k: usize, rho: &[f64]) -> f64 {
        let mut acc = 0.0;
        for r in 0..self.m {
            if r != k {
                acc += self.similarity.get(k, r) * self.activation(self.positive[r][i], rho[r]);
            }
        }
        acc
    }

    fn source_cross_matrix(&self, rho: &[f64]) -> Vec<Vec<f64>> {
        (0..self.m)
            .map(|k| (0..self.n).map(|i| self.source_cross(i, k, rho)).collect())
            .collect()
    }

    /// `φ^L_ik` for the given parameter vectors.
    pub fn labeled_input(&self, i: usize, k: usize, gamma: &[f64], rho: &[f64]) -> f64 {
        let (s, c) = rho[k].sin_cos();
        let idx = i * self.m + k;
        let a = s * self.pos_field[idx] - c * self.neg_field[idx];
        let theta = gamma[k] + (self.alpha * self.similarity.row_sum(k) / 2.0) * activation_gap(rho[k]);
        let b = match self.crosstask {
            CrossTaskActivation::Own => s * self.cross_pos[idx] - c * self.cross_neg[idx],
            CrossTaskActivation::Source => self.source_cross(i, k, rho),
        };
        a - theta + self.alpha * b
    }

    /// `φ^L_ik + γ_k`: the part of the input that does not depend on `γ_k`.
    #[inline]
    fn free_input(&self, i: usize, k: usize, s: f64, c: f64, gap: f64, cross: f64) -> f64 {
        let idx = i * self.m + k;
        let a = s * self.pos_field[idx] - c * self.neg_field[idx];
        a - (self.alpha * self.similarity.row_sum(k) / 2.0) * gap + self.alpha * cross
    }

    #[inline]
    fn cross_term(&self, i: usize, k: usize, s: f64, c: f64, source: &[f64]) -> f64 {
        match self.crosstask {
            CrossTaskActivation::Own => {
                let idx = i * self.m + k;
                s * self.cross_pos[idx] - c * self.cross_neg[idx]
            }
            CrossTaskActivation::Source => source[i],
        }
    }

    /// `F_k` with `cross(i)` supplying the source-mode `B_ik`.
    fn task_f_with(&self, k: usize, gamma: f64, rho: f64, cfg: &MembershipConfig, cross: impl Fn(usize) -> f64) -> f64 {
        let (s, c) = rho.sin_cos();
        let gap = activation_gap(rho);
        let (mut tp, mut fp, mut fneg) = (0.0, 0.0, 0.0);
        let col = &self.positive[k];
        for i in 0..self.n {
            let b = match self.crosstask {
                CrossTaskActivation::Own => {
                    let idx = i * self.m + k;
                    s * self.cross_pos[idx] - c * self.cross_neg[idx]
                }
                CrossTaskActivation::Source => cross(i),
            };
            let phi = self.free_input(i, k, s, c, gap, b) - gamma;
            let f = membership(cfg.f_kind, cfg.tau * phi);
            if col[i] {
                tp += f;
                fneg += 1.0 - f;
            } else {
                fp += f;
            }
        }
        fuzzy_f(tp, fp, fneg)
    }

    /// `F_k(γ, ρ)`.
    pub fn task_objective(&self, k: usize, gamma: &[f64], rho: &[f64], cfg: &MembershipConfig) -> f64 {
        self.task_f_with(k, gamma[k], rho[k], cfg, |i| self.source_cross(i, k, rho))
    }

    /// `F(γ, ρ) = σ(F_1, …, F_m)`.
    pub fn objective(&self, gamma: &[f64], rho: &[f64], cfg: &MembershipConfig) -> f64 {
        let per: Vec<f64> = (0..self.m).map(|k| self.task_objective(k, gamma, rho, cfg)).collect();
        aggregate(cfg.sigma_kind, &per)
    }

    /// The known labeled state `L̄` under angles `rho`.
    pub fn labeled_state(&self, params: &ModelParams) -> NetworkState {
        NetworkState::from_fn(self.n, params, |i, k| self.positive[k][i])
    }

    fn free_span(&self, k: usize, rho: f64, source: &[f64]) -> (f64, f64) {
        let (s, c) = rho.sin_cos();
        let gap = activation_gap(rho);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..self.n {
            let v = self.free_input(i, k, s, c, gap, self.cross_term(i, k, s, c, source));
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }
}

/// Result of [`learn`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnOutcome {
    pub gamma: Vec<f64>,
    pub rho: Vec<f64>,
    pub achieved_f: f64,
    pub per_task_f: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// F after initialization and after every coordinate step.
    pub f_history: Vec<f64>,
}

/// `γ` candidates: `size` equispaced points spanning the free inputs, widened
/// by half a step on each side so that "all positive" and "all negative" are
/// both reachable.
pub fn gamma_grid(lo: f64, hi: f64, size: usize) -> Vec<f64> {
    let pad = if hi > lo {
        (hi - lo) / (2.0 * (size - 1) as f64)
    } else {
        0.5 * hi.abs().max(1.0)
    };
    let (a, b) = (lo - pad, hi + pad);
    (0..size).map(|i| a + (b - a) * i as f64 / (size - 1) as f64).collect()
}

/// Starting threshold: halfway between the median free input and the next
/// larger distinct one, so that no labeled neuron starts exactly at threshold.
fn initial_gamma(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let med = v[(v.len() - 1) / 2];
    match v.iter().find(|&&x| x > med) {
        Some(&next) => 0.5 * (med + next),
        None => med + 0.5 * med.abs().max(1.0),
    }
}

/// Pick the best candidate; exact ties go to the value closest to `current`,
/// then to the earlier candidate. `current` is always a candidate, so the
/// objective never decreases.
fn pick(current: f64, current_f: f64, candidates: &[f64], scores: &[f64]) -> (f64, f64) {
    let (mut best, mut best_f) = (current, current_f);
    for (&v, &f) in candidates.iter().zip(scores) {
        if f > best_f || (f == best_f && (v - current).abs() < (best - current).abs()) {
            best = v;
            best_f = f;
        }
    }
    (best, best_f)
}

/// Coordinate-wise grid search for `(γ̂, ρ̂)`.
pub fn learn(problem: &LearningProblem, mcfg: &MembershipConfig, lcfg: &LearningConfig) -> Result<LearnOutcome> {
    mcfg.validate()?;
    lcfg.validate()?;
    let m = problem.m;
    if m == 0 {
        return Err(Error::InvalidParameter("empty task group".into()));
    }
    for k in 0..m {
        if problem.positive_count(k) == 0 {
            return Err(Error::InvalidParameter(format!("task {k} has no labeled positives")));
        }
    }
    let mut rng = seeds::rng(lcfg.seed);
    let mut coords: Vec<usize> = (0..2 * m).collect();
    coords.shuffle(&mut rng);
    let mut rho: Vec<f64> = (0..m)
        .map(|_| (FRAC_PI_4 + FRAC_PI_4 * rng.gen::<f64>()).min(rho_max()))
        .collect();
    let source = problem.crosstask == CrossTaskActivation::Source;
    let mut cross = if source {
        problem.source_cross_matrix(&rho)
    } else {
        vec![Vec::new(); m]
    };
    let mut gamma: Vec<f64> = (0..m)
        .map(|k| {
            let (s, c) = rho[k].sin_cos();
            let gap = activation_gap(rho[k]);
            initial_gamma(
                (0..problem.n)
                    .map(|i| problem.free_input(i, k, s, c, gap, problem.cross_term(i, k, s, c, &cross[k])))
                    .collect(),
            )
        })
        .collect();
    let task_f = |k: usize, g: f64, r: f64, cross: &[Vec<f64>]| problem.task_f_with(k, g, r, mcfg, |i| cross[k][i]);
    let mut fk: Vec<f64> = (0..m).map(|k| task_f(k, gamma[k], rho[k], &cross)).collect();
    let mut f = aggregate(mcfg.sigma_kind, &fk);
    let mut history = vec![f];
    let rho_grid = lcfg.rho_grid();
    let mut converged = false;
    let mut iterations = 0;

    for pass in 1..=lcfg.max_outer_iters {
        iterations = pass;
        let prev_gamma = gamma.clone();
        let prev_rho = rho.clone();
        for &coord in &coords {
            if coord < m {
                let k = coord;
                let (lo, hi) = problem.free_span(k, rho[k], &cross[k]);
                let cands = gamma_grid(lo, hi, lcfg.gamma_grid_size);
                let scores: Vec<f64> = cands
                    .iter()
                    .map(|&g| {
                        let fnew = task_f(k, g, rho[k], &cross);
                        aggregate_by(mcfg.sigma_kind, m, |j| if j == k { fnew } else { fk[j] })
                    })
                    .collect();
                let (best, best_f) = pick(gamma[k], f, &cands, &scores);
                if best != gamma[k] {
                    gamma[k] = best;
                    fk[k] = task_f(k, best, rho[k], &cross);
                    f = best_f;
                }
            } else {
                let r = coord - m;
                let affected: Vec<usize> = if source {
                    (0..m).filter(|&k| k != r && problem.similarity.get(k, r) != 0.0).collect()
                } else {
                    Vec::new()
                };
                let (old_hi, old_lo) = (rho[r].sin(), -rho[r].cos());
                let col_r = &problem.positive[r];
                let eval = |v: f64, fk: &[f64]| -> Vec<(usize, f64)> {
                    let (dh, dl) = (v.sin() - old_hi, -v.cos() - old_lo);
                    let mut out = vec![(r, task_f(r, gamma[r], v, &cross))];
                    for &k in &affected {
                        let s = problem.similarity.get(k, r);
                        let fnew = problem.task_f_with(k, gamma[k], rho[k], mcfg, |i| {
                            cross[k][i] + s * if col_r[i] { dh } else { dl }
                        });
                        out.push((k, fnew));
                    }
                    let _ = fk;
                    out
                };
                let scores: Vec<f64> = rho_grid
                    .iter()
                    .map(|&v| {
                        let upd = eval(v, &fk);
                        aggregate_by(mcfg.sigma_kind, m, |j| {
                            upd.iter().find(|&&(t, _)| t == j).map_or(fk[j], |&(_, x)| x)
                        })
                    })
                    .collect();
                let (best, best_f) = pick(rho[r], f, &rho_grid, &scores);
                if best != rho[r] {
                    for (k, fnew) in eval(best, &fk) {
                        fk[k] = fnew;
                    }
                    let (dh, dl) = (best.sin() - old_hi, -best.cos() - old_lo);
                    for &k in &affected {
                        let s = problem.similarity.get(k, r);
                        for i in 0..problem.n {
                            cross[k][i] += s * if col_r[i] { dh } else { dl };
                        }
                    }
                    rho[r] = best;
                    f = best_f;
                }
            }
            history.push(f);
        }
        if source {
            cross = problem.source_cross_matrix(&rho);
        }
        let diff = gamma
            .iter()
            .zip(&prev_gamma)
            .chain(rho.iter().zip(&prev_rho))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if diff < lcfg.delta_norm_tol {
            converged = true;
            break;
        }
    }
    debug_assert!(rho.iter().all(|&r| r < FRAC_PI_2));
    Ok(LearnOutcome {
        gamma,
        rho,
        achieved_f: f,
        per_task_f: fk,
        iterations,
        converged,
        f_history: history,
    })
}

/// Number of neurons that flip in one sweep of the labeled sub-network started
/// from `L̄`. Zero means `L̄` is an equilibrium.
pub fn labeled_equilibrium_flips(problem: &LearningProblem, params: &ModelParams, seed: u64) -> Result<usize> {
    let net = Network::new(&problem.w_ll, &problem.similarity, params)?;
    let state = problem.labeled_state(params);
    let cfg = DynamicsConfig {
        seed,
        max_sweeps: 1,
        init_policy: Default::default(),
    };
    let trace = run_dynamics(&net, state, &cfg)?;
    Ok(trace.flips_per_sweep.first().copied().unwrap_or(0))
}
