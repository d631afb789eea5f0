//! Asynchronous dynamics of the multitask network.
//!
//! Each sweep visits every `(i, k)` neuron once in a fresh seeded permutation
//! and sets `x_ik = sin ρ_k` when `φ_ik > 0`, `-cos ρ_k` otherwise. Inputs are
//! maintained incrementally and rebuilt from scratch every
//! [`REFRESH_INTERVAL`] sweeps.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::SparseMatrix;
use crate::hopfield::{ClampField, ModelParams, Network, NetworkState, RegularizedCoefficients};
use crate::seeds;
use crate::tasks::TaskSimilarity;

pub const REFRESH_INTERVAL: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InitPolicy {
    /// Every unlabeled neuron starts at `-cos ρ_k`.
    #[default]
    AllNegative,
    /// Each neuron starts positive with probability `p_{k,+}`.
    LabelPriorRandom,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DynamicsConfig {
    /// Derived per run by the pipeline, so not part of configuration files.
    #[serde(skip)]
    pub seed: u64,
    pub max_sweeps: usize,
    pub init_policy: InitPolicy,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        Self::new(0)
    }
}

impl DynamicsConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            max_sweeps: 100,
            init_policy: InitPolicy::AllNegative,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_sweeps == 0 {
            return Err(Error::InvalidParameter("max_sweeps must be >= 1".into()));
        }
        Ok(())
    }
}

/// Result of one dynamics run.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsTrace {
    pub sweeps_run: usize,
    pub converged: bool,
    /// Energy of the initial state followed by the energy after each sweep.
    pub energy_per_sweep: Vec<f64>,
    pub flips_per_sweep: Vec<usize>,
    pub final_state: NetworkState,
    /// `φ_ik` at the final state, row-major `n × m`.
    pub final_inputs: Vec<f64>,
}

impl DynamicsTrace {
    pub fn final_input(&self, i: usize, k: usize) -> f64 {
        self.final_inputs[i * self.final_state.m() + k]
    }

    /// `sweep<TAB>energy<TAB>flips`, sweep 0 being the initial state.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "sweep\tenergy\tflips")?;
        for (s, e) in self.energy_per_sweep.iter().enumerate() {
            let flips = if s == 0 { 0 } else { self.flips_per_sweep[s - 1] };
            writeln!(out, "{s}\t{e}\t{flips}")?;
        }
        Ok(())
    }
}

/// One neuron visit, reported to observers of [`run_dynamics_observed`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateEvent {
    pub sweep: usize,
    pub node: usize,
    pub task: usize,
    pub input: f64,
    pub flipped: bool,
    /// Energy change implied by the flip, `-(x' - x) φ_ik` (0 without a flip).
    pub predicted_delta: f64,
}

struct Caches {
    field: Vec<f64>,
    cross: Vec<f64>,
    column: Vec<f64>,
}

impl Caches {
    fn build(net: &Network<'_>, state: &NetworkState) -> Self {
        let (n, m) = (net.n(), net.m());
        let mut field = vec![0.0; n * m];
        let mut cross = vec![0.0; n * m];
        for i in 0..n {
            for k in 0..m {
                field[i * m + k] = net.local_field(state, i, k);
                cross[i * m + k] = net.cross_field(state, i, k);
            }
        }
        let column = (0..m).map(|k| state.column_sum(k)).collect();
        Self { field, cross, column }
    }
}

/// φ for every neuron of `state`, computed from scratch.
pub fn fresh_inputs(net: &Network<'_>, state: &NetworkState) -> Vec<f64> {
    let (n, m) = (net.n(), net.m());
    let column: Vec<f64> = (0..m).map(|k| state.column_sum(k)).collect();
    let mut out = Vec::with_capacity(n * m);
    for i in 0..n {
        for k in 0..m {
            out.push(net.compose_input(
                i,
                k,
                net.local_field(state, i, k),
                column[k],
                state.value(i, k),
                net.cross_field(state, i, k),
            ));
        }
    }
    out
}

pub fn run_dynamics(net: &Network<'_>, initial: NetworkState, cfg: &DynamicsConfig) -> Result<DynamicsTrace> {
    run_dynamics_observed(net, initial, cfg, |_, _| {})
}

/// As [`run_dynamics`], calling `observer` after every neuron visit with the
/// updated state.
pub fn run_dynamics_observed<F>(net: &Network<'_>, initial: NetworkState, cfg: &DynamicsConfig, mut observer: F) -> Result<DynamicsTrace>
where
    F: FnMut(&UpdateEvent, &NetworkState),
{
    cfg.validate()?;
    net.check_state(&initial)?;
    let (n, m) = (net.n(), net.m());
    let mut state = initial;
    let mut energy = vec![net.energy(&state)];
    let mut flips_per_sweep = Vec::new();
    if n * m == 0 {
        return Ok(DynamicsTrace {
            sweeps_run: 0,
            converged: true,
            energy_per_sweep: energy,
            flips_per_sweep,
            final_inputs: Vec::new(),
            final_state: state,
        });
    }
    let sim = net.similarity();
    let weights = net.weights();
    let mut rng = seeds::rng(cfg.seed);
    let mut order: Vec<usize> = (0..n * m).collect();
    let mut caches = Caches::build(net, &state);
    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < cfg.max_sweeps {
        if sweeps > 0 && sweeps % REFRESH_INTERVAL == 0 {
            caches = Caches::build(net, &state);
        }
        sweeps += 1;
        order.shuffle(&mut rng);
        let mut flips = 0;
        for &idx in &order {
            let (i, k) = (idx / m, idx % m);
            let old = state.value(i, k);
            let phi = net.compose_input(i, k, caches.field[idx], caches.column[k], old, caches.cross[idx]);
            let up = phi > 0.0;
            let flipped = up != state.is_positive(i, k);
            let mut predicted_delta = 0.0;
            if flipped {
                state.set(i, k, up);
                let delta = state.value(i, k) - old;
                predicted_delta = -delta * phi;
                for &(j, w) in weights.row(i) {
                    caches.field[j * m + k] += w * delta;
                }
                caches.column[k] += delta;
                for r in 0..m {
                    if r != k {
                        caches.cross[i * m + r] += sim.get(r, k) * delta;
                    }
                }
                flips += 1;
            }
            observer(
                &UpdateEvent {
                    sweep: sweeps,
                    node: i,
                    task: k,
                    input: phi,
                    flipped,
                    predicted_delta,
                },
                &state,
            );
        }
        flips_per_sweep.push(flips);
        energy.push(net.energy(&state));
        if flips == 0 {
            converged = true;
            break;
        }
    }
    let final_inputs = fresh_inputs(net, &state);
    Ok(DynamicsTrace {
        sweeps_run: sweeps,
        converged,
        energy_per_sweep: energy,
        flips_per_sweep,
        final_state: state,
        final_inputs,
    })
}

/// Initial unlabeled state under `policy`; `p_plus` is used by the random prior.
pub fn initial_state(h: usize, params: &ModelParams, policy: InitPolicy, p_plus: &[f64], seed: u64) -> NetworkState {
    match policy {
        InitPolicy::AllNegative => NetworkState::all_negative(h, params),
        InitPolicy::LabelPriorRandom => {
            let mut rng = seeds::rng(seeds::derive_seed(seed, "init"));
            NetworkState::from_fn(h, params, |_, k| rng.gen::<f64>() < p_plus[k])
        }
    }
}

/// Inputs of the unlabeled restriction: `W_UU`, `W_UL`, the clamped labeled
/// state and the learned parameters.
#[derive(Debug, Clone, Copy)]
pub struct InferenceProblem<'a> {
    pub w_uu: &'a SparseMatrix,
    pub w_ul: &'a SparseMatrix,
    pub clamped: &'a NetworkState,
    pub similarity: &'a TaskSimilarity,
    pub params: &'a ModelParams,
    pub regularization: Option<&'a RegularizedCoefficients>,
    pub p_plus: &'a [f64],
}

/// Run the dynamics of the unlabeled restriction to a fixed point.
pub fn run_inference(problem: &InferenceProblem<'_>, cfg: &DynamicsConfig) -> Result<DynamicsTrace> {
    let clamp = ClampField::from_labeled(problem.w_ul, problem.clamped)?;
    let mut net = Network::new(problem.w_uu, problem.similarity, problem.params)?.with_clamp(&clamp)?;
    if let Some(reg) = problem.regularization {
        net = net.with_regularization(reg)?;
    }
    let init = initial_state(problem.w_uu.nrows(), problem.params, cfg.init_policy, problem.p_plus, cfg.seed);
    run_dynamics(&net, init, cfg)
}

/// Predicted `(U_{k,+}, U_{k,-})` per task, as local indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Bipartition {
    pub positives: Vec<Vec<usize>>,
    pub negatives: Vec<Vec<usize>>,
    pub warning: Option<String>,
}

/// Split neurons by final state. A non-converged trace is rejected unless
/// `allow_unconverged`, in which case a warning is attached.
pub fn bipartition(trace: &DynamicsTrace, allow_unconverged: bool) -> Result<Bipartition> {
    let warning = if trace.converged {
        None
    } else if allow_unconverged {
        Some(format!("dynamics stopped after {} sweeps without reaching a fixed point", trace.sweeps_run))
    } else {
        return Err(Error::NonConvergence(format!("no fixed point after {} sweeps", trace.sweeps_run)));
    };
    let st = &trace.final_state;
    let mut positives = vec![Vec::new(); st.m()];
    let mut negatives = vec![Vec::new(); st.m()];
    for i in 0..st.n() {
        for k in 0..st.m() {
            if st.is_positive(i, k) {
                positives[k].push(i);
            } else {
                negatives[k].push(i);
            }
        }
    }
    Ok(Bipartition {
        positives,
        negatives,
        warning,
    })
}
