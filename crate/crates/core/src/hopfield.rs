//! Model parameters, network states, neuron inputs and energies of the
//! multitask Hopfield network.
//!
//! A network over `n` neurons per task and `m` tasks holds the state matrix
//! `X` with `x_ik ∈ {sin ρ_k, -cos ρ_k}`. Its energy is evaluated in row-sum
//! form:
//!
//! ```text
//! E(X) = Σ_k [ -½ x_kᵀ W x_k + Σ_i x_ik (γ_k - c_ik)
//!              + α/2 (S_k Σ_i x_ik² - Σ_{r≠k} s_kr Σ_i x_ik x_ir) ]
//! ```
//!
//! where `c_ik` is the field of clamped labeled neighbors (zero on the full
//! network). With dynamics regularization every task additionally carries a
//! dense off-diagonal weight shift `-2η_k a_k²` and a threshold shift. The
//! state-independent constants of the regularizer are never added.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use crate::error::{Error, Result};
use crate::graph::SparseMatrix;
use crate::tasks::TaskSimilarity;

/// Distance kept from `π/2` by every angle fed to the regularizer.
pub const RHO_GUARD: f64 = 1e-6;

/// Smallest admissible angle.
pub const RHO_MIN: f64 = FRAC_PI_4;

/// Largest angle used in practice, `π/2 - 1e-6`.
pub fn rho_max() -> f64 {
    FRAC_PI_2 - RHO_GUARD
}

/// Per-task `(γ_k, ρ_k)` plus the hyper-parameters `α`, `β`, `τ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub gamma: Vec<f64>,
    pub rho: Vec<f64>,
    pub alpha: f64,
    pub beta: f64,
    pub tau: f64,
}

impl ModelParams {
    pub fn new(gamma: Vec<f64>, rho: Vec<f64>, alpha: f64, beta: f64, tau: f64) -> Result<Self> {
        let p = Self {
            gamma,
            rho,
            alpha,
            beta,
            tau,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.gamma.len() != self.rho.len() {
            return Err(Error::InvalidParameter("gamma and rho lengths differ".into()));
        }
        for (k, &r) in self.rho.iter().enumerate() {
            if !(RHO_MIN..FRAC_PI_2).contains(&r) {
                return Err(Error::InvalidParameter(format!("rho[{k}] = {r} outside [pi/4, pi/2)")));
            }
        }
        if self.gamma.iter().any(|g| !g.is_finite()) {
            return Err(Error::InvalidParameter("gamma must be finite".into()));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!("alpha = {} must be >= 0", self.alpha)));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidParameter(format!("beta = {} must be >= 0", self.beta)));
        }
        if !(self.tau > 0.0) {
            return Err(Error::InvalidParameter(format!("tau = {} must be > 0", self.tau)));
        }
        Ok(())
    }

    pub fn m(&self) -> usize {
        self.rho.len()
    }

    /// Positive activation `sin ρ_k`.
    #[inline]
    pub fn hi(&self, k: usize) -> f64 {
        self.rho[k].sin()
    }

    /// Negative activation `-cos ρ_k`.
    #[inline]
    pub fn lo(&self, k: usize) -> f64 {
        -self.rho[k].cos()
    }

    /// `sin ρ_k - cos ρ_k`, see [`activation_gap`].
    #[inline]
    pub fn gap(&self, k: usize) -> f64 {
        activation_gap(self.rho[k])
    }
}

/// `sin ρ - cos ρ` evaluated as `√2 sin(ρ - π/4)`, exactly 0 at `ρ = π/4`.
#[inline]
pub fn activation_gap(rho: f64) -> f64 {
    std::f64::consts::SQRT_2 * (rho - FRAC_PI_4).sin()
}

/// Bipolar `n × m` state. Entries are stored as positive/negative flags, so
/// every value is exactly one of the two task activations.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkState {
    n: usize,
    m: usize,
    positive: Vec<bool>,
    hi: Vec<f64>,
    lo: Vec<f64>,
}

impl NetworkState {
    pub fn all_negative(n: usize, params: &ModelParams) -> Self {
        Self::from_fn(n, params, |_, _| false)
    }

    pub fn from_fn(n: usize, params: &ModelParams, mut positive: impl FnMut(usize, usize) -> bool) -> Self {
        let m = params.m();
        let mut flags = Vec::with_capacity(n * m);
        for i in 0..n {
            for k in 0..m {
                flags.push(positive(i, k));
            }
        }
        Self {
            n,
            m,
            positive: flags,
            hi: (0..m).map(|k| params.hi(k)).collect(),
            lo: (0..m).map(|k| params.lo(k)).collect(),
        }
    }

    /// Accepts a row-major value matrix whose entries must equal one of the
    /// two activations of their task bit-for-bit.
    pub fn from_values(values: &[Vec<f64>], params: &ModelParams) -> Result<Self> {
        let n = values.len();
        let mut err = None;
        let st = Self::from_fn(n, params, |i, k| {
            let v = values[i].get(k).copied().unwrap_or(f64::NAN);
            if v == params.hi(k) {
                true
            } else {
                if v != params.lo(k) {
                    err = Some(format!("x[{i}][{k}] = {v} is not an activation value"));
                }
                false
            }
        });
        match err {
            Some(e) => Err(Error::InvalidState(e)),
            None => Ok(st),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn is_positive(&self, i: usize, k: usize) -> bool {
        self.positive[i * self.m + k]
    }

    #[inline]
    pub fn value(&self, i: usize, k: usize) -> f64 {
        if self.positive[i * self.m + k] {
            self.hi[k]
        } else {
            self.lo[k]
        }
    }

    #[inline]
    pub fn set(&mut self, i: usize, k: usize, positive: bool) {
        self.positive[i * self.m + k] = positive;
    }

    pub fn hi(&self, k: usize) -> f64 {
        self.hi[k]
    }

    pub fn lo(&self, k: usize) -> f64 {
        self.lo[k]
    }

    pub fn positive_count(&self, k: usize) -> usize {
        (0..self.n).filter(|&i| self.is_positive(i, k)).count()
    }

    /// Σ_i x_ik, in node order.
    pub fn column_sum(&self, k: usize) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            s += self.value(i, k);
        }
        s
    }

    pub fn values(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| (0..self.m).map(|k| self.value(i, k)).collect()).collect()
    }

    /// Rows `rows` of this state, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> NetworkState {
        let mut positive = Vec::with_capacity(rows.len() * self.m);
        for &i in rows {
            positive.extend_from_slice(&self.positive[i * self.m..(i + 1) * self.m]);
        }
        NetworkState {
            n: rows.len(),
            m: self.m,
            positive,
            hi: self.hi.clone(),
            lo: self.lo.clone(),
        }
    }

    fn check_params(&self, params: &ModelParams) -> Result<()> {
        if self.m != params.m() {
            return Err(Error::InvalidState(format!("state has {} tasks, params {}", self.m, params.m())));
        }
        for k in 0..self.m {
            if self.hi[k] != params.hi(k) || self.lo[k] != params.lo(k) {
                return Err(Error::InvalidState(format!("task {k} activations do not match rho")));
            }
        }
        Ok(())
    }
}

/// Constants of the cardinality regularizer, one entry per task.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularizedCoefficients {
    pub eta: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    /// `2 η_k a_k²`, subtracted from every off-diagonal weight of task `k`.
    pub weight_shift: Vec<f64>,
    /// `η_k a_k [2 b_k (h-1) + (1 - 2 p_k h)]`, added to the thresholds.
    pub threshold_shift: Vec<f64>,
    /// Target positive counts `h p_{k,+}` (kept for reporting and oracles).
    pub target: Vec<f64>,
}

impl RegularizedCoefficients {
    /// Coefficients equivalent to no regularization.
    pub fn disabled(m: usize) -> Self {
        Self {
            eta: vec![0.0; m],
            a: vec![0.0; m],
            b: vec![0.0; m],
            weight_shift: vec![0.0; m],
            threshold_shift: vec![0.0; m],
            target: vec![0.0; m],
        }
    }

    pub fn is_active(&self) -> bool {
        self.eta.iter().any(|&e| e != 0.0)
    }
}

/// Build the regularizer for learned angles `rho_hat`, training positive rates
/// `p_plus` and `h` unlabeled neurons, with `η_k = β |tan(2(ρ̂_k - π/4))|`.
///
/// Angles closer than `1e-6` to `π/2` are pulled back to `π/2 - 1e-6`; each
/// such clamp produces a warning.
pub fn regularization_coefficients(
    beta: f64,
    rho_hat: &[f64],
    p_plus: &[f64],
    h: usize,
) -> Result<(RegularizedCoefficients, Vec<String>)> {
    if rho_hat.len() != p_plus.len() {
        return Err(Error::InvalidParameter("rho_hat and p_plus lengths differ".into()));
    }
    if !(beta >= 0.0) {
        return Err(Error::InvalidParameter(format!("beta = {beta} must be >= 0")));
    }
    let m = rho_hat.len();
    let mut reg = RegularizedCoefficients::disabled(m);
    let mut warnings = Vec::new();
    let hf = h as f64;
    for k in 0..m {
        let mut r = rho_hat[k];
        if !(RHO_MIN..FRAC_PI_2).contains(&r) {
            return Err(Error::InvalidParameter(format!("rho_hat[{k}] = {r} outside [pi/4, pi/2)")));
        }
        if r > rho_max() {
            warnings.push(format!("rho_hat[{k}] = {r} clamped to pi/2 - 1e-6"));
            r = rho_max();
        }
        let (s, c) = r.sin_cos();
        let eta = beta * (2.0 * (r - FRAC_PI_4)).tan().abs();
        let a = 1.0 / (s + c);
        let b = c / (s + c);
        reg.eta[k] = eta;
        reg.a[k] = a;
        reg.b[k] = b;
        reg.weight_shift[k] = 2.0 * eta * a * a;
        reg.threshold_shift[k] = eta * a * (2.0 * b * (hf - 1.0) + (1.0 - 2.0 * p_plus[k] * hf));
        reg.target[k] = hf * p_plus[k];
    }
    Ok((reg, warnings))
}

/// Field of clamped labeled neurons on the unlabeled ones: `(W_UL l̄_k)_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClampField {
    n: usize,
    m: usize,
    values: Vec<f64>,
}

impl ClampField {
    pub fn from_labeled(w_ul: &SparseMatrix, labeled: &NetworkState) -> Result<Self> {
        if w_ul.ncols() != labeled.n() {
            return Err(Error::InvalidParameter(format!(
                "W_UL has {} columns but the labeled state has {} rows",
                w_ul.ncols(),
                labeled.n()
            )));
        }
        let (n, m) = (w_ul.nrows(), labeled.m());
        let mut values = vec![0.0; n * m];
        for i in 0..n {
            for k in 0..m {
                let mut acc = 0.0;
                for &(j, w) in w_ul.row(i) {
                    acc += w * labeled.value(j, k);
                }
                values[i * m + k] = acc;
            }
        }
        Ok(Self { n, m, values })
    }

    pub fn zeros(n: usize, m: usize) -> Self {
        Self {
            n,
            m,
            values: vec![0.0; n * m],
        }
    }

    #[inline]
    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.values[i * self.m + k]
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

/// A multitask Hopfield network: weights, task similarity, parameters and the
/// optional clamped field and regularizer of the unlabeled restriction.
#[derive(Debug, Clone, Copy)]
pub struct Network<'a> {
    weights: &'a SparseMatrix,
    similarity: &'a TaskSimilarity,
    params: &'a ModelParams,
    clamp: Option<&'a ClampField>,
    reg: Option<&'a RegularizedCoefficients>,
}

impl<'a> Network<'a> {
    pub fn new(weights: &'a SparseMatrix, similarity: &'a TaskSimilarity, params: &'a ModelParams) -> Result<Self> {
        if weights.nrows() != weights.ncols() {
            return Err(Error::InvalidParameter("weight matrix must be square".into()));
        }
        if similarity.m() != params.m() {
            return Err(Error::InvalidParameter(format!(
                "similarity has {} tasks, params {}",
                similarity.m(),
                params.m()
            )));
        }
        params.validate()?;
        Ok(Self {
            weights,
            similarity,
            params,
            clamp: None,
            reg: None,
        })
    }

    pub fn with_clamp(mut self, clamp: &'a ClampField) -> Result<Self> {
        if clamp.n != self.n() || clamp.m != self.m() {
            return Err(Error::InvalidParameter("clamp field shape mismatch".into()));
        }
        self.clamp = Some(clamp);
        Ok(self)
    }

    pub fn with_regularization(mut self, reg: &'a RegularizedCoefficients) -> Result<Self> {
        if reg.eta.len() != self.m() {
            return Err(Error::InvalidParameter("regularizer task count mismatch".into()));
        }
        self.reg = Some(reg);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.weights.nrows()
    }

    pub fn m(&self) -> usize {
        self.params.m()
    }

    pub fn weights(&self) -> &'a SparseMatrix {
        self.weights
    }

    pub fn similarity(&self) -> &'a TaskSimilarity {
        self.similarity
    }

    pub fn params(&self) -> &'a ModelParams {
        self.params
    }

    pub fn regularization(&self) -> Option<&'a RegularizedCoefficients> {
        self.reg
    }

    pub fn check_state(&self, state: &NetworkState) -> Result<()> {
        if state.n() != self.n() {
            return Err(Error::InvalidState(format!("state has {} rows, network {}", state.n(), self.n())));
        }
        state.check_params(self.params)
    }

    /// Dense weight shift of task `k` (0 without regularization).
    #[inline]
    pub fn weight_shift(&self, k: usize) -> f64 {
        self.reg.map_or(0.0, |r| r.weight_shift[k])
    }

    #[inline]
    pub fn external(&self, i: usize, k: usize) -> f64 {
        self.clamp.map_or(0.0, |c| c.get(i, k))
    }

    /// Activation threshold `θ_k = γ_k + (α S_k / 2)(sin ρ_k - cos ρ_k)`, plus
    /// the regularizer's threshold shift when present. The clamped field is
    /// kept separate (see [`Network::external`]).
    #[inline]
    pub fn threshold(&self, k: usize) -> f64 {
        let p = self.params;
        let mut t = p.gamma[k] + (p.alpha * self.similarity.row_sum(k) / 2.0) * p.gap(k);
        if let Some(reg) = self.reg {
            t += reg.threshold_shift[k];
        }
        t
    }

    /// Coefficient of `Σ_i x_ik` in the energy: `γ_k` plus the regularizer shift.
    fn linear_coefficient(&self, k: usize) -> f64 {
        let mut t = self.params.gamma[k];
        if let Some(reg) = self.reg {
            t += reg.threshold_shift[k];
        }
        t
    }

    /// `A_ik = Σ_j w_ij x_jk`.
    #[inline]
    pub fn local_field(&self, state: &NetworkState, i: usize, k: usize) -> f64 {
        let mut acc = 0.0;
        for &(j, w) in self.weights.row(i) {
            acc += w * state.value(j, k);
        }
        acc
    }

    /// `B_ik = Σ_{r≠k} s_kr x_ir`.
    #[inline]
    pub fn cross_field(&self, state: &NetworkState, i: usize, k: usize) -> f64 {
        let mut acc = 0.0;
        for r in 0..self.m() {
            if r != k {
                acc += self.similarity.get(k, r) * state.value(i, r);
            }
        }
        acc
    }

    /// Neuron input from its parts. Shared by the dynamics caches so that the
    /// cached and recomputed inputs use identical arithmetic.
    #[inline]
    pub fn compose_input(&self, i: usize, k: usize, field: f64, column_sum: f64, own: f64, cross: f64) -> f64 {
        let mut phi = field;
        if let Some(reg) = self.reg {
            phi -= reg.weight_shift[k] * (column_sum - own);
        }
        if let Some(c) = self.clamp {
            phi += c.get(i, k);
        }
        phi -= self.threshold(k);
        if self.params.alpha != 0.0 {
            phi += self.params.alpha * cross;
        }
        phi
    }

    /// `φ_ik = A_ik - θ_ik + α B_ik` (with clamped field and regularizer when set).
    pub fn neuron_input(&self, state: &NetworkState, i: usize, k: usize) -> f64 {
        let col = if self.reg.is_some() { state.column_sum(k) } else { 0.0 };
        self.compose_input(
            i,
            k,
            self.local_field(state, i, k),
            col,
            state.value(i, k),
            self.cross_field(state, i, k),
        )
    }

    /// α-term `(α/2) Σ_k (S_k Σ_i x_ik² - Σ_{r≠k} s_kr Σ_i x_ik x_ir)`.
    pub fn multitask_penalty(&self, state: &NetworkState) -> f64 {
        let (n, m) = (self.n(), self.m());
        let mut total = 0.0;
        for k in 0..m {
            let mut sq = 0.0;
            let mut cross = 0.0;
            for i in 0..n {
                let x = state.value(i, k);
                sq += x * x;
                for r in 0..m {
                    if r != k {
                        cross += self.similarity.get(k, r) * x * state.value(i, r);
                    }
                }
            }
            total += self.similarity.row_sum(k) * sq - cross;
        }
        self.params.alpha / 2.0 * total
    }

    /// Energy in row-sum form.
    pub fn energy(&self, state: &NetworkState) -> f64 {
        let (n, m) = (self.n(), self.m());
        let mut e = 0.0;
        for k in 0..m {
            let lin = self.linear_coefficient(k);
            let mut quad = 0.0;
            let mut linear = 0.0;
            let mut sum = 0.0;
            let mut sq = 0.0;
            for i in 0..n {
                let x = state.value(i, k);
                quad += x * self.local_field(state, i, k);
                linear += x * (lin - self.external(i, k));
                sum += x;
                sq += x * x;
            }
            e += -0.5 * quad + linear;
            let ws = self.weight_shift(k);
            if ws != 0.0 {
                e += 0.5 * ws * (sum * sum - sq);
            }
        }
        e + self.multitask_penalty(state)
    }
}

/// `φ_ik` on the full network.
pub fn neuron_input(
    state: &NetworkState,
    weights: &SparseMatrix,
    similarity: &TaskSimilarity,
    params: &ModelParams,
    i: usize,
    k: usize,
) -> Result<f64> {
    let net = Network::new(weights, similarity, params)?;
    net.check_state(state)?;
    Ok(net.neuron_input(state, i, k))
}

/// Energy of the full network.
pub fn multitask_energy(state: &NetworkState, weights: &SparseMatrix, similarity: &TaskSimilarity, params: &ModelParams) -> Result<f64> {
    let net = Network::new(weights, similarity, params)?;
    net.check_state(state)?;
    Ok(net.energy(state))
}

/// Energy of the labeled restriction (same form over `W_LL`).
pub fn labeled_energy(labeled_state: &NetworkState, w_ll: &SparseMatrix, similarity: &TaskSimilarity, params: &ModelParams) -> Result<f64> {
    multitask_energy(labeled_state, w_ll, similarity, params)
}

/// Energy of the unlabeled restriction with the labeled neurons clamped to
/// `clamped`, optionally regularized.
#[allow(clippy::too_many_arguments)]
pub fn unlabeled_energy(
    unlabeled_state: &NetworkState,
    w_uu: &SparseMatrix,
    w_ul: &SparseMatrix,
    clamped: &NetworkState,
    similarity: &TaskSimilarity,
    params: &ModelParams,
    reg: Option<&RegularizedCoefficients>,
) -> Result<f64> {
    let clamp = ClampField::from_labeled(w_ul, clamped)?;
    let mut net = Network::new(w_uu, similarity, params)?.with_clamp(&clamp)?;
    if let Some(r) = reg {
        net = net.with_regularization(r)?;
    }
    net.check_state(unlabeled_state)?;
    Ok(net.energy(unlabeled_state))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn params(gamma: &[f64], rho: &[f64], alpha: f64) -> ModelParams {
        ModelParams::new(gamma.to_vec(), rho.to_vec(), alpha, 0.0, 1.0).unwrap()
    }

    #[test]
    fn isolated_node_input_is_minus_gamma() {
        let w = SparseMatrix::empty(1, 1);
        let s = TaskSimilarity::zeros(1);
        let p = params(&[1.0], &[PI / 3.0], 0.0);
        let st = NetworkState::all_negative(1, &p);
        assert_eq!(neuron_input(&st, &w, &s, &p, 0, 0).unwrap(), -1.0);
    }

    #[test]
    fn threshold_examples() {
        let w = SparseMatrix::empty(1, 1);
        let s = TaskSimilarity::from_matrix(&[vec![0.0, 0.75, 0.75], vec![0.75, 0.0, 0.0], vec![0.75, 0.0, 0.0]]).unwrap();
        let p = params(&[1.0, 0.3, -0.2], &[PI / 3.0, PI / 4.0, PI / 4.0], 2.0);
        let net = Network::new(&w, &s, &p).unwrap();
        assert!((-net.threshold(0) - -1.54904).abs() < 1e-5);
        // at ρ = π/4 the multitask correction vanishes
        assert_eq!(net.threshold(1), 0.3);
        assert_eq!(net.threshold(2), -0.2);
    }

    #[test]
    fn energy_examples() {
        let s = TaskSimilarity::from_matrix(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let w = SparseMatrix::empty(1, 1);
        let p = params(&[0.0, 0.0], &[PI / 4.0, PI / 4.0], 2.0);
        let aligned = NetworkState::from_fn(1, &p, |_, _| true);
        assert!(multitask_energy(&aligned, &w, &s, &p).unwrap().abs() < 1e-15);
        let opposite = NetworkState::from_fn(1, &p, |_, k| k == 0);
        assert!((multitask_energy(&opposite, &w, &s, &p).unwrap() - 2.0).abs() < 1e-12);

        let w = SparseMatrix::from_dense(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let p1 = params(&[0.0], &[PI / 4.0], 0.0);
        let up = NetworkState::from_fn(2, &p1, |_, _| true);
        assert!((multitask_energy(&up, &w, &TaskSimilarity::zeros(1), &p1).unwrap() + 0.5).abs() < 1e-12);
    }

    #[test]
    fn alpha_zero_energy_is_sum_of_singletask_energies() {
        let w = SparseMatrix::from_dense(&[vec![0.0, 0.5, 0.0], vec![0.5, 0.0, 2.0], vec![0.0, 2.0, 0.0]]);
        let s = TaskSimilarity::from_matrix(&[vec![0.0, 0.4], vec![0.4, 0.0]]).unwrap();
        let p = params(&[0.3, -0.1], &[1.0, 1.3], 0.0);
        let st = NetworkState::from_fn(3, &p, |i, k| (i + k) % 2 == 0);
        let e = multitask_energy(&st, &w, &s, &p).unwrap();
        let mut expect = 0.0;
        let dense = w.to_dense();
        for k in 0..2 {
            for i in 0..3 {
                for j in 0..3 {
                    if i != j {
                        expect -= 0.5 * dense[i][j] * st.value(i, k) * st.value(j, k);
                    }
                }
                expect += p.gamma[k] * st.value(i, k);
            }
        }
        assert!((e - expect).abs() < 1e-12);
    }

    #[test]
    fn labeled_energy_degenerate_cases() {
        let s = TaskSimilarity::zeros(2);
        let p = params(&[0.0, 0.0], &[1.0, 1.2], 0.0);
        let w = SparseMatrix::empty(1, 1);
        let st = NetworkState::from_fn(1, &p, |_, k| k == 0);
        assert_eq!(labeled_energy(&st, &w, &s, &p).unwrap(), 0.0);
    }

    #[test]
    fn unlabeled_energy_reduces_without_labels_or_regularization() {
        let w_uu = SparseMatrix::from_dense(&[vec![0.0, 1.5], vec![1.5, 0.0]]);
        let w_ul = SparseMatrix::empty(2, 0);
        let s = TaskSimilarity::zeros(1);
        let p = params(&[0.2], &[1.1], 0.0);
        let u = NetworkState::from_fn(2, &p, |i, _| i == 0);
        let l = NetworkState::from_fn(0, &p, |_, _| false);
        let e = unlabeled_energy(&u, &w_uu, &w_ul, &l, &s, &p, None).unwrap();
        let direct = -1.5 * u.value(0, 0) * u.value(1, 0) + 0.2 * (u.value(0, 0) + u.value(1, 0));
        assert!((e - direct).abs() < 1e-12);
        let (zero_reg, _) = regularization_coefficients(0.0, &[1.1], &[0.1], 2).unwrap();
        let e2 = unlabeled_energy(&u, &w_uu, &w_ul, &l, &s, &p, Some(&zero_reg)).unwrap();
        assert!((e - e2).abs() < 1e-15);
    }

    #[test]
    fn regularization_examples() {
        let (r, w) = regularization_coefficients(1.0, &[PI / 4.0], &[0.1], 10).unwrap();
        assert_eq!(r.eta[0], 0.0);
        assert!(w.is_empty());
        let (r, _) = regularization_coefficients(1.0, &[PI / 3.0], &[0.1], 10).unwrap();
        assert!((r.eta[0] - 0.57735).abs() < 1e-5);
        assert!((r.a[0] - 0.73205).abs() < 1e-5);
        assert!((r.b[0] - 0.36603).abs() < 1e-5);
        assert!((r.a[0] * (PI / 3.0).sin() + r.b[0] - 1.0).abs() < 1e-12);
        let (r, w) = regularization_coefficients(1.0, &[PI / 2.0 - 1e-9], &[0.1], 10).unwrap();
        assert_eq!(w.len(), 1);
        assert!(r.eta[0].is_finite());
        assert!(regularization_coefficients(1.0, &[0.5], &[0.1], 10).is_err());
    }

    #[test]
    fn rejects_invalid_params() {
        assert!(ModelParams::new(vec![0.0], vec![0.5], 0.0, 0.0, 1.0).is_err());
        assert!(ModelParams::new(vec![0.0], vec![PI / 2.0], 0.0, 0.0, 1.0).is_err());
        assert!(ModelParams::new(vec![0.0], vec![1.0], -1.0, 0.0, 1.0).is_err());
        assert!(ModelParams::new(vec![0.0], vec![1.0], 0.0, 0.0, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn indicator_identities(rho in RHO_MIN..rho_max(), beta in 0.0f64..5.0, p in 0.0f64..1.0, h in 1usize..50) {
            let (r, _) = regularization_coefficients(beta, &[rho], &[p], h).unwrap();
            prop_assert!((r.a[0] * rho.sin() + r.b[0] - 1.0).abs() < 1e-12);
            prop_assert!((r.a[0] * -rho.cos() + r.b[0]).abs() < 1e-12);
        }

        #[test]
        fn threshold_equals_gamma_at_quarter_pi(gamma in -5.0f64..5.0, alpha in 0.0f64..10.0, s12 in 0.0f64..1.0) {
            let s = TaskSimilarity::from_matrix(&[vec![0.0, s12], vec![s12, 0.0]]).unwrap();
            let p = params(&[gamma, 0.0], &[FRAC_PI_4, 1.2], alpha);
            let w = SparseMatrix::empty(1, 1);
            let net = Network::new(&w, &s, &p).unwrap();
            prop_assert_eq!(net.threshold(0), gamma);
        }

        #[test]
        fn positive_count_from_indicator_map(rho in RHO_MIN..rho_max(), flags in proptest::collection::vec(any::<bool>(), 1..30)) {
            let p = params(&[0.0], &[rho], 0.0);
            let st = NetworkState::from_fn(flags.len(), &p, |i, _| flags[i]);
            let (r, _) = regularization_coefficients(1.0, &[rho], &[0.1], flags.len()).unwrap();
            let count: f64 = (0..flags.len()).map(|i| r.a[0] * st.value(i, 0) + r.b[0]).sum();
            prop_assert!((count - st.positive_count(0) as f64).abs() < 1e-9);
            prop_assert!((count - count.round()).abs() < 1e-9);
        }
    }
}
