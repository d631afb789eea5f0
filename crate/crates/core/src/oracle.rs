//! Brute-force reference implementations for testing.
//!
//! Nothing here shares arithmetic with the production kernels. Weights are
//! dense, the multitask term uses pairwise column distances
//! `(α/4) Σ_k Σ_{r≠k} s_kr ‖x_k - x_r‖²`, and the regularizer is the
//! unexpanded squared deviation `η_k (Σ_i (a_k x_ik + b_k) - h p_k)²`.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Largest `n·m` accepted by [`enumerate_states`].
pub const ENUMERATION_BOUND: usize = 20;

/// Minimum-set tolerance.
pub const ENERGY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleRegularizer {
    pub eta: Vec<f64>,
    pub p_plus: Vec<f64>,
}

/// A small network held densely.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleInstance {
    pub w: Vec<Vec<f64>>,
    pub s: Vec<Vec<f64>>,
    pub gamma: Vec<f64>,
    pub rho: Vec<f64>,
    pub alpha: f64,
    /// Clamped field `(W_UL l̄)_ik`, subtracted from the thresholds.
    pub external: Option<Vec<Vec<f64>>>,
    pub regularizer: Option<OracleRegularizer>,
}

impl OracleInstance {
    pub fn new(w: Vec<Vec<f64>>, s: Vec<Vec<f64>>, gamma: Vec<f64>, rho: Vec<f64>, alpha: f64) -> Self {
        Self {
            w,
            s,
            gamma,
            rho,
            alpha,
            external: None,
            regularizer: None,
        }
    }

    pub fn n(&self) -> usize {
        self.w.len()
    }

    pub fn m(&self) -> usize {
        self.rho.len()
    }

    /// State whose bit `i·m + k` of `mask` marks neuron `ik` positive.
    pub fn state(&self, mask: u64) -> Vec<Vec<f64>> {
        let m = self.m();
        (0..self.n())
            .map(|i| {
                (0..m)
                    .map(|k| {
                        if mask >> (i * m + k) & 1 == 1 {
                            self.rho[k].sin()
                        } else {
                            -self.rho[k].cos()
                        }
                    })
                    .collect()
            })
            .collect()
    }

    /// `(α/4) Σ_k Σ_{r≠k} s_kr ‖x_k - x_r‖²`.
    pub fn distance_penalty(&self, x: &[Vec<f64>]) -> f64 {
        let m = self.m();
        let mut total = 0.0;
        for k in 0..m {
            for r in 0..m {
                if r == k {
                    continue;
                }
                let d: f64 = x.iter().map(|row| (row[k] - row[r]) * (row[k] - row[r])).sum();
                total += self.s[k][r] * d;
            }
        }
        self.alpha / 4.0 * total
    }

    /// Energy in pairwise-distance form, plus the direct regularizer.
    pub fn energy(&self, x: &[Vec<f64>]) -> f64 {
        let (n, m) = (self.n(), self.m());
        let mut e = 0.0;
        for k in 0..m {
            let mut quad = 0.0;
            for i in 0..n {
                for j in 0..n {
                    quad += self.w[i][j] * x[i][k] * x[j][k];
                }
            }
            let mut lin = 0.0;
            for (i, row) in x.iter().enumerate() {
                let ext = self.external.as_ref().map_or(0.0, |ex| ex[i][k]);
                lin += row[k] * (self.gamma[k] - ext);
            }
            e += -0.5 * quad + lin;
            if let Some(reg) = &self.regularizer {
                let (s, c) = (self.rho[k].sin(), self.rho[k].cos());
                let a = 1.0 / (s + c);
                let b = c / (s + c);
                let count: f64 = x.iter().map(|row| a * row[k] + b).sum();
                let dev = count - n as f64 * reg.p_plus[k];
                e += reg.eta[k] * dev * dev;
            }
        }
        e + self.distance_penalty(x)
    }

    pub fn energy_of_mask(&self, mask: u64) -> f64 {
        self.energy(&self.state(mask))
    }
}

/// All states of an instance, ranked by energy.
#[derive(Debug, Clone, PartialEq)]
pub struct ExhaustiveResult {
    pub energies: Vec<f64>,
    pub global_min_energy: f64,
    /// Masks within [`ENERGY_TOL`] of the minimum, ascending.
    pub global_minimizers: Vec<u64>,
    /// Masks no single flip improves by more than [`ENERGY_TOL`], ascending.
    pub local_minima: Vec<u64>,
}

impl ExhaustiveResult {
    pub fn is_local_minimum(&self, mask: u64) -> bool {
        self.local_minima.binary_search(&mask).is_ok()
    }
}

/// Evaluate every one of the `2^(n·m)` states.
pub fn enumerate_states(inst: &OracleInstance) -> Result<ExhaustiveResult> {
    let bits = inst.n() * inst.m();
    if bits > ENUMERATION_BOUND {
        return Err(Error::EnumerationBound(bits));
    }
    let total = 1u64 << bits;
    let energies: Vec<f64> = (0..total).into_par_iter().map(|mask| inst.energy_of_mask(mask)).collect();
    let global_min_energy = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let global_minimizers = (0..total).filter(|&s| energies[s as usize] <= global_min_energy + ENERGY_TOL).collect();
    let local_minima = (0..total)
        .into_par_iter()
        .filter(|&s| (0..bits).all(|b| energies[(s ^ (1 << b)) as usize] >= energies[s as usize] - ENERGY_TOL))
        .collect();
    Ok(ExhaustiveResult {
        energies,
        global_min_energy,
        global_minimizers,
        local_minima,
    })
}

/// True when no single flip of `x` lowers the energy by more than `ENERGY_TOL`.
pub fn is_flip_stable(inst: &OracleInstance, x: &[Vec<f64>]) -> bool {
    let e = inst.energy(x);
    let mut y = x.to_vec();
    for i in 0..inst.n() {
        for k in 0..inst.m() {
            let (hi, lo) = (inst.rho[k].sin(), -inst.rho[k].cos());
            let old = y[i][k];
            y[i][k] = if old == hi { lo } else { hi };
            let worse = inst.energy(&y) < e - ENERGY_TOL;
            y[i][k] = old;
            if worse {
                return false;
            }
        }
    }
    true
}

/// The unlabeled sub-instance with `L` clamped to `labeled_state` (rows of
/// `labeled`, in order).
pub fn clamp_instance(inst: &OracleInstance, labeled: &[usize], labeled_state: &[Vec<f64>]) -> OracleInstance {
    let unl: Vec<usize> = (0..inst.n()).filter(|i| !labeled.contains(i)).collect();
    let w = unl.iter().map(|&i| unl.iter().map(|&j| inst.w[i][j]).collect()).collect();
    let external = unl
        .iter()
        .map(|&i| {
            (0..inst.m())
                .map(|k| labeled.iter().zip(labeled_state).map(|(&j, row)| inst.w[i][j] * row[k]).sum())
                .collect()
        })
        .collect();
    OracleInstance {
        w,
        s: inst.s.clone(),
        gamma: inst.gamma.clone(),
        rho: inst.rho.clone(),
        alpha: inst.alpha,
        external: Some(external),
        regularizer: None,
    }
}

/// For every global minimizer `(L*, U*)` of the full network, every global
/// minimizer of the network restricted to `U` with `L*` clamped, composed with
/// `L*`, is again a global minimizer of the full network.
pub fn check_clamped_minimizers(inst: &OracleInstance, labeled: &[usize]) -> Result<bool> {
    let n = inst.n();
    let unl: Vec<usize> = (0..n).filter(|i| !labeled.contains(i)).collect();
    if unl.is_empty() {
        return Ok(true);
    }
    let full = enumerate_states(inst)?;
    for &g in &full.global_minimizers {
        let x = inst.state(g);
        let l_star: Vec<Vec<f64>> = labeled.iter().map(|&i| x[i].clone()).collect();
        let sub = clamp_instance(inst, labeled, &l_star);
        let res = enumerate_states(&sub)?;
        for &u in &res.global_minimizers {
            let y = sub.state(u);
            let mut composed = x.clone();
            for (p, &i) in unl.iter().enumerate() {
                composed[i] = y[p].clone();
            }
            if (inst.energy(&composed) - full.global_min_energy).abs() > ENERGY_TOL {
                return Ok(false);
            }
        }
        let u_star: Vec<Vec<f64>> = unl.iter().map(|&i| x[i].clone()).collect();
        if (sub.energy(&u_star) - res.global_min_energy).abs() > ENERGY_TOL {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn single_neuron_prefers_negative() {
        let inst = OracleInstance::new(vec![vec![0.0]], vec![vec![0.0]], vec![1.0], vec![FRAC_PI_4], 0.0);
        let r = enumerate_states(&inst).unwrap();
        assert_eq!(r.global_minimizers, vec![0]);
        assert!((r.global_min_energy + FRAC_PI_4.cos()).abs() < 1e-15);
    }

    #[test]
    fn strong_coupling_aligns_tasks() {
        let inst = OracleInstance::new(vec![vec![0.0]], vec![vec![0.0, 1.0], vec![1.0, 0.0]], vec![0.0, 0.0], vec![FRAC_PI_4; 2], 50.0);
        let r = enumerate_states(&inst).unwrap();
        assert_eq!(r.global_minimizers, vec![0b00, 0b11]);
    }

    #[test]
    fn separable_when_uncoupled() {
        let w = vec![vec![0.0, 1.0, 0.0], vec![1.0, 0.0, 0.5], vec![0.0, 0.5, 0.0]];
        let joint = OracleInstance::new(w.clone(), vec![vec![0.0, 0.3], vec![0.3, 0.0]], vec![0.2, -0.4], vec![1.0, 1.3], 0.0);
        let r = enumerate_states(&joint).unwrap();
        for (k, (g, rho)) in [(0.2, 1.0), (-0.4, 1.3)].into_iter().enumerate() {
            let single = OracleInstance::new(w.clone(), vec![vec![0.0]], vec![g], vec![rho], 0.0);
            let rs = enumerate_states(&single).unwrap();
            for &mask in &r.global_minimizers {
                let col: u64 = (0..3).map(|i| (mask >> (i * 2 + k) & 1) << i).sum();
                assert!(rs.global_minimizers.contains(&col));
            }
        }
    }

    #[test]
    fn global_minimizers_are_local_minima() {
        let w = vec![vec![0.0, 0.7, 0.2], vec![0.7, 0.0, 0.9], vec![0.2, 0.9, 0.0]];
        let inst = OracleInstance::new(w, vec![vec![0.0, 0.6], vec![0.6, 0.0]], vec![0.1, 0.3], vec![0.9, 1.2], 1.5);
        let r = enumerate_states(&inst).unwrap();
        assert_eq!(r.energies.len(), 64);
        assert!(r.global_minimizers.iter().all(|&g| r.is_local_minimum(g)));
        assert!(r.global_minimizers.iter().all(|&g| is_flip_stable(&inst, &inst.state(g))));
    }

    #[test]
    fn clamped_minimizers_trivial_cases() {
        let w = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        let inst = OracleInstance::new(w, vec![vec![0.0]], vec![0.1], vec![1.0], 0.0);
        assert!(check_clamped_minimizers(&inst, &[0, 1]).unwrap());
        assert!(check_clamped_minimizers(&inst, &[0]).unwrap());
    }

    #[test]
    fn rejects_large_instances() {
        let inst = OracleInstance::new(vec![vec![0.0; 7]; 7], vec![vec![0.0; 3]; 3], vec![0.0; 3], vec![1.0; 3], 0.0);
        assert!(matches!(enumerate_states(&inst), Err(Error::EnumerationBound(21))));
    }
}
