//! Brute-force reference on a tiny network: enumerate every state, compare
//! the production energy with the pairwise-distance form, and check that
//! clamping a global minimizer's labeled part preserves global minimality.

use homtask::graph::SparseMatrix;
use homtask::hopfield::{multitask_energy, ModelParams, NetworkState};
use homtask::oracle::{check_clamped_minimizers, enumerate_states, is_flip_stable, OracleInstance};
use homtask::tasks::TaskSimilarity;

fn main() -> homtask::Result<()> {
    let w = vec![
        vec![0.0, 0.9, 0.0, 0.3],
        vec![0.9, 0.0, 0.6, 0.0],
        vec![0.0, 0.6, 0.0, 0.8],
        vec![0.3, 0.0, 0.8, 0.0],
    ];
    let s = vec![vec![0.0, 0.5], vec![0.5, 0.0]];
    let inst = OracleInstance::new(w.clone(), s.clone(), vec![0.5, 0.4], vec![1.0, 1.2], 0.7);
    let ex = enumerate_states(&inst)?;
    println!("{} states, minimum energy {:.6}", ex.energies.len(), ex.global_min_energy);
    println!("global minimizers {:?}, local minima {:?}", ex.global_minimizers, ex.local_minima);

    let params = ModelParams::new(inst.gamma.clone(), inst.rho.clone(), inst.alpha, 0.0, 1.0)?;
    let weights = SparseMatrix::from_dense(&w);
    let sim = TaskSimilarity::from_matrix(&s)?;
    let mut worst: f64 = 0.0;
    for mask in 0..ex.energies.len() as u64 {
        let state = NetworkState::from_values(&inst.state(mask), &params)?;
        let e = multitask_energy(&state, &weights, &sim, &params)?;
        worst = worst.max((e - ex.energies[mask as usize]).abs());
    }
    println!("max |row-sum energy - pairwise energy| = {worst:.2e}");

    let best = ex.global_minimizers[0];
    println!("minimizer {best:#010b} flip-stable: {}", is_flip_stable(&inst, &inst.state(best)));
    println!("clamped minimizer composition holds: {}", check_clamped_minimizers(&inst, &[0, 1])?);
    Ok(())
}
