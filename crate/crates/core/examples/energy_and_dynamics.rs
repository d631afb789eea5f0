//! Asynchronous dynamics on a small two-task network: the energy never rises
//! and the run stops at a fixed point.

use homtask::dynamics::{run_dynamics, DynamicsConfig};
use homtask::graph::SparseMatrix;
use homtask::hopfield::{ModelParams, Network, NetworkState};
use homtask::tasks::TaskSimilarity;

fn main() -> homtask::Result<()> {
    // Two triangles joined by one weak edge.
    let mut w = vec![vec![0.0; 6]; 6];
    for &(a, b, x) in &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0), (3, 4, 1.0), (4, 5, 1.0), (3, 5, 1.0), (2, 3, 0.2)] {
        w[a][b] = x;
        w[b][a] = x;
    }
    let weights = SparseMatrix::from_dense(&w);
    let sim = TaskSimilarity::from_matrix(&[vec![0.0, 0.8], vec![0.8, 0.0]])?;
    let params = ModelParams::new(vec![0.1, 0.1], vec![1.1, 1.0], 0.5, 0.0, 1.0)?;
    let net = Network::new(&weights, &sim, &params)?;

    let init = NetworkState::from_fn(6, &params, |i, k| i < 3 || (k == 1 && i == 4));
    println!("initial energy {:.6}", net.energy(&init));
    let trace = run_dynamics(&net, init, &DynamicsConfig::new(7))?;
    for (s, (e, f)) in trace.energy_per_sweep.iter().skip(1).zip(&trace.flips_per_sweep).enumerate() {
        println!("sweep {:>2}: energy {e:.6}, flips {f}", s + 1);
    }
    println!("converged: {} after {} sweeps", trace.converged, trace.sweeps_run);
    for i in 0..6 {
        let row: Vec<&str> = (0..2).map(|k| if trace.final_state.is_positive(i, k) { "+" } else { "-" }).collect();
        println!("node {i}: {}  inputs {:+.3} {:+.3}", row.join(" "), trace.final_input(i, 0), trace.final_input(i, 1));
    }
    Ok(())
}
