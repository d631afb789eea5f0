//! Inner cross-validation over an (α, β, τ) grid for one task group.

use homtask::graph::{load_graph_with_nodes, EdgeRecord};
use homtask::pipeline::{select_hyperparams, HyperGrid, PipelineConfig, SelectionMetric};
use homtask::synth::{generate, SynthSpec};
use homtask::tasks::TaskLabeling;

fn main() -> homtask::Result<()> {
    let d = generate(&SynthSpec {
        cluster_sizes: vec![30, 270],
        tasks: 2,
        overlap: 0.7,
        purity: 0.9,
        seed: 8,
        ..SynthSpec::default()
    })?;
    let records = d.edges.iter().map(|&(a, b, w)| EdgeRecord::new(d.node_ids[a].clone(), d.node_ids[b].clone(), w));
    let graph = load_graph_with_nodes(records, d.node_ids.clone())?;
    let labeling = TaskLabeling::new(graph.n(), d.task_ids.clone(), &d.labeled, &d.positives)?;

    let grid = HyperGrid {
        alpha: vec![0.0, 1.0],
        beta: vec![0.0, 1.0],
        tau: vec![1000.0],
        metric: SelectionMetric::Aupr,
        inner_folds: 3,
    };
    let train: Vec<usize> = labeling.labeled().iter().copied().filter(|i| i % 4 != 0).collect();
    let (best, scores) = select_hyperparams(&graph, &labeling, &train, &[0, 1], &grid, &PipelineConfig::default(), 77)?;
    for s in &scores {
        println!("alpha {:.1} beta {:.1} tau {:>6}: inner AUPR {:?}", s.alpha, s.beta, s.tau, s.score);
    }
    println!("selected alpha {} beta {} tau {}", best.alpha, best.beta, best.tau);
    Ok(())
}
