//! Full cross-validated experiment with fixed hyper-parameters.

use homtask::graph::{load_graph_with_nodes, EdgeRecord};
use homtask::pipeline::{cross_validate, Hyper, HyperGrid, PipelineConfig};
use homtask::synth::{generate, SynthSpec};
use homtask::tasks::TaskLabeling;

fn main() -> homtask::Result<()> {
    let d = generate(&SynthSpec {
        cluster_sizes: vec![40, 360],
        tasks: 4,
        overlap: 0.5,
        purity: 0.85,
        labeled_fraction: 0.7,
        seed: 21,
        ..SynthSpec::default()
    })?;
    let records = d.edges.iter().map(|&(a, b, w)| EdgeRecord::new(d.node_ids[a].clone(), d.node_ids[b].clone(), w));
    let graph = load_graph_with_nodes(records, d.node_ids.clone())?;
    let positives: Vec<Vec<usize>> = d
        .positives
        .iter()
        .map(|p| p.iter().copied().filter(|i| d.labeled.binary_search(i).is_ok()).collect())
        .collect();
    let labeling = TaskLabeling::new(graph.n(), d.task_ids.clone(), &d.labeled, &positives)?;

    let grid = HyperGrid::fixed(Hyper { alpha: 0.5, beta: 0.0, tau: 1000.0 });
    let cfg = PipelineConfig { bin_edges: vec![], ..PipelineConfig::default() };
    let result = cross_validate(&graph, &labeling, 3, &grid, &cfg, 2024)?;

    let r = &result.report;
    println!("{} nodes, {} labeled, {} tasks, {} folds", r.n_nodes, r.n_labeled, r.n_tasks, r.k_folds);
    for t in &r.tasks {
        println!("{}: {} positives, AUC {:?}, AUPR {:?}", t.task_id, t.positives, t.auc, t.aupr);
    }
    println!("macro AUC {:?}, macro AUPR {:?}, all converged: {}", r.macro_auc, r.macro_aupr, r.all_converged);
    println!("{} score rows", result.scores.rows.len());
    Ok(())
}
