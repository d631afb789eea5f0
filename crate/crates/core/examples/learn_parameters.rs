//! Learn per-task thresholds and activation angles on the labeled part of a
//! synthetic graph by maximizing the aggregated fuzzy F-measure.

use homtask::graph::{load_graph_with_nodes, EdgeRecord};
use homtask::learning::{learn, CrossTaskActivation, LearningConfig, LearningProblem, MembershipConfig};
use homtask::synth::{generate, SynthSpec};
use homtask::tasks::{jaccard_similarity, TaskLabeling};

fn main() -> homtask::Result<()> {
    let d = generate(&SynthSpec {
        cluster_sizes: vec![40, 260],
        tasks: 3,
        overlap: 0.6,
        purity: 0.9,
        seed: 11,
        ..SynthSpec::default()
    })?;
    let records = d.edges.iter().map(|&(a, b, w)| EdgeRecord::new(d.node_ids[a].clone(), d.node_ids[b].clone(), w));
    let graph = load_graph_with_nodes(records, d.node_ids.clone())?;
    let labeling = TaskLabeling::new(graph.n(), d.task_ids.clone(), &d.labeled, &d.positives)?;
    let sim = jaccard_similarity(&labeling);
    let tasks: Vec<usize> = (0..labeling.m()).collect();
    let problem = LearningProblem::from_labeling(&graph, &labeling, &tasks, sim, 0.5, CrossTaskActivation::Source)?;

    let out = learn(&problem, &MembershipConfig::default(), &LearningConfig { seed: 5, ..LearningConfig::default() })?;
    println!("aggregated F {:.4} after {} passes (converged: {})", out.achieved_f, out.iterations, out.converged);
    for k in 0..problem.m() {
        println!(
            "task {}: gamma {:+.4}, rho {:.4}, F {:.4}",
            labeling.task_ids()[k],
            out.gamma[k],
            out.rho[k],
            out.per_task_f[k]
        );
    }
    let first = out.f_history.first().copied().unwrap_or(0.0);
    println!("F rose from {first:.4} over {} coordinate steps", out.f_history.len() - 1);
    Ok(())
}
