//! Inference on one train/predict split with and without the cardinality
//! regularizer, which pulls each task's positive count toward h·p.

use homtask::graph::{load_graph_with_nodes, EdgeRecord};
use homtask::learning::{LearningConfig, MembershipConfig};
use homtask::dynamics::DynamicsConfig;
use homtask::pipeline::{Hyper, Split};
use homtask::synth::{generate, SynthSpec};
use homtask::tasks::TaskLabeling;

fn main() -> homtask::Result<()> {
    let d = generate(&SynthSpec {
        cluster_sizes: vec![100, 300, 1600],
        block_probabilities: Some(vec![
            vec![0.25, 0.05, 0.01],
            vec![0.05, 0.025, 0.025],
            vec![0.01, 0.025, 0.0025],
        ]),
        tasks: 2,
        positive_rate: 0.05,
        overlap: 0.5,
        labeled_fraction: 0.3,
        seed: 1,
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

    let split = Split::new(&graph, &labeling, &d.labeled)?;
    let tasks = [0, 1];
    let sim = split.similarity(0.0)?;
    let membership = MembershipConfig::default();
    let learned = split.learn_group(&tasks, &sim, 0.5, &membership, &LearningConfig { seed: 3, ..LearningConfig::default() })?;
    let h = split.unlabeled.len();
    let p_plus = split.positive_rates(&tasks);
    println!("h = {h}, rho = {:?}", learned.rho);

    for beta in [0.0, 1.0] {
        let hyper = Hyper { alpha: 0.5, beta, tau: membership.tau };
        let inf = split.infer_group(&tasks, &sim, &learned, &hyper, &DynamicsConfig::new(9), false)?;
        for (k, p) in p_plus.iter().enumerate() {
            let count = (0..h).filter(|&i| inf.predicted[i * tasks.len() + k]).count();
            println!("beta {beta}: task {k} predicts {count} positives (h·p = {:.1}), {} sweeps", h as f64 * p, inf.sweeps);
        }
    }
    Ok(())
}
