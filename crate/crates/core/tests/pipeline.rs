use homtask::dynamics::{run_dynamics, DynamicsConfig};
use homtask::graph::{load_graph_with_nodes, submatrix, EdgeRecord, WeightedGraph};
use homtask::hopfield::{ClampField, ModelParams, Network, NetworkState};
use homtask::learning::{LearningConfig, MembershipConfig};
use homtask::pipeline::{cross_validate, Hyper, HyperGrid, PipelineConfig, Split};
use homtask::synth::{generate, SynthDataset, SynthSpec};
use homtask::tasks::{TaskLabeling, TaskSimilarity};

fn dataset(spec: &SynthSpec) -> (SynthDataset, WeightedGraph, TaskLabeling) {
    let d = generate(spec).unwrap();
    let recs = d.edges.iter().map(|&(a, b, w)| EdgeRecord::new(d.node_ids[a].clone(), d.node_ids[b].clone(), w));
    let graph = load_graph_with_nodes(recs, d.node_ids.clone()).unwrap();
    let pos: Vec<Vec<usize>> = d
        .positives
        .iter()
        .map(|p| p.iter().copied().filter(|i| d.labeled.binary_search(i).is_ok()).collect())
        .collect();
    let labeling = TaskLabeling::new(graph.n(), d.task_ids.clone(), &d.labeled, &pos).unwrap();
    (d, graph, labeling)
}

fn spec(seed: u64) -> SynthSpec {
    SynthSpec {
        cluster_sizes: vec![25, 175],
        tasks: 3,
        overlap: 0.5,
        purity: 0.9,
        positive_rate: 0.1,
        labeled_fraction: 0.75,
        seed,
        ..SynthSpec::default()
    }
}

fn single_group() -> PipelineConfig {
    PipelineConfig {
        bin_edges: vec![],
        ..PipelineConfig::default()
    }
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let (_, graph, labeling) = dataset(&spec(2));
    let grid = HyperGrid {
        alpha: vec![0.0, 1.0],
        beta: vec![0.0, 1.0],
        tau: vec![1000.0],
        inner_folds: 2,
        ..HyperGrid::default()
    };
    let cfg = single_group();
    let pooled = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let serial = pooled.install(|| cross_validate(&graph, &labeling, 3, &grid, &cfg, 9).unwrap());
    let parallel = cross_validate(&graph, &labeling, 3, &grid, &cfg, 9).unwrap();
    assert_eq!(serial, parallel);
}

#[test]
fn different_seeds_change_the_folds() {
    let (_, graph, labeling) = dataset(&spec(2));
    let grid = HyperGrid::fixed(Hyper { alpha: 0.5, beta: 0.0, tau: 1000.0 });
    let a = cross_validate(&graph, &labeling, 3, &grid, &single_group(), 1).unwrap();
    let b = cross_validate(&graph, &labeling, 3, &grid, &single_group(), 2).unwrap();
    assert_ne!(a.plan.assignment, b.plan.assignment);
}

#[test]
fn every_labeled_node_is_scored_once_per_task() {
    let (_, graph, labeling) = dataset(&spec(4));
    let grid = HyperGrid::fixed(Hyper { alpha: 0.5, beta: 1.0, tau: 1000.0 });
    let res = cross_validate(&graph, &labeling, 3, &grid, &single_group(), 4).unwrap();
    let expected: Vec<(usize, usize)> =
        labeling.labeled().iter().flat_map(|&i| (0..labeling.m()).map(move |k| (i, k))).collect();
    let got: Vec<(usize, usize)> = res.scores.rows.iter().map(|r| (r.node, r.task)).collect();
    assert_eq!(got, expected);
    for r in &res.scores.rows {
        assert_eq!(r.truth, Some(labeling.is_positive(r.node, r.task)));
        assert!(r.score.is_finite());
    }
}

#[test]
fn predictions_agree_with_score_signs() {
    let (_, graph, labeling) = dataset(&spec(6));
    let grid = HyperGrid::fixed(Hyper { alpha: 1.0, beta: 0.0, tau: 1000.0 });
    let res = cross_validate(&graph, &labeling, 3, &grid, &single_group(), 6).unwrap();
    assert!(res.report.all_converged);
    for r in &res.scores.rows {
        assert_eq!(r.predicted, r.score > 0.0, "node {} task {}", r.node, r.task);
    }
}

#[test]
fn clustered_positives_are_ranked_well() {
    let (_, graph, labeling) = dataset(&spec(8));
    let grid = HyperGrid::fixed(Hyper { alpha: 0.5, beta: 0.0, tau: 1000.0 });
    let res = cross_validate(&graph, &labeling, 3, &grid, &single_group(), 8).unwrap();
    assert!(res.report.macro_auc.unwrap() > 0.8, "{:?}", res.report.macro_auc);
}

#[test]
fn task_without_training_positives_is_excluded() {
    let (d, graph, full) = dataset(&spec(5));
    // Task 1 has a single positive, so some fold trains without it.
    let pos = vec![full.positives(0), vec![d.labeled[0]]];
    let labeling = TaskLabeling::new(graph.n(), vec!["a".into(), "b".into()], &d.labeled, &pos).unwrap();
    let grid = HyperGrid::fixed(Hyper { alpha: 0.5, beta: 0.0, tau: 1000.0 });
    let res = cross_validate(&graph, &labeling, 3, &grid, &single_group(), 5).unwrap();
    let fold = res.plan.assignment[res.plan.nodes.binary_search(&d.labeled[0]).unwrap()];
    assert_eq!(res.report.folds[fold].excluded_tasks, vec!["b".to_string()]);
    for r in res.scores.rows.iter().filter(|r| r.task == 1 && res.plan.test_nodes(fold).contains(&r.node)) {
        assert_eq!(r.score, 0.0);
        assert!(!r.predicted);
    }
}

/// With zero task similarity the joint fixed point decouples: each task
/// column is a fixed point of that task's own single-task dynamics.
#[test]
fn zero_similarity_columns_are_single_task_fixed_points() {
    let (d, graph, labeling) = dataset(&spec(12));
    let train: Vec<usize> = d.labeled.iter().copied().filter(|i| i % 3 != 0).collect();
    let split = Split::new(&graph, &labeling, &train).unwrap();
    let tasks = [0, 1, 2];
    let zero = TaskSimilarity::zeros(labeling.m());
    let lcfg = LearningConfig {
        seed: 1,
        ..LearningConfig::default()
    };
    let learned = split.learn_group(&tasks, &zero, 1.0, &MembershipConfig::default(), &lcfg).unwrap();
    let hyper = Hyper { alpha: 1.0, beta: 0.0, tau: 1000.0 };
    let joint = split.infer_group(&tasks, &zero, &learned, &hyper, &DynamicsConfig::new(2), true).unwrap();
    assert!(joint.converged);

    let w_uu = submatrix(&graph, &split.unlabeled, &split.unlabeled).unwrap();
    let w_ul = submatrix(&graph, &split.unlabeled, &split.train).unwrap();
    let one = TaskSimilarity::zeros(1);
    for (kl, &k) in tasks.iter().enumerate() {
        let params = ModelParams::new(vec![learned.gamma[kl]], vec![learned.rho[kl]], 0.0, 0.0, 1000.0).unwrap();
        let clamped = NetworkState::from_fn(split.train.len(), &params, |i, _| labeling.is_positive(split.train[i], k));
        let clamp = ClampField::from_labeled(&w_ul, &clamped).unwrap();
        let net = Network::new(&w_uu, &one, &params).unwrap().with_clamp(&clamp).unwrap();
        let column = NetworkState::from_fn(split.unlabeled.len(), &params, |i, _| joint.predicted[i * tasks.len() + kl]);
        let trace = run_dynamics(&net, column.clone(), &DynamicsConfig::new(3)).unwrap();
        assert_eq!(trace.flips_per_sweep, vec![0], "task {k}");
        assert_eq!(trace.final_state, column);
    }
}
