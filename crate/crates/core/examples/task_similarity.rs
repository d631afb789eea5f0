//! Task similarity from shared positives, a sparsifying cutoff, and grouping
//! of tasks by how many positives they have.

use homtask::tasks::{group_by_cardinality, jaccard_similarity, threshold_similarity, TaskLabeling};

fn main() -> homtask::Result<()> {
    let ids = ["small", "medium", "large", "other"].map(String::from).to_vec();
    let labeled: Vec<usize> = (0..100).collect();
    let positives = vec![
        (0..6).collect::<Vec<_>>(),
        (0..15).collect(),
        (5..45).collect(),
        (60..72).collect(),
    ];
    let labeling = TaskLabeling::new(100, ids, &labeled, &positives)?;

    let sim = jaccard_similarity(&labeling);
    let sparse = threshold_similarity(&sim, 0.3)?;
    for k in 0..labeling.m() {
        let row: Vec<String> = (0..labeling.m()).map(|r| format!("{:.3}", sim.get(k, r))).collect();
        let kept: Vec<String> = (0..labeling.m()).map(|r| format!("{:.3}", sparse.get(k, r))).collect();
        println!("{:<7} jaccard [{}]  cutoff 0.3 [{}]", labeling.task_ids()[k], row.join(" "), kept.join(" "));
    }

    let grouping = group_by_cardinality(&labeling, &[9, 20, 50])?;
    for (g, label) in grouping.groups.iter().zip(&grouping.labels) {
        let names: Vec<&str> = g.iter().map(|&k| labeling.task_ids()[k].as_str()).collect();
        println!("group {label}: {}", names.join(", "));
    }
    Ok(())
}
