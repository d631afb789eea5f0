//! Write a synthetic dataset with a runnable configuration, then run it.

use homtask::config::ExperimentConfig;
use homtask::experiment::cmd_run;
use homtask::synth::{generate, write_dataset, SynthSpec};

fn main() -> homtask::Result<()> {
    let spec = SynthSpec {
        cluster_sizes: vec![25, 175],
        tasks: 3,
        overlap: 0.5,
        positive_rate: 0.1,
        labeled_fraction: 0.8,
        seed: 4,
        ..SynthSpec::default()
    };
    let d = generate(&spec)?;
    println!("{} nodes, {} edges, {} labeled", d.node_ids.len(), d.edges.len(), d.labeled.len());
    for k in 0..d.task_ids.len() {
        println!("{}: {} positives, jaccard with task 0 {:.3}", d.task_ids[k], d.positives[k].len(), d.jaccard(0, k));
    }

    let dir = std::env::temp_dir().join(format!("homtask-synth-{}", std::process::id()));
    let files = write_dataset(&spec, &dir)?;
    let cfg = ExperimentConfig::load(&files.config)?;
    let art = cmd_run(&cfg)?;
    println!("scores   {}", art.scores.display());
    println!("metrics  {}", art.metrics.display());
    println!("manifest {}", art.manifest.display());
    std::fs::remove_dir_all(&dir).ok();
    Ok(())
}
