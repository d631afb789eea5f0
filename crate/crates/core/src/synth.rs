//! Planted-partition graphs with correlated, imbalanced task labelings.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeds::{derive_seed, rng};

/// Generator settings. Cluster 0 is the positive cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthSpec {
    /// Sizes of the planted clusters.
    pub cluster_sizes: Vec<usize>,
    /// Edge probability inside a cluster.
    pub p_in: f64,
    /// Edge probability across clusters.
    pub p_out: f64,
    /// Symmetric cluster-by-cluster edge probabilities; overrides `p_in` and `p_out`.
    pub block_probabilities: Option<Vec<Vec<f64>>>,
    /// Edge weights are uniform in `[min_weight, 1]`.
    pub min_weight: f64,
    pub tasks: usize,
    /// Fraction of all nodes that are positive for each task.
    pub positive_rate: f64,
    /// Fraction of each task's positives shared with a common base set.
    pub overlap: f64,
    /// Fraction of positives drawn from cluster 0; the rest come from elsewhere.
    pub purity: f64,
    /// Fraction of nodes written to the label file.
    pub labeled_fraction: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            cluster_sizes: vec![30, 270],
            p_in: 0.3,
            p_out: 0.01,
            block_probabilities: None,
            min_weight: 0.5,
            tasks: 1,
            positive_rate: 0.1,
            overlap: 1.0,
            purity: 1.0,
            labeled_fraction: 1.0,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.cluster_sizes.is_empty() || self.cluster_sizes.contains(&0) {
            return Err(Error::config("cluster_sizes", "need at least one non-empty cluster"));
        }
        if self.tasks == 0 {
            return Err(Error::config("tasks", "must be >= 1"));
        }
        for (name, v) in [
            ("p_in", self.p_in),
            ("p_out", self.p_out),
            ("overlap", self.overlap),
            ("purity", self.purity),
            ("labeled_fraction", self.labeled_fraction),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::config(name, "must lie in [0, 1]"));
            }
        }
        if !(self.positive_rate > 0.0 && self.positive_rate < 1.0) {
            return Err(Error::config("positive_rate", "must lie in (0, 1)"));
        }
        if !(self.min_weight > 0.0 && self.min_weight <= 1.0) {
            return Err(Error::config("min_weight", "must lie in (0, 1]"));
        }
        if let Some(b) = &self.block_probabilities {
            let c = self.cluster_sizes.len();
            if b.len() != c || b.iter().any(|row| row.len() != c) {
                return Err(Error::config("block_probabilities", format!("must be a {c}x{c} matrix")));
            }
            for r in 0..c {
                for q in 0..c {
                    if !(0.0..=1.0).contains(&b[r][q]) {
                        return Err(Error::config("block_probabilities", "entries must lie in [0, 1]"));
                    }
                    if b[r][q] != b[q][r] {
                        return Err(Error::config("block_probabilities", "must be symmetric"));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.cluster_sizes.iter().sum()
    }

    /// Probability of an edge between a node of cluster `a` and one of cluster `b`.
    pub fn edge_probability(&self, a: usize, b: usize) -> f64 {
        match &self.block_probabilities {
            Some(m) => m[a][b],
            None if a == b => self.p_in,
            None => self.p_out,
        }
    }
}

/// A generated dataset in memory.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthDataset {
    pub node_ids: Vec<String>,
    pub cluster: Vec<usize>,
    /// `(a, b, w)` with `a < b`.
    pub edges: Vec<(usize, usize, f64)>,
    pub task_ids: Vec<String>,
    /// Ground-truth positive sets, ascending.
    pub positives: Vec<Vec<usize>>,
    /// Nodes written to the label file, ascending.
    pub labeled: Vec<usize>,
}

impl SynthDataset {
    pub fn edges_tsv(&self) -> String {
        let mut s = String::new();
        for &(a, b, w) in &self.edges {
            writeln!(s, "{}\t{}\t{}", self.node_ids[a], self.node_ids[b], w).unwrap();
        }
        s
    }

    /// Every labeled node gets an explicit label for every task.
    pub fn labels_tsv(&self) -> String {
        let mut s = String::new();
        for &i in &self.labeled {
            for (k, t) in self.task_ids.iter().enumerate() {
                let sign = if self.positives[k].binary_search(&i).is_ok() { '+' } else { '-' };
                writeln!(s, "{}\t{}\t{}", self.node_ids[i], t, sign).unwrap();
            }
        }
        s
    }

    pub fn jaccard(&self, a: usize, b: usize) -> f64 {
        let (pa, pb) = (&self.positives[a], &self.positives[b]);
        let inter = pa.iter().filter(|i| pb.binary_search(i).is_ok()).count();
        let union = pa.len() + pb.len() - inter;
        if union == 0 {
            0.0
        } else {
            inter as f64 / union as f64
        }
    }
}

pub fn generate(spec: &SynthSpec) -> Result<SynthDataset> {
    spec.validate()?;
    let n = spec.n();
    let width = n.to_string().len();
    let node_ids: Vec<String> = (0..n).map(|i| format!("v{i:0width$}")).collect();
    let cluster: Vec<usize> = spec.cluster_sizes.iter().enumerate().flat_map(|(c, &s)| std::iter::repeat_n(c, s)).collect();

    let mut g = rng(derive_seed(spec.seed, "synth/edges"));
    let mut edges = Vec::new();
    for a in 0..n {
        for b in (a + 1)..n {
            let p = spec.edge_probability(cluster[a], cluster[b]);
            if g.gen::<f64>() < p {
                let w = spec.min_weight + (1.0 - spec.min_weight) * g.gen::<f64>();
                edges.push((a, b, w));
            }
        }
    }

    let mut t = rng(derive_seed(spec.seed, "synth/tasks"));
    let q = ((spec.positive_rate * n as f64).round() as usize).clamp(1, n);
    let mut inside: Vec<usize> = (0..n).filter(|&i| cluster[i] == 0).collect();
    let mut outside: Vec<usize> = (0..n).filter(|&i| cluster[i] != 0).collect();
    inside.shuffle(&mut t);
    outside.shuffle(&mut t);
    // every task keeps the first `overlap·q` base nodes and draws the rest fresh
    let n_pure = ((spec.purity * q as f64).round() as usize).min(inside.len());
    let base: Vec<usize> = inside.iter().take(n_pure).chain(outside.iter().take(q - n_pure)).copied().collect();
    let shared = (spec.overlap * q as f64).round() as usize;
    let mut positives = Vec::with_capacity(spec.tasks);
    for _ in 0..spec.tasks {
        let mut set: Vec<usize> = base[..shared.min(base.len())].to_vec();
        let fresh_pure = n_pure.saturating_sub(set.iter().filter(|&&i| cluster[i] == 0).count());
        let mut pool_in: Vec<usize> = inside.iter().copied().filter(|i| !set.contains(i)).collect();
        let mut pool_out: Vec<usize> = outside.iter().copied().filter(|i| !set.contains(i)).collect();
        pool_in.shuffle(&mut t);
        pool_out.shuffle(&mut t);
        let need = q - set.len();
        let from_in = fresh_pure.min(need).min(pool_in.len());
        set.extend(pool_in.iter().take(from_in));
        set.extend(pool_out.iter().take(need - from_in));
        set.sort_unstable();
        positives.push(set);
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng(derive_seed(spec.seed, "synth/labeled")));
    let n_lab = ((spec.labeled_fraction * n as f64).round() as usize).clamp(1, n);
    let mut labeled: Vec<usize> = order.into_iter().take(n_lab).collect();
    labeled.sort_unstable();

    let tw = spec.tasks.to_string().len();
    Ok(SynthDataset {
        node_ids,
        cluster,
        edges,
        task_ids: (0..spec.tasks).map(|k| format!("t{k:0tw$}")).collect(),
        positives,
        labeled,
    })
}

/// Paths written by [`write_dataset`].
#[derive(Debug, Clone, PartialEq)]
pub struct SynthFiles {
    pub graph: PathBuf,
    pub labels: PathBuf,
    pub config: PathBuf,
}

/// Write `graph.tsv`, `labels.tsv` and a matching `config.toml` into `dir`.
pub fn write_dataset(spec: &SynthSpec, dir: &Path) -> Result<SynthFiles> {
    let data = generate(spec)?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
    let files = SynthFiles {
        graph: dir.join("graph.tsv"),
        labels: dir.join("labels.tsv"),
        config: dir.join("config.toml"),
    };
    let config = format!(
        "graph_path = \"graph.tsv\"\nlabels_path = \"labels.tsv\"\noutput_dir = \"out\"\nseed = {}\nk_folds = 3\n",
        spec.seed
    );
    for (path, body) in [(&files.graph, data.edges_tsv()), (&files.labels, data.labels_tsv()), (&files.config, config)] {
        std::fs::write(path, body).map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
    }
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn positives_are_a_cluster() {
        let spec = SynthSpec {
            cluster_sizes: vec![10, 30],
            positive_rate: 0.25,
            ..SynthSpec::default()
        };
        let d = generate(&spec).unwrap();
        assert_eq!(d.positives[0], (0..10).collect::<Vec<_>>());
        assert_eq!(d.labeled.len(), 40);
    }

    #[test]
    fn block_probabilities_override_and_validate() {
        let mut spec = SynthSpec {
            cluster_sizes: vec![10, 10],
            block_probabilities: Some(vec![vec![1.0, 0.0], vec![0.0, 0.0]]),
            ..SynthSpec::default()
        };
        let d = generate(&spec).unwrap();
        assert_eq!(d.edges.len(), 45);
        assert!(d.edges.iter().all(|&(a, b, _)| a < 10 && b < 10));

        spec.block_probabilities = Some(vec![vec![1.0, 0.2], vec![0.3, 0.0]]);
        assert!(spec.validate().is_err());
        spec.block_probabilities = Some(vec![vec![1.0, 0.2]]);
        assert!(spec.validate().is_err());
        spec.block_probabilities = Some(vec![vec![1.5, 0.0], vec![0.0, 0.0]]);
        assert!(spec.validate().is_err());
    }

    #[test]
    fn full_overlap_gives_identical_tasks() {
        let spec = SynthSpec {
            tasks: 3,
            overlap: 1.0,
            ..SynthSpec::default()
        };
        let d = generate(&spec).unwrap();
        assert_eq!(d.jaccard(0, 1), 1.0);
        assert_eq!(d.jaccard(1, 2), 1.0);
    }

    #[test]
    fn partial_overlap_and_imbalance() {
        let spec = SynthSpec {
            cluster_sizes: vec![100, 300],
            tasks: 4,
            positive_rate: 0.05,
            overlap: 0.5,
            ..SynthSpec::default()
        };
        let d = generate(&spec).unwrap();
        for k in 0..4 {
            assert_eq!(d.positives[k].len(), 20);
        }
        let j = d.jaccard(0, 1);
        assert!((1.0 / 3.0..0.5).contains(&j), "{j}");
    }

    #[test]
    fn same_seed_same_files() {
        let spec = SynthSpec {
            labeled_fraction: 0.5,
            tasks: 2,
            overlap: 0.3,
            purity: 0.8,
            ..SynthSpec::default()
        };
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        assert_eq!(a.edges_tsv(), b.edges_tsv());
        assert_eq!(a.labels_tsv(), b.labels_tsv());
        let c = generate(&SynthSpec { seed: 1, ..spec }).unwrap();
        assert_ne!(a.edges_tsv(), c.edges_tsv());
    }

    #[test]
    fn rejects_bad_spec() {
        assert!(generate(&SynthSpec { positive_rate: 0.0, ..SynthSpec::default() }).is_err());
        assert!(generate(&SynthSpec { cluster_sizes: vec![], ..SynthSpec::default() }).is_err());
    }
}
