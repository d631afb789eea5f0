//! Per-task labelings, Jaccard task similarity and task grouping.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{BufRead, BufReader, Read};

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;

/// Binary labelings of the labeled set `L` for `m` tasks.
///
/// Negatives are implicit: every labeled node that is not positive for a task
/// is negative for it.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskLabeling {
    n_nodes: usize,
    task_ids: Vec<String>,
    labeled: Vec<usize>,
    is_labeled: Vec<bool>,
    positive: Vec<Vec<bool>>,
}

impl TaskLabeling {
    pub fn new(n_nodes: usize, task_ids: Vec<String>, labeled: &[usize], positives: &[Vec<usize>]) -> Result<Self> {
        if positives.len() != task_ids.len() {
            return Err(Error::InvalidParameter(format!(
                "{} task ids but {} positive sets",
                task_ids.len(),
                positives.len()
            )));
        }
        let mut is_labeled = vec![false; n_nodes];
        for &i in labeled {
            if i >= n_nodes {
                return Err(Error::IndexOutOfRange { index: i, n: n_nodes });
            }
            is_labeled[i] = true;
        }
        let mut positive = vec![vec![false; n_nodes]; task_ids.len()];
        for (k, set) in positives.iter().enumerate() {
            for &i in set {
                if i >= n_nodes || !is_labeled[i] {
                    return Err(Error::InvalidParameter(format!(
                        "positive node {i} of task `{}` is not in L",
                        task_ids[k]
                    )));
                }
                positive[k][i] = true;
            }
        }
        let labeled = (0..n_nodes).filter(|&i| is_labeled[i]).collect();
        Ok(Self {
            n_nodes,
            task_ids,
            labeled,
            is_labeled,
            positive,
        })
    }

    /// Number of tasks `m`.
    pub fn m(&self) -> usize {
        self.task_ids.len()
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn task_ids(&self) -> &[String] {
        &self.task_ids
    }

    /// Sorted labeled node indices.
    pub fn labeled(&self) -> &[usize] {
        &self.labeled
    }

    pub fn is_labeled(&self, i: usize) -> bool {
        self.is_labeled[i]
    }

    /// Indicator `χ_ik`; false for unlabeled nodes.
    #[inline]
    pub fn is_positive(&self, i: usize, k: usize) -> bool {
        self.positive[k][i]
    }

    pub fn positives(&self, k: usize) -> Vec<usize> {
        self.labeled.iter().copied().filter(|&i| self.positive[k][i]).collect()
    }

    pub fn positive_count(&self, k: usize) -> usize {
        self.labeled.iter().filter(|&&i| self.positive[k][i]).count()
    }

    /// `p_{k,+} = |L_{k,+}| / |L|` (0 for an empty `L`).
    pub fn positive_rate(&self, k: usize) -> f64 {
        if self.labeled.is_empty() {
            0.0
        } else {
            self.positive_count(k) as f64 / self.labeled.len() as f64
        }
    }

    /// `|L_{k,+}| / |L_{k,-}|`; infinite when there are no negatives.
    pub fn imbalance_ratio(&self, k: usize) -> f64 {
        let p = self.positive_count(k);
        let neg = self.labeled.len() - p;
        if neg == 0 {
            f64::INFINITY
        } else {
            p as f64 / neg as f64
        }
    }

    /// Same tasks with `L` replaced by `subset ∩ L`.
    pub fn restrict(&self, subset: &[usize]) -> TaskLabeling {
        let mut is_labeled = vec![false; self.n_nodes];
        for &i in subset {
            if i < self.n_nodes && self.is_labeled[i] {
                is_labeled[i] = true;
            }
        }
        let labeled: Vec<usize> = (0..self.n_nodes).filter(|&i| is_labeled[i]).collect();
        let positive = self
            .positive
            .iter()
            .map(|col| col.iter().zip(&is_labeled).map(|(&p, &l)| p && l).collect())
            .collect();
        TaskLabeling {
            n_nodes: self.n_nodes,
            task_ids: self.task_ids.clone(),
            labeled,
            is_labeled,
            positive,
        }
    }

    /// Keep only the listed tasks, in the given order.
    pub fn select_tasks(&self, tasks: &[usize]) -> TaskLabeling {
        TaskLabeling {
            n_nodes: self.n_nodes,
            task_ids: tasks.iter().map(|&k| self.task_ids[k].clone()).collect(),
            labeled: self.labeled.clone(),
            is_labeled: self.is_labeled.clone(),
            positive: tasks.iter().map(|&k| self.positive[k].clone()).collect(),
        }
    }

    /// True when node `i` is positive for at least one task.
    pub fn any_positive(&self, i: usize) -> bool {
        self.positive.iter().any(|col| col[i])
    }
}

/// One `node_id  task_id  label` record of the label TSV.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelRecord {
    pub node_id: String,
    pub task_id: String,
    pub positive: bool,
    pub line: usize,
}

/// Parse the label TSV (`node_id<TAB>task_id<TAB>{+,-}`, `#` comments skipped).
pub fn read_label_tsv<R: Read>(reader: R, source: &str) -> Result<Vec<LabelRecord>> {
    let mut out = Vec::new();
    for (ln, line) in BufReader::new(reader).lines().enumerate() {
        let line = line.map_err(|e| Error::io(format!("reading {source}"), e))?;
        let lineno = ln + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.trim_end_matches('\r').split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                location: format!("{source}:{lineno}"),
                message: format!("expected 3 tab-separated fields, found {}", fields.len()),
            });
        }
        let positive = match fields[2].trim() {
            "+" => true,
            "-" => false,
            other => {
                return Err(Error::InvalidLabel {
                    location: format!("{source}:{lineno}"),
                    label: other.to_string(),
                })
            }
        };
        out.push(LabelRecord {
            node_id: fields[0].trim().to_string(),
            task_id: fields[1].trim().to_string(),
            positive,
            line: lineno,
        });
    }
    Ok(out)
}

/// Assemble a labeling over `graph`'s node indexing.
///
/// `L` is the set of nodes that appear in any record. With `implicit_negatives`
/// a missing `(node, task)` pair is negative; otherwise every pair must be
/// present. Tasks are ordered by id.
pub fn build_labeling(graph: &WeightedGraph, records: &[LabelRecord], implicit_negatives: bool) -> Result<TaskLabeling> {
    let task_ids: Vec<String> = records
        .iter()
        .map(|r| r.task_id.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let task_index: HashMap<&str, usize> = task_ids.iter().enumerate().map(|(k, t)| (t.as_str(), k)).collect();
    let mut seen: BTreeMap<(usize, usize), (bool, usize)> = BTreeMap::new();
    let mut labeled = BTreeSet::new();
    for r in records {
        let i = graph.index_of(&r.node_id).ok_or_else(|| Error::UnknownNode(r.node_id.clone()))?;
        let k = task_index[r.task_id.as_str()];
        if let Some(&(prev, line)) = seen.get(&(i, k)) {
            if prev != r.positive {
                return Err(Error::Parse {
                    location: format!("lines {line} and {}", r.line),
                    message: format!("conflicting labels for node `{}` task `{}`", r.node_id, r.task_id),
                });
            }
        }
        seen.insert((i, k), (r.positive, r.line));
        labeled.insert(i);
    }
    if !implicit_negatives {
        for &i in &labeled {
            for (k, t) in task_ids.iter().enumerate() {
                if !seen.contains_key(&(i, k)) {
                    return Err(Error::Parse {
                        location: "labels".into(),
                        message: format!(
                            "node `{}` has no label for task `{t}` and implicit negatives are disabled",
                            graph.node_id(i)
                        ),
                    });
                }
            }
        }
    }
    let mut positives = vec![Vec::new(); task_ids.len()];
    for (&(i, k), &(p, _)) in &seen {
        if p {
            positives[k].push(i);
        }
    }
    let labeled: Vec<usize> = labeled.into_iter().collect();
    TaskLabeling::new(graph.n(), task_ids, &labeled, &positives)
}

/// Symmetric `m × m` similarity with zero diagonal and entries in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskSimilarity {
    m: usize,
    s: Vec<f64>,
    row_sums: Vec<f64>,
}

impl TaskSimilarity {
    pub fn from_matrix(s: &[Vec<f64>]) -> Result<Self> {
        let m = s.len();
        let mut flat = Vec::with_capacity(m * m);
        for (k, row) in s.iter().enumerate() {
            if row.len() != m {
                return Err(Error::InvalidParameter("similarity matrix is not square".into()));
            }
            for (r, &v) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::InvalidParameter(format!("s[{k}][{r}] = {v} outside [0,1]")));
                }
                if k == r && v != 0.0 {
                    return Err(Error::InvalidParameter(format!("s[{k}][{k}] must be 0")));
                }
                if v != s[r][k] {
                    return Err(Error::InvalidParameter(format!("s[{k}][{r}] != s[{r}][{k}]")));
                }
            }
            flat.extend_from_slice(row);
        }
        Ok(Self::from_flat(m, flat))
    }

    fn from_flat(m: usize, s: Vec<f64>) -> Self {
        let row_sums = (0..m).map(|k| s[k * m..(k + 1) * m].iter().sum()).collect();
        Self { m, s, row_sums }
    }

    /// All-zero similarity (independent tasks).
    pub fn zeros(m: usize) -> Self {
        Self::from_flat(m, vec![0.0; m * m])
    }

    pub fn m(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn get(&self, k: usize, r: usize) -> f64 {
        self.s[k * self.m + r]
    }

    /// `S_k = Σ_r s_kr`.
    #[inline]
    pub fn row_sum(&self, k: usize) -> f64 {
        self.row_sums[k]
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.s[k * self.m..(k + 1) * self.m]
    }

    pub fn to_matrix(&self) -> Vec<Vec<f64>> {
        (0..self.m).map(|k| self.row(k).to_vec()).collect()
    }

    /// Sub-matrix over `tasks`; row sums are recomputed within the subset.
    pub fn restrict(&self, tasks: &[usize]) -> TaskSimilarity {
        let m = tasks.len();
        let mut s = Vec::with_capacity(m * m);
        for &k in tasks {
            for &r in tasks {
                s.push(self.get(k, r));
            }
        }
        Self::from_flat(m, s)
    }
}

/// `s_kr = |L_{k,+} ∩ L_{r,+}| / |L_{k,+} ∪ L_{r,+}|`, 0 for two empty sets.
pub fn jaccard_similarity(labeling: &TaskLabeling) -> TaskSimilarity {
    let m = labeling.m();
    let pos: Vec<Vec<usize>> = (0..m).map(|k| labeling.positives(k)).collect();
    let mut s = vec![0.0; m * m];
    for k in 0..m {
        for r in (k + 1)..m {
            let inter = pos[k].iter().filter(|&&i| labeling.is_positive(i, r)).count();
            let union = pos[k].len() + pos[r].len() - inter;
            let v = if union == 0 { 0.0 } else { inter as f64 / union as f64 };
            s[k * m + r] = v;
            s[r * m + k] = v;
        }
    }
    TaskSimilarity::from_flat(m, s)
}

/// Zero every entry below `cutoff`.
pub fn threshold_similarity(sim: &TaskSimilarity, cutoff: f64) -> Result<TaskSimilarity> {
    if !(0.0..=1.0).contains(&cutoff) {
        return Err(Error::InvalidParameter(format!("similarity cutoff {cutoff} outside [0,1]")));
    }
    let s = sim.s.iter().map(|&v| if v < cutoff { 0.0 } else { v }).collect();
    Ok(TaskSimilarity::from_flat(sim.m, s))
}

/// Partition of task indices into jointly learned groups.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskGrouping {
    pub groups: Vec<Vec<usize>>,
    pub labels: Vec<String>,
}

impl TaskGrouping {
    pub fn single(m: usize) -> Self {
        Self {
            groups: if m == 0 { vec![] } else { vec![(0..m).collect()] },
            labels: vec!["all".into()],
        }
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }
}

/// Group tasks whose positive counts fall in the same bin `(e_i, e_{i+1}]`.
///
/// Counts `<= e_0` and `> e_last` form one residual group each. An empty edge
/// list yields a single group.
pub fn group_by_cardinality(labeling: &TaskLabeling, bin_edges: &[usize]) -> Result<TaskGrouping> {
    if bin_edges.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("bin edges must be strictly increasing".into()));
    }
    let m = labeling.m();
    if bin_edges.is_empty() {
        return Ok(TaskGrouping::single(m));
    }
    // bin 0: residual low, bins 1..=len-1: (e_{b-1}, e_b], bin len: residual high
    let nb = bin_edges.len() + 1;
    let mut bins: Vec<Vec<usize>> = vec![Vec::new(); nb];
    for k in 0..m {
        let c = labeling.positive_count(k);
        let b = bin_edges.iter().take_while(|&&e| c > e).count();
        bins[b].push(k);
    }
    let mut groups = Vec::new();
    let mut labels = Vec::new();
    for (b, tasks) in bins.into_iter().enumerate() {
        if tasks.is_empty() {
            continue;
        }
        let label = if b == 0 {
            format!("<={}", bin_edges[0])
        } else if b == nb - 1 {
            format!(">{}", bin_edges[b - 1])
        } else {
            format!("{}-{}", bin_edges[b - 1] + 1, bin_edges[b])
        };
        groups.push(tasks);
        labels.push(label);
    }
    Ok(TaskGrouping { groups, labels })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn labeling(n: usize, pos: &[&[usize]]) -> TaskLabeling {
        let ids = (0..pos.len()).map(|k| format!("t{k}")).collect();
        let sets: Vec<Vec<usize>> = pos.iter().map(|p| p.to_vec()).collect();
        TaskLabeling::new(n, ids, &(0..n).collect::<Vec<_>>(), &sets).unwrap()
    }

    #[test]
    fn jaccard_examples() {
        let s = jaccard_similarity(&labeling(5, &[&[1, 2], &[2, 3]]));
        assert!((s.get(0, 1) - 1.0 / 3.0).abs() < 1e-15);
        let s = jaccard_similarity(&labeling(5, &[&[1, 2], &[1, 2]]));
        assert_eq!(s.get(0, 1), 1.0);
        let s = jaccard_similarity(&labeling(5, &[&[], &[]]));
        assert_eq!(s.get(0, 1), 0.0);
        assert_eq!(s.get(0, 0), 0.0);
    }

    #[test]
    fn cardinality_grouping() {
        let mk = |counts: &[usize]| {
            let n = 200;
            let sets: Vec<Vec<usize>> = counts.iter().map(|&c| (0..c).collect()).collect();
            let refs: Vec<&[usize]> = sets.iter().map(|s| s.as_slice()).collect();
            labeling(n, &refs)
        };
        let g = group_by_cardinality(&mk(&[12, 15, 30]), &[10, 20, 50]).unwrap();
        assert_eq!(g.groups, vec![vec![0, 1], vec![2]]);
        let g = group_by_cardinality(&mk(&[7, 7, 7]), &[10, 20, 50]).unwrap();
        assert_eq!(g.groups.len(), 1);
        let g = group_by_cardinality(&mk(&[3, 60, 150]), &[]).unwrap();
        assert_eq!(g.groups, vec![vec![0, 1, 2]]);
        // bins 10-20, 21-50, 51-100 plus residuals
        let g = group_by_cardinality(&mk(&[5, 10, 20, 21, 100, 101]), &[9, 20, 50, 100]).unwrap();
        assert_eq!(g.groups, vec![vec![0], vec![1, 2], vec![3], vec![4], vec![5]]);
        assert!(group_by_cardinality(&mk(&[1]), &[5, 5]).is_err());
    }

    #[test]
    fn thresholding() {
        let s = TaskSimilarity::from_matrix(&[vec![0.0, 0.3, 1.0], vec![0.3, 0.0, 0.6], vec![1.0, 0.6, 0.0]]).unwrap();
        assert_eq!(threshold_similarity(&s, 0.0).unwrap(), s);
        let t = threshold_similarity(&s, 1.0).unwrap();
        assert_eq!(t.get(0, 1), 0.0);
        assert_eq!(t.get(0, 2), 1.0);
        assert_eq!(t.row_sum(0), 1.0);
        let t = threshold_similarity(&s, 0.5).unwrap();
        assert_eq!(t.get(0, 1), 0.0);
        assert_eq!(t.get(1, 0), 0.0);
        assert!(threshold_similarity(&s, 1.5).is_err());
    }

    #[test]
    fn label_tsv_roundtrip_into_labeling() {
        let g = crate::graph::load_graph(vec![
            crate::graph::EdgeRecord::new("a", "b", 1.0),
            crate::graph::EdgeRecord::new("b", "c", 1.0),
        ])
        .unwrap();
        let recs = read_label_tsv("a\tGO:1\t+\nb\tGO:2\t+\nc\tGO:1\t-\n".as_bytes(), "mem").unwrap();
        let lab = build_labeling(&g, &recs, true).unwrap();
        assert_eq!(lab.m(), 2);
        assert_eq!(lab.labeled(), &[0, 1, 2]);
        assert!(lab.is_positive(0, 0) && !lab.is_positive(1, 0) && lab.is_positive(1, 1));
        assert!(build_labeling(&g, &recs, false).is_err());
        assert!(read_label_tsv("a\tGO:1\tx\n".as_bytes(), "mem").is_err());
        let bad = read_label_tsv("a\tGO:1\t+\na\tGO:1\t-\n".as_bytes(), "mem").unwrap();
        assert!(build_labeling(&g, &bad, true).is_err());
    }

    #[test]
    fn restriction_and_rates() {
        let lab = labeling(6, &[&[0, 1, 2]]);
        assert_eq!(lab.positive_rate(0), 0.5);
        let r = lab.restrict(&[0, 3, 4]);
        assert_eq!(r.labeled(), &[0, 3, 4]);
        assert_eq!(r.positives(0), vec![0]);
        assert!(!r.is_positive(1, 0));
    }

    proptest! {
        #[test]
        fn jaccard_invariants(sets in proptest::collection::vec(proptest::collection::btree_set(0usize..15, 0..8), 2..6)) {
            let sets: Vec<Vec<usize>> = sets.into_iter().map(|s| s.into_iter().collect()).collect();
            let refs: Vec<&[usize]> = sets.iter().map(|s| s.as_slice()).collect();
            let lab = labeling(15, &refs);
            let s = jaccard_similarity(&lab);
            let m = lab.m();
            for k in 0..m {
                prop_assert_eq!(s.get(k, k), 0.0);
                prop_assert!(s.row_sum(k) >= 0.0 && s.row_sum(k) <= (m - 1) as f64);
                for r in 0..m {
                    prop_assert_eq!(s.get(k, r), s.get(r, k));
                    prop_assert!((0.0..=1.0).contains(&s.get(k, r)));
                    if k != r {
                        let same = sets[k] == sets[r] && !sets[k].is_empty();
                        prop_assert_eq!(s.get(k, r) == 1.0, same);
                    }
                }
            }
        }
    }
}
