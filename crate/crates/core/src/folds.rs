//! Seeded stratified k-fold assignment.

use rand::seq::SliceRandom;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::seeds;
use crate::tasks::TaskLabeling;

/// How one task's positives are spread over the folds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaskFoldReport {
    pub task: usize,
    pub positives: usize,
    pub per_fold: Vec<usize>,
    /// False when the task has fewer positives than folds.
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldPlan {
    pub k_folds: usize,
    /// Node indices covered by the plan, ascending.
    pub nodes: Vec<usize>,
    /// `assignment[j]` is the fold of `nodes[j]`.
    pub assignment: Vec<usize>,
    pub stratified: Vec<TaskFoldReport>,
}

impl FoldPlan {
    /// Nodes held out in fold `f`, ascending.
    pub fn test_nodes(&self, f: usize) -> Vec<usize> {
        self.nodes.iter().zip(&self.assignment).filter(|&(_, &a)| a == f).map(|(&i, _)| i).collect()
    }

    /// Nodes of every other fold, ascending.
    pub fn train_nodes(&self, f: usize) -> Vec<usize> {
        self.nodes.iter().zip(&self.assignment).filter(|&(_, &a)| a != f).map(|(&i, _)| i).collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.k_folds];
        for &a in &self.assignment {
            s[a] += 1;
        }
        s
    }

    /// Tasks with fewer positives than folds.
    pub fn flagged_tasks(&self) -> Vec<usize> {
        self.stratified.iter().filter(|r| !r.feasible).map(|r| r.task).collect()
    }
}

/// Assign `nodes` to `k` folds, stratified on "positive for any task".
///
/// Positives are shuffled and dealt round-robin, then the negatives continue
/// the same deal, so fold sizes differ by at most one.
pub fn make_folds(nodes: &[usize], labeling: &TaskLabeling, k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!("k_folds = {k} must be >= 2")));
    }
    let mut sorted = nodes.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if k > sorted.len() {
        return Err(Error::InvalidParameter(format!("k_folds = {k} exceeds {} nodes", sorted.len())));
    }
    let mut rng = seeds::rng(seed);
    let (mut pos, mut neg): (Vec<usize>, Vec<usize>) = sorted.iter().partition(|&&i| labeling.any_positive(i));
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let mut fold_of = std::collections::HashMap::with_capacity(sorted.len());
    for (j, &i) in pos.iter().chain(&neg).enumerate() {
        fold_of.insert(i, j % k);
    }
    let assignment: Vec<usize> = sorted.iter().map(|i| fold_of[i]).collect();
    let stratified = (0..labeling.m())
        .map(|t| {
            let mut per_fold = vec![0; k];
            for (&i, &a) in sorted.iter().zip(&assignment) {
                if labeling.is_positive(i, t) {
                    per_fold[a] += 1;
                }
            }
            let positives = per_fold.iter().sum();
            TaskFoldReport {
                task: t,
                positives,
                per_fold,
                feasible: positives >= k,
            }
        })
        .collect();
    Ok(FoldPlan {
        k_folds: k,
        nodes: sorted,
        assignment,
        stratified,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn labeling(n: usize, positives: &[usize]) -> TaskLabeling {
        let all: Vec<usize> = (0..n).collect();
        TaskLabeling::new(n, vec!["t".into()], &all, &[positives.to_vec()]).unwrap()
    }

    #[test]
    fn fold_size_examples() {
        let l = labeling(10, &[0]);
        let nine: Vec<usize> = (0..9).collect();
        assert_eq!(make_folds(&nine, &l, 3, 1).unwrap().sizes(), vec![3, 3, 3]);
        let ten: Vec<usize> = (0..10).collect();
        let mut sizes = make_folds(&ten, &l, 3, 1).unwrap().sizes();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![3, 3, 4]);
    }

    #[test]
    fn stratifies_positives() {
        let l = labeling(12, &[0, 2, 4, 6, 8, 10]);
        let nodes: Vec<usize> = (0..12).collect();
        let plan = make_folds(&nodes, &l, 3, 9).unwrap();
        assert_eq!(plan.stratified[0].per_fold, vec![2, 2, 2]);
        assert!(plan.flagged_tasks().is_empty());
        let sparse = labeling(12, &[3]);
        assert_eq!(make_folds(&nodes, &sparse, 3, 9).unwrap().flagged_tasks(), vec![0]);
    }

    #[test]
    fn rejects_bad_k() {
        let l = labeling(3, &[0]);
        assert!(make_folds(&[0, 1, 2], &l, 1, 0).is_err());
        assert!(make_folds(&[0, 1, 2], &l, 4, 0).is_err());
    }

    proptest! {
        #[test]
        fn folds_partition_and_are_deterministic(n in 4usize..60, k in 2usize..5, seed in any::<u64>(), pmask in any::<u64>()) {
            prop_assume!(k <= n);
            let pos: Vec<usize> = (0..n).filter(|i| pmask >> (i % 64) & 1 == 1).collect();
            let l = labeling(n, &pos);
            let nodes: Vec<usize> = (0..n).collect();
            let a = make_folds(&nodes, &l, k, seed).unwrap();
            let b = make_folds(&nodes, &l, k, seed).unwrap();
            prop_assert_eq!(&a, &b);
            let sizes = a.sizes();
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
            let mut all: Vec<usize> = (0..k).flat_map(|f| a.test_nodes(f)).collect();
            all.sort_unstable();
            prop_assert_eq!(all, nodes);
            let pf = &a.stratified[0].per_fold;
            prop_assert!(pf.iter().max().unwrap() - pf.iter().min().unwrap() <= 1);
        }
    }
}
