//! Undirected weighted graph storage and labeled/unlabeled submatrix views.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::io::{BufRead, BufReader, Read};

use crate::error::{Error, Result};

/// One `id_a  id_b  weight` record, with the source line when read from a file.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeRecord {
    pub id_a: String,
    pub id_b: String,
    pub weight: f64,
    pub line: Option<usize>,
}

impl EdgeRecord {
    pub fn new(id_a: impl Into<String>, id_b: impl Into<String>, weight: f64) -> Self {
        Self {
            id_a: id_a.into(),
            id_b: id_b.into(),
            weight,
            line: None,
        }
    }
}

impl fmt::Display for EdgeRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l} ({}, {}, {})", self.id_a, self.id_b, self.weight),
            None => write!(f, "({}, {}, {})", self.id_a, self.id_b, self.weight),
        }
    }
}

/// Row-major sparse matrix; each row holds `(column, weight)` sorted by column.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl SparseMatrix {
    /// Build from per-row entry lists. Entries are sorted; zero weights dropped.
    pub fn from_rows(ncols: usize, mut rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        for row in &mut rows {
            row.retain(|&(_, w)| w != 0.0);
            row.sort_by_key(|&(j, _)| j);
            if let Some(&(j, _)) = row.last() {
                if j >= ncols {
                    return Err(Error::IndexOutOfRange { index: j, n: ncols });
                }
            }
        }
        Ok(Self {
            nrows: rows.len(),
            ncols,
            rows,
        })
    }

    /// Dense row-major input; used mostly by tests and small examples.
    pub fn from_dense(dense: &[Vec<f64>]) -> Self {
        let ncols = dense.first().map_or(0, |r| r.len());
        let rows = dense
            .iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .filter(|(_, &w)| w != 0.0)
                    .map(|(j, &w)| (j, w))
                    .collect()
            })
            .collect();
        Self {
            nrows: dense.len(),
            ncols,
            rows,
        }
    }

    pub fn empty(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            rows: vec![Vec::new(); nrows],
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let row = &self.rows[i];
        match row.binary_search_by_key(&j, |&(c, _)| c) {
            Ok(p) => row[p].1,
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.ncols]; self.nrows];
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, w) in row {
                out[i][j] = w;
            }
        }
        out
    }

    /// Largest `|w_ij - w_ji|`; zero for symmetric square matrices.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, w) in row {
                let back = if j < self.nrows { self.get(j, i) } else { 0.0 };
                worst = worst.max((w - back).abs());
            }
        }
        worst
    }
}

/// Symmetric, non-negative, zero-diagonal graph over `n` nodes.
///
/// Node indices follow the sorted order of the external ids.
#[derive(Debug, Clone)]
pub struct WeightedGraph {
    node_ids: Vec<String>,
    index: HashMap<String, usize>,
    adjacency: SparseMatrix,
    total_edge_weight: f64,
}

impl WeightedGraph {
    pub fn n(&self) -> usize {
        self.node_ids.len()
    }

    pub fn node_ids(&self) -> &[String] {
        &self.node_ids
    }

    pub fn node_id(&self, i: usize) -> &str {
        &self.node_ids[i]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn adjacency(&self) -> &SparseMatrix {
        &self.adjacency
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        self.adjacency.row(i)
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.adjacency.get(i, j)
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.nnz() / 2
    }

    /// Sum of weights over undirected edges, each counted once.
    pub fn total_edge_weight(&self) -> f64 {
        self.total_edge_weight
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.n() {
            Err(Error::IndexOutOfRange { index: i, n: self.n() })
        } else {
            Ok(())
        }
    }
}

/// Build a graph from edge records. Node indexing is the sorted order of ids.
pub fn load_graph<I>(records: I) -> Result<WeightedGraph>
where
    I: IntoIterator<Item = EdgeRecord>,
{
    load_graph_with_nodes(records, std::iter::empty::<String>())
}

/// As [`load_graph`], additionally registering `extra_ids` (isolated nodes allowed).
pub fn load_graph_with_nodes<I, J, S>(records: I, extra_ids: J) -> Result<WeightedGraph>
where
    I: IntoIterator<Item = EdgeRecord>,
    J: IntoIterator<Item = S>,
    S: Into<String>,
{
    let records: Vec<EdgeRecord> = records.into_iter().collect();
    let mut ids: BTreeSet<String> = extra_ids.into_iter().map(Into::into).collect();
    for r in &records {
        if !r.weight.is_finite() {
            return Err(Error::NonFiniteWeight { record: r.to_string() });
        }
        if r.weight < 0.0 {
            return Err(Error::NegativeWeight {
                record: r.to_string(),
                weight: r.weight,
            });
        }
        if r.id_a == r.id_b {
            return Err(Error::SelfLoop { record: r.to_string() });
        }
        ids.insert(r.id_a.clone());
        ids.insert(r.id_b.clone());
    }
    let node_ids: Vec<String> = ids.into_iter().collect();
    let index: HashMap<String, usize> = node_ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.clone(), i))
        .collect();

    // canonical (min, max) pair -> first record seen
    let mut seen: HashMap<(usize, usize), usize> = HashMap::with_capacity(records.len());
    let mut rows = vec![Vec::new(); node_ids.len()];
    let mut total = 0.0;
    for (ri, r) in records.iter().enumerate() {
        let (a, b) = (index[&r.id_a], index[&r.id_b]);
        let key = (a.min(b), a.max(b));
        if let Some(&prev) = seen.get(&key) {
            let p = &records[prev];
            if p.weight.to_bits() != r.weight.to_bits() {
                return Err(Error::ConflictingDuplicate {
                    first: p.to_string(),
                    second: r.to_string(),
                });
            }
            continue;
        }
        seen.insert(key, ri);
        if r.weight == 0.0 {
            continue;
        }
        rows[a].push((b, r.weight));
        rows[b].push((a, r.weight));
        total += r.weight;
    }
    let adjacency = SparseMatrix::from_rows(node_ids.len(), rows)?;
    Ok(WeightedGraph {
        node_ids,
        index,
        adjacency,
        total_edge_weight: total,
    })
}

/// Parse the edge-list TSV: `id_a<TAB>id_b<TAB>weight`, `#` comments skipped.
pub fn read_edge_tsv<R: Read>(reader: R, source: &str) -> Result<Vec<EdgeRecord>> {
    let mut out = Vec::new();
    for (ln, line) in BufReader::new(reader).lines().enumerate() {
        let line = line.map_err(|e| Error::io(format!("reading {source}"), e))?;
        let lineno = ln + 1;
        let trimmed = line.trim_end_matches(['\r', '\n']);
        if trimmed.trim().is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                location: format!("{source}:{lineno}"),
                message: format!("expected 3 tab-separated fields, found {}", fields.len()),
            });
        }
        let weight: f64 = fields[2].trim().parse().map_err(|_| Error::Parse {
            location: format!("{source}:{lineno}"),
            message: format!("weight `{}` is not a number", fields[2]),
        })?;
        out.push(EdgeRecord {
            id_a: fields[0].trim().to_string(),
            id_b: fields[1].trim().to_string(),
            weight,
            line: Some(lineno),
        });
    }
    Ok(out)
}

/// Read-only view `W[rows, cols]` with local (position) indices.
pub fn submatrix(graph: &WeightedGraph, rows: &[usize], cols: &[usize]) -> Result<SparseMatrix> {
    let n = graph.n();
    let mut col_pos: Vec<Option<usize>> = vec![None; n];
    for (p, &c) in cols.iter().enumerate() {
        graph.check_index(c)?;
        col_pos[c] = Some(p);
    }
    let mut out = Vec::with_capacity(rows.len());
    for &r in rows {
        graph.check_index(r)?;
        let row: Vec<(usize, f64)> = graph
            .neighbors(r)
            .iter()
            .filter_map(|&(j, w)| col_pos[j].map(|p| (p, w)))
            .collect();
        out.push(row);
    }
    SparseMatrix::from_rows(cols.len(), out)
}

/// `Σ_j w_ij`.
pub fn weighted_degree(graph: &WeightedGraph, i: usize) -> Result<f64> {
    graph.check_index(i)?;
    Ok(graph.neighbors(i).iter().map(|&(_, w)| w).sum())
}

/// Labeled / unlabeled split of the node set.
#[derive(Debug, Clone, PartialEq)]
pub struct NodePartition {
    labeled: Vec<usize>,
    unlabeled: Vec<usize>,
}

impl NodePartition {
    /// Both index lists are sorted; together they must cover `0..n` exactly once.
    pub fn new(n: usize, labeled: &[usize]) -> Result<Self> {
        let mut is_labeled = vec![false; n];
        for &i in labeled {
            if i >= n {
                return Err(Error::IndexOutOfRange { index: i, n });
            }
            if is_labeled[i] {
                return Err(Error::InvalidParameter(format!("node {i} listed twice in L")));
            }
            is_labeled[i] = true;
        }
        let (l, u): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| is_labeled[i]);
        Ok(Self { labeled: l, unlabeled: u })
    }

    pub fn labeled(&self) -> &[usize] {
        &self.labeled
    }

    pub fn unlabeled(&self) -> &[usize] {
        &self.unlabeled
    }

    /// `h = |U|`.
    pub fn h(&self) -> usize {
        self.unlabeled.len()
    }

    pub fn is_runnable(&self) -> bool {
        !self.labeled.is_empty() && !self.unlabeled.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn path_abc() -> WeightedGraph {
        load_graph(vec![EdgeRecord::new("a", "b", 1.0), EdgeRecord::new("b", "c", 1.0)]).unwrap()
    }

    #[test]
    fn single_edge_is_symmetric() {
        let g = load_graph(vec![EdgeRecord::new("a", "b", 1.0)]).unwrap();
        assert_eq!(g.n(), 2);
        assert_eq!(g.weight(0, 1), 1.0);
        assert_eq!(g.weight(1, 0), 1.0);
    }

    #[test]
    fn symmetric_duplicates_merge() {
        let g = load_graph(vec![EdgeRecord::new("a", "b", 1.0), EdgeRecord::new("b", "a", 1.0)]).unwrap();
        assert_eq!(g.n(), 2);
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.weight(1, 0), 1.0);
    }

    #[test]
    fn rejects_bad_records() {
        let err = load_graph(vec![EdgeRecord::new("a", "b", -0.5)]).unwrap_err();
        assert!(err.to_string().contains("negative weight"));
        let err = load_graph(vec![EdgeRecord::new("a", "a", 1.0)]).unwrap_err();
        assert!(matches!(err, Error::SelfLoop { .. }));
        let mut r1 = EdgeRecord::new("a", "b", 1.0);
        r1.line = Some(3);
        let mut r2 = EdgeRecord::new("b", "a", 2.0);
        r2.line = Some(7);
        let msg = load_graph(vec![r1, r2]).unwrap_err().to_string();
        assert!(msg.contains("line 3") && msg.contains("line 7"), "{msg}");
    }

    #[test]
    fn submatrix_lookups() {
        let g = path_abc();
        assert_eq!(submatrix(&g, &[0, 1], &[0, 1]).unwrap().to_dense(), vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
        assert_eq!(submatrix(&g, &[0, 1], &[2]).unwrap().to_dense(), vec![vec![0.0], vec![1.0]]);
        assert_eq!(submatrix(&g, &[0], &[0]).unwrap().to_dense(), vec![vec![0.0]]);
        assert!(submatrix(&g, &[0], &[5]).is_err());
    }

    #[test]
    fn degrees() {
        let g = path_abc();
        assert_eq!(weighted_degree(&g, 1).unwrap(), 2.0);
        let iso = load_graph_with_nodes(vec![EdgeRecord::new("a", "b", 1.0)], ["z"]).unwrap();
        assert_eq!(weighted_degree(&iso, iso.index_of("z").unwrap()).unwrap(), 0.0);
        let star = load_graph(vec![
            EdgeRecord::new("c", "x", 1.0),
            EdgeRecord::new("c", "y", 1.0),
            EdgeRecord::new("c", "z", 1.0),
        ])
        .unwrap();
        assert_eq!(weighted_degree(&star, star.index_of("c").unwrap()).unwrap(), 3.0);
        assert!(weighted_degree(&star, 9).is_err());
    }

    #[test]
    fn tsv_parsing_skips_comments() {
        let text = "# header\na\tb\t0.5\n\nb\tc\t2\n";
        let recs = read_edge_tsv(text.as_bytes(), "mem").unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[1].line, Some(4));
        assert!(read_edge_tsv("a\tb\n".as_bytes(), "mem").is_err());
        assert!(read_edge_tsv("a\tb\tx\n".as_bytes(), "mem").is_err());
    }

    #[test]
    fn partition_covers_nodes() {
        let p = NodePartition::new(5, &[3, 0]).unwrap();
        assert_eq!(p.labeled(), &[0, 3]);
        assert_eq!(p.unlabeled(), &[1, 2, 4]);
        assert_eq!(p.h(), 3);
        assert!(p.is_runnable());
        assert!(NodePartition::new(2, &[0, 0]).is_err());
    }

    proptest! {
        #[test]
        fn handshake_and_view_symmetry(edges in proptest::collection::vec((0usize..12, 0usize..12, 0.0f64..5.0), 0..40)) {
            let recs: Vec<EdgeRecord> = edges.iter()
                .filter(|(a, b, _)| a != b)
                .map(|&(a, b, w)| EdgeRecord::new(format!("n{a:02}"), format!("n{b:02}"), w))
                .collect();
            // conflicting duplicates are rejected; keep only the first record per pair
            let mut seen = std::collections::HashSet::new();
            let recs: Vec<EdgeRecord> = recs.into_iter().filter(|r| {
                let key = if r.id_a < r.id_b { (r.id_a.clone(), r.id_b.clone()) } else { (r.id_b.clone(), r.id_a.clone()) };
                seen.insert(key)
            }).collect();
            let g = load_graph(recs).unwrap();
            let deg_sum: f64 = (0..g.n()).map(|i| weighted_degree(&g, i).unwrap()).sum();
            prop_assert!((deg_sum - 2.0 * g.total_edge_weight()).abs() <= 1e-12 * deg_sum.max(1.0));
            for i in 0..g.n() {
                for j in 0..g.n() {
                    let a = submatrix(&g, &[i], &[j]).unwrap().get(0, 0);
                    let b = submatrix(&g, &[j], &[i]).unwrap().get(0, 0);
                    prop_assert_eq!(a.to_bits(), b.to_bits());
                }
                prop_assert_eq!(g.weight(i, i), 0.0);
            }
        }
    }
}
