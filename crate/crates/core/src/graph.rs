//! Undirected labeled graphs, datasets of graphs, and homophily analytics.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::nn::Matrix;
use crate::scalar::Scalar;

/// Undirected labeled graph. No self-loops, no duplicate edges; the edge
/// list stores each edge once as `(min, max)` and adjacency lists are kept
/// sorted, so iteration order is a function of the structure alone.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    num_nodes: usize,
    node_labels: Vec<usize>,
    edges: Vec<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
}

impl Graph {
    /// Builds a graph from an edge list. Reversed duplicates such as
    /// `(1,2)` and `(2,1)` collapse into one undirected edge; self-loops
    /// and out-of-range endpoints are rejected.
    pub fn new(num_nodes: usize, node_labels: Vec<usize>, edges: &[(usize, usize)]) -> Result<Self> {
        if node_labels.len() != num_nodes {
            return Err(Error::InvalidArgument(format!(
                "{} labels for {} nodes",
                node_labels.len(),
                num_nodes
            )));
        }
        let mut canonical = BTreeSet::new();
        for &(u, v) in edges {
            if u >= num_nodes {
                return Err(Error::InvalidNodeIndex { index: u, num_nodes });
            }
            if v >= num_nodes {
                return Err(Error::InvalidNodeIndex { index: v, num_nodes });
            }
            if u == v {
                return Err(Error::InvalidArgument(format!("self-loop at node {u}")));
            }
            canonical.insert((u.min(v), u.max(v)));
        }
        let edges: Vec<(usize, usize)> = canonical.into_iter().collect();
        let mut neighbors = vec![Vec::new(); num_nodes];
        for &(u, v) in &edges {
            neighbors[u].push(v);
            neighbors[v].push(u);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        Ok(Graph {
            num_nodes,
            node_labels,
            edges,
            neighbors,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn label(&self, v: usize) -> usize {
        self.node_labels[v]
    }

    pub fn labels(&self) -> &[usize] {
        &self.node_labels
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.neighbors[v].len()
    }

    /// Dense 0/1 adjacency view: symmetric, zero diagonal.
    pub fn adjacency<T: Scalar>(&self) -> Matrix<T> {
        let mut a = Matrix::zeros(self.num_nodes, self.num_nodes);
        for &(u, v) in &self.edges {
            a.set(u, v, T::one());
            a.set(v, u, T::one());
        }
        a
    }

    /// Relabels nodes: node `v` becomes node `perm[v]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Graph> {
        if perm.len() != self.num_nodes {
            return Err(Error::InvalidArgument(format!(
                "permutation of length {} for {} nodes",
                perm.len(),
                self.num_nodes
            )));
        }
        let mut seen = vec![false; self.num_nodes];
        for &p in perm {
            if p >= self.num_nodes || seen[p] {
                return Err(Error::InvalidArgument("not a permutation".into()));
            }
            seen[p] = true;
        }
        let mut labels = vec![0; self.num_nodes];
        for v in 0..self.num_nodes {
            labels[perm[v]] = self.node_labels[v];
        }
        let edges: Vec<(usize, usize)> = self
            .edges
            .iter()
            .map(|&(u, v)| (perm[u], perm[v]))
            .collect();
        Graph::new(self.num_nodes, labels, &edges)
    }

    /// Applies a bijection to the label values, leaving structure intact.
    pub fn relabeled(&self, map: impl Fn(usize) -> usize) -> Graph {
        let mut g = self.clone();
        for l in &mut g.node_labels {
            *l = map(*l);
        }
        g
    }
}

/// Bookkeeping from the loader that pure validation cannot re-derive.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LoadNotes {
    pub self_loops_dropped: usize,
    pub asymmetric_edges: usize,
}

/// Named collection of graphs with class labels and a shared node-label
/// alphabet. Node labels inside member graphs are alphabet indices in
/// `[0, alphabet.len())`; `label_alphabet()[i]` recovers the raw symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    graphs: Vec<Graph>,
    graph_labels: Vec<usize>,
    num_classes: usize,
    label_alphabet: Vec<i64>,
    max_nodes: usize,
    degree_proxy: bool,
    pub(crate) load_notes: LoadNotes,
}

impl Dataset {
    /// Assembles a dataset from already-built graphs. Node labels are
    /// remapped to indices of the ascending alphabet of distinct values;
    /// graph labels must already be contiguous class indices.
    pub fn from_graphs(
        name: impl Into<String>,
        graphs: Vec<Graph>,
        graph_labels: Vec<usize>,
    ) -> Result<Dataset> {
        if graphs.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if graphs.len() != graph_labels.len() {
            return Err(Error::InvalidArgument(format!(
                "{} graphs but {} graph labels",
                graphs.len(),
                graph_labels.len()
            )));
        }
        let alphabet: Vec<i64> = graphs
            .iter()
            .flat_map(|g| g.labels().iter().map(|&l| l as i64))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let mut graphs = graphs;
        for g in &mut graphs {
            for l in &mut g.node_labels {
                *l = alphabet.binary_search(&(*l as i64)).expect("label in alphabet");
            }
        }
        let num_classes = graph_labels.iter().max().copied().unwrap_or(0) + 1;
        let max_nodes = graphs.iter().map(Graph::num_nodes).max().unwrap_or(0);
        Ok(Dataset {
            name: name.into(),
            graphs,
            graph_labels,
            num_classes,
            label_alphabet: alphabet,
            max_nodes,
            degree_proxy: false,
            load_notes: LoadNotes::default(),
        })
    }

    pub(crate) fn from_parts(
        name: String,
        graphs: Vec<Graph>,
        graph_labels: Vec<usize>,
        num_classes: usize,
        label_alphabet: Vec<i64>,
        degree_proxy: bool,
        load_notes: LoadNotes,
    ) -> Dataset {
        let max_nodes = graphs.iter().map(Graph::num_nodes).max().unwrap_or(0);
        Dataset {
            name,
            graphs,
            graph_labels,
            num_classes,
            label_alphabet,
            max_nodes,
            degree_proxy,
            load_notes,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    pub fn graphs(&self) -> &[Graph] {
        &self.graphs
    }

    pub fn graph(&self, i: usize) -> &Graph {
        &self.graphs[i]
    }

    pub fn graph_label(&self, i: usize) -> usize {
        self.graph_labels[i]
    }

    pub fn graph_labels(&self) -> &[usize] {
        &self.graph_labels
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn label_alphabet(&self) -> &[i64] {
        &self.label_alphabet
    }

    pub fn num_node_labels(&self) -> usize {
        self.label_alphabet.len()
    }

    /// Size of the largest graph; the common padded size for readout.
    pub fn max_nodes(&self) -> usize {
        self.max_nodes
    }

    /// True when node labels were synthesized from degrees because the
    /// source data carries no labels.
    pub fn degree_proxy(&self) -> bool {
        self.degree_proxy
    }
}

/// Which population a dataset-level homophily summary aggregates over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Population {
    /// All nodes of all graphs pooled together.
    PerNode,
    /// One beta value per graph.
    PerGraph,
}

/// Homophily summary for a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct HomophilyStats {
    pub per_node_alphas: Vec<f64>,
    pub per_graph_betas: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

/// Fraction of `v`'s neighbors sharing its label. Isolated nodes get 0.
pub fn node_homophily(g: &Graph, v: usize) -> Result<f64> {
    if v >= g.num_nodes() {
        return Err(Error::InvalidNodeIndex {
            index: v,
            num_nodes: g.num_nodes(),
        });
    }
    let neighbors = g.neighbors(v);
    if neighbors.is_empty() {
        log::debug!("isolated node {v}: homophily ratio defined as 0");
        return Ok(0.0);
    }
    let same = neighbors.iter().filter(|&&u| g.label(u) == g.label(v)).count();
    Ok(same as f64 / neighbors.len() as f64)
}

/// Mean node homophily over all nodes of the graph.
pub fn graph_homophily(g: &Graph) -> Result<f64> {
    if g.num_nodes() == 0 {
        return Err(Error::EmptyGraph);
    }
    let mut sum = 0.0;
    for v in 0..g.num_nodes() {
        sum += node_homophily(g, v)?;
    }
    Ok(sum / g.num_nodes() as f64)
}

/// Mean and population standard deviation of the homophily ratio over the
/// chosen population. Both raw populations are returned alongside.
pub fn dataset_homophily(d: &Dataset, population: Population) -> Result<HomophilyStats> {
    if d.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut per_node_alphas = Vec::new();
    let mut per_graph_betas = Vec::with_capacity(d.len());
    let mut isolated = 0usize;
    for g in d.graphs() {
        let mut sum = 0.0;
        for v in 0..g.num_nodes() {
            if g.degree(v) == 0 {
                isolated += 1;
            }
            let alpha = node_homophily(g, v)?;
            per_node_alphas.push(alpha);
            sum += alpha;
        }
        if g.num_nodes() > 0 {
            per_graph_betas.push(sum / g.num_nodes() as f64);
        }
    }
    if isolated > 0 {
        log::warn!(
            "{}: {isolated} isolated node(s); their homophily ratio is defined as 0",
            d.name()
        );
    }
    let values = match population {
        Population::PerNode => &per_node_alphas,
        Population::PerGraph => &per_graph_betas,
    };
    let (mean, std) = mean_std(values);
    Ok(HomophilyStats {
        per_node_alphas,
        per_graph_betas,
        mean,
        std,
    })
}

/// One histogram bin over the homophily ratio range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

/// Histogram of per-node homophily ratios. Bins are left-closed and
/// right-open except the last, which is closed so 1.0 lands in it.
pub fn homophily_histogram(d: &Dataset, num_bins: usize) -> Result<Vec<HistogramBin>> {
    if num_bins == 0 {
        return Err(Error::InvalidArgument("num_bins must be at least 1".into()));
    }
    let stats = dataset_homophily(d, Population::PerNode)?;
    let mut bins: Vec<HistogramBin> = (0..num_bins)
        .map(|b| HistogramBin {
            lo: b as f64 / num_bins as f64,
            hi: (b + 1) as f64 / num_bins as f64,
            count: 0,
        })
        .collect();
    for &alpha in &stats.per_node_alphas {
        let idx = ((alpha * num_bins as f64).floor() as usize).min(num_bins - 1);
        bins[idx].count += 1;
    }
    Ok(bins)
}

/// Table-style dataset summary.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetStats {
    pub size: usize,
    pub num_classes: usize,
    pub avg_nodes: f64,
    pub avg_edges: f64,
    pub num_node_labels: usize,
}

pub fn dataset_stats(d: &Dataset) -> Result<DatasetStats> {
    if d.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = d.len() as f64;
    Ok(DatasetStats {
        size: d.len(),
        num_classes: d.num_classes(),
        avg_nodes: d.graphs().iter().map(|g| g.num_nodes() as f64).sum::<f64>() / n,
        avg_edges: d.graphs().iter().map(|g| g.num_edges() as f64).sum::<f64>() / n,
        num_node_labels: d.num_node_labels(),
    })
}

/// One-hot node features per graph: row `v` has a single 1 at the alphabet
/// index of node `v`'s label; the width is the alphabet size.
pub fn one_hot_features<T: Scalar>(d: &Dataset) -> Vec<Matrix<T>> {
    let c = d.num_node_labels();
    d.graphs()
        .iter()
        .map(|g| {
            let mut x = Matrix::zeros(g.num_nodes(), c);
            for v in 0..g.num_nodes() {
                x.set(v, g.label(v), T::one());
            }
            x
        })
        .collect()
}

pub(crate) fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle(labels: [usize; 3]) -> Graph {
        Graph::new(3, labels.to_vec(), &[(0, 1), (1, 2), (0, 2)]).unwrap()
    }

    #[test]
    fn heterophilous_node_has_zero_homophily() {
        // Center-left node of the first example pair: label 4, neighbor
        // labels {1,1,3}.
        let g = Graph::new(
            4,
            vec![4, 1, 1, 3],
            &[(0, 1), (0, 2), (0, 3)],
        )
        .unwrap();
        assert_eq!(node_homophily(&g, 0).unwrap(), 0.0);
    }

    #[test]
    fn uniform_neighborhood_has_full_homophily() {
        let g = Graph::new(3, vec![5, 5, 5], &[(0, 1), (0, 2)]).unwrap();
        assert_eq!(node_homophily(&g, 0).unwrap(), 1.0);
    }

    #[test]
    fn triangle_node_homophily_by_hand() {
        let g = triangle([1, 1, 2]);
        assert_eq!(node_homophily(&g, 2).unwrap(), 0.0);
        assert_eq!(node_homophily(&g, 0).unwrap(), 0.5);
        assert_eq!(node_homophily(&g, 1).unwrap(), 0.5);
    }

    #[test]
    fn invalid_node_index_is_an_error() {
        let g = triangle([1, 1, 2]);
        assert!(matches!(
            node_homophily(&g, 3),
            Err(Error::InvalidNodeIndex { index: 3, .. })
        ));
    }

    #[test]
    fn graph_homophily_examples() {
        assert_eq!(graph_homophily(&triangle([7, 7, 7])).unwrap(), 1.0);
        let path = Graph::new(2, vec![1, 2], &[(0, 1)]).unwrap();
        assert_eq!(graph_homophily(&path).unwrap(), 0.0);
        let mixed = graph_homophily(&triangle([1, 1, 2])).unwrap();
        assert!((mixed - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn empty_graph_is_an_error() {
        let g = Graph::new(0, vec![], &[]).unwrap();
        assert!(matches!(graph_homophily(&g), Err(Error::EmptyGraph)));
    }

    #[test]
    fn singleton_uniform_dataset_has_unit_homophily() {
        let d = Dataset::from_graphs("t", vec![triangle([3, 3, 3])], vec![0]).unwrap();
        let stats = dataset_homophily(&d, Population::PerGraph).unwrap();
        assert_eq!(stats.mean, 1.0);
        assert_eq!(stats.std, 0.0);
        let stats = dataset_homophily(&d, Population::PerNode).unwrap();
        assert_eq!(stats.mean, 1.0);
        assert_eq!(stats.std, 0.0);
    }

    #[test]
    fn beta_is_mean_of_alphas() {
        let d = Dataset::from_graphs(
            "t",
            vec![triangle([1, 1, 2]), triangle([1, 2, 3])],
            vec![0, 1],
        )
        .unwrap();
        let stats = dataset_homophily(&d, Population::PerGraph).unwrap();
        for (i, g) in d.graphs().iter().enumerate() {
            assert_eq!(stats.per_graph_betas[i], graph_homophily(g).unwrap());
        }
    }

    #[test]
    fn histogram_puts_uniform_labels_in_last_bin() {
        let d = Dataset::from_graphs("t", vec![triangle([1, 1, 1])], vec![0]).unwrap();
        let bins = homophily_histogram(&d, 10).unwrap();
        assert_eq!(bins[9].count, 3);
        assert_eq!(bins.iter().map(|b| b.count).sum::<usize>(), 3);
    }

    #[test]
    fn histogram_two_bins_for_mixed_triangle() {
        let d = Dataset::from_graphs("t", vec![triangle([1, 1, 2])], vec![0]).unwrap();
        let bins = homophily_histogram(&d, 2).unwrap();
        assert_eq!(bins[0].count, 1);
        assert_eq!(bins[1].count, 2);
    }

    #[test]
    fn zero_bins_is_an_error() {
        let d = Dataset::from_graphs("t", vec![triangle([1, 1, 2])], vec![0]).unwrap();
        assert!(homophily_histogram(&d, 0).is_err());
    }

    #[test]
    fn stats_for_singleton_triangle() {
        let d = Dataset::from_graphs("t", vec![triangle([1, 1, 2])], vec![0]).unwrap();
        let s = dataset_stats(&d).unwrap();
        assert_eq!(s.size, 1);
        assert_eq!(s.avg_nodes, 3.0);
        assert_eq!(s.avg_edges, 3.0);
        assert_eq!(s.num_node_labels, 2);
    }

    #[test]
    fn one_hot_rows_are_unit_vectors() {
        let d = Dataset::from_graphs(
            "t",
            vec![triangle([10, 20, 10]), triangle([30, 10, 20])],
            vec![0, 1],
        )
        .unwrap();
        // Alphabet is {10, 20, 30} ascending.
        let feats = one_hot_features::<f64>(&d);
        assert_eq!(feats[0].cols(), 3);
        assert_eq!(feats[0].row(0), &[1.0, 0.0, 0.0]);
        assert_eq!(feats[0].row(1), &[0.0, 1.0, 0.0]);
        assert_eq!(feats[1].row(0), &[0.0, 0.0, 1.0]);
        for x in &feats {
            for i in 0..x.rows() {
                assert_eq!(x.row(i).iter().sum::<f64>(), 1.0);
            }
        }
    }

    #[test]
    fn first_alphabet_symbol_maps_to_leading_one() {
        let g = Graph::new(1, vec![42], &[]).unwrap();
        let d = Dataset::from_graphs("t", vec![g], vec![0]).unwrap();
        let feats = one_hot_features::<f64>(&d);
        assert_eq!(feats[0].row(0), &[1.0]);
    }

    #[test]
    fn duplicate_and_reversed_edges_collapse() {
        let g = Graph::new(3, vec![0, 0, 0], &[(0, 1), (1, 0), (1, 2), (1, 2)]).unwrap();
        assert_eq!(g.num_edges(), 2);
    }

    #[test]
    fn self_loop_rejected_by_constructor() {
        assert!(Graph::new(2, vec![0, 0], &[(1, 1)]).is_err());
    }
}
