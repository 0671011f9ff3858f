//! Bundled graphs and synthetic datasets used by the CLI, the test suites,
//! and the documentation examples.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{Dataset, Graph};

/// The six-node pair distinguished by a single round of 1-WL refinement.
/// Node labels are drawn from {1,2,3,4}; the two graphs share the label
/// multiset but differ structurally.
pub fn fig2_pair() -> (Graph, Graph) {
    let g1 = Graph::new(
        6,
        vec![1, 1, 3, 3, 4, 2],
        &[(3, 5), (0, 4), (1, 4), (2, 3), (2, 4), (2, 5)],
    )
    .expect("first bundled graph is valid");
    let g2 = Graph::new(
        6,
        vec![1, 1, 3, 2, 4, 3],
        &[(5, 3), (4, 0), (1, 0), (4, 5), (0, 2), (5, 2)],
    )
    .expect("second bundled graph is valid");
    (g1, g2)
}

/// Erdős–Rényi graph with uniformly random labels in `[0, num_labels)`.
pub fn random_graph(
    num_nodes: usize,
    edge_prob: f64,
    num_labels: usize,
    rng: &mut impl Rng,
) -> Graph {
    let labels: Vec<usize> = (0..num_nodes)
        .map(|_| rng.random_range(0..num_labels.max(1)))
        .collect();
    let mut edges = Vec::new();
    for u in 0..num_nodes {
        for v in (u + 1)..num_nodes {
            if rng.random::<f64>() < edge_prob {
                edges.push((u, v));
            }
        }
    }
    Graph::new(num_nodes, labels, &edges).expect("generated edges are valid")
}

/// A uniformly random permutation of `0..n`.
pub fn random_permutation(n: usize, rng: &mut impl Rng) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    perm
}

/// Trivially separable two-class dataset: every node of a class-0 graph
/// carries label 0, every node of a class-1 graph carries label 1.
/// Structures are random so only the features separate the classes.
pub fn separable_dataset(class0: usize, class1: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut graphs = Vec::new();
    let mut labels = Vec::new();
    for (class, count) in [(0usize, class0), (1usize, class1)] {
        for _ in 0..count {
            let n = rng.random_range(4..=8);
            let structure = random_graph(n, 0.4, 1, &mut rng);
            let g = structure.relabeled(|_| class);
            graphs.push(g);
            labels.push(class);
        }
    }
    Dataset::from_graphs("separable", graphs, labels).expect("nonempty synthetic dataset")
}

/// Dataset whose class depends only on the node-label multiset (majority
/// label wins), never on structure. A sum readout sees everything a sorted
/// concatenation sees here.
pub fn multiset_dataset(count: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut graphs = Vec::new();
    let mut labels = Vec::new();
    for _ in 0..count {
        let n = rng.random_range(5..=9);
        // Draw a biased label multiset so the majority is decisive.
        let majority = rng.random_range(0..2usize);
        let g = random_graph(n, 0.35, 1, &mut rng).relabeled(|_| 0);
        let mut node_labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..2)).collect();
        let need = n / 2 + 1;
        let mut have = node_labels.iter().filter(|&&l| l == majority).count();
        let mut v = 0;
        while have < need {
            if node_labels[v] != majority {
                node_labels[v] = majority;
                have += 1;
            }
            v += 1;
        }
        let g = Graph::new(n, node_labels.clone(), g.edges()).expect("relabel keeps structure");
        graphs.push(g);
        labels.push(majority);
    }
    Dataset::from_graphs("multiset", graphs, labels).expect("nonempty synthetic dataset")
}
