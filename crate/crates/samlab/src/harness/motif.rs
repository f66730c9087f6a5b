//! Synthetic motif-graph dataset: random graphs labeled by triangle content.
//!
//! A desk-scale stand-in for molecular property benchmarks: the property to
//! predict is structural (does the graph contain a triangle; how dense are
//! triangles relative to nodes), which a message-passing model can learn from
//! degree-based node features while staying cheap enough for tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::autodiff::Tensor;
use crate::models::GraphSample;

use super::HarnessError;

/// Counts triangles by exhaustive enumeration of node triples. Edges may be
/// listed in either or both directions; duplicates collapse into one
/// undirected adjacency.
pub fn count_triangles(num_nodes: usize, edges: &[(usize, usize)]) -> usize {
    let mut adj = vec![false; num_nodes * num_nodes];
    for &(u, v) in edges {
        if u != v && u < num_nodes && v < num_nodes {
            adj[u * num_nodes + v] = true;
            adj[v * num_nodes + u] = true;
        }
    }
    let mut count = 0;
    for i in 0..num_nodes {
        for j in (i + 1)..num_nodes {
            if !adj[i * num_nodes + j] {
                continue;
            }
            for k in (j + 1)..num_nodes {
                if adj[i * num_nodes + k] && adj[j * num_nodes + k] {
                    count += 1;
                }
            }
        }
    }
    count
}

/// Removes edges until the graph is triangle-free: repeatedly finds the first
/// triangle in ascending node order and deletes its highest edge. Determinism
/// matters more than minimality here — the same input always loses the same
/// edges.
fn break_triangles(num_nodes: usize, pairs: &mut Vec<(usize, usize)>) {
    loop {
        let mut adj = vec![false; num_nodes * num_nodes];
        for &(u, v) in pairs.iter() {
            adj[u * num_nodes + v] = true;
            adj[v * num_nodes + u] = true;
        }
        let mut found = None;
        'search: for i in 0..num_nodes {
            for j in (i + 1)..num_nodes {
                if !adj[i * num_nodes + j] {
                    continue;
                }
                for k in (j + 1)..num_nodes {
                    if adj[i * num_nodes + k] && adj[j * num_nodes + k] {
                        found = Some((j, k));
                        break 'search;
                    }
                }
            }
        }
        match found {
            Some(edge) => pairs.retain(|&p| p != edge),
            None => return,
        }
    }
}

fn degrees(num_nodes: usize, pairs: &[(usize, usize)]) -> Vec<usize> {
    let mut deg = vec![0usize; num_nodes];
    for &(u, v) in pairs {
        deg[u] += 1;
        deg[v] += 1;
    }
    deg
}

/// Node feature dimension produced by the generator.
pub const MOTIF_NODE_DIM: usize = 4;
/// Edge feature dimension produced by the generator.
pub const MOTIF_EDGE_DIM: usize = 2;

/// Generates `n` random graphs of 8–20 nodes with Erdős–Rényi edges at
/// p = 0.25, labeled 1 when the graph contains a triangle and 0 otherwise
/// (exhaustive enumeration, no heuristics).
///
/// At this density almost every raw draw contains a triangle, which would
/// leave nothing to classify, so every second graph has its triangles broken
/// (deterministically, see `break_triangles`) before labeling. That pins the
/// label balance near one half while keeping the positive class purely
/// random.
///
/// Node features are structural: `[1, degree, mean neighbor degree, size]`
/// (degree terms normalized by `n - 1`, size by the maximum node count).
/// Edge features are `[1, normalized degree gap]`, identical for both
/// directions of an undirected edge.
pub fn generate_motif_graphs(n: usize, seed: u64) -> Result<Vec<GraphSample>, HarnessError> {
    if n == 0 {
        return Err(HarnessError::Config(
            "motif generator needs at least one sample".to_string(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(n);
    for index in 0..n {
        let num_nodes: usize = rng.random_range(8..=20);
        let mut pairs = Vec::new();
        for u in 0..num_nodes {
            for v in (u + 1)..num_nodes {
                if rng.random_bool(0.25) {
                    pairs.push((u, v));
                }
            }
        }
        if index % 2 == 1 {
            break_triangles(num_nodes, &mut pairs);
        }

        let deg = degrees(num_nodes, &pairs);
        let norm = (num_nodes - 1) as f64;
        let mut node_rows = Vec::with_capacity(num_nodes * MOTIF_NODE_DIM);
        for u in 0..num_nodes {
            let neighbor_deg_sum: usize = pairs
                .iter()
                .filter_map(|&(a, b)| {
                    if a == u {
                        Some(deg[b])
                    } else if b == u {
                        Some(deg[a])
                    } else {
                        None
                    }
                })
                .sum();
            let mean_neighbor = if deg[u] == 0 {
                0.0
            } else {
                neighbor_deg_sum as f64 / deg[u] as f64
            };
            node_rows.extend_from_slice(&[
                1.0,
                deg[u] as f64 / norm,
                mean_neighbor / norm,
                num_nodes as f64 / 20.0,
            ]);
        }

        let mut edges = Vec::with_capacity(2 * pairs.len());
        let mut edge_rows = Vec::with_capacity(2 * pairs.len() * MOTIF_EDGE_DIM);
        for &(u, v) in &pairs {
            let gap = (deg[u] as f64 - deg[v] as f64).abs() / norm;
            edges.push((u, v));
            edge_rows.extend_from_slice(&[1.0, gap]);
            edges.push((v, u));
            edge_rows.extend_from_slice(&[1.0, gap]);
        }

        let label = if count_triangles(num_nodes, &edges) > 0 {
            1.0
        } else {
            0.0
        };
        samples.push(GraphSample::new(
            num_nodes,
            Tensor::new(num_nodes, MOTIF_NODE_DIM, node_rows)?,
            edges,
            Tensor::new(2 * pairs.len(), MOTIF_EDGE_DIM, edge_rows)?,
            label,
            false,
        )?);
    }
    Ok(samples)
}

/// Swaps each sample's label for the regression target of the same task:
/// triangle count divided by node count. Graph structure and features are
/// untouched, so classification and regression runs see identical inputs.
pub fn relabel_for_regression(samples: &[GraphSample]) -> Vec<GraphSample> {
    samples
        .iter()
        .map(|s| {
            let mut out = s.clone();
            out.label = count_triangles(s.num_nodes, &s.edges) as f64 / s.num_nodes as f64;
            out
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn a_three_cycle_is_one_triangle() {
        assert_eq!(count_triangles(3, &[(0, 1), (1, 2), (2, 0)]), 1);
        // Direction and duplication don't matter.
        assert_eq!(
            count_triangles(3, &[(0, 1), (1, 0), (1, 2), (2, 1), (2, 0), (0, 2)]),
            1
        );
    }

    #[test]
    fn trees_and_paths_are_triangle_free() {
        // A star and a path: acyclic, so zero triangles.
        assert_eq!(count_triangles(5, &[(0, 1), (0, 2), (0, 3), (0, 4)]), 0);
        assert_eq!(count_triangles(4, &[(0, 1), (1, 2), (2, 3)]), 0);
    }

    #[test]
    fn complete_four_graph_has_four_triangles() {
        let k4 = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
        assert_eq!(count_triangles(4, &k4), 4);
    }

    #[test]
    fn thousand_samples_are_balanced_and_reproducible() {
        let a = generate_motif_graphs(1000, 17).unwrap();
        let positives = a.iter().filter(|s| s.label == 1.0).count() as f64 / 1000.0;
        assert!(
            (0.3..=0.7).contains(&positives),
            "label balance {positives} outside [0.3, 0.7]"
        );
        let b = generate_motif_graphs(1000, 17).unwrap();
        assert_eq!(a, b);
        let c = generate_motif_graphs(1000, 18).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn samples_have_the_documented_shape() {
        for s in generate_motif_graphs(50, 3).unwrap() {
            assert!((8..=20).contains(&s.num_nodes));
            assert_eq!(s.node_dim(), MOTIF_NODE_DIM);
            assert_eq!(s.edge_dim(), MOTIF_EDGE_DIM);
            // Undirected storage: every edge appears in both directions with
            // identical features.
            assert_eq!(s.edges.len() % 2, 0);
            for i in (0..s.edges.len()).step_by(2) {
                let (u, v) = s.edges[i];
                assert_eq!(s.edges[i + 1], (v, u));
                for d in 0..MOTIF_EDGE_DIM {
                    assert_eq!(s.edge_features.get(i, d), s.edge_features.get(i + 1, d));
                }
            }
            assert!(s.label == 0.0 || s.label == 1.0);
        }
    }

    #[test]
    fn labels_match_a_direct_recount() {
        for s in generate_motif_graphs(200, 23).unwrap() {
            let expected = if count_triangles(s.num_nodes, &s.edges) > 0 {
                1.0
            } else {
                0.0
            };
            assert_eq!(s.label, expected);
        }
    }

    #[test]
    fn regression_relabeling_divides_triangles_by_nodes() {
        let samples = generate_motif_graphs(100, 5).unwrap();
        let relabeled = relabel_for_regression(&samples);
        for (orig, re) in samples.iter().zip(&relabeled) {
            let triangles = count_triangles(orig.num_nodes, &orig.edges);
            assert_eq!(re.label, triangles as f64 / orig.num_nodes as f64);
            assert_eq!(re.edges, orig.edges);
            // Classification label 1 exactly when the regression target > 0.
            assert_eq!(orig.label == 1.0, re.label > 0.0);
        }
    }
}
