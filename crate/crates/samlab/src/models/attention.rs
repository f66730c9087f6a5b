use crate::autodiff::{NodeId, Tape, Tensor};

use super::config::{ModelConfig, ModelKind, TaskKind};
use super::error::ModelError;
use super::graph::{Batch, GraphSample};

/// Records the graph-attention loss for one batch of graphs.
///
/// Per graph: node features are projected to the hidden width
/// (`tanh(X W_in + b_in)`), then each layer computes single-head scaled
/// dot-product attention where node `v` attends over its in-neighbors
/// (edges `u -> v`) plus itself when `config.self_loops` is set. Edge
/// features enter as an additive scalar bias on the attention scores. Layer
/// output rows are convex combinations of the value projections; a node with
/// an empty neighborhood passes its state through unchanged. The readout is
/// the mean over node states followed by a linear head, one scalar per graph.
///
/// Marked probe nodes, readable after `forward`:
/// * `attention.g{i}.l{l}` — the `[n x n]` attention matrix of graph `i`,
///   layer `l` (row `v`, column `u`).
/// * `states.g{i}.l{l}` — the `[n x hidden]` node states after that layer.
/// * `outputs` — the `[batch x 1]` logits/predictions.
pub fn build_attention_loss(config: &ModelConfig, batch: &Batch) -> Result<Tape, ModelError> {
    config.validate()?;
    if config.kind != ModelKind::GraphAttention {
        return Err(ModelError::Config(
            "build_attention_loss needs a ModelKind::GraphAttention config".to_string(),
        ));
    }
    let samples = match batch {
        Batch::Graphs { samples, .. } => samples,
        Batch::Vectors { .. } => {
            return Err(ModelError::BatchMismatch(
                "graph-attention expects a graph batch, got vectors".to_string(),
            ))
        }
    };
    if samples.is_empty() {
        return Err(ModelError::EmptyBatch);
    }
    for (i, s) in samples.iter().enumerate() {
        if s.node_dim() != config.input_dim {
            return Err(ModelError::BatchMismatch(format!(
                "graph {} has node dim {}, model expects {}",
                i,
                s.node_dim(),
                config.input_dim
            )));
        }
        if !s.edges.is_empty() && s.edge_dim() != config.edge_dim {
            return Err(ModelError::BatchMismatch(format!(
                "graph {} has edge dim {}, model expects {}",
                i,
                s.edge_dim(),
                config.edge_dim
            )));
        }
    }

    let h = config.hidden_dim;
    let mut tape = Tape::new();
    let mut readouts = Vec::with_capacity(samples.len());
    for (gi, sample) in samples.iter().enumerate() {
        let state = embed_nodes(&mut tape, config, sample)?;
        let mut state = state;
        for l in 0..config.num_layers {
            state = attention_layer(&mut tape, config, sample, state, gi, l)?;
        }
        readouts.push(tape.mean_over_rows(state));
    }
    let stacked = tape.concat_rows(&readouts)?;
    let head_w = tape.param("head.w", h, 1)?;
    let head_b = tape.param("head.b", 1, 1)?;
    let out = tape.matmul(stacked, head_w)?;
    let out = tape.add_row_broadcast(out, head_b)?;
    tape.mark("outputs", out);

    let labels: Vec<f64> = samples.iter().map(|s| s.label).collect();
    let target = Tensor::new(labels.len(), 1, labels)?;
    let loss = match config.task {
        TaskKind::Classification => tape.logistic_cross_entropy_mean(out, target)?,
        TaskKind::Regression => tape.squared_error_mean(out, target)?,
    };
    tape.set_loss(loss)?;
    Ok(tape)
}

fn embed_nodes(tape: &mut Tape, config: &ModelConfig, sample: &GraphSample) -> Result<NodeId, ModelError> {
    let x = tape.constant(sample.node_features.clone());
    let w = tape.param("in.w", config.input_dim, config.hidden_dim)?;
    let b = tape.param("in.b", 1, config.hidden_dim)?;
    let z = tape.matmul(x, w)?;
    let z = tape.add_row_broadcast(z, b)?;
    Ok(tape.tanh(z))
}

fn attention_layer(
    tape: &mut Tape,
    config: &ModelConfig,
    sample: &GraphSample,
    state: NodeId,
    graph_index: usize,
    layer: usize,
) -> Result<NodeId, ModelError> {
    let n = sample.num_nodes;
    let h = config.hidden_dim;
    let wq = tape.param(&format!("attn{}.wq", layer), h, h)?;
    let wk = tape.param(&format!("attn{}.wk", layer), h, h)?;
    let wv = tape.param(&format!("attn{}.wv", layer), h, h)?;

    let q = tape.matmul(state, wq)?;
    let k = tape.matmul(state, wk)?;
    let v = tape.matmul(state, wv)?;
    let kt = tape.transpose(k);
    let scores = tape.matmul(q, kt)?;
    let mut scores = tape.scale(scores, 1.0 / (h as f64).sqrt())?;

    // Additive scalar bias per edge: score(v, u) += e_uv . we.
    if !sample.edges.is_empty() {
        let we = tape.param(&format!("attn{}.we", layer), config.edge_dim, 1)?;
        let feats = tape.constant(sample.edge_features.clone());
        let per_edge = tape.matmul(feats, we)?;
        let positions: Vec<(usize, usize)> = sample.edges.iter().map(|&(u, v)| (v, u)).collect();
        let bias = tape.scatter_to_matrix(per_edge, positions, n, n)?;
        scores = tape.add(scores, bias)?;
    }

    // Row v of the mask lists the nodes v may attend to.
    let mut mask = vec![false; n * n];
    for &(u, v) in &sample.edges {
        mask[v * n + u] = true;
    }
    if config.self_loops {
        for i in 0..n {
            mask[i * n + i] = true;
        }
    }
    let empty_rows: Vec<usize> =
        (0..n).filter(|&v| mask[v * n..(v + 1) * n].iter().all(|&m| !m)).collect();

    let attention = tape.masked_softmax_rows(scores, mask)?;
    tape.mark(&format!("attention.g{}.l{}", graph_index, layer), attention);
    let mut out = tape.matmul(attention, v)?;

    // Nodes with nothing to attend to keep their state unchanged.
    if !empty_rows.is_empty() {
        let mut selector = Tensor::zeros(n, n);
        for &r in &empty_rows {
            selector.set(r, r, 1.0);
        }
        let sel = tape.constant(selector);
        let kept = tape.matmul(sel, state)?;
        out = tape.add(out, kept)?;
    }
    tape.mark(&format!("states.g{}.l{}", graph_index, layer), out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::{finite_difference_gradient, max_relative_error, ParamVector};
    use crate::models::init::init_model;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn config(hidden: usize, layers: usize, self_loops: bool) -> ModelConfig {
        ModelConfig {
            kind: ModelKind::GraphAttention,
            input_dim: 2,
            edge_dim: 1,
            hidden_dim: hidden,
            num_layers: layers,
            task: TaskKind::Regression,
            init_seed: 5,
            self_loops,
        }
    }

    fn graph(
        n: usize,
        features: Vec<f64>,
        edges: Vec<(usize, usize)>,
        edge_features: Vec<f64>,
        label: f64,
    ) -> GraphSample {
        let e = edges.len();
        GraphSample::new(
            n,
            Tensor::new(n, 2, features).unwrap(),
            edges,
            Tensor::new(e, 1, edge_features).unwrap(),
            label,
            false,
        )
        .unwrap()
    }

    /// Independent dense evaluation of one attention layer with plain loops.
    #[allow(clippy::too_many_arguments)]
    fn brute_force_attention(
        state: &[Vec<f64>],
        wq: &[Vec<f64>],
        wk: &[Vec<f64>],
        we: &[f64],
        edges: &[(usize, usize)],
        edge_features: &[Vec<f64>],
        self_loops: bool,
        n: usize,
    ) -> Vec<Vec<f64>> {
        let h = wq[0].len();
        let matvec = |m: &[Vec<f64>], x: &[f64]| -> Vec<f64> {
            (0..m[0].len())
                .map(|j| (0..x.len()).map(|i| x[i] * m[i][j]).sum())
                .collect()
        };
        let mut weights = vec![vec![0.0_f64; n]; n];
        for v in 0..n {
            let qv = matvec(wq, &state[v]);
            let mut neighbors: Vec<usize> = Vec::new();
            let mut scores: Vec<f64> = Vec::new();
            for u in 0..n {
                let is_self = u == v && self_loops;
                let edge = edges.iter().position(|&(a, b)| a == u && b == v);
                if !is_self && edge.is_none() {
                    continue;
                }
                let ku = matvec(wk, &state[u]);
                let mut s: f64 = qv.iter().zip(&ku).map(|(a, b)| a * b).sum::<f64>() / (h as f64).sqrt();
                if let Some(e) = edge {
                    s += edge_features[e].iter().zip(we).map(|(a, b)| a * b).sum::<f64>();
                }
                neighbors.push(u);
                scores.push(s);
            }
            if neighbors.is_empty() {
                continue;
            }
            let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
            let sum: f64 = exps.iter().sum();
            for (u, e) in neighbors.iter().zip(&exps) {
                weights[v][*u] = e / sum;
            }
        }
        weights
    }

    #[test]
    fn single_node_with_self_loop_outputs_its_value_projection() {
        let cfg = config(3, 1, true);
        let sample = GraphSample::new(
            1,
            Tensor::new(1, 2, vec![0.7, -0.4]).unwrap(),
            vec![],
            Tensor::zeros(0, 1),
            0.0,
            false,
        )
        .unwrap();
        let batch = Batch::from_graphs(vec![sample]).unwrap();
        let mut tape = build_attention_loss(&cfg, &batch).unwrap();
        let params = init_model(&cfg).unwrap();
        tape.forward(&params).unwrap();

        // softmax over the single self score is exactly 1
        let a = tape.value(tape.marked("attention.g0.l0").unwrap()).unwrap();
        assert_eq!(a.data(), &[1.0]);

        // layer output equals tanh(x W_in + b_in) W_v, computed by hand
        let win = params.segment_tensor("in.w").unwrap();
        let bin = params.segment("in.b").unwrap();
        let wv = params.segment_tensor("attn0.wv").unwrap();
        let x = [0.7, -0.4];
        let mut hstate = [0.0_f64; 3];
        for j in 0..3 {
            hstate[j] = (x[0] * win.get(0, j) + x[1] * win.get(1, j) + bin[j]).tanh();
        }
        let state = tape.value(tape.marked("states.g0.l0").unwrap()).unwrap();
        for j in 0..3 {
            let expected: f64 = (0..3).map(|i| hstate[i] * wv.get(i, j)).sum();
            assert!((state.get(0, j) - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn identical_neighbors_share_attention_equally() {
        // Node 0 attends over nodes 1 and 2, which carry identical features
        // and identical edge features; no self-loops. Scores tie, so the
        // weights are exactly (1/2, 1/2). Nodes 1 and 2 have empty
        // neighborhoods and pass their state through unchanged.
        let cfg = config(4, 1, false);
        let sample = graph(
            3,
            vec![0.3, -0.9, 1.1, 0.2, 1.1, 0.2],
            vec![(1, 0), (2, 0)],
            vec![0.5, 0.5],
            0.0,
        );
        let batch = Batch::from_graphs(vec![sample]).unwrap();
        let mut tape = build_attention_loss(&cfg, &batch).unwrap();
        let params = init_model(&cfg).unwrap();
        tape.forward(&params).unwrap();

        let a = tape.value(tape.marked("attention.g0.l0").unwrap()).unwrap();
        assert!((a.get(0, 1) - 0.5).abs() < 1e-12);
        assert!((a.get(0, 2) - 0.5).abs() < 1e-12);
        assert_eq!(a.get(0, 0), 0.0);
        for u in 0..3 {
            assert_eq!(a.get(1, u), 0.0);
            assert_eq!(a.get(2, u), 0.0);
        }

        // Passthrough rows keep the embedded state bit for bit: compute the
        // embedding by hand for node 1.
        let win = params.segment_tensor("in.w").unwrap();
        let bin = params.segment("in.b").unwrap();
        let state = tape.value(tape.marked("states.g0.l0").unwrap()).unwrap();
        for j in 0..4 {
            let expected = (1.1 * win.get(0, j) + 0.2 * win.get(1, j) + bin[j]).tanh();
            assert_eq!(state.get(1, j), expected);
        }
    }

    #[test]
    fn star_graph_weights_sum_to_one_and_match_brute_force() {
        let cfg = config(5, 1, true);
        let edges = vec![(0, 1), (1, 0), (0, 2), (2, 0), (0, 3), (3, 0)];
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let features: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
        let edge_features: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
        let sample = graph(4, features.clone(), edges.clone(), edge_features.clone(), 0.0);
        let batch = Batch::from_graphs(vec![sample]).unwrap();
        let mut tape = build_attention_loss(&cfg, &batch).unwrap();
        let params = init_model(&cfg).unwrap();
        tape.forward(&params).unwrap();

        let a = tape.value(tape.marked("attention.g0.l0").unwrap()).unwrap();
        for v in 0..4 {
            let row: f64 = (0..4).map(|u| a.get(v, u)).sum();
            assert!((row - 1.0).abs() < 1e-12, "row {} sums to {}", v, row);
        }

        // Brute-force re-evaluation with plain loops, no tape.
        let win = params.segment_tensor("in.w").unwrap();
        let bin = params.segment("in.b").unwrap();
        let state: Vec<Vec<f64>> = (0..4)
            .map(|i| {
                (0..5)
                    .map(|j| {
                        (features[i * 2] * win.get(0, j) + features[i * 2 + 1] * win.get(1, j) + bin[j]).tanh()
                    })
                    .collect()
            })
            .collect();
        let to_rows = |t: Tensor| -> Vec<Vec<f64>> {
            (0..t.rows()).map(|i| (0..t.cols()).map(|j| t.get(i, j)).collect()).collect()
        };
        let wq = to_rows(params.segment_tensor("attn0.wq").unwrap());
        let wk = to_rows(params.segment_tensor("attn0.wk").unwrap());
        let we = params.segment("attn0.we").unwrap().to_vec();
        let ef: Vec<Vec<f64>> = edge_features.iter().map(|&x| vec![x]).collect();
        let expected = brute_force_attention(&state, &wq, &wk, &we, &edges, &ef, true, 4);
        for v in 0..4 {
            for u in 0..4 {
                assert!(
                    (a.get(v, u) - expected[v][u]).abs() < 1e-12,
                    "weight ({}, {}): {} vs brute force {}",
                    v,
                    u,
                    a.get(v, u),
                    expected[v][u]
                );
            }
        }
    }

    #[test]
    fn layer_outputs_stay_within_value_projection_range() {
        // With self-loops every attention row is a full probability
        // distribution, so layer output rows are convex combinations of the
        // value-projection rows: each coordinate must lie within that
        // column's [min, max] over all nodes.
        let cfg = config(4, 1, true);
        let params = init_model(&cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for round in 0..10 {
            let n = rng.random_range(2..6);
            let features: Vec<f64> = (0..n * 2).map(|_| rng.random_range(-2.0..2.0)).collect();
            let mut edges = Vec::new();
            for u in 0..n {
                for v in 0..n {
                    if u != v && rng.random_range(0.0..1.0) < 0.4 {
                        edges.push((u, v));
                    }
                }
            }
            let ef: Vec<f64> = (0..edges.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let sample = graph(n, features.clone(), edges, ef, 0.0);
            let batch = Batch::from_graphs(vec![sample]).unwrap();
            let mut tape = build_attention_loss(&cfg, &batch).unwrap();
            tape.forward(&params).unwrap();
            let out = tape.value(tape.marked("states.g0.l0").unwrap()).unwrap();

            // Value projection computed by hand: V = tanh(X W_in + b_in) W_v.
            let win = params.segment_tensor("in.w").unwrap();
            let bin = params.segment("in.b").unwrap();
            let wv = params.segment_tensor("attn0.wv").unwrap();
            let mut value = vec![vec![0.0_f64; 4]; n];
            for i in 0..n {
                let mut emb = [0.0_f64; 4];
                for j in 0..4 {
                    emb[j] = (features[i * 2] * win.get(0, j)
                        + features[i * 2 + 1] * win.get(1, j)
                        + bin[j])
                        .tanh();
                }
                for j in 0..4 {
                    value[i][j] = (0..4).map(|k| emb[k] * wv.get(k, j)).sum();
                }
            }
            for j in 0..4 {
                let lo = (0..n).map(|i| value[i][j]).fold(f64::INFINITY, f64::min);
                let hi = (0..n).map(|i| value[i][j]).fold(f64::NEG_INFINITY, f64::max);
                for v in 0..n {
                    let x = out.get(v, j);
                    assert!(
                        x >= lo - 1e-12 && x <= hi + 1e-12,
                        "round {}: output ({}, {}) = {} outside [{}, {}]",
                        round,
                        v,
                        j,
                        x,
                        lo,
                        hi
                    );
                }
            }
        }
    }

    #[test]
    fn isolated_node_without_self_loops_passes_through() {
        // Edge (0, 1): node 1 attends to node 0; node 0 has no in-neighbors.
        let cfg = config(3, 1, false);
        let sample = graph(2, vec![0.5, -0.5, 1.0, 0.25], vec![(0, 1)], vec![0.3], 0.0);
        let batch = Batch::from_graphs(vec![sample]).unwrap();
        let mut tape = build_attention_loss(&cfg, &batch).unwrap();
        let params = init_model(&cfg).unwrap();
        tape.forward(&params).unwrap();

        let a = tape.value(tape.marked("attention.g0.l0").unwrap()).unwrap();
        assert_eq!(a.get(1, 0), 1.0); // single-neighbor softmax
        let win = params.segment_tensor("in.w").unwrap();
        let bin = params.segment("in.b").unwrap();
        let state = tape.value(tape.marked("states.g0.l0").unwrap()).unwrap();
        for j in 0..3 {
            let expected = (0.5 * win.get(0, j) + (-0.5) * win.get(1, j) + bin[j]).tanh();
            assert_eq!(state.get(0, j), expected);
        }
    }

    #[test]
    fn loss_is_invariant_under_node_permutation() {
        let cfg = config(6, 2, true);
        let params = init_model(&cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for round in 0..20 {
            let n = rng.random_range(3..8);
            let features: Vec<f64> = (0..n * 2).map(|_| rng.random_range(-1.5..1.5)).collect();
            let mut edges = Vec::new();
            for u in 0..n {
                for v in (u + 1)..n {
                    if rng.random_range(0.0..1.0) < 0.4 {
                        edges.push((u, v));
                        edges.push((v, u));
                    }
                }
            }
            let ef: Vec<f64> = (0..edges.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let original = graph(n, features.clone(), edges.clone(), ef.clone(), 1.0);

            // random permutation of node ids
            let mut perm: Vec<usize> = (0..n).collect();
            for i in (1..n).rev() {
                let j = rng.random_range(0..=i);
                perm.swap(i, j);
            }
            let mut pf = vec![0.0; n * 2];
            for (old, &new) in perm.iter().enumerate() {
                pf[new * 2] = features[old * 2];
                pf[new * 2 + 1] = features[old * 2 + 1];
            }
            let pe: Vec<(usize, usize)> = edges.iter().map(|&(u, v)| (perm[u], perm[v])).collect();
            let permuted = graph(n, pf, pe, ef.clone(), 1.0);

            let mut t1 = build_attention_loss(&cfg, &Batch::from_graphs(vec![original]).unwrap()).unwrap();
            let mut t2 = build_attention_loss(&cfg, &Batch::from_graphs(vec![permuted]).unwrap()).unwrap();
            let l1 = t1.forward(&params).unwrap();
            let l2 = t2.forward(&params).unwrap();
            assert!(
                (l1 - l2).abs() < 1e-9,
                "round {}: loss changed under permutation: {} vs {}",
                round,
                l1,
                l2
            );
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let cfg = config(4, 2, true);
        let sample = graph(
            3,
            vec![0.2, -0.7, 0.9, 0.1, -0.3, 0.6],
            vec![(0, 1), (1, 0), (1, 2), (2, 1)],
            vec![0.2, -0.1, 0.4, 0.4],
            1.0,
        );
        let batch = Batch::from_graphs(vec![sample]).unwrap();
        let mut tape = build_attention_loss(&cfg, &batch).unwrap();
        let params = init_model(&cfg).unwrap();
        tape.forward(&params).unwrap();
        let ad = tape.backward().unwrap();
        let fd = finite_difference_gradient(&mut tape, &params, 1e-5).unwrap();
        let err = max_relative_error(&ad, &fd).unwrap();
        assert!(err < 1e-7, "max relative error {}", err);
    }

    #[test]
    fn zero_parameters_give_ln2_classification_loss() {
        let cfg = ModelConfig { task: TaskKind::Classification, ..config(4, 1, true) };
        let sample = graph(2, vec![0.1, 0.2, 0.3, 0.4], vec![(0, 1), (1, 0)], vec![1.0, 1.0], 1.0);
        let batch = Batch::from_graphs(vec![sample]).unwrap();
        let mut tape = build_attention_loss(&cfg, &batch).unwrap();
        let params = ParamVector::zeros(&cfg.segment_map().unwrap());
        let loss = tape.forward(&params).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-15);
    }
}
