//! Plain-text graph dataset format.
//!
//! One block per graph, blocks separated by blank lines, `#` starts a
//! comment. Each block is
//!
//! ```text
//! nodes,edges,d_node,d_edge,label
//! <nodes rows of d_node comma-separated node features>
//! <edges rows of: u,v,<d_edge edge features>>
//! ```
//!
//! Floats are written in Rust's shortest round-trip form, so saving and
//! reloading reproduces every value bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::autodiff::Tensor;
use crate::models::GraphSample;

use super::HarnessError;

/// Writes samples to `path` in the block format, replacing any existing file.
pub fn save_graph_csv(path: &Path, samples: &[GraphSample]) -> Result<(), HarnessError> {
    let mut out = String::new();
    out.push_str("# nodes,edges,d_node,d_edge,label\n");
    out.push_str("# then node-feature rows, then edge rows u,v,features...\n");
    for (i, s) in samples.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        writeln!(
            out,
            "{},{},{},{},{}",
            s.num_nodes,
            s.edges.len(),
            s.node_dim(),
            s.edge_dim(),
            s.label
        )
        .unwrap();
        for row in 0..s.num_nodes {
            let cells: Vec<String> = (0..s.node_dim())
                .map(|c| s.node_features.get(row, c).to_string())
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        for (row, &(u, v)) in s.edges.iter().enumerate() {
            let mut cells = vec![u.to_string(), v.to_string()];
            cells.extend((0..s.edge_dim()).map(|c| s.edge_features.get(row, c).to_string()));
            out.push_str(&cells.join(","));
            out.push('\n');
        }
    }
    fs::write(path, out)?;
    Ok(())
}

struct Cursor<'a> {
    /// `(1-based line number, content)` with comments already removed.
    lines: Vec<(usize, &'a str)>,
    pos: usize,
    path: String,
}

impl<'a> Cursor<'a> {
    fn err(&self, line: usize, detail: String) -> HarnessError {
        HarnessError::Parse {
            path: self.path.clone(),
            line,
            detail,
        }
    }

    fn err_here(&self, detail: String) -> HarnessError {
        let line = self
            .lines
            .get(self.pos)
            .map(|(n, _)| *n)
            .or_else(|| self.lines.last().map(|(n, _)| n + 1))
            .unwrap_or(1);
        self.err(line, detail)
    }

    fn skip_blanks(&mut self) {
        while self
            .lines
            .get(self.pos)
            .is_some_and(|(_, l)| l.trim().is_empty())
        {
            self.pos += 1;
        }
    }

    /// Next non-blank row within the current block; blank means the block
    /// ended early.
    fn next_row(&mut self, expect: &str) -> Result<(usize, &'a str), HarnessError> {
        match self.lines.get(self.pos) {
            Some(&(n, l)) if !l.trim().is_empty() => {
                self.pos += 1;
                Ok((n, l))
            }
            _ => Err(self.err_here(format!("expected {expect}"))),
        }
    }
}

fn parse_cell<T: std::str::FromStr>(
    cursor: &Cursor<'_>,
    line: usize,
    raw: &str,
    what: &str,
) -> Result<T, HarnessError> {
    raw.trim()
        .parse()
        .map_err(|_| cursor.err(line, format!("cannot parse {what} from {raw:?}")))
}

/// Loads a dataset written by [`save_graph_csv`] (or by hand in the same
/// format). Every structural rule is checked during the parse — feature
/// arity, edge endpoints in range, finite labels — and violations report the
/// offending line. An input with no graph blocks is an error, not an empty
/// dataset.
pub fn load_graph_csv(path: &Path) -> Result<Vec<GraphSample>, HarnessError> {
    let text = fs::read_to_string(path)?;
    let mut cursor = Cursor {
        lines: text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l))
            .filter(|(_, l)| !l.trim_start().starts_with('#'))
            .collect(),
        pos: 0,
        path: path.display().to_string(),
    };

    let mut samples = Vec::new();
    loop {
        cursor.skip_blanks();
        if cursor.pos >= cursor.lines.len() {
            break;
        }
        let (header_line, header) = cursor.next_row("a graph header")?;
        let cols: Vec<&str> = header.split(',').collect();
        if cols.len() != 5 {
            return Err(cursor.err(
                header_line,
                format!(
                    "graph header needs 5 columns (nodes,edges,d_node,d_edge,label), found {}",
                    cols.len()
                ),
            ));
        }
        let num_nodes: usize = parse_cell(&cursor, header_line, cols[0], "node count")?;
        let num_edges: usize = parse_cell(&cursor, header_line, cols[1], "edge count")?;
        let d_node: usize = parse_cell(&cursor, header_line, cols[2], "node feature dim")?;
        let d_edge: usize = parse_cell(&cursor, header_line, cols[3], "edge feature dim")?;
        let label: f64 = parse_cell(&cursor, header_line, cols[4], "label")?;
        if num_nodes == 0 || d_node == 0 {
            return Err(cursor.err(
                header_line,
                "graphs need at least one node and one node feature".to_string(),
            ));
        }

        let mut node_data = Vec::with_capacity(num_nodes * d_node);
        for _ in 0..num_nodes {
            let (line, row) = cursor.next_row("a node feature row")?;
            let cells: Vec<&str> = row.split(',').collect();
            if cells.len() != d_node {
                return Err(cursor.err(
                    line,
                    format!("expected {d_node} node features, found {}", cells.len()),
                ));
            }
            for cell in cells {
                node_data.push(parse_cell(&cursor, line, cell, "node feature")?);
            }
        }

        let mut edges = Vec::with_capacity(num_edges);
        let mut edge_data = Vec::with_capacity(num_edges * d_edge);
        for _ in 0..num_edges {
            let (line, row) = cursor.next_row("an edge row")?;
            let cells: Vec<&str> = row.split(',').collect();
            if cells.len() != 2 + d_edge {
                return Err(cursor.err(
                    line,
                    format!(
                        "expected u,v plus {d_edge} edge features, found {} columns",
                        cells.len()
                    ),
                ));
            }
            let u: usize = parse_cell(&cursor, line, cells[0], "edge endpoint")?;
            let v: usize = parse_cell(&cursor, line, cells[1], "edge endpoint")?;
            for &endpoint in &[u, v] {
                if endpoint >= num_nodes {
                    return Err(cursor.err(
                        line,
                        format!("edge endpoint {endpoint} outside 0..{num_nodes}"),
                    ));
                }
            }
            edges.push((u, v));
            for cell in &cells[2..] {
                edge_data.push(parse_cell(&cursor, line, cell, "edge feature")?);
            }
        }

        let sample = GraphSample::new(
            num_nodes,
            Tensor::new(num_nodes, d_node, node_data)?,
            edges,
            Tensor::new(num_edges, d_edge, edge_data)?,
            label,
            true,
        )
        .map_err(|e| cursor.err(header_line, e.to_string()))?;
        samples.push(sample);
    }

    if samples.is_empty() {
        return Err(cursor.err(1, "no samples found".to_string()));
    }
    Ok(samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::motif::generate_motif_graphs;

    fn write_temp(content: &str) -> (tempfile::TempDir, std::path::PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.csv");
        std::fs::write(&path, content).unwrap();
        (dir, path)
    }

    #[test]
    fn round_trip_reproduces_generated_samples_exactly() {
        let samples = generate_motif_graphs(20, 11).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("motif.csv");
        save_graph_csv(&path, &samples).unwrap();
        let back = load_graph_csv(&path).unwrap();
        assert_eq!(back, samples);

        // And a second save of the reloaded data is byte-identical.
        let path2 = dir.path().join("motif2.csv");
        save_graph_csv(&path2, &back).unwrap();
        assert_eq!(
            std::fs::read_to_string(&path).unwrap(),
            std::fs::read_to_string(&path2).unwrap()
        );
    }

    #[test]
    fn out_of_range_edge_names_its_line() {
        let (_dir, path) = write_temp("3,1,1,0,0\n0.1\n0.2\n0.3\n0,3\n");
        match load_graph_csv(&path) {
            Err(HarnessError::Parse { line, detail, .. }) => {
                assert_eq!(line, 5);
                assert!(detail.contains("endpoint 3"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn non_numeric_feature_names_its_line() {
        let (_dir, path) = write_temp("2,0,2,0,1\n0.1,0.2\n0.3,abc\n");
        match load_graph_csv(&path) {
            Err(HarnessError::Parse { line, detail, .. }) => {
                assert_eq!(line, 3);
                assert!(detail.contains("node feature"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn short_header_is_rejected() {
        let (_dir, path) = write_temp("2,0,2\n");
        match load_graph_csv(&path) {
            Err(HarnessError::Parse { line, detail, .. }) => {
                assert_eq!(line, 1);
                assert!(detail.contains("5 columns"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn truncated_block_is_rejected() {
        // Header promises 2 nodes but only one feature row follows.
        let (_dir, path) = write_temp("2,0,1,0,1\n0.5\n");
        match load_graph_csv(&path) {
            Err(HarnessError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn empty_or_comment_only_files_have_no_samples() {
        let (_dir, path) = write_temp("");
        assert!(matches!(
            load_graph_csv(&path),
            Err(HarnessError::Parse { line: 1, .. })
        ));
        let (_dir, path) = write_temp("# just a comment\n\n# another\n");
        match load_graph_csv(&path) {
            Err(HarnessError::Parse { detail, .. }) => assert!(detail.contains("no samples")),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn comments_and_extra_blank_lines_are_ignored() {
        let (_dir, path) = write_temp(
            "# leading comment\n\n1,1,1,1,0.5\n0.25\n# mid-block comment\n0,0,2.5\n\n\n1,0,1,0,1\n3.5\n\n",
        );
        let samples = load_graph_csv(&path).unwrap();
        assert_eq!(samples.len(), 2);
        assert_eq!(samples[0].edges, vec![(0, 0)]); // self-loops are legal input
        assert_eq!(samples[0].label, 0.5);
        assert_eq!(samples[1].num_nodes, 1);
        assert_eq!(samples[1].label, 1.0);
    }
}
