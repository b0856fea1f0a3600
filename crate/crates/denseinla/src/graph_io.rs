//! Adjacency files: one `node: nbr nbr ...` line per node, 0-based,
//! `#` starts a comment. Edges are symmetrized on load, and the node count
//! is one past the largest index mentioned.

use std::fmt::Write as _;
use std::path::Path;

use denseinla_core::model::{Graph, ModelError};

#[derive(Debug, thiserror::Error)]
pub enum GraphFileError {
    #[error("cannot read graph file {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("graph line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

pub fn parse_graph(text: &str) -> Result<Graph, GraphFileError> {
    let mut lists: Vec<Vec<usize>> = Vec::new();
    let parse = |tok: &str, line: usize| -> Result<usize, GraphFileError> {
        tok.parse().map_err(|_| GraphFileError::Parse { line, message: format!("bad node index {tok:?}") })
    };
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (node, rest) = body
            .split_once(':')
            .ok_or_else(|| GraphFileError::Parse { line, message: "expected `node: neighbors`".into() })?;
        let node = parse(node.trim(), line)?;
        let nbrs = rest.split_whitespace().map(|t| parse(t, line)).collect::<Result<Vec<_>, _>>()?;
        let top = nbrs.iter().copied().chain([node]).max().unwrap_or(0);
        if lists.len() <= top {
            lists.resize(top + 1, Vec::new());
        }
        lists[node].extend(nbrs);
    }
    Ok(Graph::from_neighbors(lists)?)
}

pub fn read_graph(path: &Path) -> Result<Graph, GraphFileError> {
    let text =
        std::fs::read_to_string(path).map_err(|source| GraphFileError::Io { path: path.display().to_string(), source })?;
    parse_graph(&text)
}

/// Every node gets a line, isolated ones included.
pub fn format_graph(g: &Graph) -> String {
    let mut out = String::new();
    for i in 0..g.n() {
        let _ = write!(out, "{i}:");
        for j in g.neighbors(i) {
            let _ = write!(out, " {j}");
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let g = parse_graph("# triangle minus one edge\n0: 1\n1: 2\n2:\n").unwrap();
        assert_eq!(g.n(), 3);
        assert_eq!(g.neighbors(1), &[0, 2]);
        assert_eq!(parse_graph(&format_graph(&g)).unwrap(), g);
    }

    #[test]
    fn rejects_garbage() {
        assert!(matches!(parse_graph("0 1 2"), Err(GraphFileError::Parse { line: 1, .. })));
        assert!(parse_graph("0: 0").is_err());
    }
}
