//! Text formats for graphs and node weights.
//!
//! Edge files hold one edge per line, `src<TAB>dst<TAB>weight`, with an
//! optional fourth column `regular` or `high` naming the tier. Lines starting
//! with `#` are comments, except the headers `# nodes N` (node count, else
//! the largest id plus one) and `# base 1` (ids start at one). Node weights
//! live in a sibling file `<stem>.mu` with lines `id<TAB>mu`; nodes it does
//! not mention keep weight one.

use crate::coarse::{CoarseError, LimitGraph, TwoScaleGraph};
use crate::digraph::{DiGraph, GraphError};
use nalgebra::DMatrix;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IoError {
    #[error("{path}: {message}")]
    Read { path: String, message: String },
    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Coarse(#[from] CoarseError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tier {
    Regular,
    High,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeRecord {
    pub src: usize,
    pub dst: usize,
    pub weight: f64,
    pub tier: Tier,
}

/// Parsed edge file with ids already shifted to start at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeList {
    pub n_nodes: usize,
    /// Offset of the ids used in the file (0 or 1).
    pub base: usize,
    pub edges: Vec<EdgeRecord>,
}

impl EdgeList {
    pub fn has_high_tier(&self) -> bool {
        self.edges.iter().any(|e| e.tier == Tier::High)
    }

    fn adjacency(&self, keep: impl Fn(Tier) -> bool) -> DMatrix<f64> {
        let mut w = DMatrix::zeros(self.n_nodes, self.n_nodes);
        for e in self.edges.iter().filter(|e| keep(e.tier)) {
            w[(e.dst, e.src)] += e.weight;
        }
        w
    }

    /// Both tiers summed, each at unit scale.
    pub fn combined_adjacency(&self) -> DMatrix<f64> {
        self.adjacency(|_| true)
    }

    pub fn regular_adjacency(&self) -> DMatrix<f64> {
        self.adjacency(|t| t == Tier::Regular)
    }

    pub fn high_adjacency(&self) -> DMatrix<f64> {
        self.adjacency(|t| t == Tier::High)
    }
}

fn parse_err(path: &str, line: usize, message: impl Into<String>) -> IoError {
    IoError::Parse {
        path: path.to_string(),
        line,
        message: message.into(),
    }
}

fn parse_weight(path: &str, line: usize, s: &str) -> Result<f64, IoError> {
    let w: f64 = s
        .parse()
        .map_err(|_| parse_err(path, line, format!("'{s}' is not a number")))?;
    if !w.is_finite() || w < 0.0 {
        return Err(parse_err(path, line, format!("weight {s} must be finite and nonnegative")));
    }
    Ok(w)
}

fn parse_id(path: &str, line: usize, s: &str, base: usize) -> Result<usize, IoError> {
    let id: usize = s
        .parse()
        .map_err(|_| parse_err(path, line, format!("'{s}' is not a node id")))?;
    id.checked_sub(base)
        .ok_or_else(|| parse_err(path, line, format!("node id {id} is below the base {base}")))
}

/// `path` only labels error messages.
pub fn parse_edge_list(text: &str, path: &str) -> Result<EdgeList, IoError> {
    let mut declared = None;
    let mut base = 0;
    let mut rows = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(comment) = trimmed.strip_prefix('#') {
            let words: Vec<&str> = comment.split_whitespace().collect();
            match words.as_slice() {
                ["nodes", n] => {
                    declared = Some(n.parse::<usize>().map_err(|_| parse_err(path, line, "bad node count"))?)
                }
                ["base", b] => {
                    base = match *b {
                        "0" => 0,
                        "1" => 1,
                        _ => return Err(parse_err(path, line, "base must be 0 or 1")),
                    }
                }
                _ => {}
            }
            continue;
        }
        rows.push((line, trimmed));
    }
    let mut edges = Vec::with_capacity(rows.len());
    for (line, row) in rows {
        let cols: Vec<&str> = row.split('\t').map(str::trim).collect();
        if !(3..=4).contains(&cols.len()) {
            return Err(parse_err(path, line, format!("expected 3 or 4 tab-separated columns, found {}", cols.len())));
        }
        let tier = match cols.get(3).copied() {
            None | Some("regular") => Tier::Regular,
            Some("high") => Tier::High,
            Some(t) => return Err(parse_err(path, line, format!("unknown tier '{t}'"))),
        };
        edges.push(EdgeRecord {
            src: parse_id(path, line, cols[0], base)?,
            dst: parse_id(path, line, cols[1], base)?,
            weight: parse_weight(path, line, cols[2])?,
            tier,
        });
    }
    let needed = edges.iter().map(|e| e.src.max(e.dst) + 1).max().unwrap_or(0);
    let n_nodes = match declared {
        Some(n) if n < needed => {
            return Err(parse_err(path, 0, format!("header declares {n} nodes but ids reach {}", needed - 1 + base)))
        }
        Some(n) => n,
        None => needed,
    };
    Ok(EdgeList { n_nodes, base, edges })
}

/// Node weights for `n` nodes, defaulting to one.
pub fn parse_node_weights(text: &str, path: &str, n: usize, base: usize) -> Result<Vec<f64>, IoError> {
    let mut mu = vec![1.0; n];
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = trimmed.split('\t').map(str::trim).collect();
        if cols.len() != 2 {
            return Err(parse_err(path, line, "expected 'id<TAB>mu'"));
        }
        let id = parse_id(path, line, cols[0], base)?;
        if id >= n {
            return Err(parse_err(path, line, format!("node {} is out of range", cols[0])));
        }
        let m = parse_weight(path, line, cols[1])?;
        if m == 0.0 {
            return Err(parse_err(path, line, "node weights must be positive"));
        }
        mu[id] = m;
    }
    Ok(mu)
}

fn read(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|e| IoError::Read {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

pub fn node_weight_path(graph_path: &Path) -> PathBuf {
    graph_path.with_extension("mu")
}

/// Reads the edge file and its node weights. `weights` overrides the
/// sibling `.mu` file, which is optional.
pub fn read_graph_files(path: &Path, weights: Option<&Path>) -> Result<(EdgeList, Vec<f64>), IoError> {
    let label = path.display().to_string();
    let list = parse_edge_list(&read(path)?, &label)?;
    let mu = match weights {
        Some(w) => parse_node_weights(&read(w)?, &w.display().to_string(), list.n_nodes, list.base)?,
        None => {
            let sibling = node_weight_path(path);
            if sibling.exists() {
                parse_node_weights(&read(&sibling)?, &sibling.display().to_string(), list.n_nodes, list.base)?
            } else {
                vec![1.0; list.n_nodes]
            }
        }
    };
    Ok((list, mu))
}

/// All tiers summed into one graph.
pub fn load_graph(path: &Path, weights: Option<&Path>) -> Result<DiGraph, IoError> {
    let (list, mu) = read_graph_files(path, weights)?;
    Ok(DiGraph::from_adjacency(list.combined_adjacency(), mu)?)
}

/// The `high` tier is scaled by `scale`.
pub fn load_two_scale(path: &Path, weights: Option<&Path>, scale: f64) -> Result<TwoScaleGraph, IoError> {
    let (list, mu) = read_graph_files(path, weights)?;
    Ok(TwoScaleGraph::new(list.regular_adjacency(), list.high_adjacency(), mu, scale)?)
}

/// Edge file text for `graph`, ids starting at `base`.
pub fn format_edge_list(graph: &DiGraph, base: usize) -> String {
    let mut out = format!("# nodes {}\n", graph.n_nodes());
    if base == 1 {
        out.push_str("# base 1\n");
    }
    for e in graph.edges() {
        writeln!(out, "{}\t{}\t{}", e.src + base, e.dst + base, e.weight).unwrap();
    }
    out
}

pub fn format_node_weights(mu: &[f64], base: usize) -> String {
    mu.iter()
        .enumerate()
        .fold(String::new(), |mut out, (i, m)| {
            writeln!(out, "{}\t{m}", i + base).unwrap();
            out
        })
}

/// `fine_id<TAB>coarse_id` for every node of a limit graph whose reaches
/// partition the nodes.
pub fn format_assignment(limit: &LimitGraph, base: usize) -> String {
    let mut out = String::new();
    for (r, reach) in limit.partition().reaches().iter().enumerate() {
        for &i in reach {
            writeln!(out, "{}\t{}", i + base, r + base).unwrap();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_headers_and_tiers() {
        let text = "# nodes 4\n# base 1\n1\t2\t0.5\n2\t3\t2\thigh\n3\t2\t2\thigh\n";
        let list = parse_edge_list(text, "t").unwrap();
        assert_eq!(list.n_nodes, 4);
        assert_eq!(list.base, 1);
        assert_eq!(list.edges[0].src, 0);
        assert!(list.has_high_tier());
        assert_eq!(list.regular_adjacency()[(1, 0)], 0.5);
        assert_eq!(list.high_adjacency()[(2, 1)], 2.0);
    }

    #[test]
    fn duplicate_edges_accumulate() {
        let list = parse_edge_list("0\t1\t1\n0\t1\t2\n", "t").unwrap();
        assert_eq!(list.combined_adjacency()[(1, 0)], 3.0);
    }

    #[test]
    fn rejects_bad_weights() {
        for bad in ["0\t1\tNaN\n", "0\t1\t-1\n", "0\t1\tinf\n", "0\t1\n", "0\t1\t1\tweird\n"] {
            assert!(matches!(parse_edge_list(bad, "t"), Err(IoError::Parse { .. })), "{bad:?}");
        }
        assert!(parse_edge_list("# nodes 1\n0\t3\t1\n", "t").is_err());
        assert!(parse_node_weights("0\tNaN\n", "m", 2, 0).is_err());
        assert!(parse_node_weights("0\t0\n", "m", 2, 0).is_err());
        assert!(parse_node_weights("5\t1\n", "m", 2, 0).is_err());
    }

    #[test]
    fn formatted_graph_parses_back() {
        let g = DiGraph::from_adjacency(DMatrix::from_row_slice(3, 3, &[0., 1., 0., 0., 0., 2.5, 0., 0., 0.]), vec![1.0, 2.0, 3.0]).unwrap();
        for base in [0, 1] {
            let list = parse_edge_list(&format_edge_list(&g, base), "t").unwrap();
            let mu = parse_node_weights(&format_node_weights(g.node_weights(), base), "m", 3, base).unwrap();
            assert_eq!(DiGraph::from_adjacency(list.combined_adjacency(), mu).unwrap(), g);
        }
    }

    #[test]
    fn missing_file_names_the_path() {
        let err = load_graph(Path::new("/nonexistent/graph.tsv"), None).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/graph.tsv"));
    }
}
