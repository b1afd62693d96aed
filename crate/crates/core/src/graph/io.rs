//! JSON and CSV graph files.
//!
//! JSON: `{"nodes":[{"id":0,"weight":1.0},...],"edges":[{"u":0,"v":1,"weight":1.0},...]}`.
//! An edge listed in both directions must carry the same weight.
//!
//! CSV: an M×M comma-separated adjacency matrix, optionally preceded by a
//! `weights,w_0,...,w_{M-1}` row. Without that row node weights default to 1.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::Graph;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphFormat {
    Json,
    Csv,
}

impl GraphFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => Ok(GraphFormat::Json),
            Some(e) if e.eq_ignore_ascii_case("csv") => Ok(GraphFormat::Csv),
            _ => Err(Error::Malformed {
                path: path.to_path_buf(),
                reason: "unknown extension, expected .json or .csv".into(),
            }),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct JsonNode {
    id: usize,
    weight: f64,
}

#[derive(Serialize, Deserialize)]
struct JsonEdge {
    u: usize,
    v: usize,
    weight: f64,
}

#[derive(Serialize, Deserialize)]
struct JsonGraph {
    nodes: Vec<JsonNode>,
    edges: Vec<JsonEdge>,
}

pub fn load_graph(path: impl AsRef<Path>) -> Result<Graph> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    match GraphFormat::from_path(path)? {
        GraphFormat::Json => parse_json(&text, path),
        GraphFormat::Csv => parse_csv(&text, path),
    }
}

pub fn save_graph(g: &Graph, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = match GraphFormat::from_path(path)? {
        GraphFormat::Json => to_json(g)?,
        GraphFormat::Csv => to_csv(g),
    };
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn malformed(path: &Path, reason: impl Into<String>) -> Error {
    Error::Malformed {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

fn parse_json(text: &str, path: &Path) -> Result<Graph> {
    let raw: JsonGraph =
        serde_json::from_str(text).map_err(|e| malformed(path, e.to_string()))?;
    let m = raw.nodes.len();
    let mut weights = vec![f64::NAN; m];
    for node in &raw.nodes {
        if node.id >= m {
            return Err(malformed(path, format!("node id {} out of range 0..{m}", node.id)));
        }
        if !weights[node.id].is_nan() {
            return Err(malformed(path, format!("duplicate node id {}", node.id)));
        }
        weights[node.id] = node.weight;
    }
    let mut a = DMatrix::zeros(m, m);
    let mut set = DMatrix::from_element(m, m, false);
    for (k, e) in raw.edges.iter().enumerate() {
        if e.u >= m || e.v >= m {
            return Err(malformed(path, format!("edge {k} ({}, {}) out of range", e.u, e.v)));
        }
        if e.u == e.v {
            return Err(malformed(path, format!("edge {k} is a self-loop on node {}", e.u)));
        }
        if set[(e.u, e.v)] && a[(e.u, e.v)] != e.weight {
            return Err(Error::Asymmetric {
                row: e.u,
                col: e.v,
                upper: a[(e.u, e.v)],
                lower: e.weight,
            });
        }
        a[(e.u, e.v)] = e.weight;
        a[(e.v, e.u)] = e.weight;
        set[(e.u, e.v)] = true;
        set[(e.v, e.u)] = true;
    }
    Graph::new(weights, a)
}

fn to_json(g: &Graph) -> Result<String> {
    let m = g.node_count();
    let nodes = g
        .weights()
        .iter()
        .enumerate()
        .map(|(id, &weight)| JsonNode { id, weight })
        .collect();
    let mut edges = Vec::new();
    for u in 0..m {
        for v in (u + 1)..m {
            let w = g.adjacency()[(u, v)];
            if w != 0.0 {
                edges.push(JsonEdge { u, v, weight: w });
            }
        }
    }
    Ok(serde_json::to_string_pretty(&JsonGraph { nodes, edges })?)
}

fn parse_csv(text: &str, path: &Path) -> Result<Graph> {
    let mut weights: Option<Vec<f64>> = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',').map(str::trim);
        let first = fields.clone().next().unwrap_or_default();
        let parse = |s: &str, col: usize| {
            s.parse::<f64>().map_err(|_| {
                malformed(path, format!("line {}, column {}: cannot parse {s:?}", lineno + 1, col + 1))
            })
        };
        if first.eq_ignore_ascii_case("weights") {
            if weights.is_some() || !rows.is_empty() {
                return Err(malformed(path, format!("line {}: weights row must come first", lineno + 1)));
            }
            fields.next();
            weights = Some(
                fields
                    .enumerate()
                    .map(|(c, s)| parse(s, c + 1))
                    .collect::<Result<_>>()?,
            );
            continue;
        }
        rows.push(fields.enumerate().map(|(c, s)| parse(s, c)).collect::<Result<_>>()?);
    }
    let m = rows.len();
    if m == 0 {
        return Err(malformed(path, "no adjacency rows"));
    }
    for (r, row) in rows.iter().enumerate() {
        if row.len() != m {
            return Err(malformed(
                path,
                format!("adjacency row {r} has {} columns, expected {m}", row.len()),
            ));
        }
    }
    let weights = weights.unwrap_or_else(|| vec![1.0; m]);
    if weights.len() != m {
        return Err(malformed(
            path,
            format!("weights row has {} entries, expected {m}", weights.len()),
        ));
    }
    Graph::new(weights, DMatrix::from_fn(m, m, |i, j| rows[i][j]))
}

fn to_csv(g: &Graph) -> String {
    let m = g.node_count();
    let mut out = String::from("weights");
    for w in g.weights() {
        out.push(',');
        out.push_str(&w.to_string());
    }
    out.push('\n');
    for i in 0..m {
        let row: Vec<String> = (0..m).map(|j| g.adjacency()[(i, j)].to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::erdos_renyi;

    fn weighted_sample() -> Graph {
        let base = erdos_renyi(7, 0.5, 4).unwrap();
        let a = base.adjacency().map(|x| x * 0.1 + x * std::f64::consts::PI.fract());
        Graph::new(vec![0.3, 1.0 / 3.0, 2.5, 1e-7, 4.0, 0.0, 7.125], a).unwrap()
    }

    #[test]
    fn round_trip_both_formats() {
        let dir = tempfile::tempdir().unwrap();
        for name in ["g.json", "g.csv"] {
            let g = weighted_sample();
            let p = dir.path().join(name);
            save_graph(&g, &p).unwrap();
            assert_eq!(load_graph(&p).unwrap(), g, "{name}");
            let k4 = Graph::complete(4).unwrap();
            save_graph(&k4, &p).unwrap();
            assert_eq!(load_graph(&p).unwrap(), k4);
        }
    }

    #[test]
    fn csv_asymmetry_reported() {
        let text = "0,1,0\n1,0,1\n0,0.5,0\n";
        let err = parse_csv(text, Path::new("x.csv")).unwrap_err();
        assert!(matches!(err, Error::Asymmetric { row: 1, col: 2, .. }), "{err}");
    }

    #[test]
    fn json_asymmetry_reported() {
        let text = r#"{"nodes":[{"id":0,"weight":1},{"id":1,"weight":1},{"id":2,"weight":1}],
            "edges":[{"u":1,"v":2,"weight":1.0},{"u":2,"v":1,"weight":2.0}]}"#;
        let err = parse_json(text, Path::new("x.json")).unwrap_err();
        assert!(matches!(err, Error::Asymmetric { row: 2, col: 1, .. }), "{err}");
    }

    #[test]
    fn csv_errors_carry_locations() {
        let err = parse_csv("0,1\n1,x\n", Path::new("x.csv")).unwrap_err();
        assert!(err.to_string().contains("line 2, column 2"), "{err}");
        let err = parse_csv("0,-1\n-1,0\n", Path::new("x.csv")).unwrap_err();
        assert!(err.to_string().contains("(0, 1)"), "{err}");
        assert!(parse_csv("0,1,0\n1,0\n", Path::new("x.csv")).is_err());
        assert!(parse_csv("weights,1\n0,1\n1,0\n", Path::new("x.csv")).is_err());
    }

    #[test]
    fn demo_fixture_loads() {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/demo6.csv");
        let g = load_graph(path).unwrap();
        assert_eq!(g.node_count(), 6);
    }
}
