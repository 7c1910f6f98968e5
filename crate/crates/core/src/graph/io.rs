use std::fs;
use std::io::Write;
use std::path::Path;

use super::{Graph, GraphError, Result};

/// Parses `i j [w]` lines separated by whitespace and/or commas.
///
/// Blank lines and lines starting with `#` or `%` are skipped. Node count is
/// one past the largest index seen. Either every edge line carries a weight or
/// none does.
pub fn parse_edge_list(text: &str, one_based: bool) -> Result<Graph> {
    let mut edges = Vec::new();
    let mut weighted: Option<bool> = None;
    let mut max_node = None::<usize>;
    for (lineno, line) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = trimmed
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .collect();
        let err = |msg: String| GraphError::Parse { line: line_no, msg };
        if fields.len() < 2 || fields.len() > 3 {
            return Err(err(format!("expected 2 or 3 fields, found {}", fields.len())));
        }
        let node = |s: &str| -> Result<usize> {
            let v: usize = s.parse().map_err(|_| err(format!("bad node index {s:?}")))?;
            if one_based {
                v.checked_sub(1)
                    .ok_or_else(|| err("node index 0 in one-based file".into()))
            } else {
                Ok(v)
            }
        };
        let i = node(fields[0])?;
        let j = node(fields[1])?;
        if i == j {
            return Err(GraphError::SelfLoop(i));
        }
        let has_weight = fields.len() == 3;
        match weighted {
            None => weighted = Some(has_weight),
            Some(w) if w != has_weight => {
                return Err(err("mixed weighted and unweighted edge lines".into()))
            }
            _ => {}
        }
        let w = if has_weight {
            fields[2]
                .parse::<f64>()
                .map_err(|_| err(format!("bad weight {:?}", fields[2])))?
        } else {
            1.0
        };
        max_node = Some(max_node.unwrap_or(0).max(i).max(j));
        edges.push((i, j, w));
    }
    let n = max_node.map_or(0, |m| m + 1);
    if weighted == Some(true) {
        Graph::with_weights(n, edges)
    } else {
        Graph::new(n, edges.into_iter().map(|(i, j, _)| (i, j)))
    }
}

pub fn load_edge_list(path: impl AsRef<Path>, one_based: bool) -> Result<Graph> {
    parse_edge_list(&fs::read_to_string(path)?, one_based)
}

/// Writes one `i j [w]` line per edge, weights at full precision.
pub fn write_edge_list(g: &Graph, mut out: impl Write, one_based: bool) -> Result<()> {
    let off = usize::from(one_based);
    for (e, &(i, j)) in g.edges().iter().enumerate() {
        match g.weights() {
            Some(w) => writeln!(out, "{} {} {}", i + off, j + off, w[e])?,
            None => writeln!(out, "{} {}", i + off, j + off)?,
        }
    }
    Ok(())
}
