//! County super-node smoothing.
//!
//! Each county is one node with target `I_c / n_c` and weight `n_c`; the
//! per-county loss `I_c (1 - p)^2 + (n_c - I_c) p^2` equals
//! `n_c (p - I_c / n_c)^2` up to a constant. Adjacent counties `c, c'` are
//! joined with edge weight `n_c n_c' / max(N(c), N(c'))`, where `N(c)` is the
//! total population of the neighbors of `c`.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use crate::denoise::DenoiseProblem;
use crate::graph::Graph;

use super::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CountyData {
    pub ids: Vec<String>,
    pub population: Vec<f64>,
    pub cases: Vec<f64>,
    pub graph: Graph,
    /// `n_c n_c' w_{c,c'}` per edge of `graph`.
    pub edge_weights: Vec<f64>,
}

impl CountyData {
    pub fn targets(&self) -> Vec<f64> {
        self.cases.iter().zip(&self.population).map(|(i, n)| i / n).collect()
    }

    pub fn problem(&self, lambda: f64) -> DenoiseProblem<'_> {
        DenoiseProblem {
            graph: &self.graph,
            targets: self.targets(),
            node_weights: self.population.clone(),
            edge_weights: self.edge_weights.clone(),
            lambda,
        }
    }
}

fn county_err(msg: String) -> HarnessError {
    HarnessError::County(msg)
}

/// Builds the weighted problem from in-memory texts.
///
/// `cases_csv` needs the columns `county_id`, `population` and `cases` (any
/// order). `adjacency` holds one `id id` pair per line, separated by
/// whitespace or a comma; `#` starts a comment and repeated pairs are merged.
pub fn parse_county_data(cases_csv: &str, adjacency: &str) -> Result<CountyData> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(cases_csv.as_bytes());
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| county_err(format!("cases file lacks a `{name}` column")))
    };
    let (id_col, pop_col, case_col) = (col("county_id")?, col("population")?, col("cases")?);

    let mut ids = Vec::new();
    let mut population = Vec::new();
    let mut cases = Vec::new();
    let mut index = HashMap::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = row + 2;
        let id = rec.get(id_col).unwrap_or("").to_string();
        let num = |c: usize, what: &str| -> Result<f64> {
            rec.get(c)
                .and_then(|s| s.parse::<f64>().ok())
                .ok_or_else(|| county_err(format!("line {line}: bad {what}")))
        };
        let n = num(pop_col, "population")?;
        let i = num(case_col, "cases")?;
        if !(n > 0.0 && n.is_finite()) {
            return Err(county_err(format!("county {id}: population must be positive, got {n}")));
        }
        if !(0.0..=n).contains(&i) {
            return Err(county_err(format!("county {id}: cases {i} outside [0, {n}]")));
        }
        if index.insert(id.clone(), ids.len()).is_some() {
            return Err(county_err(format!("county {id} listed twice")));
        }
        ids.push(id);
        population.push(n);
        cases.push(i);
    }
    if ids.is_empty() {
        return Err(county_err("cases file has no counties".into()));
    }

    let mut pairs = BTreeSet::new();
    for (lineno, line) in adjacency.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .collect();
        if fields.len() < 2 {
            return Err(county_err(format!("adjacency line {}: expected two ids", lineno + 1)));
        }
        let lookup = |id: &str| {
            index
                .get(id)
                .copied()
                .ok_or_else(|| county_err(format!("adjacency line {}: unknown county {id}", lineno + 1)))
        };
        let (a, b) = (lookup(fields[0])?, lookup(fields[1])?);
        if a == b {
            return Err(county_err(format!("adjacency line {}: county {} next to itself", lineno + 1, fields[0])));
        }
        pairs.insert((a.min(b), a.max(b)));
    }

    let graph = Graph::new(ids.len(), pairs.iter().copied())?;
    let neighbor_pop: Vec<f64> = (0..ids.len())
        .map(|c| graph.neighbors(c).iter().map(|&(d, _)| population[d]).sum())
        .collect();
    let edge_weights = graph
        .edges()
        .iter()
        .map(|&(a, b)| population[a] * population[b] / neighbor_pop[a].max(neighbor_pop[b]))
        .collect();
    Ok(CountyData { ids, population, cases, graph, edge_weights })
}

pub fn ingest_county_data(cases_csv: impl AsRef<Path>, adjacency: impl AsRef<Path>) -> Result<CountyData> {
    let read = |p: &Path| {
        std::fs::read_to_string(p).map_err(|e| county_err(format!("cannot read {}: {e}", p.display())))
    };
    parse_county_data(&read(cases_csv.as_ref())?, &read(adjacency.as_ref())?)
}
