//! Speed dataset ingestion.
//!
//! Value files are comma-delimited with a header row of location ids and
//! one row per time point; an empty cell marks a missing value. Graph files
//! carry either directed edges (`src_id,dst_id,distance`) or coordinates
//! (`id,x,y`); the two are told apart by whether the second field names a
//! known location, and files where both readings apply are rejected as
//! ambiguous.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::{gaussian_adjacency, DegreeMode, SpatialGraph};
use crate::solver::Mask;

/// Raw graph side information attached to a dataset.
#[derive(Debug, Clone)]
pub enum GraphData {
    /// Directed edges with their physical distances.
    Edges(Vec<(usize, usize, f64)>),
    /// Planar sensor coordinates; distances are Euclidean on demand.
    Coordinates(Vec<(f64, f64)>),
}

/// A speed table plus its sensor graph. Missing values are `NaN`.
#[derive(Debug, Clone)]
pub struct SpeedDataset {
    pub values: DMatrix<f64>,
    pub intervals_per_day: usize,
    pub days: usize,
    pub location_ids: Vec<String>,
    pub graph: GraphData,
}

/// Options controlling how the sensor graph is materialized from a dataset.
#[derive(Debug, Clone, Copy)]
pub struct GraphOptions {
    /// Gaussian kernel bandwidth; defaults to the deviation of edge distances.
    pub sigma: Option<f64>,
    /// Kernel scale multiplier.
    pub delta: f64,
    pub degree_mode: DegreeMode,
    /// For coordinate graphs only: connect sensor pairs whose distance lies
    /// below this quantile of all pairwise distances, in both directions.
    pub radius_quantile: f64,
}

impl Default for GraphOptions {
    fn default() -> Self {
        GraphOptions {
            sigma: None,
            delta: 1.0,
            degree_mode: DegreeMode::Out,
            radius_quantile: 0.2,
        }
    }
}

impl SpeedDataset {
    /// Indicator of the finite entries.
    pub fn observation_mask(&self) -> Mask {
        Mask::from_fn(self.values.nrows(), self.values.ncols(), |r, c| {
            self.values[(r, c)].is_finite()
        })
    }

    pub fn locations(&self) -> usize {
        self.values.ncols()
    }

    pub fn time_points(&self) -> usize {
        self.values.nrows()
    }

    /// Materializes the Gaussian-kernel sensor graph.
    pub fn spatial_graph(&self, options: &GraphOptions) -> Result<SpatialGraph> {
        let j = self.locations();
        match &self.graph {
            GraphData::Edges(edges) => {
                let mut dist = DMatrix::<f64>::zeros(j, j);
                let mut pairs = Vec::with_capacity(edges.len());
                for &(src, dst, d) in edges {
                    dist[(src, dst)] = d;
                    dist[(dst, src)] = d;
                    pairs.push((src, dst));
                }
                gaussian_adjacency(&dist, &pairs, options.sigma, options.delta, options.degree_mode)
            }
            GraphData::Coordinates(points) => {
                if points.len() != j {
                    return Err(Error::shape("coordinate count does not match locations"));
                }
                let dist = DMatrix::from_fn(j, j, |a, b| {
                    let (xa, ya) = points[a];
                    let (xb, yb) = points[b];
                    ((xa - xb).powi(2) + (ya - yb).powi(2)).sqrt()
                });
                if !(0.0 < options.radius_quantile && options.radius_quantile <= 1.0) {
                    return Err(Error::parameter("radius quantile must lie in (0, 1]"));
                }
                let mut offdiag: Vec<f64> = (0..j)
                    .flat_map(|a| (0..j).filter(move |&b| b != a).map(move |b| (a, b)))
                    .map(|(a, b)| dist[(a, b)])
                    .collect();
                offdiag.sort_by(|x, y| x.partial_cmp(y).unwrap());
                let idx = ((offdiag.len() as f64 * options.radius_quantile).ceil() as usize)
                    .clamp(1, offdiag.len())
                    - 1;
                let radius = offdiag[idx];
                let mut pairs = Vec::new();
                for a in 0..j {
                    for b in 0..j {
                        if a != b && dist[(a, b)] <= radius {
                            pairs.push((a, b));
                        }
                    }
                }
                gaussian_adjacency(&dist, &pairs, options.sigma, options.delta, options.degree_mode)
            }
        }
    }
}

/// Loads a value table and its graph file. `intervals_per_day` must divide
/// the number of data rows.
pub fn load_dataset(
    value_path: impl AsRef<Path>,
    graph_path: impl AsRef<Path>,
    intervals_per_day: usize,
) -> Result<SpeedDataset> {
    let value_path = value_path.as_ref();
    let graph_path = graph_path.as_ref();
    let (values, location_ids) = read_value_table(value_path)?;
    if intervals_per_day == 0 || values.nrows() % intervals_per_day != 0 {
        return Err(Error::parameter(format!(
            "{} data rows cannot be split into days of {} intervals",
            values.nrows(),
            intervals_per_day
        )));
    }
    let graph = read_graph_file(graph_path, &location_ids)?;
    Ok(SpeedDataset {
        days: values.nrows() / intervals_per_day,
        values,
        intervals_per_day,
        location_ids,
        graph,
    })
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))
}

fn read_value_table(path: &Path) -> Result<(DMatrix<f64>, Vec<String>)> {
    let text = read_to_string(path)?;
    let display = path.display().to_string();
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::ingest(&display, 1, "file is empty"))?;
    let location_ids: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
    if location_ids.iter().any(|id| id.is_empty()) {
        return Err(Error::ingest(&display, 1, "header contains an empty location id"));
    }
    let cols = location_ids.len();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line_idx, line) in lines {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols {
            return Err(Error::ingest(
                &display,
                line_idx + 1,
                format!("expected {cols} fields, found {}", fields.len()),
            ));
        }
        let mut row = Vec::with_capacity(cols);
        for f in fields {
            let f = f.trim();
            if f.is_empty() {
                row.push(f64::NAN);
            } else {
                let v: f64 = f.parse().map_err(|_| {
                    Error::ingest(&display, line_idx + 1, format!("cannot parse value '{f}'"))
                })?;
                if !v.is_finite() {
                    return Err(Error::ingest(
                        &display,
                        line_idx + 1,
                        "non-finite sentinel values are rejected; leave the cell empty instead",
                    ));
                }
                row.push(v);
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::ingest(&display, 1, "no data rows after the header"));
    }
    let values = DMatrix::from_fn(rows.len(), cols, |r, c| rows[r][c]);
    Ok((values, location_ids))
}

fn read_graph_file(path: &Path, location_ids: &[String]) -> Result<GraphData> {
    let text = read_to_string(path)?;
    let display = path.display().to_string();
    let id_index: HashMap<&str, usize> = location_ids
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i))
        .collect();

    let mut parsed: Vec<(usize, Vec<String>)> = Vec::new();
    for (line_idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<String> = line.split(',').map(|s| s.trim().to_string()).collect();
        if fields.len() != 3 {
            return Err(Error::ingest(
                &display,
                line_idx + 1,
                format!("expected 3 fields, found {}", fields.len()),
            ));
        }
        parsed.push((line_idx + 1, fields));
    }
    if parsed.is_empty() {
        return Err(Error::ingest(&display, 1, "graph file has no rows"));
    }

    let as_edge = |fields: &[String]| -> Option<(usize, usize, f64)> {
        let src = id_index.get(fields[0].as_str())?;
        let dst = id_index.get(fields[1].as_str())?;
        let d: f64 = fields[2].parse().ok()?;
        Some((*src, *dst, d))
    };
    let as_coordinate = |fields: &[String]| -> Option<(usize, f64, f64)> {
        let id = id_index.get(fields[0].as_str())?;
        let x: f64 = fields[1].parse().ok()?;
        let y: f64 = fields[2].parse().ok()?;
        Some((*id, x, y))
    };

    let all_edges = parsed.iter().all(|(_, f)| as_edge(f).is_some());
    let all_coords = parsed.iter().all(|(_, f)| as_coordinate(f).is_some());
    match (all_edges, all_coords) {
        (true, true) => Err(Error::ingest(
            &display,
            parsed[0].0,
            "rows parse as both edges and coordinates; rename location ids to disambiguate",
        )),
        (true, false) => {
            let mut edges = Vec::with_capacity(parsed.len());
            for (line, fields) in &parsed {
                let (src, dst, d) = as_edge(fields).expect("checked above");
                if !d.is_finite() || d < 0.0 {
                    return Err(Error::ingest(
                        &display,
                        *line,
                        format!("distance {d} must be finite and nonnegative"),
                    ));
                }
                edges.push((src, dst, d));
            }
            Ok(GraphData::Edges(edges))
        }
        (false, true) => {
            let mut coords: Vec<Option<(f64, f64)>> = vec![None; location_ids.len()];
            for (line, fields) in &parsed {
                let (id, x, y) = as_coordinate(fields).expect("checked above");
                if coords[id].is_some() {
                    return Err(Error::ingest(
                        &display,
                        *line,
                        format!("duplicate coordinates for location '{}'", fields[0]),
                    ));
                }
                coords[id] = Some((x, y));
            }
            let missing: Vec<&str> = coords
                .iter()
                .zip(location_ids)
                .filter(|(c, _)| c.is_none())
                .map(|(_, id)| id.as_str())
                .collect();
            if !missing.is_empty() {
                return Err(Error::ingest(
                    &display,
                    parsed[0].0,
                    format!("no coordinates for location(s): {}", missing.join(", ")),
                ));
            }
            Ok(GraphData::Coordinates(
                coords.into_iter().map(|c| c.unwrap()).collect(),
            ))
        }
        (false, false) => {
            // Point at the first row that fails both readings.
            let (line, fields) = parsed
                .iter()
                .find(|(_, f)| as_edge(f).is_none() && as_coordinate(f).is_none())
                .expect("at least one row fails both readings");
            let named = if id_index.contains_key(fields[0].as_str()) {
                fields[1].clone()
            } else {
                fields[0].clone()
            };
            Err(Error::ingest(
                &display,
                *line,
                format!("'{named}' is neither a known location id nor a number"),
            ))
        }
    }
}

/// Writes a value table in the ingestion format. `NaN` becomes an empty cell.
pub fn write_value_table(
    path: impl AsRef<Path>,
    values: &DMatrix<f64>,
    location_ids: &[String],
) -> Result<()> {
    let path = path.as_ref();
    if location_ids.len() != values.ncols() {
        return Err(Error::shape("id count does not match columns"));
    }
    let mut out = String::new();
    out.push_str(&location_ids.join(","));
    out.push('\n');
    for r in 0..values.nrows() {
        let row: Vec<String> = (0..values.ncols())
            .map(|c| {
                let v = values[(r, c)];
                if v.is_finite() {
                    format!("{v}")
                } else {
                    String::new()
                }
            })
            .collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Writes a graph file in the edge-list form.
pub fn write_edge_list(
    path: impl AsRef<Path>,
    edges: &[(usize, usize, f64)],
    location_ids: &[String],
) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for &(src, dst, d) in edges {
        out.push_str(&format!("{},{},{}\n", location_ids[src], location_ids[dst], d));
    }
    fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
}
