//! Patch files: a JSON header `<stem>.json` and a CSV node table `<stem>.csv`.
//!
//! Header fields: `format` ("translator-lab-patch"), `version` (1), `n`, `m`,
//! `direction` (n+m numbers), `lower`, `upper`, `shape` (per axis) and
//! `nodes_file` (CSV name, relative to the header). The CSV has the columns
//! `node,x1..xn,u1..um`, one row per node in row-major order (last axis
//! fastest). Numbers are written in the shortest decimal form that parses
//! back to the same double, so a write/read cycle is bit-identical.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::GraphPatch;
use crate::error::{LabError, Result};
use crate::grid::Grid;

pub const PATCH_FORMAT: &str = "translator-lab-patch";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatchHeader {
    pub format: String,
    pub version: u32,
    pub n: usize,
    pub m: usize,
    pub direction: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub shape: Vec<usize>,
    pub nodes_file: String,
}

/// Writes `<stem>.json` and `<stem>.csv`; returns both paths.
pub fn write_patch(patch: &GraphPatch, stem: &Path) -> Result<(PathBuf, PathBuf)> {
    let json_path = stem.with_extension("json");
    let csv_path = stem.with_extension("csv");
    let nodes_file = csv_path
        .file_name()
        .and_then(|s| s.to_str())
        .ok_or_else(|| LabError::InvalidInput(format!("bad output path {}", stem.display())))?
        .to_string();
    let grid = patch.grid();
    let header = PatchHeader {
        format: PATCH_FORMAT.into(),
        version: 1,
        n: patch.n(),
        m: patch.m(),
        direction: patch.direction().to_vec(),
        lower: grid.lower().to_vec(),
        upper: grid.upper().to_vec(),
        shape: grid.shape().to_vec(),
        nodes_file,
    };
    if let Some(dir) = json_path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    fs::write(&json_path, serde_json::to_string_pretty(&header)? + "\n")?;
    let mut w = csv::Writer::from_path(&csv_path)?;
    let mut head = vec!["node".to_string()];
    head.extend((1..=patch.n()).map(|i| format!("x{i}")));
    head.extend((1..=patch.m()).map(|a| format!("u{a}")));
    w.write_record(&head)?;
    for k in 0..grid.len() {
        let mut row = vec![k.to_string()];
        row.extend(grid.point(k).iter().map(|x| format!("{x:?}")));
        row.extend((0..patch.m()).map(|a| format!("{:?}", patch.value(k, a))));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok((json_path, csv_path))
}

/// Reads a patch from its JSON header (the `.json` path or the bare stem).
pub fn read_patch(path: &Path) -> Result<GraphPatch> {
    let json_path = if path.extension().is_some_and(|e| e == "json") { path.to_path_buf() } else { path.with_extension("json") };
    let text = fs::read_to_string(&json_path)
        .map_err(|e| LabError::Io(std::io::Error::new(e.kind(), format!("{}: {e}", json_path.display()))))?;
    let header: PatchHeader = serde_json::from_str(&text)?;
    if header.format != PATCH_FORMAT || header.version != 1 {
        return Err(LabError::Parse(format!("{} is not a version-1 patch header", json_path.display())));
    }
    if header.shape.len() != header.n {
        return Err(LabError::Parse("header shape does not match n".into()));
    }
    let grid = Grid::new(header.lower.clone(), header.upper.clone(), header.shape.clone())?;
    let csv_path = json_path.parent().unwrap_or(Path::new(".")).join(&header.nodes_file);
    let mut r = csv::Reader::from_path(&csv_path)?;
    let cols = 1 + header.n + header.m;
    let mut u = Vec::with_capacity(grid.len() * header.m);
    let mut count = 0;
    for (row_no, rec) in r.records().enumerate() {
        let rec = rec?;
        if rec.len() != cols {
            return Err(LabError::Parse(format!("row {row_no}: expected {cols} columns, found {}", rec.len())));
        }
        let parse = |i: usize| -> Result<f64> {
            rec[i].trim().parse::<f64>().map_err(|e| LabError::Parse(format!("row {row_no}, column {i}: {e}")))
        };
        let node: usize = rec[0].trim().parse().map_err(|e| LabError::Parse(format!("row {row_no}: node index: {e}")))?;
        if node != row_no || node >= grid.len() {
            return Err(LabError::Parse(format!("row {row_no}: node {node} out of order")));
        }
        for a in 0..header.n {
            let x = parse(1 + a)?;
            let expect = grid.coord(node, a);
            if (x - expect).abs() > 1e-9 * (1.0 + expect.abs()) {
                return Err(LabError::Parse(format!("row {row_no}: coordinate {x} does not lie on the grid ({expect})")));
            }
        }
        for a in 0..header.m {
            u.push(parse(1 + header.n + a)?);
        }
        count += 1;
    }
    if count != grid.len() {
        return Err(LabError::Parse(format!("{count} node rows for a grid of {} nodes", grid.len())));
    }
    GraphPatch::new(grid, header.m, u, header.direction)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_identical() {
        let dir = tempfile::tempdir().unwrap();
        let grid = Grid::new(vec![-1.2, 0.0], vec![1.2, 0.7], vec![7, 5]).unwrap();
        let p = GraphPatch::from_fn(grid, 2, vec![0.0, 0.6, 0.0, 0.8], |x| {
            vec![(x[0] * 1.3).sin() / 3.0, 1e-300 * x[1] - 7.25e12 * x[0]]
        })
        .unwrap();
        let (json, _) = write_patch(&p, &dir.path().join("sub/patch")).unwrap();
        let q = read_patch(&json).unwrap();
        assert_eq!(p, q);
        let bits = |g: &GraphPatch| g.values().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&p), bits(&q));
        assert_eq!(read_patch(&dir.path().join("sub/patch")).unwrap(), p);
    }

    #[test]
    fn missing_file_names_the_path() {
        let err = read_patch(Path::new("/nonexistent/where.json")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/where.json"));
    }

    #[test]
    fn truncated_table_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let grid = Grid::cube(1, 0.0, 1.0, 5).unwrap();
        let p = GraphPatch::new(grid, 1, vec![0.0; 5], vec![0.0, 1.0]).unwrap();
        let (json, csv) = write_patch(&p, &dir.path().join("p")).unwrap();
        let text = fs::read_to_string(&csv).unwrap();
        let cut: Vec<&str> = text.lines().take(4).collect();
        fs::write(&csv, cut.join("\n") + "\n").unwrap();
        assert!(matches!(read_patch(&json), Err(LabError::Parse(_))));
    }
}
