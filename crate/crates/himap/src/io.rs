//! File formats: tree JSON, cloud CSV, grid CSV.
//!
//! Reals are written with 17 significant digits (`{:.16e}`), which round-trips
//! every finite `f64` exactly; files use LF line endings and UTF-8. Every
//! writer here has a matching reader, and a write/read cycle reproduces the
//! original object bit for bit.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::quantile::QuantileGrid;
use crate::tree::{MassTree, TreeNode};

const TREE_FORMAT: &str = "himap-tree";

#[derive(Serialize, Deserialize)]
struct TreeFile {
    format: String,
    version: String,
    dim: usize,
    depth: usize,
    len: usize,
    /// Geometric axes split by the root block, in order.
    schedule: Vec<usize>,
    root_box: Vec<(f64, f64)>,
    nodes: Vec<TreeNode>,
}

pub fn tree_to_json(tree: &MassTree) -> Result<String> {
    let file = TreeFile {
        format: TREE_FORMAT.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        dim: tree.dim(),
        depth: tree.depth(),
        len: tree.len(),
        schedule: (0..tree.dim()).collect(),
        root_box: tree.root_box().to_vec(),
        nodes: tree.nodes().to_vec(),
    };
    Ok(serde_json::to_string_pretty(&file)?)
}

pub fn tree_from_json(text: &str) -> Result<MassTree> {
    let file: TreeFile = serde_json::from_str(text)?;
    if file.format != TREE_FORMAT {
        return Err(Error::Data(format!(
            "unexpected tree format marker {:?}",
            file.format
        )));
    }
    if file.nodes.is_empty() {
        return Err(Error::Data("tree file contains no nodes".into()));
    }
    if file.root_box.len() != file.dim {
        return Err(Error::Data(format!(
            "root box rank {} does not match dimension {}",
            file.root_box.len(),
            file.dim
        )));
    }
    let n = file.nodes.len() as u32;
    for node in &file.nodes {
        if let Some([a, b]) = node.children {
            if a >= n || b >= n {
                return Err(Error::Data("tree file has out-of-range child index".into()));
            }
        }
    }
    Ok(MassTree::from_parts(
        file.dim,
        file.depth,
        file.len,
        file.root_box,
        file.nodes,
    ))
}

pub fn save_tree<P: AsRef<Path>>(path: P, tree: &MassTree) -> Result<()> {
    fs::write(path, tree_to_json(tree)? + "\n")?;
    Ok(())
}

pub fn load_tree<P: AsRef<Path>>(path: P) -> Result<MassTree> {
    tree_from_json(&fs::read_to_string(path)?)
}

pub fn cloud_to_csv(cloud: &PointCloud) -> String {
    let mut out = String::new();
    let header: Vec<String> = (1..=cloud.dim()).map(|a| format!("x{a}")).collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for p in cloud.iter() {
        let row: Vec<String> = p.iter().map(|v| format!("{v:.16e}")).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

fn parse_field(raw: &str, line: usize) -> Result<f64> {
    let trimmed = raw.trim();
    if trimmed.is_empty() {
        return Err(Error::Data(format!("missing value on data row {line}")));
    }
    trimmed
        .parse::<f64>()
        .map_err(|_| Error::Parse(format!("invalid number {trimmed:?} on data row {line}")))
}

pub fn cloud_from_csv(text: &str) -> Result<PointCloud> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let dim = reader
        .headers()
        .map_err(|e| Error::Parse(format!("bad CSV header: {e}")))?
        .len();
    let mut data = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse(format!("bad CSV record: {e}")))?;
        if record.len() != dim {
            return Err(Error::Data(format!(
                "data row {} has {} fields, header has {dim}",
                i + 1,
                record.len()
            )));
        }
        for field in record.iter() {
            data.push(parse_field(field, i + 1)?);
        }
    }
    PointCloud::from_flat(data, dim)
}

pub fn save_cloud_csv<P: AsRef<Path>>(path: P, cloud: &PointCloud) -> Result<()> {
    fs::write(path, cloud_to_csv(cloud))?;
    Ok(())
}

pub fn load_cloud_csv<P: AsRef<Path>>(path: P) -> Result<PointCloud> {
    cloud_from_csv(&fs::read_to_string(path)?)
}

pub fn grid_to_csv(grid: &QuantileGrid) -> String {
    let mut out = String::new();
    let mut header = vec!["t".to_string()];
    header.extend((1..=grid.dim()).map(|a| format!("q{a}")));
    out.push_str(&header.join(","));
    out.push('\n');
    for g in 0..grid.grid() {
        let mut row = vec![format!("{:.16e}", grid.t_of(g))];
        row.extend(grid.value(g).iter().map(|v| format!("{v:.16e}")));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn grid_from_csv(text: &str) -> Result<QuantileGrid> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let cols = reader
        .headers()
        .map_err(|e| Error::Parse(format!("bad CSV header: {e}")))?
        .len();
    if cols < 2 {
        return Err(Error::Data(
            "grid CSV needs a t column and at least one coordinate column".into(),
        ));
    }
    let dim = cols - 1;
    let mut ts = Vec::new();
    let mut values = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse(format!("bad CSV record: {e}")))?;
        if record.len() != cols {
            return Err(Error::Data(format!(
                "data row {} has {} fields, header has {cols}",
                i + 1,
                record.len()
            )));
        }
        let mut fields = record.iter();
        ts.push(parse_field(fields.next().unwrap(), i + 1)?);
        for field in fields {
            values.push(parse_field(field, i + 1)?);
        }
    }
    let grid = QuantileGrid::from_values(values, dim)?;
    // The t column is structural: it must be exactly the dyadic midpoints.
    for (g, &t) in ts.iter().enumerate() {
        if t != grid.t_of(g) {
            return Err(Error::Data(format!(
                "row {} has t = {t}, expected grid midpoint {}",
                g + 1,
                grid.t_of(g)
            )));
        }
    }
    Ok(grid)
}

pub fn save_grid_csv<P: AsRef<Path>>(path: P, grid: &QuantileGrid) -> Result<()> {
    fs::write(path, grid_to_csv(grid))?;
    Ok(())
}

pub fn load_grid_csv<P: AsRef<Path>>(path: P) -> Result<QuantileGrid> {
    grid_from_csv(&fs::read_to_string(path)?)
}
