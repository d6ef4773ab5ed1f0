//! Point cloud, pose and matrix files.
//!
//! Clouds are ASCII PLY (`x y z [nx ny nz]`) or CSV with a header row,
//! chosen by file extension. Floats are written in shortest round-trip
//! form, so reading a written file reproduces the values exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use degen_icp_core::geometry::{Mat6, Pose, Vec3};
use nalgebra::Matrix4;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Cloud {
    pub points: Vec<Vec3>,
    pub normals: Option<Vec<Vec3>>,
}

impl Cloud {
    pub fn new(points: Vec<Vec3>) -> Self {
        Self { points, normals: None }
    }

    pub fn with_normals(points: Vec<Vec3>, normals: Vec<Vec3>) -> Self {
        Self {
            points,
            normals: Some(normals),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CloudFormat {
    Ply,
    Csv,
}

impl CloudFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
            Some("ply") => Ok(CloudFormat::Ply),
            Some("csv") => Ok(CloudFormat::Csv),
            _ => bail!("{}: unknown cloud format (expected .ply or .csv)", path.display()),
        }
    }
}

pub fn read_cloud(path: &Path) -> Result<Cloud> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let cloud = match CloudFormat::from_path(path)? {
        CloudFormat::Ply => parse_ply(&text),
        CloudFormat::Csv => parse_csv(&text),
    };
    cloud.with_context(|| format!("parsing {}", path.display()))
}

pub fn write_cloud(path: &Path, cloud: &Cloud) -> Result<()> {
    let text = match CloudFormat::from_path(path)? {
        CloudFormat::Ply => format_ply(cloud),
        CloudFormat::Csv => format_csv(cloud),
    };
    write_text(path, &text)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn rows(cloud: &Cloud) -> impl Iterator<Item = Vec<f64>> + '_ {
    cloud.points.iter().enumerate().map(move |(i, p)| {
        let mut row = vec![p.x, p.y, p.z];
        if let Some(n) = &cloud.normals {
            row.extend_from_slice(&[n[i].x, n[i].y, n[i].z]);
        }
        row
    })
}

fn join(row: &[f64], sep: &str) -> String {
    row.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(sep)
}

pub fn format_ply(cloud: &Cloud) -> String {
    let mut out = String::new();
    out.push_str("ply\nformat ascii 1.0\n");
    let _ = writeln!(out, "element vertex {}", cloud.points.len());
    let mut names = vec!["x", "y", "z"];
    if cloud.normals.is_some() {
        names.extend(["nx", "ny", "nz"]);
    }
    for n in &names {
        let _ = writeln!(out, "property double {n}");
    }
    out.push_str("end_header\n");
    for row in rows(cloud) {
        out.push_str(&join(&row, " "));
        out.push('\n');
    }
    out
}

pub fn format_csv(cloud: &Cloud) -> String {
    let mut out = String::from(if cloud.normals.is_some() { "x,y,z,nx,ny,nz\n" } else { "x,y,z\n" });
    for row in rows(cloud) {
        out.push_str(&join(&row, ","));
        out.push('\n');
    }
    out
}

/// Builds a cloud from rows given the column indices of x/y/z and
/// optionally nx/ny/nz.
fn assemble(
    data: Vec<Vec<f64>>,
    columns: &[Option<usize>; 6],
) -> Result<Cloud> {
    let [Some(x), Some(y), Some(z), nx, ny, nz] = *columns else {
        bail!("missing x, y or z column");
    };
    let normal_cols = match (nx, ny, nz) {
        (Some(a), Some(b), Some(c)) => Some((a, b, c)),
        (None, None, None) => None,
        _ => bail!("incomplete normal columns"),
    };
    let points = data.iter().map(|r| Vec3::new(r[x], r[y], r[z])).collect();
    let normals = normal_cols.map(|(a, b, c)| data.iter().map(|r| Vec3::new(r[a], r[b], r[c])).collect());
    Ok(Cloud { points, normals })
}

fn column_indices<'a>(names: impl Iterator<Item = &'a str>) -> [Option<usize>; 6] {
    let mut cols = [None; 6];
    for (i, name) in names.enumerate() {
        let slot = match name.trim() {
            "x" => 0,
            "y" => 1,
            "z" => 2,
            "nx" => 3,
            "ny" => 4,
            "nz" => 5,
            _ => continue,
        };
        cols[slot] = Some(i);
    }
    cols
}

fn parse_row(line: &str, sep: Option<char>, width: usize, line_no: usize) -> Result<Vec<f64>> {
    let fields: Vec<&str> = match sep {
        Some(c) => line.split(c).collect(),
        None => line.split_whitespace().collect(),
    };
    ensure!(fields.len() == width, "line {line_no}: expected {width} values, found {}", fields.len());
    fields
        .iter()
        .map(|f| f.trim().parse::<f64>().with_context(|| format!("line {line_no}: bad number {f:?}")))
        .collect()
}

pub fn parse_ply(text: &str) -> Result<Cloud> {
    let mut lines = text.lines().enumerate();
    ensure!(lines.next().map(|(_, l)| l.trim()) == Some("ply"), "missing ply magic");
    let mut count = None;
    let mut props = Vec::new();
    let mut in_vertex = false;
    loop {
        let Some((_, line)) = lines.next() else {
            bail!("missing end_header");
        };
        let words: Vec<&str> = line.split_whitespace().collect();
        match words.as_slice() {
            ["format", "ascii", _] => {}
            ["format", other, ..] => bail!("unsupported ply format {other}"),
            ["comment", ..] | ["obj_info", ..] | [] => {}
            ["element", "vertex", n] => {
                count = Some(n.parse::<usize>().context("bad vertex count")?);
                in_vertex = true;
            }
            ["element", name, _] => bail!("unsupported ply element {name}"),
            ["property", "list", ..] => bail!("list properties are not supported"),
            ["property", _, name] if in_vertex => props.push(name.to_string()),
            ["end_header"] => break,
            _ => bail!("unexpected header line {line:?}"),
        }
    }
    let count = count.context("missing vertex element")?;
    let mut data = Vec::with_capacity(count);
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        ensure!(data.len() < count, "more vertices than declared");
        data.push(parse_row(line, None, props.len(), i + 1)?);
    }
    ensure!(data.len() == count, "declared {count} vertices, found {}", data.len());
    assemble(data, &column_indices(props.iter().map(String::as_str)))
}

pub fn parse_csv(text: &str) -> Result<Cloud> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().context("empty csv")?;
    let width = header.split(',').count();
    let cols = column_indices(header.split(','));
    let mut data = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        data.push(parse_row(line, Some(','), width, i + 1)?);
    }
    assemble(data, &cols)
}

/// Row-major homogeneous matrix, one row per line.
pub fn format_pose(pose: &Pose) -> String {
    let m = pose.to_matrix4();
    format_rows(4, 4, |r, c| m[(r, c)])
}

pub fn format_matrix6(m: &Mat6) -> String {
    format_rows(6, 6, |r, c| m[(r, c)])
}

fn format_rows(rows: usize, cols: usize, at: impl Fn(usize, usize) -> f64) -> String {
    let mut out = String::new();
    for r in 0..rows {
        let row: Vec<f64> = (0..cols).map(|c| at(r, c)).collect();
        out.push_str(&join(&row, " "));
        out.push('\n');
    }
    out
}

pub fn parse_pose(text: &str) -> Result<Pose> {
    let values: Vec<f64> = text
        .split_whitespace()
        .map(|w| w.parse::<f64>().with_context(|| format!("bad number {w:?}")))
        .collect::<Result<_>>()?;
    ensure!(values.len() == 16, "pose needs 16 numbers, found {}", values.len());
    let m = Matrix4::from_row_slice(&values);
    ensure!(
        (m.fixed_view::<1, 4>(3, 0) - nalgebra::RowVector4::new(0.0, 0.0, 0.0, 1.0)).amax() < 1e-9,
        "last pose row must be 0 0 0 1"
    );
    let pose = Pose::from_matrix4(&m);
    ensure!(pose.orthonormality_error() < 1e-6, "pose rotation is not orthonormal");
    Ok(pose)
}

pub fn read_pose(path: &Path) -> Result<Pose> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_pose(&text).with_context(|| format!("parsing {}", path.display()))
}
