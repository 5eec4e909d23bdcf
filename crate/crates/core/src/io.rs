//! Text formats: XYZ and ASCII PLY clouds, landmark and weight files, flat
//! `key value` configuration, and result records.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{FgaError, Result};
use crate::masses::LandmarkSet;
use crate::types::{FgaParams, Point, PointCloud, RigidTransform};

/// A cloud whose dimension is only known after parsing.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyCloud {
    D2(PointCloud<2>),
    D3(PointCloud<3>),
}

impl AnyCloud {
    pub fn dim(&self) -> usize {
        match self {
            AnyCloud::D2(_) => 2,
            AnyCloud::D3(_) => 3,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            AnyCloud::D2(c) => c.len(),
            AnyCloud::D3(c) => c.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn into_3d(self) -> Result<PointCloud<3>> {
        match self {
            AnyCloud::D3(c) => Ok(c),
            other => Err(FgaError::DimensionMismatch { expected: 3, actual: other.dim() }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CloudFormat {
    Xyz,
    PlyAscii,
}

impl CloudFormat {
    /// `.ply` is PLY; `.xyz`, `.txt` and `.pts` are XYZ.
    pub fn from_path(path: &Path) -> Result<Self> {
        let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
        match ext.as_deref() {
            Some("ply") => Ok(CloudFormat::PlyAscii),
            Some("xyz") | Some("txt") | Some("pts") => Ok(CloudFormat::Xyz),
            _ => Err(FgaError::UnsupportedFormat(path.display().to_string())),
        }
    }
}

fn parse_err(line: usize, reason: impl Into<String>) -> FgaError {
    FgaError::Parse { line, reason: reason.into() }
}

fn parse_f64(tok: &str, line: usize) -> Result<f64> {
    let v: f64 = tok.parse().map_err(|_| parse_err(line, format!("not a number: {tok:?}")))?;
    if !v.is_finite() {
        return Err(parse_err(line, format!("non-finite value {tok:?}")));
    }
    Ok(v)
}

fn rows_to_cloud(rows: Vec<Vec<f64>>, dim: usize) -> Result<AnyCloud> {
    match dim {
        2 => Ok(AnyCloud::D2(PointCloud::new(rows.iter().map(|r| Point::<2>::new(r[0], r[1])).collect()))),
        3 => Ok(AnyCloud::D3(PointCloud::new(rows.iter().map(|r| Point::<3>::new(r[0], r[1], r[2])).collect()))),
        d => Err(FgaError::UnsupportedFormat(format!("{d}-dimensional points"))),
    }
}

/// XYZ text: `D` numbers per line; blank lines and `#` comments are skipped.
/// The dimension is taken from the first data line.
pub fn parse_xyz(text: &str) -> Result<AnyCloud> {
    let mut rows = Vec::new();
    let mut dim = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line.split_whitespace().map(|t| parse_f64(t, i + 1)).collect::<Result<Vec<_>>>()?;
        let d = *dim.get_or_insert(row.len());
        if row.len() != d {
            return Err(parse_err(i + 1, format!("expected {d} columns, found {}", row.len())));
        }
        if d != 2 && d != 3 {
            return Err(parse_err(i + 1, format!("expected 2 or 3 columns, found {d}")));
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(FgaError::EmptyCloud);
    }
    rows_to_cloud(rows, dim.unwrap_or(3))
}

/// ASCII PLY with a `vertex` element carrying float `x y z` properties.
/// Other vertex properties and any later elements are ignored.
pub fn parse_ply(text: &str) -> Result<AnyCloud> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, l)) if l.trim() == "ply" => {}
        _ => return Err(parse_err(1, "missing 'ply' magic")),
    }
    let mut vertex_count = None;
    let mut in_vertex = false;
    let mut props: Vec<String> = Vec::new();
    let mut seen_vertex = false;
    let mut before_vertex = 0usize;
    let mut header_done = false;
    for (i, raw) in lines.by_ref() {
        let toks: Vec<&str> = raw.split_whitespace().collect();
        match toks.as_slice() {
            ["format", "ascii", _] => {}
            ["format", other, ..] => {
                return Err(FgaError::UnsupportedFormat(format!("PLY format {other}")));
            }
            ["comment", ..] | ["obj_info", ..] | [] => {}
            ["element", name, count] => {
                let n: usize = count.parse().map_err(|_| parse_err(i + 1, "bad element count"))?;
                in_vertex = *name == "vertex";
                if in_vertex {
                    vertex_count = Some(n);
                    seen_vertex = true;
                } else if !seen_vertex {
                    before_vertex += n;
                }
            }
            ["property", "list", ..] => {
                if in_vertex {
                    return Err(FgaError::UnsupportedFormat("list property on vertex".into()));
                }
            }
            ["property", _ty, name] => {
                if in_vertex {
                    props.push((*name).to_string());
                }
            }
            ["end_header"] => {
                header_done = true;
                break;
            }
            _ => return Err(parse_err(i + 1, format!("unexpected header line {raw:?}"))),
        }
    }
    if !header_done {
        return Err(parse_err(text.lines().count(), "missing end_header"));
    }
    let n = vertex_count.ok_or_else(|| parse_err(1, "no vertex element"))?;
    if before_vertex > 0 {
        return Err(FgaError::UnsupportedFormat("elements before vertex".into()));
    }
    let col = |axis: &str| {
        props.iter().position(|p| p == axis).ok_or_else(|| parse_err(1, format!("missing property {axis}")))
    };
    let (cx, cy, cz) = (col("x")?, col("y")?, col("z")?);

    let mut rows = Vec::with_capacity(n);
    let mut last_line = 0;
    for (i, raw) in lines {
        last_line = i + 1;
        if rows.len() == n {
            break;
        }
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let vals = line.split_whitespace().map(|t| parse_f64(t, i + 1)).collect::<Result<Vec<_>>>()?;
        if vals.len() != props.len() {
            return Err(parse_err(i + 1, format!("expected {} values, found {}", props.len(), vals.len())));
        }
        rows.push(vec![vals[cx], vals[cy], vals[cz]]);
    }
    if rows.len() != n {
        return Err(parse_err(last_line, format!("header declares {n} vertices, body has {}", rows.len())));
    }
    if rows.is_empty() {
        return Err(FgaError::EmptyCloud);
    }
    rows_to_cloud(rows, 3)
}

pub fn load_cloud(path: &Path) -> Result<AnyCloud> {
    let format = CloudFormat::from_path(path)?;
    let text = fs::read_to_string(path).map_err(|e| FgaError::Io(format!("{}: {e}", path.display())))?;
    match format {
        CloudFormat::Xyz => parse_xyz(&text),
        CloudFormat::PlyAscii => parse_ply(&text),
    }
}

/// XYZ text with shortest round-trip decimals, so parsing gives back the same bits.
pub fn format_xyz<const D: usize>(cloud: &PointCloud<D>) -> String {
    let mut out = String::new();
    for p in cloud.points() {
        let row: Vec<String> = p.iter().map(|c| format!("{c:?}")).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    out
}

pub fn write_cloud<const D: usize>(path: &Path, cloud: &PointCloud<D>) -> Result<()> {
    fs::write(path, format_xyz(cloud))?;
    Ok(())
}

/// Whitespace-separated `template_index reference_index` rows.
pub fn parse_landmarks(text: &str) -> Result<Vec<(usize, usize)>> {
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 2 {
            return Err(parse_err(i + 1, "expected two indices"));
        }
        let idx = |t: &str| t.parse::<usize>().map_err(|_| parse_err(i + 1, format!("bad index {t:?}")));
        pairs.push((idx(toks[0])?, idx(toks[1])?));
    }
    Ok(pairs)
}

pub fn load_landmarks(path: &Path, template_len: usize, reference_len: usize) -> Result<LandmarkSet> {
    LandmarkSet::new(parse_landmarks(&fs::read_to_string(path)?)?, template_len, reference_len)
}

/// One decimal weight per line.
pub fn parse_weights(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v: f64 = line.parse().map_err(|_| parse_err(i + 1, format!("not a number: {line:?}")))?;
        if !v.is_finite() {
            return Err(FgaError::NonFiniteWeight { index: out.len(), value: v });
        }
        out.push(v);
    }
    Ok(out)
}

pub fn load_weights(path: &Path) -> Result<Vec<f64>> {
    parse_weights(&fs::read_to_string(path)?)
}

/// Flat `key value` (or `key = value`) lines; later keys override earlier ones.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = match line.split_once('=') {
            Some((k, v)) => (k.trim(), v.trim()),
            None => line.split_once(char::is_whitespace).map(|(k, v)| (k, v.trim())).unwrap_or((line, "")),
        };
        if k.is_empty() || v.is_empty() {
            return Err(parse_err(i + 1, format!("expected 'key value', got {raw:?}")));
        }
        map.insert(k.replace('-', "_"), v.to_string());
    }
    Ok(map)
}

/// Sets one [`FgaParams`] field by name. Returns `Ok(false)` for keys that
/// are not parameter names so callers can handle them elsewhere.
pub fn apply_param(params: &mut FgaParams, key: &str, value: &str) -> Result<bool> {
    let f = || value.parse::<f64>().map_err(|_| parse_err(0, format!("{key}: not a number: {value:?}")));
    let u = || value.parse::<usize>().map_err(|_| parse_err(0, format!("{key}: not a count: {value:?}")));
    match key {
        "g" | "G" => params.g = f()?,
        "epsilon" => params.epsilon = f()?,
        "eta" => params.eta = f()?,
        "dt" => params.dt = f()?,
        "theta" => params.theta = f()?,
        "sigma" => params.sigma = f()?,
        "rho" => params.rho = u()?,
        "max_depth" => params.max_depth = u()?,
        "norm_a" => params.norm_range.0 = f()?,
        "norm_b" => params.norm_range.1 = f()?,
        "conv_tol" => params.conv_tol = f()?,
        "max_iters" => params.max_iters = u()?,
        _ => return Ok(false),
    }
    Ok(true)
}

/// Transform values from text: either a record line `transform v…`, or all
/// numbers in the file (`D` rows of `D + 1`, or one row-major line).
pub fn parse_transform_values(text: &str) -> Result<Vec<f64>> {
    for (i, raw) in text.lines().enumerate() {
        let mut toks = raw.split_whitespace();
        if toks.next() == Some("transform") {
            return toks.map(|t| parse_f64(t, i + 1)).collect();
        }
    }
    let mut vals = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        for t in line.split_whitespace() {
            vals.push(parse_f64(t, i + 1)?);
        }
    }
    Ok(vals)
}

/// Poses file: one row-major `D x (D+1)` transform per non-comment line.
pub fn parse_poses<const D: usize>(text: &str) -> Result<Vec<RigidTransform<D>>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let vals = line.split_whitespace().map(|t| parse_f64(t, i + 1)).collect::<Result<Vec<_>>>()?;
        out.push(RigidTransform::from_rows(&vals).map_err(|e| parse_err(i + 1, e.to_string()))?);
    }
    Ok(out)
}

pub fn format_row(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(" ")
}

/// Ordered `key value` result record.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Record {
    entries: Vec<(String, String)>,
}

impl Record {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.entries.push((key.to_string(), value.to_string()));
        self
    }

    pub fn push_values(&mut self, key: &str, values: &[f64]) -> &mut Self {
        self.push(key, format_row(values))
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k} {v}");
        }
        out
    }

    pub fn parse(text: &str) -> Self {
        let entries = text
            .lines()
            .filter_map(|l| {
                let l = l.trim();
                if l.is_empty() {
                    return None;
                }
                let (k, v) = l.split_once(' ').unwrap_or((l, ""));
                Some((k.to_string(), v.to_string()))
            })
            .collect();
        Self { entries }
    }
}
