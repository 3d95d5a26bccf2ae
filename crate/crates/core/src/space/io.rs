//! Line-oriented text format for finite spaces.
//!
//! ```text
//! mmlab-space 1
//! n 3
//! K 0
//! N_dim 2
//! D 1
//! label some text
//! covering_radius 0.25        (optional)
//! volume 1                    (optional)
//! growth_dim 1                (optional)
//! ambient {"kind":...}        (optional, followed by a coords block)
//! coords
//! <one line of coordinates per point>
//! weight
//! <one weight per line>
//! dist
//! <row i: entries j = 0..=i of the lower triangle>
//! end
//! ```
//!
//! Blank lines and lines starting with `#` are ignored. Numbers are written
//! with 17 significant digits so files round-trip exactly.

use std::path::Path;
use std::sync::Arc;

use super::{AmbientEmbedding, AmbientSpace, FiniteMMSpace, SpaceMeta, Violation};
use crate::error::{Error, Result};

const MAGIC: &str = "mmlab-space 1";

fn fmt_f(x: f64) -> String {
    format!("{x:.17e}")
}

pub fn to_text(space: &FiniteMMSpace) -> String {
    let meta = space.meta();
    let n = space.len();
    let mut out = String::with_capacity(n * n * 12 + 256);
    out.push_str(MAGIC);
    out.push('\n');
    out.push_str(&format!("n {n}\n"));
    out.push_str(&format!("K {}\n", fmt_f(meta.curvature)));
    out.push_str(&format!("N_dim {}\n", fmt_f(meta.dimension)));
    out.push_str(&format!("D {}\n", fmt_f(meta.diameter_bound)));
    out.push_str(&format!("label {}\n", meta.label.replace('\n', " ")));
    if let Some(c) = meta.covering_radius {
        out.push_str(&format!("covering_radius {}\n", fmt_f(c)));
    }
    if let Some(v) = meta.volume {
        out.push_str(&format!("volume {}\n", fmt_f(v)));
    }
    if let Some(g) = meta.growth_dim {
        out.push_str(&format!("growth_dim {}\n", fmt_f(g)));
    }
    if let Some(emb) = &meta.ambient {
        out.push_str("ambient ");
        out.push_str(&serde_json::to_string(emb.ambient.as_ref()).expect("ambient serializes"));
        out.push_str("\ncoords\n");
        for c in &emb.coords {
            let line: Vec<String> = c.iter().map(|x| fmt_f(*x)).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
    }
    out.push_str("weight\n");
    for w in space.weights() {
        out.push_str(&fmt_f(*w));
        out.push('\n');
    }
    out.push_str("dist\n");
    for i in 0..n {
        let row: Vec<String> = (0..=i).map(|j| fmt_f(space.dist(i, j))).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out.push_str("end\n");
    out
}

struct Lines<'a> {
    source: &'a str,
    items: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Lines<'a> {
    fn err(&self, line: usize, msg: impl Into<String>) -> Error {
        Error::Parse { source_name: self.source.to_string(), line, msg: msg.into() }
    }

    fn last_line(&self) -> usize {
        self.items.last().map_or(1, |l| l.0)
    }

    fn next(&mut self) -> Result<(usize, &'a str)> {
        let item = self
            .items
            .get(self.pos)
            .copied()
            .ok_or_else(|| self.err(self.last_line(), "unexpected end of file"))?;
        self.pos += 1;
        Ok(item)
    }

    fn peek_key(&self) -> Option<&'a str> {
        self.items.get(self.pos).map(|(_, l)| l.split_whitespace().next().unwrap_or(""))
    }

    fn keyed(&mut self, key: &str) -> Result<(usize, &'a str)> {
        let (ln, line) = self.next()?;
        match line.split_once(char::is_whitespace) {
            Some((k, rest)) if k == key => Ok((ln, rest.trim())),
            _ if line == key => Ok((ln, "")),
            _ => Err(self.err(ln, format!("expected `{key} ...`, found `{line}`"))),
        }
    }

    fn keyed_f64(&mut self, key: &str) -> Result<(usize, f64)> {
        let (ln, rest) = self.keyed(key)?;
        let v = rest
            .parse::<f64>()
            .map_err(|_| self.err(ln, format!("`{key}` needs a number, found `{rest}`")))?;
        Ok((ln, v))
    }

    fn numbers(&mut self, expect: usize, what: &str) -> Result<(usize, Vec<f64>)> {
        let (ln, line) = self.next()?;
        let vals: std::result::Result<Vec<f64>, _> = line.split_whitespace().map(str::parse::<f64>).collect();
        let vals = vals.map_err(|_| self.err(ln, format!("malformed number in {what}")))?;
        if expect != usize::MAX && vals.len() != expect {
            return Err(self.err(ln, format!("{what}: expected {expect} numbers, found {}", vals.len())));
        }
        Ok((ln, vals))
    }
}

/// Parses and validates a space. `source_name` appears in diagnostics.
pub fn from_text(text: &str, source_name: &str) -> Result<FiniteMMSpace> {
    let items: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .collect();
    let mut p = Lines { source: source_name, items, pos: 0 };
    let (ln, magic) = p.next()?;
    if magic != MAGIC {
        return Err(p.err(ln, format!("expected header `{MAGIC}`")));
    }
    let (n_line, n_raw) = p.keyed("n")?;
    let n: usize = n_raw.parse().map_err(|_| p.err(n_line, "`n` needs a nonnegative integer"))?;
    if n == 0 {
        return Err(p.err(n_line, "space needs at least one point"));
    }
    let (k_line, k) = p.keyed_f64("K")?;
    let (nd_line, n_dim) = p.keyed_f64("N_dim")?;
    let (d_line, d) = p.keyed_f64("D")?;
    let (_, label) = p.keyed("label")?;
    let mut meta = SpaceMeta::new(k, n_dim, d, label);
    if p.peek_key() == Some("covering_radius") {
        meta.covering_radius = Some(p.keyed_f64("covering_radius")?.1);
    }
    if p.peek_key() == Some("volume") {
        meta.volume = Some(p.keyed_f64("volume")?.1);
    }
    if p.peek_key() == Some("growth_dim") {
        meta.growth_dim = Some(p.keyed_f64("growth_dim")?.1);
    }
    let mut coord_lines = Vec::new();
    let mut ambient = None;
    if p.peek_key() == Some("ambient") {
        let (ln, json) = p.keyed("ambient")?;
        let amb: AmbientSpace =
            serde_json::from_str(json).map_err(|e| p.err(ln, format!("bad ambient description: {e}")))?;
        p.keyed("coords")?;
        let mut coords = Vec::with_capacity(n);
        for _ in 0..n {
            let (ln, c) = p.numbers(amb.coord_len().unwrap_or(usize::MAX), "coords")?;
            amb.check_coords(&c).map_err(|e| p.err(ln, e.to_string()))?;
            coord_lines.push(ln);
            coords.push(c);
        }
        ambient = Some(AmbientEmbedding { ambient: Arc::new(amb), coords });
    }
    meta.ambient = ambient;
    let (weight_header, _) = p.keyed("weight")?;
    let mut weight = Vec::with_capacity(n);
    let mut weight_lines = Vec::with_capacity(n);
    for _ in 0..n {
        let (ln, w) = p.numbers(1, "weight")?;
        weight.push(w[0]);
        weight_lines.push(ln);
    }
    p.keyed("dist")?;
    let mut dist = vec![0.0; n * n];
    let mut row_lines = Vec::with_capacity(n);
    for i in 0..n {
        let (ln, row) = p.numbers(i + 1, "dist row")?;
        for (j, &v) in row.iter().enumerate() {
            dist[i * n + j] = v;
            dist[j * n + i] = v;
        }
        if row[i] != 0.0 {
            return Err(p.err(ln, format!("diagonal entry of row {i} must be 0")));
        }
        row_lines.push(ln);
    }
    p.keyed("end")?;
    if p.pos != p.items.len() {
        return Err(p.err(p.items[p.pos].0, "trailing content after `end`"));
    }

    FiniteMMSpace::new_detailed(dist, weight, meta).map_err(|v| {
        let ln = match &v {
            Violation::NonFinite { i, j } | Violation::Asymmetric { i, j } | Violation::NotDistinct { i, j } => {
                row_lines[(*i).max(*j)]
            }
            Violation::Triangle { i, j, k, .. } => row_lines[(*i).max(*j).max(*k)],
            Violation::Diagonal { i } => row_lines[*i],
            Violation::Weight { i } => weight_lines[*i],
            Violation::Mass(_) => weight_header,
            Violation::Diameter { .. } => d_line,
            Violation::Meta(_) => {
                if n_dim > 1.0 {
                    if k.is_finite() {
                        d_line
                    } else {
                        k_line
                    }
                } else {
                    nd_line
                }
            }
            Violation::Embedding { i, j, .. } => coord_lines[(*i).max(*j)],
            Violation::Shape(_) => n_line,
        };
        p.err(ln, v.to_string())
    })
}

pub fn read_space(path: &Path) -> Result<FiniteMMSpace> {
    let text = std::fs::read_to_string(path)?;
    from_text(&text, &path.display().to_string())
}

/// Writes atomically: a temporary sibling file is renamed into place.
pub fn write_space(space: &FiniteMMSpace, path: &Path) -> Result<()> {
    write_atomic(path, to_text(space).as_bytes())
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    use std::io::Write;
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}
