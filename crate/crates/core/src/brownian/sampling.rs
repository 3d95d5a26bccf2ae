use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::heat::SpectralHeatModel;
use crate::space::io::write_atomic;

/// Largest negative row mass that is clipped instead of rejected.
pub const CLIP_TOLERANCE: f64 = 1e-6;

/// Sampled trajectories on a common time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathEnsemble {
    time_grid: Vec<f64>,
    /// Row-major `M × |grid|` point indices.
    paths: Vec<u32>,
    start: usize,
    seed: u64,
    model_hash: String,
    /// Largest negative row mass clipped from a transition matrix.
    clip_mass: f64,
}

impl PathEnsemble {
    pub fn time_grid(&self) -> &[f64] {
        &self.time_grid
    }

    pub fn len(&self) -> usize {
        self.paths.len() / self.time_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn path(&self, i: usize) -> &[u32] {
        let l = self.time_grid.len();
        &self.paths[i * l..(i + 1) * l]
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn model_hash(&self) -> &str {
        &self.model_hash
    }

    pub fn clip_mass(&self) -> f64 {
        self.clip_mass
    }

    /// Index of `t` on the grid, matched to within `1e-12` relative.
    pub fn grid_index(&self, t: f64) -> Option<usize> {
        self.time_grid
            .iter()
            .position(|&s| (s - t).abs() <= 1e-12 * t.abs().max(1.0))
    }

    /// Positions of every path at grid index `col`.
    pub fn column(&self, col: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).map(move |i| self.path(i)[col] as usize)
    }

    /// Content digest of the ensemble.
    pub fn digest(&self) -> String {
        crate::numerics::sha256_hex(self.to_text().as_bytes())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("mmlab-paths 1\n");
        let _ = writeln!(s, "seed {}", self.seed);
        let _ = writeln!(s, "start {}", self.start);
        let _ = writeln!(s, "model_hash {}", self.model_hash);
        let _ = writeln!(s, "clip_mass {:.17e}", self.clip_mass);
        let _ = writeln!(s, "grid {}", self.time_grid.len());
        for t in &self.time_grid {
            let _ = writeln!(s, "{t:.17e}");
        }
        let _ = writeln!(s, "paths {}", self.len());
        for i in 0..self.len() {
            let row: Vec<String> = self.path(i).iter().map(|x| x.to_string()).collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        s.push_str("end\n");
        s
    }

    pub fn from_text(text: &str, source_name: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
        let mut next = || lines.next().ok_or_else(|| parse_err(source_name, 0, "unexpected end of file"));
        let (ln, magic) = next()?;
        if magic != "mmlab-paths 1" {
            return Err(parse_err(source_name, ln, "not an ensemble file"));
        }
        let mut field = |key: &str| -> Result<(usize, String)> {
            let (ln, l) = next()?;
            l.strip_prefix(key)
                .map(|v| (ln, v.trim().to_string()))
                .ok_or_else(|| parse_err(source_name, ln, &format!("expected `{key}`")))
        };
        let num = |(ln, v): (usize, String)| -> Result<f64> {
            v.parse().map_err(|_| parse_err(source_name, ln, "bad number"))
        };
        let int = |(ln, v): (usize, String)| -> Result<usize> {
            v.parse().map_err(|_| parse_err(source_name, ln, "bad integer"))
        };
        let seed = field("seed")?;
        let seed: u64 = seed.1.parse().map_err(|_| parse_err(source_name, seed.0, "bad seed"))?;
        let start = int(field("start")?)?;
        let model_hash = field("model_hash")?.1;
        let clip_mass = num(field("clip_mass")?)?;
        let len = int(field("grid")?)?;
        let mut time_grid = Vec::with_capacity(len);
        for _ in 0..len {
            time_grid.push(num(field("")?)?);
        }
        let m = int(field("paths")?)?;
        let mut paths = Vec::with_capacity(m * len);
        for _ in 0..m {
            let (ln, l) = field("")?;
            let row: Vec<u32> = l
                .split_whitespace()
                .map(|x| x.parse().map_err(|_| parse_err(source_name, ln, "bad point index")))
                .collect::<Result<_>>()?;
            if row.len() != len {
                return Err(parse_err(source_name, ln, "path length does not match the grid"));
            }
            paths.extend(row);
        }
        let (ln, l) = field("end")?;
        if !l.is_empty() {
            return Err(parse_err(source_name, ln, "trailing content after `end`"));
        }
        Ok(Self { time_grid, paths, start, seed, model_hash, clip_mass })
    }
}

fn parse_err(source_name: &str, line: usize, msg: &str) -> Error {
    Error::Parse { source_name: source_name.to_string(), line, msg: msg.to_string() }
}

pub fn read_ensemble(path: &Path) -> Result<PathEnsemble> {
    PathEnsemble::from_text(&std::fs::read_to_string(path)?, &path.display().to_string())
}

pub fn write_ensemble(ensemble: &PathEnsemble, path: &Path) -> Result<()> {
    write_atomic(path, ensemble.to_text().as_bytes())
}

/// Row-wise cumulative transition probabilities for one time step.
struct StepTable {
    n: usize,
    cdf: Vec<f64>,
}

impl StepTable {
    fn build(model: &SpectralHeatModel, dt: f64) -> Result<(Self, f64)> {
        let (p, clip) = clipped_transition(model, dt)?;
        let n = model.len();
        let mut cdf = vec![0.0; n * n];
        for x in 0..n {
            let mut acc = 0.0;
            for y in 0..n {
                acc += p[x * n + y];
                cdf[x * n + y] = acc;
            }
            cdf[x * n + n - 1] = f64::INFINITY;
        }
        Ok((Self { n, cdf }, clip))
    }

    fn step(&self, x: usize, u: f64) -> usize {
        let row = &self.cdf[x * self.n..(x + 1) * self.n];
        row.partition_point(|&c| c <= u)
    }
}

fn negative_mass(model: &SpectralHeatModel, dt: f64) -> f64 {
    let p = model.transition_matrix(dt);
    p.row_iter()
        .map(|r| r.iter().filter(|v| **v < 0.0).map(|v| -v).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Transition matrix with negative entries clipped and rows renormalized;
/// returns the largest clipped row mass.
fn clipped_transition(model: &SpectralHeatModel, dt: f64) -> Result<(Vec<f64>, f64)> {
    let n = model.len();
    let p = model.transition_matrix(dt);
    let mut out = vec![0.0; n * n];
    let mut worst: f64 = 0.0;
    for x in 0..n {
        let mut neg = 0.0;
        let mut total = 0.0;
        for y in 0..n {
            let v = p[(x, y)];
            if v < 0.0 {
                neg -= v;
            } else {
                out[x * n + y] = v;
                total += v;
            }
        }
        worst = worst.max(neg);
        out[x * n..(x + 1) * n].iter_mut().for_each(|v| *v /= total);
    }
    if worst > CLIP_TOLERANCE {
        let mut suggested = dt;
        for _ in 0..60 {
            suggested *= 2.0;
            if negative_mass(model, suggested) <= CLIP_TOLERANCE {
                break;
            }
        }
        return Err(Error::NegativeKernel { mass: worst, dt, suggested_t_pos: suggested });
    }
    Ok((out, worst))
}

/// Samples `m` independent paths from `start` on `time_grid` using the
/// exact transition matrix of every grid gap.
///
/// Path `i` draws from its own ChaCha8 stream (`seed`, stream `i`), one
/// uniform per step, so ensembles are reproducible and independent of the
/// thread count. Gaps equal to within `1e-9` relative share a matrix.
pub fn sample_paths(model: &SpectralHeatModel, start: usize, time_grid: &[f64], m: usize, seed: u64) -> Result<PathEnsemble> {
    if m == 0 {
        return invalid("need at least one path");
    }
    if start >= model.len() {
        return invalid(format!("start point {start} out of range"));
    }
    if time_grid.first() != Some(&0.0) || time_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return invalid("time grid must start at 0 and increase strictly");
    }
    let mut tables: Vec<(f64, StepTable)> = Vec::new();
    let mut step_table = Vec::with_capacity(time_grid.len().saturating_sub(1));
    let mut clip_mass: f64 = 0.0;
    for w in time_grid.windows(2) {
        let dt = w[1] - w[0];
        let k = match tables.iter().position(|(s, _)| (s - dt).abs() <= 1e-9 * dt) {
            Some(k) => k,
            None => {
                let (table, clip) = StepTable::build(model, dt)?;
                clip_mass = clip_mass.max(clip);
                tables.push((dt, table));
                tables.len() - 1
            }
        };
        step_table.push(k);
    }
    let len = time_grid.len();
    let rows: Vec<Vec<u32>> = (0..m)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let mut row = Vec::with_capacity(len);
            let mut x = start;
            row.push(x as u32);
            for &k in &step_table {
                x = tables[k].1.step(x, rng.gen::<f64>());
                row.push(x as u32);
            }
            row
        })
        .collect();
    Ok(PathEnsemble {
        time_grid: time_grid.to_vec(),
        paths: rows.concat(),
        start,
        seed,
        model_hash: model.space_hash().to_string(),
        clip_mass,
    })
}
