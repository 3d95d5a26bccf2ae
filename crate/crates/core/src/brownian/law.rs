//! Distances between Brownian path laws and the path space as a finite
//! metric measure space.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::fdd::{fdd_exact, FddSpec};
use super::sampling::PathEnsemble;
use crate::error::{invalid, Error, Result};
use crate::heat::SpectralHeatModel;
use crate::space::{AmbientEmbedding, AmbientSpace, FiniteMMSpace, SpaceMeta};
use crate::transport::{delta_from_gaps, w2_from_cost};

pub const DICTIONARY_TIMES: [f64; 4] = [0.1, 0.5, 1.0, 2.0];
pub const DICTIONARY_ANCHORS: usize = 8;
/// Default times of the joint laws compared in `grid_w2` mode.
pub const W2_TIMES: [f64; 2] = [0.5, 1.0];
pub const DEFAULT_T_MAX: f64 = 20.0;

/// Largest joint support handled exactly, per law.
pub const JOINT_SUPPORT_CAP: usize = 100_000;
/// Largest product of the two supports sent to the exact solver.
pub const EXACT_PAIR_BUDGET: usize = 1_000_000;
/// Paths per ensemble used by the Monte Carlo fallback.
pub const MC_PATHS: usize = 1024;

/// Grid with step `0.02` on `[0, 1]` and `0.25` beyond, reaching `t_max`.
pub fn default_path_grid(t_max: f64) -> Vec<f64> {
    let mut grid: Vec<f64> = (0..50).map(|i| i as f64 * 0.02).collect();
    let mut j = 0;
    loop {
        let t = 1.0 + j as f64 * 0.25;
        grid.push(t);
        if t >= t_max {
            break;
        }
        j += 1;
    }
    grid
}

/// A model with an ensemble sampled from it.
#[derive(Debug, Clone, Copy)]
pub struct PathLaw<'a> {
    pub model: &'a SpectralHeatModel,
    pub ensemble: &'a PathEnsemble,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathLawMode {
    FddDictionary,
    GridW2,
}

impl std::str::FromStr for PathLawMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fdd_dictionary" => Ok(PathLawMode::FddDictionary),
            "grid_w2" => Ok(PathLawMode::GridW2),
            _ => invalid(format!("unknown path-law mode `{s}` (fdd_dictionary or grid_w2)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathLawMethod {
    FddDictionary,
    ExactJoint,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLawDistance {
    pub value: f64,
    /// Half the gap between the estimates on the two halves of the sample.
    pub error_bar: Option<f64>,
    pub method: PathLawMethod,
}

/// Entry of a test-function dictionary: the product of the anchor
/// observable at each of `times`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DictionaryEntry {
    pub times: Vec<f64>,
    pub anchor: usize,
}

/// Observables `1 ∧ d(·, p)` for anchors `p` in an ambient space, combined
/// over time tuples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FddDictionary {
    ambient: Arc<AmbientSpace>,
    anchors: Vec<Vec<f64>>,
    entries: Vec<DictionaryEntry>,
}

impl FddDictionary {
    pub fn new(ambient: Arc<AmbientSpace>, anchors: Vec<Vec<f64>>, entries: Vec<DictionaryEntry>) -> Result<Self> {
        if entries.is_empty() {
            return invalid("FDD dictionary is empty");
        }
        for a in &anchors {
            ambient.check_coords(a)?;
        }
        for e in &entries {
            if e.anchor >= anchors.len() {
                return invalid("dictionary entry refers to a missing anchor");
            }
            FddSpec::new(e.times.clone(), vec![vec![0.0]; e.times.len()])?;
        }
        Ok(Self { ambient, anchors, entries })
    }

    /// Anchors from a farthest-point net of the union of both spaces, with
    /// single-time entries and same-anchor products over two and three of
    /// [`DICTIONARY_TIMES`]. Symmetric in its arguments.
    pub fn default_for(x: &FiniteMMSpace, y: &FiniteMMSpace) -> Result<Self> {
        let (ex, ey) = crate::transport::gh::shared(x, y)?;
        let ambient = ex.ambient.clone();
        let anchors = farthest_points(&ambient, ex.coords.iter().chain(&ey.coords).collect(), DICTIONARY_ANCHORS);
        let ts = DICTIONARY_TIMES;
        let mut tuples: Vec<Vec<f64>> = ts.iter().map(|&t| vec![t]).collect();
        for i in 0..ts.len() {
            for j in i + 1..ts.len() {
                tuples.push(vec![ts[i], ts[j]]);
                for k in j + 1..ts.len() {
                    tuples.push(vec![ts[i], ts[j], ts[k]]);
                }
            }
        }
        let entries = (0..anchors.len())
            .flat_map(|anchor| tuples.iter().map(move |times| DictionaryEntry { times: times.clone(), anchor }))
            .collect();
        Self::new(ambient, anchors, entries)
    }

    pub fn entries(&self) -> &[DictionaryEntry] {
        &self.entries
    }

    pub fn anchors(&self) -> &[Vec<f64>] {
        &self.anchors
    }

    /// Keeps only the entries selected by `keep`.
    pub fn filtered(&self, keep: impl Fn(&DictionaryEntry) -> bool) -> Result<Self> {
        let entries = self.entries.iter().filter(|e| keep(e)).cloned().collect();
        Self::new(self.ambient.clone(), self.anchors.clone(), entries)
    }

    /// `y ↦ 1 ∧ d(y, anchor)` on the points of `space`.
    pub fn observable(&self, anchor: usize, space: &FiniteMMSpace) -> Result<Vec<f64>> {
        let emb = space.ambient().filter(|e| *e.ambient == *self.ambient).ok_or(Error::NoSharedAmbient)?;
        Ok(emb.coords.iter().map(|c| self.ambient.distance(c, &self.anchors[anchor]).min(1.0)).collect())
    }

    fn evaluate(&self, model: &SpectralHeatModel, start: usize) -> Result<Vec<f64>> {
        let obs: Vec<Vec<f64>> = (0..self.anchors.len())
            .map(|a| self.observable(a, model.space()))
            .collect::<Result<_>>()?;
        self.entries
            .iter()
            .map(|e| {
                let spec = FddSpec::new(e.times.clone(), vec![obs[e.anchor].clone(); e.times.len()])?;
                fdd_exact(model, start, &spec)
            })
            .collect()
    }
}

fn lex(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(a.len().cmp(&b.len()))
}

/// Greedy farthest-point selection; starts from the lexicographically
/// smallest point and breaks ties the same way, so the result does not
/// depend on the input order.
fn farthest_points(ambient: &AmbientSpace, pts: Vec<&Vec<f64>>, k: usize) -> Vec<Vec<f64>> {
    let first = pts.iter().min_by(|a, b| lex(a, b)).unwrap();
    let mut chosen = vec![(*first).clone()];
    let mut gap: Vec<f64> = pts.iter().map(|p| ambient.distance(p, first)).collect();
    while chosen.len() < k {
        let mut best: Option<usize> = None;
        for (i, &g) in gap.iter().enumerate() {
            let better = match best {
                None => g > 0.0,
                Some(b) => g > gap[b] || (g == gap[b] && lex(pts[i], pts[b]).is_lt()),
            };
            if better {
                best = Some(i);
            }
        }
        let Some(b) = best else { break };
        let p = pts[b].clone();
        for (i, g) in gap.iter_mut().enumerate() {
            *g = g.min(ambient.distance(pts[i], &p));
        }
        chosen.push(p);
    }
    chosen
}

fn check_pair(a: &PathLaw, b: &PathLaw) -> Result<()> {
    crate::transport::gh::shared(a.model.space(), b.model.space())?;
    let (ga, gb) = (a.ensemble.time_grid(), b.ensemble.time_grid());
    if ga.len() != gb.len() || ga.iter().zip(gb).any(|(s, t)| (s - t).abs() > 1e-12 * s.abs().max(1.0)) {
        return invalid("ensembles must share a time grid");
    }
    Ok(())
}

/// Distance between two path laws with the default dictionary or times.
pub fn path_law_distance(a: PathLaw, b: PathLaw, mode: PathLawMode) -> Result<PathLawDistance> {
    match mode {
        PathLawMode::FddDictionary => {
            let dict = FddDictionary::default_for(a.model.space(), b.model.space())?;
            fdd_dictionary_distance(a, b, &dict)
        }
        PathLawMode::GridW2 => grid_w2_distance(a, b, &W2_TIMES),
    }
}

/// `max` over the dictionary of the gap between the exact FDDs.
pub fn fdd_dictionary_distance(a: PathLaw, b: PathLaw, dict: &FddDictionary) -> Result<PathLawDistance> {
    check_pair(&a, &b)?;
    let va = dict.evaluate(a.model, a.ensemble.start())?;
    let vb = dict.evaluate(b.model, b.ensemble.start())?;
    let value = va.iter().zip(&vb).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    Ok(PathLawDistance { value, error_bar: None, method: PathLawMethod::FddDictionary })
}

/// Atoms `(positions, mass)` of the law of `(B_{t₁}, …, B_{t_k})`.
type JointLaw = Vec<(Vec<usize>, f64)>;

fn exact_joint_law(model: &SpectralHeatModel, start: usize, times: &[f64]) -> Option<JointLaw> {
    let m = model.weights();
    let mut law: JointLaw = vec![(Vec::new(), 1.0)];
    let mut prev = 0.0;
    let mut rows: HashMap<usize, Vec<f64>> = HashMap::new();
    for &t in times {
        let dt = t - prev;
        rows.clear();
        let mut next = Vec::new();
        for (tuple, mass) in &law {
            let x = tuple.last().copied().unwrap_or(start);
            let row = rows.entry(x).or_insert_with(|| {
                let r: Vec<f64> = model.kernel_row(dt, x).iter().zip(m).map(|(p, w)| (p * w).max(0.0)).collect();
                let s: f64 = r.iter().sum();
                r.into_iter().map(|v| v / s).collect()
            });
            for (y, &p) in row.iter().enumerate() {
                let q = mass * p;
                if q > 1e-15 {
                    let mut tu = tuple.clone();
                    tu.push(y);
                    next.push((tu, q));
                }
            }
            if next.len() > JOINT_SUPPORT_CAP {
                return None;
            }
        }
        let total: f64 = next.iter().map(|a| a.1).sum();
        next.iter_mut().for_each(|a| a.1 /= total);
        law = next;
        prev = t;
    }
    Some(law)
}

fn empirical_law(ensemble: &PathEnsemble, cols: &[usize], paths: impl Iterator<Item = usize>) -> JointLaw {
    let mut counts: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut total = 0;
    for p in paths {
        let path = ensemble.path(p);
        *counts.entry(cols.iter().map(|&c| path[c] as usize).collect()).or_default() += 1;
        total += 1;
    }
    let mut law: JointLaw = counts.into_iter().map(|(k, c)| (k, c as f64 / total as f64)).collect();
    law.sort_by(|a, b| a.0.cmp(&b.0));
    law
}

fn joint_w2(a: &PathLaw, la: &JointLaw, b: &PathLaw, lb: &JointLaw) -> Result<f64> {
    let ea = a.model.space().ambient().ok_or(Error::NoSharedAmbient)?;
    let eb = b.model.space().ambient().ok_or(Error::NoSharedAmbient)?;
    let mut cost = Vec::with_capacity(la.len() * lb.len());
    for (ta, _) in la {
        for (tb, _) in lb {
            cost.push(ta.iter().zip(tb).map(|(&x, &y)| ea.cross_distance(x, eb, y).powi(2)).sum::<f64>());
        }
    }
    let mu: Vec<f64> = la.iter().map(|x| x.1).collect();
    let nu: Vec<f64> = lb.iter().map(|x| x.1).collect();
    Ok(w2_from_cost(&cost, &mu, &nu)?.value)
}

/// `W₂` between the joint laws at `times` (at most three) under the
/// product metric `√Σ d²`. Exact when both supports are small, otherwise
/// the empirical laws of the ensembles.
pub fn grid_w2_distance(a: PathLaw, b: PathLaw, times: &[f64]) -> Result<PathLawDistance> {
    check_pair(&a, &b)?;
    if times.is_empty() || times.len() > 3 {
        return invalid("grid_w2 compares between one and three times");
    }
    FddSpec::new(times.to_vec(), vec![vec![0.0]; times.len()])?;
    let exact = exact_joint_law(a.model, a.ensemble.start(), times)
        .zip(exact_joint_law(b.model, b.ensemble.start(), times))
        .filter(|(la, lb)| la.len() * lb.len() <= EXACT_PAIR_BUDGET);
    if let Some((la, lb)) = exact {
        let value = joint_w2(&a, &la, &b, &lb)?;
        return Ok(PathLawDistance { value, error_bar: None, method: PathLawMethod::ExactJoint });
    }
    let cols: Vec<usize> = times
        .iter()
        .map(|&t| a.ensemble.grid_index(t).ok_or(()))
        .collect::<std::result::Result<_, _>>()
        .or_else(|_| invalid("grid_w2 times must lie on the ensemble grid"))?;
    let ma = a.ensemble.len().min(MC_PATHS);
    let mb = b.ensemble.len().min(MC_PATHS);
    let value = joint_w2(&a, &empirical_law(a.ensemble, &cols, 0..ma), &b, &empirical_law(b.ensemble, &cols, 0..mb))?;
    let error_bar = if ma >= 2 && mb >= 2 {
        let h1 = joint_w2(
            &a,
            &empirical_law(a.ensemble, &cols, (0..ma).step_by(2)),
            &b,
            &empirical_law(b.ensemble, &cols, (0..mb).step_by(2)),
        )?;
        let h2 = joint_w2(
            &a,
            &empirical_law(a.ensemble, &cols, (1..ma).step_by(2)),
            &b,
            &empirical_law(b.ensemble, &cols, (1..mb).step_by(2)),
        )?;
        Some(0.5 * (h1 - h2).abs())
    } else {
        None
    };
    Ok(PathLawDistance { value, error_bar, method: PathLawMethod::MonteCarlo })
}

/// The sampled paths as a finite metric measure space: distances are the
/// local uniform distance truncated at `t_max`, paths that agree before
/// `t_max` are merged, and each distinct path carries its frequency.
///
/// When the model space has an ambient embedding, the paths are embedded in
/// the matching path ambient space so that path spaces of different models
/// can be compared.
pub fn path_space_as_mmspace(ensemble: &PathEnsemble, model: &SpectralHeatModel, t_max: f64) -> Result<FiniteMMSpace> {
    let times = ensemble.time_grid();
    if !(t_max > 0.0) || *times.last().unwrap() + 1e-12 < t_max {
        return invalid(format!("grid ends at {} before t_max = {t_max}", times.last().unwrap()));
    }
    if ensemble.path(0).iter().any(|&x| x as usize >= model.len()) {
        return invalid("ensemble does not belong to this model");
    }
    let space = model.space();
    let keep = times.iter().take_while(|&&t| t < t_max).count();
    let mut groups: HashMap<&[u32], usize> = HashMap::new();
    let mut reps: Vec<usize> = Vec::new();
    let mut counts: Vec<usize> = Vec::new();
    for i in 0..ensemble.len() {
        let key = &ensemble.path(i)[..keep];
        match groups.get(key) {
            Some(&g) => counts[g] += 1,
            None => {
                groups.insert(key, reps.len());
                reps.push(i);
                counts.push(1);
            }
        }
    }
    let total = ensemble.len() as f64;
    let weight: Vec<f64> = counts.iter().map(|&c| c as f64 / total).collect();
    let metric = |x: usize, y: usize| match space.ambient() {
        Some(e) => e.distance(x, y),
        None => space.dist(x, y),
    };
    let n = reps.len();
    let mut dist = vec![0.0; n * n];
    let mut diameter: f64 = 0.0;
    for i in 0..n {
        let pi = ensemble.path(reps[i]);
        for j in 0..i {
            let pj = ensemble.path(reps[j]);
            let gaps: Vec<f64> = pi.iter().zip(pj).map(|(&x, &y)| metric(x as usize, y as usize)).collect();
            let d = delta_from_gaps(times, &gaps, t_max).value;
            dist[i * n + j] = d;
            dist[j * n + i] = d;
            diameter = diameter.max(d);
        }
    }
    let mut meta = SpaceMeta::new(0.0, 2.0, diameter.max(f64::MIN_POSITIVE), format!("paths of [{}]", space.meta().label));
    if let Some(emb) = space.ambient() {
        let ambient = Arc::new(AmbientSpace::Paths { base: emb.ambient.clone(), times: times.to_vec(), t_max });
        let coords = reps
            .iter()
            .map(|&r| ensemble.path(r).iter().flat_map(|&x| emb.coords[x as usize].iter().copied()).collect())
            .collect();
        meta.ambient = Some(AmbientEmbedding::new(ambient, coords)?);
    }
    FiniteMMSpace::new(dist, weight, meta)
}
