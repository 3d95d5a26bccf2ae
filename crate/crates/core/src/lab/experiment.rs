use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

use super::config::{ExperimentConfig, OtSolver};
use super::report::{Cell, ExperimentReport, ReportMeta, ReportRow, COLUMNS};
use super::verdict::{corollary_verdict, Verdict};
use crate::brownian::{
    fdd_dictionary_distance, grid_w2_distance, path_space_as_mmspace, sample_paths, tightness_modulus, write_ensemble,
    FddDictionary, PathEnsemble, PathLaw, PathLawMode,
};
use crate::error::{Error, Result};
use crate::heat::{build_dirichlet_graph, kernel_mixing_rate, save_spectra, spectral_decompose_with_budget, SpectralHeatModel};
use crate::transport::{
    d_distance_upper, gh_coverage, gh_distortion, hausdorff_distance, measure_pushforward_gap, nearest_point_map, w2_sinkhorn,
};
use crate::FiniteMMSpace;

/// Everything computed for one space of the sequence.
struct Side {
    space: Arc<FiniteMMSpace>,
    start: usize,
    model: Result<SpectralHeatModel>,
    ensemble: Option<Result<PathEnsemble>>,
    path_space: Option<Result<FiniteMMSpace>>,
}

fn not_available(what: &str, e: &Error) -> Error {
    Error::Solver(format!("{what} unavailable: {e}"))
}

impl Side {
    fn build(space: Arc<FiniteMMSpace>, start: usize, cfg: &ExperimentConfig) -> Self {
        let model = build_dirichlet_graph(&space, cfg.bandwidth).and_then(|g| spectral_decompose_with_budget(&g, cfg.eig_budget));
        // Every row reports path_w2, so an ensemble is always sampled.
        let ensemble = Some(match &model {
            Ok(m) => sample_paths(m, start, &cfg.path_grid(), cfg.paths, cfg.seed),
            Err(e) => Err(not_available("heat model", e)),
        });
        let path_space = cfg.path_space.then(|| match (&model, ensemble.as_ref().unwrap()) {
            (Ok(m), Ok(e)) => path_space_as_mmspace(e, m, cfg.t_max),
            (Err(e), _) => Err(not_available("heat model", e)),
            (_, Err(e)) => Err(not_available("path ensemble", e)),
        });
        Side { space, start, model, ensemble, path_space }
    }

    fn law(&self) -> Result<PathLaw<'_>> {
        let model = self.model.as_ref().map_err(|e| not_available("heat model", e))?;
        let ensemble = match &self.ensemble {
            Some(Ok(e)) => e,
            Some(Err(e)) => return Err(not_available("path ensemble", e)),
            None => return Err(Error::InvalidInput("no ensemble was sampled".into())),
        };
        Ok(PathLaw { model, ensemble })
    }
}

fn row_cells(side: &Side, limit: &Side, cfg: &ExperimentConfig) -> Vec<Result<f64>> {
    let (x, y) = (&*side.space, &*limit.space);
    let map = nearest_point_map(x, y);
    let with_map = |f: &dyn Fn(&[usize]) -> Result<f64>| match &map {
        Ok(m) => f(m),
        Err(e) => Err(not_available("nearest-point map", e)),
    };
    let model = || side.model.as_ref().map_err(|e| not_available("heat model", e));
    let process_distance = |mode: PathLawMode| -> Result<f64> {
        let (a, b) = (side.law()?, limit.law()?);
        match mode {
            PathLawMode::FddDictionary => {
                let dict = FddDictionary::default_for(x, y)?;
                Ok(fdd_dictionary_distance(a, b, &dict)?.value)
            }
            PathLawMode::GridW2 => Ok(grid_w2_distance(a, b, &cfg.w2_times)?.value),
        }
    };
    vec![
        match cfg.ot_solver {
            OtSolver::Exact => d_distance_upper(x, y),
            OtSolver::Sinkhorn => w2_sinkhorn(x, y, x.weights(), y.weights(), cfg.sinkhorn_eps).map(|r| r.value_upper),
        },
        match (x.ambient(), y.ambient()) {
            (Some(a), Some(b)) => hausdorff_distance(a, b),
            _ => Err(Error::NoSharedAmbient),
        },
        with_map(&|m| gh_distortion(m, x, y)),
        with_map(&|m| gh_coverage(m, x, y)),
        with_map(&|m| measure_pushforward_gap(m, x, y, None)),
        model().map(|m| m.spectral_gap()),
        process_distance(cfg.fdd_mode),
        process_distance(PathLawMode::GridW2),
        model().and_then(|m| {
            tightness_modulus(m, side.start, 0.0, &cfg.tightness_h, cfg.beta)?
                .slope
                .ok_or_else(|| Error::Degenerate("fewer than two positive moduli".into()))
        }),
        model().and_then(|m| {
            kernel_mixing_rate(m, side.start, &cfg.mixing_times, cfg.mixing_shift)?
                .fitted_exponent
                .ok_or_else(|| Error::Degenerate("kernel already at equilibrium".into()))
        }),
        match (&side.path_space, &limit.path_space) {
            (Some(Ok(a)), Some(Ok(b))) => d_distance_upper(a, b),
            (Some(Err(e)), _) | (_, Some(Err(e))) => Err(not_available("path space", e)),
            _ => Err(Error::InvalidInput("path spaces disabled".into())),
        },
    ]
}

fn write_artifacts(dir: &Path, index: usize, side: &Side) -> Result<()> {
    if let Ok(m) = &side.model {
        std::fs::create_dir_all(dir.join("spectra"))?;
        save_spectra(m, &dir.join("spectra").join(format!("{index}.spec")))?;
    }
    if let Some(Ok(e)) = &side.ensemble {
        std::fs::create_dir_all(dir.join("ensembles"))?;
        write_ensemble(e, &dir.join("ensembles").join(format!("{index}.paths")))?;
    }
    Ok(())
}

/// Runs every diagnostic of every sequence entry against the limit (the
/// last entry, which is compared with itself).
///
/// A failing computation marks its cell unavailable and the run goes on,
/// unless `strict` is set.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let clock = Instant::now();
    let spaces: Vec<Arc<FiniteMMSpace>> = cfg
        .sequence
        .iter()
        .map(|r| r.build().map(Arc::new))
        .collect::<Result<_>>()?;
    let limit_space = spaces.last().unwrap().clone();
    let limit_emb = limit_space.ambient().ok_or(Error::NoSharedAmbient)?;
    for s in &spaces {
        match s.ambient() {
            Some(e) if e.shares_ambient(limit_emb) => {}
            _ => return Err(Error::NoSharedAmbient),
        }
    }
    let limit = Side::build(limit_space.clone(), 0, cfg);
    if let Err(e) = &limit.model {
        return Err(Error::Solver(format!("limit space: {e}")));
    }
    let last = spaces.len() - 1;
    let rows: Vec<(ReportRow, f64, Option<Error>)> = spaces
        .par_iter()
        .enumerate()
        .map(|(i, space)| {
            let t0 = Instant::now();
            let own;
            let side = if i == last {
                &limit
            } else {
                let emb = space.ambient().unwrap();
                let start = space.argmin_by(|x| emb.cross_distance(x, limit_emb, 0));
                own = Side::build(space.clone(), start, cfg);
                &own
            };
            let results = row_cells(side, &limit, cfg);
            let mut first_error = None;
            let mut cells = Vec::with_capacity(COLUMNS.len());
            for r in results {
                match r {
                    Err(e) if first_error.is_none() => {
                        cells.push(Cell::Unavailable(e.to_string()));
                        first_error = Some(e);
                    }
                    r => cells.push(Cell::from_result(r)),
                }
            }
            if let Some(dir) = &cfg.output_dir {
                if let Err(e) = write_artifacts(dir, i, side) {
                    first_error.get_or_insert(e);
                }
            }
            let row = ReportRow { index: i, label: space.meta().label.clone(), points: space.len(), cells };
            (row, t0.elapsed().as_secs_f64(), first_error)
        })
        .collect();

    let mut warnings = Vec::new();
    let mut report_rows = Vec::with_capacity(rows.len());
    let mut row_seconds = Vec::with_capacity(rows.len());
    for (row, secs, err) in rows {
        if let Some(e) = err {
            if cfg.strict {
                return Err(e);
            }
            warnings.push(format!("row {}: {e}", row.index));
        }
        report_rows.push(row);
        row_seconds.push(secs);
    }
    let report = ExperimentReport {
        meta: ReportMeta {
            name: cfg.name.clone(),
            config_digest: cfg.digest(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: cfg.seed,
            row_seconds,
            total_seconds: clock.elapsed().as_secs_f64(),
            warnings,
            policy: "decreasing = Spearman <= -0.9 against the index (-0.8 for path spaces); endpoint drop by a factor 4; \
                     uniform gap = inf lambda1 >= 0.5 x limit lambda1"
                .into(),
        },
        columns: COLUMNS.iter().map(|c| c.to_string()).collect(),
        rows: report_rows,
    };
    if let Some(dir) = &cfg.output_dir {
        report.write(dir)?;
    }
    Ok(report)
}

/// Runs the experiment with path spaces enabled and judges their decay.
pub fn corollary_d_check(cfg: &ExperimentConfig) -> Result<(ExperimentReport, Verdict)> {
    let mut cfg = cfg.clone();
    cfg.path_space = true;
    let report = run_experiment(&cfg)?;
    let verdict = corollary_verdict(&report)?;
    Ok((report, verdict))
}
