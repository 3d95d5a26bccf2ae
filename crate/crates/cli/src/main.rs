use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use mmlab::brownian::{default_path_grid, sample_paths, write_ensemble, PathLawMode};
use mmlab::heat::{build_dirichlet_graph, load_spectra, save_spectra, spectral_decompose_with_budget, Bandwidth};
use mmlab::holder::{extend, HolderFunction};
use mmlab::lab::{
    corollary_verdict, run_experiment, verify_direction_backward, verify_direction_forward, ExperimentConfig,
    ExperimentReport, OtSolver, SpaceRecipe,
};
use mmlab::space::io::{read_space, write_space};
use mmlab::transport::{d_distance_exact_tiny, d_distance_upper, hausdorff_distance, w2_distance, w2_sinkhorn};
use mmlab::{FiniteMMSpace, ModelFamily};
use serde_json::json;

#[derive(Parser)]
#[command(name = "mmlab", version, about = "Finite metric measure spaces, heat kernels and Brownian motion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Discretize a model space and write it in the text format.
    BuildSpace {
        #[arg(long)]
        family: ModelFamily,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        /// Build the cone `k,n_dim,levels` over the model space instead.
        #[arg(long, value_name = "K,N,LEVELS")]
        cone: Option<String>,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Distances between the reference measures of two spaces.
    Distance {
        a: PathBuf,
        b: PathBuf,
        /// w2 (shared ambient), d-upper, d-tiny (at most 16 points in total) or hausdorff.
        #[arg(long, default_value = "w2")]
        kind: String,
        #[arg(long, default_value = "exact")]
        ot_solver: OtSolver,
        #[arg(long, default_value_t = 1e-3)]
        sinkhorn_eps: f64,
    },
    /// Spectral decomposition of the graph heat semigroup.
    Heat {
        space: PathBuf,
        #[arg(long, default_value = "auto")]
        bandwidth: Bandwidth,
        #[arg(long, default_value_t = mmlab::heat::DEFAULT_EIG_BUDGET)]
        eig_budget: usize,
        /// Number of eigenvalues to print.
        #[arg(long, default_value_t = 8)]
        show: usize,
        /// Spectra cache file: loaded when present and matching, written otherwise.
        #[arg(long)]
        cache: Option<PathBuf>,
    },
    /// Sample Brownian paths on a space.
    Simulate {
        space: PathBuf,
        #[arg(long, default_value = "auto")]
        bandwidth: Bandwidth,
        #[arg(long, default_value_t = mmlab::heat::DEFAULT_EIG_BUDGET)]
        eig_budget: usize,
        #[arg(long, default_value_t = 512)]
        paths: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// `default`, a comma list `0,0.5,1` or `start:step:end`.
        #[arg(long, default_value = "default")]
        grid: String,
        #[arg(long, default_value_t = 0)]
        start: usize,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Hölder extension of values given on a subset of a space.
    Extend {
        space: PathBuf,
        /// JSON object with `domain`, `values`, `alpha` and `h`.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Run an experiment described by a TOML config.
    Run {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Judge a report written by `run`.
    Verify { report: PathBuf },
}

#[derive(Args)]
struct Overrides {
    #[arg(long)]
    ot_solver: Option<OtSolver>,
    #[arg(long)]
    sinkhorn_eps: Option<f64>,
    #[arg(long)]
    bandwidth: Option<Bandwidth>,
    #[arg(long)]
    eig_budget: Option<usize>,
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    fdd_mode: Option<PathLawMode>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    strict: bool,
    /// Output directory for the report and artifacts.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

impl Overrides {
    fn apply(self, cfg: &mut ExperimentConfig) -> Result<()> {
        if let Some(v) = self.ot_solver {
            cfg.ot_solver = v;
        }
        if let Some(v) = self.sinkhorn_eps {
            cfg.sinkhorn_eps = v;
        }
        if let Some(v) = self.bandwidth {
            cfg.bandwidth = v;
        }
        if let Some(v) = self.eig_budget {
            cfg.eig_budget = v;
        }
        if let Some(v) = self.paths {
            cfg.paths = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(g) = self.grid {
            cfg.grid = Some(parse_grid(&g, cfg.t_max)?);
        }
        if let Some(v) = self.fdd_mode {
            cfg.fdd_mode = v;
        }
        if let Some(v) = self.beta {
            cfg.beta = v;
        }
        cfg.strict |= self.strict;
        if self.out.is_some() {
            cfg.output_dir = self.out;
        }
        cfg.validate()?;
        Ok(())
    }
}

fn parse_grid(s: &str, t_max: f64) -> Result<Vec<f64>> {
    if s == "default" {
        return Ok(default_path_grid(t_max));
    }
    if let [a, h, b] = s.split(':').collect::<Vec<_>>()[..] {
        let (a, h, b): (f64, f64, f64) = (a.parse()?, h.parse()?, b.parse()?);
        if !(h > 0.0) || b < a {
            bail!("grid `{s}` needs a positive step and end >= start");
        }
        let steps = ((b - a) / h + 1e-9).floor() as usize;
        return Ok((0..=steps).map(|k| a + k as f64 * h).collect());
    }
    s.split(',')
        .map(|x| x.trim().parse::<f64>().with_context(|| format!("bad grid time `{x}`")))
        .collect()
}

fn load(path: &PathBuf) -> Result<Arc<FiniteMMSpace>> {
    Ok(Arc::new(read_space(path).with_context(|| format!("reading {}", path.display()))?))
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::BuildSpace { family, n, scale, cone, out } => {
            let space = match cone {
                None => SpaceRecipe::Model { family, n, scale }.build()?,
                Some(spec) => {
                    let parts: Vec<&str> = spec.split(',').collect();
                    let [k, n_dim, levels] = parts[..] else {
                        bail!("--cone expects K,N,LEVELS");
                    };
                    SpaceRecipe::Cone { family, n, scale, k: k.parse()?, n_dim: n_dim.parse()?, levels: levels.parse()? }
                        .build()?
                }
            };
            write_space(&space, &out)?;
            println!("{}", json!({ "points": space.len(), "label": space.meta().label, "hash": space.content_hash() }));
        }
        Command::Distance { a, b, kind, ot_solver, sinkhorn_eps } => {
            let (x, y) = (load(&a)?, load(&b)?);
            let value = match (kind.as_str(), ot_solver) {
                ("w2", OtSolver::Exact) => {
                    let r = w2_distance(&x, &y, x.weights(), y.weights())?;
                    json!({ "w2": r.value, "slackness_residual": r.slackness_residual })
                }
                ("w2", OtSolver::Sinkhorn) => {
                    let r = w2_sinkhorn(&x, &y, x.weights(), y.weights(), sinkhorn_eps)?;
                    json!({ "w2_upper": r.value_upper, "converged": r.converged, "iterations": r.iterations })
                }
                ("d-upper", _) => json!({ "d_upper": d_distance_upper(&x, &y)? }),
                ("d-tiny", _) => {
                    let r = d_distance_exact_tiny(&x, &y)?;
                    json!({ "d": r.value, "certified": r.certified, "agreeing_restarts": r.agreeing })
                }
                ("hausdorff", _) => match (x.ambient(), y.ambient()) {
                    (Some(p), Some(q)) => json!({ "hausdorff": hausdorff_distance(p, q)? }),
                    _ => bail!("both spaces need an ambient embedding"),
                },
                (k, _) => bail!("unknown distance kind `{k}`"),
            };
            println!("{value}");
        }
        Command::Heat { space, bandwidth, eig_budget, show, cache } => {
            let space = load(&space)?;
            let cached = cache.as_ref().filter(|p| p.exists()).map(|p| load_spectra(&space, p)).transpose()?;
            let model = match cached {
                Some(m) => m,
                None => {
                    let m = spectral_decompose_with_budget(&build_dirichlet_graph(&space, bandwidth)?, eig_budget)?;
                    if let Some(p) = &cache {
                        save_spectra(&m, p)?;
                    }
                    m
                }
            };
            let shown = &model.eigvals()[..show.min(model.len())];
            println!(
                "{}",
                json!({
                    "bandwidth": model.bandwidth(),
                    "t_pos": model.t_pos(),
                    "spectral_gap": model.spectral_gap(),
                    "eigenvalues": shown,
                    "reconstruction_residual": model.reconstruction_residual(),
                })
            );
        }
        Command::Simulate { space, bandwidth, eig_budget, paths, seed, grid, start, out } => {
            let space = load(&space)?;
            let model = spectral_decompose_with_budget(&build_dirichlet_graph(&space, bandwidth)?, eig_budget)?;
            let ens = sample_paths(&model, start, &parse_grid(&grid, mmlab::brownian::DEFAULT_T_MAX)?, paths, seed)?;
            write_ensemble(&ens, &out)?;
            println!("{}", json!({ "paths": ens.len(), "digest": ens.digest(), "clip_mass": ens.clip_mass() }));
        }
        Command::Extend { space, input, out } => {
            let space = load(&space)?;
            let spec: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&input)?)?;
            let domain: Vec<usize> = serde_json::from_value(spec["domain"].clone()).context("`domain`")?;
            let values: Vec<f64> = serde_json::from_value(spec["values"].clone()).context("`values`")?;
            let alpha = spec["alpha"].as_f64().context("`alpha`")?;
            let h = spec["h"].as_f64().context("`h`")?;
            let f = HolderFunction::new(&*space, domain, values, alpha, h)?;
            let ext = extend(&f, &*space)?;
            let text: String = ext.iter().map(|v| format!("{v:.17e}\n")).collect();
            match out {
                Some(p) => std::fs::write(p, text)?,
                None => print!("{text}"),
            }
        }
        Command::Run { config, overrides } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            overrides.apply(&mut cfg)?;
            let report = run_experiment(&cfg)?;
            print!("{}", report.to_csv());
            for w in &report.meta.warnings {
                eprintln!("warning: {w}");
            }
        }
        Command::Verify { report } => {
            let report = ExperimentReport::read(&report)?;
            let mut all = true;
            for (name, verdict) in [
                ("forward", verify_direction_forward(&report)),
                ("backward", verify_direction_backward(&report)),
                ("corollary", corollary_verdict(&report)),
            ] {
                match verdict {
                    Ok(v) => {
                        all &= v.pass;
                        println!("{name}: {v}");
                    }
                    Err(e) => {
                        all = false;
                        println!("{name}: ERROR {e}");
                    }
                }
            }
            if !all {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
