//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Built without the libtest harness so the lines always print.

mod common;

use std::sync::Arc;
use std::time::Instant;

use common::{circle_model, heat_model, random_vec, shipped_spaces};
use mmlab::brownian::{fdd_exact, fdd_monte_carlo, sample_paths, tightness_modulus, FddSpec};
use mmlab::heat::{
    build_dirichlet_graph, cheeger_energy, eigen_convergence_trace, kernel_mixing_rate, mixing_check,
    spectral_decompose, Bandwidth, SpectralHeatModel,
};
use mmlab::holder::{extend, HolderFunction};
use mmlab::lab::{corollary_verdict, run_experiment, verify_direction_backward, verify_direction_forward, ExperimentConfig};
use mmlab::space::geometry::{bishop_gromov_check, doubling_constant};
use mmlab::space::{build_model_space, ModelFamily};
use mmlab::transport::{d_distance_exact_tiny, delta_from_gaps, w2_from_cost};
use mmlab::{FiniteMMSpace, SpaceMeta};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn max_dev(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

// ---------------------------------------------------------------- 1

/// Minimum cost over the vertices of the transportation polytope: every
/// choice of `n1 + n2 − 1` cells forming a spanning tree of the bipartite
/// row/column graph determines one basic solution by peeling leaves.
fn vertex_enumeration(cost: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let (n1, n2) = (a.len(), b.len());
    let cells = n1 * n2;
    let need = n1 + n2 - 1;
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << cells) {
        if mask.count_ones() as usize != need {
            continue;
        }
        let chosen: Vec<usize> = (0..cells).filter(|c| mask >> c & 1 == 1).collect();
        let mut ra = a.to_vec();
        let mut rb = b.to_vec();
        let mut flow = vec![f64::NAN; cells];
        let mut open = chosen.clone();
        let mut ok = true;
        while !open.is_empty() {
            // A row or column holding exactly one open cell fixes that cell.
            let leaf = (0..n1)
                .find_map(|i| {
                    let mut it = open.iter().filter(|&&c| c / n2 == i);
                    match (it.next(), it.next()) {
                        (Some(&c), None) => Some((c, true)),
                        _ => None,
                    }
                })
                .or_else(|| {
                    (0..n2).find_map(|j| {
                        let mut it = open.iter().filter(|&&c| c % n2 == j);
                        match (it.next(), it.next()) {
                            (Some(&c), None) => Some((c, false)),
                            _ => None,
                        }
                    })
                });
            let Some((c, by_row)) = leaf else {
                ok = false;
                break;
            };
            let (i, j) = (c / n2, c % n2);
            let v = if by_row { ra[i] } else { rb[j] };
            flow[c] = v;
            ra[i] -= v;
            rb[j] -= v;
            open.retain(|&x| x != c);
        }
        if !ok || chosen.iter().any(|&c| flow[c] < -1e-12) || ra.iter().chain(&rb).any(|r| r.abs() > 1e-12) {
            continue;
        }
        best = best.min(chosen.iter().map(|&c| flow[c] * cost[c]).sum());
    }
    best
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n1 = rng.gen_range(1..=4);
        let n2 = rng.gen_range(1..=4);
        let p: Vec<(f64, f64)> = (0..n1).map(|_| (rng.gen(), rng.gen())).collect();
        let q: Vec<(f64, f64)> = (0..n2).map(|_| (rng.gen(), rng.gen())).collect();
        let norm = |v: Vec<f64>| {
            let s: f64 = v.iter().sum();
            v.into_iter().map(|x| x / s).collect::<Vec<_>>()
        };
        let a = norm((0..n1).map(|_| rng.gen_range(0.05..1.0)).collect());
        let b = norm((0..n2).map(|_| rng.gen_range(0.05..1.0)).collect());
        let cost: Vec<f64> = p
            .iter()
            .flat_map(|x| q.iter().map(move |y| (x.0 - y.0).powi(2) + (x.1 - y.1).powi(2)))
            .collect();
        let exact = w2_from_cost(&cost, &a, &b).unwrap().value;
        let oracle = vertex_enumeration(&cost, &a, &b).max(0.0).sqrt();
        worst = worst.max((exact - oracle).abs());
    }
    outcome(worst <= 1e-9, format!("max |W2 - vertex oracle| = {worst:.2e} over 100 instances (tol 1e-9)"))
}

// ---------------------------------------------------------------- 2

fn two_points(gap: f64) -> FiniteMMSpace {
    FiniteMMSpace::new(vec![0.0, gap, gap, 0.0], vec![0.5, 0.5], SpaceMeta::new(0.0, 2.0, 10.0, "two points")).unwrap()
}

/// Every pair of distinct points of the four-point union obeys the triangle
/// inequality through every third point.
fn is_pseudometric(d: &[[f64; 4]; 4]) -> bool {
    (0..4).all(|i| (0..4).all(|j| (0..4).all(|k| d[i][j] <= d[i][k] + d[k][j] + 1e-12)))
}

/// Brute force over the cross distances `x = d(p₁,q₁) = d(p₂,q₂)` and
/// `y = d(p₁,q₂) = d(p₂,q₁)` with the diagonal coupling, whose cost is
/// `x²`. The swap symmetry and convexity make this reduction lossless.
/// A coarse grid locates the feasible region, a fine grid resolves it.
fn two_point_oracle(a: f64, b: f64) -> f64 {
    let feasible = |x: f64, y: f64| {
        is_pseudometric(&[[0.0, a, x, y], [a, 0.0, y, x], [x, y, 0.0, b], [y, x, b, 0.0]])
    };
    let top = a + b;
    let scan = |x0: f64, x1: f64, y0: f64, y1: f64, step: f64| -> Option<(f64, f64)> {
        let nx = ((x1 - x0) / step).ceil() as usize;
        let ny = ((y1 - y0) / step).ceil() as usize;
        for ix in 0..=nx {
            let x = x0 + ix as f64 * step;
            for iy in 0..=ny {
                let y = y0 + iy as f64 * step;
                if feasible(x, y) {
                    return Some((x, y));
                }
            }
        }
        None
    };
    let (xc, yc) = scan(0.0, top, 0.0, top, 1e-3).expect("feasible couplings exist");
    let w = 1.5e-3;
    let (x, _) = scan((xc - w).max(0.0), xc, (yc - w).max(0.0), yc + w, 1e-6).unwrap_or((xc, yc));
    x
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut worst_impl, mut worst_oracle): (f64, f64) = (0.0, 0.0);
    for _ in 0..20 {
        let a = rng.gen_range(0.1..1.5);
        let b = rng.gen_range(0.1..1.5);
        let oracle = two_point_oracle(a, b);
        let d = d_distance_exact_tiny(&two_points(a), &two_points(b)).unwrap().value;
        worst_impl = worst_impl.max((d - oracle).abs());
        worst_oracle = worst_oracle.max((oracle - (a - b).abs() / 2.0).abs());
    }
    outcome(
        worst_impl <= 1e-5,
        format!("max |D - brute force| = {worst_impl:.2e}, brute force vs |a-b|/2 within {worst_oracle:.2e} (tol 1e-5)"),
    )
}

// ---------------------------------------------------------------- 3, 4

fn criterion_3(models: &[(&str, mmlab::heat::DirichletGraph, SpectralHeatModel)]) -> Outcome {
    let (mut ck, mut cons, mut rev, mut para): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    for (_, g, m) in models {
        let n = m.len();
        let w = m.weights();
        for (k, &t) in [0.01, 0.1, 1.0].iter().enumerate() {
            // Detailed balance m_x P(x, y) = m_y P(y, x) for P = p·m.
            let p = m.transition_matrix(t);
            for x in 0..n {
                cons = cons.max(((0..n).map(|y| p[(x, y)]).sum::<f64>() - 1.0).abs());
                for y in 0..x {
                    rev = rev.max((w[x] * p[(x, y)] - w[y] * p[(y, x)]).abs());
                }
            }
            let f = random_vec(n, 30 + k as u64);
            for s in [0.1, 0.5, 1.0] {
                ck = ck.max(max_dev(&m.apply(s + t, &f), &m.apply(s, &m.apply(t, &f))));
            }
            let u = random_vec(n, 40 + k as u64);
            let v = random_vec(n, 50 + k as u64);
            let sum: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a + b).collect();
            let diff: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a - b).collect();
            let e = |z: &[f64]| cheeger_energy(g, z).unwrap();
            let lhs = 2.0 * e(&u) + 2.0 * e(&v);
            para = para.max((lhs - e(&sum) - e(&diff)).abs() / lhs);
        }
    }
    outcome(
        ck <= 1e-8 && cons <= 1e-9 && rev <= 1e-12 && para <= 1e-12,
        format!(
            "Chapman-Kolmogorov {ck:.1e} (1e-8), conservativity {cons:.1e} (1e-9), reversibility {rev:.1e} (1e-12), \
             parallelogram rel. {para:.1e} (rounding, 1e-12)"
        ),
    )
}

fn criterion_4(models: &[(&str, mmlab::heat::DirichletGraph, SpectralHeatModel)]) -> Outcome {
    let mut worst = f64::INFINITY;
    for (_, _, m) in models {
        for seed in 0..1000 {
            let f = random_vec(m.len(), 10_000 + seed);
            worst = worst.min(mixing_check(m, &f, &[0.01, 0.1, 1.0]).unwrap().worst_slack);
        }
    }
    let s = Arc::new(build_model_space(ModelFamily::Interval, 2, 1.0).unwrap());
    let g = build_dirichlet_graph(&s, Bandwidth::Fixed(0.5)).unwrap();
    let w = g.conductance(0, 1);
    let m = spectral_decompose(&g).unwrap();
    let ts: Vec<f64> = (1..=8).map(|k| 0.1 * k as f64 / w).collect();
    let rep = kernel_mixing_rate(&m, 0, &ts, 0.05 / w).unwrap();
    let closed = rep.rows.iter().map(|&(t, norm, _)| (norm - (-4.0 * w * t).exp()).abs()).fold(0.0, f64::max);
    outcome(
        worst >= -1e-12 && closed <= 1e-9,
        format!("worst slack {worst:.1e} over 4x1000 random f (-1e-12); two-point norm vs e^(-4wt) {closed:.1e} (1e-9)"),
    )
}

// ---------------------------------------------------------------- 5

fn criterion_5() -> Outcome {
    let ns = [64, 128, 256, 512, 1024];
    let models: Vec<SpectralHeatModel> = ns.iter().map(|&n| circle_model(n).1).collect();
    let refs: Vec<&SpectralHeatModel> = models.iter().collect();
    let trace = eigen_convergence_trace(&refs, 4).unwrap();
    let last = trace.eigvals.last().unwrap();
    let rel: Vec<f64> = last.iter().zip([1.0, 1.0, 4.0, 4.0]).map(|(l, w)| (l - w).abs() / w).collect();
    let change = trace.relative_changes.last().unwrap().iter().copied().fold(0.0, f64::max);
    outcome(
        rel.iter().all(|&r| r <= 0.05) && change < 0.01,
        format!(
            "n=1024 lambda1..4 = {:.4?}, max rel. error {:.2}% (5%), last doubling change {:.3}% (1%)",
            last,
            100.0 * rel.iter().copied().fold(0.0, f64::max),
            100.0 * change
        ),
    )
}

// ---------------------------------------------------------------- 6

fn criterion_6(models: &[(&str, mmlab::heat::DirichletGraph, SpectralHeatModel)]) -> Outcome {
    let grid: Vec<f64> = (0..=10).map(|k| 0.1 * k as f64).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut lines = Vec::new();
    let mut pass = true;
    for (name, _, m) in models {
        let n = m.len();
        let start = rng.gen_range(0..n);
        let ens = sample_paths(m, start, &grid, 100_000, 600).unwrap();
        let mut agree = 0;
        for _ in 0..50 {
            let k = rng.gen_range(1..=3);
            let mut ix: Vec<usize> = rand::seq::index::sample(&mut rng, 10, k).into_iter().map(|i| i + 1).collect();
            ix.sort_unstable();
            let times = ix.iter().map(|&i| grid[i]).collect();
            let obs = (0..k).map(|_| (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect()).collect();
            let spec = FddSpec::new(times, obs).unwrap();
            let mc = fdd_monte_carlo(&ens, &spec).unwrap();
            let exact = fdd_exact(m, start, &spec).unwrap();
            if (mc.estimate - exact).abs() <= 4.0 * mc.std_error.unwrap() {
                agree += 1;
            }
        }
        pass &= agree >= 48;
        lines.push(format!("{name} {agree}/50"));
    }
    outcome(pass, format!("{} within 4 SE at M=1e5 (need 48/50)", lines.join(", ")))
}

// ---------------------------------------------------------------- 7

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut restriction_exact, mut worst_excess) = (true, f64::NEG_INFINITY);
    for i in 0..100 {
        let family = if i % 2 == 0 { ModelFamily::Interval } else { ModelFamily::Circle };
        let n = rng.gen_range(16..=128);
        let space = build_model_space(family, n, 1.0).unwrap();
        let k = rng.gen_range(1..=n.min(20));
        let mut domain = rand::seq::index::sample(&mut rng, n, k).into_vec();
        domain.sort_unstable();
        let values: Vec<f64> = (0..k).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let alpha = rng.gen_range(0.05..=1.0);
        // The sharp constant of the data, computed directly.
        let mut h: f64 = 0.0;
        for a in 0..k {
            for b in 0..a {
                h = h.max((values[a] - values[b]).abs() / space.dist(domain[a], domain[b]).powf(alpha));
            }
        }
        let f = HolderFunction::new(&space, domain.clone(), values.clone(), alpha, h).unwrap();
        let ext = extend(&f, &space).unwrap();
        restriction_exact &= domain.iter().zip(&values).all(|(&a, v)| ext[a].to_bits() == v.to_bits());
        for x in 0..n {
            for y in 0..x {
                let ratio = (ext[x] - ext[y]).abs() / space.dist(x, y).powf(alpha);
                worst_excess = worst_excess.max(ratio - h);
            }
        }
    }
    outcome(
        restriction_exact && worst_excess <= 1e-12,
        format!("restriction bit-exact: {restriction_exact}; max (constant - H) = {worst_excess:.2e} (1e-12)"),
    )
}

// ---------------------------------------------------------------- 8, 9, 10

fn criteria_8_to_10() -> [Outcome; 3] {
    let mut cfg = ExperimentConfig::circle_nets(&[16, 32, 64, 128, 256, 512, 1024]);
    cfg.paths = 512;
    cfg.t_max = 20.0;
    cfg.seed = 8;
    let clock = Instant::now();
    let report = match run_experiment(&cfg) {
        Ok(r) => r,
        Err(e) => {
            let f = || outcome(false, format!("experiment failed: {e}"));
            return [f(), f(), f()];
        }
    };
    let secs = clock.elapsed().as_secs_f64();
    let strictly_decreasing = |col: &str| {
        let s = report.series(col);
        s.len() == 6 && s.windows(2).all(|w| w[1].1 < w[0].1)
    };
    let fmt = |v: mmlab::Result<mmlab::lab::Verdict>| match v {
        Ok(v) => (v.pass, if v.pass { "PASS".to_string() } else { v.to_string() }),
        Err(e) => (false, format!("error: {e}")),
    };
    let (fw, fw_text) = fmt(verify_direction_forward(&report));
    let (bw, bw_text) = fmt(verify_direction_backward(&report));
    let (co, co_text) = fmt(corollary_verdict(&report));
    let (d_dec, f_dec) = (strictly_decreasing("d_upper"), strictly_decreasing("fdd_distance"));
    let gaps = report.series("lambda1");
    let inf = gaps.iter().map(|g| g.1).fold(f64::INFINITY, f64::min);
    let limit = report.limit_row().and_then(|r| r.cell("lambda1").value()).unwrap_or(f64::NAN);
    let paths: Vec<String> = report.series("path_space_d_upper").iter().map(|p| format!("{:.3}", p.1)).collect();
    [
        outcome(
            d_dec && f_dec && fw && secs < 600.0,
            format!("d_upper strictly decreasing {d_dec}, fdd_distance strictly decreasing {f_dec}, verdict {fw_text}, {secs:.0}s (600s)"),
        ),
        outcome(inf >= 0.5 * limit && bw, format!("inf lambda1 {inf:.4} vs 0.5 x limit {limit:.4}, verdict {bw_text}")),
        outcome(co, format!("path-space D upper bounds [{}], verdict {co_text}", paths.join(", "))),
    ]
}

// ---------------------------------------------------------------- 11

fn criterion_11() -> Outcome {
    let (_, m) = circle_model(512);
    let hs: Vec<f64> = (0..9).map(|k| 1e-3 * 10f64.powf(k as f64 / 4.0)).collect();
    let rep = tightness_modulus(&m, 0, 0.0, &hs, 2.0).unwrap();
    let slope = rep.slope.unwrap_or(f64::NAN);
    outcome((0.8..=1.2).contains(&slope), format!("log-log slope {slope:.4} over h in [1e-3, 1e-1] (want [0.8, 1.2])"))
}

// ---------------------------------------------------------------- 12

fn criterion_12() -> Outcome {
    let circle = build_model_space(ModelFamily::Circle, 256, 1.0).unwrap();
    let torus = build_model_space(ModelFamily::Torus2, 32 * 32, 1.0).unwrap();
    let pairs: Vec<(f64, f64)> = (0..10).map(|k| {
        let big = 0.3 + 0.25 * k as f64;
        (big * (0.2 + 0.07 * k as f64), big)
    }).collect();
    let bg_circle = bishop_gromov_check(&circle, 0, &pairs).unwrap().satisfied;
    let bg_torus = bishop_gromov_check(&torus, 0, &pairs).unwrap().satisfied;

    // Below a few grid spacings the lattice dominates: an open ball holding
    // 2k+1 points doubles to at most 4k+3 of them. Radii off the lattice
    // keep rounding from moving a boundary shell inside.
    let h = circle.grid_spacing();
    let radii: Vec<f64> = (0..10).map(|k| 6.5 * h * (1.5 / (6.5 * h)).powf(k as f64 / 9.0)).collect();
    let doubling = doubling_constant(&circle, &radii).unwrap();

    let t_max = 20.0;
    let tail = 1.0 - (-t_max as f64).exp();
    let cases: [(&[f64], &[f64], f64); 4] = [
        (&[0.0], &[0.3], 0.3 * tail),
        (&[0.0, 1.0], &[0.0, 0.4], 0.4 * ((-1.0f64).exp() - (-t_max as f64).exp())),
        (&[0.0, 0.5, 2.0], &[0.5, 0.2, 3.0], 0.5 * (1.0 - (-2.0f64).exp()) + ((-2.0f64).exp() - (-t_max as f64).exp())),
        (&[0.0, 0.25], &[2.0, 0.0], tail),
    ];
    let delta_err = cases
        .iter()
        .map(|(t, g, want)| (delta_from_gaps(t, g, t_max).value - want).abs())
        .fold(0.0, f64::max);
    outcome(
        bg_circle && bg_torus && doubling <= 2.1 && delta_err <= 1e-6,
        format!(
            "Bishop-Gromov circle {bg_circle}, torus2 {bg_torus} (10 pairs); circle doubling {doubling:.4} (2.1); \
             delta closed forms {delta_err:.1e} (1e-6)"
        ),
    )
}

fn print_line(k: usize, name: &str, o: &Outcome, timing: &str) {
    println!("criterion {k:>2} {:<4} {name}: {} [{timing}]", if o.pass { "PASS" } else { "FAIL" }, o.detail);
}

fn timed(k: usize, name: &'static str, f: impl FnOnce() -> Outcome) -> (usize, &'static str, Outcome) {
    let t = Instant::now();
    let o = f();
    print_line(k, name, &o, &format!("{:.1}s", t.elapsed().as_secs_f64()));
    (k, name, o)
}

fn main() {
    let clock = Instant::now();
    let mut results = vec![
        timed(1, "exact transport vs vertex enumeration", criterion_1),
        timed(2, "tiny D on two-point spaces", criterion_2),
    ];
    let models: Vec<_> = shipped_spaces()
        .into_iter()
        .map(|(name, s)| {
            let (g, m) = heat_model(&s);
            (name, g, m)
        })
        .collect();
    results.push(timed(3, "semigroup identities", || criterion_3(&models)));
    results.push(timed(4, "mixing inequality", || criterion_4(&models)));
    results.push(timed(5, "circle spectrum convergence", criterion_5));
    results.push(timed(6, "Monte Carlo vs exact FDD", || criterion_6(&models)));
    results.push(timed(7, "Hölder extension", criterion_7));
    let t = Instant::now();
    let [c8, c9, c10] = criteria_8_to_10();
    let shared = format!("{:.1}s shared", t.elapsed().as_secs_f64());
    for (k, name, o) in [(8, "forward direction", c8), (9, "backward direction", c9), (10, "path spaces", c10)] {
        print_line(k, name, &o, &shared);
        results.push((k, name, o));
    }
    results.push(timed(11, "tightness modulus scaling", criterion_11));
    results.push(timed(12, "geometry suite", criterion_12));

    let failed: Vec<usize> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!(
        "acceptance: {}/{} passed in {:.0}s",
        results.len() - failed.len(),
        results.len(),
        clock.elapsed().as_secs_f64()
    );
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
