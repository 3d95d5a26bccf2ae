mod common;

use std::sync::Arc;

use approx::assert_abs_diff_eq;
use common::{circle_model, random_vec};
use mmlab::brownian::*;
use mmlab::heat::{build_dirichlet_graph, spectral_decompose, Bandwidth, SpectralHeatModel};
use mmlab::space::{build_model_space, ModelFamily};

/// Two points at distance `gap` with equal mass; returns the model and its conductance.
fn two_point(gap: f64, bandwidth: f64) -> (SpectralHeatModel, f64) {
    let s = Arc::new(build_model_space(ModelFamily::Interval, 2, gap).unwrap());
    let g = build_dirichlet_graph(&s, Bandwidth::Fixed(bandwidth)).unwrap();
    let w = g.conductance(0, 1);
    (spectral_decompose(&g).unwrap(), w)
}

#[test]
fn fdd_exact_closed_forms() {
    let (m, w) = two_point(1.0, 0.5);
    let one = FddSpec::new(vec![0.7], vec![vec![1.0, 1.0]]).unwrap();
    assert_abs_diff_eq!(fdd_exact(&m, 0, &one).unwrap(), 1.0, epsilon = 1e-14);
    let (s, t) = (0.2 / w, 0.5 / w);
    let ind = vec![1.0, 0.0];
    let spec = FddSpec::new(vec![s, t], vec![ind.clone(), ind]).unwrap();
    let es = (-4.0 * w * s).exp();
    let el = (-4.0 * w * (t - s)).exp();
    assert_abs_diff_eq!(fdd_exact(&m, 0, &spec).unwrap(), 0.25 * (1.0 + es) * (1.0 + el), epsilon = 1e-12);
    assert!(FddSpec::new(vec![0.5, 0.5], vec![vec![1.0, 1.0]; 2]).is_err());
    assert!(FddSpec::new(vec![0.0], vec![vec![1.0, 1.0]]).is_err());

    let (_, c) = circle_model(64);
    let g = random_vec(64, 1);
    let spec = FddSpec::new(vec![30.0], vec![g.clone()]).unwrap();
    let mean = c.mean(&g);
    let bound = (-c.spectral_gap() * 30.0).exp() * c.norm(&g) * 8.0;
    assert!((fdd_exact(&c, 0, &spec).unwrap() - mean).abs() <= bound);
}

#[test]
fn sampling_matches_transition_probability() {
    let (m, w) = two_point(1.0, 0.5);
    let t = 0.3 / w;
    let ens = sample_paths(&m, 0, &[0.0, t], 100_000, 42).unwrap();
    let freq = ens.column(1).filter(|&x| x == 1).count() as f64 / ens.len() as f64;
    let p = 0.5 * (1.0 - (-4.0 * w * t).exp());
    let se = (p * (1.0 - p) / ens.len() as f64).sqrt();
    assert!((freq - p).abs() <= 4.0 * se, "{freq} vs {p}");
    assert_eq!(ens.clip_mass(), 0.0);

    let again = sample_paths(&m, 0, &[0.0, t], 100_000, 42).unwrap();
    assert_eq!(ens.digest(), again.digest());
    assert_ne!(ens.digest(), sample_paths(&m, 0, &[0.0, t], 100_000, 43).unwrap().digest());

    let single = sample_paths(&m, 1, &[0.0], 1, 0).unwrap();
    assert_eq!(single.path(0), &[1]);
    assert!(sample_paths(&m, 0, &[0.1, 0.2], 10, 0).is_err());
}

#[test]
fn monte_carlo_agrees_with_exact() {
    let (_, c) = circle_model(64);
    let grid: Vec<f64> = (0..=10).map(|k| 0.1 * k as f64).collect();
    let ens = sample_paths(&c, 5, &grid, 20_000, 9).unwrap();
    let ones = FddSpec::new(vec![0.5], vec![vec![1.0; 64]]).unwrap();
    let mc = fdd_monte_carlo(&ens, &ones).unwrap();
    assert_eq!((mc.estimate, mc.std_error), (1.0, Some(0.0)));
    for seed in 0..10u64 {
        let spec = FddSpec::new(vec![0.2, 0.6, 1.0], (0..3).map(|k| random_vec(64, 100 * seed + k)).collect()).unwrap();
        let mc = fdd_monte_carlo(&ens, &spec).unwrap();
        let exact = fdd_exact(&c, 5, &spec).unwrap();
        assert!((mc.estimate - exact).abs() <= 4.0 * mc.std_error.unwrap(), "{mc:?} vs {exact}");
    }
    let off_grid = FddSpec::new(vec![0.25], vec![vec![1.0; 64]]).unwrap();
    assert!(fdd_monte_carlo(&ens, &off_grid).is_err());
    let one = sample_paths(&c, 5, &grid, 1, 9).unwrap();
    assert_eq!(fdd_monte_carlo(&one, &ones).unwrap().std_error, None);
}

#[test]
fn ensemble_text_round_trip() {
    let (_, c) = circle_model(32);
    let ens = sample_paths(&c, 3, &[0.0, 0.5, 1.0], 7, 1).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("e.paths");
    write_ensemble(&ens, &path).unwrap();
    assert_eq!(read_ensemble(&path).unwrap(), ens);
    let broken = ens.to_text().replacen("paths 7", "paths x", 1);
    assert!(matches!(PathEnsemble::from_text(&broken, "e"), Err(mmlab::Error::Parse { .. })));
}

#[test]
fn tightness_closed_form_and_scaling() {
    let (m, w) = two_point(1.0, 0.5);
    let hs = [0.0, 0.1 / w, 0.4 / w];
    let rep = tightness_modulus(&m, 0, 0.3, &hs, 2.0).unwrap();
    assert_eq!(rep.rows[0].1, 0.0);
    for &(h, v) in &rep.rows[1..] {
        assert_abs_diff_eq!(v, 0.5 * (1.0 - (-4.0 * w * h).exp()), epsilon = 1e-12);
    }

    let (_, c) = circle_model(512);
    let hs: Vec<f64> = (0..9).map(|k| 1e-3 * 10f64.powf(k as f64 / 4.0)).collect();
    let rep = tightness_modulus(&c, 0, 0.0, &hs, 2.0).unwrap();
    let slope = rep.slope.unwrap();
    assert!((0.8..=1.2).contains(&slope), "{slope}");
    assert!(rep.rows.iter().all(|r| (0.0..=1.0).contains(&r.1)));
}

#[test]
fn occupation_and_recurrence() {
    let (m, w) = two_point(1.0, 0.5);
    let ts: Vec<f64> = [0.0, 0.1, 0.5, 2.0].iter().map(|t| t / w).collect();
    let rep = ergodic_occupation(&m, 0, &[1], &ts).unwrap();
    for r in &rep.rows {
        let e = (-4.0 * w * r.t).exp();
        assert_abs_diff_eq!(r.probability, 0.5 * (1.0 - e), epsilon = 1e-12);
        assert_abs_diff_eq!(r.gap, 0.5 * e, epsilon = 1e-12);
    }
    assert!(rep.within_envelope);
    let all = ergodic_occupation(&m, 0, &[0, 1], &ts).unwrap();
    assert!(all.rows.iter().all(|r| (r.probability - 1.0).abs() <= 1e-12));

    let rec = irreducibility_recurrence_check(&m, &[1.0, 0.0]).unwrap();
    assert!(rec.min_kernel > 0.0);
    assert_abs_diff_eq!(rec.green_rate, 0.5, epsilon = 1e-9);
    let big_t = rec.green[0].0;
    let at_a = 0.5 * big_t + (1.0 - (-4.0 * w * big_t).exp()) / (8.0 * w);
    let at_b = 0.5 * big_t - (1.0 - (-4.0 * w * big_t).exp()) / (8.0 * w);
    assert_abs_diff_eq!(rec.green[0].1, at_a.min(at_b), epsilon = 1e-12);
    assert!(irreducibility_recurrence_check(&m, &[0.0, 0.0]).is_err());

    for (_, space) in common::shipped_spaces() {
        let (_, model) = common::heat_model(&space);
        let f: Vec<f64> = (0..model.len()).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect();
        let rep = irreducibility_recurrence_check(&model, &f).unwrap();
        assert!(rep.green_rate > 0.0);
        let occ = ergodic_occupation(&model, 0, &[1, 2, 3], &[0.01, 0.1, 1.0, 5.0]).unwrap();
        assert!(occ.within_envelope);
    }
}

#[test]
fn dictionary_distance_two_point_closed_form() {
    let (a, wa) = two_point(1.0, 0.5);
    let (b, wb) = two_point(1.0, 0.6);
    let grid = [0.0, 1.0];
    let ea = sample_paths(&a, 0, &grid, 1, 0).unwrap();
    let eb = sample_paths(&b, 0, &grid, 1, 0).unwrap();
    let (la, lb) = (PathLaw { model: &a, ensemble: &ea }, PathLaw { model: &b, ensemble: &eb });
    let dict = FddDictionary::default_for(a.space(), b.space()).unwrap();
    let singles = dict.filtered(|e| e.times.len() == 1).unwrap();
    let d = fdd_dictionary_distance(la, lb, &singles).unwrap();
    let want = law::DICTIONARY_TIMES
        .iter()
        .map(|&t| 0.5 * ((-4.0 * wa * t).exp() - (-4.0 * wb * t).exp()).abs())
        .fold(0.0, f64::max);
    assert_abs_diff_eq!(d.value, want, epsilon = 1e-12);

    let same = path_law_distance(la, la, PathLawMode::FddDictionary).unwrap();
    assert_eq!(same.value, 0.0);
    let ab = path_law_distance(la, lb, PathLawMode::FddDictionary).unwrap().value;
    let ba = path_law_distance(lb, la, PathLawMode::FddDictionary).unwrap().value;
    assert_eq!(ab, ba);
    assert!(ab >= want);
}

#[test]
fn grid_w2_symmetry_and_identity() {
    let (_, a) = circle_model(16);
    let (_, b) = circle_model(20);
    let grid = [0.0, 0.5, 1.0];
    let ea = sample_paths(&a, 0, &grid, 64, 1).unwrap();
    let eb = sample_paths(&b, 0, &grid, 64, 2).unwrap();
    let (la, lb) = (PathLaw { model: &a, ensemble: &ea }, PathLaw { model: &b, ensemble: &eb });
    let ab = path_law_distance(la, lb, PathLawMode::GridW2).unwrap();
    let ba = path_law_distance(lb, la, PathLawMode::GridW2).unwrap();
    assert_eq!(ab.method, PathLawMethod::ExactJoint);
    assert_abs_diff_eq!(ab.value, ba.value, epsilon = 1e-9);
    assert!(path_law_distance(la, la, PathLawMode::GridW2).unwrap().value <= 1e-7);

    let (_, c) = circle_model(64);
    let (_, d) = circle_model(72);
    let ec = sample_paths(&c, 0, &grid, 200, 1).unwrap();
    let ed = sample_paths(&d, 0, &grid, 200, 2).unwrap();
    let r = grid_w2_distance(PathLaw { model: &c, ensemble: &ec }, PathLaw { model: &d, ensemble: &ed }, &[0.5, 1.0]).unwrap();
    assert_eq!(r.method, PathLawMethod::MonteCarlo);
    assert!(r.error_bar.is_some());
}

#[test]
fn path_space_closed_forms() {
    let (m, _) = two_point(0.3, 0.2);
    let grid = default_path_grid(DEFAULT_T_MAX);
    let row = |x: usize| vec![x.to_string(); grid.len()].join(" ");
    let mut text = format!("mmlab-paths 1\nseed 0\nstart 0\nmodel_hash {}\nclip_mass 0\ngrid {}\n", m.space_hash(), grid.len());
    for t in &grid {
        text.push_str(&format!("{t:e}\n"));
    }
    text.push_str(&format!("paths 3\n{}\n{}\n{}\nend\n", row(0), row(1), row(0)));
    let ens = PathEnsemble::from_text(&text, "const").unwrap();
    let ps = path_space_as_mmspace(&ens, &m, DEFAULT_T_MAX).unwrap();
    assert_eq!(ps.len(), 2);
    assert_abs_diff_eq!(ps.dist(0, 1), 0.3 * (1.0 - (-DEFAULT_T_MAX).exp()), epsilon = 1e-12);
    assert_abs_diff_eq!(ps.weight(0), 2.0 / 3.0, epsilon = 1e-15);
    assert_abs_diff_eq!(ps.weights().iter().sum::<f64>(), 1.0, epsilon = 1e-15);

    let one = sample_paths(&m, 0, &grid, 1, 0).unwrap();
    assert_eq!(path_space_as_mmspace(&one, &m, DEFAULT_T_MAX).unwrap().len(), 1);
    assert!(path_space_as_mmspace(&one, &m, 50.0).is_err());
}

#[test]
fn negative_kernel_is_fatal() {
    let (_, c) = circle_model(64);
    match sample_paths(&c, 0, &[0.0, 1e-7], 4, 0) {
        Ok(e) => assert!(e.clip_mass() <= 1e-6),
        Err(mmlab::Error::NegativeKernel { suggested_t_pos, .. }) => assert!(suggested_t_pos > 1e-7),
        Err(e) => panic!("{e}"),
    }
}
