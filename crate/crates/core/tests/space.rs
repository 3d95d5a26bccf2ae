use approx::assert_abs_diff_eq;
use mmlab::space::geometry::{
    bishop_gromov_check, cd_star_displacement_check, doubling_constant, strong_convexity_check, volume_growth_floor,
};
use mmlab::space::io::read_space;
use mmlab::space::{build_model_space, cone_space, weighted_space, ModelFamily};
use mmlab::transport::{hausdorff_distance, path_delta_distance};
use mmlab::{FiniteMMSpace, SpaceMeta};

fn interval_positions(s: &FiniteMMSpace) -> Vec<f64> {
    s.dist_row(0).to_vec()
}

#[test]
fn convexity_examples() {
    let s = build_model_space(ModelFamily::Interval, 101, 1.0).unwrap();
    let flat = strong_convexity_check(&s, &vec![0.7; 101], 0.0, 3.0).unwrap();
    assert!(flat.worst_margin.abs() <= 1e-12 && flat.satisfied);
    assert!(flat.checked > 0 && flat.missing_geodesic < flat.checked);

    let x = interval_positions(&s);
    let sq: Vec<f64> = x.iter().map(|t| t * t).collect();
    // x² is 2-convex in the Hessian sense and (0, N)-convex for every N.
    assert!(strong_convexity_check(&s, &sq, 0.0, 4.0).unwrap().satisfied);
    // (K, N)-convexity asks V'' − V'²/N ≥ K, which x² misses at K = 2, N = 1.
    let rep = strong_convexity_check(&s, &sq, 2.0, 1.0).unwrap();
    assert!(!rep.satisfied && rep.worst_margin < -1e-3, "{}", rep.worst_margin);

    let bump: Vec<f64> = x.iter().map(|t| -(-(t - 0.5) * (t - 0.5) / 0.01).exp()).collect();
    assert!(strong_convexity_check(&s, &bump, 0.0, 2.0).unwrap().worst_margin < 0.0);
}

#[test]
fn displacement_check_on_flat_interval() {
    let s = build_model_space(ModelFamily::Interval, 41, 1.0).unwrap();
    let m = s.weights().to_vec();
    let rep = cd_star_displacement_check(&s, &m, &m, 4).unwrap();
    assert!(rep.worst_margin.abs() <= 1e-12);
    let mut left = vec![0.0; 41];
    let mut right = vec![0.0; 41];
    left[..10].iter_mut().for_each(|v| *v = 0.1);
    right[31..].iter_mut().for_each(|v| *v = 0.1);
    let shift = cd_star_displacement_check(&s, &left, &right, 4).unwrap();
    assert!(shift.satisfied, "{:?}", shift.margins);
    assert!(!shift.grid_too_coarse);
}

#[test]
fn volume_and_doubling() {
    let c = build_model_space(ModelFamily::Circle, 256, 1.0).unwrap();
    let t = build_model_space(ModelFamily::Torus2, 32 * 32, 1.0).unwrap();
    assert!((2.0 * volume_growth_floor(&c).unwrap().nu - 1.0).abs() <= 0.1);
    assert!((2.0 * volume_growth_floor(&t).unwrap().nu - 2.0).abs() <= 0.2);
    let pairs: Vec<(f64, f64)> = (1..=10).map(|k| (0.05 * k as f64, 0.1 + 0.2 * k as f64)).collect();
    for s in [&c, &t] {
        let rep = bishop_gromov_check(s, 3, &pairs).unwrap();
        assert!(rep.satisfied);
        assert!(rep.ratios.iter().all(|r| r.measured <= 1.0 && r.model <= 1.0));
    }
    let same = bishop_gromov_check(&c, 0, &[(0.4, 0.4)]).unwrap();
    assert_eq!((same.ratios[0].measured, same.ratios[0].model), (1.0, 1.0));
    let h = c.grid_spacing();
    assert!(doubling_constant(&c, &[6.5 * h, 0.3, 1.0]).unwrap() <= 2.1);
    assert!(doubling_constant(&c, &[0.0]).is_err());
}

#[test]
fn cones_and_weights() {
    let base = build_model_space(ModelFamily::Circle, 16, 1.0).unwrap();
    let cone = cone_space(&base, 0.0, 2.0, 5).unwrap();
    assert!(cone.find_violation().is_none());
    assert_abs_diff_eq!(cone.weights().iter().sum::<f64>(), 1.0, epsilon = 1e-12);

    let two = build_model_space(ModelFamily::Interval, 2, 1.0).unwrap();
    let w = weighted_space(&two, &[0.0, 3f64.ln()]).unwrap();
    assert_abs_diff_eq!(w.weight(0), 0.75, epsilon = 1e-15);
    assert_abs_diff_eq!(w.weight(1), 0.25, epsilon = 1e-15);
}

#[test]
fn nested_circle_nets_hausdorff() {
    let a = build_model_space(ModelFamily::Circle, 8, 1.0).unwrap();
    let b = build_model_space(ModelFamily::Circle, 16, 1.0).unwrap();
    let d = hausdorff_distance(a.ambient().unwrap(), b.ambient().unwrap()).unwrap();
    // Every new point sits midway between two old ones.
    assert_abs_diff_eq!(d, std::f64::consts::PI / 8.0, epsilon = 1e-12);
    assert_eq!(hausdorff_distance(a.ambient().unwrap(), a.ambient().unwrap()).unwrap(), 0.0);
}

#[test]
fn delta_distance_closed_forms() {
    let times: Vec<f64> = (0..=40).map(|k| 0.5 * k as f64).collect();
    let metric = |i: usize, j: usize| 0.3 * (i as f64 - j as f64).abs();
    let same = vec![2usize; 41];
    assert_eq!(path_delta_distance(&times, &same, &same, metric, 20.0).unwrap().value, 0.0);
    let other = vec![3usize; 41];
    let d = path_delta_distance(&times, &same, &other, metric, 20.0).unwrap();
    assert_abs_diff_eq!(d.value, 0.3 * (1.0 - (-20.0f64).exp()), epsilon = 1e-12);
    assert_abs_diff_eq!(d.error_bar, (-20.0f64).exp(), epsilon = 1e-20);
    let far = vec![9usize; 41];
    let d = path_delta_distance(&times, &same, &far, metric, 20.0).unwrap();
    assert_abs_diff_eq!(d.value, 1.0 - (-20.0f64).exp(), epsilon = 1e-12);
    assert!(path_delta_distance(&times[..10], &same[..10], &other[..10], metric, 20.0).is_err());
}

#[test]
fn file_diagnostics_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.txt");
    let good = build_model_space(ModelFamily::Circle, 4, 1.0).unwrap();
    mmlab::space::io::write_space(&good, &path).unwrap();
    assert_eq!(read_space(&path).unwrap(), good);
    let text = std::fs::read_to_string(&path).unwrap();
    let broken = text.replacen("weight", "wieght", 1);
    std::fs::write(&path, broken).unwrap();
    let err = read_space(&path).unwrap_err().to_string();
    assert!(err.contains("bad.txt:16:"), "{err}");
    let meta = SpaceMeta::new(0.0, 0.5, 1.0, "flat");
    assert!(FiniteMMSpace::new(vec![0.0], vec![1.0], meta).is_err());
}
