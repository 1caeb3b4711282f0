use hexwalk::engine::evolve;
use hexwalk::lattice::{to_cartesian, StepProbabilities};
use hexwalk::moments::{asymptotic_covariance, moments};
use hexwalk::montecarlo::{
    chi2_2_quantile, clt_diagnostic, donsker_diagnostic, endpoint_histogram, normalized_path, sample_endpoint,
    sample_endpoints, sample_path, scaled_lattice_process, scaled_lattice_replica, Sampler, DONSKER_GRID,
};
use hexwalk::Distribution;

fn decimal_set() -> StepProbabilities {
    StepProbabilities::new([0.5, 0.25, 0.25], [0.2, 0.3, 0.5], 1.0).unwrap()
}

#[test]
fn trivial_walks() {
    let q = decimal_set();
    let s = sample_endpoint(0, &q, 5);
    assert_eq!((s.endpoint.x, s.endpoint.y), (0.0, 0.0));
    let forced = StepProbabilities::new([1.0, 0.0, 0.0], [1.0, 0.0, 0.0], 2.0).unwrap();
    let s = sample_endpoint(1, &forced, 5);
    assert_eq!((s.endpoint.x, s.endpoint.y), (2.0, 0.0));
    assert_eq!(sample_endpoint(2, &forced, 5).endpoint.x, 0.0);
}

#[test]
fn sampling_is_reproducible() {
    let q = decimal_set();
    assert_eq!(sample_endpoints(300, 64, &q, 11), sample_endpoints(300, 64, &q, 11));
    assert_ne!(sample_endpoints(300, 64, &q, 11), sample_endpoints(300, 64, &q, 12));
    // replica streams do not depend on how many replicas are drawn
    let few = sample_endpoints(300, 8, &q, 11);
    assert_eq!(&sample_endpoints(300, 64, &q, 11)[..8], &few[..]);
}

#[test]
fn paths_move_one_edge_at_a_time() {
    for a in [1.0, 0.3] {
        let q = decimal_set().with_spacing(a).unwrap();
        let s = sample_path(500, &q, 3);
        let path = s.path.unwrap();
        assert_eq!(path.len(), 501);
        assert_eq!((path[0].x, path[0].y), (0.0, 0.0));
        for w in path.windows(2) {
            assert!((w[0].distance(&w[1]) - a).abs() < 1e-9);
        }
        assert_eq!(*path.last().unwrap(), sample_endpoint(500, &q, 3).endpoint);
    }
}

#[test]
fn zero_probability_directions_never_appear() {
    let q = StepProbabilities::new([0.5, 0.0, 0.5], [0.4, 0.0, 0.6], 1.0).unwrap();
    let sampler = Sampler::new(&q, 1);
    for replica in 0..200 {
        let path = sampler.path(60, replica);
        for w in path.windows(2) {
            let (dj, dk) = (w[1].j - w[0].j, w[1].k - w[0].k);
            let forbidden = if w[0].class.index() == 0 { (-1, 1) } else { (1, -1) };
            assert_ne!((dj, dk), forbidden);
        }
    }
}

#[test]
fn histogram_matches_exact_distribution() {
    let q = decimal_set();
    let replicas = 1_000_000u64;
    let hist = endpoint_histogram(6, replicas, &q, 77);
    let d: Distribution<f64> = evolve(&q, 6).unwrap();
    for &(j, k) in hist.keys() {
        assert!(d.probability(j, k) > 0.0, "sampled an unreachable state");
    }
    for ((j, k), p) in d.iter() {
        let observed = *hist.get(&(j, k)).unwrap_or(&0) as f64 / replicas as f64;
        let se = (p * (1.0 - p) / replicas as f64).sqrt();
        assert!((observed - p).abs() <= 4.0 * se + 1e-12, "({j},{k}) {observed} vs {p}");
    }
}

#[test]
fn mean_of_long_uniform_walks() {
    let q = StepProbabilities::uniform();
    let n = 1000u64;
    let replicas = 100_000usize;
    let pts = sample_endpoints(n, replicas as u64, &q, 2024);
    let bound = 3.0 * (0.5 * n as f64 / replicas as f64).sqrt();
    let mx = pts.iter().map(|p| p.x).sum::<f64>() / replicas as f64;
    let my = pts.iter().map(|p| p.y).sum::<f64>() / replicas as f64;
    assert!(mx.abs() < bound && my.abs() < bound, "({mx}, {my}) vs {bound}");
}

#[test]
fn asymmetric_covariance_from_a_million_walks() {
    let q = decimal_set();
    let n = 2000u64;
    let replicas = 1_000_000u64;
    let m = moments(n, &q);
    let pts = sample_endpoints(n, replicas, &q, 99);
    let root = (n as f64).sqrt();
    let (mut xx, mut xy, mut yy) = (0.0, 0.0, 0.0);
    for p in &pts {
        let (dx, dy) = ((p.x - m.mean[0]) / root, (p.y - m.mean[1]) / root);
        xx += dx * dx;
        xy += dx * dy;
        yy += dy * dy;
    }
    let r = replicas as f64;
    let (xx, xy, yy) = (xx / r, xy / r, yy / r);
    let c = asymptotic_covariance(&q);
    // Gaussian standard errors of the sample second moments
    let se_xx = (2.0 * c.xx * c.xx / r).sqrt();
    let se_yy = (2.0 * c.yy * c.yy / r).sqrt();
    let se_xy = ((c.xx * c.yy + c.xy * c.xy) / r).sqrt();
    assert!((xx - c.xx).abs() < 3.0 * se_xx, "{xx} vs {}", c.xx);
    assert!((yy - c.yy).abs() < 3.0 * se_yy, "{yy} vs {}", c.yy);
    assert!((xy - c.xy).abs() < 3.0 * se_xy, "{xy} vs {}", c.xy);
}

#[test]
fn deterministic_walk_is_flagged_singular() {
    let q = StepProbabilities::new([1.0, 0.0, 0.0], [1.0, 0.0, 0.0], 1.0).unwrap();
    let r = clt_diagnostic(501, 1000, &q, 0).unwrap();
    assert!(r.singular && r.coverage.is_none() && r.frobenius_relative_error.is_none());
    assert!(r.max_abs_normalized < 1e-12);
    assert!(clt_diagnostic(0, 1000, &q, 0).is_err());
    assert!(clt_diagnostic(10, 10, &q, 0).is_err());
}

#[test]
fn chi_square_quantiles() {
    assert!((chi2_2_quantile(0.5) - 2.0 * 2f64.ln()).abs() < 1e-15);
    assert!((chi2_2_quantile(0.9) - 4.605_170_185_988_091).abs() < 1e-12);
    assert!((chi2_2_quantile(0.99) - 9.210_340_371_976_182).abs() < 1e-12);
}

#[test]
fn unit_rescaling_is_the_partial_sum_path() {
    let q = decimal_set();
    let p = scaled_lattice_process(1, 5.0, &q, 8).unwrap();
    assert_eq!(p.time_grid, vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
    let path = Sampler::new(&q, 8).path(5, 0);
    for (v, w) in p.values.iter().zip(&path) {
        let c = to_cartesian(w, 1.0).unwrap();
        assert_eq!(*v, [c.x, c.y]);
    }
    assert!(scaled_lattice_process(0, 5.0, &q, 8).is_err());
    assert!(scaled_lattice_process(3, 0.0, &q, 8).is_err());
}

#[test]
fn rescaled_process_spreads_linearly() {
    let q = StepProbabilities::uniform();
    let replicas = 10_000u64;
    let (mut xx, mut yy) = (0.0, 0.0);
    for r in 0..replicas {
        let p = scaled_lattice_replica(400, 3.0, &q, 31, r).unwrap();
        assert_eq!(p.values[0], [0.0, 0.0]);
        let v = p.values[3];
        xx += v[0] * v[0];
        yy += v[1] * v[1];
    }
    let (xx, yy) = (xx / replicas as f64, yy / replicas as f64);
    assert!((xx - 1.5).abs() < 0.05 * 1.5 && (yy - 1.5).abs() < 0.05 * 1.5, "{xx} {yy}");
}

#[test]
fn normalized_paths_start_at_zero() {
    let q = decimal_set();
    let p = normalized_path(1000, &DONSKER_GRID, &q, 4, 0).unwrap();
    assert_eq!(p.values[0], [0.0, 0.0]);
    assert_eq!(p.values.len(), DONSKER_GRID.len());
    assert!(normalized_path(1000, &[0.0, 0.5, 0.4], &q, 4, 0).is_err());
}

#[test]
fn donsker_report_for_an_asymmetric_walk() {
    let q = decimal_set();
    let r = donsker_diagnostic(2000, 20_000, &q, 6).unwrap();
    assert_eq!(r.origin_max, 0.0);
    assert!(!r.whitening_skipped);
    // Dᵀ D = C
    let dtd = r.d.transpose().mul(&r.d).as_sym();
    assert!(dtd.sub(&r.c).frobenius() < 1e-14);
    for inc in &r.increments {
        assert!(inc.whitened_relative_error.unwrap() < 0.06);
    }
    assert!(r.cross_between(0, 2).unwrap().max_z < 4.0);
    assert_eq!(r.cross.len(), 6);
    assert!(donsker_diagnostic(50, 100, &q, 6).is_err());
}
