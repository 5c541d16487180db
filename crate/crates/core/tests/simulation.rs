use statrs::distribution::{ChiSquared, ContinuousCDF};

use weyl_core::density::{absorbing_density, conditioned_density};
use weyl_core::montecarlo::{
    h_transform_survival, simulate_absorbed, simulate_conditioned, survival_curve, DriftSpec, SimConfig,
};
use weyl_core::oracle::quadrature::quadrature_survival;
use weyl_core::quad::integrate;
use weyl_core::stats::ks_one_sample;
use weyl_core::{Family, RootSystem};

fn rs(f: Family, n: usize) -> RootSystem {
    RootSystem::new(f, n).unwrap()
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(f)
}

#[test]
fn thread_count_does_not_change_results() {
    let sys = rs(Family::B, 2);
    let cfg = SimConfig::new(sys.clone(), vec![2.0, 1.0], 1.0, 0.01, 5000, 17);
    let a = in_pool(1, || simulate_absorbed(&cfg).unwrap());
    let b = in_pool(3, || simulate_absorbed(&cfg).unwrap());
    assert_eq!(a, b);
    let c = in_pool(1, || simulate_conditioned(&cfg, &DriftSpec::conditioned(&sys)).unwrap());
    let d = in_pool(3, || simulate_conditioned(&cfg, &DriftSpec::conditioned(&sys)).unwrap());
    assert_eq!(c, d);
}

#[test]
fn step_refinement_is_consistent() {
    // D_2 at t = 1 from (2, 1): exact survival erf(1/2) erf(3/2).
    let sys = rs(Family::D, 2);
    let exact = quadrature_survival(&sys, &[2.0, 1.0], 1.0).unwrap();
    let coarse = simulate_absorbed(&SimConfig::new(sys.clone(), vec![2.0, 1.0], 1.0, 0.04, 200_000, 1)).unwrap();
    let fine = simulate_absorbed(&SimConfig::new(sys, vec![2.0, 1.0], 1.0, 0.01, 200_000, 2)).unwrap();
    let se = (coarse.std_err.powi(2) + fine.std_err.powi(2)).sqrt();
    assert!((coarse.p_hat - fine.p_hat).abs() < 4.0 * se, "{coarse:?} {fine:?}");
    assert!(
        (fine.p_hat - exact).abs() < 4.0 * fine.std_err,
        "{} vs {exact}",
        fine.p_hat
    );
}

#[test]
fn survival_curve_is_monotone_and_matches_quadrature() {
    let sys = rs(Family::B, 2);
    let eta = vec![2.0, 1.0];
    let grid = [0.25, 0.5, 1.0, 2.0];
    let cfg = SimConfig::new(sys.clone(), eta.clone(), 2.0, 0.01, 100_000, 3);
    let curve = survival_curve(&cfg, &grid).unwrap();
    assert!(curve.windows(2).all(|w| w[0].p_hat >= w[1].p_hat));
    assert!(!curve[3].endpoint_samples.is_empty());
    for est in &curve {
        let q = quadrature_survival(&sys, &eta, est.t).unwrap();
        assert!(
            (est.p_hat - q).abs() < 4.0 * est.std_err + 1e-4,
            "t={} {} vs {q}",
            est.t,
            est.p_hat
        );
    }
}

#[test]
fn survivor_histogram_matches_density() {
    let sys = rs(Family::B, 1);
    let cfg = SimConfig::new(sys.clone(), vec![1.0], 1.0, 0.01, 200_000, 4);
    let est = simulate_absorbed(&cfg).unwrap();
    let edges: Vec<f64> = (0..=16).map(|k| k as f64 * 0.25).collect();
    let mut counts = vec![0usize; edges.len()];
    for x in &est.endpoint_samples {
        let k = ((x[0] / 0.25) as usize).min(edges.len() - 1);
        counts[k] += 1;
    }
    let n = cfg.n_paths as f64;
    let mut chi2 = 0.0;
    for (k, &c) in counts.iter().enumerate() {
        let hi = if k + 1 < edges.len() { edges[k + 1] } else { 12.0 };
        let mass = integrate(
            |l| absorbing_density(&sys, &[1.0], &[l], 1.0).unwrap().value,
            edges[k],
            hi,
            1e-12,
        )
        .value;
        let expected = n * mass;
        chi2 += (c as f64 - expected).powi(2) / expected;
    }
    // Paths killed before the horizon form the last cell.
    let killed = cfg.n_paths - est.endpoint_samples.len();
    let expected = n * (1.0 - quadrature_survival(&sys, &[1.0], 1.0).unwrap());
    chi2 += (killed as f64 - expected).powi(2) / expected;
    let p = 1.0 - ChiSquared::new(counts.len() as f64).unwrap().cdf(chi2);
    assert!(p > 1e-3, "chi2 = {chi2}, p = {p}");
}

#[test]
fn conditioned_endpoints_follow_conditioned_density() {
    let sys = rs(Family::B, 1);
    let cfg = SimConfig::new(sys.clone(), vec![1.0], 1.0, 1e-3, 5000, 5);
    let ends: Vec<f64> = simulate_conditioned(&cfg, &DriftSpec::conditioned(&sys))
        .unwrap()
        .endpoints()
        .into_iter()
        .map(|x| x[0])
        .collect();
    let cdf = |x: f64| {
        integrate(
            |l| conditioned_density(&sys, &[1.0], &[l], 1.0).unwrap().value,
            0.0,
            x,
            1e-10,
        )
        .value
    };
    let ks = ks_one_sample(&ends, cdf).unwrap();
    assert!(ks.p_value > 1e-3, "{ks:?}");
}

#[test]
fn h_transform_matches_quadrature() {
    for (f, n, eta, t) in [
        (Family::A, 3, vec![2.0, 1.0, 0.0], 4.0),
        (Family::B, 2, vec![3.0, 1.0], 9.0),
        (Family::D, 2, vec![2.0, 0.5], 4.0),
    ] {
        let sys = rs(f, n);
        let cfg = SimConfig::new(sys.clone(), eta.clone(), t, 0.01, 4000, 6);
        let (est, stats) = h_transform_survival(&cfg, &[t / 4.0, t]).unwrap();
        assert!(stats.steps > 0);
        for e in est {
            let q = quadrature_survival(&sys, &eta, e.t).unwrap();
            assert!(
                (e.p_hat - q).abs() < 4.0 * e.std_err + 0.02 * q,
                "{f:?} t={} {} vs {q}",
                e.t,
                e.p_hat
            );
        }
    }
}

#[test]
fn same_seed_same_paths() {
    let sys = rs(Family::A, 3);
    let cfg = SimConfig::new(sys, vec![2.0, 1.0, 0.0], 1.0, 0.01, 3000, 99);
    assert_eq!(simulate_absorbed(&cfg).unwrap(), simulate_absorbed(&cfg).unwrap());
    let mut other = cfg.clone();
    other.seed = 100;
    assert_ne!(
        simulate_absorbed(&cfg).unwrap().endpoint_samples,
        simulate_absorbed(&other).unwrap().endpoint_samples
    );
}
