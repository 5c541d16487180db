//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use weyl_core::asymptotics::survival_asymptote;
use weyl_core::density::{density, Boundary, DensityRequest, Method};
use weyl_core::montecarlo::{
    absorbed_outcomes, h_transform_survival, log_log_slope, simulate_absorbed, simulate_conditioned, DriftSpec,
    SimConfig, SurvivalEstimate,
};
use weyl_core::oracle::harmonic::{check_harmonic_continuous, check_harmonic_discrete, integer_grid};
use weyl_core::oracle::lattice::{lattice_walk_dp, lattice_walk_reflection, StepSet};
use weyl_core::oracle::quadrature::{conditioned_mass, quadrature_survival};
use weyl_core::randmat::{ensemble_eigen_samples, Algebra};
use weyl_core::stats::{ks_two_sample, radial_compare, radii};
use weyl_core::{Family, RootSystem};

type Outcome = (bool, String);

fn rs(f: Family, n: usize) -> RootSystem {
    RootSystem::new(f, n).unwrap()
}

/// Integer points of the open chamber with coordinates in `[-r, r]`.
fn board(rs: &RootSystem, r: i64) -> Vec<Vec<i64>> {
    integer_grid(rs.rank(), r)
        .into_iter()
        .filter(|p| rs.simple_roots().iter().all(|a| a.eval_i64(p) > 0))
        .collect()
}

fn lattice_equivalence() -> Outcome {
    let cases = [
        (Family::A, 2, 3),
        (Family::A, 3, 2),
        (Family::B, 1, 4),
        (Family::B, 2, 3),
        (Family::D, 2, 3),
    ];
    let mut checked = 0;
    for (f, n, r) in cases {
        let sys = rs(f, n);
        let steps = StepSet::unit(n);
        let pts = board(&sys, r);
        for a in &pts {
            for b in &pts {
                for k in 0..=8 {
                    let dp = lattice_walk_dp(&sys, a, b, k, &steps).unwrap();
                    let refl = lattice_walk_reflection(&sys, a, b, k, &steps).unwrap();
                    if dp != refl {
                        return (
                            false,
                            format!("{f:?}{n} {a:?}->{b:?} k={k}: dp {dp} vs reflection {refl}"),
                        );
                    }
                    checked += 1;
                }
            }
        }
    }
    (true, format!("{checked} counts agree"))
}

/// Chamber point with consecutive simple-root values at least `gap`.
fn random_point(rng: &mut ChaCha8Rng, f: Family, n: usize, gap: f64) -> Vec<f64> {
    let mut x: Vec<f64> = Vec::with_capacity(n);
    let mut cur = match f {
        Family::A => rng.gen_range(-1.0..1.0),
        Family::B => rng.gen_range(gap..gap + 1.0),
        Family::D => rng.gen_range(-0.5..0.5),
    };
    x.push(cur);
    for i in 1..n {
        if f == Family::D && i == 1 {
            cur = cur.abs();
        }
        cur += rng.gen_range(gap..gap + 1.0);
        x.push(cur);
    }
    x.reverse();
    x
}

fn formula_consistency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    let mut where_ = String::new();
    for f in [Family::A, Family::B, Family::D] {
        let ranks: Vec<usize> = match f {
            Family::A => (2..=4).collect(),
            Family::B => (1..=4).collect(),
            Family::D => (2..=4).collect(),
        };
        for i in 0..50 {
            let n = ranks[i % ranks.len()];
            let sys = rs(f, n);
            let eta = random_point(&mut rng, f, n, 0.5);
            let lam = random_point(&mut rng, f, n, 0.5);
            let t = rng.gen_range(0.2..1.0);
            for b in [Boundary::Absorbing, Boundary::Reflecting] {
                let req = DensityRequest::new(sys.clone(), eta.clone(), lam.clone(), t).boundary(b);
                let fast = density(&req.clone().method(Method::Determinant)).unwrap().value;
                let slow = density(&req.method(Method::GroupSum)).unwrap().value;
                let rel = (fast - slow).abs() / slow.abs();
                if rel.is_nan() || rel > worst {
                    worst = rel;
                    where_ = format!("{f:?}{n} {b:?} eta={eta:.3?} lam={lam:.3?} t={t:.3}");
                }
            }
        }
    }
    (worst <= 1e-10, format!("worst relative error {worst:.2e} at {where_}"))
}

fn harmonicity() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let ranks = [(Family::A, 1..=5), (Family::B, 1..=4), (Family::D, 2..=4)];
    for (f, range) in ranks {
        for n in range {
            let sys = rs(f, n);
            let pts: Vec<Vec<f64>> = (0..5).map(|_| random_point(&mut rng, f, n, 0.5)).collect();
            let r = check_harmonic_continuous(&sys, &pts, 1e-5).unwrap();
            if r.symbolic_zero != Some(true) || !r.pass {
                ok = false;
                notes.push(format!("{f:?}{n} symbolic {:?}", r.symbolic_zero));
            }
        }
    }
    let discrete = [
        (Family::A, 2, StepSet::unit(2), 6),
        (Family::A, 3, StepSet::unit(3), 4),
        (Family::B, 2, StepSet::unit(2), 6),
        (Family::B, 2, StepSet::unit_and_diagonal(2), 6),
        (Family::B, 3, StepSet::unit_and_diagonal(3), 3),
        (Family::D, 2, StepSet::unit_and_diagonal(2), 6),
        (Family::D, 3, StepSet::unit(3), 3),
    ];
    let mut points = 0;
    for (f, n, steps, r) in discrete {
        let rep = check_harmonic_discrete(&rs(f, n), &steps, &integer_grid(n, r)).unwrap();
        points += rep.points;
        if !rep.pass {
            ok = false;
            notes.push(format!("{f:?}{n} discrete failures {:?}", rep.failures));
        }
    }
    if ok {
        notes.push(format!(
            "symbolic zero for 12 systems, exact discrete zero at {points} points"
        ));
    }
    (ok, notes.join("; "))
}

fn one_wall() -> Outcome {
    let cases = [
        (Family::B, 1, vec![1.0], 0.682_689_492_137_086),
        (Family::A, 2, vec![1.0, 0.0], 0.520_499_877_813_047),
    ];
    let mut ok = true;
    let mut notes = Vec::new();
    for (f, n, eta, exact) in cases {
        let sys = rs(f, n);
        let q = quadrature_survival(&sys, &eta, 1.0).unwrap();
        let cfg = SimConfig::new(sys, eta, 1.0, 1e-2, 1_000_000, 4);
        let mc = simulate_absorbed(&cfg).unwrap();
        let z = (mc.p_hat - exact) / mc.std_err;
        let pass = (q - exact).abs() < 1e-6 && z.abs() < 3.0;
        ok &= pass;
        notes.push(format!(
            "{f:?}{n} quadrature {q:.8} MC {:.5}±{:.5} (z={z:+.2})",
            mc.p_hat, mc.std_err
        ));
    }
    (ok, notes.join("; "))
}

const SLOPE_DT: f64 = 2.0;
const SLOPE_PATHS: usize = 20_000;

fn slope_grid() -> Vec<f64> {
    (0..=8).map(|k| 100.0 * 10f64.powf(k as f64 / 4.0)).collect()
}

fn h_survival(f: Family, n: usize, eta: &[f64]) -> Vec<SurvivalEstimate> {
    let cfg = SimConfig::new(rs(f, n), eta.to_vec(), 1e4, SLOPE_DT, SLOPE_PATHS, 5);
    h_transform_survival(&cfg, &slope_grid()).unwrap().0
}

struct SurvivalRuns {
    a_210: Vec<SurvivalEstimate>,
    a_420: Vec<SurvivalEstimate>,
    b_31: Vec<SurvivalEstimate>,
    b_51: Vec<SurvivalEstimate>,
}

fn survival_runs() -> SurvivalRuns {
    SurvivalRuns {
        a_210: h_survival(Family::A, 3, &[2.0, 1.0, 0.0]),
        a_420: h_survival(Family::A, 3, &[4.0, 2.0, 0.0]),
        b_31: h_survival(Family::B, 2, &[3.0, 1.0]),
        b_51: h_survival(Family::B, 2, &[5.0, 1.0]),
    }
}

fn slope(est: &[SurvivalEstimate]) -> f64 {
    log_log_slope(&est.iter().map(|e| (e.t, e.p_hat)).collect::<Vec<_>>()).unwrap()
}

fn exponents(runs: &SurvivalRuns) -> Outcome {
    let a = slope(&runs.a_210);
    let b = slope(&runs.b_31);
    let ok = (a + 1.5).abs() <= 0.1 && (b + 2.0).abs() <= 0.15;
    let cross = |est: &SurvivalEstimate, f: Family, n: usize, eta: &[f64]| {
        let q = quadrature_survival(&rs(f, n), eta, est.t).unwrap();
        format!(
            "{f:?}{n} t={}: MC {:.5e}±{:.1e} vs quadrature {q:.5e}",
            est.t, est.p_hat, est.std_err
        )
    };
    (
        ok,
        format!(
            "A3 slope {a:.4}, B2 slope {b:.4}; {}; {}",
            cross(&runs.a_210[0], Family::A, 3, &[2.0, 1.0, 0.0]),
            cross(&runs.b_31[0], Family::B, 2, &[3.0, 1.0])
        ),
    )
}

fn ratios(runs: &SurvivalRuns) -> Outcome {
    let last = |v: &[SurvivalEstimate]| v.last().unwrap().p_hat;
    let ra = last(&runs.a_420) / last(&runs.a_210);
    let rb = last(&runs.b_31) / last(&runs.b_51);
    let ok = (ra / 8.0 - 1.0).abs() <= 0.1 && (rb / 0.2 - 1.0).abs() <= 0.1;
    let asym = survival_asymptote(Family::A, &[2.0, 1.0, 0.0]).unwrap().survival(1e4);
    (
        ok,
        format!(
            "A3 (4,2,0)/(2,1,0) = {ra:.4} (target 8), B2 (3,1)/(5,1) = {rb:.4} (target 0.2); A3 (2,1,0) at 1e4: {:.4e} vs law {asym:.4e}",
            last(&runs.a_210)
        ),
    )
}

fn ks_line(label: &str, ks: &weyl_core::KsResult) -> String {
    format!("{label} D={:.4} p={:.3} n={}", ks.statistic, ks.p_value, ks.n_eff)
}

fn radial_laws() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    let absorbed = [
        (Family::A, 2, vec![1.0, 0.0], 0.5, 40_000usize, None, 3usize),
        (Family::A, 3, vec![2.0, 1.0, 0.0], 1.0, 4_000_000, Some(1.0), 6),
        (Family::B, 2, vec![3.0, 1.0], 1.0, 6_000_000, Some(1.0), 6),
    ];
    for (f, n, eta, dt, paths, kappa, dof) in absorbed {
        let t = 100.0;
        let mut cfg = SimConfig::new(rs(f, n), eta, t, dt, paths, 7);
        cfg.adaptive_kappa = kappa;
        let survivors: Vec<Vec<f64>> = absorbed_outcomes(&cfg)
            .unwrap()
            .into_iter()
            .filter(|o| o.survived)
            .map(|o| o.x)
            .collect();
        let ks = radial_compare(&survivors, t, dof).unwrap();
        ok &= ks.p_value > 0.01 && survivors.len() >= 1000;
        notes.push(ks_line(&format!("absorbed {f:?}{n} chi({dof})"), &ks));
    }
    let conditioned = [
        (Family::A, 2, vec![0.01, -0.01], 4usize),
        (Family::A, 3, vec![0.02, 0.0, -0.02], 9),
        (Family::B, 2, vec![0.02, 0.01], 10),
    ];
    for (f, n, eta, dof) in conditioned {
        let sys = rs(f, n);
        let cfg = SimConfig::new(sys.clone(), eta, 1.0, 1e-2, 4000, 8);
        let run = simulate_conditioned(&cfg, &DriftSpec::conditioned(&sys)).unwrap();
        let ks = radial_compare(&run.endpoints(), 1.0, dof).unwrap();
        ok &= ks.p_value > 0.01;
        notes.push(ks_line(&format!("conditioned {f:?}{n} chi({dof})"), &ks));
    }
    (ok, notes.join("; "))
}

fn random_matrices() -> Outcome {
    let su3 = ensemble_eigen_samples(Algebra::Su, 3, 1.0, 5000, 9).unwrap();
    let ks3 = radial_compare(&su3, 1.0, 9).unwrap();
    let su2 = ensemble_eigen_samples(Algebra::Su, 2, 1.0, 3000, 10).unwrap();
    let sys = rs(Family::A, 2);
    let cfg = SimConfig::new(sys.clone(), vec![0.005, -0.005], 1.0, 1e-2, 3000, 11);
    let sde = simulate_conditioned(&cfg, &DriftSpec::conditioned(&sys))
        .unwrap()
        .endpoints();
    let ks_r = ks_two_sample(&radii(&su2, 1.0), &radii(&sde, 1.0)).unwrap();
    let h = |v: &[Vec<f64>]| v.iter().map(|x| sys.h(x)).collect::<Vec<_>>();
    let ks_h = ks_two_sample(&h(&su2), &h(&sde)).unwrap();
    let ok = ks3.p_value > 0.01 && ks_r.p_value > 0.01 && ks_h.p_value > 0.01;
    (
        ok,
        format!(
            "{}; {}; {}",
            ks_line("su3 radius chi(9)", &ks3),
            ks_line("su2 vs SDE radius", &ks_r),
            ks_line("su2 vs SDE h", &ks_h)
        ),
    )
}

fn normalization() -> Outcome {
    let cases = [
        (Family::A, vec![1.0, -0.5], 1.0),
        (Family::A, vec![0.3, 0.1], 2.0),
        (Family::B, vec![2.0, 1.0], 1.0),
        (Family::B, vec![0.5, 0.2], 0.5),
        (Family::D, vec![1.0, 0.5], 1.0),
        (Family::D, vec![1.5, -0.5], 2.0),
    ];
    let mut worst: f64 = 0.0;
    for (f, eta, t) in cases {
        let m = conditioned_mass(&rs(f, 2), &eta, t).unwrap();
        worst = worst.max((m - 1.0).abs());
    }
    (worst <= 1e-6, format!("max |mass - 1| = {worst:.2e} over 6 cases"))
}

fn leading_constant() -> Outcome {
    let mut worst: f64 = 0.0;
    for eta in [[1.0, 0.0], [2.5, -1.0], [0.3, 0.2]] {
        let law = survival_asymptote(Family::A, &eta).unwrap();
        // erf(d / 2 sqrt t) = d / sqrt(pi t) + O(t^{-3/2}).
        let d: f64 = eta[0] - eta[1];
        let exact = d / std::f64::consts::PI.sqrt();
        let rel = (law.coefficient - exact).abs() / exact;
        worst = worst.max(rel);
        if law.exponent != -0.5 {
            return (false, format!("exponent {}", law.exponent));
        }
    }
    (
        worst <= 1e-6,
        format!("coefficient vs (eta1 - eta2)/sqrt(pi): worst relative {worst:.2e}"),
    )
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |k: usize, f: &dyn Fn() -> Outcome| {
        let start = Instant::now();
        let (ok, msg) = f();
        println!(
            "criterion {k}: {} [{:.1}s] {msg}",
            if ok { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
        if !ok {
            failed += 1;
        }
    };
    report(1, &lattice_equivalence);
    report(2, &formula_consistency);
    report(3, &harmonicity);
    report(4, &one_wall);
    let start = Instant::now();
    let runs = survival_runs();
    println!("survival runs for criteria 5-6: {:.1}s", start.elapsed().as_secs_f64());
    report(5, &|| exponents(&runs));
    report(6, &|| ratios(&runs));
    report(7, &radial_laws);
    report(8, &random_matrices);
    report(9, &normalization);
    report(10, &leading_constant);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
