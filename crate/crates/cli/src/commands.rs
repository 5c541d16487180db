use serde::Serialize;

use weyl_core::asymptotics::{bessel_dimension, reference_point, survival_asymptote};
use weyl_core::density::{density as evaluate, Boundary, DensityRequest, Method};
use weyl_core::montecarlo::{
    absorbed_outcomes, h_transform_survival, simulate_absorbed, simulate_conditioned, DriftSpec, SimConfig, StepStats,
};
use weyl_core::oracle::harmonic::{check_harmonic_continuous, check_harmonic_discrete, integer_grid};
use weyl_core::oracle::lattice::{lattice_walk_dp, lattice_walk_reflection, StepSet};
use weyl_core::oracle::quadrature::{conditioned_mass, quadrature_survival, reflecting_mass, MAX_RANK};
use weyl_core::oracle::{ContinuousReport, DiscreteReport};
use weyl_core::randmat::{ensemble_eigen_samples, Algebra};
use weyl_core::stats::radial_compare;
use weyl_core::{Family, RootSystem};

use crate::error::CliError;
use crate::output::{csv_float, csv_table, emit, to_json, Output, RunManifest};
use crate::{
    AsymptoteArgs, BoundaryArg, ConditionedArgs, DensityArgs, Estimator, Format, MethodArg, OracleArgs, OutArgs,
    RmtArgs, SimulateArgs, Suite, SurvivalArgs, SystemArgs,
};

type Result<T> = std::result::Result<T, CliError>;

fn system(sys: &SystemArgs) -> Result<RootSystem> {
    Ok(RootSystem::new(sys.family, sys.n)?)
}

/// Checks the length and maps the point to its chamber representative,
/// warning if that changed it.
fn point(rs: &RootSystem, name: &str, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != rs.rank() {
        return Err(weyl_core::Error::DimensionMismatch {
            expected: rs.rank(),
            got: x.len(),
        }
        .into());
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(CliError::Usage(format!("--{name} must be finite")));
    }
    let c = rs.canonicalize(x)?;
    if c != x {
        log::warn!("--{name} {x:?} is not in the chamber; using its representative {c:?}");
    }
    Ok(c)
}

fn finish<P: Serialize>(
    command: &str,
    args: &P,
    seed: Option<u64>,
    out: &OutArgs,
    default: Format,
    build: impl FnOnce(Format) -> Output,
) -> Result<()> {
    let output = build(out.format.unwrap_or(default));
    emit(&output, out.out.as_deref(), &RunManifest::new(command, args, seed))
}

#[derive(Serialize)]
struct Inputs<'a> {
    family: Family,
    n: usize,
    eta: &'a [f64],
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda: Option<&'a [f64]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    t: Option<f64>,
}

#[derive(Serialize)]
struct DensityReport<'a> {
    value: f64,
    ln_abs: f64,
    clamped: bool,
    method: MethodArg,
    boundary: BoundaryArg,
    inputs: Inputs<'a>,
}

pub fn density(a: &DensityArgs) -> Result<()> {
    let rs = system(&a.sys)?;
    let eta = point(&rs, "eta", &a.eta)?;
    let lam = point(&rs, "lambda", &a.lambda)?;
    let req = DensityRequest::new(rs, eta.clone(), lam.clone(), a.t)
        .boundary(match a.boundary {
            BoundaryArg::Absorbing => Boundary::Absorbing,
            BoundaryArg::Reflecting => Boundary::Reflecting,
        })
        .method(match a.method {
            MethodArg::Sum => Method::GroupSum,
            MethodArg::Det => Method::Determinant,
        });
    let d = evaluate(&req)?;
    let report = DensityReport {
        value: d.value,
        ln_abs: d.ln_abs,
        clamped: d.clamped,
        method: a.method,
        boundary: a.boundary,
        inputs: Inputs {
            family: a.sys.family,
            n: a.sys.n,
            eta: &eta,
            lambda: Some(&lam),
            t: Some(a.t),
        },
    };
    finish("density", a, None, &a.out, Format::Json, |f| match f {
        Format::Json => Output::json(&report),
        Format::Csv => Output {
            body: format!(
                "value,ln_abs,clamped\n{},{},{}\n",
                csv_float(d.value),
                csv_float(d.ln_abs),
                d.clamped
            ),
            summary: None,
        },
    })
}

#[derive(Serialize)]
struct SurvivalReport<'a> {
    estimator: Estimator,
    t: f64,
    p_hat: f64,
    std_err: Option<f64>,
    n_paths: Option<usize>,
    inputs: Inputs<'a>,
}

fn require_seed(seed: Option<u64>) -> Result<u64> {
    seed.ok_or_else(|| CliError::Usage("--seed is required for randomized estimates".into()))
}

pub fn survival(a: &SurvivalArgs) -> Result<()> {
    let rs = system(&a.sys)?;
    let eta = point(&rs, "eta", &a.eta)?;
    let (p_hat, std_err, n_paths) = match a.estimator {
        Estimator::Quadrature => (quadrature_survival(&rs, &eta, a.t)?, None, None),
        Estimator::Direct | Estimator::HTransform => {
            let seed = require_seed(a.seed)?;
            let paths = a
                .paths
                .ok_or_else(|| CliError::Usage("--paths is required for simulated estimates".into()))?;
            let mut cfg = SimConfig::new(rs.clone(), eta.clone(), a.t, a.dt, paths, seed);
            cfg.adaptive_kappa = a.kappa;
            let est = if a.estimator == Estimator::Direct {
                simulate_absorbed(&cfg)?
            } else {
                h_transform_survival(&cfg, &[a.t])?.0.remove(0)
            };
            (est.p_hat, Some(est.std_err), Some(est.n_paths))
        }
    };
    let report = SurvivalReport {
        estimator: a.estimator,
        t: a.t,
        p_hat,
        std_err,
        n_paths,
        inputs: Inputs {
            family: a.sys.family,
            n: a.sys.n,
            eta: &eta,
            lambda: None,
            t: None,
        },
    };
    finish("survival", a, a.seed, &a.out, Format::Json, |f| match f {
        Format::Json => Output::json(&report),
        Format::Csv => Output {
            body: format!(
                "t,p_hat,std_err\n{},{},{}\n",
                csv_float(a.t),
                csv_float(p_hat),
                std_err.map(csv_float).unwrap_or_default()
            ),
            summary: None,
        },
    })
}

#[derive(Serialize)]
struct AsymptoteReport<'a> {
    coefficient: f64,
    exponent: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    survival: Option<f64>,
    inputs: Inputs<'a>,
}

pub fn asymptote(a: &AsymptoteArgs) -> Result<()> {
    let rs = system(&a.sys)?;
    let eta = point(&rs, "eta", &a.eta)?;
    let law = survival_asymptote(a.sys.family, &eta)?;
    if let Some(t) = a.t {
        if !(t > 0.0 && t.is_finite()) {
            return Err(weyl_core::Error::NonPositiveTime(t).into());
        }
    }
    let report = AsymptoteReport {
        coefficient: law.coefficient,
        exponent: law.exponent,
        survival: a.t.map(|t| law.survival(t)),
        inputs: Inputs {
            family: a.sys.family,
            n: a.sys.n,
            eta: &eta,
            lambda: None,
            t: a.t,
        },
    };
    finish("asymptote", a, None, &a.out, Format::Json, |f| match f {
        Format::Json => Output::json(&report),
        Format::Csv => Output {
            body: format!(
                "coefficient,exponent\n{},{}\n",
                csv_float(law.coefficient),
                csv_float(law.exponent)
            ),
            summary: None,
        },
    })
}

#[derive(Serialize)]
struct SimulationSummary {
    t: f64,
    n_paths: usize,
    survivors: usize,
    p_hat: f64,
    std_err: f64,
}

pub fn simulate(a: &SimulateArgs) -> Result<()> {
    let rs = system(&a.sys)?;
    let eta = point(&rs, "eta", &a.eta)?;
    let mut cfg = SimConfig::new(rs, eta, a.t, a.dt, a.paths, a.seed);
    cfg.adaptive_kappa = a.kappa;
    cfg.bridge_correction = !a.no_bridge;
    let outcomes = absorbed_outcomes(&cfg)?;
    let survivors = outcomes.iter().filter(|o| o.survived).count();
    let p = survivors as f64 / a.paths as f64;
    let summary = SimulationSummary {
        t: a.t,
        n_paths: a.paths,
        survivors,
        p_hat: p,
        std_err: (p * (1.0 - p) / a.paths as f64).sqrt(),
    };
    finish("simulate", a, Some(a.seed), &a.out, Format::Csv, |f| match f {
        Format::Csv => Output {
            body: csv_table(
                &["index", "survived"],
                a.sys.n,
                outcomes
                    .iter()
                    .map(|o| (vec![o.index.to_string(), (o.survived as u8).to_string()], &o.x[..])),
            ),
            summary: Some(to_json(&summary)),
        },
        Format::Json => Output::json(&serde_json::json!({ "summary": summary, "paths": outcomes })),
    })
}

#[derive(Serialize)]
struct RadialCheck {
    dof: usize,
    statistic: f64,
    p_value: f64,
}

fn radial_check(samples: &[Vec<f64>], t: f64, dof: usize) -> Option<RadialCheck> {
    radial_compare(samples, t, dof).ok().map(|ks| RadialCheck {
        dof,
        statistic: ks.statistic,
        p_value: ks.p_value,
    })
}

#[derive(Serialize)]
struct ConditionedSummary {
    t: f64,
    n_paths: usize,
    invalid: usize,
    stats: StepStats,
    /// Endpoint radius against the chi law reached from the origin.
    radial: Option<RadialCheck>,
}

pub fn conditioned(a: &ConditionedArgs) -> Result<()> {
    let rs = system(&a.sys)?;
    let eta = point(&rs, "eta", &a.eta)?;
    let mut cfg = SimConfig::new(rs.clone(), eta, a.t, a.dt, a.paths, a.seed);
    cfg.theta = a.theta;
    let run = simulate_conditioned(&cfg, &DriftSpec::conditioned(&rs))?;
    let dof = bessel_dimension(a.sys.family, a.sys.n)?;
    let summary = ConditionedSummary {
        t: a.t,
        n_paths: a.paths,
        invalid: run.invalid,
        stats: run.stats,
        radial: radial_check(&run.endpoints(), a.t, dof),
    };
    finish("conditioned", a, Some(a.seed), &a.out, Format::Csv, |f| match f {
        Format::Csv => Output {
            body: csv_table(
                &["index", "valid"],
                a.sys.n,
                run.outcomes
                    .iter()
                    .map(|o| (vec![o.index.to_string(), (o.survived as u8).to_string()], &o.x[..])),
            ),
            summary: Some(to_json(&summary)),
        },
        Format::Json => Output::json(&serde_json::json!({ "summary": summary, "paths": run.outcomes })),
    })
}

#[derive(Serialize)]
struct RmtSummary {
    algebra: Algebra,
    size: usize,
    t: f64,
    samples: usize,
    radial: Option<RadialCheck>,
}

pub fn rmt(a: &RmtArgs) -> Result<()> {
    system(&a.sys)?;
    if !(a.t > 0.0 && a.t.is_finite()) {
        return Err(weyl_core::Error::NonPositiveTime(a.t).into());
    }
    let (algebra, size) = Algebra::for_family(a.sys.family, a.sys.n);
    let samples = ensemble_eigen_samples(algebra, size, a.t, a.paths, a.seed)?;
    let summary = RmtSummary {
        algebra,
        size,
        t: a.t,
        samples: samples.len(),
        radial: radial_check(&samples, a.t, bessel_dimension(a.sys.family, a.sys.n)?),
    };
    finish("rmt", a, Some(a.seed), &a.out, Format::Csv, |f| match f {
        Format::Csv => Output {
            body: csv_table(
                &["index"],
                a.sys.n,
                samples.iter().enumerate().map(|(i, x)| (vec![i.to_string()], &x[..])),
            ),
            summary: Some(to_json(&summary)),
        },
        Format::Json => Output::json(&serde_json::json!({ "summary": summary, "samples": samples })),
    })
}

// ---------------------------------------------------------------------------
// Oracle suites

#[derive(Serialize)]
struct HarmonicSuite {
    continuous: ContinuousReport,
    discrete: Vec<DiscreteReport>,
    pass: bool,
}

#[derive(Serialize)]
struct LatticeSuite {
    max_steps: usize,
    board: Vec<Vec<i64>>,
    checked: usize,
    mismatches: Vec<String>,
    pass: bool,
}

#[derive(Serialize)]
struct QuadratureSuite {
    eta: Vec<f64>,
    t: f64,
    survival: f64,
    conditioned_mass: f64,
    reflecting_mass: f64,
    pass: bool,
}

#[derive(Serialize)]
struct OracleReport {
    family: Family,
    n: usize,
    suite: Suite,
    #[serde(skip_serializing_if = "Option::is_none")]
    harmonic: Option<HarmonicSuite>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lattice: Option<LatticeSuite>,
    #[serde(skip_serializing_if = "Option::is_none")]
    quadrature: Option<QuadratureSuite>,
    pass: bool,
}

const MASS_TOLERANCE: f64 = 1e-6;
const FD_TOLERANCE: f64 = 1e-5;
const GRID_POINTS: f64 = 20_000.0;
const BOARD_POINTS: usize = 6;

fn harmonic_suite(rs: &RootSystem) -> Result<HarmonicSuite> {
    let n = rs.rank();
    let base = reference_point(rs.family(), n);
    let points: Vec<Vec<f64>> = [(1.0, 0.0), (1.3, 0.1), (2.1, 0.05)]
        .iter()
        .map(|&(s, d)| {
            base.iter()
                .enumerate()
                .map(|(i, b)| s * b + d * (n - i) as f64 / n as f64)
                .collect()
        })
        .collect();
    let continuous = check_harmonic_continuous(rs, &points, FD_TOLERANCE)?;
    let r = (((GRID_POINTS.powf(1.0 / n as f64) - 1.0) / 2.0).floor() as i64).max(1);
    let grid = integer_grid(n, r);
    let mut sets = vec![StepSet::unit(n)];
    if n >= 2 {
        sets.push(StepSet::unit_and_diagonal(n));
    }
    let discrete = sets
        .iter()
        .map(|s| check_harmonic_discrete(rs, s, &grid))
        .collect::<weyl_core::Result<Vec<_>>>()?;
    let pass = continuous.pass && discrete.iter().all(|d| d.pass);
    Ok(HarmonicSuite {
        continuous,
        discrete,
        pass,
    })
}

/// Smallest integer points of the open chamber.
fn board(rs: &RootSystem) -> Vec<Vec<i64>> {
    let n = rs.rank() as i64;
    let r = n + 1;
    let mut pts: Vec<Vec<i64>> = integer_grid(rs.rank(), r)
        .into_iter()
        .filter(|p| rs.simple_roots().iter().all(|a| a.eval_i64(p) > 0))
        .collect();
    pts.sort_by_key(|p| (p.iter().map(|v| v * v).sum::<i64>(), p.clone()));
    pts.truncate(BOARD_POINTS);
    pts
}

fn lattice_suite(rs: &RootSystem, max_steps: usize) -> Result<LatticeSuite> {
    let steps = StepSet::unit(rs.rank());
    let board = board(rs);
    let mut checked = 0;
    let mut mismatches = Vec::new();
    for a in &board {
        for b in &board {
            for k in 0..=max_steps {
                let dp = lattice_walk_dp(rs, a, b, k, &steps)?;
                let refl = lattice_walk_reflection(rs, a, b, k, &steps)?;
                if dp != refl {
                    mismatches.push(format!("{a:?} -> {b:?} in {k}: {dp} vs {refl}"));
                }
                checked += 1;
            }
        }
    }
    Ok(LatticeSuite {
        max_steps,
        board,
        checked,
        pass: mismatches.is_empty(),
        mismatches,
    })
}

fn quadrature_suite(rs: &RootSystem, eta: Vec<f64>, t: f64) -> Result<QuadratureSuite> {
    let survival = quadrature_survival(rs, &eta, t)?;
    let cm = conditioned_mass(rs, &eta, t)?;
    let rm = reflecting_mass(rs, &eta, t)?;
    let pass =
        (0.0..=1.0).contains(&survival) && (cm - 1.0).abs() <= MASS_TOLERANCE && (rm - 1.0).abs() <= MASS_TOLERANCE;
    Ok(QuadratureSuite {
        eta,
        t,
        survival,
        conditioned_mass: cm,
        reflecting_mass: rm,
        pass,
    })
}

pub fn oracle(a: &OracleArgs) -> Result<()> {
    if a.out.format == Some(Format::Csv) {
        return Err(CliError::Usage("oracle reports are JSON only".into()));
    }
    let rs = system(&a.sys)?;
    let n = a.sys.n;
    let want = |s: Suite| a.suite == s || a.suite == Suite::All;
    let harmonic = want(Suite::Harmonic).then(|| harmonic_suite(&rs)).transpose()?;
    let lattice = want(Suite::Lattice).then(|| lattice_suite(&rs, a.steps)).transpose()?;
    let quadrature = if want(Suite::Quadrature) && (a.suite == Suite::Quadrature || n <= MAX_RANK) {
        let eta = match &a.eta {
            Some(e) => point(&rs, "eta", e)?,
            None => reference_point(a.sys.family, n),
        };
        Some(quadrature_suite(&rs, eta, a.t)?)
    } else {
        if want(Suite::Quadrature) {
            log::warn!("quadrature suite skipped above rank {MAX_RANK}");
        }
        None
    };
    let pass = harmonic.as_ref().is_none_or(|h| h.pass)
        && lattice.as_ref().is_none_or(|l| l.pass)
        && quadrature.as_ref().is_none_or(|q| q.pass);
    let report = OracleReport {
        family: a.sys.family,
        n,
        suite: a.suite,
        harmonic,
        lattice,
        quadrature,
        pass,
    };
    finish("oracle", a, None, &a.out, Format::Json, |_| Output::json(&report))?;
    if pass {
        Ok(())
    } else {
        Err(CliError::CheckFailed(format!(
            "oracle suite {:?} for {}{n}",
            a.suite, a.sys.family
        )))
    }
}
