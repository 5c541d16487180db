//! Nested adaptive quadrature over a chamber of rank at most 3.

use crate::density::{absorbing_density, conditioned_density, permanent_density};
use crate::error::{Error, Result};
use crate::quad::{self, QuadResult};
use crate::rootsys::{Family, RootSystem};

pub const MAX_RANK: usize = 3;
pub const DEFAULT_TOLERANCE: f64 = 1e-8;
/// Integrand evaluations allowed for one chamber integral.
pub const MAX_CHAMBER_EVALUATIONS: usize = 50_000_000;

/// Truncation radius `12 sqrt t + |eta|`.
pub fn truncation_radius(eta: &[f64], t: f64) -> f64 {
    12.0 * t.sqrt() + eta.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Integrates over `[a, b]` piecewise between the breakpoints that fall
/// inside, so that narrow peaks are not missed by the first panel.
fn integrate_broken<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, breaks: &[f64], tol: f64) -> QuadResult {
    let mut pts = vec![a];
    pts.extend(breaks.iter().copied().filter(|&x| x > a && x < b));
    pts.push(b);
    let pieces = (pts.len() - 1) as f64;
    let mut out = QuadResult {
        value: 0.0,
        error: 0.0,
        evaluations: 0,
        converged: true,
    };
    for w in pts.windows(2) {
        let r = quad::integrate(&mut f, w[0], w[1], tol / pieces);
        out.value += r.value;
        out.error += r.error;
        out.evaluations += r.evaluations;
        out.converged &= r.converged;
    }
    out
}

/// `(lower, upper)` for coordinate `i` given the previous coordinate.
fn limits(family: Family, n: usize, i: usize, prev: Option<f64>, r: f64) -> (f64, f64) {
    match (family, prev) {
        (Family::A, None) => (-r, r),
        (Family::A, Some(p)) => (-r, p),
        (Family::B, None) => (0.0, r),
        (Family::B, Some(p)) => (0.0, p),
        (Family::D, None) => (0.0, r),
        (Family::D, Some(p)) if i == n - 1 => (-p, p),
        (Family::D, Some(p)) => (0.0, p),
    }
}

/// Integrates `f` over the chamber intersected with the ball-bounding box of
/// radius `radius`. `breaks` are coordinates where `f` has structure.
pub fn chamber_integral<F: Fn(&[f64]) -> f64>(
    rs: &RootSystem,
    f: F,
    radius: f64,
    breaks: &[f64],
    tol: f64,
) -> Result<QuadResult> {
    let n = rs.rank();
    if n > MAX_RANK {
        return Err(Error::CapExceeded {
            what: "quadrature rank (use Monte Carlo)",
            value: n,
            cap: MAX_RANK,
        });
    }
    let mut x = vec![0.0; n];
    let mut evals = 0usize;
    let value = nest(rs.family(), n, 0, None, radius, breaks, tol, &f, &mut x, &mut evals);
    if evals > MAX_CHAMBER_EVALUATIONS {
        return Err(Error::Numeric(format!(
            "chamber quadrature exceeded {MAX_CHAMBER_EVALUATIONS} evaluations"
        )));
    }
    Ok(QuadResult {
        value,
        error: f64::NAN,
        evaluations: evals,
        converged: true,
    })
}

#[allow(clippy::too_many_arguments)]
fn nest<F: Fn(&[f64]) -> f64>(
    family: Family,
    n: usize,
    i: usize,
    prev: Option<f64>,
    r: f64,
    breaks: &[f64],
    tol: f64,
    f: &F,
    x: &mut Vec<f64>,
    evals: &mut usize,
) -> f64 {
    let (a, b) = limits(family, n, i, prev, r);
    if b <= a {
        return 0.0;
    }
    let inner_tol = tol / (2.0 * r);
    let res = integrate_broken(
        |v| {
            x[i] = v;
            if *evals > MAX_CHAMBER_EVALUATIONS {
                0.0
            } else if i + 1 == n {
                *evals += 1;
                f(x)
            } else {
                nest(family, n, i + 1, Some(v), r, breaks, inner_tol, f, x, evals)
            }
        },
        a,
        b,
        breaks,
        tol,
    );
    res.value
}

fn gaussian_breaks(eta: &[f64], t: f64) -> Vec<f64> {
    let s = t.sqrt();
    let mut b: Vec<f64> = eta
        .iter()
        .flat_map(|&e| (-3..=3).flat_map(move |k| [e + 2.0 * k as f64 * s, -e + 2.0 * k as f64 * s]))
        .collect();
    b.sort_by(f64::total_cmp);
    b.dedup();
    b
}

fn check(rs: &RootSystem, eta: &[f64], t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::NonPositiveTime(t));
    }
    if !rs.contains(eta, false)? {
        return Err(Error::OutsideChamber(format!("eta = {eta:?}")));
    }
    Ok(())
}

/// Probability that Brownian motion from `eta` stays inside the chamber up
/// to time `t`: the absorbing density integrated over the chamber.
pub fn quadrature_survival(rs: &RootSystem, eta: &[f64], t: f64) -> Result<f64> {
    check(rs, eta, t)?;
    let r = truncation_radius(eta, t);
    let breaks = gaussian_breaks(eta, t);
    let res = chamber_integral(
        rs,
        |lam| absorbing_density(rs, eta, lam, t).map(|d| d.value).unwrap_or(f64::NAN),
        r,
        &breaks,
        DEFAULT_TOLERANCE,
    )?;
    finite(res.value)
}

/// Total mass of the conditioned density; 1 when `h` is the right
/// normalizer.
pub fn conditioned_mass(rs: &RootSystem, eta: &[f64], t: f64) -> Result<f64> {
    check(rs, eta, t)?;
    if !rs.contains(eta, true)? {
        return Err(Error::NotInterior(format!("eta = {eta:?}")));
    }
    // h grows polynomially, so widen the box a little.
    let r = truncation_radius(eta, t) + 4.0 * t.sqrt();
    let breaks = gaussian_breaks(eta, t);
    let res = chamber_integral(
        rs,
        |lam| {
            conditioned_density(rs, eta, lam, t)
                .map(|d| d.value)
                .unwrap_or(f64::NAN)
        },
        r,
        &breaks,
        DEFAULT_TOLERANCE,
    )?;
    finite(res.value)
}

/// Total mass of the reflecting density (1 by conservation).
pub fn reflecting_mass(rs: &RootSystem, eta: &[f64], t: f64) -> Result<f64> {
    check(rs, eta, t)?;
    let r = truncation_radius(eta, t);
    let breaks = gaussian_breaks(eta, t);
    let res = chamber_integral(
        rs,
        |lam| {
            permanent_density(rs.family(), eta, lam, t)
                .map(|d| d.value)
                .unwrap_or(f64::NAN)
        },
        r,
        &breaks,
        DEFAULT_TOLERANCE,
    )?;
    finite(res.value)
}

fn finite(v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Numeric("quadrature produced a non-finite value".into()))
    }
}
