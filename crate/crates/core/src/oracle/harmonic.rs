//! Harmonicity of `h` under the continuous Laplacian (symbolically and by
//! finite differences) and under discrete step-set Laplacians.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::oracle::lattice::StepSet;
use crate::rootsys::{Family, RootSystem};

/// Default cap on the number of monomials during expansion.
pub const DEFAULT_TERM_CAP: usize = 1_000_000;

/// Multivariate polynomial with integer coefficients, keyed by exponent
/// vectors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Polynomial {
    vars: usize,
    terms: BTreeMap<Vec<u32>, BigInt>,
}

impl Polynomial {
    pub fn one(vars: usize) -> Self {
        Self {
            vars,
            terms: BTreeMap::from([(vec![0; vars], BigInt::one())]),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    /// Multiplies by `sum_i c_i x_i`; fails once the result exceeds `cap`
    /// terms.
    pub fn mul_linear(&self, coeffs: &[(usize, i64)], cap: usize) -> Option<Self> {
        let mut terms: BTreeMap<Vec<u32>, BigInt> = BTreeMap::new();
        for (e, c) in &self.terms {
            for &(i, a) in coeffs {
                let mut e2 = e.clone();
                e2[i] += 1;
                *terms.entry(e2).or_insert_with(BigInt::zero) += c * a;
            }
            if terms.len() > cap {
                return None;
            }
        }
        terms.retain(|_, c| !c.is_zero());
        Some(Self { vars: self.vars, terms })
    }

    /// `sum_i d^2/dx_i^2`.
    pub fn laplacian(&self) -> Self {
        let mut terms: BTreeMap<Vec<u32>, BigInt> = BTreeMap::new();
        for (e, c) in &self.terms {
            for i in 0..self.vars {
                if e[i] >= 2 {
                    let mut e2 = e.clone();
                    let k = e2[i];
                    e2[i] -= 2;
                    *terms.entry(e2).or_insert_with(BigInt::zero) += c * BigInt::from(k * (k - 1));
                }
            }
        }
        terms.retain(|_, c| !c.is_zero());
        Self { vars: self.vars, terms }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        use num_traits::ToPrimitive;
        self.terms
            .iter()
            .map(|(e, c)| {
                c.to_f64().unwrap_or(f64::NAN) * e.iter().zip(x).map(|(&k, &v)| v.powi(k as i32)).product::<f64>()
            })
            .sum()
    }
}

/// `h` expanded into monomials, or `None` if the expansion exceeds `cap`.
pub fn expand_h(rs: &RootSystem, cap: usize) -> Option<Polynomial> {
    rs.positive_roots()
        .iter()
        .try_fold(Polynomial::one(rs.rank()), |p, r| p.mul_linear(&r.coefficients(), cap))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuousReport {
    pub family: Family,
    pub n: usize,
    /// `Some(true)` if the symbolic Laplacian is the zero polynomial; `None`
    /// when the expansion hit the term cap and only finite differences ran.
    pub symbolic_zero: Option<bool>,
    pub terms: Option<usize>,
    pub cap_exceeded: bool,
    /// Largest `|sum_i D_i^2 h| / sum_i |D_i^2 h|` over the sample points.
    pub fd_max_residual: f64,
    pub fd_pass: bool,
    pub pass: bool,
}

fn second_difference(rs: &RootSystem, x: &[f64], i: usize, eps: f64) -> f64 {
    let mut p = x.to_vec();
    let mut m = x.to_vec();
    p[i] += eps;
    m[i] -= eps;
    (rs.h(&p) - 2.0 * rs.h(x) + rs.h(&m)) / (eps * eps)
}

/// Checks `Delta h = 0` symbolically and by central differences at the
/// sample points (which should stay `1e-3` away from the walls).
pub fn check_harmonic_continuous(rs: &RootSystem, points: &[Vec<f64>], tol: f64) -> Result<ContinuousReport> {
    check_harmonic_continuous_capped(rs, points, tol, DEFAULT_TERM_CAP)
}

pub fn check_harmonic_continuous_capped(
    rs: &RootSystem,
    points: &[Vec<f64>],
    tol: f64,
    cap: usize,
) -> Result<ContinuousReport> {
    for p in points {
        if p.len() != rs.rank() {
            return Err(Error::DimensionMismatch {
                expected: rs.rank(),
                got: p.len(),
            });
        }
    }
    let poly = expand_h(rs, cap);
    let symbolic_zero = poly.as_ref().map(|p| p.laplacian().is_zero());
    let mut worst: f64 = 0.0;
    for x in points {
        let scale = x.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        let eps = 1e-3 * scale;
        let d: Vec<f64> = (0..rs.rank()).map(|i| second_difference(rs, x, i, eps)).collect();
        let denom: f64 = d.iter().map(|v| v.abs()).sum();
        let resid = if denom == 0.0 {
            0.0
        } else {
            d.iter().sum::<f64>().abs() / denom
        };
        worst = worst.max(resid);
    }
    let fd_pass = worst <= tol;
    Ok(ContinuousReport {
        family: rs.family(),
        n: rs.rank(),
        symbolic_zero,
        terms: poly.as_ref().map(Polynomial::num_terms),
        cap_exceeded: poly.is_none(),
        fd_max_residual: worst,
        fd_pass,
        pass: fd_pass && symbolic_zero != Some(false),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteReport {
    pub family: Family,
    pub n: usize,
    pub steps: usize,
    pub points: usize,
    /// Points where `L_S h` is not exactly zero.
    pub failures: Vec<Vec<i64>>,
    pub pass: bool,
}

fn h_exact(rs: &RootSystem, x: &[i64]) -> BigInt {
    rs.positive_roots()
        .iter()
        .map(|r| BigInt::from(r.eval_i64(x)))
        .product()
}

/// Checks `L_S h(x) = (1/|S|) sum_s [h(x + s) - h(x)] = 0` exactly.
pub fn check_harmonic_discrete(rs: &RootSystem, steps: &StepSet, points: &[Vec<i64>]) -> Result<DiscreteReport> {
    steps.check_symmetric(rs)?;
    let size = BigRational::from_integer(BigInt::from(steps.steps().len()));
    let mut failures = Vec::new();
    for x in points {
        if x.len() != rs.rank() {
            return Err(Error::DimensionMismatch {
                expected: rs.rank(),
                got: x.len(),
            });
        }
        let hx = h_exact(rs, x);
        let sum: BigInt = steps
            .steps()
            .iter()
            .map(|s| {
                let y: Vec<i64> = x.iter().zip(s).map(|(a, b)| a + b).collect();
                h_exact(rs, &y) - &hx
            })
            .sum();
        if !(BigRational::from_integer(sum) / &size).is_zero() {
            failures.push(x.clone());
        }
    }
    Ok(DiscreteReport {
        family: rs.family(),
        n: rs.rank(),
        steps: steps.steps().len(),
        points: points.len(),
        pass: failures.is_empty(),
        failures,
    })
}

/// All integer points of `[-r, r]^n`.
pub fn integer_grid(n: usize, r: i64) -> Vec<Vec<i64>> {
    let mut out = vec![vec![]];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|p| {
                (-r..=r).map(move |v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rs(f: Family, n: usize) -> RootSystem {
        RootSystem::new(f, n).unwrap()
    }

    #[test]
    fn small_expansions() {
        let p = expand_h(&rs(Family::D, 2), 100).unwrap();
        // x1^2 - x2^2
        assert_eq!(p.num_terms(), 2);
        assert_eq!(p.degree(), 2);
        let p = expand_h(&rs(Family::A, 3), 100).unwrap();
        assert_eq!(p.degree(), 3);
        assert!(p.laplacian().is_zero());
        assert!((p.eval(&[2.0, 1.0, 0.0]) - 2.0).abs() < 1e-12);
        let b1 = expand_h(&rs(Family::B, 1), 10).unwrap();
        assert!(b1.laplacian().is_zero());
    }

    #[test]
    fn non_harmonic_is_detected() {
        // x1^2 alone has Laplacian 2.
        let p = Polynomial::one(2)
            .mul_linear(&[(0, 1)], 10)
            .unwrap()
            .mul_linear(&[(0, 1)], 10)
            .unwrap();
        assert!(!p.laplacian().is_zero());
    }

    #[test]
    fn symbolic_harmonicity() {
        for n in 1..=5 {
            assert_eq!(
                expand_h(&rs(Family::A, n), DEFAULT_TERM_CAP).map(|p| p.laplacian().is_zero()),
                Some(true)
            );
        }
        for n in 1..=4 {
            assert_eq!(
                expand_h(&rs(Family::B, n), DEFAULT_TERM_CAP).map(|p| p.laplacian().is_zero()),
                Some(true)
            );
        }
        for n in 2..=4 {
            assert_eq!(
                expand_h(&rs(Family::D, n), DEFAULT_TERM_CAP).map(|p| p.laplacian().is_zero()),
                Some(true)
            );
        }
    }

    #[test]
    fn cap_falls_back_to_differences() {
        let pts = vec![vec![3.1, 2.2, 1.3, 0.4]];
        let r = check_harmonic_continuous_capped(&rs(Family::B, 4), &pts, 1e-5, 10).unwrap();
        assert!(r.cap_exceeded && r.symbolic_zero.is_none() && r.fd_pass && r.pass);
    }

    #[test]
    fn finite_differences() {
        let pts = vec![vec![2.5, 1.0, -0.7], vec![4.0, 1.5, 0.2]];
        let r = check_harmonic_continuous(&rs(Family::D, 3), &pts, 1e-5).unwrap();
        assert_eq!(r.symbolic_zero, Some(true));
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn discrete_laplacians() {
        let grid2 = integer_grid(2, 5);
        let r = check_harmonic_discrete(&rs(Family::A, 2), &StepSet::unit(2), &grid2).unwrap();
        assert!(r.pass);
        let r = check_harmonic_discrete(&rs(Family::A, 3), &StepSet::unit(3), &integer_grid(3, 5)).unwrap();
        assert!(r.pass && r.points == 1331);
        let r = check_harmonic_discrete(&rs(Family::B, 2), &StepSet::unit_and_diagonal(2), &grid2).unwrap();
        assert!(r.pass);
        let lopsided = StepSet::new(vec![vec![1, 0], vec![-1, 0]]).unwrap();
        assert!(check_harmonic_discrete(&rs(Family::A, 2), &lopsided, &grid2).is_err());
    }
}
