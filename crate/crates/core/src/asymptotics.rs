//! Large-time survival asymptotics.
//!
//! For a start point `eta` inside the chamber, the probability of not
//! hitting a wall by time `t` behaves like `coefficient * t^(-m/2)`, with
//! `coefficient = const(family, n) * h(eta)`. The family constant is
//! assembled from the expansion
//! `b_t(eta, lam) ~ (2 pi t)^(-n/2) e^(-|lam|^2/2t) K h(eta) h(lam) / t^m`,
//! integrated over one chamber with the Selberg-type integral
//! `S = int_{R^n} e^(-|x|^2/2) |h(x)| dx` divided by `|W|`:
//!
//! `const = (2 pi)^(-n/2) K S / |W|`.
//!
//! For `A_1` this gives `(eta_1 - eta_2) / sqrt(pi t)`, the leading term of
//! the exact answer `erf((eta_1 - eta_2) / (2 sqrt t))`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;
use statrs::function::gamma::ln_gamma;
use std::f64::consts::{LN_2, PI};

use crate::error::{Error, Result};
use crate::rootsys::{Family, Root, RootSystem};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticLaw {
    pub family: Family,
    pub eta: Vec<f64>,
    pub coefficient: f64,
    pub exponent: f64,
}

impl AsymptoticLaw {
    /// `coefficient * t^exponent`.
    pub fn survival(&self, t: f64) -> f64 {
        self.coefficient * t.powf(self.exponent)
    }
}

/// Dimension `n + 2m` of the Bessel process given by the radial part of the
/// conditioned motion.
pub fn bessel_dimension(family: Family, n: usize) -> Result<usize> {
    let rs = RootSystem::new(family, n)?;
    Ok(n + 2 * rs.num_positive_roots())
}

/// Exponent of `t` in the survival law, `-m/2`.
pub fn survival_exponent(family: Family, n: usize) -> Result<f64> {
    Ok(-(RootSystem::new(family, n)?.num_positive_roots() as f64) / 2.0)
}

/// Number of semistandard tableaux attached to a strictly decreasing
/// non-negative integer `eta`: `prod_{i<j} (eta_i - eta_j) / prod_{i<j} (j - i)`.
pub fn schur_constant(eta: &[i64]) -> Result<BigRational> {
    if eta.is_empty() {
        return Err(Error::InvalidInput("empty eta".into()));
    }
    if eta.iter().any(|&e| e < 0) || eta.windows(2).any(|w| w[0] <= w[1]) {
        return Err(Error::InvalidInput(format!(
            "eta must be strictly decreasing non-negative integers, got {eta:?}"
        )));
    }
    let n = eta.len();
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for i in 0..n {
        for j in i + 1..n {
            num *= BigInt::from(eta[i] - eta[j]);
            den *= BigInt::from((j - i) as i64);
        }
    }
    Ok(BigRational::new(num, den))
}

/// `ln int_{R^n} e^(-|x|^2/2) |h(x)| dx` for the positive roots of `family`.
///
/// Evaluated with the Gaussian (A) and Laguerre (B, D) forms of Selberg's
/// integral.
pub fn ln_selberg_constant(family: Family, n: usize) -> Result<f64> {
    RootSystem::new(family, n)?;
    let nf = n as f64;
    let g32 = ln_gamma(1.5);
    Ok(match family {
        // (2 pi)^(n/2) prod_{j=1}^n Gamma(1 + j/2) / Gamma(3/2)
        Family::A => 0.5 * nf * (2.0 * PI).ln() + (1..=n).map(|j| ln_gamma(1.0 + j as f64 / 2.0) - g32).sum::<f64>(),
        // y_i = x_i^2 / 2 turns both into Laguerre-weighted |Delta(y)|.
        Family::B => {
            (nf + nf * (nf - 1.0) / 2.0) * LN_2
                + (0..n)
                    .map(|j| {
                        let j = j as f64;
                        ln_gamma(1.0 + j / 2.0) + ln_gamma(1.0 + (j + 1.0) / 2.0) - g32
                    })
                    .sum::<f64>()
        }
        Family::D => {
            (nf / 2.0 + nf * (nf - 1.0) / 2.0) * LN_2
                + (0..n)
                    .map(|j| {
                        let j = j as f64;
                        ln_gamma(0.5 + j / 2.0) + ln_gamma(1.0 + (j + 1.0) / 2.0) - g32
                    })
                    .sum::<f64>()
        }
    })
}

pub fn selberg_constant(family: Family, n: usize) -> Result<f64> {
    Ok(ln_selberg_constant(family, n)?.exp())
}

fn ln_factorial(k: usize) -> f64 {
    ln_gamma(k as f64 + 1.0)
}

/// `ln K`, where `K h(eta) h(lam) / t^m` is the leading term of the density
/// ratio `b_t(eta, lam) / c_t(lam)`.
fn ln_expansion_constant(family: Family, n: usize) -> f64 {
    match family {
        Family::A => -(0..n).map(ln_factorial).sum::<f64>(),
        Family::B => (1..=n).map(|l| LN_2 - ln_factorial(2 * l - 1)).sum(),
        Family::D => -LN_2 + (1..=n).map(|l| LN_2 - ln_factorial(2 * l - 2)).sum::<f64>(),
    }
}

/// Survival coefficient per unit of `h(eta)`.
pub fn leading_constant(family: Family, n: usize) -> Result<f64> {
    let rs = RootSystem::new(family, n)?;
    let ln = -0.5 * n as f64 * (2.0 * PI).ln() + ln_expansion_constant(family, n) + ln_selberg_constant(family, n)?
        - (rs.group_order() as f64).ln();
    Ok(ln.exp())
}

/// The reference start point `(n-1, ..., 0)` for A and `(2n-1, ..., 3, 1)`
/// for B and D.
pub fn reference_point(family: Family, n: usize) -> Vec<f64> {
    match family {
        Family::A => (0..n).rev().map(|k| k as f64).collect(),
        Family::B | Family::D => (0..n).rev().map(|k| (2 * k + 1) as f64).collect(),
    }
}

/// Leading-order survival law for Brownian motion started at `eta`.
///
/// Points on a wall get a zero coefficient: the true decay is faster and is
/// not modeled.
pub fn survival_asymptote(family: Family, eta: &[f64]) -> Result<AsymptoticLaw> {
    let n = eta.len();
    let rs = RootSystem::new(family, n)?;
    if !rs.contains(eta, false)? {
        return Err(Error::OutsideChamber(format!("eta = {eta:?}")));
    }
    let exponent = -(rs.num_positive_roots() as f64) / 2.0;
    let coefficient = if rs.contains(eta, true)? {
        leading_constant(family, n)? * rs.h(eta)
    } else {
        log::warn!("eta = {eta:?} lies on a wall; leading coefficient is zero");
        0.0
    };
    Ok(AsymptoticLaw {
        family,
        eta: eta.to_vec(),
        coefficient,
        exponent,
    })
}

fn root_rational(root: &Root, x: &[BigRational]) -> BigRational {
    root.coefficients()
        .into_iter()
        .fold(BigRational::zero(), |acc, (i, c)| {
            acc + &x[i] * BigRational::from_integer(c.into())
        })
}

/// `h(eta) / h(eta')` in exact rational arithmetic: the ratio of the
/// survival coefficients of two start points.
pub fn coefficient_ratio(family: Family, eta: &[BigRational], other: &[BigRational]) -> Result<BigRational> {
    if eta.len() != other.len() {
        return Err(Error::DimensionMismatch {
            expected: eta.len(),
            got: other.len(),
        });
    }
    let rs = RootSystem::new(family, eta.len())?;
    let h = |x: &[BigRational]| {
        rs.positive_roots()
            .iter()
            .fold(BigRational::one(), |acc, r| acc * root_rational(r, x))
    };
    let den = h(other);
    if den.is_zero() {
        return Err(Error::NotInterior(format!("{other:?}")));
    }
    let ratio = h(eta) / den;
    if ratio.is_negative() {
        return Err(Error::OutsideChamber("start points lie in different chambers".into()));
    }
    Ok(ratio)
}
