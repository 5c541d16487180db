//! One-dimensional transition densities.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};
use crate::quad;

/// A time-homogeneous 1-D transition density `p_t(from -> to)`.
pub trait TransitionKernel: Send + Sync {
    /// `ln p_t(from -> to)`; `-inf` where the density vanishes.
    fn ln_density(&self, t: f64, from: f64, to: f64) -> f64;

    fn density(&self, t: f64, from: f64, to: f64) -> f64 {
        self.ln_density(t, from, to).exp()
    }

    /// `p_t(x -> y) = p_t(-x -> -y)` for all `t, x, y`.
    fn symmetric_about_zero(&self) -> bool;
}

fn check_time(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveTime(t))
    }
}

/// `ln N_t(x)` without validation.
#[inline]
pub(crate) fn ln_gauss(t: f64, x: f64) -> f64 {
    -x * x / (2.0 * t) - 0.5 * (2.0 * PI * t).ln()
}

/// The centered normal density with variance `t`.
pub fn gauss_density(t: f64, x: f64) -> Result<f64> {
    check_time(t)?;
    Ok(ln_gauss(t, x).exp())
}

pub fn ln_gauss_density(t: f64, x: f64) -> Result<f64> {
    check_time(t)?;
    Ok(ln_gauss(t, x))
}

/// `c_t(v) = prod_i N_t(v_i)`, the density of free `n`-dimensional Brownian
/// motion started at the origin.
pub fn unconstrained_density(t: f64, v: &[f64]) -> Result<f64> {
    Ok(ln_unconstrained_density(t, v)?.exp())
}

pub fn ln_unconstrained_density(t: f64, v: &[f64]) -> Result<f64> {
    check_time(t)?;
    Ok(v.iter().map(|x| ln_gauss(t, *x)).sum())
}

/// Standard Brownian motion.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GaussKernel;

impl TransitionKernel for GaussKernel {
    #[inline]
    fn ln_density(&self, t: f64, from: f64, to: f64) -> f64 {
        ln_gauss(t, to - from)
    }

    fn symmetric_about_zero(&self) -> bool {
        true
    }
}

type KernelFn = dyn Fn(f64, f64, f64) -> f64 + Send + Sync;

/// A user-supplied kernel `(t, from, to) -> density`, checked on
/// registration.
pub struct CustomKernel {
    f: Box<KernelFn>,
    symmetric: bool,
}

impl fmt::Debug for CustomKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomKernel")
            .field("symmetric", &self.symmetric)
            .finish()
    }
}

/// Sample times and starting points used to validate a custom kernel.
#[derive(Debug, Clone)]
pub struct KernelProbe {
    pub times: Vec<f64>,
    pub starts: Vec<f64>,
    pub mass_tolerance: f64,
}

impl Default for KernelProbe {
    fn default() -> Self {
        Self {
            times: vec![0.25, 1.0, 4.0],
            starts: vec![-1.5, 0.0, 0.7, 3.0],
            mass_tolerance: 1e-6,
        }
    }
}

impl CustomKernel {
    pub fn register<F>(f: F, symmetric_about_zero: bool) -> Result<Self>
    where
        F: Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
    {
        Self::register_with_probe(f, symmetric_about_zero, &KernelProbe::default())
    }

    /// Registers `f` after checking that `p_t(x -> .)` is a sub-probability
    /// density at every probe point and, if declared, the reflection symmetry.
    pub fn register_with_probe<F>(f: F, symmetric_about_zero: bool, probe: &KernelProbe) -> Result<Self>
    where
        F: Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
    {
        for &t in &probe.times {
            check_time(t)?;
            for &x in &probe.starts {
                let mut negative = false;
                let mass = quad::integrate_real_line(
                    |y| {
                        let v = f(t, x, y);
                        negative |= v < 0.0;
                        v
                    },
                    x,
                    t.sqrt(),
                    1e-10,
                )
                .value;
                if negative {
                    return Err(Error::KernelCheck(format!("negative density at t={t}, from={x}")));
                }
                if mass.is_nan() || mass > 1.0 + probe.mass_tolerance {
                    return Err(Error::KernelCheck(format!("mass {mass} > 1 at t={t}, from={x}")));
                }
                if symmetric_about_zero {
                    for y in [-2.0, -0.3, 0.0, 0.8, 2.5] {
                        let (a, b) = (f(t, x, y), f(t, -x, -y));
                        if (a - b).abs() > 1e-9 * a.abs().max(b.abs()).max(1e-300) {
                            return Err(Error::KernelCheck(format!(
                                "declared symmetric but p({t},{x},{y})={a} != p({t},{},{})={b}",
                                -x, -y
                            )));
                        }
                    }
                }
            }
        }
        Ok(Self {
            f: Box::new(f),
            symmetric: symmetric_about_zero,
        })
    }
}

impl TransitionKernel for CustomKernel {
    fn ln_density(&self, t: f64, from: f64, to: f64) -> f64 {
        (self.f)(t, from, to).ln()
    }

    fn density(&self, t: f64, from: f64, to: f64) -> f64 {
        (self.f)(t, from, to)
    }

    fn symmetric_about_zero(&self) -> bool {
        self.symmetric
    }
}
