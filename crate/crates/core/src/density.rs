//! Transition densities of Brownian motion (or a product of independent 1-D
//! diffusions) killed or reflected at the walls of a Weyl chamber.
//!
//! Two routes are provided and are expected to agree:
//!
//! * the signed sum over the Weyl group,
//!   `b_t(eta, lam) = sum_w sgn(w) prod_i p_t(eta_i -> w(lam)_i)`,
//!   and its unsigned counterpart for reflecting walls;
//! * the determinant (absorbing) and permanent (reflecting) forms for each
//!   classical family.
//!
//! All evaluation happens in log space with per-row scaling, see
//! [`crate::linalg`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{ln_gauss, GaussKernel, TransitionKernel};
use crate::linalg::{ScaledMatrix, SignedLog};
use crate::rootsys::{Family, RootSystem};

/// Largest `n` accepted by the permanent (Ryser) evaluation.
pub const PERMANENT_CAP: usize = 12;

/// Negative absorbing results smaller than this fraction of the natural
/// magnitude are treated as cancellation noise and clamped to zero.
pub const CLAMP_RELATIVE: f64 = 1e-14;

/// Absolute tolerance for deciding that a point lies on a wall.
pub const WALL_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Absorbing,
    Reflecting,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    GroupSum,
    Determinant,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Density {
    pub value: f64,
    /// `ln |value|`, finite even when `value` underflows.
    pub ln_abs: f64,
    /// A tiny negative result was clamped to zero.
    pub clamped: bool,
}

impl Density {
    fn from_signed(s: SignedLog) -> Self {
        Density {
            value: s.value(),
            ln_abs: s.ln_abs,
            clamped: false,
        }
    }

    fn clamped() -> Self {
        Density {
            value: 0.0,
            ln_abs: f64::NEG_INFINITY,
            clamped: true,
        }
    }

    /// Applies the absorbing-case clamp given the natural magnitude `ln_scale`.
    fn clamp_absorbing(s: SignedLog, ln_scale: f64) -> Self {
        if s.sign < 0.0 && s.ln_abs < ln_scale + CLAMP_RELATIVE.ln() {
            log::debug!("clamping negative density {:e} to zero", s.value());
            Self::clamped()
        } else {
            Self::from_signed(s)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityRequest {
    pub rs: RootSystem,
    pub eta: Vec<f64>,
    pub lam: Vec<f64>,
    pub t: f64,
    pub boundary: Boundary,
    pub method: Method,
}

impl DensityRequest {
    pub fn new(rs: RootSystem, eta: Vec<f64>, lam: Vec<f64>, t: f64) -> Self {
        Self {
            rs,
            eta,
            lam,
            t,
            boundary: Boundary::Absorbing,
            method: Method::Determinant,
        }
    }

    pub fn boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    fn validate(&self) -> Result<()> {
        check_time(self.t)?;
        for (name, x) in [("eta", &self.eta), ("lambda", &self.lam)] {
            if !self.rs.contains(x, false)? {
                return Err(Error::OutsideChamber(format!("{name} = {x:?}")));
            }
        }
        Ok(())
    }
}

fn check_time(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveTime(t))
    }
}

fn check_pair(eta: &[f64], lam: &[f64]) -> Result<()> {
    if eta.len() != lam.len() {
        return Err(Error::DimensionMismatch {
            expected: eta.len(),
            got: lam.len(),
        });
    }
    Ok(())
}

/// Evaluates a request by the method it names.
pub fn density(req: &DensityRequest) -> Result<Density> {
    match req.method {
        Method::GroupSum => reflection_density(req),
        Method::Determinant => {
            req.validate()?;
            let (eta, lam, t) = (&req.eta[..], &req.lam[..], req.t);
            match (req.boundary, req.rs.family()) {
                (Boundary::Absorbing, Family::A) => determinant_density_a(eta, lam, t, &GaussKernel),
                (Boundary::Absorbing, Family::B) => determinant_density_b(eta, lam, t, &GaussKernel),
                (Boundary::Absorbing, Family::D) => determinant_density_d(eta, lam, t),
                (Boundary::Reflecting, family) => permanent_density(family, eta, lam, t),
            }
        }
    }
}

/// Signed (absorbing) or unsigned (reflecting) sum over the Weyl group for
/// Brownian motion. Inputs must lie in the closed chamber.
pub fn reflection_density(req: &DensityRequest) -> Result<Density> {
    req.validate()?;
    let raw = group_sum(&req.rs, &GaussKernel, &req.eta, &req.lam, req.t, req.boundary)?;
    if req.boundary == Boundary::Reflecting {
        let stab = stabilizer_size(&req.rs, &req.lam)?;
        if stab > 1 {
            return Ok(Density {
                value: raw.value / stab as f64,
                ln_abs: raw.ln_abs - (stab as f64).ln(),
                clamped: false,
            });
        }
    }
    Ok(raw)
}

/// The raw group sum `sum_w s(w) prod_i p_t(eta_i -> w(lam)_i)` with
/// `s(w) = sgn(w)` (absorbing) or `1` (reflecting), without the chamber check
/// and without the stabilizer denominator.
pub fn group_sum<K: TransitionKernel + ?Sized>(
    rs: &RootSystem,
    kernel: &K,
    eta: &[f64],
    lam: &[f64],
    t: f64,
    boundary: Boundary,
) -> Result<Density> {
    check_time(t)?;
    check_pair(eta, lam)?;
    if eta.len() != rs.rank() {
        return Err(Error::DimensionMismatch {
            expected: rs.rank(),
            got: eta.len(),
        });
    }
    let mut acc = LogSumExp::default();
    let mut image = vec![0.0; lam.len()];
    for w in rs.enumerate_group()? {
        w.apply_into(lam, &mut image);
        let ln_term: f64 = eta.iter().zip(&image).map(|(&e, &y)| kernel.ln_density(t, e, y)).sum();
        let sign = match boundary {
            Boundary::Absorbing => w.sign() as f64,
            Boundary::Reflecting => 1.0,
        };
        acc.add(sign, ln_term);
    }
    let total = acc.finish();
    Ok(match boundary {
        Boundary::Absorbing => Density::clamp_absorbing(total, acc.ln_abs_sum()),
        Boundary::Reflecting => Density::from_signed(total),
    })
}

/// Number of group elements fixing `lam`; 1 unless `lam` is on a wall.
pub fn stabilizer_size(rs: &RootSystem, lam: &[f64]) -> Result<u128> {
    let on_wall = rs.simple_roots().iter().any(|r| r.eval(lam).abs() <= WALL_TOLERANCE);
    if !on_wall {
        return Ok(1);
    }
    let mut image = vec![0.0; lam.len()];
    let mut count = 0u128;
    for w in rs.enumerate_group()? {
        w.apply_into(lam, &mut image);
        if image.iter().zip(lam).all(|(a, b)| (a - b).abs() <= WALL_TOLERANCE) {
            count += 1;
        }
    }
    Ok(count)
}

/// Streaming signed log-sum-exp.
#[derive(Debug, Default)]
struct LogSumExp {
    max: Option<f64>,
    signed: f64,
    abs: f64,
}

impl LogSumExp {
    fn add(&mut self, sign: f64, ln_term: f64) {
        if ln_term == f64::NEG_INFINITY {
            return;
        }
        match self.max {
            Some(m) if ln_term <= m => {
                let e = (ln_term - m).exp();
                self.signed += sign * e;
                self.abs += e;
            }
            Some(m) => {
                let r = (m - ln_term).exp();
                self.signed = self.signed * r + sign;
                self.abs = self.abs * r + 1.0;
                self.max = Some(ln_term);
            }
            None => {
                self.max = Some(ln_term);
                self.signed = sign;
                self.abs = 1.0;
            }
        }
    }

    fn finish(&self) -> SignedLog {
        match self.max {
            None => SignedLog::ZERO,
            Some(m) => {
                let mut s = SignedLog::from_value(self.signed);
                s.ln_abs += m;
                s
            }
        }
    }

    fn ln_abs_sum(&self) -> f64 {
        self.max.map_or(f64::NEG_INFINITY, |m| m + self.abs.ln())
    }
}

fn det_density(m: &ScaledMatrix) -> (SignedLog, f64) {
    let d = m.scaled_det();
    let mut s = SignedLog::from_value(d);
    s.ln_abs += m.ln_scale();
    (s, m.ln_scale())
}

/// `det |p_t(eta_j -> lam_i)|` for `n` independent copies of `kernel`
/// killed at their first collision.
pub fn determinant_density_a<K: TransitionKernel + ?Sized>(
    eta: &[f64],
    lam: &[f64],
    t: f64,
    kernel: &K,
) -> Result<Density> {
    check_time(t)?;
    check_pair(eta, lam)?;
    let n = eta.len();
    let m = ScaledMatrix::from_entries(n, |i, j| SignedLog::positive(kernel.ln_density(t, eta[j], lam[i])));
    let (s, scale) = det_density(&m);
    Ok(Density::clamp_absorbing(s, scale))
}

fn b_entry<K: TransitionKernel + ?Sized>(kernel: &K, t: f64, from: f64, to: f64, sign: f64) -> SignedLog {
    SignedLog::combine(kernel.ln_density(t, from, to), kernel.ln_density(t, from, -to), sign)
}

/// `det |p_t(eta_j -> lam_i) - p_t(eta_j -> -lam_i)|`: collisions and the wall
/// at zero are both absorbing. The kernel must be symmetric about zero.
pub fn determinant_density_b<K: TransitionKernel + ?Sized>(
    eta: &[f64],
    lam: &[f64],
    t: f64,
    kernel: &K,
) -> Result<Density> {
    check_time(t)?;
    check_pair(eta, lam)?;
    if !kernel.symmetric_about_zero() {
        return Err(Error::AsymmetricKernel);
    }
    let n = eta.len();
    let m = ScaledMatrix::from_entries(n, |i, j| b_entry(kernel, t, eta[j], lam[i], -1.0));
    let (s, scale) = det_density(&m);
    Ok(Density::clamp_absorbing(s, scale))
}

fn gauss_pm(t: f64, eta: &[f64], lam: &[f64], sign: f64) -> ScaledMatrix {
    ScaledMatrix::from_entries(eta.len(), |i, j| {
        SignedLog::combine(ln_gauss(t, lam[i] - eta[j]), ln_gauss(t, lam[i] + eta[j]), sign)
    })
}

/// The two determinants of the `D_n` density,
/// `det |N_t(lam_i - eta_j) - N_t(lam_i + eta_j)|` and the same with `+`.
pub fn d_determinants(eta: &[f64], lam: &[f64], t: f64) -> Result<(f64, f64)> {
    check_time(t)?;
    check_pair(eta, lam)?;
    let (minus, _) = det_density(&gauss_pm(t, eta, lam, -1.0));
    let (plus, _) = det_density(&gauss_pm(t, eta, lam, 1.0));
    Ok((minus.value(), plus.value()))
}

/// `(1/2)[det|N-N| + det|N+N|]` for Brownian motion in the `D_n` chamber.
pub fn determinant_density_d(eta: &[f64], lam: &[f64], t: f64) -> Result<Density> {
    check_time(t)?;
    check_pair(eta, lam)?;
    let (minus, s1) = det_density(&gauss_pm(t, eta, lam, -1.0));
    let (plus, s2) = det_density(&gauss_pm(t, eta, lam, 1.0));
    let sum = add_signed(minus, plus);
    let half = SignedLog {
        sign: sum.sign,
        ln_abs: sum.ln_abs - std::f64::consts::LN_2,
    };
    Ok(Density::clamp_absorbing(half, s1.max(s2)))
}

fn add_signed(a: SignedLog, b: SignedLog) -> SignedLog {
    if a.sign == 0.0 {
        return b;
    }
    if b.sign == 0.0 {
        return a;
    }
    let s = SignedLog::combine(a.ln_abs, b.ln_abs, a.sign * b.sign);
    SignedLog {
        sign: s.sign * a.sign,
        ln_abs: s.ln_abs,
    }
}

/// Reflecting-wall density by permanents, without the stabilizer
/// denominator (it only matters on a null set).
pub fn permanent_density(family: Family, eta: &[f64], lam: &[f64], t: f64) -> Result<Density> {
    permanent_density_capped(family, eta, lam, t, PERMANENT_CAP)
}

pub fn permanent_density_capped(family: Family, eta: &[f64], lam: &[f64], t: f64, cap: usize) -> Result<Density> {
    check_time(t)?;
    check_pair(eta, lam)?;
    let n = eta.len();
    if n > cap {
        return Err(Error::CapExceeded {
            what: "permanent size",
            value: n,
            cap,
        });
    }
    let perm = |m: &ScaledMatrix| {
        let mut s = SignedLog::from_value(m.scaled_permanent());
        s.ln_abs += m.ln_scale();
        s
    };
    let out = match family {
        Family::A => perm(&ScaledMatrix::from_entries(n, |i, j| {
            SignedLog::positive(ln_gauss(t, lam[i] - eta[j]))
        })),
        Family::B => perm(&gauss_pm(t, eta, lam, 1.0)),
        Family::D => {
            let s = add_signed(perm(&gauss_pm(t, eta, lam, -1.0)), perm(&gauss_pm(t, eta, lam, 1.0)));
            SignedLog {
                sign: s.sign,
                ln_abs: s.ln_abs - std::f64::consts::LN_2,
            }
        }
    };
    Ok(Density::from_signed(out))
}

/// The absorbing Brownian density by the determinant form of `rs`'s family.
pub fn absorbing_density(rs: &RootSystem, eta: &[f64], lam: &[f64], t: f64) -> Result<Density> {
    match rs.family() {
        Family::A => determinant_density_a(eta, lam, t, &GaussKernel),
        Family::B => determinant_density_b(eta, lam, t, &GaussKernel),
        Family::D => determinant_density_d(eta, lam, t),
    }
}

/// Density of the process conditioned never to hit a wall (the Doob
/// transform by `h`): `h(lam) b_t(eta, lam) / h(eta)`.
pub fn conditioned_density(rs: &RootSystem, eta: &[f64], lam: &[f64], t: f64) -> Result<Density> {
    check_time(t)?;
    if !rs.contains(eta, true)? {
        return Err(Error::NotInterior(format!("eta = {eta:?}")));
    }
    if !rs.contains(lam, false)? {
        return Err(Error::OutsideChamber(format!("lambda = {lam:?}")));
    }
    let b = absorbing_density(rs, eta, lam, t)?;
    let h_lam = rs.h(lam);
    if h_lam == 0.0 || b.value <= 0.0 {
        return Ok(Density {
            value: 0.0,
            ln_abs: f64::NEG_INFINITY,
            clamped: b.clamped,
        });
    }
    let ln = rs.ln_abs_h(lam) + b.ln_abs - rs.ln_abs_h(eta);
    Ok(Density {
        value: ln.exp(),
        ln_abs: ln,
        clamped: b.clamped,
    })
}
