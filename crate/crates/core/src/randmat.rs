//! Gaussian samples on `u(N)` and `so(N)` and their spectra as chamber
//! points.
//!
//! Scaling: a sample at time `t` has the law of matrix Brownian motion at
//! time `t` for which the spectrum is the conditioned chamber process started
//! at the origin. For `u(N)`, diagonal imaginary parts have variance `t` and
//! off-diagonal real and imaginary parts variance `t/2`, so the chamber point
//! has `|lambda| = ||M||_HS`. For `so(N)`, entries above the diagonal have
//! variance `t`; each `lambda_j` appears twice in the spectrum, so
//! `|lambda| = ||M||_HS / sqrt 2`.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rootsys::{Family, RootSystem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algebra {
    /// Skew-Hermitian `N x N`; chamber of `A_{N-1}` in `R^N`.
    Su,
    /// Skew-symmetric of size `2n + 1`; chamber of `B_n`.
    SoOdd,
    /// Skew-symmetric of size `2n`; chamber of `D_n`.
    SoEven,
}

impl Algebra {
    /// The algebra whose spectra live in the chamber of `family` of rank `n`,
    /// with its matrix size.
    pub fn for_family(family: Family, n: usize) -> (Algebra, usize) {
        match family {
            Family::A => (Algebra::Su, n),
            Family::B => (Algebra::SoOdd, 2 * n + 1),
            Family::D => (Algebra::SoEven, 2 * n),
        }
    }

    pub fn root_system(self, size: usize) -> Result<RootSystem> {
        self.check_size(size)?;
        match self {
            Algebra::Su => RootSystem::new(Family::A, size),
            Algebra::SoOdd => RootSystem::new(Family::B, (size - 1) / 2),
            Algebra::SoEven => RootSystem::new(Family::D, size / 2),
        }
    }

    fn check_size(self, size: usize) -> Result<()> {
        let ok = match self {
            Algebra::Su => size >= 1,
            Algebra::SoOdd => size >= 3 && size % 2 == 1,
            Algebra::SoEven => size >= 4 && size.is_multiple_of(2),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("matrix size {size} does not fit {self:?}")))
        }
    }
}

/// `M = re + i im`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixSample {
    pub algebra: Algebra,
    pub t: f64,
    pub re: DMatrix<f64>,
    pub im: DMatrix<f64>,
}

fn sample_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Draws one sample from stream `index` of `seed`.
pub fn sample_matrix_indexed(algebra: Algebra, size: usize, t: f64, seed: u64, index: usize) -> Result<MatrixSample> {
    algebra.check_size(size)?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::NonPositiveTime(t));
    }
    let mut rng = sample_rng(seed, index);
    let mut re = DMatrix::zeros(size, size);
    let mut im = DMatrix::zeros(size, size);
    match algebra {
        Algebra::Su => {
            let s_diag = t.sqrt();
            let s_off = (t / 2.0).sqrt();
            for i in 0..size {
                im[(i, i)] = s_diag * rng.sample::<f64, _>(StandardNormal);
                for j in i + 1..size {
                    let a = s_off * rng.sample::<f64, _>(StandardNormal);
                    let b = s_off * rng.sample::<f64, _>(StandardNormal);
                    re[(i, j)] = a;
                    re[(j, i)] = -a;
                    im[(i, j)] = b;
                    im[(j, i)] = b;
                }
            }
        }
        Algebra::SoOdd | Algebra::SoEven => {
            let s = t.sqrt();
            for i in 0..size {
                for j in i + 1..size {
                    let a = s * rng.sample::<f64, _>(StandardNormal);
                    re[(i, j)] = a;
                    re[(j, i)] = -a;
                }
            }
        }
    }
    Ok(MatrixSample { algebra, t, re, im })
}

pub fn sample_matrix(algebra: Algebra, size: usize, t: f64, seed: u64) -> Result<MatrixSample> {
    sample_matrix_indexed(algebra, size, t, seed, 0)
}

impl MatrixSample {
    pub fn size(&self) -> usize {
        self.re.nrows()
    }

    pub fn hs_norm_sq(&self) -> f64 {
        self.re.norm_squared() + self.im.norm_squared()
    }

    /// `M + M^H == 0` exactly.
    pub fn is_skew_hermitian(&self) -> bool {
        self.re == -self.re.transpose() && self.im == self.im.transpose()
    }

    /// Real symmetric `2N x 2N` embedding `[[X, -Y], [Y, X]]` of the
    /// Hermitian matrix `-i M = X + i Y`.
    pub fn hermitian_embedding(&self) -> DMatrix<f64> {
        // -i (re + i im) = im - i re
        let x = &self.im;
        let y = -&self.re;
        let n = self.size();
        let mut e = DMatrix::zeros(2 * n, 2 * n);
        e.view_mut((0, 0), (n, n)).copy_from(x);
        e.view_mut((n, n), (n, n)).copy_from(x);
        e.view_mut((0, n), (n, n)).copy_from(&(-&y));
        e.view_mut((n, 0), (n, n)).copy_from(&y);
        e
    }

    /// The `N` real eigenvalues of `-i M`, in decreasing order.
    pub fn spectrum(&self) -> Result<Vec<f64>> {
        let e = self.hermitian_embedding();
        if e.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite matrix entry".into()));
        }
        let mut vals: Vec<f64> = SymmetricEigen::new(e).eigenvalues.iter().copied().collect();
        vals.sort_by(|a, b| b.total_cmp(a));
        // The embedding doubles every eigenvalue.
        Ok(vals.into_iter().step_by(2).collect())
    }

    /// Spectrum mapped to the closed chamber: all of it for `u(N)`, the
    /// non-negative half for `so(N)` (`lambda_n >= 0` for even size).
    pub fn chamber_point(&self) -> Result<Vec<f64>> {
        let spec = self.spectrum()?;
        Ok(match self.algebra {
            Algebra::Su => spec,
            Algebra::SoOdd | Algebra::SoEven => {
                let n = self.size() / 2;
                let mut v: Vec<f64> = spec[..n].iter().map(|x| x.abs()).collect();
                v.sort_by(|a, b| b.total_cmp(a));
                v
            }
        })
    }
}

pub fn eigen_chamber_point(m: &MatrixSample) -> Result<Vec<f64>> {
    m.chamber_point()
}

/// I.i.d. chamber points from `n_samples` independent matrices.
pub fn ensemble_eigen_samples(
    algebra: Algebra,
    size: usize,
    t: f64,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    if n_samples == 0 {
        return Err(Error::InvalidInput("n_samples must be at least 1".into()));
    }
    algebra.check_size(size)?;
    (0..n_samples)
        .into_par_iter()
        .map(|i| sample_matrix_indexed(algebra, size, t, seed, i)?.chamber_point())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{chi_cdf, ks_one_sample, radial_compare};
    use nalgebra::QR;

    #[test]
    fn sizes_and_families() {
        assert_eq!(Algebra::SoOdd.root_system(5).unwrap().family(), Family::B);
        assert_eq!(Algebra::SoEven.root_system(6).unwrap().rank(), 3);
        assert!(Algebra::SoOdd.root_system(4).is_err());
        assert!(Algebra::SoEven.root_system(2).is_err());
        assert_eq!(Algebra::for_family(Family::B, 2), (Algebra::SoOdd, 5));
    }

    #[test]
    fn skew_and_norm_correspondence() {
        for (alg, size) in [(Algebra::Su, 3), (Algebra::SoOdd, 5), (Algebra::SoEven, 6)] {
            for i in 0..20 {
                let m = sample_matrix_indexed(alg, size, 1.7, 3, i).unwrap();
                assert!(m.is_skew_hermitian());
                let lam = m.chamber_point().unwrap();
                let r2: f64 = lam.iter().map(|x| x * x).sum();
                let expected = if alg == Algebra::Su {
                    m.hs_norm_sq()
                } else {
                    m.hs_norm_sq() / 2.0
                };
                assert!((r2 - expected).abs() < 1e-10 * expected);
                let rs = alg.root_system(size).unwrap();
                assert!(rs.contains(&lam, false).unwrap());
            }
        }
    }

    #[test]
    fn odd_size_has_a_zero_eigenvalue() {
        let m = sample_matrix(Algebra::SoOdd, 5, 1.0, 9).unwrap();
        let spec = m.spectrum().unwrap();
        assert!(spec[2].abs() < 1e-12);
        assert!(spec[0] >= spec[1] && spec[1] >= 0.0);
    }

    #[test]
    fn zero_matrix_maps_to_origin() {
        let m = MatrixSample {
            algebra: Algebra::SoEven,
            t: 1.0,
            re: DMatrix::zeros(4, 4),
            im: DMatrix::zeros(4, 4),
        };
        assert!(m.chamber_point().unwrap().iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn mean_square_norm() {
        let count = 4000;
        for (alg, size, dim) in [(Algebra::Su, 3, 9.0), (Algebra::SoOdd, 5, 20.0)] {
            let mean: f64 = (0..count)
                .map(|i| sample_matrix_indexed(alg, size, 2.0, 17, i).unwrap().hs_norm_sq())
                .sum::<f64>()
                / count as f64;
            // ||M||^2 / t is chi-square with `dim` (scaled) degrees of freedom.
            let sd = (2.0 * dim * 4.0 / count as f64).sqrt();
            assert!((mean - 2.0 * dim).abs() < 4.0 * sd, "{alg:?} {mean}");
        }
    }

    #[test]
    fn spectrum_is_conjugation_invariant() {
        let m = sample_matrix(Algebra::Su, 4, 1.0, 21).unwrap();
        let mut rng = sample_rng(99, 0);
        let g = DMatrix::from_fn(4, 4, |_, _| rng.sample::<f64, _>(StandardNormal));
        let q = QR::new(g).q();
        let phases: Vec<f64> = (0..4).map(|_| rng.gen::<f64>() * std::f64::consts::TAU).collect();
        // U = diag(e^{i phi}) Q, applied as U M U^H on the real and imaginary parts.
        let c = DMatrix::from_fn(4, 4, |i, j| phases[i].cos() * q[(i, j)]);
        let s = DMatrix::from_fn(4, 4, |i, j| phases[i].sin() * q[(i, j)]);
        // (C + iS)(A + iB)(C - iS)^T
        let (a, b) = (&m.re, &m.im);
        let (pr, pi) = (&c * a - &s * b, &c * b + &s * a);
        let re = &pr * c.transpose() + &pi * s.transpose();
        let im = &pi * c.transpose() - &pr * s.transpose();
        let conj = MatrixSample {
            algebra: Algebra::Su,
            t: 1.0,
            re,
            im,
        };
        let (x, y) = (m.spectrum().unwrap(), conj.spectrum().unwrap());
        for (u, v) in x.iter().zip(&y) {
            assert!((u - v).abs() < 1e-9);
        }

        let m = sample_matrix(Algebra::SoEven, 6, 1.0, 22).unwrap();
        let g = DMatrix::from_fn(6, 6, |_, _| rng.sample::<f64, _>(StandardNormal));
        let q = QR::new(g).q();
        let conj = MatrixSample {
            re: &q * &m.re * q.transpose(),
            ..m.clone()
        };
        let (x, y) = (m.chamber_point().unwrap(), conj.chamber_point().unwrap());
        for (u, v) in x.iter().zip(&y) {
            assert!((u - v).abs() < 1e-9);
        }
    }

    #[test]
    fn radial_law_and_gap() {
        let pts = ensemble_eigen_samples(Algebra::Su, 3, 1.0, 3000, 5).unwrap();
        assert!(radial_compare(&pts, 1.0, 9).unwrap().p_value > 0.01);
        let pts = ensemble_eigen_samples(Algebra::SoOdd, 5, 2.0, 3000, 6).unwrap();
        assert!(radial_compare(&pts, 2.0, 10).unwrap().p_value > 0.01);

        // Gap density ∝ s^2 e^{-s^2/4}: s / sqrt 2 is chi with 3 degrees of freedom.
        let pts = ensemble_eigen_samples(Algebra::Su, 2, 1.0, 4000, 7).unwrap();
        let gaps: Vec<f64> = pts.iter().map(|p| (p[0] - p[1]) / 2f64.sqrt()).collect();
        assert!(ks_one_sample(&gaps, |s| chi_cdf(3, s)).unwrap().p_value > 0.01);
    }

    #[test]
    fn angular_density_is_h_squared() {
        // For u(2) the angle phi of (lambda_1, lambda_2) has density
        // ∝ (cos phi - sin phi)^2 on [-3pi/4, pi/4].
        let n = 20_000;
        let pts = ensemble_eigen_samples(Algebra::Su, 2, 1.0, n, 8).unwrap();
        let split = -std::f64::consts::PI / 4.0 - 0.5;
        let low = pts.iter().filter(|p| p[1].atan2(p[0]) < split).count() as f64;
        // ∫ (1 - sin 2phi) dphi = phi + cos(2phi)/2
        let prim = |p: f64| p + (2.0 * p).cos() / 2.0;
        let (a, b, c) = (-0.75 * std::f64::consts::PI, split, 0.25 * std::f64::consts::PI);
        let frac = (prim(b) - prim(a)) / (prim(c) - prim(a));
        let sd = (n as f64 * frac * (1.0 - frac)).sqrt();
        assert!((low - n as f64 * frac).abs() < 4.0 * sd, "{low} vs {}", n as f64 * frac);
    }
}
