//! Determinants and permanents of matrices given entrywise in log form.
//!
//! Each row, then each column, is divided by its largest magnitude before
//! factorization and the log of the scales is carried separately, so that
//! densities far in the Gaussian tail neither underflow nor overflow.

/// `sign * exp(ln_abs)`; `sign == 0` encodes an exact zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct SignedLog {
    pub sign: f64,
    pub ln_abs: f64,
}

impl SignedLog {
    pub const ZERO: SignedLog = SignedLog {
        sign: 0.0,
        ln_abs: f64::NEG_INFINITY,
    };

    pub fn from_value(v: f64) -> Self {
        if v == 0.0 {
            Self::ZERO
        } else {
            SignedLog {
                sign: v.signum(),
                ln_abs: v.abs().ln(),
            }
        }
    }

    pub fn positive(ln_abs: f64) -> Self {
        if ln_abs == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            SignedLog { sign: 1.0, ln_abs }
        }
    }

    pub fn value(self) -> f64 {
        if self.sign == 0.0 {
            0.0
        } else {
            self.sign * self.ln_abs.exp()
        }
    }

    /// `exp(a) + sign * exp(b)` for log-magnitudes `a`, `b`.
    pub fn combine(a: f64, b: f64, sign: f64) -> Self {
        if a == f64::NEG_INFINITY && b == f64::NEG_INFINITY {
            return Self::ZERO;
        }
        if sign > 0.0 {
            let m = a.max(b);
            return Self::positive(m + (-(a - b).abs()).exp().ln_1p());
        }
        if a == b {
            return Self::ZERO;
        }
        let (hi, lo, s) = if a > b { (a, b, 1.0) } else { (b, a, -1.0) };
        // ln(e^hi - e^lo) = hi + ln(1 - e^{lo-hi})
        SignedLog {
            sign: s,
            ln_abs: hi + (-(-(hi - lo)).exp_m1()).ln(),
        }
    }
}

/// Square matrix stored row-normalized with per-row log scales.
pub(crate) struct ScaledMatrix {
    n: usize,
    data: Vec<f64>,
    ln_scale: f64,
}

impl ScaledMatrix {
    pub fn from_entries<F: FnMut(usize, usize) -> SignedLog>(n: usize, mut entry: F) -> Self {
        let zero = || Self {
            n,
            data: vec![0.0; n * n],
            ln_scale: f64::NEG_INFINITY,
        };
        let mut cells: Vec<SignedLog> = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                cells.push(entry(i, j));
            }
        }
        let ln = |e: &SignedLog| if e.sign == 0.0 { f64::NEG_INFINITY } else { e.ln_abs };
        let mut ln_scale = 0.0;
        for i in 0..n {
            let m = cells[i * n..(i + 1) * n]
                .iter()
                .map(ln)
                .fold(f64::NEG_INFINITY, f64::max);
            if m == f64::NEG_INFINITY {
                // A zero row: the determinant and permanent both vanish.
                return zero();
            }
            ln_scale += m;
            cells[i * n..(i + 1) * n].iter_mut().for_each(|e| e.ln_abs -= m);
        }
        // Columns too, so that cancellation between rows of very different
        // size stays representable.
        for j in 0..n {
            let m = (0..n).map(|i| ln(&cells[i * n + j])).fold(f64::NEG_INFINITY, f64::max);
            if m == f64::NEG_INFINITY {
                return zero();
            }
            ln_scale += m;
            (0..n).for_each(|i| cells[i * n + j].ln_abs -= m);
        }
        let data = cells
            .iter()
            .map(|e| if e.sign == 0.0 { 0.0 } else { e.sign * e.ln_abs.exp() })
            .collect();
        Self { n, data, ln_scale }
    }

    /// Log of the product of row scales; the natural magnitude of the result.
    pub fn ln_scale(&self) -> f64 {
        self.ln_scale
    }

    /// Determinant of the row-normalized matrix by LU with partial pivoting.
    pub fn scaled_det(&self) -> f64 {
        if self.ln_scale == f64::NEG_INFINITY {
            return 0.0;
        }
        let n = self.n;
        let mut a = self.data.clone();
        let mut det = 1.0;
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, a[i * n + k].abs()))
                .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if pmax == 0.0 {
                return 0.0;
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                det = -det;
            }
            let pivot = a[k * n + k];
            det *= pivot;
            for i in k + 1..n {
                let factor = a[i * n + k] / pivot;
                if factor != 0.0 {
                    for j in k + 1..n {
                        a[i * n + j] -= factor * a[k * n + j];
                    }
                }
            }
        }
        det
    }

    /// Permanent of the row-normalized matrix by Ryser's formula with a Gray
    /// code over column subsets.
    pub fn scaled_permanent(&self) -> f64 {
        if self.ln_scale == f64::NEG_INFINITY {
            return 0.0;
        }
        let n = self.n;
        if n == 0 {
            return 1.0;
        }
        let mut row_sums = vec![0.0; n];
        let mut total = 0.0;
        let mut gray: u64 = 0;
        for k in 1u64..(1u64 << n) {
            let next = k ^ (k >> 1);
            let col = (gray ^ next).trailing_zeros() as usize;
            let sign = if next & (1 << col) != 0 { 1.0 } else { -1.0 };
            gray = next;
            for (i, s) in row_sums.iter_mut().enumerate() {
                *s += sign * self.data[i * n + col];
            }
            let prod: f64 = row_sums.iter().product();
            let parity = if (n as u32 - gray.count_ones()).is_multiple_of(2) {
                1.0
            } else {
                -1.0
            };
            total += parity * prod;
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plain(m: &[Vec<f64>]) -> ScaledMatrix {
        ScaledMatrix::from_entries(m.len(), |i, j| SignedLog::from_value(m[i][j]))
    }

    fn value(s: &ScaledMatrix, x: f64) -> f64 {
        x * s.ln_scale().exp()
    }

    #[test]
    fn det_and_permanent_small() {
        let m = vec![vec![1.0, 2.0], vec![3.0, 4.0]];
        let s = plain(&m);
        assert!((value(&s, s.scaled_det()) + 2.0).abs() < 1e-12);
        assert!((value(&s, s.scaled_permanent()) - 10.0).abs() < 1e-12);

        let m = vec![vec![2.0, -1.0, 0.5], vec![0.0, 3.0, 1.0], vec![1.0, 1.0, 1.0]];
        let s = plain(&m);
        // cofactor expansion
        let det = 2.0 * (3.0 - 1.0) - -(0.0 - 1.0) + 0.5 * (0.0 - 3.0);
        assert!((value(&s, s.scaled_det()) - det).abs() < 1e-12);
        let perm = 2.0 * (3.0 + 1.0) + -(0.0 + 1.0) + 0.5 * (0.0 + 3.0);
        assert!((value(&s, s.scaled_permanent()) - perm).abs() < 1e-12);
    }

    #[test]
    fn permanent_of_ones_is_factorial() {
        for n in 1..9 {
            let s = ScaledMatrix::from_entries(n, |_, _| SignedLog::from_value(1.0));
            let f: f64 = (1..=n).map(|k| k as f64).product();
            assert!((s.scaled_permanent() - f).abs() < 1e-9 * f);
        }
    }

    #[test]
    fn zero_row() {
        let s = plain(&[vec![0.0, 0.0], vec![1.0, 2.0]]);
        assert_eq!(s.scaled_det(), 0.0);
        assert_eq!(s.scaled_permanent(), 0.0);
    }

    #[test]
    fn combine_signs() {
        let d = SignedLog::combine(2f64.ln(), 5f64.ln(), -1.0);
        assert!((d.value() + 3.0).abs() < 1e-12);
        let s = SignedLog::combine(2f64.ln(), 5f64.ln(), 1.0);
        assert!((s.value() - 7.0).abs() < 1e-12);
        assert_eq!(SignedLog::combine(1.0, 1.0, -1.0), SignedLog::ZERO);
        let tiny = SignedLog::combine(0.0, -1e-12, -1.0);
        assert!((tiny.value() - 1e-12).abs() < 1e-22);
    }
}
