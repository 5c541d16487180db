//! Classical root systems `A_{n-1}`, `B_n`, `D_n`, their Weyl chambers and
//! Weyl groups realized as signed permutations.
//!
//! Coordinates always live in `R^n`. Roots are stored unnormalized
//! (`e_i - e_j`, `e_i + e_j`, `e_i`), which is the normalization used by the
//! conditioned drift `grad h / h`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on the number of group elements `enumerate_group` will visit.
pub const DEFAULT_GROUP_CAP: u128 = 20_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    A,
    B,
    D,
}

impl Family {
    pub fn letter(self) -> char {
        match self {
            Family::A => 'A',
            Family::B => 'B',
            Family::D => 'D',
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "A" | "a" => Ok(Family::A),
            "B" | "b" | "C" | "c" => Ok(Family::B),
            "D" | "d" => Ok(Family::D),
            other => Err(Error::InvalidInput(format!("unknown family {other:?}"))),
        }
    }
}

/// A root as a linear functional on `R^n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Root {
    /// `e_i - e_j`
    Diff(usize, usize),
    /// `e_i + e_j`
    Sum(usize, usize),
    /// `e_i`
    Unit(usize),
}

impl Root {
    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        match *self {
            Root::Diff(i, j) => x[i] - x[j],
            Root::Sum(i, j) => x[i] + x[j],
            Root::Unit(i) => x[i],
        }
    }

    #[inline]
    pub fn eval_i64(&self, x: &[i64]) -> i64 {
        match *self {
            Root::Diff(i, j) => x[i] - x[j],
            Root::Sum(i, j) => x[i] + x[j],
            Root::Unit(i) => x[i],
        }
    }

    pub fn norm_sq(&self) -> f64 {
        match self {
            Root::Unit(_) => 1.0,
            _ => 2.0,
        }
    }

    /// Nonzero coordinates as `(index, coefficient)` pairs.
    pub fn coefficients(&self) -> Vec<(usize, i64)> {
        match *self {
            Root::Diff(i, j) => vec![(i, 1), (j, -1)],
            Root::Sum(i, j) => vec![(i, 1), (j, 1)],
            Root::Unit(i) => vec![(i, 1)],
        }
    }

    pub fn to_vector(&self, n: usize) -> Vec<f64> {
        let mut v = vec![0.0; n];
        for (i, c) in self.coefficients() {
            v[i] = c as f64;
        }
        v
    }

    /// Adds `scale * alpha` into `out`.
    #[inline]
    pub fn add_scaled(&self, scale: f64, out: &mut [f64]) {
        match *self {
            Root::Diff(i, j) => {
                out[i] += scale;
                out[j] -= scale;
            }
            Root::Sum(i, j) => {
                out[i] += scale;
                out[j] += scale;
            }
            Root::Unit(i) => out[i] += scale,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootSystem {
    family: Family,
    rank: usize,
    positive_roots: Vec<Root>,
    simple_roots: Vec<Root>,
}

impl RootSystem {
    /// Builds the root system of the given family acting on `R^n`.
    ///
    /// `A` is accepted for `n >= 1` (`n = 1` is the trivial group), `B` for
    /// `n >= 1` and `D` for `n >= 2`.
    pub fn new(family: Family, n: usize) -> Result<Self> {
        let unsupported = |reason| Error::UnsupportedRank {
            family: family.letter(),
            rank: n,
            reason,
        };
        if n == 0 {
            return Err(unsupported("rank must be at least 1"));
        }
        if family == Family::D && n < 2 {
            return Err(unsupported("D requires n >= 2"));
        }

        let mut positive_roots = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                positive_roots.push(Root::Diff(i, j));
                if family != Family::A {
                    positive_roots.push(Root::Sum(i, j));
                }
            }
            if family == Family::B {
                positive_roots.push(Root::Unit(i));
            }
        }

        let mut simple_roots: Vec<Root> = (0..n.saturating_sub(1)).map(|i| Root::Diff(i, i + 1)).collect();
        match family {
            Family::A => {}
            Family::B => simple_roots.push(Root::Unit(n - 1)),
            Family::D => simple_roots.push(Root::Sum(n - 2, n - 1)),
        }

        Ok(Self {
            family,
            rank: n,
            positive_roots,
            simple_roots,
        })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn positive_roots(&self) -> &[Root] {
        &self.positive_roots
    }

    pub fn simple_roots(&self) -> &[Root] {
        &self.simple_roots
    }

    pub fn num_positive_roots(&self) -> usize {
        self.positive_roots.len()
    }

    /// `n!`, `2^n n!` or `2^{n-1} n!`. Saturates at `u128::MAX`.
    pub fn group_order(&self) -> u128 {
        let n = self.rank as u32;
        let fact = (1..=self.rank as u128).try_fold(1u128, |acc, k| acc.checked_mul(k));
        let pow = match self.family {
            Family::A => Some(1u128),
            Family::B => 2u128.checked_pow(n),
            Family::D => 2u128.checked_pow(n - 1),
        };
        match (fact, pow) {
            (Some(f), Some(p)) => f.saturating_mul(p),
            _ => u128::MAX,
        }
    }

    /// `(2 pi)^m`, the factor relating `h` to the leading term of the Weyl
    /// denominator near the identity.
    pub fn delta_prime_scale(&self) -> f64 {
        (2.0 * PI).powi(self.num_positive_roots() as i32)
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.rank {
            return Err(Error::DimensionMismatch {
                expected: self.rank,
                got: len,
            });
        }
        Ok(())
    }

    /// Closed (`strict = false`) or open chamber membership, tested on the
    /// simple roots.
    pub fn contains(&self, x: &[f64], strict: bool) -> Result<bool> {
        self.check_dim(x.len())?;
        Ok(self.contains_unchecked(x, strict))
    }

    #[inline]
    pub(crate) fn contains_unchecked(&self, x: &[f64], strict: bool) -> bool {
        self.simple_roots.iter().all(|r| {
            let v = r.eval(x);
            if strict {
                v > 0.0
            } else {
                v >= 0.0
            }
        })
    }

    /// Product of all positive roots evaluated at `x`.
    pub fn h(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.rank, "h: dimension mismatch");
        self.positive_roots.iter().map(|r| r.eval(x)).product()
    }

    /// `ln |h(x)|`, usable far from the origin where `h` overflows.
    pub fn ln_abs_h(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.rank, "h: dimension mismatch");
        self.positive_roots.iter().map(|r| r.eval(x).abs().ln()).sum()
    }

    /// Euclidean distance from `x` to the nearest reflecting hyperplane.
    #[inline]
    pub fn distance_to_walls(&self, x: &[f64]) -> f64 {
        self.positive_roots
            .iter()
            .map(|r| r.eval(x).abs() / r.norm_sq().sqrt())
            .fold(f64::INFINITY, f64::min)
    }

    /// The identity element of the group.
    pub fn identity(&self) -> GroupElement {
        GroupElement::identity(self.rank)
    }

    /// Maps an arbitrary vector to its representative in the closed chamber.
    pub fn canonicalize(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x.len())?;
        let mut y: Vec<f64> = match self.family {
            Family::A => x.to_vec(),
            Family::B | Family::D => x.iter().map(|v| v.abs()).collect(),
        };
        y.sort_by(|a, b| b.partial_cmp(a).expect("NaN coordinate"));
        if self.family == Family::D {
            let negatives = x.iter().filter(|v| **v < 0.0).count();
            if negatives % 2 == 1 {
                let last = y.len() - 1;
                y[last] = -y[last];
            }
        }
        Ok(y)
    }

    /// Enumerates the Weyl group with the default cap.
    pub fn enumerate_group(&self) -> Result<GroupIter> {
        self.enumerate_group_capped(DEFAULT_GROUP_CAP)
    }

    pub fn enumerate_group_capped(&self, cap: u128) -> Result<GroupIter> {
        let order = self.group_order();
        if order > cap {
            return Err(Error::GroupTooLarge { order, cap });
        }
        Ok(GroupIter::new(self.family, self.rank))
    }
}

/// A point of the closed chamber.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChamberPoint(Vec<f64>);

impl ChamberPoint {
    pub fn new(rs: &RootSystem, coords: Vec<f64>) -> Result<Self> {
        if !rs.contains(&coords, false)? {
            return Err(Error::OutsideChamber(format!("{coords:?}")));
        }
        Ok(Self(coords))
    }

    pub fn is_interior(&self, rs: &RootSystem) -> bool {
        rs.contains_unchecked(&self.0, true)
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for ChamberPoint {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// A signed permutation acting by `w(x)_i = signs[i] * x[perm[i]]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GroupElement {
    perm: Vec<usize>,
    signs: Vec<i8>,
    sign: i8,
}

impl GroupElement {
    pub fn identity(n: usize) -> Self {
        Self {
            perm: (0..n).collect(),
            signs: vec![1; n],
            sign: 1,
        }
    }

    /// Builds an element from a permutation and coordinate signs.
    pub fn new(perm: Vec<usize>, signs: Vec<i8>) -> Result<Self> {
        let n = perm.len();
        if signs.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: signs.len(),
            });
        }
        let mut seen = vec![false; n];
        for &p in &perm {
            if p >= n || seen[p] {
                return Err(Error::InvalidInput(format!("{perm:?} is not a permutation")));
            }
            seen[p] = true;
        }
        if signs.iter().any(|s| *s != 1 && *s != -1) {
            return Err(Error::InvalidInput("signs must be +1 or -1".into()));
        }
        let sign = permutation_parity(&perm) * signs.iter().product::<i8>();
        Ok(Self { perm, signs, sign })
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    pub fn coordinate_signs(&self) -> &[i8] {
        &self.signs
    }

    /// Determinant of the action, `+1` or `-1`.
    pub fn sign(&self) -> i8 {
        self.sign
    }

    pub fn is_identity(&self) -> bool {
        self.perm.iter().enumerate().all(|(i, p)| i == *p) && self.signs.iter().all(|s| *s == 1)
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        self.apply_into(x, &mut out);
        out
    }

    #[inline]
    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.perm.len());
        for ((o, &p), &s) in out.iter_mut().zip(&self.perm).zip(&self.signs) {
            *o = s as f64 * x[p];
        }
    }

    pub fn apply_i64(&self, x: &[i64]) -> Vec<i64> {
        self.perm
            .iter()
            .zip(&self.signs)
            .map(|(&p, &s)| s as i64 * x[p])
            .collect()
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &GroupElement) -> GroupElement {
        let perm: Vec<usize> = self.perm.iter().map(|&p| other.perm[p]).collect();
        let signs: Vec<i8> = self
            .perm
            .iter()
            .zip(&self.signs)
            .map(|(&p, &s)| s * other.signs[p])
            .collect();
        GroupElement {
            perm,
            signs,
            sign: self.sign * other.sign,
        }
    }

    pub fn inverse(&self) -> GroupElement {
        let n = self.perm.len();
        let mut perm = vec![0; n];
        let mut signs = vec![1; n];
        for (i, &p) in self.perm.iter().enumerate() {
            perm[p] = i;
            signs[p] = self.signs[i];
        }
        GroupElement {
            perm,
            signs,
            sign: self.sign,
        }
    }

    /// Whether the element belongs to the Weyl group of `family`.
    pub fn belongs_to(&self, family: Family) -> bool {
        let negatives = self.signs.iter().filter(|s| **s < 0).count();
        match family {
            Family::A => negatives == 0,
            Family::B => true,
            Family::D => negatives % 2 == 0,
        }
    }
}

fn permutation_parity(perm: &[usize]) -> i8 {
    let mut inversions = 0usize;
    for i in 0..perm.len() {
        for j in i + 1..perm.len() {
            if perm[i] > perm[j] {
                inversions += 1;
            }
        }
    }
    if inversions.is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// Iterator over all elements of a classical Weyl group.
///
/// Permutations are visited in lexicographic order; for each permutation the
/// admissible sign masks are visited in increasing order.
pub struct GroupIter {
    family: Family,
    perm: Option<Vec<usize>>,
    parity: i8,
    mask: u64,
    mask_end: u64,
}

impl GroupIter {
    fn new(family: Family, n: usize) -> Self {
        let mask_end = match family {
            Family::A => 1,
            Family::B | Family::D => 1u64 << n,
        };
        Self {
            family,
            perm: Some((0..n).collect()),
            parity: 1,
            mask: 0,
            mask_end,
        }
    }
}

impl Iterator for GroupIter {
    type Item = GroupElement;

    fn next(&mut self) -> Option<GroupElement> {
        loop {
            let perm = self.perm.as_mut()?;
            if self.mask >= self.mask_end {
                if !next_permutation(perm) {
                    self.perm = None;
                    return None;
                }
                self.parity = permutation_parity(perm);
                self.mask = 0;
                continue;
            }
            let mask = self.mask;
            self.mask += 1;
            if self.family == Family::D && mask.count_ones() % 2 == 1 {
                continue;
            }
            let n = perm.len();
            let signs: Vec<i8> = (0..n).map(|i| if mask >> i & 1 == 1 { -1 } else { 1 }).collect();
            let flips = if mask.count_ones().is_multiple_of(2) { 1 } else { -1 };
            return Some(GroupElement {
                perm: perm.clone(),
                signs,
                sign: self.parity * flips,
            });
        }
    }
}

fn next_permutation(p: &mut [usize]) -> bool {
    if p.len() < 2 {
        return false;
    }
    let mut i = p.len() - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = p.len() - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}
