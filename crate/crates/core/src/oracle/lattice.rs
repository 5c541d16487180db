//! Exact counts of lattice walks that stay inside a chamber.

use std::collections::HashMap;

use num_bigint::{BigInt, BigUint};
use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rootsys::RootSystem;

pub const MAX_STEPS: usize = 30;

/// A finite set of integer steps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StepSet {
    steps: Vec<Vec<i64>>,
}

impl StepSet {
    pub fn new(steps: Vec<Vec<i64>>) -> Result<Self> {
        let dim = steps.first().map(Vec::len).unwrap_or(0);
        if steps.is_empty() || steps.iter().any(|s| s.len() != dim) {
            return Err(Error::InvalidInput(
                "steps must be non-empty and of equal length".into(),
            ));
        }
        let mut steps = steps;
        steps.sort();
        steps.dedup();
        Ok(Self { steps })
    }

    /// `{±e_i}`.
    pub fn unit(n: usize) -> Self {
        let mut steps = Vec::with_capacity(2 * n);
        for i in 0..n {
            for s in [1, -1] {
                let mut v = vec![0; n];
                v[i] = s;
                steps.push(v);
            }
        }
        Self::new(steps).expect("n >= 1")
    }

    /// `{±e_i} ∪ {±e_i ± e_j}`.
    pub fn unit_and_diagonal(n: usize) -> Self {
        let mut steps = Self::unit(n).steps;
        for i in 0..n {
            for j in i + 1..n {
                for (a, b) in [(1, 1), (1, -1), (-1, 1), (-1, -1)] {
                    let mut v = vec![0; n];
                    v[i] = a;
                    v[j] = b;
                    steps.push(v);
                }
            }
        }
        Self::new(steps).expect("n >= 1")
    }

    pub fn steps(&self) -> &[Vec<i64>] {
        &self.steps
    }

    pub fn dim(&self) -> usize {
        self.steps[0].len()
    }

    /// Every `w(s)` is again a step.
    pub fn check_symmetric(&self, rs: &RootSystem) -> Result<()> {
        if self.dim() != rs.rank() {
            return Err(Error::DimensionMismatch {
                expected: rs.rank(),
                got: self.dim(),
            });
        }
        for w in rs.enumerate_group()? {
            for s in &self.steps {
                if self.steps.binary_search(&w.apply_i64(s)).is_err() {
                    return Err(Error::AsymmetricStepSet);
                }
            }
        }
        Ok(())
    }

    /// No step changes any root value by more than one, so no walk can
    /// cross a wall without landing on it.
    pub fn check_reflectable(&self, rs: &RootSystem) -> Result<()> {
        self.check_symmetric(rs)?;
        for s in &self.steps {
            if rs.positive_roots().iter().any(|r| r.eval_i64(s).abs() > 1) {
                return Err(Error::NonReflectable(s.clone()));
            }
        }
        Ok(())
    }
}

fn inside(rs: &RootSystem, x: &[i64]) -> bool {
    rs.simple_roots().iter().all(|r| r.eval_i64(x) > 0)
}

fn check_points(rs: &RootSystem, steps: &StepSet, pts: &[&[i64]], k: usize) -> Result<()> {
    for p in pts {
        if p.len() != rs.rank() {
            return Err(Error::DimensionMismatch {
                expected: rs.rank(),
                got: p.len(),
            });
        }
    }
    if steps.dim() != rs.rank() {
        return Err(Error::DimensionMismatch {
            expected: rs.rank(),
            got: steps.dim(),
        });
    }
    if k > MAX_STEPS {
        return Err(Error::CapExceeded {
            what: "walk length",
            value: k,
            cap: MAX_STEPS,
        });
    }
    Ok(())
}

fn step_layer<F: Fn(&[i64]) -> bool>(
    layer: &HashMap<Vec<i64>, BigUint>,
    steps: &[Vec<i64>],
    sign: i64,
    keep: F,
) -> HashMap<Vec<i64>, BigUint> {
    let mut next: HashMap<Vec<i64>, BigUint> = HashMap::with_capacity(layer.len() * 2);
    for (x, c) in layer {
        for s in steps {
            let y: Vec<i64> = x.iter().zip(s).map(|(a, b)| a + sign * b).collect();
            if keep(&y) {
                *next.entry(y).or_default() += c;
            }
        }
    }
    next
}

/// Number of `k`-step walks from `start` to `end` that stay in the open
/// chamber throughout, by dynamic programming over positions.
pub fn lattice_walk_dp(rs: &RootSystem, start: &[i64], end: &[i64], k: usize, steps: &StepSet) -> Result<BigUint> {
    check_points(rs, steps, &[start, end], k)?;
    if !inside(rs, start) || !inside(rs, end) {
        return Ok(BigUint::zero());
    }
    let mut layer = HashMap::from([(start.to_vec(), BigUint::from(1u32))]);
    for _ in 0..k {
        layer = step_layer(&layer, steps.steps(), 1, |y| inside(rs, y));
    }
    Ok(layer.remove(end).unwrap_or_default())
}

/// The same count as a signed sum over the group of unconstrained counts,
/// `sum_w sgn(w) #{walks w(start) -> end}`. Requires a reflectable step set.
pub fn lattice_walk_reflection(
    rs: &RootSystem,
    start: &[i64],
    end: &[i64],
    k: usize,
    steps: &StepSet,
) -> Result<BigUint> {
    check_points(rs, steps, &[start, end], k)?;
    steps.check_reflectable(rs)?;
    if !inside(rs, end) {
        return Ok(BigUint::zero());
    }
    // Walks a -> end with steps S are walks end -> a with steps -S.
    let mut layer = HashMap::from([(end.to_vec(), BigUint::from(1u32))]);
    for _ in 0..k {
        layer = step_layer(&layer, steps.steps(), -1, |_| true);
    }
    let mut total = BigInt::zero();
    for w in rs.enumerate_group()? {
        if let Some(c) = layer.get(&w.apply_i64(start)) {
            let c = BigInt::from(c.clone());
            if w.sign() > 0 {
                total += c;
            } else {
                total -= c;
            }
        }
    }
    if total.is_negative() {
        return Err(Error::Numeric(format!("negative reflection count {total}")));
    }
    Ok(total.to_biguint().expect("non-negative"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rootsys::Family;

    fn rs(f: Family, n: usize) -> RootSystem {
        RootSystem::new(f, n).unwrap()
    }

    fn big(v: u32) -> BigUint {
        BigUint::from(v)
    }

    #[test]
    fn two_step_return() {
        // Of the four two-step loops at (1,0), the two that move x2 up first
        // or x1 down first touch x1 = x2.
        let r = rs(Family::A, 2);
        let s = StepSet::unit(2);
        assert_eq!(lattice_walk_dp(&r, &[1, 0], &[1, 0], 2, &s).unwrap(), big(2));
        assert_eq!(lattice_walk_reflection(&r, &[1, 0], &[1, 0], 2, &s).unwrap(), big(2));
    }

    #[test]
    fn trivial_counts() {
        let r = rs(Family::A, 2);
        let s = StepSet::unit(2);
        assert_eq!(lattice_walk_dp(&r, &[3, 1], &[3, 1], 0, &s).unwrap(), big(1));
        assert_eq!(lattice_walk_dp(&r, &[3, 1], &[0, 1], 4, &s).unwrap(), big(0));
        assert_eq!(lattice_walk_reflection(&r, &[2, 2], &[3, 1], 4, &s).unwrap(), big(0));
    }

    #[test]
    fn ballot_numbers() {
        // Walks on {1, 2, ...} from 1 back to 1 in 2k steps: Catalan numbers.
        let r = rs(Family::B, 1);
        let s = StepSet::unit(1);
        let catalan = [1u32, 1, 2, 5, 14, 42];
        for (k, c) in catalan.iter().enumerate() {
            assert_eq!(lattice_walk_dp(&r, &[1], &[1], 2 * k, &s).unwrap(), big(*c));
        }
        assert_eq!(
            lattice_walk_dp(&r, &[2], &[2], 4, &s).unwrap(),
            lattice_walk_reflection(&r, &[2], &[2], 4, &s).unwrap()
        );
    }

    #[test]
    fn board_agreement() {
        let r = rs(Family::A, 2);
        let s = StepSet::unit(2);
        let board: Vec<[i64; 2]> = vec![[1, 0], [2, 0], [2, 1], [3, 0], [3, 1]];
        for a in &board {
            for b in &board {
                for k in 0..=8 {
                    assert_eq!(
                        lattice_walk_dp(&r, a, b, k, &s).unwrap(),
                        lattice_walk_reflection(&r, a, b, k, &s).unwrap()
                    );
                }
            }
        }
    }

    #[test]
    fn step_set_checks() {
        let r = rs(Family::B, 2);
        assert!(StepSet::unit(2).check_reflectable(&r).is_ok());
        let diag = StepSet::unit_and_diagonal(2);
        assert!(diag.check_symmetric(&r).is_ok());
        assert!(matches!(diag.check_reflectable(&r), Err(Error::NonReflectable(_))));
        let lopsided = StepSet::new(vec![vec![1, 0], vec![-1, 0]]).unwrap();
        assert_eq!(
            lopsided.check_symmetric(&rs(Family::A, 2)),
            Err(Error::AsymmetricStepSet)
        );
        assert!(matches!(
            lattice_walk_dp(&rs(Family::A, 2), &[1, 0], &[1, 0], 31, &StepSet::unit(2)),
            Err(Error::CapExceeded { .. })
        ));
    }
}
