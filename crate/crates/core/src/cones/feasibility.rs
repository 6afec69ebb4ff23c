//! Phase-one simplex for `{x : A x = b, x ≥ l}` with Bland's rule.
//!
//! The tableau is generic over the scalar so the same routine runs in
//! floating point (with a zero tolerance) and in exact rationals (with a
//! zero tolerance of zero).

use std::ops::{Add, Div, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Zero tolerance of the floating tableau (rows are scaled to unit max-norm).
pub const FLOAT_TOL: f64 = 1e-9;

const MAX_PIVOTS: usize = 20_000;

/// Ordered field used by the tableau.
pub trait LpScalar:
    Clone
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn abs(&self) -> Self;
}

impl LpScalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
}

impl LpScalar for BigRational {
    fn zero() -> Self {
        <BigRational as Zero>::zero()
    }
    fn one() -> Self {
        BigRational::from_integer(BigInt::from(1))
    }
    fn abs(&self) -> Self {
        Signed::abs(self)
    }
}

/// Core routine on `A y = b, y ≥ 0`. Returns `None` when the phase-one
/// optimum exceeds `infeasible_above`.
fn phase_one<T: LpScalar>(
    rows: &[Vec<T>],
    rhs: &[T],
    eps: &T,
    infeasible_above: &T,
) -> Result<Option<Vec<T>>> {
    let m = rows.len();
    let n = rows.first().map_or(0, Vec::len);
    let width = n + m;
    let zero = T::zero();

    // Tableau rows: [A | I | b] with b ≥ 0.
    let mut tab: Vec<Vec<T>> = Vec::with_capacity(m);
    for (i, (row, b)) in rows.iter().zip(rhs).enumerate() {
        let flip = *b < zero;
        let mut t: Vec<T> = row
            .iter()
            .map(|x| if flip { -x.clone() } else { x.clone() })
            .collect();
        for k in 0..m {
            t.push(if k == i { T::one() } else { T::zero() });
        }
        t.push(if flip { -b.clone() } else { b.clone() });
        tab.push(t);
    }
    let mut basis: Vec<usize> = (n..n + m).collect();

    // Reduced costs of the phase-one objective Σ artificials.
    let mut cost: Vec<T> = vec![T::zero(); width + 1];
    for t in &tab {
        for j in 0..n {
            cost[j] = cost[j].clone() - t[j].clone();
        }
        cost[width] = cost[width].clone() - t[width].clone();
    }

    let neg_eps = -eps.clone();
    for _ in 0..MAX_PIVOTS {
        let Some(enter) = (0..width).find(|&j| cost[j] < neg_eps) else {
            let objective = -cost[width].clone();
            if objective > *infeasible_above {
                return Ok(None);
            }
            let mut y = vec![T::zero(); n];
            for (i, &bv) in basis.iter().enumerate() {
                if bv < n {
                    let v = tab[i][width].clone();
                    y[bv] = if v < zero { T::zero() } else { v };
                }
            }
            return Ok(Some(y));
        };

        let mut leave: Option<(usize, T)> = None;
        for i in 0..m {
            let a = &tab[i][enter];
            if *a > *eps {
                let ratio = tab[i][width].clone() / a.clone();
                let better = match &leave {
                    None => true,
                    Some((li, lr)) => ratio < *lr || (ratio == *lr && basis[i] < basis[*li]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
        }
        let Some((pr, _)) = leave else {
            return Err(Error::NumericalFailure(
                "phase-one objective unbounded below".into(),
            ));
        };

        let pivot = tab[pr][enter].clone();
        for v in tab[pr].iter_mut() {
            *v = v.clone() / pivot.clone();
        }
        let prow = tab[pr].clone();
        for (i, t) in tab.iter_mut().enumerate() {
            if i == pr {
                continue;
            }
            let f = t[enter].clone();
            if f != zero {
                for (v, p) in t.iter_mut().zip(&prow) {
                    *v = v.clone() - f.clone() * p.clone();
                }
            }
        }
        let f = cost[enter].clone();
        for (v, p) in cost.iter_mut().zip(&prow) {
            *v = v.clone() - f.clone() * p.clone();
        }
        basis[pr] = enter;
    }
    Err(Error::NumericalFailure(format!(
        "simplex exceeded {MAX_PIVOTS} pivots"
    )))
}

/// Exact feasibility of `{x : A x = b, x ≥ l}` over the rationals.
pub fn solve_exact(
    rows: &[Vec<BigRational>],
    rhs: &[BigRational],
    lower: &[BigRational],
) -> Result<Option<Vec<BigRational>>> {
    let shifted: Vec<BigRational> = rows
        .iter()
        .zip(rhs)
        .map(|(row, b)| {
            row.iter()
                .zip(lower)
                .fold(b.clone(), |acc, (a, l)| acc - a * l)
        })
        .collect();
    let zero = <BigRational as Zero>::zero();
    Ok(phase_one(rows, &shifted, &zero, &zero)?
        .map(|y| y.into_iter().zip(lower).map(|(v, l)| v + l).collect()))
}

/// `f64` to the exactly equal rational.
pub fn to_rational(x: f64) -> BigRational {
    BigRational::from_f64(x).expect("finite float")
}

/// A linear feasibility system `{x : A x = b, x ≥ l}`.
#[derive(Debug, Clone)]
pub struct FeasibilitySystem {
    pub equalities: DMatrix<f64>,
    pub rhs: DVector<f64>,
    pub lower_bounds: DVector<f64>,
}

impl FeasibilitySystem {
    pub fn new(
        equalities: DMatrix<f64>,
        rhs: DVector<f64>,
        lower_bounds: DVector<f64>,
    ) -> Result<Self> {
        if equalities.nrows() != rhs.len() || equalities.ncols() != lower_bounds.len() {
            return Err(Error::DimensionMismatch(format!(
                "system is {}x{} with {} right-hand sides and {} bounds",
                equalities.nrows(),
                equalities.ncols(),
                rhs.len(),
                lower_bounds.len()
            )));
        }
        Ok(FeasibilitySystem {
            equalities,
            rhs,
            lower_bounds,
        })
    }

    /// Floating solve, retried in exact arithmetic if the floating
    /// tableau fails or returns a point that does not check out.
    pub fn solve(&self) -> Result<Option<DVector<f64>>> {
        match self.solve_float() {
            Ok(r) => Ok(r),
            Err(Error::NumericalFailure(_)) => self.solve_exact().map(|r| {
                r.map(|x| {
                    DVector::from_iterator(
                        x.len(),
                        x.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)),
                    )
                })
            }),
            Err(e) => Err(e),
        }
    }

    pub fn solve_float(&self) -> Result<Option<DVector<f64>>> {
        let a = &self.equalities;
        let shifted = &self.rhs - a * &self.lower_bounds;
        let mut rows = Vec::with_capacity(a.nrows());
        let mut rhs = Vec::with_capacity(a.nrows());
        for i in 0..a.nrows() {
            let scale = a.row(i).amax().max(shifted[i].abs());
            if scale == 0.0 {
                continue;
            }
            rows.push(a.row(i).iter().map(|x| x / scale).collect::<Vec<_>>());
            rhs.push(shifted[i] / scale);
        }
        if rows.is_empty() {
            return Ok(Some(self.lower_bounds.clone()));
        }
        let bound = FLOAT_TOL * rows.len() as f64;
        let Some(y) = phase_one(&rows, &rhs, &FLOAT_TOL, &bound)? else {
            return Ok(None);
        };
        let x = DVector::from_vec(y) + &self.lower_bounds;
        let residual = (a * &x - &self.rhs).amax();
        let scale = 1.0 + a.amax() * x.amax() + self.rhs.amax();
        if residual > 1e-7 * scale {
            return Err(Error::NumericalFailure(format!(
                "feasible point has residual {residual:e}"
            )));
        }
        Ok(Some(x))
    }

    pub fn solve_exact(&self) -> Result<Option<Vec<BigRational>>> {
        let a = &self.equalities;
        let rows: Vec<Vec<BigRational>> = (0..a.nrows())
            .map(|i| a.row(i).iter().map(|&x| to_rational(x)).collect())
            .collect();
        let rhs: Vec<BigRational> = self.rhs.iter().map(|&x| to_rational(x)).collect();
        let lower: Vec<BigRational> = self.lower_bounds.iter().map(|&x| to_rational(x)).collect();
        solve_exact(&rows, &rhs, &lower)
    }
}

/// Convenience wrapper: feasibility of `{A x = b, x ≥ l}`.
pub fn solve_linear_feasibility(
    equalities: &DMatrix<f64>,
    rhs: &DVector<f64>,
    lower_bounds: &DVector<f64>,
) -> Result<Option<DVector<f64>>> {
    FeasibilitySystem::new(equalities.clone(), rhs.clone(), lower_bounds.clone())?.solve()
}
