//! Double description: extreme rays of `{c ∈ R^f : A c ≥ 0}`.
//!
//! Constraints are inserted one at a time. The running cone is kept as a
//! lineality basis plus extreme rays, each ray carrying the set of
//! processed constraints it makes tight. Two rays on opposite sides of a
//! new hyperplane are combined only when they span a 2-face, checked by
//! the rank of their common tight set.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Largest flex dimension handled by the ray enumeration.
pub const MAX_DD_DIMENSION: usize = 6;

#[derive(Debug, Clone)]
struct Ray {
    v: DVector<f64>,
    tight: Vec<usize>,
}

fn rank_of_rows(a: &DMatrix<f64>, idx: &[usize], tol: f64) -> usize {
    if idx.is_empty() {
        return 0;
    }
    let f = a.ncols();
    let sub = DMatrix::from_fn(idx.len(), f, |r, c| a[(idx[r], c)]);
    let sv = sub.singular_values();
    let smax = sv.max();
    if smax <= tol {
        return 0;
    }
    sv.iter().filter(|&&s| s > tol.max(smax * 1e-10)).count()
}

fn intersect(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// Minimal generating set of the pointed cone `{c : A c ≥ 0}` as unit
/// vectors in lexicographically decreasing order. Rows of `halfspaces`
/// should be normalized; `tol` decides when a value counts as zero.
pub fn extremal_rays(halfspaces: &DMatrix<f64>, f: usize, tol: f64) -> Result<Vec<DVector<f64>>> {
    if f > MAX_DD_DIMENSION {
        return Err(Error::FlexDimensionTooLarge(f));
    }
    if halfspaces.ncols() != f {
        return Err(Error::DimensionMismatch(format!(
            "halfspaces have {} columns, expected {f}",
            halfspaces.ncols()
        )));
    }
    let mut lineality: Vec<DVector<f64>> = (0..f)
        .map(|i| {
            let mut e = DVector::zeros(f);
            e[i] = 1.0;
            e
        })
        .collect();
    let mut rays: Vec<Ray> = Vec::new();

    for k in 0..halfspaces.nrows() {
        let a = halfspaces.row(k).transpose();
        if a.norm() <= tol {
            continue;
        }

        let pivot = lineality
            .iter()
            .enumerate()
            .map(|(i, l)| (i, a.dot(l)))
            .filter(|(_, v)| v.abs() > tol)
            .max_by(|x, y| x.1.abs().total_cmp(&y.1.abs()));

        if let Some((pi, pv)) = pivot {
            let mut l_star = lineality.remove(pi);
            let mut pv = pv;
            if pv < 0.0 {
                l_star.neg_mut();
                pv = -pv;
            }
            for l in lineality.iter_mut() {
                let c = a.dot(l) / pv;
                l.axpy(-c, &l_star, 1.0);
            }
            for r in rays.iter_mut() {
                let c = a.dot(&r.v) / pv;
                r.v.axpy(-c, &l_star, 1.0);
                r.v.normalize_mut();
                r.tight.push(k);
            }
            let tight: Vec<usize> = (0..k).collect();
            rays.push(Ray {
                v: l_star.normalize(),
                tight,
            });
            continue;
        }

        let values: Vec<f64> = rays.iter().map(|r| a.dot(&r.v)).collect();
        let plus: Vec<usize> = (0..rays.len()).filter(|&i| values[i] > tol).collect();
        let minus: Vec<usize> = (0..rays.len()).filter(|&i| values[i] < -tol).collect();
        if minus.is_empty() {
            for (r, &v) in rays.iter_mut().zip(&values) {
                if v.abs() <= tol {
                    r.tight.push(k);
                }
            }
            continue;
        }

        let target_rank = f - lineality.len();
        let mut next: Vec<Ray> = Vec::new();
        for &p in &plus {
            for &m in &minus {
                let common = intersect(&rays[p].tight, &rays[m].tight);
                if target_rank < 2 || common.len() + 2 < target_rank {
                    continue;
                }
                if rank_of_rows(halfspaces, &common, tol) != target_rank - 2 {
                    continue;
                }
                let v = &rays[m].v * values[p] - &rays[p].v * values[m];
                let norm = v.norm();
                if norm <= tol {
                    continue;
                }
                let mut tight = common;
                tight.push(k);
                next.push(Ray { v: v / norm, tight });
            }
        }
        for (i, r) in rays.iter().enumerate() {
            if values[i] > tol {
                next.push(r.clone());
            } else if values[i].abs() <= tol {
                let mut r = r.clone();
                r.tight.push(k);
                next.push(r);
            }
        }
        rays = dedup(next, tol);
    }

    if !lineality.is_empty() {
        return Err(Error::NonPointedCone(lineality.len()));
    }
    let mut out: Vec<DVector<f64>> = dedup(rays, tol).into_iter().map(|r| r.v).collect();
    out.sort_by(|x, y| lex_cmp(y, x));
    Ok(out)
}

fn dedup(rays: Vec<Ray>, tol: f64) -> Vec<Ray> {
    let mut out: Vec<Ray> = Vec::with_capacity(rays.len());
    for r in rays {
        if let Some(existing) = out
            .iter_mut()
            .find(|o| (&o.v - &r.v).norm() < tol.max(1e-12) * 100.0)
        {
            let mut tight = existing.tight.clone();
            tight.extend(r.tight.iter().copied());
            tight.sort_unstable();
            tight.dedup();
            existing.tight = tight;
        } else {
            out.push(r);
        }
    }
    out
}

/// Lexicographic order with entries closer than 1e-9 treated as equal.
pub(crate) fn lex_cmp(x: &DVector<f64>, y: &DVector<f64>) -> Ordering {
    for (a, b) in x.iter().zip(y.iter()) {
        if (a - b).abs() > 1e-9 {
            return a.total_cmp(b);
        }
    }
    Ordering::Equal
}
