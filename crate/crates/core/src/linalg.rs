//! Dense SVD helpers: full right singular bases, numerical rank and
//! orthonormal bases of null spaces.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Singular values (descending) and the complete set of right singular
/// vectors (columns of `v`, one per column of the input).
pub struct FullSvd {
    pub singular_values: Vec<f64>,
    pub v: DMatrix<f64>,
}

/// SVD with a square right factor. Right vectors belonging to exactly
/// zero singular values are unreliable in a plain SVD, so those columns are
/// rebuilt as an orthonormal basis of the complement of the others.
pub fn full_svd(a: &DMatrix<f64>) -> FullSvd {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return FullSvd {
            singular_values: vec![0.0; n],
            v: DMatrix::identity(n, n),
        };
    }
    // Thin SVD of whichever orientation is tall: right vectors of `a`.
    let (sv, right) = if m >= n {
        let svd = a.clone().svd(false, true);
        let v_t = svd.v_t.expect("right singular vectors requested");
        (svd.singular_values, v_t.transpose())
    } else {
        let svd = a.transpose().svd(true, false);
        (
            svd.singular_values,
            svd.u.expect("left singular vectors requested"),
        )
    };
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&i, &j| sv[j].total_cmp(&sv[i]));
    let smax = order.first().map_or(0.0, |&i| sv[i]);
    let kept: Vec<usize> = order
        .iter()
        .copied()
        .filter(|&i| smax > 0.0 && sv[i] > smax * 1e-14)
        .collect();

    let mut singular_values: Vec<f64> = kept.iter().map(|&i| sv[i]).collect();
    singular_values.resize(n, 0.0);
    let mut v = DMatrix::zeros(n, n);
    for (c, &i) in kept.iter().enumerate() {
        v.set_column(c, &right.column(i));
    }
    let k = kept.len();
    if k < n {
        let vk = v.columns(0, k).into_owned();
        let projector = DMatrix::identity(n, n) - &vk * vk.transpose();
        let svd = projector.svd(true, false);
        let u = svd.u.expect("left singular vectors requested");
        let psv = svd.singular_values;
        let mut porder: Vec<usize> = (0..psv.len()).collect();
        porder.sort_by(|&i, &j| psv[j].total_cmp(&psv[i]));
        for (c, &i) in porder[..n - k].iter().enumerate() {
            v.set_column(k + c, &u.column(i));
        }
    }
    FullSvd { singular_values, v }
}

/// Numerical rank with threshold `tol · σ_max`. Fails when a relative
/// singular value falls within one decade of the threshold.
pub fn rank_of(singular_values: &[f64], tol: f64) -> Result<usize> {
    let smax = singular_values.iter().copied().fold(0.0, f64::max);
    if smax == 0.0 {
        return Ok(0);
    }
    let mut rank = 0;
    for &s in singular_values {
        let rel = s / smax;
        if rel > tol / 10.0 && rel < tol * 10.0 {
            return Err(Error::IllConditioned {
                value: rel,
                threshold: tol,
            });
        }
        if rel > tol {
            rank += 1;
        }
    }
    Ok(rank)
}

pub fn rank(a: &DMatrix<f64>, tol: f64) -> Result<usize> {
    rank_of(&full_svd(a).singular_values, tol)
}

/// Orthonormal basis (as columns) of `{x : A x = 0}` given the rank.
pub fn null_space_with_rank(a: &DMatrix<f64>, rank: usize) -> DMatrix<f64> {
    let svd = full_svd(a);
    let n = a.ncols();
    svd.v.columns(rank, n - rank).into_owned()
}

/// Orthonormal basis of the span of the given columns.
pub fn orthonormal_span(cols: &DMatrix<f64>, tol: f64) -> Result<DMatrix<f64>> {
    if cols.ncols() == 0 {
        return Ok(DMatrix::zeros(cols.nrows(), 0));
    }
    let svd = cols.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let sv = svd.singular_values;
    let r = rank_of(sv.as_slice(), tol)?;
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&i, &j| sv[j].total_cmp(&sv[i]));
    let basis: Vec<DVector<f64>> = order[..r]
        .iter()
        .map(|&i| u.column(i).into_owned())
        .collect();
    Ok(columns(cols.nrows(), &basis))
}

/// Stack vectors as the columns of a matrix with `rows` rows.
pub fn columns(rows: usize, vs: &[DVector<f64>]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(rows, vs.len());
    for (j, v) in vs.iter().enumerate() {
        m.set_column(j, v);
    }
    m
}

/// Moore–Penrose solve `x = A⁺ b` with relative cutoff `tol`.
pub fn pinv_solve(a: &DMatrix<f64>, b: &DVector<f64>, tol: f64) -> Result<DVector<f64>> {
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    if smax == 0.0 {
        return Ok(DVector::zeros(a.ncols()));
    }
    svd.solve(b, tol * smax)
        .map_err(|e| Error::NumericalFailure(e.to_string()))
}

/// Fixes the sign of a vector so that its largest-magnitude entry (first
/// one on ties) is positive.
pub fn normalize_sign(v: &mut DVector<f64>) {
    let mut best = 0.0f64;
    let mut sign = 1.0;
    for &x in v.iter() {
        if x.abs() > best * (1.0 + 1e-9) {
            best = x.abs();
            sign = x.signum();
        }
    }
    if sign < 0.0 {
        v.neg_mut();
    }
}
