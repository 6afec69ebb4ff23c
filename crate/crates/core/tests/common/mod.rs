//! Exact rational oracles shared by the integration tests.
#![allow(dead_code)]

use nalgebra::DVector;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type Q = BigRational;

pub fn q(v: i64) -> Q {
    Q::from_integer(BigInt::from(v))
}

/// Reduced row echelon form in place; returns the pivot columns.
pub fn rref(m: &mut [Vec<Q>]) -> Vec<usize> {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let inv = Q::one() / m[r][c].clone();
        for x in m[r].iter_mut() {
            *x *= inv.clone();
        }
        for i in 0..rows {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for j in 0..cols {
                    let sub = f.clone() * m[r][j].clone();
                    m[i][j] -= sub;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank_exact(m: &[Vec<Q>]) -> usize {
    rref(&mut m.to_vec()).len()
}

/// Basis of `{x : M x = 0}` for an `rows × cols` matrix.
pub fn null_space_exact(m: &[Vec<Q>], cols: usize) -> Vec<Vec<Q>> {
    let mut a = m.to_vec();
    let pivots = rref(&mut a);
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut x = vec![Q::zero(); cols];
            x[f] = Q::one();
            for (r, &p) in pivots.iter().enumerate() {
                x[p] = -a[r][f].clone();
            }
            x
        })
        .collect()
}

fn mat_vec(g: &[Vec<Q>], y: &[Q]) -> Vec<Q> {
    g.iter()
        .map(|row| {
            row.iter()
                .zip(y)
                .fold(Q::zero(), |acc, (a, b)| acc + a.clone() * b.clone())
        })
        .collect()
}

/// Extreme rays of `{G y : y ∈ Qᵏ} ∩ Q^p_{≥0}` found by enumerating the
/// zero patterns of the image: a pattern cutting the column space down to
/// one dimension yields a ray when its generator has a constant sign.
pub fn orthant_section_rays(g: &[Vec<Q>]) -> Vec<Vec<Q>> {
    let p = g.len();
    let k = g.first().map_or(0, Vec::len);
    // Keep an independent set of columns so that y ↦ G y is injective.
    let t: Vec<Vec<Q>> = (0..k)
        .map(|c| g.iter().map(|row| row[c].clone()).collect())
        .collect();
    let mut basis_cols: Vec<usize> = Vec::new();
    for c in 0..k {
        let mut trial: Vec<Vec<Q>> = basis_cols.iter().map(|&b| t[b].clone()).collect();
        trial.push(t[c].clone());
        if rank_exact(&trial) == trial.len() {
            basis_cols.push(c);
        }
    }
    let k = basis_cols.len();
    if k == 0 {
        return Vec::new();
    }
    let g: Vec<Vec<Q>> = g
        .iter()
        .map(|row| basis_cols.iter().map(|&c| row[c].clone()).collect())
        .collect();

    let mut rays: Vec<Vec<Q>> = Vec::new();
    for mask in 0u32..(1 << p) {
        let sel: Vec<Vec<Q>> = (0..p)
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| g[i].clone())
            .collect();
        if sel.len() + 1 < k {
            continue;
        }
        let ns = if sel.is_empty() {
            (0..k)
                .map(|i| {
                    let mut e = vec![Q::zero(); k];
                    e[i] = Q::one();
                    e
                })
                .collect()
        } else {
            null_space_exact(&sel, k)
        };
        if ns.len() != 1 {
            continue;
        }
        let z = mat_vec(&g, &ns[0]);
        let z = if z.iter().all(|x| !x.is_negative()) {
            z
        } else if z.iter().all(|x| !x.is_positive()) {
            z.into_iter().map(|x| -x).collect()
        } else {
            continue;
        };
        let lead = z
            .iter()
            .find(|x| !x.is_zero())
            .cloned()
            .expect("injective map");
        let z: Vec<Q> = z.into_iter().map(|x| x / lead.clone()).collect();
        if !rays.contains(&z) {
            rays.push(z);
        }
    }
    rays
}

/// Integer star vectors to rationals.
pub fn to_q(v: &[i64]) -> Vec<Q> {
    v.iter().map(|&x| q(x)).collect()
}

/// Exactly: do the vectors admit `Σ a_i v_i = 0` with every `a_i > 0`?
pub fn has_strict_positive_dependence(vs: &[Vec<i64>]) -> bool {
    let n = vs.len();
    let d = vs[0].len();
    let v: Vec<Vec<Q>> = (0..d)
        .map(|r| vs.iter().map(|x| q(x[r])).collect())
        .collect();
    let kernel = null_space_exact(&v, n);
    if kernel.is_empty() {
        return false;
    }
    let g: Vec<Vec<Q>> = (0..n)
        .map(|i| kernel.iter().map(|k| k[i].clone()).collect())
        .collect();
    let rays = orthant_section_rays(&g);
    (0..n).all(|i| rays.iter().any(|r| r[i].is_positive()))
}

/// Exactly: does the local system `⟨v_i, v̇_i⟩ = 0`,
/// `⟨v_i − v_j, v̇_i − v̇_j⟩ ≥ 0` admit a solution with one strict pair?
pub fn has_effective_local_expansion(vs: &[Vec<i64>]) -> bool {
    let n = vs.len();
    let d = vs[0].len();
    let perps: Vec<Vec<Vec<Q>>> = vs.iter().map(|v| null_space_exact(&[to_q(v)], d)).collect();
    let offsets: Vec<usize> = perps
        .iter()
        .scan(0, |acc, p| {
            let o = *acc;
            *acc += p.len();
            Some(o)
        })
        .collect();
    let k: usize = perps.iter().map(Vec::len).sum();
    let dot = |a: &[Q], b: &[Q]| {
        a.iter()
            .zip(b)
            .fold(Q::zero(), |acc, (x, y)| acc + x.clone() * y.clone())
    };
    let mut g = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let diff: Vec<Q> = (0..d).map(|t| q(vs[i][t] - vs[j][t])).collect();
            let mut row = vec![Q::zero(); k];
            for (t, b) in perps[i].iter().enumerate() {
                row[offsets[i] + t] += dot(&diff, b);
            }
            for (t, b) in perps[j].iter().enumerate() {
                row[offsets[j] + t] -= dot(&diff, b);
            }
            g.push(row);
        }
    }
    !g.is_empty() && !orthant_section_rays(&g).is_empty()
}

/// Exact rank of an integer matrix given as rows.
pub fn rank_of_integer_rows(rows: &[Vec<i64>]) -> usize {
    rank_exact(&rows.iter().map(|r| to_q(r)).collect::<Vec<_>>())
}

pub fn dvec(v: &[i64]) -> DVector<f64> {
    DVector::from_iterator(v.len(), v.iter().map(|&x| x as f64))
}

/// Angle between two vectors in radians.
pub fn angle(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let c = a.dot(b) / (a.norm() * b.norm());
    // Well conditioned near zero, unlike acos.
    let s = (a / a.norm() - b / b.norm()).norm();
    if c > 0.0 {
        2.0 * (s / 2.0).asin()
    } else {
        c.clamp(-1.0, 1.0).acos()
    }
}
