//! Periodic rigidity matrix and the infinitesimal data derived from it.
//!
//! Motion vectors have `dn + d²` entries: the velocities of the `n` orbit
//! representatives (`d` entries each, orbit order) followed by the lattice
//! velocities `λ̇_1, …, λ̇_d` (generator by generator). Constraint rows are
//! gradients of `½‖p_b + Λw − p_a‖²`, so the row for a bar with realized
//! vector `e` reads `⟨e, ṗ_b + Λ̇w − ṗ_a⟩`.

use nalgebra::{DMatrix, DVector};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::framework::{PeriodicFramework, Placement};
use crate::io::vec_to_value;
use crate::linalg::{self, full_svd, normalize_sign, rank_of};

/// Relative rank threshold against the largest singular value.
pub const DEFAULT_RANK_TOL: f64 = 1e-9;

pub fn binomial2(d: usize) -> usize {
    d * d.saturating_sub(1) / 2
}

/// Gradient of `½‖p_b + Λw − p_a‖²` in the motion coordinates.
pub fn constraint_row(placement: &Placement, a: usize, b: usize, shift: &[i64]) -> DVector<f64> {
    let d = placement.lattice.nrows();
    let n = placement.positions.len();
    let s = placement.separation(a, b, shift);
    let mut row = DVector::zeros(d * n + d * d);
    for r in 0..d {
        row[d * a + r] -= s[r];
        row[d * b + r] += s[r];
    }
    for (c, &w) in shift.iter().enumerate() {
        if w != 0 {
            for r in 0..d {
                row[d * n + d * c + r] += s[r] * w as f64;
            }
        }
    }
    row
}

/// Rows are edge orbits, columns are motion coordinates.
#[derive(Debug, Clone)]
pub struct RigidityMatrix {
    matrix: DMatrix<f64>,
}

impl RigidityMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn nrows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn row(&self, k: usize) -> DVector<f64> {
        self.matrix.row(k).transpose()
    }

    /// Per-edge constraint values of a motion.
    pub fn apply(&self, motion: &DVector<f64>) -> DVector<f64> {
        &self.matrix * motion
    }
}

pub fn rigidity_matrix(fw: &PeriodicFramework) -> RigidityMatrix {
    let rows = fw.num_edges();
    let mut matrix = DMatrix::zeros(rows, fw.num_unknowns());
    for (k, e) in fw.graph().edge_orbits.iter().enumerate() {
        let row = constraint_row(fw.placement(), e.tail, e.head, &e.shift);
        matrix.set_row(k, &row.transpose());
    }
    RigidityMatrix { matrix }
}

/// Translations followed by infinitesimal rotations `S = E_ab − E_ba`,
/// `a < b`, acting on representatives and lattice alike.
pub fn trivial_motion_basis(fw: &PeriodicFramework) -> Vec<DVector<f64>> {
    let d = fw.dimension();
    let n = fw.num_orbits();
    let p = fw.placement();
    let mut basis = Vec::with_capacity(d + binomial2(d));
    for t in 0..d {
        let mut u = DVector::zeros(fw.num_unknowns());
        for i in 0..n {
            u[d * i + t] = 1.0;
        }
        basis.push(u);
    }
    for a in 0..d {
        for b in a + 1..d {
            let mut s = DMatrix::zeros(d, d);
            s[(a, b)] = 1.0;
            s[(b, a)] = -1.0;
            let mut u = DVector::zeros(fw.num_unknowns());
            for (i, pos) in p.positions.iter().enumerate() {
                u.rows_mut(d * i, d).copy_from(&(&s * pos));
            }
            let sl = &s * &p.lattice;
            u.rows_mut(d * n, d * d).copy_from_slice(sl.as_slice());
            basis.push(u);
        }
    }
    basis
}

#[derive(Debug, Clone)]
pub struct RigidityReport {
    pub rank: usize,
    pub trivial_basis: Vec<DVector<f64>>,
    /// Orthonormal, orthogonal to every trivial motion.
    pub flex_basis: Vec<DVector<f64>>,
    /// Orthonormal basis of the left null space (self-stresses).
    pub stress_basis: Vec<DVector<f64>>,
    pub dof: usize,
    pub tolerance_used: f64,
}

impl RigidityReport {
    pub fn stress_dim(&self) -> usize {
        self.stress_basis.len()
    }

    /// Flex basis as the columns of an `(dn+d²) × f` matrix.
    pub fn flex_matrix(&self) -> DMatrix<f64> {
        let rows = self
            .trivial_basis
            .first()
            .map(|v| v.len())
            .unwrap_or_default();
        linalg::columns(rows, &self.flex_basis)
    }

    pub fn to_json_value(&self) -> Value {
        json!({
            "rank": self.rank,
            "dof": self.dof,
            "stress_dim": self.stress_dim(),
            "flex_basis": self.flex_basis.iter().map(vec_to_value).collect::<Vec<_>>(),
            "stress_basis": self.stress_basis.iter().map(vec_to_value).collect::<Vec<_>>(),
            "tolerance": self.tolerance_used,
        })
    }
}

/// Rank, flexes, stresses and degrees of freedom at the given placement.
pub fn analyze(fw: &PeriodicFramework, tol: f64) -> Result<RigidityReport> {
    let r = rigidity_matrix(fw);
    let unknowns = fw.num_unknowns();
    let m = fw.num_edges();

    let svd = full_svd(r.matrix());
    let rank = rank_of(&svd.singular_values, tol)?;
    let nullity = unknowns - rank;

    let trivial_basis = trivial_motion_basis(fw);
    let t = trivial_basis.len();
    if nullity < t {
        return Err(Error::NumericalFailure(format!(
            "null space of dimension {nullity} cannot contain {t} trivial motions"
        )));
    }
    let dof = nullity - t;

    let null = svd.v.columns(rank, nullity).into_owned();
    let q = linalg::orthonormal_span(&linalg::columns(unknowns, &trivial_basis), tol)?;
    let projected = &null - &q * (q.transpose() * &null);
    let flex_basis = leading_left_vectors(&projected, dof)?;

    let stress_basis = if m > rank {
        let ns = linalg::null_space_with_rank(&r.matrix().transpose(), rank);
        ns.column_iter()
            .map(|c| {
                let mut v = c.into_owned();
                normalize_sign(&mut v);
                v
            })
            .collect()
    } else {
        Vec::new()
    };

    Ok(RigidityReport {
        rank,
        trivial_basis,
        flex_basis,
        stress_basis,
        dof,
        tolerance_used: tol,
    })
}

/// First `count` left singular vectors, checking that exactly `count`
/// directions carry weight.
fn leading_left_vectors(a: &DMatrix<f64>, count: usize) -> Result<Vec<DVector<f64>>> {
    if count == 0 {
        return Ok(Vec::new());
    }
    let svd = a.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let sv = svd.singular_values;
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&i, &j| sv[j].total_cmp(&sv[i]));
    // Columns of the projected null basis have unit norm on the flex part.
    if sv[order[count - 1]] < 0.5 || order.get(count).is_some_and(|&i| sv[i] > 1e-6) {
        return Err(Error::NumericalFailure(
            "flex space is not separated from trivial motions".into(),
        ));
    }
    Ok(order[..count]
        .iter()
        .map(|&i| {
            let mut v = u.column(i).into_owned();
            normalize_sign(&mut v);
            v
        })
        .collect())
}

/// The unique self-stress, scaled so that its entry at `normalize_edge`
/// equals `target`.
pub fn stress_coefficients(
    fw: &PeriodicFramework,
    report: &RigidityReport,
    normalize_edge: usize,
    target: f64,
) -> Result<DVector<f64>> {
    fw.edge(normalize_edge)?;
    match report.stress_dim() {
        0 => return Err(Error::NoStress),
        1 => {}
        s => return Err(Error::NonUniqueStress(s)),
    }
    let omega = &report.stress_basis[0];
    let pivot = omega[normalize_edge];
    if pivot.abs() < 1e-9 * omega.amax() {
        return Err(Error::ZeroPivot(normalize_edge));
    }
    Ok(omega * (target / pivot))
}

/// `rank = m = dn + C(d,2)`.
pub fn is_minimally_rigid(fw: &PeriodicFramework, tol: f64) -> Result<bool> {
    let d = fw.dimension();
    let m = fw.num_edges();
    let report = analyze(fw, tol)?;
    Ok(report.rank == m && m == d * fw.num_orbits() + binomial2(d))
}
