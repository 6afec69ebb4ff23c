//! Cones spanned by vertex stars.
//!
//! A vertex star is the list of bar vectors leaving one orbit
//! representative. Its cone `C = {Σ a_i v_i : a_i ≥ 0}` decomposes as a
//! linear part (lineality space) plus a pointed cone. Effective expansion
//! at a vertex needs the linear part to have dimension at most `d − 2`.

pub mod feasibility;

use nalgebra::{DMatrix, DVector};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::framework::PeriodicFramework;
use crate::io::vec_to_value;
use crate::linalg;

pub use feasibility::{solve_linear_feasibility, FeasibilitySystem};

pub const DEFAULT_CONE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct VectorStar {
    pub vertex_orbit: String,
    pub vectors: Vec<DVector<f64>>,
}

impl VectorStar {
    pub fn new(vertex_orbit: impl Into<String>, vectors: Vec<DVector<f64>>) -> Result<Self> {
        let star = VectorStar {
            vertex_orbit: vertex_orbit.into(),
            vectors,
        };
        star.check()?;
        Ok(star)
    }

    pub fn dimension(&self) -> usize {
        self.vectors.first().map_or(0, |v| v.len())
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    fn check(&self) -> Result<()> {
        if self.vectors.is_empty() {
            return Err(Error::InvalidInput("vertex star is empty".into()));
        }
        let d = self.dimension();
        for v in &self.vectors {
            if v.len() != d {
                return Err(Error::DimensionMismatch(
                    "star vectors differ in length".into(),
                ));
            }
            if !(v.norm() > 0.0) {
                return Err(Error::InvalidInput("star contains a zero vector".into()));
            }
        }
        Ok(())
    }

    fn unit_columns(&self) -> DMatrix<f64> {
        let units: Vec<DVector<f64>> = self.vectors.iter().map(|v| v.normalize()).collect();
        linalg::columns(self.dimension(), &units)
    }
}

/// Bar vectors at one orbit representative: `+e` for edge orbits leaving
/// it, `−e` for edge orbits arriving at it (a same-orbit edge gives both).
pub fn vertex_star(fw: &PeriodicFramework, orbit: &str) -> Result<VectorStar> {
    let i = fw.orbit_index(orbit)?;
    let mut vectors = Vec::new();
    for (k, e) in fw.graph().edge_orbits.iter().enumerate() {
        let v = fw.edge_vector(k)?;
        if e.tail == i {
            vectors.push(v.clone());
        }
        if e.head == i {
            vectors.push(-v);
        }
    }
    VectorStar::new(orbit, vectors)
}

/// Coefficients `a_i ≥ 1` with `Σ a_i v_i = 0`, if any exist.
pub fn positive_dependence(star: &VectorStar, tol: f64) -> Result<Option<DVector<f64>>> {
    star.check()?;
    let k = star.len();
    let units = star.unit_columns();
    let sys = FeasibilitySystem::new(
        units,
        DVector::zeros(star.dimension()),
        DVector::from_element(k, 1.0),
    )?;
    let Some(a) = sys.solve()? else {
        return Ok(None);
    };
    // Back to the unnormalized vectors, rescaled so the smallest is 1.
    let mut coeffs =
        DVector::from_iterator(k, a.iter().zip(&star.vectors).map(|(x, v)| x / v.norm()));
    let min = coeffs.min();
    coeffs /= min;
    let combo = star
        .vectors
        .iter()
        .zip(coeffs.iter())
        .fold(DVector::zeros(star.dimension()), |acc, (v, c)| acc + v * *c);
    let weight: f64 = star
        .vectors
        .iter()
        .zip(coeffs.iter())
        .map(|(v, c)| c * v.norm())
        .sum();
    if combo.norm() > tol.max(1e-12) * weight * 10.0 {
        return Err(Error::NumericalFailure(format!(
            "positive dependence residual {:e}",
            combo.norm() / weight
        )));
    }
    Ok(Some(coeffs))
}

/// Is `−v_index` a nonnegative combination of the star vectors?
pub fn negation_in_cone(star: &VectorStar, index: usize) -> Result<bool> {
    let units = star.unit_columns();
    let target = -units.column(index).into_owned();
    let sys = FeasibilitySystem::new(units, target, DVector::zeros(star.len()))?;
    Ok(sys.solve()?.is_some())
}

/// Indices of the star vectors lying in the linear part of the cone.
pub fn lineality_members(star: &VectorStar) -> Result<Vec<usize>> {
    star.check()?;
    let mut members = Vec::new();
    for i in 0..star.len() {
        if negation_in_cone(star, i)? {
            members.push(i);
        }
    }
    Ok(members)
}

/// Orthonormal basis (columns) of the linear part of the cone.
pub fn lineality_space(star: &VectorStar, tol: f64) -> Result<DMatrix<f64>> {
    let members = lineality_members(star)?;
    lineality_from_members(star, &members, tol)
}

fn lineality_from_members(star: &VectorStar, members: &[usize], tol: f64) -> Result<DMatrix<f64>> {
    let vs: Vec<DVector<f64>> = members
        .iter()
        .map(|&i| star.vectors[i].normalize())
        .collect();
    linalg::orthonormal_span(&linalg::columns(star.dimension(), &vs), tol)
}

#[derive(Debug, Clone)]
pub struct ConeAnalysis {
    pub orbit: String,
    pub num_vectors: usize,
    /// Columns form an orthonormal basis.
    pub lineality_basis: DMatrix<f64>,
    pub lineality_members: Vec<usize>,
    pub pointed_codim2: bool,
    /// Unit normal vanishing on the linear part, positive on every other
    /// star vector.
    pub separating_normal: Option<DVector<f64>>,
    pub positive_dependence: Option<DVector<f64>>,
}

impl ConeAnalysis {
    pub fn lineality_dim(&self) -> usize {
        self.lineality_basis.ncols()
    }

    pub fn to_json_value(&self) -> Value {
        json!({
            "orbit": self.orbit,
            "lineality_dim": self.lineality_dim(),
            "pointed_codim2": self.pointed_codim2,
            "separating_normal": self.separating_normal.as_ref().map(vec_to_value),
            "positive_dependence": self.positive_dependence.as_ref().map(vec_to_value),
            "num_vectors": self.num_vectors,
        })
    }
}

/// Lineality, pointedness in codimension two and a separating hyperplane.
pub fn analyze_star(star: &VectorStar, d: usize, tol: f64) -> Result<ConeAnalysis> {
    star.check()?;
    if star.dimension() != d {
        return Err(Error::DimensionMismatch(format!(
            "star lives in dimension {}, expected {d}",
            star.dimension()
        )));
    }
    let members = lineality_members(star)?;
    let lineality_basis = lineality_from_members(star, &members, tol)?;
    let l = lineality_basis.ncols();
    let pointed_codim2 = l + 2 <= d;
    let separating_normal = if l < d {
        Some(separating_normal(star, &members, &lineality_basis)?)
    } else {
        None
    };
    let positive_dependence = positive_dependence(star, tol)?;
    Ok(ConeAnalysis {
        orbit: star.vertex_orbit.clone(),
        num_vectors: star.len(),
        lineality_basis,
        lineality_members: members,
        pointed_codim2,
        separating_normal,
        positive_dependence,
    })
}

/// Solves for `h = B z` in the orthogonal complement of the lineality
/// with `⟨h, v̂⟩ ≥ 1` on the remaining (unit) star vectors.
fn separating_normal(
    star: &VectorStar,
    members: &[usize],
    lineality: &DMatrix<f64>,
) -> Result<DVector<f64>> {
    let d = star.dimension();
    let complement = orthogonal_complement(lineality, d);
    let c = complement.ncols();
    let others: Vec<DVector<f64>> = (0..star.len())
        .filter(|i| !members.contains(i))
        .map(|i| star.vectors[i].normalize())
        .collect();
    if others.is_empty() {
        return Ok(complement.column(0).into_owned());
    }
    // Variables (z⁺, z⁻, slack), rows ⟨B(z⁺ − z⁻), v̂⟩ − s = 1.
    let k = others.len();
    let mut a = DMatrix::zeros(k, 2 * c + k);
    for (r, v) in others.iter().enumerate() {
        let proj = complement.transpose() * v;
        for j in 0..c {
            a[(r, j)] = proj[j];
            a[(r, c + j)] = -proj[j];
        }
        a[(r, 2 * c + r)] = -1.0;
    }
    let sys = FeasibilitySystem::new(a, DVector::from_element(k, 1.0), DVector::zeros(2 * c + k))?;
    let x = sys.solve()?.ok_or_else(|| {
        Error::NumericalFailure("no separating hyperplane for the pointed part".into())
    })?;
    let z = x.rows(0, c) - x.rows(c, c);
    let h = &complement * z;
    Ok(h.normalize())
}

/// Orthonormal basis of the orthogonal complement of the given columns.
pub fn orthogonal_complement(basis: &DMatrix<f64>, d: usize) -> DMatrix<f64> {
    let l = basis.ncols();
    if l == 0 {
        return DMatrix::identity(d, d);
    }
    linalg::null_space_with_rank(&basis.transpose(), l)
}

/// Expansion at this vertex is impossible whenever the bars admit a
/// strictly positive dependence.
pub fn refute_expansive_at_vertex(star: &VectorStar, tol: f64) -> Result<bool> {
    Ok(positive_dependence(star, tol)?.is_some())
}

/// The local expansion system at a vertex held at the origin, with the
/// homogeneous strictness requirement normalized to `Σ slack = 1`:
///
/// `⟨v_i, v̇_i⟩ = 0`, `⟨v_i − v_j, v̇_i − v̇_j⟩ = s_ij ≥ 0`, `Σ s_ij = 1`.
///
/// Variables are `(v̇⁺, v̇⁻, s)` with the velocities split into
/// nonnegative parts.
pub fn local_expansion_system(star: &VectorStar) -> Result<FeasibilitySystem> {
    star.check()?;
    let d = star.dimension();
    let n = star.len();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    let nv = n * d;
    let cols = 2 * nv + pairs.len();
    let rows = n + pairs.len() + 1;
    let mut a = DMatrix::zeros(rows, cols);
    let set_vel = |a: &mut DMatrix<f64>, r: usize, i: usize, coef: &DVector<f64>| {
        for t in 0..d {
            a[(r, d * i + t)] += coef[t];
            a[(r, nv + d * i + t)] -= coef[t];
        }
    };
    for (i, v) in star.vectors.iter().enumerate() {
        set_vel(&mut a, i, i, v);
    }
    for (p, &(i, j)) in pairs.iter().enumerate() {
        let r = n + p;
        let diff = &star.vectors[i] - &star.vectors[j];
        set_vel(&mut a, r, i, &diff);
        set_vel(&mut a, r, j, &(-&diff));
        a[(r, 2 * nv + p)] = -1.0;
    }
    for p in 0..pairs.len() {
        a[(rows - 1, 2 * nv + p)] = 1.0;
    }
    let mut b = DVector::zeros(rows);
    b[rows - 1] = 1.0;
    FeasibilitySystem::new(a, b, DVector::zeros(cols))
}

/// Velocities `v̇_i` solving the local expansion system with at least
/// one strictly growing pair, or `None` when no such solution exists.
pub fn local_expansion_probe(star: &VectorStar) -> Result<Option<Vec<DVector<f64>>>> {
    let d = star.dimension();
    let n = star.len();
    let nv = n * d;
    let sys = local_expansion_system(star)?;
    Ok(sys.solve()?.map(|x| {
        (0..n)
            .map(|i| x.rows(d * i, d) - x.rows(nv + d * i, d))
            .collect()
    }))
}
