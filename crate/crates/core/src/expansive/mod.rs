//! Infinitesimal expansive cone.
//!
//! Every pair of joints `(p_a, p_b + Λw)` gives the inequality
//! `⟨s, ṗ_b + Λ̇w − ṗ_a⟩ ≥ 0` with `s = p_b + Λw − p_a`. The pair set is
//! infinite, so it is truncated to shifts with `‖w‖∞ ≤ R`. The cone lives
//! in the coordinates of the nontrivial flex basis of a
//! [`RigidityReport`], where trivial motions are already quotiented out.

pub mod dd;

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde_json::{json, Value};

use crate::cones::{analyze_star, vertex_star, ConeAnalysis};
use crate::error::{Error, Result};
use crate::framework::{is_canonical, PeriodicFramework, Placement};
use crate::io::{format_sig, vec_to_value};
use crate::rigidity::{constraint_row, rigidity_matrix, RigidityReport};

pub use dd::{extremal_rays, MAX_DD_DIMENSION};

pub const DEFAULT_RADIUS: usize = 2;
pub const DEFAULT_EXPANSIVE_TOL: f64 = 1e-9;
/// Projected halfspaces closer than this (as unit vectors) are merged.
pub const HALFSPACE_MERGE_TOL: f64 = 1e-8;
/// Rays closer than this angle (radians) are considered the same.
pub const RAY_ANGLE_TOL: f64 = 1e-6;

/// One pairwise distance constraint.
#[derive(Debug, Clone)]
pub struct PairConstraint {
    pub orbit_a: usize,
    pub orbit_b: usize,
    pub shift: Vec<i64>,
    pub separation: DVector<f64>,
    pub row: DVector<f64>,
}

impl PairConstraint {
    pub fn new(placement: &Placement, a: usize, b: usize, shift: Vec<i64>) -> Self {
        PairConstraint {
            separation: placement.separation(a, b, &shift),
            row: constraint_row(placement, a, b, &shift),
            orbit_a: a,
            orbit_b: b,
            shift,
        }
    }

    /// `d/dt ‖s‖` under the motion.
    pub fn rate(&self, motion: &DVector<f64>) -> f64 {
        self.row.dot(motion) / self.separation.norm()
    }

    pub fn distance(&self) -> f64 {
        self.separation.norm()
    }
}

/// Iterates over every integer vector in `[-radius, radius]^d`.
pub(crate) fn box_shifts(d: usize, radius: i64) -> impl Iterator<Item = Vec<i64>> {
    let side = (2 * radius + 1) as usize;
    let total = side.pow(d as u32);
    (0..total).map(move |mut idx| {
        let mut w = vec![0; d];
        for c in (0..d).rev() {
            w[c] = (idx % side) as i64 - radius;
            idx /= side;
        }
        w
    })
}

/// Canonical pair keys `(a, b, w)` with `‖w‖∞ ≤ radius`.
pub fn pair_keys(n: usize, d: usize, radius: usize) -> Vec<(usize, usize, Vec<i64>)> {
    let mut keys = Vec::new();
    for a in 0..n {
        for b in a..n {
            for w in box_shifts(d, radius as i64) {
                if a == b && w.iter().all(|&x| x == 0) {
                    continue;
                }
                if is_canonical(a, b, &w) {
                    keys.push((a, b, w));
                }
            }
        }
    }
    keys
}

/// All pairs within the truncation box, each listed once.
pub fn enumerate_pairs(fw: &PeriodicFramework, radius: usize) -> Vec<PairConstraint> {
    pair_keys(fw.num_orbits(), fw.dimension(), radius)
        .into_iter()
        .map(|(a, b, w)| PairConstraint::new(fw.placement(), a, b, w))
        .collect()
}

#[derive(Debug, Clone)]
pub struct ExpansiveCone {
    pub flex_basis: Vec<DVector<f64>>,
    /// Unit rows `q` with the cone `{c : q·c ≥ 0}`.
    pub halfspace_matrix: DMatrix<f64>,
    pub radius: usize,
    /// Unit vectors in flex coordinates.
    pub rays: Vec<DVector<f64>>,
    pub is_trivial: bool,
    pub num_pairs: usize,
}

impl ExpansiveCone {
    pub fn flex_dim(&self) -> usize {
        self.flex_basis.len()
    }

    pub fn num_halfspaces(&self) -> usize {
        self.halfspace_matrix.nrows()
    }

    /// Flex coordinates to a motion `(ṗ, Λ̇)`.
    pub fn lift(&self, c: &DVector<f64>) -> DVector<f64> {
        self.flex_basis
            .iter()
            .zip(c.iter())
            .fold(DVector::zeros(self.flex_basis[0].len()), |acc, (v, x)| {
                acc + v * *x
            })
    }

    pub fn ray_motions(&self) -> Vec<DVector<f64>> {
        self.rays.iter().map(|r| self.lift(r)).collect()
    }

    pub fn contains(&self, c: &DVector<f64>, tol: f64) -> bool {
        self.halfspace_matrix.nrows() == 0 || (&self.halfspace_matrix * c).min() >= -tol * c.norm()
    }

    pub fn to_json_value(&self, stable_radius: Option<usize>) -> Value {
        json!({
            "flex_dim": self.flex_dim(),
            "radius": self.radius,
            "stable_radius": stable_radius,
            "num_halfspaces": self.num_halfspaces(),
            "rays": self.rays.iter().map(vec_to_value).collect::<Vec<_>>(),
            "ray_motions": self.ray_motions().iter().map(vec_to_value).collect::<Vec<_>>(),
        })
    }
}

/// Projected, normalized and merged halfspace rows.
fn projected_halfspaces(pairs: &[PairConstraint], flex: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let f = flex.ncols();
    let mut rows: Vec<DVector<f64>> = Vec::new();
    for p in pairs {
        let q = flex.transpose() * &p.row / p.distance();
        let norm = q.norm();
        if norm < tol {
            continue;
        }
        let q = q / norm;
        if rows.iter().all(|r| (r - &q).norm() >= HALFSPACE_MERGE_TOL) {
            rows.push(q);
        }
    }
    DMatrix::from_fn(rows.len(), f, |i, j| rows[i][j])
}

/// Builds the truncated expansive cone and its extreme rays.
pub fn expansive_cone(
    fw: &PeriodicFramework,
    report: &RigidityReport,
    radius: usize,
    tol: f64,
) -> Result<ExpansiveCone> {
    if radius == 0 {
        return Err(Error::InvalidInput("radius must be at least 1".into()));
    }
    let f = report.dof;
    if f == 0 {
        return Ok(ExpansiveCone {
            flex_basis: Vec::new(),
            halfspace_matrix: DMatrix::zeros(0, 0),
            radius,
            rays: Vec::new(),
            is_trivial: true,
            num_pairs: 0,
        });
    }
    if f > MAX_DD_DIMENSION {
        return Err(Error::FlexDimensionTooLarge(f));
    }
    let pairs = enumerate_pairs(fw, radius);
    let flex = report.flex_matrix();
    let halfspace_matrix = projected_halfspaces(&pairs, &flex, tol);
    let rays = extremal_rays(&halfspace_matrix, f, tol)?;
    Ok(ExpansiveCone {
        flex_basis: report.flex_basis.clone(),
        halfspace_matrix,
        radius,
        is_trivial: rays.is_empty(),
        rays,
        num_pairs: pairs.len(),
    })
}

fn angle(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let c = a.dot(b) / (a.norm() * b.norm());
    c.clamp(-1.0, 1.0).acos()
}

/// Two ray lists describe the same rays (bijectively, within `angle_tol`).
pub fn rays_match(a: &[DVector<f64>], b: &[DVector<f64>], angle_tol: f64) -> bool {
    a.len() == b.len()
        && a.iter().all(|x| b.iter().any(|y| angle(x, y) < angle_tol))
        && b.iter().all(|y| a.iter().any(|x| angle(x, y) < angle_tol))
}

/// Smallest truncation radius `r ≤ radius` from which the rays stop
/// changing up to `radius + 1`, or `None` if the rays at `radius` and
/// `radius + 1` still differ.
pub fn stable_radius(
    fw: &PeriodicFramework,
    report: &RigidityReport,
    radius: usize,
    tol: f64,
) -> Result<Option<usize>> {
    let mut rays = Vec::with_capacity(radius + 1);
    for r in 1..=radius + 1 {
        rays.push(expansive_cone(fw, report, r, tol)?.rays);
    }
    let mut stable = None;
    for r in (1..=radius).rev() {
        if rays_match(&rays[r - 1], &rays[r], RAY_ANGLE_TOL) {
            stable = Some(r);
        } else {
            break;
        }
    }
    Ok(stable)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlexClass {
    NotExpansive,
    WeaklyExpansive,
    EffectivelyExpansive,
}

/// Relative edge residual `max_k |⟨e_k, Δ_k⟩| / (‖e_k‖ ‖u‖)`.
pub fn flex_residual(fw: &PeriodicFramework, motion: &DVector<f64>) -> f64 {
    let norm = motion.norm();
    if norm == 0.0 {
        return 0.0;
    }
    let values = rigidity_matrix(fw).apply(motion);
    values
        .iter()
        .zip(fw.edge_lengths())
        .map(|(v, l)| v.abs() / (l * norm))
        .fold(0.0, f64::max)
}

fn check_flex(fw: &PeriodicFramework, motion: &DVector<f64>, tol: f64) -> Result<()> {
    if motion.len() != fw.num_unknowns() {
        return Err(Error::DimensionMismatch(format!(
            "motion has {} entries, expected {}",
            motion.len(),
            fw.num_unknowns()
        )));
    }
    let residual = flex_residual(fw, motion);
    if residual > tol {
        return Err(Error::NotAFlex { residual, tol });
    }
    Ok(())
}

/// Normalized pair rates `d‖s‖/dt / ‖u‖` for every pair in the box.
pub fn pair_rates(
    fw: &PeriodicFramework,
    motion: &DVector<f64>,
    radius: usize,
) -> Vec<(PairConstraint, f64)> {
    let norm = motion.norm();
    enumerate_pairs(fw, radius)
        .into_iter()
        .map(|p| {
            let v = if norm == 0.0 {
                0.0
            } else {
                p.rate(motion) / norm
            };
            (p, v)
        })
        .collect()
}

pub fn classify_flex(
    fw: &PeriodicFramework,
    flex: &DVector<f64>,
    radius: usize,
    tol: f64,
) -> Result<FlexClass> {
    check_flex(fw, flex, tol)?;
    let rates = pair_rates(fw, flex, radius);
    if rates.iter().any(|(_, v)| *v < -tol) {
        Ok(FlexClass::NotExpansive)
    } else if rates.iter().any(|(_, v)| *v > tol) {
        Ok(FlexClass::EffectivelyExpansive)
    } else {
        Ok(FlexClass::WeaklyExpansive)
    }
}

/// Returns `flex` or `−flex`, whichever is effectively expansive.
pub fn orient_expansive(
    fw: &PeriodicFramework,
    flex: &DVector<f64>,
    radius: usize,
    tol: f64,
) -> Result<Option<DVector<f64>>> {
    if classify_flex(fw, flex, radius, tol)? == FlexClass::EffectivelyExpansive {
        return Ok(Some(flex.clone()));
    }
    let neg = -flex;
    if classify_flex(fw, &neg, radius, tol)? == FlexClass::EffectivelyExpansive {
        return Ok(Some(neg));
    }
    Ok(None)
}

/// Orbits taking part in some strictly growing pair.
pub fn effective_vertices(
    fw: &PeriodicFramework,
    flex: &DVector<f64>,
    radius: usize,
    tol: f64,
) -> Result<Vec<String>> {
    check_flex(fw, flex, tol)?;
    let mut effective = vec![false; fw.num_orbits()];
    for (p, v) in pair_rates(fw, flex, radius) {
        if v > tol {
            effective[p.orbit_a] = true;
            effective[p.orbit_b] = true;
        }
    }
    Ok(effective
        .iter()
        .enumerate()
        .filter(|(_, &e)| e)
        .map(|(i, _)| fw.orbit_id(i).to_string())
        .collect())
}

#[derive(Debug, Clone)]
pub struct PointednessReport {
    pub vertices: Vec<ConeAnalysis>,
    pub passed: bool,
}

impl PointednessReport {
    pub fn to_json_value(&self) -> Value {
        json!({
            "passed": self.passed,
            "vertices": self.vertices.iter().map(ConeAnalysis::to_json_value).collect::<Vec<_>>(),
        })
    }
}

/// Star analysis at every vertex where the flex is effective; passes when
/// each of those stars is pointed in codimension two.
pub fn verify_pointedness_theorem(
    fw: &PeriodicFramework,
    flex: &DVector<f64>,
    radius: usize,
    tol: f64,
) -> Result<PointednessReport> {
    if classify_flex(fw, flex, radius, tol)? != FlexClass::EffectivelyExpansive {
        return Err(Error::InvalidInput(
            "flex is not effectively expansive".into(),
        ));
    }
    let d = fw.dimension();
    let mut vertices = Vec::new();
    for orbit in effective_vertices(fw, flex, radius, tol)? {
        let star = vertex_star(fw, &orbit)?;
        vertices.push(analyze_star(&star, d, tol)?);
    }
    let passed = vertices.iter().all(|c| c.pointed_codim2);
    Ok(PointednessReport { vertices, passed })
}

/// Pair audit CSV: `orbit_a,orbit_b,shift_1..shift_d,value`.
pub fn write_pair_csv<W: Write>(
    fw: &PeriodicFramework,
    rates: &[(PairConstraint, f64)],
    out: W,
) -> Result<()> {
    let d = fw.dimension();
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["orbit_a".to_string(), "orbit_b".to_string()];
    header.extend((1..=d).map(|i| format!("shift_{i}")));
    header.push("value".into());
    w.write_record(&header)?;
    for (p, v) in rates {
        let mut rec = vec![
            fw.orbit_id(p.orbit_a).to_string(),
            fw.orbit_id(p.orbit_b).to_string(),
        ];
        rec.extend(p.shift.iter().map(i64::to_string));
        rec.push(format_sig(*v, 12));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Interior direction of a cone: the normalized sum of its unit rays.
pub fn central_direction(cone: &ExpansiveCone) -> Option<DVector<f64>> {
    let first = cone.rays.first()?;
    let sum = cone
        .rays
        .iter()
        .skip(1)
        .fold(first.clone(), |acc, r| acc + r);
    let norm = sum.norm();
    (norm > 0.0).then(|| cone.lift(&(sum / norm)))
}

/// Projection of a motion onto the flex coordinates of a report.
pub fn flex_coordinates(report: &RigidityReport, motion: &DVector<f64>) -> DVector<f64> {
    let f = report.flex_matrix();
    f.transpose() * motion
}
