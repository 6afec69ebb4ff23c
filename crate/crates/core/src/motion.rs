//! Finite deformations by predictor–corrector continuation.
//!
//! The constraint map is `g_k(x) = ½(‖e_k(x)‖² − L_k²)` on the coordinates
//! `x = (p_1, …, p_n, λ_1, …, λ_d)`; its Jacobian is the rigidity matrix.
//! Isometries are removed by pinning the first representative and keeping
//! the strictly lower triangle of the lattice matrix fixed. Each step
//! moves along the current unit tangent, projects back with minimum-norm
//! Newton corrections, then transports the tangent to the new point.

use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde_json::{json, Value};

use crate::constructions::simplex_family_red;
use crate::error::{Error, Result};
use crate::expansive::{box_shifts, flex_residual, pair_keys};
use crate::framework::{PeriodicFramework, Placement, QuotientGraph};
use crate::io::format_sig;
use crate::linalg::{self, full_svd, pinv_solve, rank_of};
use crate::rigidity::{binomial2, rigidity_matrix, trivial_motion_basis};

pub const MAX_NEWTON_ITERATIONS: usize = 25;

#[derive(Debug, Clone, Copy)]
pub struct MotionConfig {
    pub n_steps: usize,
    /// Step length in units of the shortest bar.
    pub step_size: f64,
    pub newton_tol: f64,
    pub rank_tol: f64,
    /// Relative edge residual above which the seed is rejected.
    pub flex_tol: f64,
}

impl Default for MotionConfig {
    fn default() -> Self {
        MotionConfig {
            n_steps: 50,
            step_size: 0.01,
            newton_tol: 1e-10,
            rank_tol: 1e-9,
            flex_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MotionPath {
    pub graph: QuotientGraph,
    pub placements: Vec<Placement>,
    pub step_size: f64,
    /// Distance travelled in coordinate space per step.
    pub parameter_step: f64,
    pub direction_seed: DVector<f64>,
    /// Unit, gauge-fixed tangent at each placement (zero for a constant path).
    pub tangents: Vec<DVector<f64>>,
    /// `max_k |‖e_k‖² − L_k²|` after correction.
    pub residuals: Vec<f64>,
    pub reference_lengths: Vec<f64>,
    pub pinning: String,
}

impl MotionPath {
    pub fn len(&self) -> usize {
        self.placements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.placements.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.graph.dimension
    }

    pub fn framework_at(&self, step: usize) -> Result<PeriodicFramework> {
        let placement = self.placements.get(step).ok_or(Error::IndexOutOfRange {
            index: step,
            len: self.placements.len(),
        })?;
        PeriodicFramework::new(self.graph.clone(), placement.clone())
    }

    /// Same path traversed backwards.
    pub fn reversed(&self) -> MotionPath {
        let mut p = self.clone();
        p.placements.reverse();
        p.residuals.reverse();
        p.tangents = self.tangents.iter().rev().map(|t| -t).collect();
        p.direction_seed = -&self.direction_seed;
        p
    }

    /// Largest `|‖e_k‖ − L_k|` over all steps and bars.
    pub fn max_length_drift(&self) -> f64 {
        let mut drift = 0.0f64;
        for p in &self.placements {
            for (e, l) in self.graph.edge_orbits.iter().zip(&self.reference_lengths) {
                drift = drift.max((p.separation(e.tail, e.head, &e.shift).norm() - l).abs());
            }
        }
        drift
    }

    pub fn to_json_value(&self) -> Value {
        json!({
            "steps": self.len(),
            "step_size": self.step_size,
            "parameter_step": self.parameter_step,
            "max_residual": self.residuals.iter().copied().fold(0.0, f64::max),
            "max_length_drift": self.max_length_drift(),
            "pinning": self.pinning,
        })
    }
}

/// Rows fixing `ṗ_1 = 0` and the strictly lower triangle of `Λ̇`.
fn gauge_matrix(d: usize, n: usize) -> DMatrix<f64> {
    let rows = d + binomial2(d);
    let mut g = DMatrix::zeros(rows, d * n + d * d);
    for t in 0..d {
        g[(t, t)] = 1.0;
    }
    let mut r = d;
    for c in 0..d {
        for row in c + 1..d {
            g[(r, d * n + d * c + row)] = 1.0;
            r += 1;
        }
    }
    g
}

fn stacked(j: &DMatrix<f64>, g: &DMatrix<f64>) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(j.nrows() + g.nrows(), j.ncols());
    a.rows_mut(0, j.nrows()).copy_from(j);
    a.rows_mut(j.nrows(), g.nrows()).copy_from(g);
    a
}

/// `½(‖e_k‖² − L_k²)` for every bar.
fn constraint_values(
    fw_graph: &QuotientGraph,
    placement: &Placement,
    lengths: &[f64],
) -> DVector<f64> {
    DVector::from_iterator(
        lengths.len(),
        fw_graph.edge_orbits.iter().zip(lengths).map(|(e, l)| {
            0.5 * (placement
                .separation(e.tail, e.head, &e.shift)
                .norm_squared()
                - l * l)
        }),
    )
}

/// Orthonormal basis of the gauge-fixed tangent space and its dimension.
fn tangent_space(fw: &PeriodicFramework, gauge: &DMatrix<f64>, tol: f64) -> Result<DMatrix<f64>> {
    let a = stacked(rigidity_matrix(fw).matrix(), gauge);
    let svd = full_svd(&a);
    let rank = rank_of(&svd.singular_values, tol)?;
    let n = a.ncols();
    Ok(svd.v.columns(rank, n - rank).into_owned())
}

/// Follows the deformation seeded by `direction` for `config.n_steps`.
pub fn continue_motion(
    fw: &PeriodicFramework,
    direction: &DVector<f64>,
    config: &MotionConfig,
) -> Result<MotionPath> {
    let d = fw.dimension();
    let n = fw.num_orbits();
    if direction.len() != fw.num_unknowns() {
        return Err(Error::DimensionMismatch(format!(
            "direction has {} entries, expected {}",
            direction.len(),
            fw.num_unknowns()
        )));
    }
    if !(config.step_size > 0.0) {
        return Err(Error::InvalidInput("step size must be positive".into()));
    }
    let residual = flex_residual(fw, direction);
    if residual > config.flex_tol {
        return Err(Error::NotAFlex {
            residual,
            tol: config.flex_tol,
        });
    }

    let gauge = gauge_matrix(d, n);
    let lengths = fw.edge_lengths().to_vec();
    let shortest = lengths.iter().copied().fold(f64::INFINITY, f64::min);
    let tau = config.step_size * if shortest.is_finite() { shortest } else { 1.0 };

    // Remove the isometric part so the seed respects the gauge.
    let trivial = linalg::columns(fw.num_unknowns(), &trivial_motion_basis(fw));
    let gt = &gauge * &trivial;
    let alpha = gt
        .lu()
        .solve(&(-(&gauge * direction)))
        .ok_or_else(|| Error::NumericalFailure("gauge does not remove the isometries".into()))?;
    let fixed = direction + &trivial * alpha;

    let mut path = MotionPath {
        graph: fw.graph().clone(),
        placements: vec![fw.placement().clone()],
        step_size: config.step_size,
        parameter_step: tau,
        direction_seed: direction.clone(),
        tangents: Vec::with_capacity(config.n_steps + 1),
        residuals: vec![max_abs_squared_residual(
            fw.graph(),
            fw.placement(),
            &lengths,
        )],
        reference_lengths: lengths.clone(),
        pinning: format!(
            "orbit `{}` pinned; strictly lower triangle of the lattice fixed",
            fw.orbit_id(0)
        ),
    };

    let dnorm = direction.norm();
    if dnorm == 0.0 || fixed.norm() <= 1e-9 * dnorm {
        // Isometric seed: the placement does not move.
        path.tangents.push(DVector::zeros(fw.num_unknowns()));
        for _ in 0..config.n_steps {
            path.placements.push(fw.placement().clone());
            path.tangents.push(DVector::zeros(fw.num_unknowns()));
            path.residuals.push(path.residuals[0]);
        }
        return Ok(path);
    }

    let expected = tangent_space(fw, &gauge, config.rank_tol)?.ncols();
    let mut tangent = fixed.normalize();
    path.tangents.push(tangent.clone());
    let mut x = fw.placement().to_coordinates();

    for step in 1..=config.n_steps {
        x += &tangent * tau;
        let mut placement = Placement::from_coordinates(&x, d, n);
        let mut res = max_abs_squared_residual(fw.graph(), &placement, &lengths);
        let mut iterations = 0;
        while res >= config.newton_tol {
            if iterations == MAX_NEWTON_ITERATIONS {
                return Err(Error::NewtonDivergence {
                    step,
                    residual: res,
                });
            }
            let current = PeriodicFramework::new(fw.graph().clone(), placement.clone())?;
            let a = stacked(rigidity_matrix(&current).matrix(), &gauge);
            let g = constraint_values(fw.graph(), &placement, &lengths);
            let mut rhs = DVector::zeros(a.nrows());
            rhs.rows_mut(0, g.len()).copy_from(&(-g));
            let delta = pinv_solve(&a, &rhs, config.rank_tol)?;
            x += delta;
            placement = Placement::from_coordinates(&x, d, n);
            res = max_abs_squared_residual(fw.graph(), &placement, &lengths);
            iterations += 1;
        }

        let current = PeriodicFramework::new(fw.graph().clone(), placement.clone())?;
        let space = tangent_space(&current, &gauge, config.rank_tol)?;
        if space.ncols() != expected {
            return Err(Error::SingularJacobianAtPoint {
                step,
                expected,
                found: space.ncols(),
            });
        }
        let projected = &space * (space.transpose() * &tangent);
        let norm = projected.norm();
        if norm < 0.5 {
            return Err(Error::SingularJacobianAtPoint {
                step,
                expected,
                found: space.ncols(),
            });
        }
        tangent = projected / norm;
        path.placements.push(placement);
        path.tangents.push(tangent.clone());
        path.residuals.push(res);
    }
    Ok(path)
}

fn max_abs_squared_residual(graph: &QuotientGraph, placement: &Placement, lengths: &[f64]) -> f64 {
    constraint_values(graph, placement, lengths)
        .iter()
        .map(|v| 2.0 * v.abs())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone)]
pub struct PairAudit {
    pub orbit_a: usize,
    pub orbit_b: usize,
    pub shift: Vec<i64>,
    pub min_increment: f64,
    pub first_violation_step: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct Violation {
    /// Index into [`ExpansionAudit::pairs`].
    pub pair: usize,
    /// Distance decreased between `step` and `step + 1`.
    pub step: usize,
    pub decrement: f64,
}

#[derive(Debug, Clone)]
pub struct ExpansionAudit {
    pub radius: usize,
    pub audit_tol: f64,
    pub pairs: Vec<PairAudit>,
    pub violations: Vec<Violation>,
    pub passed: bool,
}

impl ExpansionAudit {
    pub fn to_json_value(&self) -> Value {
        json!({
            "radius": self.radius,
            "audit_tol": self.audit_tol,
            "num_pairs": self.pairs.len(),
            "num_violations": self.violations.len(),
            "passed": self.passed,
        })
    }

    /// `orbit_a,orbit_b,shift_1..shift_d,min_increment,first_violation_step`
    pub fn write_csv<W: Write>(&self, graph: &QuotientGraph, out: W) -> Result<()> {
        let d = graph.dimension;
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["orbit_a".to_string(), "orbit_b".to_string()];
        header.extend((1..=d).map(|i| format!("shift_{i}")));
        header.push("min_increment".into());
        header.push("first_violation_step".into());
        w.write_record(&header)?;
        for p in &self.pairs {
            let mut rec = vec![
                graph.vertex_orbits[p.orbit_a].clone(),
                graph.vertex_orbits[p.orbit_b].clone(),
            ];
            rec.extend(p.shift.iter().map(i64::to_string));
            rec.push(format_sig(p.min_increment, 12));
            rec.push(
                p.first_violation_step
                    .map(|s| s.to_string())
                    .unwrap_or_default(),
            );
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Checks that no pair distance within `radius` shrinks by more than
/// `audit_tol` between consecutive steps.
pub fn audit_expansiveness(
    path: &MotionPath,
    radius: usize,
    audit_tol: f64,
) -> Result<ExpansionAudit> {
    if path.len() < 2 {
        return Err(Error::InvalidInput("audit needs at least two steps".into()));
    }
    let d = path.dimension();
    let n = path.graph.num_orbits();
    let mut pairs = Vec::new();
    let mut violations = Vec::new();
    for (a, b, w) in pair_keys(n, d, radius) {
        let dist: Vec<f64> = path
            .placements
            .iter()
            .map(|p| p.separation(a, b, &w).norm())
            .collect();
        let mut min_increment = f64::INFINITY;
        let mut first = None;
        for k in 0..dist.len() - 1 {
            let inc = dist[k + 1] - dist[k];
            min_increment = min_increment.min(inc);
            if inc < -audit_tol {
                first.get_or_insert(k);
                violations.push(Violation {
                    pair: pairs.len(),
                    step: k,
                    decrement: -inc,
                });
            }
        }
        pairs.push(PairAudit {
            orbit_a: a,
            orbit_b: b,
            shift: w,
            min_increment,
            first_violation_step: first,
        });
    }
    Ok(ExpansionAudit {
        radius,
        audit_tol,
        passed: violations.is_empty(),
        pairs,
        violations,
    })
}

/// Distance between the hyperplanes through `{λ_i}` and `{2λ_i}` at each
/// step: `1/‖Λ⁻ᵀ·𝟙‖`. Only defined for the simplex family.
pub fn facet_separation(path: &MotionPath) -> Result<Vec<f64>> {
    simplex_family_red(&path.graph)?;
    let d = path.dimension();
    path.placements
        .iter()
        .map(|p| {
            let normal = p
                .lattice
                .transpose()
                .lu()
                .solve(&DVector::from_element(d, 1.0))
                .ok_or_else(|| Error::NumericalFailure("lattice became singular".into()))?;
            Ok(1.0 / normal.norm())
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameFormat {
    Obj,
    Csv,
}

impl fmt::Display for FrameFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FrameFormat::Obj => "obj",
            FrameFormat::Csv => "csv",
        })
    }
}

impl FromStr for FrameFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "obj" => Ok(FrameFormat::Obj),
            "csv" => Ok(FrameFormat::Csv),
            _ => Err(Error::InvalidInput(format!("unknown frame format `{s}`"))),
        }
    }
}

/// Vertices `(orbit, shift)` inside the supercell box and the bars
/// joining two of them (as index pairs).
pub fn supercell(
    graph: &QuotientGraph,
    radius: usize,
) -> (Vec<(usize, Vec<i64>)>, Vec<(usize, usize)>) {
    let d = graph.dimension;
    let r = radius as i64;
    let shifts: Vec<Vec<i64>> = box_shifts(d, r).collect();
    let per_orbit = shifts.len();
    let vertices: Vec<(usize, Vec<i64>)> = (0..graph.num_orbits())
        .flat_map(|o| shifts.iter().map(move |w| (o, w.clone())))
        .collect();
    let side = 2 * r + 1;
    let index_of = |orbit: usize, w: &[i64]| -> Option<usize> {
        let mut idx = 0i64;
        for &x in w {
            if x.abs() > r {
                return None;
            }
            idx = idx * side + (x + r);
        }
        Some(orbit * per_orbit + idx as usize)
    };
    let mut bars = Vec::new();
    for e in &graph.edge_orbits {
        for w in &shifts {
            let to: Vec<i64> = w.iter().zip(&e.shift).map(|(a, b)| a + b).collect();
            if let (Some(i), Some(j)) = (index_of(e.tail, w), index_of(e.head, &to)) {
                bars.push((i, j));
            }
        }
    }
    (vertices, bars)
}

/// Writes one geometry file per step (`frame_%04d.obj`), or `frames.csv`
/// plus `frame_edges.csv`. Returns the files written.
pub fn export_frames(
    path: &MotionPath,
    radius: usize,
    format: FrameFormat,
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let d = path.dimension();
    let (vertices, bars) = supercell(&path.graph, radius);
    let mut written = Vec::new();
    match format {
        FrameFormat::Obj => {
            if d > 3 {
                return Err(Error::InvalidInput(format!(
                    "OBJ frames need dimension at most 3, got {d}"
                )));
            }
            for (step, p) in path.placements.iter().enumerate() {
                let file = dir.join(format!("frame_{step:04}.obj"));
                let mut out = BufWriter::new(File::create(&file)?);
                for (orbit, w) in &vertices {
                    let x = &p.positions[*orbit] + p.translation(w);
                    let coord = |i: usize| {
                        if i < d {
                            format_sig(x[i], 12)
                        } else {
                            "0.0".into()
                        }
                    };
                    writeln!(out, "v {} {} {}", coord(0), coord(1), coord(2))?;
                }
                for (i, j) in &bars {
                    writeln!(out, "l {} {}", i + 1, j + 1)?;
                }
                out.flush()?;
                written.push(file);
            }
        }
        FrameFormat::Csv => {
            let file = dir.join("frames.csv");
            let mut w = csv::Writer::from_path(&file)?;
            let mut header = vec!["step".to_string(), "orbit".to_string()];
            header.extend((1..=d).map(|i| format!("shift_{i}")));
            header.extend((1..=d).map(|i| format!("x_{i}")));
            w.write_record(&header)?;
            for (step, p) in path.placements.iter().enumerate() {
                for (orbit, shift) in &vertices {
                    let x = &p.positions[*orbit] + p.translation(shift);
                    let mut rec = vec![step.to_string(), path.graph.vertex_orbits[*orbit].clone()];
                    rec.extend(shift.iter().map(i64::to_string));
                    rec.extend(x.iter().map(|v| format_sig(*v, 12)));
                    w.write_record(&rec)?;
                }
            }
            w.flush()?;
            written.push(file);

            let file = dir.join("frame_edges.csv");
            let mut w = csv::Writer::from_path(&file)?;
            let mut header = vec!["tail".to_string()];
            header.extend((1..=d).map(|i| format!("tail_shift_{i}")));
            header.push("head".into());
            header.extend((1..=d).map(|i| format!("head_shift_{i}")));
            w.write_record(&header)?;
            for (i, j) in &bars {
                let mut rec = vec![path.graph.vertex_orbits[vertices[*i].0].clone()];
                rec.extend(vertices[*i].1.iter().map(i64::to_string));
                rec.push(path.graph.vertex_orbits[vertices[*j].0].clone());
                rec.extend(vertices[*j].1.iter().map(i64::to_string));
                w.write_record(&rec)?;
            }
            w.flush()?;
            written.push(file);
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{simplex_framework, SimplexVariant};
    use crate::rigidity::{analyze, DEFAULT_RANK_TOL};

    #[test]
    fn gauge_removes_all_isometries() {
        let fw = simplex_framework(3, SimplexVariant::Base, true).unwrap();
        let g = gauge_matrix(3, 2);
        let t = linalg::columns(fw.num_unknowns(), &trivial_motion_basis(&fw));
        let gt = &g * &t;
        assert_eq!(gt.shape(), (6, 6));
        assert!(gt.determinant().abs() > 1e-6);
    }

    #[test]
    fn rigid_framework_gives_constant_path() {
        let fw = simplex_framework(3, SimplexVariant::Enhanced, false).unwrap();
        let t = trivial_motion_basis(&fw);
        let cfg = MotionConfig {
            n_steps: 5,
            ..Default::default()
        };
        let path = continue_motion(&fw, &(&t[0] + &t[4]), &cfg).unwrap();
        assert_eq!(path.len(), 6);
        assert!(path.placements.iter().all(|p| p == fw.placement()));
        let sep = facet_separation(&path).unwrap();
        assert!(sep.iter().all(|s| *s == sep[0]));

        let mut u = DVector::zeros(fw.num_unknowns());
        u[4] = 1.0;
        assert!(matches!(
            continue_motion(&fw, &u, &cfg),
            Err(Error::NotAFlex { .. })
        ));
    }

    #[test]
    fn short_path_preserves_lengths() {
        let fw = simplex_framework(2, SimplexVariant::Removed(1), false).unwrap();
        let rep = analyze(&fw, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(rep.dof, 1);
        let cfg = MotionConfig {
            n_steps: 10,
            ..Default::default()
        };
        let path = continue_motion(&fw, &rep.flex_basis[0], &cfg).unwrap();
        assert!(path.residuals.iter().all(|r| *r < cfg.newton_tol));
        assert!(path.max_length_drift() < 1e-9);
        assert_eq!(path.placements[0], *fw.placement());
        assert!(path.placements[10].positions[0].norm() < 1e-12);
    }

    #[test]
    fn supercell_counts() {
        let fw = simplex_framework(2, SimplexVariant::Base, false).unwrap();
        let (v, bars) = supercell(fw.graph(), 1);
        assert_eq!(v.len(), 18);
        // (1,0) and (0,1) bars: 6 tails each in range; (1,1): 4 tails.
        assert_eq!(bars.len(), 6 + 6 + 4);
    }

    #[test]
    fn frame_format_parse() {
        assert_eq!("obj".parse::<FrameFormat>().unwrap(), FrameFormat::Obj);
        assert!("ply".parse::<FrameFormat>().is_err());
    }
}
