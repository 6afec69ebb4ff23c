//! Built-in framework families and edge-orbit surgery.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::framework::{EdgeOrbit, PeriodicFramework, Placement, QuotientGraph};

pub const RED: &str = "red";
pub const GREEN: &str = "green";

/// Members of the two-orbit simplex family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimplexVariant {
    /// Bars from the center to `λ_i` and `λ_i + λ_j`.
    Base,
    /// Base plus bars to `2λ_i` for every `i`.
    Enhanced,
    /// Enhanced without the bar to `2λ_k` (`k` is 1-based).
    Removed(usize),
}

impl fmt::Display for SimplexVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimplexVariant::Base => write!(f, "base"),
            SimplexVariant::Enhanced => write!(f, "enhanced"),
            SimplexVariant::Removed(k) => write!(f, "removed:{k}"),
        }
    }
}

impl FromStr for SimplexVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "base" => Ok(SimplexVariant::Base),
            "enhanced" => Ok(SimplexVariant::Enhanced),
            _ => {
                let k = s
                    .strip_prefix("removed:")
                    .and_then(|k| k.parse::<usize>().ok())
                    .ok_or_else(|| {
                        Error::InvalidInput(format!(
                            "unknown simplex variant `{s}` (expected base, enhanced or removed:K)"
                        ))
                    })?;
                Ok(SimplexVariant::Removed(k))
            }
        }
    }
}

fn unit(d: usize, i: usize, scale: i64) -> Vec<i64> {
    let mut w = vec![0; d];
    w[i] = scale;
    w
}

/// Generators of a regular simplex with one vertex at the origin: unit
/// vectors with pairwise angle 60°, stored as an upper-triangular basis.
fn regular_simplex_lattice(d: usize) -> DMatrix<f64> {
    let gram = DMatrix::from_fn(d, d, |i, j| if i == j { 1.0 } else { 0.5 });
    let chol = gram
        .cholesky()
        .expect("Gram matrix of a regular simplex is positive definite");
    chol.l().transpose()
}

/// The two-orbit family: red orbit at the origin, green orbit at the
/// barycenter `(λ_1 + … + λ_d)/(d+1)` of the lattice simplex, all bars
/// green→red. Generators are `e_i` unless `regular` is set.
pub fn simplex_framework(
    d: usize,
    variant: SimplexVariant,
    regular: bool,
) -> Result<PeriodicFramework> {
    if d < 2 {
        return Err(Error::InvalidDimension(d));
    }
    if let SimplexVariant::Removed(k) = variant {
        if k == 0 || k > d {
            return Err(Error::InvalidInput(format!(
                "removed edge index {k} must lie in 1..={d}"
            )));
        }
    }
    let lattice = if regular {
        regular_simplex_lattice(d)
    } else {
        DMatrix::identity(d, d)
    };
    let center = lattice.column_sum() / (d as f64 + 1.0);

    let mut graph = QuotientGraph::new(d, [RED, GREEN]);
    for i in 0..d {
        graph.push_edge(GREEN, RED, unit(d, i, 1))?;
    }
    for i in 0..d {
        for j in i + 1..d {
            let mut w = unit(d, i, 1);
            w[j] = 1;
            graph.push_edge(GREEN, RED, w)?;
        }
    }
    match variant {
        SimplexVariant::Base => {}
        SimplexVariant::Enhanced => {
            for i in 0..d {
                graph.push_edge(GREEN, RED, unit(d, i, 2))?;
            }
        }
        SimplexVariant::Removed(k) => {
            for i in (0..d).filter(|&i| i + 1 != k) {
                graph.push_edge(GREEN, RED, unit(d, i, 2))?;
            }
        }
    }
    let placement = Placement::new(vec![DVector::zeros(d), center], lattice);
    PeriodicFramework::new(graph, placement)
}

/// Bar offsets of the stressed three-dimensional example, in the order
/// `0; e1, e2, e3; e1+e2, e2+e3, e3+e1; e1+e2+e3`.
pub const STRESSED_OFFSETS: [[i64; 3]; 8] = [
    [0, 0, 0],
    [1, 0, 0],
    [0, 1, 0],
    [0, 0, 1],
    [1, 1, 0],
    [0, 1, 1],
    [1, 0, 1],
    [1, 1, 1],
];

/// Cubic lattice, red orbit at the origin, green at `(1/2, 1/2, −1/2)`
/// joined to the eight red vertices of the unit cube above it.
pub fn stressed_framework() -> PeriodicFramework {
    let mut graph = QuotientGraph::new(3, [RED, GREEN]);
    for w in STRESSED_OFFSETS {
        graph.push_edge(GREEN, RED, w).expect("orbits exist");
    }
    let placement = Placement::new(
        vec![DVector::zeros(3), DVector::from_vec(vec![0.5, 0.5, -0.5])],
        DMatrix::identity(3, 3),
    );
    PeriodicFramework::new(graph, placement).expect("stressed example is a valid framework")
}

/// Appends the edge orbit `(tail, head, shift)`.
pub fn with_edge_orbit(
    fw: &PeriodicFramework,
    tail: &str,
    head: &str,
    shift: &[i64],
) -> Result<PeriodicFramework> {
    let mut edges = fw.graph().edge_orbits.clone();
    edges.push(EdgeOrbit::new(
        fw.orbit_index(tail)?,
        fw.orbit_index(head)?,
        shift.to_vec(),
    ));
    fw.with_edges(edges)
}

pub fn remove_edge_orbit(fw: &PeriodicFramework, k: usize) -> Result<PeriodicFramework> {
    fw.edge(k)?;
    let mut edges = fw.graph().edge_orbits.clone();
    edges.remove(k);
    fw.with_edges(edges)
}

/// Checks that a graph has the shape of the simplex family: two orbits,
/// every bar between them with an offset of the form `e_i`, `e_i + e_j`
/// or `2e_i` (seen from the green orbit), and all base bars present.
/// Returns the index of the orbit playing the red role.
pub fn simplex_family_red(graph: &QuotientGraph) -> Result<usize> {
    let d = graph.dimension;
    if graph.num_orbits() != 2 || d < 2 {
        return Err(Error::NotSimplexFamily(
            "needs exactly two vertex orbits".into(),
        ));
    }
    let mut found = Vec::new();
    for red in 0..2 {
        let green = 1 - red;
        let mut offsets = Vec::new();
        let mut ok = true;
        for e in &graph.edge_orbits {
            let w = if e.tail == green && e.head == red {
                e.shift.clone()
            } else if e.tail == red && e.head == green {
                e.reversed().shift
            } else {
                ok = false;
                break;
            };
            let sum: i64 = w.iter().sum();
            let shape_ok = w.iter().all(|&x| (0..=2).contains(&x))
                && (sum == 1 || (sum == 2 && w.iter().filter(|&&x| x != 0).count() <= 2));
            if !shape_ok {
                ok = false;
                break;
            }
            offsets.push(w);
        }
        if !ok {
            continue;
        }
        let base_present = (0..d).all(|i| offsets.contains(&unit(d, i, 1)))
            && (0..d).all(|i| {
                (i + 1..d).all(|j| {
                    let mut w = unit(d, i, 1);
                    w[j] = 1;
                    offsets.contains(&w)
                })
            });
        if base_present {
            found.push(red);
        }
    }
    found
        .first()
        .copied()
        .ok_or_else(|| Error::NotSimplexFamily("bar offsets do not match the family".into()))
}
