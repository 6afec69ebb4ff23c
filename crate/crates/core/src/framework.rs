//! Periodic frameworks given by their finite quotient.
//!
//! A d-periodic framework is stored as a [`QuotientGraph`] (vertex orbits
//! and edge orbits labelled with integer lattice shifts) together with a
//! [`Placement`] of one representative per vertex orbit and a lattice
//! basis. The edge orbit `(tail, head, w)` stands for the bars joining
//! `p_tail + Λz` to `p_head + Λ(z + w)` for every integer vector `z`.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// One edge orbit: a bar from the tail representative to the head orbit
/// translated by `shift` (in lattice coordinates).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EdgeOrbit {
    pub tail: usize,
    pub head: usize,
    pub shift: Vec<i64>,
}

impl EdgeOrbit {
    pub fn new(tail: usize, head: usize, shift: impl Into<Vec<i64>>) -> Self {
        EdgeOrbit {
            tail,
            head,
            shift: shift.into(),
        }
    }

    /// The same orbit written from the other end: `(head, tail, -shift)`.
    pub fn reversed(&self) -> Self {
        EdgeOrbit {
            tail: self.head,
            head: self.tail,
            shift: self.shift.iter().map(|w| -w).collect(),
        }
    }

    pub fn is_loop(&self) -> bool {
        self.tail == self.head && self.shift.iter().all(|&w| w == 0)
    }

    /// Orientation-independent representative: `tail < head`, or for a
    /// same-orbit edge the shift whose first nonzero entry is positive.
    pub fn canonical(&self) -> Self {
        if is_canonical(self.tail, self.head, &self.shift) {
            self.clone()
        } else {
            self.reversed()
        }
    }
}

/// Orientation rule shared by edge orbits and pair constraints.
pub(crate) fn is_canonical(a: usize, b: usize, shift: &[i64]) -> bool {
    match a.cmp(&b) {
        Ordering::Less => true,
        Ordering::Greater => false,
        Ordering::Equal => shift.iter().find(|&&w| w != 0).is_none_or(|&w| w > 0),
    }
}

/// Combinatorial quotient data. This is a plain record; consistency is
/// checked when it is combined with a placement in [`PeriodicFramework::new`].
#[derive(Debug, Clone, PartialEq)]
pub struct QuotientGraph {
    pub dimension: usize,
    pub vertex_orbits: Vec<String>,
    pub edge_orbits: Vec<EdgeOrbit>,
}

impl QuotientGraph {
    pub fn new<S: Into<String>>(dimension: usize, ids: impl IntoIterator<Item = S>) -> Self {
        QuotientGraph {
            dimension,
            vertex_orbits: ids.into_iter().map(Into::into).collect(),
            edge_orbits: Vec::new(),
        }
    }

    pub fn orbit_index(&self, id: &str) -> Result<usize> {
        self.vertex_orbits
            .iter()
            .position(|v| v == id)
            .ok_or_else(|| Error::UnknownOrbit(id.to_string()))
    }

    /// Appends an edge orbit addressed by orbit ids.
    pub fn push_edge(&mut self, tail: &str, head: &str, shift: impl Into<Vec<i64>>) -> Result<()> {
        let edge = EdgeOrbit::new(self.orbit_index(tail)?, self.orbit_index(head)?, shift);
        self.edge_orbits.push(edge);
        Ok(())
    }

    pub fn num_orbits(&self) -> usize {
        self.vertex_orbits.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edge_orbits.len()
    }
}

/// Representative positions (one per vertex orbit, in orbit order) and the
/// lattice basis stored column-wise.
#[derive(Debug, Clone, PartialEq)]
pub struct Placement {
    pub positions: Vec<DVector<f64>>,
    pub lattice: DMatrix<f64>,
}

impl Placement {
    pub fn new(positions: Vec<DVector<f64>>, lattice: DMatrix<f64>) -> Self {
        Placement { positions, lattice }
    }

    /// `Λ · shift`
    pub fn translation(&self, shift: &[i64]) -> DVector<f64> {
        let mut t = DVector::zeros(self.lattice.nrows());
        for (c, &w) in shift.iter().enumerate() {
            if w != 0 {
                t.axpy(w as f64, &self.lattice.column(c), 1.0);
            }
        }
        t
    }

    /// `p_b + Λw − p_a`
    pub fn separation(&self, a: usize, b: usize, shift: &[i64]) -> DVector<f64> {
        &self.positions[b] + self.translation(shift) - &self.positions[a]
    }

    /// Flattened coordinates `(p_1, …, p_n, λ_1, …, λ_d)`, matching the
    /// column layout of the rigidity matrix.
    pub fn to_coordinates(&self) -> DVector<f64> {
        let d = self.lattice.nrows();
        let n = self.positions.len();
        let mut x = DVector::zeros(d * n + d * d);
        for (i, p) in self.positions.iter().enumerate() {
            x.rows_mut(d * i, d).copy_from(p);
        }
        x.rows_mut(d * n, d * d)
            .copy_from_slice(self.lattice.as_slice());
        x
    }

    pub fn from_coordinates(x: &DVector<f64>, d: usize, n: usize) -> Self {
        let positions = (0..n).map(|i| x.rows(d * i, d).into_owned()).collect();
        let lattice = DMatrix::from_column_slice(d, d, &x.as_slice()[d * n..d * n + d * d]);
        Placement { positions, lattice }
    }
}

/// Relative threshold on `|det Λ|` against `(max column norm)^d`.
pub const LATTICE_DEGENERACY: f64 = 1e-12;

/// A validated d-periodic framework. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicFramework {
    graph: QuotientGraph,
    placement: Placement,
    edge_lengths: Vec<f64>,
}

impl PeriodicFramework {
    /// Checks every structural invariant and caches bar lengths.
    pub fn new(graph: QuotientGraph, placement: Placement) -> Result<Self> {
        let d = graph.dimension;
        if d == 0 {
            return Err(Error::InvalidDimension(0));
        }
        if graph.vertex_orbits.is_empty() {
            return Err(Error::InvalidInput(
                "framework needs at least one vertex orbit".into(),
            ));
        }
        for (i, id) in graph.vertex_orbits.iter().enumerate() {
            if graph.vertex_orbits[..i].contains(id) {
                return Err(Error::DuplicateOrbitId(id.clone()));
            }
        }
        if placement.positions.len() != graph.num_orbits() {
            return Err(Error::DimensionMismatch(format!(
                "{} positions for {} vertex orbits",
                placement.positions.len(),
                graph.num_orbits()
            )));
        }
        if let Some(p) = placement.positions.iter().find(|p| p.len() != d) {
            return Err(Error::DimensionMismatch(format!(
                "position of length {} in dimension {d}",
                p.len()
            )));
        }
        if placement.lattice.shape() != (d, d) {
            return Err(Error::DimensionMismatch(format!(
                "lattice is {}x{}, expected {d}x{d}",
                placement.lattice.nrows(),
                placement.lattice.ncols()
            )));
        }
        let scale = placement
            .lattice
            .column_iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max);
        let det = placement.lattice.determinant();
        let threshold = LATTICE_DEGENERACY * scale.powi(d as i32);
        if !(det.abs() > threshold) {
            return Err(Error::SingularLattice { det, threshold });
        }

        let mut seen: Vec<EdgeOrbit> = Vec::with_capacity(graph.num_edges());
        for (k, e) in graph.edge_orbits.iter().enumerate() {
            let n = graph.num_orbits();
            for &end in &[e.tail, e.head] {
                if end >= n {
                    return Err(Error::IndexOutOfRange { index: end, len: n });
                }
            }
            if e.shift.len() != d {
                return Err(Error::DimensionMismatch(format!(
                    "edge orbit {k} has a shift of length {}",
                    e.shift.len()
                )));
            }
            if e.is_loop() {
                return Err(Error::LoopEdge {
                    index: k,
                    orbit: graph.vertex_orbits[e.tail].clone(),
                });
            }
            let key = e.canonical();
            if let Some(existing) = seen.iter().position(|s| *s == key) {
                return Err(Error::DuplicateEdgeOrbit { index: k, existing });
            }
            seen.push(key);
        }

        let mut edge_lengths = Vec::with_capacity(graph.num_edges());
        for (k, e) in graph.edge_orbits.iter().enumerate() {
            let len = placement.separation(e.tail, e.head, &e.shift).norm();
            if !(len > 0.0) {
                return Err(Error::ZeroLengthEdge { index: k });
            }
            edge_lengths.push(len);
        }

        Ok(PeriodicFramework {
            graph,
            placement,
            edge_lengths,
        })
    }

    pub fn graph(&self) -> &QuotientGraph {
        &self.graph
    }

    pub fn placement(&self) -> &Placement {
        &self.placement
    }

    pub fn edge_lengths(&self) -> &[f64] {
        &self.edge_lengths
    }

    pub fn dimension(&self) -> usize {
        self.graph.dimension
    }

    pub fn num_orbits(&self) -> usize {
        self.graph.num_orbits()
    }

    pub fn num_edges(&self) -> usize {
        self.graph.num_edges()
    }

    pub fn orbit_index(&self, id: &str) -> Result<usize> {
        self.graph.orbit_index(id)
    }

    pub fn orbit_id(&self, index: usize) -> &str {
        &self.graph.vertex_orbits[index]
    }

    pub fn edge(&self, k: usize) -> Result<&EdgeOrbit> {
        self.graph.edge_orbits.get(k).ok_or(Error::IndexOutOfRange {
            index: k,
            len: self.num_edges(),
        })
    }

    /// Vector of the representative bar `p_head + Λ·shift − p_tail`.
    pub fn edge_vector(&self, k: usize) -> Result<DVector<f64>> {
        let e = self.edge(k)?;
        Ok(self.placement.separation(e.tail, e.head, &e.shift))
    }

    /// Position of the vertex `p_orbit + Λ·shift`.
    pub fn realized_vertex(&self, orbit: &str, shift: &[i64]) -> Result<DVector<f64>> {
        let i = self.orbit_index(orbit)?;
        if shift.len() != self.dimension() {
            return Err(Error::DimensionMismatch(format!(
                "shift of length {} in dimension {}",
                shift.len(),
                self.dimension()
            )));
        }
        Ok(&self.placement.positions[i] + self.placement.translation(shift))
    }

    /// Number of unknowns `dn + d²` of an infinitesimal motion.
    pub fn num_unknowns(&self) -> usize {
        let d = self.dimension();
        d * self.num_orbits() + d * d
    }

    /// Same graph at a different placement; bar lengths are recomputed.
    pub fn with_placement(&self, placement: Placement) -> Result<Self> {
        PeriodicFramework::new(self.graph.clone(), placement)
    }

    /// Same placement with an edited edge list.
    pub fn with_edges(&self, edges: Vec<EdgeOrbit>) -> Result<Self> {
        let graph = QuotientGraph {
            edge_orbits: edges,
            ..self.graph.clone()
        };
        PeriodicFramework::new(graph, self.placement.clone())
    }
}
