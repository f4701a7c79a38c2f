//! Piecewise-linear finite elements with homogeneous Dirichlet conditions.

use std::ops::{Add, Mul, Neg, Sub};
use std::path::Path;
use std::sync::Arc;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{check_gamma, Mesh, Point};
use crate::quadrature::{weighted_points, QuadratureRule, WeightedPoint};
use crate::sparse::CsrMatrix;

/// Coefficients of an `H^1_0` function over the free (interior) vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteField(DVector<f64>);

impl Default for DiscreteField {
    fn default() -> Self {
        DiscreteField::zeros(0)
    }
}

impl DiscreteField {
    pub fn zeros(n: usize) -> Self {
        DiscreteField(DVector::zeros(n))
    }

    pub fn from_vec(values: Vec<f64>) -> Self {
        DiscreteField(DVector::from_vec(values))
    }

    pub fn from_vector(values: DVector<f64>) -> Self {
        DiscreteField(values)
    }

    pub fn coeffs(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn coeffs_mut(&mut self) -> &mut DVector<f64> {
        &mut self.0
    }

    pub fn into_inner(self) -> DVector<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&v| v == 0.0)
    }

    pub fn scaled(&self, s: f64) -> Self {
        DiscreteField(&self.0 * s)
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: f64, other: &DiscreteField) -> Self {
        DiscreteField(&self.0 + &other.0 * s)
    }

    pub fn dot(&self, other: &DiscreteField) -> f64 {
        self.0.dot(&other.0)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("# tm-field\n{}\n", self.len());
        for v in self.0.iter() {
            s.push_str(&format!("{v:e}\n"));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        let n: usize = lines
            .next()
            .ok_or_else(|| Error::Parse("empty field file".into()))?
            .parse()
            .map_err(|e| Error::Parse(format!("field length: {e}")))?;
        let values = lines
            .map(|l| l.parse::<f64>().map_err(|e| Error::Parse(format!("field value '{l}': {e}"))))
            .collect::<Result<Vec<_>>>()?;
        if values.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: values.len() });
        }
        Ok(DiscreteField::from_vec(values))
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

impl Add for &DiscreteField {
    type Output = DiscreteField;
    fn add(self, rhs: &DiscreteField) -> DiscreteField {
        DiscreteField(&self.0 + &rhs.0)
    }
}

impl Sub for &DiscreteField {
    type Output = DiscreteField;
    fn sub(self, rhs: &DiscreteField) -> DiscreteField {
        DiscreteField(&self.0 - &rhs.0)
    }
}

impl Mul<f64> for &DiscreteField {
    type Output = DiscreteField;
    fn mul(self, rhs: f64) -> DiscreteField {
        self.scaled(rhs)
    }
}

impl Neg for &DiscreteField {
    type Output = DiscreteField;
    fn neg(self) -> DiscreteField {
        self.scaled(-1.0)
    }
}

/// The P1 space on a mesh together with the weighted quadrature used for
/// every `|x|^-gamma` integral.
#[derive(Debug, Clone)]
pub struct FeSpace {
    mesh: Arc<Mesh>,
    gamma: f64,
    rule: QuadratureRule,
    dof_of_vertex: Vec<Option<usize>>,
    vertex_of_dof: Vec<usize>,
    element_dofs: Vec<[Option<usize>; 3]>,
    points: Vec<WeightedPoint>,
}

impl FeSpace {
    pub fn new(mesh: Arc<Mesh>, gamma: f64, rule: QuadratureRule) -> Result<Self> {
        check_gamma(gamma)?;
        mesh.check_areas()?;
        let mut dof_of_vertex = vec![None; mesh.num_vertices()];
        let mut vertex_of_dof = vec![];
        for (v, &b) in mesh.boundary_flags().iter().enumerate() {
            if !b {
                dof_of_vertex[v] = Some(vertex_of_dof.len());
                vertex_of_dof.push(v);
            }
        }
        let element_dofs = mesh
            .triangles()
            .iter()
            .map(|t| [dof_of_vertex[t[0]], dof_of_vertex[t[1]], dof_of_vertex[t[2]]])
            .collect();
        let points = weighted_points(&mesh, gamma, &rule)?;
        Ok(FeSpace { mesh, gamma, rule, dof_of_vertex, vertex_of_dof, element_dofs, points })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn mesh_arc(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn rule(&self) -> &QuadratureRule {
        &self.rule
    }

    pub fn num_dofs(&self) -> usize {
        self.vertex_of_dof.len()
    }

    pub fn dof_of_vertex(&self, v: usize) -> Option<usize> {
        self.dof_of_vertex[v]
    }

    pub fn vertex_of_dof(&self, i: usize) -> usize {
        self.vertex_of_dof[i]
    }

    pub fn element_dofs(&self, t: usize) -> [Option<usize>; 3] {
        self.element_dofs[t]
    }

    pub fn points(&self) -> &[WeightedPoint] {
        &self.points
    }

    pub fn zero(&self) -> DiscreteField {
        DiscreteField::zeros(self.num_dofs())
    }

    pub fn check(&self, u: &DiscreteField) -> Result<()> {
        if u.len() != self.num_dofs() {
            return Err(Error::DimensionMismatch { expected: self.num_dofs(), found: u.len() });
        }
        Ok(())
    }

    /// Nodal interpolant; boundary values of `f` are discarded.
    pub fn interpolate<F: Fn(Point) -> f64>(&self, f: F) -> DiscreteField {
        let verts = self.mesh.vertices();
        DiscreteField(DVector::from_iterator(
            self.num_dofs(),
            self.vertex_of_dof.iter().map(|&v| f(verts[v])),
        ))
    }

    /// Values of `u` at every quadrature point.
    pub fn values_at_points(&self, u: &DiscreteField) -> Result<Vec<f64>> {
        self.check(u)?;
        Ok(self
            .points
            .iter()
            .map(|p| {
                let dofs = &self.element_dofs[p.element];
                (0..3).filter_map(|k| dofs[k].map(|i| p.bary[k] * u.0[i])).sum()
            })
            .collect())
    }

    /// Vertex values including the zero boundary values.
    pub fn vertex_values(&self, u: &DiscreteField) -> Result<Vec<f64>> {
        self.check(u)?;
        Ok(self.dof_of_vertex.iter().map(|d| d.map_or(0.0, |i| u.0[i])).collect())
    }

    /// `int F(u(x), x) |x|^-gamma dx`.
    pub fn integrate_field<F: Fn(f64, Point) -> f64 + Sync>(&self, u: &DiscreteField, f: F) -> Result<f64> {
        let ys = self.pointwise(u, f)?;
        Ok(self.points.iter().zip(&ys).map(|(p, y)| p.weight * y).sum())
    }

    /// `F(u(x_q), x_q)` at every quadrature point, evaluated in parallel.
    fn pointwise<F: Fn(f64, Point) -> f64 + Sync>(&self, u: &DiscreteField, f: F) -> Result<Vec<f64>> {
        let vals = self.values_at_points(u)?;
        let ys: Vec<f64> = self.points.par_iter().zip(vals.par_iter()).map(|(p, &v)| f(v, p.x)).collect();
        if let Some(q) = ys.iter().position(|y| !y.is_finite()) {
            let x = self.points[q].x;
            return Err(Error::NonFiniteIntegrand { x: x[0], y: x[1] });
        }
        Ok(ys)
    }

    /// Vector `b_i = int phi_i F(u(x), x) |x|^-gamma dx`.
    pub fn load_vector<F: Fn(f64, Point) -> f64 + Sync>(&self, u: &DiscreteField, f: F) -> Result<DiscreteField> {
        let ys = self.pointwise(u, f)?;
        let mut b = DVector::zeros(self.num_dofs());
        for (p, &y) in self.points.iter().zip(&ys) {
            let dofs = &self.element_dofs[p.element];
            for k in 0..3 {
                if let Some(i) = dofs[k] {
                    b[i] += p.weight * p.bary[k] * y;
                }
            }
        }
        Ok(DiscreteField(b))
    }

    /// Stiffness matrix `int grad phi_i . grad phi_j` on the free vertices.
    pub fn stiffness(&self) -> CsrMatrix {
        let mut trip = Vec::with_capacity(9 * self.mesh.num_triangles());
        for t in 0..self.mesh.num_triangles() {
            let local = p1_stiffness(self.mesh.corners(t));
            let dofs = self.element_dofs[t];
            for a in 0..3 {
                for b in 0..3 {
                    if let (Some(i), Some(j)) = (dofs[a], dofs[b]) {
                        trip.push((i, j, local[a][b]));
                    }
                }
            }
        }
        CsrMatrix::from_triplets(self.num_dofs(), trip)
    }

    /// Weighted mass matrix `int phi_i phi_j |x|^-gamma`.
    pub fn weighted_mass(&self) -> CsrMatrix {
        let mut trip = Vec::with_capacity(9 * self.mesh.num_triangles());
        let mut start = 0;
        while start < self.points.len() {
            let t = self.points[start].element;
            let mut end = start;
            let mut local = [[0.0; 3]; 3];
            while end < self.points.len() && self.points[end].element == t {
                let p = &self.points[end];
                for a in 0..3 {
                    for b in 0..3 {
                        local[a][b] += p.weight * p.bary[a] * p.bary[b];
                    }
                }
                end += 1;
            }
            let dofs = self.element_dofs[t];
            for a in 0..3 {
                for b in 0..3 {
                    if let (Some(i), Some(j)) = (dofs[a], dofs[b]) {
                        trip.push((i, j, local[a][b]));
                    }
                }
            }
            start = end;
        }
        CsrMatrix::from_triplets(self.num_dofs(), trip)
    }
}

/// Element stiffness of the linear hat functions on a triangle.
pub fn p1_stiffness(c: [Point; 3]) -> [[f64; 3]; 3] {
    let area2 = (c[1][0] - c[0][0]) * (c[2][1] - c[0][1]) - (c[2][0] - c[0][0]) * (c[1][1] - c[0][1]);
    // grad lambda_i = (y_j - y_k, x_k - x_j) / (2A) for cyclic (i, j, k)
    let g: Vec<[f64; 2]> = (0..3)
        .map(|i| {
            let (j, k) = ((i + 1) % 3, (i + 2) % 3);
            [(c[j][1] - c[k][1]) / area2, (c[k][0] - c[j][0]) / area2]
        })
        .collect();
    let area = 0.5 * area2;
    let mut k = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            k[a][b] = area * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
        }
    }
    k
}

/// `sqrt(int u^2 |x|^-gamma dx)` together with the weight exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedNormValue {
    pub value: f64,
    pub gamma: f64,
}

pub fn weighted_l2_norm(u: &DiscreteField, space: &FeSpace) -> Result<WeightedNormValue> {
    let sq = space.integrate_field(u, |v, _| v * v)?;
    Ok(WeightedNormValue { value: sq.max(0.0).sqrt(), gamma: space.gamma() })
}
