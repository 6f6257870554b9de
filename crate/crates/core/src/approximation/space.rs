use nalgebra::DMatrix;
use thiserror::Error;

use super::basis::{tensor_exponents, total_degree_exponents, Basis, LagrangeBasis, LocalFrame, WachspressBasis};
use super::quadrature::{edge_rule, polygon_rule, triangle_rule, QuadratureRule};
use crate::geometry::{self, Vec2};
use crate::mesh::{ElementKind, Mesh};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpaceError {
    #[error("element {element}: degree {degree} is not supported on {kind:?} elements")]
    Unsupported { element: usize, kind: ElementKind, degree: usize },
    #[error("element {element}: nodal basis is singular")]
    SingularBasis { element: usize },
    #[error("point ({x}, {y}) lies outside element {element}")]
    Outside { element: usize, x: f64, y: f64 },
}

/// Optional overrides of the default quadrature orders.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct QuadratureOrders {
    pub volume: Option<usize>,
    pub edge: Option<usize>,
}

/// Highest polynomial degree present in the element basis.
pub fn polynomial_degree(kind: ElementKind, k: usize) -> usize {
    match kind {
        ElementKind::Triangle => k,
        ElementKind::Quad => 2 * k,
        ElementKind::Polygon => 2,
    }
}

/// Rational Wachspress integrands need a high order for round-off level
/// Gauss identities.
pub const POLYGON_VOLUME_ORDER: usize = 20;
pub const POLYGON_EDGE_ORDER: usize = 5;

pub fn default_volume_order(kind: ElementKind, k: usize) -> usize {
    match kind {
        ElementKind::Polygon => POLYGON_VOLUME_ORDER,
        _ => 2 * polynomial_degree(kind, k),
    }
}

pub fn default_edge_order(kind: ElementKind, k: usize) -> usize {
    match kind {
        ElementKind::Polygon => POLYGON_EDGE_ORDER,
        _ => 2 * polynomial_degree(kind, k) + 1,
    }
}

/// Basis values on one local edge at the points of the shared edge rule.
#[derive(Debug, Clone)]
pub struct EdgeTable {
    pub global: usize,
    /// Outward from this element.
    pub normal: Vec2,
    pub length: f64,
    pub rule: QuadratureRule,
    /// Row-major `[q][σ]`.
    pub phi: Vec<f64>,
    /// Element and local edge on the other side.
    pub neighbor: Option<(usize, usize)>,
}

impl EdgeTable {
    pub fn is_boundary(&self) -> bool {
        self.neighbor.is_none()
    }
}

#[derive(Debug, Clone)]
pub struct ElementSpace {
    pub element: usize,
    pub kind: ElementKind,
    pub degree: usize,
    pub vertices: Vec<Vec2>,
    pub area: f64,
    /// `2|K| / perimeter`.
    pub h: f64,
    pub diameter: f64,
    nodes: Vec<Vec2>,
    basis: Basis,
    lattice: Option<Vec<(usize, usize)>>,
    pub volume: QuadratureRule,
    /// Row-major `[q][σ]`.
    pub vol_phi: Vec<f64>,
    pub vol_grad: Vec<Vec2>,
    pub edges: Vec<EdgeTable>,
}

/// One rule per global edge, oriented along the edge's stored vertex order.
pub fn edge_rules(mesh: &Mesh, degree: usize, order: Option<usize>) -> Vec<QuadratureRule> {
    mesh.edges
        .iter()
        .enumerate()
        .map(|(id, ed)| {
            let o = order.unwrap_or_else(|| {
                let mut o = default_edge_order(mesh.elements[ed.left_element].kind(), degree);
                if let Some(r) = ed.right_element {
                    o = o.max(default_edge_order(mesh.elements[r].kind(), degree));
                }
                o
            });
            let (a, b) = mesh.edge_endpoints(id);
            edge_rule(&a, &b, o)
        })
        .collect()
}

impl ElementSpace {
    /// Space with default quadrature orders.
    pub fn build(mesh: &Mesh, element: usize, degree: usize) -> Result<Self, SpaceError> {
        let rules = edge_rules(mesh, degree, None);
        Self::new(mesh, element, degree, None, &rules)
    }

    pub fn new(
        mesh: &Mesh,
        element: usize,
        degree: usize,
        volume_order: Option<usize>,
        edge_rules: &[QuadratureRule],
    ) -> Result<Self, SpaceError> {
        let el = &mesh.elements[element];
        let kind = el.kind();
        let vertices = mesh.element_vertices(element);
        let unsupported = SpaceError::Unsupported { element, kind, degree };
        if !(1..=3).contains(&degree) || (kind == ElementKind::Polygon && degree != 1) {
            return Err(unsupported);
        }
        let frame = LocalFrame::for_polygon(&vertices);
        let (nodes, basis, lattice) = match kind {
            ElementKind::Triangle => {
                let (nodes, lattice) = triangle_nodes(&vertices, degree);
                let b = LagrangeBasis::new(frame, total_degree_exponents(degree), &nodes)
                    .ok_or(SpaceError::SingularBasis { element })?;
                (nodes, Basis::Lagrange(b), Some(lattice))
            }
            ElementKind::Quad => {
                let (nodes, lattice) = quad_nodes(&vertices, degree);
                let b = LagrangeBasis::new(frame, tensor_exponents(degree), &nodes)
                    .ok_or(SpaceError::SingularBasis { element })?;
                (nodes, Basis::Lagrange(b), Some(lattice))
            }
            ElementKind::Polygon => {
                let b = WachspressBasis::new(vertices.clone()).ok_or(unsupported)?;
                (vertices.clone(), Basis::Wachspress(b), None)
            }
        };
        let vorder = volume_order.unwrap_or_else(|| default_volume_order(kind, degree));
        let volume = if kind == ElementKind::Triangle {
            triangle_rule(&vertices[0], &vertices[1], &vertices[2], vorder)
        } else {
            polygon_rule(&vertices, vorder)
        };
        let n = nodes.len();
        let mut vol_phi = vec![0.0; volume.len() * n];
        let mut vol_grad = vec![Vec2::zeros(); volume.len() * n];
        for (q, x) in volume.points.iter().enumerate() {
            basis.eval(x, &mut vol_phi[q * n..(q + 1) * n], &mut vol_grad[q * n..(q + 1) * n]);
        }
        let mut grad_scratch = vec![Vec2::zeros(); n];
        let edges = el
            .edge_ids
            .iter()
            .map(|&id| {
                let ed = &mesh.edges[id];
                let rule = edge_rules[id].clone();
                let mut phi = vec![0.0; rule.len() * n];
                for (q, x) in rule.points.iter().enumerate() {
                    basis.eval(x, &mut phi[q * n..(q + 1) * n], &mut grad_scratch);
                }
                let neighbor = if ed.left_element == element {
                    ed.right_element.zip(ed.right_local)
                } else {
                    Some((ed.left_element, ed.left_local))
                };
                EdgeTable {
                    global: id,
                    normal: mesh.outward_normal(element, id),
                    length: ed.length,
                    rule,
                    phi,
                    neighbor,
                }
            })
            .collect();
        Ok(ElementSpace {
            element,
            kind,
            degree,
            area: el.area,
            h: 2.0 * el.area / geometry::perimeter(&vertices),
            diameter: geometry::diameter(&vertices),
            vertices,
            nodes,
            basis,
            lattice,
            volume,
            vol_phi,
            vol_grad,
            edges,
        })
    }

    pub fn ndof(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[Vec2] {
        &self.nodes
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn polynomial_degree(&self) -> usize {
        polynomial_degree(self.kind, self.degree)
    }

    /// Basis values and physical gradients at `x`.
    pub fn eval(&self, x: &Vec2) -> (Vec<f64>, Vec<Vec2>) {
        let n = self.ndof();
        let mut phi = vec![0.0; n];
        let mut grad = vec![Vec2::zeros(); n];
        self.basis.eval(x, &mut phi, &mut grad);
        (phi, grad)
    }

    pub fn eval_into(&self, x: &Vec2, phi: &mut [f64], grad: &mut [Vec2]) {
        self.basis.eval(x, phi, grad);
    }

    pub fn contains(&self, x: &Vec2) -> bool {
        geometry::contains(&self.vertices, x, 1e-10 * self.diameter)
    }

    /// `u^h(x) = Σ u_σ φ_σ(x)`.
    pub fn interpolate(&self, coeffs: &[f64], x: &Vec2) -> Result<f64, SpaceError> {
        if !self.contains(x) {
            return Err(SpaceError::Outside { element: self.element, x: x.x, y: x.y });
        }
        let (phi, _) = self.eval(x);
        Ok(phi.iter().zip(coeffs).map(|(p, c)| p * c).sum())
    }

    /// Nodal coefficients of `f`.
    pub fn interpolant(&self, f: impl Fn(&Vec2) -> f64) -> Vec<f64> {
        self.nodes.iter().map(f).collect()
    }

    /// A quadrature rule of the given order on this element.
    pub fn volume_rule(&self, order: usize) -> QuadratureRule {
        if self.kind == ElementKind::Triangle {
            triangle_rule(&self.vertices[0], &self.vertices[1], &self.vertices[2], order)
        } else {
            polygon_rule(&self.vertices, order)
        }
    }

    /// Consistent mass matrix on the volume rule.
    pub fn mass_matrix(&self) -> DMatrix<f64> {
        let n = self.ndof();
        let mut m = DMatrix::zeros(n, n);
        for (q, w) in self.volume.weights.iter().enumerate() {
            let row = &self.vol_phi[q * n..(q + 1) * n];
            for i in 0..n {
                for j in 0..n {
                    m[(i, j)] += w * row[i] * row[j];
                }
            }
        }
        m
    }

    /// Triangles whose vertices are exactly the DOFs.
    pub fn sub_triangles(&self) -> Vec<[usize; 3]> {
        let k = self.degree;
        match (self.kind, &self.lattice) {
            (ElementKind::Triangle, Some(lat)) => {
                let idx = |i: usize, j: usize| lat.iter().position(|&p| p == (i, j)).unwrap();
                let mut out = Vec::with_capacity(k * k);
                for j in 0..k {
                    for i in 0..k - j {
                        out.push([idx(i, j), idx(i + 1, j), idx(i, j + 1)]);
                        if i + j + 2 <= k {
                            out.push([idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1)]);
                        }
                    }
                }
                out
            }
            (ElementKind::Quad, Some(_)) => {
                let idx = |i: usize, j: usize| j * (k + 1) + i;
                let mut out = Vec::with_capacity(2 * k * k);
                for j in 0..k {
                    for i in 0..k {
                        let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
                        out.push([a, b, c]);
                        out.push([a, c, d]);
                    }
                }
                out
            }
            _ => (1..self.ndof() - 1).map(|i| [0, i, i + 1]).collect(),
        }
    }
}

fn triangle_nodes(v: &[Vec2], k: usize) -> (Vec<Vec2>, Vec<(usize, usize)>) {
    let mut nodes = Vec::new();
    let mut lattice = Vec::new();
    let kf = k as f64;
    for j in 0..=k {
        for i in 0..=k - j {
            nodes.push(v[0] + (v[1] - v[0]) * (i as f64 / kf) + (v[2] - v[0]) * (j as f64 / kf));
            lattice.push((i, j));
        }
    }
    (nodes, lattice)
}

fn quad_nodes(v: &[Vec2], k: usize) -> (Vec<Vec2>, Vec<(usize, usize)>) {
    let mut nodes = Vec::new();
    let mut lattice = Vec::new();
    let kf = k as f64;
    for j in 0..=k {
        for i in 0..=k {
            let (s, t) = (i as f64 / kf, j as f64 / kf);
            nodes.push(
                v[0] * ((1.0 - s) * (1.0 - t)) + v[1] * (s * (1.0 - t)) + v[2] * (s * t) + v[3] * ((1.0 - s) * t),
            );
            lattice.push((i, j));
        }
    }
    (nodes, lattice)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::vec2;
    use crate::mesh::generators;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn check_invariants(s: &ElementSpace) {
        let n = s.ndof();
        for (i, x) in s.nodes().iter().enumerate() {
            let (phi, _) = s.eval(x);
            for (j, p) in phi.iter().enumerate() {
                let d = if i == j { 1.0 } else { 0.0 };
                assert!((p - d).abs() < 1e-12, "lagrange {i} {j}: {p}");
            }
        }
        for q in 0..s.volume.len() {
            let sum: f64 = s.vol_phi[q * n..(q + 1) * n].iter().sum();
            let gsum: Vec2 = s.vol_grad[q * n..(q + 1) * n].iter().sum();
            assert!((sum - 1.0).abs() < 1e-13);
            assert!(gsum.norm() < 1e-12 * (1.0 + 1.0 / s.h));
        }
    }

    #[test]
    fn dof_counts() {
        let m = generators::unit_square_triangles(1);
        for k in 1..=3 {
            let s = ElementSpace::build(&m, 0, k).unwrap();
            assert_eq!(s.ndof(), (k + 1) * (k + 2) / 2);
            check_invariants(&s);
            let tris = s.sub_triangles();
            assert_eq!(tris.len(), k * k);
        }
    }

    #[test]
    fn quads_and_perturbed_quads() {
        let m = generators::perturb_interior(&generators::unit_square_quads(3), 0.2, 3);
        for k in 1..=3 {
            for e in 0..m.elements.len() {
                let s = ElementSpace::build(&m, e, k).unwrap();
                assert_eq!(s.ndof(), (k + 1) * (k + 1));
                check_invariants(&s);
            }
        }
    }

    #[test]
    fn rotated_square_quad_is_unisolvent() {
        let doc = r#"{"vertices": [[1,0],[0,1],[-1,0],[0,-1]], "elements": [[0,1,2,3]]}"#;
        let m = Mesh::from_json_str(doc).unwrap();
        let s = ElementSpace::build(&m, 0, 1).unwrap();
        check_invariants(&s);
    }

    #[test]
    fn hexagon_wachspress_partition_of_unity() {
        let m = generators::regular_hexagon(1.0);
        let s = ElementSpace::build(&m, 0, 1).unwrap();
        assert_eq!(s.ndof(), 6);
        check_invariants(&s);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut hits = 0;
        while hits < 50 {
            let x = vec2(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            if !s.contains(&x) {
                continue;
            }
            hits += 1;
            let (phi, grad) = s.eval(&x);
            assert!((phi.iter().sum::<f64>() - 1.0).abs() <= 1e-13);
            assert!(grad.iter().sum::<Vec2>().norm() <= 1e-12);
            // linear precision
            let xs: Vec2 = s.nodes().iter().zip(&phi).map(|(p, w)| p * *w).sum();
            assert!((xs - x).norm() < 1e-13);
        }
        assert!(matches!(ElementSpace::build(&m, 0, 2), Err(SpaceError::Unsupported { .. })));
    }

    #[test]
    fn gradients_match_finite_differences() {
        let meshes = [
            generators::unit_square_triangles(1),
            generators::perturb_interior(&generators::unit_square_quads(2), 0.2, 1),
            generators::regular_hexagon(0.7),
        ];
        for m in &meshes {
            let k = if m.elements[0].kind() == ElementKind::Polygon { 1 } else { 3 };
            let s = ElementSpace::build(m, 0, k).unwrap();
            let h = 1e-6;
            for x in &s.volume.points {
                let (_, g) = s.eval(x);
                let (px, _) = s.eval(&(x + vec2(h, 0.0)));
                let (mx, _) = s.eval(&(x - vec2(h, 0.0)));
                let (py, _) = s.eval(&(x + vec2(0.0, h)));
                let (my, _) = s.eval(&(x - vec2(0.0, h)));
                for i in 0..s.ndof() {
                    let fd = vec2((px[i] - mx[i]) / (2.0 * h), (py[i] - my[i]) / (2.0 * h));
                    assert!((fd - g[i]).norm() < 1e-6, "{:?} vs {:?}", fd, g[i]);
                }
            }
        }
    }

    #[test]
    fn interpolation_reproduces_polynomials() {
        let m = generators::unit_square_triangles(1);
        let s1 = ElementSpace::build(&m, 0, 1).unwrap();
        let c = s1.interpolant(|x| x.x + 2.0 * x.y);
        let g = m.elements[0].centroid;
        assert!((s1.interpolate(&c, &g).unwrap() - (g.x + 2.0 * g.y)).abs() < 1e-14);
        assert!((s1.interpolate(&[4.0, 4.0, 4.0], &g).unwrap() - 4.0).abs() < 1e-14);
        let s2 = ElementSpace::build(&m, 1, 2).unwrap();
        let c = s2.interpolant(|x| x.x * x.x);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut n = 0;
        while n < 20 {
            let x = vec2(rng.gen(), rng.gen());
            if !s2.contains(&x) {
                continue;
            }
            n += 1;
            assert!((s2.interpolate(&c, &x).unwrap() - x.x * x.x).abs() <= 1e-12);
        }
        assert!(matches!(s2.interpolate(&c, &vec2(0.9, 0.1)), Err(SpaceError::Outside { .. })));
    }

    #[test]
    fn closed_boundary_quadrature_normals() {
        for m in [generators::unit_square_triangles(2), generators::honeycomb(1, 1.0)] {
            for e in 0..m.elements.len() {
                let s = ElementSpace::build(&m, e, 1).unwrap();
                let mut acc = Vec2::zeros();
                let mut per = 0.0;
                for t in &s.edges {
                    acc += t.normal * t.rule.measure();
                    per += t.length;
                }
                assert!(acc.norm() <= 1e-13 * per);
            }
        }
    }
}
