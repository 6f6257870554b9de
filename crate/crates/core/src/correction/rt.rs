use nalgebra::{DMatrix, DVector};

use super::vector_space::VectorPolySpace;
use super::CorrectionError;
use crate::approximation::basis::{eval_monomials, total_degree_exponents, LocalFrame};
use crate::approximation::ElementSpace;
use crate::geometry::Vec2;
use crate::mesh::{ElementKind, MeshDocument, Mesh};

/// Dual basis `h_{f,j}` of `RT_p` for normal traces at the flux points
/// (the edge quadrature points) and interior moments against `(P_{p-1})²`.
#[derive(Debug, Clone)]
pub struct RtBasis {
    pub space: VectorPolySpace,
    pub degree: usize,
    /// `h_i = Σ_b dual[(b, i)] w_b`; traces first, then moments.
    pub dual: DMatrix<f64>,
    pub n_trace: usize,
    pub flux_points: Vec<Vec<Vec2>>,
    pub normals: Vec<Vec2>,
}

impl RtBasis {
    pub fn new(space: &ElementSpace) -> Result<Self, CorrectionError> {
        let element = space.element;
        if space.kind != ElementKind::Triangle {
            return Err(CorrectionError::NotTriangle { element });
        }
        let p = space.degree;
        for (i, t) in space.edges.iter().enumerate() {
            if t.rule.len() != p + 1 {
                return Err(CorrectionError::FluxPoints {
                    element,
                    edge: i,
                    expected: p + 1,
                    found: t.rule.len(),
                });
            }
        }
        let frame = LocalFrame::for_polygon(&space.vertices);
        let vs = VectorPolySpace::raviart_thomas(frame, p);
        let nb = vs.len();
        let n_trace = 3 * (p + 1);
        let mut d = DMatrix::zeros(nb, nb);
        let mut vals = vec![Vec2::zeros(); nb];
        let mut divs = vec![0.0; nb];
        let mut row = 0;
        for t in &space.edges {
            for x in &t.rule.points {
                vs.eval(x, &mut vals, &mut divs);
                for b in 0..nb {
                    d[(row, b)] = vals[b].dot(&t.normal);
                }
                row += 1;
            }
        }
        if p >= 1 {
            let exps = total_degree_exponents(p - 1);
            let mut mv = vec![0.0; exps.len()];
            let mut mg = vec![Vec2::zeros(); exps.len()];
            let axes = [frame.vector_to_physical(&Vec2::x()), frame.vector_to_physical(&Vec2::y())];
            for (q, x) in space.volume.points.iter().enumerate() {
                let w = space.volume.weights[q] / space.area;
                vs.eval(x, &mut vals, &mut divs);
                eval_monomials(&exps, &frame.to_local(x), &mut mv, &mut mg);
                for (j, m) in mv.iter().enumerate() {
                    for (a, axis) in axes.iter().enumerate() {
                        let r = n_trace + 2 * j + a;
                        for b in 0..nb {
                            d[(r, b)] += w * m * vals[b].dot(axis);
                        }
                    }
                }
            }
        }
        let svd = d.clone().svd(false, false);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        let condition = smax / smin;
        if !(condition.is_finite() && condition < 1e12) {
            return Err(CorrectionError::SingularDual { element, condition });
        }
        let dual = d
            .try_inverse()
            .ok_or(CorrectionError::SingularDual { element, condition })?;
        Ok(RtBasis {
            space: vs,
            degree: p,
            dual,
            n_trace,
            flux_points: space.edges.iter().map(|t| t.rule.points.clone()).collect(),
            normals: space.edges.iter().map(|t| t.normal).collect(),
        })
    }

    /// Basis on the triangle `(0,0), (1,0), (0,1)` with Gauss flux points.
    pub fn reference(p: usize) -> Result<Self, CorrectionError> {
        let doc = MeshDocument {
            vertices: vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            elements: vec![vec![0, 1, 2]],
            boundary: Vec::new(),
        };
        let mesh = Mesh::from_document(&doc).expect("reference triangle");
        let space = ElementSpace::build(&mesh, 0, p).map_err(|_| CorrectionError::NotTriangle { element: 0 })?;
        Self::new(&space)
    }

    pub fn len(&self) -> usize {
        self.space.len()
    }

    pub fn is_empty(&self) -> bool {
        self.space.is_empty()
    }

    /// `h_i(x)` and `∇·h_i(x)`.
    pub fn member(&self, i: usize, x: &Vec2) -> (Vec2, f64) {
        let nb = self.len();
        let mut vals = vec![Vec2::zeros(); nb];
        let mut divs = vec![0.0; nb];
        self.space.eval(x, &mut vals, &mut divs);
        let mut v = Vec2::zeros();
        let mut d = 0.0;
        for b in 0..nb {
            v += vals[b] * self.dual[(b, i)];
            d += divs[b] * self.dual[(b, i)];
        }
        (v, d)
    }

    /// `[(f₂, j₂), (f, j)] = h_{f,j}(r_{f₂,j₂})·n_{f₂}`.
    pub fn cardinal_matrix(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n_trace, self.n_trace);
        let mut row = 0;
        for (f, pts) in self.flux_points.iter().enumerate() {
            for x in pts {
                for i in 0..self.n_trace {
                    m[(row, i)] = self.member(i, x).0.dot(&self.normals[f]);
                }
                row += 1;
            }
        }
        m
    }
}

#[derive(Debug, Clone)]
pub struct RtSolver {
    /// Trace columns of the dual matrix.
    dual_trace: DMatrix<f64>,
}

impl RtSolver {
    pub fn new(basis: RtBasis) -> Self {
        RtSolver { dual_trace: basis.dual.columns(0, basis.n_trace).into_owned() }
    }

    pub(super) fn empty() -> Self {
        RtSolver { dual_trace: DMatrix::zeros(0, 0) }
    }

    /// `∇ψ̃ = Σ_{f,j} α_{f,j} h_{f,j}` with interior moments set to zero.
    pub fn coefficients(&self, alpha: &[f64]) -> Vec<f64> {
        (&self.dual_trace * DVector::from_column_slice(alpha)).as_slice().to_vec()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approximation::basis::total_degree_exponents;
    use crate::geometry::vec2;

    #[test]
    fn reference_dimensions_and_cardinality() {
        for p in 1..=3 {
            let b = RtBasis::reference(p).unwrap();
            assert_eq!(b.len(), (p + 1) * (p + 3));
            assert_eq!(b.n_trace, 3 * (p + 1));
            let c = b.cardinal_matrix();
            let err = (c - DMatrix::identity(b.n_trace, b.n_trace)).abs().max();
            assert!(err <= 1e-12, "p={p}: {err}");
        }
        assert_eq!(RtBasis::reference(1).unwrap().len(), 8);
    }

    /// Least-squares fit residual of samples onto monomials of `degree`,
    /// relative to the largest sample.
    fn fit_residual(points: &[Vec2], values: &[f64], degree: usize) -> f64 {
        let exps = total_degree_exponents(degree);
        let mut a = DMatrix::zeros(points.len(), exps.len());
        let mut mv = vec![0.0; exps.len()];
        let mut mg = vec![Vec2::zeros(); exps.len()];
        for (i, x) in points.iter().enumerate() {
            eval_monomials(&exps, x, &mut mv, &mut mg);
            for j in 0..exps.len() {
                a[(i, j)] = mv[j];
            }
        }
        let y = DVector::from_column_slice(values);
        let c = a.clone().svd(true, true).solve(&y, 1e-14).unwrap();
        (a * c - &y).amax() / y.amax().max(1.0)
    }

    #[test]
    fn divergence_and_traces_are_polynomial() {
        for p in 1..=3 {
            let b = RtBasis::reference(p).unwrap();
            let pts: Vec<Vec2> = (0..40)
                .map(|i| {
                    let s = ((i * 7) % 13) as f64 / 13.0;
                    let t = ((i * 5) % 11) as f64 / 11.0 * (1.0 - s);
                    vec2(s, t)
                })
                .collect();
            for i in 0..b.len() {
                let d: Vec<f64> = pts.iter().map(|x| b.member(i, x).1).collect();
                let fr = fit_residual(&pts, &d, p);
                assert!(fr <= 1e-11, "p={p} i={i} {fr}");
                // normal trace on the x axis edge is a degree-p polynomial in x
                let edge: Vec<Vec2> = (0..12).map(|j| vec2(j as f64 / 11.0, 0.0)).collect();
                let tr: Vec<f64> = edge.iter().map(|x| -b.member(i, x).0.y).collect();
                let line: Vec<Vec2> = edge.iter().map(|x| vec2(x.x, 0.0)).collect();
                let exps_line_fit = fit_residual(&line, &tr, p);
                assert!(exps_line_fit <= 1e-11);
            }
        }
    }
}
