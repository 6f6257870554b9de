//! Nodal bases in physical coordinates.

use nalgebra::DMatrix;

use crate::geometry::{self, vec2, Vec2};

/// Affine frame `ξ = R (x - c) / s` aligned with a reference direction.
#[derive(Debug, Clone, Copy)]
pub struct LocalFrame {
    pub center: Vec2,
    pub scale: f64,
    /// Unit vector mapped to the ξ axis.
    pub axis: Vec2,
}

impl LocalFrame {
    pub fn new(center: Vec2, scale: f64, axis: Vec2) -> Self {
        let axis = axis.normalize();
        LocalFrame { center, scale, axis }
    }

    pub fn for_polygon(poly: &[Vec2]) -> Self {
        LocalFrame::new(geometry::centroid(poly), geometry::diameter(poly), poly[1] - poly[0])
    }

    #[inline]
    pub fn to_local(&self, x: &Vec2) -> Vec2 {
        let d = (x - self.center) / self.scale;
        vec2(
            self.axis.x * d.x + self.axis.y * d.y,
            -self.axis.y * d.x + self.axis.x * d.y,
        )
    }

    /// Physical gradient from a gradient with respect to ξ.
    #[inline]
    pub fn grad_to_physical(&self, g: &Vec2) -> Vec2 {
        vec2(
            self.axis.x * g.x - self.axis.y * g.y,
            self.axis.y * g.x + self.axis.x * g.y,
        ) / self.scale
    }

    /// Physical vector from a vector expressed in the ξ axes.
    #[inline]
    pub fn vector_to_physical(&self, v: &Vec2) -> Vec2 {
        vec2(
            self.axis.x * v.x - self.axis.y * v.y,
            self.axis.y * v.x + self.axis.x * v.y,
        )
    }
}

/// Exponent pairs `(a, b)` of `ξ^a η^b`.
pub fn total_degree_exponents(k: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for d in 0..=k {
        for b in 0..=d {
            out.push((d - b, b));
        }
    }
    out
}

pub fn tensor_exponents(k: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for b in 0..=k {
        for a in 0..=k {
            out.push((a, b));
        }
    }
    out
}

/// Monomial values and ξ-gradients at a local point.
pub fn eval_monomials(exps: &[(usize, usize)], xi: &Vec2, vals: &mut [f64], grads: &mut [Vec2]) {
    let max = exps.iter().map(|&(a, b)| a.max(b)).max().unwrap_or(0);
    let mut px = [1.0; 16];
    let mut py = [1.0; 16];
    for i in 1..=max {
        px[i] = px[i - 1] * xi.x;
        py[i] = py[i - 1] * xi.y;
    }
    for (j, &(a, b)) in exps.iter().enumerate() {
        vals[j] = px[a] * py[b];
        let dx = if a > 0 { a as f64 * px[a - 1] * py[b] } else { 0.0 };
        let dy = if b > 0 { b as f64 * px[a] * py[b - 1] } else { 0.0 };
        grads[j] = vec2(dx, dy);
    }
}

#[derive(Debug, Clone)]
pub struct LagrangeBasis {
    pub frame: LocalFrame,
    pub exponents: Vec<(usize, usize)>,
    /// `φ_σ = Σ_j coeffs[(j, σ)] m_j(ξ)`.
    pub coeffs: DMatrix<f64>,
}

impl LagrangeBasis {
    pub fn new(frame: LocalFrame, exponents: Vec<(usize, usize)>, nodes: &[Vec2]) -> Option<Self> {
        let n = nodes.len();
        assert_eq!(exponents.len(), n);
        let mut v = DMatrix::zeros(n, n);
        let mut vals = vec![0.0; n];
        let mut grads = vec![Vec2::zeros(); n];
        for (i, x) in nodes.iter().enumerate() {
            eval_monomials(&exponents, &frame.to_local(x), &mut vals, &mut grads);
            for j in 0..n {
                v[(i, j)] = vals[j];
            }
        }
        let lu = v.lu();
        let coeffs = lu.try_inverse()?;
        if coeffs.iter().any(|c| !c.is_finite()) {
            return None;
        }
        Some(LagrangeBasis { frame, exponents, coeffs })
    }

    pub fn eval(&self, x: &Vec2, phi: &mut [f64], grad: &mut [Vec2]) {
        let n = self.exponents.len();
        let mut mv = [0.0; 32];
        let mut mg = [Vec2::zeros(); 32];
        eval_monomials(&self.exponents, &self.frame.to_local(x), &mut mv[..n], &mut mg[..n]);
        for s in 0..n {
            let mut p = 0.0;
            let mut g = Vec2::zeros();
            for j in 0..n {
                let c = self.coeffs[(j, s)];
                p += c * mv[j];
                g += mg[j] * c;
            }
            phi[s] = p;
            grad[s] = self.frame.grad_to_physical(&g);
        }
    }
}

/// Wachspress coordinates on a strictly convex counter-clockwise polygon.
#[derive(Debug, Clone)]
pub struct WachspressBasis {
    pub vertices: Vec<Vec2>,
    corner: Vec<f64>,
    area_grad: Vec<Vec2>,
}

impl WachspressBasis {
    pub fn new(vertices: Vec<Vec2>) -> Option<Self> {
        if !geometry::is_convex(&vertices) {
            return None;
        }
        let n = vertices.len();
        let corner = (0..n)
            .map(|i| geometry::triangle_area(&vertices[(i + n - 1) % n], &vertices[i], &vertices[(i + 1) % n]))
            .collect();
        let area_grad = (0..n)
            .map(|j| {
                let (a, b) = (vertices[j], vertices[(j + 1) % n]);
                vec2(0.5 * (a.y - b.y), 0.5 * (b.x - a.x))
            })
            .collect();
        Some(WachspressBasis { vertices, corner, area_grad })
    }

    pub fn eval(&self, x: &Vec2, phi: &mut [f64], grad: &mut [Vec2]) {
        let n = self.vertices.len();
        let mut a = [0.0; 32];
        for j in 0..n {
            a[j] = geometry::triangle_area(x, &self.vertices[j], &self.vertices[(j + 1) % n]);
        }
        let mut wsum = 0.0;
        let mut gsum = Vec2::zeros();
        for i in 0..n {
            // edges i-1 and i touch vertex i
            let skip = |j: usize| j == i || j == (i + n - 1) % n;
            let mut w = self.corner[i];
            for j in (0..n).filter(|&j| !skip(j)) {
                w *= a[j];
            }
            let mut g = Vec2::zeros();
            for j in (0..n).filter(|&j| !skip(j)) {
                let mut p = self.corner[i];
                for l in (0..n).filter(|&l| !skip(l) && l != j) {
                    p *= a[l];
                }
                g += self.area_grad[j] * p;
            }
            phi[i] = w;
            grad[i] = g;
            wsum += w;
            gsum += g;
        }
        for i in 0..n {
            let p = phi[i] / wsum;
            grad[i] = (grad[i] - gsum * p) / wsum;
            phi[i] = p;
        }
    }
}

#[derive(Debug, Clone)]
pub enum Basis {
    Lagrange(LagrangeBasis),
    Wachspress(WachspressBasis),
}

impl Basis {
    pub fn len(&self) -> usize {
        match self {
            Basis::Lagrange(b) => b.exponents.len(),
            Basis::Wachspress(b) => b.vertices.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn eval(&self, x: &Vec2, phi: &mut [f64], grad: &mut [Vec2]) {
        match self {
            Basis::Lagrange(b) => b.eval(x, phi, grad),
            Basis::Wachspress(b) => b.eval(x, phi, grad),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_round_trip_gradient() {
        let f = LocalFrame::new(vec2(0.3, -1.0), 2.5, vec2(1.0, 2.0));
        // gradient of the linear map ξ_x through finite differences
        let x = vec2(0.7, 0.1);
        let h = 1e-6;
        let dx = (f.to_local(&(x + vec2(h, 0.0))).x - f.to_local(&(x - vec2(h, 0.0))).x) / (2.0 * h);
        let dy = (f.to_local(&(x + vec2(0.0, h))).x - f.to_local(&(x - vec2(0.0, h))).x) / (2.0 * h);
        let g = f.grad_to_physical(&vec2(1.0, 0.0));
        assert!((g - vec2(dx, dy)).norm() < 1e-9);
    }

    #[test]
    fn wachspress_on_square_is_bilinear() {
        let v = vec![vec2(0.0, 0.0), vec2(1.0, 0.0), vec2(1.0, 1.0), vec2(0.0, 1.0)];
        let b = WachspressBasis::new(v).unwrap();
        let mut phi = [0.0; 4];
        let mut grad = [Vec2::zeros(); 4];
        let x = vec2(0.3, 0.6);
        b.eval(&x, &mut phi, &mut grad);
        let exact = [0.7 * 0.4, 0.3 * 0.4, 0.3 * 0.6, 0.7 * 0.6];
        for i in 0..4 {
            assert!((phi[i] - exact[i]).abs() < 1e-14);
        }
        assert!((grad[0] - vec2(-0.4, -0.7)).norm() < 1e-14);
    }

    #[test]
    fn wachspress_rejects_nonconvex() {
        let v = vec![vec2(0.0, 0.0), vec2(2.0, 0.0), vec2(2.0, 2.0), vec2(1.0, 0.5), vec2(0.0, 2.0)];
        assert!(WachspressBasis::new(v).is_none());
    }
}
