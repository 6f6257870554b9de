//! Gauss–Legendre based rules on segments, triangles and simple polygons.

use crate::geometry::{self, Vec2};

#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub points: Vec<Vec2>,
    pub weights: Vec<f64>,
    /// Total polynomial degree integrated exactly.
    pub order: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(&Vec2) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(p, w)| w * f(p)).sum()
    }

    pub fn measure(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// `n`-point Gauss–Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    if n == 1 {
        return (vec![0.0], vec![2.0]);
    }
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * z * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() <= 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// Gauss rule on the segment `a → b`, points ordered from `a` to `b`.
pub fn edge_rule(a: &Vec2, b: &Vec2, order: usize) -> QuadratureRule {
    let n = (order + 2) / 2;
    let (x, w) = gauss_legendre(n.max(1));
    let len = (b - a).norm();
    let points = x.iter().map(|&t| a + (b - a) * (0.5 * (t + 1.0))).collect();
    let weights = w.iter().map(|&wi| 0.5 * len * wi).collect();
    QuadratureRule { points, weights, order: 2 * n - 1 }
}

/// Collapsed (Duffy) tensor Gauss rule on the triangle `(a, b, c)`.
pub fn triangle_rule(a: &Vec2, b: &Vec2, c: &Vec2, order: usize) -> QuadratureRule {
    // degree d becomes degree d + 1 in the collapsed direction
    let n = (order + 3) / 2;
    let (x, w) = gauss_legendre(n);
    let area = geometry::triangle_area(a, b, c).abs();
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for (xi, wi) in x.iter().zip(&w) {
        let s = 0.5 * (xi + 1.0);
        for (xj, wj) in x.iter().zip(&w) {
            let t = 0.5 * (xj + 1.0) * (1.0 - s);
            points.push(a + (b - a) * s + (c - a) * t);
            // reference triangle has area 1/2; Jacobian of the collapse is (1 - s)
            weights.push(2.0 * area * 0.25 * wi * wj * (1.0 - s));
        }
    }
    QuadratureRule { points, weights, order }
}

/// Rule on a simple counter-clockwise polygon by ear-clipping into triangles.
pub fn polygon_rule(poly: &[Vec2], order: usize) -> QuadratureRule {
    let tris = geometry::triangulate(poly);
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for t in tris {
        let r = triangle_rule(&poly[t[0]], &poly[t[1]], &poly[t[2]], order);
        points.extend(r.points);
        weights.extend(r.weights);
    }
    QuadratureRule { points, weights, order }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::vec2;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    #[test]
    fn legendre_weights_and_symmetry() {
        for n in 1..=12 {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
            for i in 0..n {
                assert!((x[i] + x[n - 1 - i]).abs() < 1e-15);
                assert!(w[i] > 0.0);
            }
            // exact for x^(2n-1) and x^(2n-2)
            let d = 2 * n - 2;
            let q: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(d as i32)).sum();
            assert!((q - 2.0 / (d as f64 + 1.0)).abs() < 1e-14);
        }
    }

    #[test]
    fn unit_triangle_moments() {
        let (a, b, c) = (vec2(0.0, 0.0), vec2(1.0, 0.0), vec2(0.0, 1.0));
        for order in 1..=10usize {
            let r = triangle_rule(&a, &b, &c, order);
            for p in 0..=order as u32 {
                for q in 0..=(order as u32 - p) {
                    let exact = factorial(p) * factorial(q) / factorial(p + q + 2);
                    let got = r.integrate(|x| x.x.powi(p as i32) * x.y.powi(q as i32));
                    assert!((got - exact).abs() < 1e-14, "order {order} x^{p} y^{q}");
                }
            }
        }
        let r = triangle_rule(&a, &b, &c, 2);
        assert!((r.integrate(|x| x.x * x.y) - 1.0 / 24.0).abs() < 1e-14);
    }

    #[test]
    fn edge_rule_on_length_two() {
        let (a, b) = (vec2(0.0, 0.0), vec2(2.0, 0.0));
        let r = edge_rule(&a, &b, 3);
        assert!((r.measure() - 2.0).abs() < 1e-15);
        assert!((r.integrate(|x| x.x.powi(3)) - 4.0).abs() < 1e-14);
        let n = r.len();
        for i in 0..n {
            let m = 0.5 * (r.points[i] + r.points[n - 1 - i]);
            assert!((m - vec2(1.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn hexagon_second_moment() {
        let poly: Vec<Vec2> = (0..6)
            .map(|i| {
                let t = std::f64::consts::FRAC_PI_3 * i as f64;
                vec2(0.3 + t.cos(), -0.2 + t.sin())
            })
            .collect();
        let r = polygon_rule(&poly, 4);
        let n = poly.len();
        let mut exact = 0.0;
        for i in 0..n {
            let (p, q) = (poly[i], poly[(i + 1) % n]);
            exact += (p.x * q.y - q.x * p.y) * (p.x * p.x + p.x * q.x + q.x * q.x);
        }
        exact /= 12.0;
        assert!((r.integrate(|x| x.x * x.x) - exact).abs() < 1e-13);
        assert!((r.measure() - geometry::signed_area(&poly)).abs() < 1e-13);
    }
}
