//! Vector polynomial spaces written in an element's local frame.

use crate::approximation::basis::{total_degree_exponents, LocalFrame};
use crate::geometry::{vec2, Vec2};

/// `Σ c ξ^a η^b` per local component.
#[derive(Debug, Clone, Default)]
pub struct VectorMember {
    pub terms: [Vec<(f64, usize, usize)>; 2],
}

impl VectorMember {
    fn axis(d: usize, a: usize, b: usize) -> Self {
        let mut m = VectorMember::default();
        m.terms[d].push((1.0, a, b));
        m
    }

    fn radial(a: usize, b: usize) -> Self {
        VectorMember { terms: [vec![(1.0, a + 1, b)], vec![(1.0, a, b + 1)]] }
    }

    fn degree(&self) -> usize {
        self.terms
            .iter()
            .flatten()
            .map(|&(_, a, b)| a + b)
            .max()
            .unwrap_or(0)
    }
}

#[derive(Debug, Clone)]
pub struct VectorPolySpace {
    pub frame: LocalFrame,
    pub members: Vec<VectorMember>,
    pub degree: usize,
}

impl VectorPolySpace {
    /// `RT_p = (P_p)² ⊕ ξ P̃_p`, dimension `(p + 1)(p + 3)`.
    pub fn raviart_thomas(frame: LocalFrame, p: usize) -> Self {
        let mut members = Vec::new();
        for &(a, b) in &total_degree_exponents(p) {
            members.push(VectorMember::axis(0, a, b));
            members.push(VectorMember::axis(1, a, b));
        }
        for b in 0..=p {
            members.push(VectorMember::radial(p - b, b));
        }
        VectorPolySpace { frame, members, degree: p + 1 }
    }

    /// `(P_m)²`.
    pub fn full(frame: LocalFrame, m: usize) -> Self {
        let mut members = Vec::new();
        for &(a, b) in &total_degree_exponents(m) {
            members.push(VectorMember::axis(0, a, b));
            members.push(VectorMember::axis(1, a, b));
        }
        VectorPolySpace { frame, members, degree: m }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn max_member_degree(&self) -> usize {
        self.members.iter().map(VectorMember::degree).max().unwrap_or(0)
    }

    /// Physical values and divergences of every member at `x`.
    pub fn eval(&self, x: &Vec2, vals: &mut [Vec2], divs: &mut [f64]) {
        let xi = self.frame.to_local(x);
        let d = self.degree + 1;
        let mut px = [1.0; 16];
        let mut py = [1.0; 16];
        for i in 1..=d {
            px[i] = px[i - 1] * xi.x;
            py[i] = py[i - 1] * xi.y;
        }
        for (j, m) in self.members.iter().enumerate() {
            let mut v = [0.0; 2];
            let mut div = 0.0;
            for (c, comp) in m.terms.iter().enumerate() {
                for &(coef, a, b) in comp {
                    v[c] += coef * px[a] * py[b];
                    let deriv = if c == 0 {
                        if a > 0 { a as f64 * px[a - 1] * py[b] } else { 0.0 }
                    } else if b > 0 {
                        b as f64 * px[a] * py[b - 1]
                    } else {
                        0.0
                    };
                    div += coef * deriv;
                }
            }
            vals[j] = self.frame.vector_to_physical(&vec2(v[0], v[1]));
            divs[j] = div / self.frame.scale;
        }
    }
}
