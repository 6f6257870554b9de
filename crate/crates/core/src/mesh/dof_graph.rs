//! Median-dual control volumes on the sub-triangulation of element DOFs.

use std::collections::BTreeMap;

use crate::approximation::ElementSpace;
use crate::geometry::{self, vec2, Vec2};

use super::{Mesh, MeshError};

/// Oriented DOF edge `[a, b]` with `a < b`; `normal` is the scaled dual-face
/// normal pointing from the control volume of `a` into that of `b`.
#[derive(Debug, Clone)]
pub struct DofEdge {
    pub a: usize,
    pub b: usize,
    pub normal: Vec2,
}

#[derive(Debug, Clone)]
pub struct ElementDofGraph {
    pub nodes: Vec<Vec2>,
    pub triangles: Vec<[usize; 3]>,
    pub edges: Vec<DofEdge>,
    /// Scaled outward normal of the part of each control volume on `∂K`.
    pub boundary: Vec<Vec2>,
}

impl ElementDofGraph {
    pub fn new(element: usize, nodes: Vec<Vec2>, triangles: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        let mut faces: BTreeMap<(usize, usize), Vec2> = BTreeMap::new();
        let mut owner: BTreeMap<(usize, usize), Vec2> = BTreeMap::new();
        let mut diam = 0.0f64;
        for t in &triangles {
            let p: Vec<Vec2> = t.iter().map(|&i| nodes[i]).collect();
            diam = diam.max(geometry::diameter(&p));
        }
        for t in &triangles {
            let p = [nodes[t[0]], nodes[t[1]], nodes[t[2]]];
            let area = geometry::triangle_area(&p[0], &p[1], &p[2]);
            if area <= 1e-12 * diam * diam {
                return Err(MeshError::DegenerateDofTriangle(element));
            }
            let g = (p[0] + p[1] + p[2]) / 3.0;
            for i in 0..3 {
                let (a, b) = (t[i], t[(i + 1) % 3]);
                let (pa, pb) = (p[i], p[(i + 1) % 3]);
                let m = 0.5 * (pa + pb);
                let s = g - m;
                let mut n = vec2(s.y, -s.x);
                if n.dot(&(pb - pa)) < 0.0 {
                    n = -n;
                }
                let (lo, hi, n) = if a < b { (a, b, n) } else { (b, a, -n) };
                *faces.entry((lo, hi)).or_insert_with(Vec2::zeros) += n;
                // outward normal of the sub-triangle edge, scaled by length
                let t = pb - pa;
                owner.insert((a, b), vec2(t.y, -t.x));
            }
        }
        let mut boundary = vec![Vec2::zeros(); nodes.len()];
        for (&(a, b), n_out) in &owner {
            if owner.contains_key(&(b, a)) {
                continue;
            }
            boundary[a] += 0.5 * n_out;
            boundary[b] += 0.5 * n_out;
        }
        let edges = faces
            .into_iter()
            .map(|((a, b), normal)| DofEdge { a, b, normal })
            .collect();
        Ok(ElementDofGraph {
            nodes,
            triangles,
            edges,
            boundary,
        })
    }

    /// Orientation sign of the pair `(s, t)` along the stored edges.
    pub fn epsilon(&self, s: usize, t: usize) -> i8 {
        for e in &self.edges {
            if e.a == s && e.b == t {
                return 1;
            }
            if e.a == t && e.b == s {
                return -1;
            }
        }
        0
    }

    /// `N_σ = Σ_{σ'} ε_{σσ'} n_{σσ'}`.
    pub fn n_sigma(&self) -> Vec<Vec2> {
        let mut n = vec![Vec2::zeros(); self.nodes.len()];
        for e in &self.edges {
            n[e.a] += e.normal;
            n[e.b] -= e.normal;
        }
        n
    }

    /// Largest `|Σ ε n + b_σ|` over the control volumes.
    pub fn closure_defect(&self) -> f64 {
        self.n_sigma()
            .iter()
            .zip(&self.boundary)
            .map(|(n, b)| (n + b).norm())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct DofGraph {
    pub elements: Vec<ElementDofGraph>,
}

impl DofGraph {
    pub fn build(mesh: &Mesh, spaces: &[ElementSpace]) -> Result<Self, MeshError> {
        assert_eq!(mesh.elements.len(), spaces.len());
        let elements = spaces
            .iter()
            .enumerate()
            .map(|(e, s)| ElementDofGraph::new(e, s.nodes().to_vec(), s.sub_triangles()))
            .collect::<Result<_, _>>()?;
        Ok(DofGraph { elements })
    }
}
