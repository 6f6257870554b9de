use std::collections::HashMap;

use super::{BoundaryEntry, Mesh, MeshDocument};

struct Builder {
    vertices: Vec<[f64; 2]>,
    midpoints: HashMap<(usize, usize), usize>,
}

impl Builder {
    fn midpoint(&mut self, a: usize, b: usize) -> usize {
        let key = (a.min(b), a.max(b));
        if let Some(&m) = self.midpoints.get(&key) {
            return m;
        }
        let (pa, pb) = (self.vertices[a], self.vertices[b]);
        let m = self.vertices.len();
        self.vertices
            .push([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]);
        self.midpoints.insert(key, m);
        m
    }

    fn push(&mut self, p: [f64; 2]) -> usize {
        self.vertices.push(p);
        self.vertices.len() - 1
    }
}

impl Mesh {
    /// One level of uniform refinement.
    ///
    /// Triangles are quadrisected, quadrilaterals split into four quadrilaterals
    /// through the vertex average, and polygons with five or more vertices are
    /// first fanned into triangles around their centroid. Child boundary edges
    /// inherit the parent tag.
    pub fn refine_uniform(&self) -> Mesh {
        let mut b = Builder {
            vertices: self.vertices.iter().map(|p| [p.x, p.y]).collect(),
            midpoints: HashMap::new(),
        };
        let mut elements: Vec<Vec<usize>> = Vec::with_capacity(4 * self.elements.len());
        for el in &self.elements {
            let ids = &el.vertex_ids;
            match ids.len() {
                3 => quadrisect(&mut b, [ids[0], ids[1], ids[2]], &mut elements),
                4 => {
                    let c = {
                        let mut s = [0.0; 2];
                        for &v in ids {
                            s[0] += 0.25 * b.vertices[v][0];
                            s[1] += 0.25 * b.vertices[v][1];
                        }
                        b.push(s)
                    };
                    let m: Vec<usize> = (0..4).map(|i| b.midpoint(ids[i], ids[(i + 1) % 4])).collect();
                    for i in 0..4 {
                        elements.push(vec![ids[i], m[i], c, m[(i + 3) % 4]]);
                    }
                }
                n => {
                    let c = b.push([el.centroid.x, el.centroid.y]);
                    for i in 0..n {
                        quadrisect(&mut b, [c, ids[i], ids[(i + 1) % n]], &mut elements);
                    }
                }
            }
        }
        let mut boundary = Vec::with_capacity(2 * self.boundary_tags.len());
        for (&id, tag) in &self.boundary_tags {
            let [v0, v1] = self.edges[id].vertex_ids;
            let m = b.midpoint(v0, v1);
            boundary.push(BoundaryEntry { edge: [v0, m], tag: tag.clone() });
            boundary.push(BoundaryEntry { edge: [m, v1], tag: tag.clone() });
        }
        let doc = MeshDocument {
            vertices: b.vertices,
            elements,
            boundary,
        };
        Mesh::from_document(&doc).expect("refinement of a valid mesh is valid")
    }

    pub fn refine_times(&self, levels: usize) -> Mesh {
        let mut m = self.clone();
        for _ in 0..levels {
            m = m.refine_uniform();
        }
        m
    }
}

fn quadrisect(b: &mut Builder, [p, q, r]: [usize; 3], out: &mut Vec<Vec<usize>>) {
    let mpq = b.midpoint(p, q);
    let mqr = b.midpoint(q, r);
    let mrp = b.midpoint(r, p);
    out.push(vec![p, mpq, mrp]);
    out.push(vec![mpq, q, mqr]);
    out.push(vec![mrp, mqr, r]);
    out.push(vec![mpq, mqr, mrp]);
}
