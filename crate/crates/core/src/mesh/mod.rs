//! Conforming 2D polygonal meshes with full edge topology.
//!
//! Elements are stored counter-clockwise. Every edge records the element on
//! its left (the one traversing it counter-clockwise) and, for interior
//! edges, the element on its right. Normals point out of the left element.

mod dof_graph;
pub mod generators;
mod refine;

pub use dof_graph::{DofEdge, DofGraph, ElementDofGraph};

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{self, vec2, Vec2};

/// Tag assigned to boundary edges the document does not mention.
pub const DEFAULT_BOUNDARY_TAG: &str = "boundary";

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("malformed mesh document: {0}")]
    Malformed(String),
    #[error("cannot read mesh file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("element {element}: {reason}")]
    InvertedElement { element: usize, reason: String },
    #[error("non-conforming interface: {0}")]
    NonConforming(String),
    #[error("boundary entry [{0}, {1}] is not a boundary edge of the mesh")]
    UnknownBoundaryEdge(usize, usize),
    #[error("degenerate sub-triangle in DOF triangulation of element {0}")]
    DegenerateDofTriangle(usize),
}

/// On-disk mesh document.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MeshDocument {
    pub vertices: Vec<[f64; 2]>,
    pub elements: Vec<Vec<usize>>,
    #[serde(default)]
    pub boundary: Vec<BoundaryEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BoundaryEntry {
    pub edge: [usize; 2],
    pub tag: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ElementKind {
    Triangle,
    Quad,
    Polygon,
}

impl ElementKind {
    pub fn from_vertex_count(n: usize) -> Self {
        match n {
            3 => ElementKind::Triangle,
            4 => ElementKind::Quad,
            _ => ElementKind::Polygon,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Element {
    pub vertex_ids: Vec<usize>,
    /// `edge_ids[i]` joins `vertex_ids[i]` and `vertex_ids[i + 1]`.
    pub edge_ids: Vec<usize>,
    pub area: f64,
    pub centroid: Vec2,
}

impl Element {
    pub fn kind(&self) -> ElementKind {
        ElementKind::from_vertex_count(self.vertex_ids.len())
    }
}

#[derive(Debug, Clone)]
pub struct Edge {
    /// Ordered as traversed by the left element.
    pub vertex_ids: [usize; 2],
    pub left_element: usize,
    pub left_local: usize,
    pub right_element: Option<usize>,
    pub right_local: Option<usize>,
    /// Unit normal pointing out of the left element.
    pub normal: Vec2,
    pub length: f64,
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.right_element.is_none()
    }
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub vertices: Vec<Vec2>,
    pub elements: Vec<Element>,
    pub edges: Vec<Edge>,
    pub boundary_tags: BTreeMap<usize, String>,
    /// Elements whose vertex order was reversed on load.
    pub reoriented: Vec<usize>,
}

impl Mesh {
    pub fn from_json_str(text: &str) -> Result<Self, MeshError> {
        let doc: MeshDocument =
            serde_json::from_str(text).map_err(|e| MeshError::Malformed(e.to_string()))?;
        Self::from_document(&doc)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, MeshError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| MeshError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json_str(&text)
    }

    pub fn from_document(doc: &MeshDocument) -> Result<Self, MeshError> {
        let vertices: Vec<Vec2> = doc.vertices.iter().map(|p| vec2(p[0], p[1])).collect();
        if let Some(i) = vertices.iter().position(|p| !(p.x.is_finite() && p.y.is_finite())) {
            return Err(MeshError::Malformed(format!("vertex {i} is not finite")));
        }
        if doc.elements.is_empty() {
            return Err(MeshError::Malformed("mesh has no elements".into()));
        }
        let bbox = bounding_scale(&vertices);
        let mut elements = Vec::with_capacity(doc.elements.len());
        let mut reoriented = Vec::new();
        for (e, ids) in doc.elements.iter().enumerate() {
            if ids.len() < 3 {
                return Err(MeshError::Malformed(format!(
                    "element {e} has {} vertices, need at least 3",
                    ids.len()
                )));
            }
            if let Some(&bad) = ids.iter().find(|&&v| v >= vertices.len()) {
                return Err(MeshError::Malformed(format!(
                    "element {e} references vertex {bad}, only {} vertices",
                    vertices.len()
                )));
            }
            let mut ids = ids.clone();
            let mut poly: Vec<Vec2> = ids.iter().map(|&v| vertices[v]).collect();
            if !geometry::is_simple(&poly) {
                return Err(MeshError::InvertedElement {
                    element: e,
                    reason: "polygon is not simple".into(),
                });
            }
            let mut area = geometry::signed_area(&poly);
            if !area.is_finite() || area.abs() <= 1e-12 * bbox * bbox {
                return Err(MeshError::InvertedElement {
                    element: e,
                    reason: format!("area {area:e} is degenerate"),
                });
            }
            if area < 0.0 {
                ids.reverse();
                poly.reverse();
                area = -area;
                reoriented.push(e);
            }
            let centroid = geometry::centroid(&poly);
            elements.push(Element {
                vertex_ids: ids,
                edge_ids: Vec::new(),
                area,
                centroid,
            });
        }

        // (min, max) -> list of (element, local edge, forward?)
        let mut incidence: HashMap<(usize, usize), Vec<(usize, usize)>> = HashMap::new();
        for (e, el) in elements.iter().enumerate() {
            let n = el.vertex_ids.len();
            for i in 0..n {
                let a = el.vertex_ids[i];
                let b = el.vertex_ids[(i + 1) % n];
                incidence.entry((a.min(b), a.max(b))).or_default().push((e, i));
            }
        }
        let mut keys: Vec<_> = incidence.keys().copied().collect();
        keys.sort_unstable();

        let mut edges = Vec::with_capacity(keys.len());
        let mut edge_of: HashMap<(usize, usize), usize> = HashMap::with_capacity(keys.len());
        for key in keys {
            let users = &incidence[&key];
            if users.len() > 2 {
                return Err(MeshError::NonConforming(format!(
                    "edge [{}, {}] shared by {} elements",
                    key.0,
                    key.1,
                    users.len()
                )));
            }
            let (le, li) = users[0];
            let lel = &elements[le];
            let n = lel.vertex_ids.len();
            let a = lel.vertex_ids[li];
            let b = lel.vertex_ids[(li + 1) % n];
            let (right_element, right_local) = if users.len() == 2 {
                let (re, ri) = users[1];
                let rel = &elements[re];
                let m = rel.vertex_ids.len();
                if rel.vertex_ids[ri] != b || rel.vertex_ids[(ri + 1) % m] != a {
                    return Err(MeshError::NonConforming(format!(
                        "elements {le} and {re} overlap along edge [{a}, {b}]"
                    )));
                }
                (Some(re), Some(ri))
            } else {
                (None, None)
            };
            let pa = vertices[a];
            let pb = vertices[b];
            let id = edges.len();
            edge_of.insert(key, id);
            edges.push(Edge {
                vertex_ids: [a, b],
                left_element: le,
                left_local: li,
                right_element,
                right_local,
                normal: geometry::outward_normal(&pa, &pb),
                length: (pb - pa).norm(),
            });
        }
        for (e, el) in elements.iter_mut().enumerate() {
            let n = el.vertex_ids.len();
            el.edge_ids = (0..n)
                .map(|i| {
                    let a = el.vertex_ids[i];
                    let b = el.vertex_ids[(i + 1) % n];
                    edge_of[&(a.min(b), a.max(b))]
                })
                .collect();
            debug_assert!(el.edge_ids.iter().all(|&id| {
                let ed = &edges[id];
                ed.left_element == e || ed.right_element == Some(e)
            }));
        }

        check_hanging_nodes(&vertices, &elements, &edges)?;

        let mut boundary_tags = BTreeMap::new();
        for (id, ed) in edges.iter().enumerate() {
            if ed.is_boundary() {
                boundary_tags.insert(id, DEFAULT_BOUNDARY_TAG.to_string());
            }
        }
        for entry in &doc.boundary {
            let [a, b] = entry.edge;
            let id = edge_of
                .get(&(a.min(b), a.max(b)))
                .copied()
                .filter(|&id| edges[id].is_boundary())
                .ok_or(MeshError::UnknownBoundaryEdge(a, b))?;
            boundary_tags.insert(id, entry.tag.clone());
        }

        Ok(Mesh {
            vertices,
            elements,
            edges,
            boundary_tags,
            reoriented,
        })
    }

    pub fn to_document(&self) -> MeshDocument {
        MeshDocument {
            vertices: self.vertices.iter().map(|p| [p.x, p.y]).collect(),
            elements: self.elements.iter().map(|e| e.vertex_ids.clone()).collect(),
            boundary: self
                .boundary_tags
                .iter()
                .map(|(&id, tag)| BoundaryEntry {
                    edge: self.edges[id].vertex_ids,
                    tag: tag.clone(),
                })
                .collect(),
        }
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("mesh document serializes")
    }

    pub fn element_vertices(&self, e: usize) -> Vec<Vec2> {
        self.elements[e]
            .vertex_ids
            .iter()
            .map(|&v| self.vertices[v])
            .collect()
    }

    pub fn edge_endpoints(&self, edge: usize) -> (Vec2, Vec2) {
        let [a, b] = self.edges[edge].vertex_ids;
        (self.vertices[a], self.vertices[b])
    }

    /// Outward unit normal of `edge` as seen from element `e`.
    pub fn outward_normal(&self, e: usize, edge: usize) -> Vec2 {
        let ed = &self.edges[edge];
        if ed.left_element == e {
            ed.normal
        } else {
            -ed.normal
        }
    }

    /// Element on the other side of `edge`, if any.
    pub fn neighbor(&self, e: usize, edge: usize) -> Option<usize> {
        let ed = &self.edges[edge];
        if ed.left_element == e {
            ed.right_element
        } else {
            Some(ed.left_element)
        }
    }

    pub fn boundary_tag(&self, edge: usize) -> Option<&str> {
        self.boundary_tags.get(&edge).map(String::as_str)
    }

    pub fn total_area(&self) -> f64 {
        self.elements.iter().map(|e| e.area).sum()
    }

    pub fn boundary_length(&self) -> f64 {
        self.edges
            .iter()
            .filter(|e| e.is_boundary())
            .map(|e| e.length)
            .sum()
    }

    /// Largest element diameter.
    pub fn mesh_size(&self) -> f64 {
        (0..self.elements.len())
            .map(|e| geometry::diameter(&self.element_vertices(e)))
            .fold(0.0, f64::max)
    }

    pub fn boundary_edge_ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.boundary_tags.keys().copied()
    }
}

fn bounding_scale(vertices: &[Vec2]) -> f64 {
    let mut lo = vec2(f64::INFINITY, f64::INFINITY);
    let mut hi = vec2(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in vertices {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    let d = (hi - lo).norm();
    if d.is_finite() && d > 0.0 {
        d
    } else {
        1.0
    }
}

/// A vertex sitting in the interior of a boundary edge means a neighbor
/// subdivided that edge without the element on the other side doing so.
fn check_hanging_nodes(vertices: &[Vec2], elements: &[Element], edges: &[Edge]) -> Result<(), MeshError> {
    let mut used = vec![false; vertices.len()];
    for el in elements {
        for &v in &el.vertex_ids {
            used[v] = true;
        }
    }
    for ed in edges.iter().filter(|e| e.is_boundary()) {
        let [a, b] = ed.vertex_ids;
        let pa = vertices[a];
        let pb = vertices[b];
        let (lo, hi) = (pa.inf(&pb), pa.sup(&pb));
        let tol = 1e-10 * ed.length;
        for (v, p) in vertices.iter().enumerate() {
            if !used[v] || v == a || v == b {
                continue;
            }
            if p.x < lo.x - tol || p.x > hi.x + tol || p.y < lo.y - tol || p.y > hi.y + tol {
                continue;
            }
            if geometry::point_segment_distance(p, &pa, &pb) <= tol {
                return Err(MeshError::NonConforming(format!(
                    "vertex {v} lies on edge [{a}, {b}] (hanging node)"
                )));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_TRIANGLES: &str = r#"{
        "vertices": [[0,0],[1,0],[1,1],[0,1]],
        "elements": [[0,1,2],[0,2,3]],
        "boundary": [{"edge":[0,1],"tag":"bottom"}]
    }"#;

    #[test]
    fn two_triangle_square_topology() {
        let m = Mesh::from_json_str(TWO_TRIANGLES).unwrap();
        assert_eq!(m.elements.len(), 2);
        assert_eq!(m.edges.len(), 5);
        assert_eq!(m.edges.iter().filter(|e| e.is_boundary()).count(), 4);
        assert_eq!(m.boundary_tags.values().filter(|t| *t == "bottom").count(), 1);
        assert_eq!(m.boundary_tags.len(), 4);
    }

    #[test]
    fn single_quad() {
        let m = Mesh::from_json_str(
            r#"{"vertices": [[0,0],[1,0],[1,1],[0,1]], "elements": [[0,1,2,3]]}"#,
        )
        .unwrap();
        assert_eq!(m.elements.len(), 1);
        assert_eq!(m.edges.len(), 4);
        assert!(m.edges.iter().all(Edge::is_boundary));
        assert_eq!(m.elements[0].kind(), ElementKind::Quad);
    }

    #[test]
    fn hexagon_area_from_file() {
        let s = 0.8;
        let m = generators::regular_hexagon(s);
        let m = Mesh::from_json_str(&m.to_json_string()).unwrap();
        assert_eq!(m.elements.len(), 1);
        let exact = 1.5 * 3f64.sqrt() * s * s;
        assert!((m.elements[0].area - exact).abs() < 1e-12);
    }

    #[test]
    fn clockwise_elements_are_flipped_and_flagged() {
        let m = Mesh::from_json_str(
            r#"{"vertices": [[0,0],[1,0],[1,1],[0,1]], "elements": [[0,3,2,1]]}"#,
        )
        .unwrap();
        assert_eq!(m.reoriented, vec![0]);
        assert!(m.elements[0].area > 0.0);
    }

    #[test]
    fn normals_are_unit_and_outward() {
        let m = generators::unit_square_triangles(3);
        for ed in &m.edges {
            assert!((ed.normal.norm() - 1.0).abs() < 1e-14);
            let (a, b) = m.edge_endpoints(ed_index(&m, ed));
            let mid = (a + b) * 0.5;
            let c = m.elements[ed.left_element].centroid;
            assert!(ed.normal.dot(&(mid - c)) > 0.0);
        }
    }

    fn ed_index(m: &Mesh, ed: &Edge) -> usize {
        m.edges
            .iter()
            .position(|x| std::ptr::eq(x, ed))
            .unwrap()
    }

    #[test]
    fn rejects_malformed_documents() {
        assert!(matches!(Mesh::from_json_str("{"), Err(MeshError::Malformed(_))));
        assert!(matches!(
            Mesh::from_json_str(r#"{"vertices": [[0,0],[1,0]], "elements": [[0,1,2]]}"#),
            Err(MeshError::Malformed(_))
        ));
        assert!(matches!(
            Mesh::from_json_str(r#"{"vertices": [[0,0],[1,0],[2,0]], "elements": [[0,1,2]]}"#),
            Err(MeshError::InvertedElement { .. })
        ));
        assert!(matches!(
            Mesh::from_json_str(
                r#"{"vertices": [[0,0],[1,1],[1,0],[0,1]], "elements": [[0,1,2,3]]}"#
            ),
            Err(MeshError::InvertedElement { .. })
        ));
    }

    #[test]
    fn rejects_hanging_node() {
        let doc = r#"{
            "vertices": [[0,0],[1,0],[1,1],[0,1],[2,0],[2,1],[1,0.5]],
            "elements": [[0,1,2,3],[1,4,5,2,6]]
        }"#;
        // the pentagon shares vertex 6 with nobody: quad edge [1,2] is split on one side
        assert!(matches!(Mesh::from_json_str(doc), Err(MeshError::NonConforming(_))));
    }

    #[test]
    fn rejects_overlapping_elements() {
        let doc = r#"{
            "vertices": [[0,0],[1,0],[0,1],[1,1]],
            "elements": [[0,1,2],[0,1,3]]
        }"#;
        assert!(matches!(Mesh::from_json_str(doc), Err(MeshError::NonConforming(_))));
    }

    #[test]
    fn unknown_boundary_edge_is_an_error() {
        let doc = r#"{
            "vertices": [[0,0],[1,0],[1,1],[0,1]],
            "elements": [[0,1,2],[0,2,3]],
            "boundary": [{"edge":[0,2],"tag":"diag"}]
        }"#;
        assert!(matches!(Mesh::from_json_str(doc), Err(MeshError::UnknownBoundaryEdge(0, 2))));
    }

    #[test]
    fn closed_element_boundaries() {
        for m in [
            generators::unit_square_triangles(2),
            generators::unit_square_quads(2),
            generators::honeycomb(1, 0.5),
        ] {
            for (e, el) in m.elements.iter().enumerate() {
                let mut acc = Vec2::zeros();
                let mut per = 0.0;
                for &id in &el.edge_ids {
                    acc += m.outward_normal(e, id) * m.edges[id].length;
                    per += m.edges[id].length;
                }
                assert!(acc.norm() <= 1e-13 * per);
            }
        }
    }
}
