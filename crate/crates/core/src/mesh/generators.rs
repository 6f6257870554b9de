//! Small structured meshes used by tests, examples and studies.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{BoundaryEntry, Mesh, MeshDocument};

fn square_boundary(n: usize, id: impl Fn(usize, usize) -> usize) -> Vec<BoundaryEntry> {
    let mut out = Vec::with_capacity(4 * n);
    let entry = |a, b, tag: &str| BoundaryEntry { edge: [a, b], tag: tag.to_string() };
    for i in 0..n {
        out.push(entry(id(i, 0), id(i + 1, 0), "bottom"));
        out.push(entry(id(n, i), id(n, i + 1), "right"));
        out.push(entry(id(i + 1, n), id(i, n), "top"));
        out.push(entry(id(0, i + 1), id(0, i), "left"));
    }
    out
}

fn square_vertices(n: usize) -> Vec<[f64; 2]> {
    let h = 1.0 / n as f64;
    let mut v = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            v.push([i as f64 * h, j as f64 * h]);
        }
    }
    v
}

/// `2n²` right triangles on the unit square, boundary tagged
/// `left`, `right`, `bottom`, `top`.
pub fn unit_square_triangles(n: usize) -> Mesh {
    assert!(n >= 1);
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut elements = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            elements.push(vec![id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            elements.push(vec![id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    let doc = MeshDocument {
        vertices: square_vertices(n),
        elements,
        boundary: square_boundary(n, id),
    };
    Mesh::from_document(&doc).expect("structured triangle mesh")
}

/// `n²` squares on the unit square.
pub fn unit_square_quads(n: usize) -> Mesh {
    assert!(n >= 1);
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut elements = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            elements.push(vec![id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    let doc = MeshDocument {
        vertices: square_vertices(n),
        elements,
        boundary: square_boundary(n, id),
    };
    Mesh::from_document(&doc).expect("structured quad mesh")
}

fn hexagon_vertices(center: [f64; 2], s: f64) -> Vec<[f64; 2]> {
    (0..6)
        .map(|i| {
            let t = std::f64::consts::FRAC_PI_3 * i as f64;
            [center[0] + s * t.cos(), center[1] + s * t.sin()]
        })
        .collect()
}

/// A single regular hexagon of side `s` centred at the origin.
pub fn regular_hexagon(s: f64) -> Mesh {
    let doc = MeshDocument {
        vertices: hexagon_vertices([0.0, 0.0], s),
        elements: vec![(0..6).collect()],
        boundary: Vec::new(),
    };
    Mesh::from_document(&doc).expect("regular hexagon")
}

/// Regular hexagons of side `s` whose axial coordinates satisfy
/// `max(|q|, |r|, |q + r|) <= rings`.
pub fn honeycomb(rings: usize, s: f64) -> Mesh {
    let rings = rings as i64;
    let mut vertices: Vec<[f64; 2]> = Vec::new();
    let mut lookup: HashMap<(i64, i64), usize> = HashMap::new();
    let key = |p: [f64; 2]| ((p[0] / s * 1e6).round() as i64, (p[1] / s * 1e6).round() as i64);
    let mut elements = Vec::new();
    for q in -rings..=rings {
        for r in -rings..=rings {
            if (q + r).abs() > rings {
                continue;
            }
            let c = [1.5 * s * q as f64, 3f64.sqrt() * s * (r as f64 + 0.5 * q as f64)];
            let ids = hexagon_vertices(c, s)
                .into_iter()
                .map(|p| {
                    *lookup.entry(key(p)).or_insert_with(|| {
                        vertices.push(p);
                        vertices.len() - 1
                    })
                })
                .collect();
            elements.push(ids);
        }
    }
    let doc = MeshDocument {
        vertices,
        elements,
        boundary: Vec::new(),
    };
    Mesh::from_document(&doc).expect("honeycomb")
}

/// Moves every interior vertex by a uniform random offset of at most
/// `amplitude` times the shortest incident edge in each coordinate.
pub fn perturb_interior(mesh: &Mesh, amplitude: f64, seed: u64) -> Mesh {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut on_boundary = vec![false; mesh.vertices.len()];
    let mut shortest = vec![f64::INFINITY; mesh.vertices.len()];
    for ed in &mesh.edges {
        for &v in &ed.vertex_ids {
            shortest[v] = shortest[v].min(ed.length);
            on_boundary[v] |= ed.is_boundary();
        }
    }
    let mut doc = mesh.to_document();
    for (v, p) in doc.vertices.iter_mut().enumerate() {
        if on_boundary[v] || !shortest[v].is_finite() {
            continue;
        }
        let d = amplitude * shortest[v];
        p[0] += rng.gen_range(-d..=d);
        p[1] += rng.gen_range(-d..=d);
    }
    Mesh::from_document(&doc).expect("perturbation keeps the mesh valid")
}
