//! Planar polygon helpers shared by the mesh and the quadrature code.

use nalgebra::Vector2;

pub type Vec2 = Vector2<f64>;

#[inline]
pub fn vec2(x: f64, y: f64) -> Vec2 {
    Vec2::new(x, y)
}

/// z-component of `a × b`.
#[inline]
pub fn cross(a: &Vec2, b: &Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Signed area of the triangle `(a, b, c)`, positive when counter-clockwise.
#[inline]
pub fn triangle_area(a: &Vec2, b: &Vec2, c: &Vec2) -> f64 {
    0.5 * cross(&(b - a), &(c - a))
}

/// Shoelace signed area.
pub fn signed_area(poly: &[Vec2]) -> f64 {
    let n = poly.len();
    let mut acc = 0.0;
    for i in 0..n {
        acc += cross(&poly[i], &poly[(i + 1) % n]);
    }
    0.5 * acc
}

/// Area centroid of a simple polygon with non-zero area.
pub fn centroid(poly: &[Vec2]) -> Vec2 {
    let n = poly.len();
    let a = signed_area(poly);
    let mut c = Vec2::zeros();
    for i in 0..n {
        let p = &poly[i];
        let q = &poly[(i + 1) % n];
        c += (p + q) * cross(p, q);
    }
    c / (6.0 * a)
}

pub fn perimeter(poly: &[Vec2]) -> f64 {
    let n = poly.len();
    (0..n).map(|i| (poly[(i + 1) % n] - poly[i]).norm()).sum()
}

/// Largest vertex-to-vertex distance.
pub fn diameter(poly: &[Vec2]) -> f64 {
    let mut d: f64 = 0.0;
    for (i, p) in poly.iter().enumerate() {
        for q in &poly[i + 1..] {
            d = d.max((p - q).norm());
        }
    }
    d
}

/// Outward unit normal of the directed segment `a → b` of a counter-clockwise polygon.
#[inline]
pub fn outward_normal(a: &Vec2, b: &Vec2) -> Vec2 {
    let t = b - a;
    vec2(t.y, -t.x).normalize()
}

fn segments_intersect(p1: &Vec2, p2: &Vec2, q1: &Vec2, q2: &Vec2, tol: f64) -> bool {
    let d1 = cross(&(p2 - p1), &(q1 - p1));
    let d2 = cross(&(p2 - p1), &(q2 - p1));
    let d3 = cross(&(q2 - q1), &(p1 - q1));
    let d4 = cross(&(q2 - q1), &(p2 - q1));
    if ((d1 > tol && d2 < -tol) || (d1 < -tol && d2 > tol))
        && ((d3 > tol && d4 < -tol) || (d3 < -tol && d4 > tol))
    {
        return true;
    }
    let on_segment = |a: &Vec2, b: &Vec2, p: &Vec2, d: f64| {
        d.abs() <= tol
            && p.x >= a.x.min(b.x) - tol
            && p.x <= a.x.max(b.x) + tol
            && p.y >= a.y.min(b.y) - tol
            && p.y <= a.y.max(b.y) + tol
    };
    on_segment(p1, p2, q1, d1)
        || on_segment(p1, p2, q2, d2)
        || on_segment(q1, q2, p1, d3)
        || on_segment(q1, q2, p2, d4)
}

/// True when no two non-adjacent edges touch and no vertex is repeated.
pub fn is_simple(poly: &[Vec2]) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    let scale = diameter(poly).max(f64::MIN_POSITIVE);
    let tol = 1e-14 * scale * scale;
    for i in 0..n {
        for j in i + 1..n {
            if (poly[i] - poly[j]).norm() <= 1e-14 * scale {
                return false;
            }
        }
    }
    if n == 3 {
        return true;
    }
    for i in 0..n {
        for j in i + 1..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                continue;
            }
            if segments_intersect(&poly[i], &poly[(i + 1) % n], &poly[j], &poly[(j + 1) % n], tol) {
                return false;
            }
        }
    }
    true
}

/// Strict convexity test for a counter-clockwise polygon.
pub fn is_convex(poly: &[Vec2]) -> bool {
    let n = poly.len();
    let scale = diameter(poly);
    (0..n).all(|i| {
        let a = &poly[(i + n - 1) % n];
        let b = &poly[i];
        let c = &poly[(i + 1) % n];
        triangle_area(a, b, c) > 1e-12 * scale * scale
    })
}

/// Point-in-polygon test with an absolute distance tolerance to the boundary.
pub fn contains(poly: &[Vec2], x: &Vec2, tol: f64) -> bool {
    let n = poly.len();
    for i in 0..n {
        if point_segment_distance(x, &poly[i], &poly[(i + 1) % n]) <= tol {
            return true;
        }
    }
    let mut winding = 0i32;
    for i in 0..n {
        let a = &poly[i];
        let b = &poly[(i + 1) % n];
        if a.y <= x.y {
            if b.y > x.y && cross(&(b - a), &(x - a)) > 0.0 {
                winding += 1;
            }
        } else if b.y <= x.y && cross(&(b - a), &(x - a)) < 0.0 {
            winding -= 1;
        }
    }
    winding != 0
}

pub fn point_segment_distance(x: &Vec2, a: &Vec2, b: &Vec2) -> f64 {
    let t = b - a;
    let len2 = t.norm_squared();
    if len2 == 0.0 {
        return (x - a).norm();
    }
    let s = ((x - a).dot(&t) / len2).clamp(0.0, 1.0);
    (x - (a + t * s)).norm()
}

/// Ear-clipping triangulation of a simple counter-clockwise polygon.
///
/// Returns `n - 2` index triples, each counter-clockwise.
pub fn triangulate(poly: &[Vec2]) -> Vec<[usize; 3]> {
    let n = poly.len();
    if n == 3 {
        return vec![[0, 1, 2]];
    }
    let scale = diameter(poly);
    let mut idx: Vec<usize> = (0..n).collect();
    let mut tris = Vec::with_capacity(n - 2);
    let mut guard = 0;
    while idx.len() > 3 && guard < 4 * n * n {
        guard += 1;
        let m = idx.len();
        let mut clipped = false;
        for k in 0..m {
            let ia = idx[(k + m - 1) % m];
            let ib = idx[k];
            let ic = idx[(k + 1) % m];
            let (a, b, c) = (&poly[ia], &poly[ib], &poly[ic]);
            if triangle_area(a, b, c) <= 1e-14 * scale * scale {
                continue;
            }
            let blocked = idx.iter().any(|&j| {
                if j == ia || j == ib || j == ic {
                    return false;
                }
                let p = &poly[j];
                triangle_area(a, b, p) >= 0.0
                    && triangle_area(b, c, p) >= 0.0
                    && triangle_area(c, a, p) >= 0.0
            });
            if blocked {
                continue;
            }
            tris.push([ia, ib, ic]);
            idx.remove(k);
            clipped = true;
            break;
        }
        if !clipped {
            break;
        }
    }
    if idx.len() == 3 {
        tris.push([idx[0], idx[1], idx[2]]);
    }
    tris
}
