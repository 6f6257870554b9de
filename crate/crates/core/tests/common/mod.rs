#![allow(dead_code)]

use frrd::mesh::{generators, Mesh};
use frrd::physics::{FluxKind, Law};
use frrd::residual::{BoundaryData, Profile, Scheme, SchemeOptions};

/// Perturbed triangles, perturbed quads and a hexagon patch.
pub fn test_meshes() -> Vec<(&'static str, Mesh)> {
    vec![
        ("triangles", generators::perturb_interior(&generators::unit_square_triangles(3), 0.15, 11)),
        ("quads", generators::perturb_interior(&generators::unit_square_quads(3), 0.15, 12)),
        ("hexagons", generators::honeycomb(1, 0.4)),
    ]
}

pub fn laws() -> Vec<Law> {
    vec![Law::linear_advection([1.0, 0.5]), Law::burgers_2d()]
}

pub fn scheme(mesh: &Mesh, law: &Law, degree: usize) -> Scheme {
    scheme_with(mesh, law, SchemeOptions { degree, ..Default::default() })
}

pub fn scheme_with(mesh: &Mesh, law: &Law, options: SchemeOptions) -> Scheme {
    Scheme::new(mesh.clone(), *law, BoundaryData::uniform(Profile::Constant(0.4)), options).unwrap()
}

/// Every (mesh, law, degree) combination the element kinds support.
pub fn all_schemes() -> Vec<(String, Scheme)> {
    let mut out = Vec::new();
    for (name, m) in test_meshes() {
        let degrees: &[usize] = if name == "hexagons" { &[1] } else { &[1, 2] };
        for law in laws() {
            for &k in degrees {
                out.push((format!("{name} {} k={k}", law.name()), scheme(&m, &law, k)));
            }
        }
    }
    out
}

pub fn ec_scheme(mesh: &Mesh, degree: usize) -> Scheme {
    scheme_with(mesh, &Law::burgers_2d(), SchemeOptions { degree, flux: FluxKind::TadmorEc, ..Default::default() })
}
