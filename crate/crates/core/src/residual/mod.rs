//! Residual variants, boundary residuals, global assembly and the checks
//! built on them: conservation, the global identity and the Lipschitz probe.

pub mod boundary;
mod scheme;

pub use boundary::{BoundaryData, Profile, ProfileError, ProfileSpec, WILDCARD_TAG};
pub use scheme::{ElementResidual, Scheme, SchemeError, SchemeOptions, Traces, Variant};

pub(crate) use scheme::dot;

use rand::Rng;

use crate::approximation::FieldCoeffs;
use crate::entropy::{flux_split, FluxSplit};

/// `|Σ_σ Φ_σ − ∮ f̂|` and the scale it is measured against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Defect {
    pub value: f64,
    pub scale: f64,
}

impl Defect {
    pub fn relative(&self) -> f64 {
        self.value / self.scale
    }

    pub fn within(&self, tol: f64) -> bool {
        self.value <= tol * self.scale
    }

    pub fn max(self, other: Defect) -> Defect {
        if other.relative() > self.relative() {
            other
        } else {
            self
        }
    }
}

impl Default for Defect {
    fn default() -> Self {
        Defect { value: 0.0, scale: 1.0 }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Element conservation: `Σ_σ Φ_σ = ∮_{∂K} f̂`, scale `max(1, ‖Φ‖)`.
pub fn conservation_defect(scheme: &Scheme, e: usize, phi: &[f64], tr: &Traces) -> Defect {
    let s = &scheme.spaces[e];
    let mut flux = 0.0;
    let mut k = 0;
    for t in &s.edges {
        for w in &t.rule.weights {
            flux += w * tr.fhat[k];
            k += 1;
        }
    }
    Defect { value: (phi.iter().sum::<f64>() - flux).abs(), scale: norm(phi).max(1.0) }
}

/// Boundary conservation on local edge `i`:
/// `Σ_σ Φ^Γ_σ = ∮_Γ (f̂(u^h, u_b) − f(u^h)·n)`.
pub fn boundary_conservation_defect(scheme: &Scheme, e: usize, i: usize, tr: &Traces) -> Option<Defect> {
    let phi = scheme.boundary_residual(e, i, tr)?;
    let ub = scheme.boundary_trace(e, i)?;
    let t = &scheme.spaces[e].edges[i];
    let mut rhs = 0.0;
    for (q, w) in t.rule.weights.iter().enumerate() {
        let ui = tr.inner[tr.start[i] + q];
        rhs += w * (scheme.options.flux.eval(&scheme.law, ui, ub[q], &t.normal) - scheme.law.flux(ui).dot(&t.normal));
    }
    Some(Defect { value: (phi.iter().sum::<f64>() - rhs).abs(), scale: norm(&phi).max(1.0) })
}

/// Both sides of the global identity for a test field `v^h`:
///
/// ```text
/// Σ_σ v_σ R(σ) = −Σ_K ∫_K ∇v^h·f(u^h)
///              + Σ_{Γ ⊂ ∂Ω} ∮_Γ v^h (f̂(u^h, u_b) − f(u^h)·n) + Σ_{Γ ⊂ ∂Ω} ∮_Γ v^h f(u^h)·n
///              + Σ_{interior e} ∮_e (v^h_K − v^h_{K'}) f̂(u_K, u_{K'}, n_K)
///              + Σ_K (1/#K) Σ_{σ,σ'∈K} (v_σ − v_σ')(Φ_σ − Φ^{DG}_σ)
/// ```
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub defect: Defect,
}

pub fn global_identity(
    scheme: &Scheme,
    u: &FieldCoeffs,
    test: &FieldCoeffs,
    variant: Variant,
) -> Result<IdentityCheck, SchemeError> {
    scheme.check_layout(u)?;
    scheme.check_layout(test)?;
    let law = &scheme.law;
    let flux = scheme.options.flux;
    let r = scheme.global_residual(u, variant)?;
    let lhs = dot(&test.values, &r.values);
    let mut scale = 1.0 + test.values.iter().zip(&r.values).map(|(a, b)| (a * b).abs()).sum::<f64>();

    let mut rhs = 0.0;
    for (e, s) in scheme.spaces.iter().enumerate() {
        let n = s.ndof();
        let (ue, ve) = (u.element(e), test.element(e));
        let mut volume = 0.0;
        for (q, w) in s.volume.weights.iter().enumerate() {
            let uq = dot(&s.vol_phi[q * n..(q + 1) * n], ue);
            let mut gv = crate::geometry::Vec2::zeros();
            for (g, v) in s.vol_grad[q * n..(q + 1) * n].iter().zip(ve) {
                gv += g * *v;
            }
            volume -= w * gv.dot(&law.flux(uq));
        }
        rhs += volume;
        scale += volume.abs();

        let tr = scheme.traces(u, e);
        for (i, t) in s.edges.iter().enumerate() {
            let Some(ub) = scheme.boundary_trace(e, i) else { continue };
            for (q, w) in t.rule.weights.iter().enumerate() {
                let phi = &t.phi[q * n..(q + 1) * n];
                let (uq, vq) = (tr.inner[tr.start[i] + q], dot(phi, ve));
                let fb = flux.eval(law, uq, ub[q], &t.normal);
                let term = w * vq * fb;
                rhs += term;
                scale += term.abs();
            }
        }

        let phi = scheme.element_residual_with(u, e, variant, &tr)?.phi;
        let dg = scheme.element_residual_with(u, e, Variant::Dg, &tr)?.phi;
        let mut redistribution = 0.0;
        for a in 0..n {
            for b in 0..n {
                redistribution += (ve[a] - ve[b]) * (phi[a] - dg[a]);
            }
        }
        redistribution /= n as f64;
        rhs += redistribution;
        scale += redistribution.abs();
    }

    for (id, edge) in scheme.mesh.edges.iter().enumerate() {
        let (Some(re), Some(rl)) = (edge.right_element, edge.right_local) else { continue };
        let (le, ll) = (edge.left_element, edge.left_local);
        let (sl, sr) = (&scheme.spaces[le], &scheme.spaces[re]);
        let (tl, trr) = (&sl.edges[ll], &sr.edges[rl]);
        debug_assert_eq!(tl.global, id);
        let (nl, nr) = (sl.ndof(), sr.ndof());
        for (q, w) in tl.rule.weights.iter().enumerate() {
            let pl = &tl.phi[q * nl..(q + 1) * nl];
            let pr = &trr.phi[q * nr..(q + 1) * nr];
            let (ul, ur) = (dot(pl, u.element(le)), dot(pr, u.element(re)));
            let (vl, vr) = (dot(pl, test.element(le)), dot(pr, test.element(re)));
            let term = w * (vl - vr) * flux.eval(law, ul, ur, &tl.normal);
            rhs += term;
            scale += term.abs();
        }
    }
    Ok(IdentityCheck { lhs, rhs, defect: Defect { value: (lhs - rhs).abs(), scale } })
}

/// Empirical Lipschitz constant of `Φ^K` on random stencil states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzEstimate {
    /// `max ‖Φ^K‖ / (h_K Σ_{σ,σ'} |u_σ − u_σ'|)` over the stencil.
    pub constant: f64,
    pub samples: usize,
    /// Largest `‖Φ^K‖` over constant stencil states.
    pub constant_state_residual: f64,
}

/// Samples states in `[−bound, bound]` on `K` and its face neighbours.
pub fn lipschitz_probe(
    scheme: &Scheme,
    e: usize,
    variant: Variant,
    bound: f64,
    samples: usize,
    rng: &mut impl Rng,
) -> Result<LipschitzEstimate, SchemeError> {
    let mut stencil = vec![e];
    stencil.extend(scheme.spaces[e].edges.iter().filter_map(|t| t.neighbor.map(|(ne, _)| ne)));
    stencil.sort_unstable();
    stencil.dedup();
    let h = scheme.spaces[e].h;
    let mut u = scheme.zeros();
    let mut constant: f64 = 0.0;
    let mut constant_state_residual: f64 = 0.0;
    let mut used = 0;
    for i in 0..samples {
        let flat = i % 8 == 7;
        let c = rng.gen_range(-bound..bound);
        let mut vals = Vec::new();
        for &k in &stencil {
            for x in u.element_mut(k) {
                *x = if flat { c } else { rng.gen_range(-bound..bound) };
                vals.push(*x);
            }
        }
        let phi = scheme.element_residual(&u, e, variant)?.phi;
        let size = norm(&phi);
        let mut spread = 0.0;
        for a in &vals {
            for b in &vals {
                spread += (a - b).abs();
            }
        }
        if spread < 1e-13 {
            constant_state_residual = constant_state_residual.max(size);
            continue;
        }
        used += 1;
        constant = constant.max(size / (h * spread));
    }
    Ok(LipschitzEstimate { constant, samples: used, constant_state_residual })
}

/// Sub-cell flux split of the FR residual of a P1 triangle.
pub fn split(scheme: &Scheme, u: &FieldCoeffs, e: usize) -> Result<FluxSplit, SchemeError> {
    flux_split(scheme, u, e, Variant::Fr)
}
