use crate::approximation::FieldCoeffs;
use crate::geometry::Vec2;
use crate::mesh::{ElementDofGraph, ElementKind};
use crate::residual::{SchemeError, Scheme, Variant};

/// Sub-cell fluxes of a P1 triangle residual.
#[derive(Debug, Clone)]
pub struct FluxSplit {
    /// `(a, b, f̂_{ab})` for `a < b`, oriented from `a` to `b`.
    pub edges: Vec<(usize, usize, f64)>,
    /// `f̂^b_σ = ∮ φ_σ f̂`.
    pub boundary: Vec<f64>,
    /// `N_σ = −∮ φ_σ n`.
    pub n_sigma: Vec<Vec2>,
    pub residual: Vec<f64>,
    pub graph: ElementDofGraph,
}

impl FluxSplit {
    /// `f̂_{σσ'}`, antisymmetric.
    pub fn flux(&self, s: usize, t: usize) -> f64 {
        for &(a, b, f) in &self.edges {
            if (a, b) == (s, t) {
                return f;
            }
            if (a, b) == (t, s) {
                return -f;
            }
        }
        0.0
    }

    /// `Σ_{σ'} f̂_{σσ'} + f̂^b_σ`.
    pub fn reassemble(&self) -> Vec<f64> {
        let mut out = self.boundary.clone();
        for &(a, b, f) in &self.edges {
            out[a] += f;
            out[b] -= f;
        }
        out
    }

    /// Largest `|reassembled − Φ_σ|`.
    pub fn reassembly_defect(&self) -> f64 {
        self.reassemble()
            .iter()
            .zip(&self.residual)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

fn require_p1(scheme: &Scheme, e: usize) -> Result<(), SchemeError> {
    let s = &scheme.spaces[e];
    if s.kind == ElementKind::Triangle && s.degree == 1 {
        Ok(())
    } else {
        Err(SchemeError::NotP1Triangle(e))
    }
}

/// `f̂_{σσ'} = −(1/3) ∫ ∇(φ_σ − φ_σ')·(f^h + ∇ψ̃)` for `Fr`, or without
/// `∇ψ̃` for `DgInterp`.
pub fn flux_split(scheme: &Scheme, u: &FieldCoeffs, e: usize, variant: Variant) -> Result<FluxSplit, SchemeError> {
    require_p1(scheme, e)?;
    if !matches!(variant, Variant::Fr | Variant::DgInterp) {
        return Err(SchemeError::NotP1Triangle(e));
    }
    let s = &scheme.spaces[e];
    let n = s.ndof();
    let ue = u.element(e);
    let tr = scheme.traces(u, e);
    let res = scheme.element_residual_with(u, e, variant, &tr)?;
    let fu = scheme.nodal_flux(ue);
    let mut total = [0.0; 3];
    for (q, w) in s.volume.weights.iter().enumerate() {
        let mut f = Vec2::zeros();
        for t in 0..n {
            f += s.vol_phi[q * n + t] * fu[t];
        }
        if let Some(field) = &res.field {
            f += scheme.corrections[e].value_at(field, q);
        }
        for t in 0..n {
            total[t] += w * s.vol_grad[q * n + t].dot(&f);
        }
    }
    let edges = [(0, 1), (0, 2), (1, 2)]
        .iter()
        .map(|&(a, b)| (a, b, -(total[a] - total[b]) / 3.0))
        .collect();
    let boundary = scheme.edge_integral(e, &tr.fhat);
    let mut n_sigma = vec![Vec2::zeros(); n];
    for t in &s.edges {
        for (q, w) in t.rule.weights.iter().enumerate() {
            for (ns, p) in n_sigma.iter_mut().zip(&t.phi[q * n..(q + 1) * n]) {
                *ns -= *w * *p * t.normal;
            }
        }
    }
    let graph = ElementDofGraph::new(e, s.nodes().to_vec(), s.sub_triangles())
        .map_err(|_| SchemeError::NotP1Triangle(e))?;
    Ok(FluxSplit { edges, boundary, n_sigma, residual: res.phi, graph })
}

/// `C_K` (two evaluations), `B_∂K` and the balance they decompose.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitEntropyTerms {
    /// `½ Σ_{σ≠σ'} (v_σ − v_σ') f̂_{σσ'} + ∮ Θ^h·n`.
    pub ck: f64,
    /// `½ Σ_{σ≠σ'} ((v_σ − v_σ') f̂_{σσ'} − (θ_σ − θ_σ')·n_{σσ'})`.
    pub ck_alt: f64,
    /// `½ ∮ ([v^h] f̂ − [Θ^h]·n)`, `[ω] = outside − inside`.
    pub bdk: f64,
    /// `Σ v_σ Φ_σ − ∮ ({v} f̂ − {Θ^h}·n)`.
    pub balance: f64,
    /// `Σ θ_σ·N_σ + ∮ Θ^h·n`.
    pub n_sigma_defect: f64,
    /// Size of the terms entering the identities.
    pub scale: f64,
}

impl SplitEntropyTerms {
    pub fn ck_minus_bdk(&self) -> f64 {
        self.ck - self.bdk
    }
}

pub fn split_entropy_terms(scheme: &Scheme, u: &FieldCoeffs, e: usize, variant: Variant) -> Result<SplitEntropyTerms, SchemeError> {
    let split = flux_split(scheme, u, e, variant)?;
    let law = &scheme.law;
    let s = &scheme.spaces[e];
    let n = s.ndof();
    let ue = u.element(e);
    let v = scheme.entropy_variables(ue);
    let theta: Vec<Vec2> = v.iter().map(|&x| law.potential(x)).collect();
    let tr = scheme.traces(u, e);

    let mut pair = 0.0;
    let mut geo = 0.0;
    let mut scale = 1.0;
    for &(a, b, f) in &split.edges {
        pair += (v[a] - v[b]) * f;
        let nab = split
            .graph
            .edges
            .iter()
            .find(|d| d.a == a && d.b == b)
            .map(|d| d.normal)
            .unwrap_or_default();
        geo -= (theta[a] - theta[b]).dot(&nab);
        scale += ((v[a] - v[b]) * f).abs() + (theta[a] - theta[b]).norm() * nab.norm();
    }

    let mut theta_flux = 0.0;
    let mut bdk = 0.0;
    let mut gtheta = 0.0;
    let mut k = 0;
    for t in &s.edges {
        let outside = t.neighbor.map(|(ne, nl)| {
            let vn = scheme.entropy_variables(u.element(ne));
            let tn: Vec<Vec2> = vn.iter().map(|&x| law.potential(x)).collect();
            (scheme.spaces[ne].ndof(), tn, &scheme.spaces[ne].edges[nl].phi)
        });
        for (q, w) in t.rule.weights.iter().enumerate() {
            let phi = &t.phi[q * n..(q + 1) * n];
            let th_in: Vec2 = phi.iter().zip(&theta).map(|(p, th)| *p * th).sum();
            let th_out = match &outside {
                Some((nn, tn, nphi)) => nphi[q * nn..(q + 1) * nn].iter().zip(tn).map(|(p, th)| *p * th).sum(),
                None => th_in,
            };
            let (vi, vo) = (law.entropy_variable(tr.inner[k]), law.entropy_variable(tr.outer[k]));
            let f = tr.fhat[k];
            theta_flux += w * th_in.dot(&t.normal);
            bdk += 0.5 * w * ((vo - vi) * f - (th_out - th_in).dot(&t.normal));
            gtheta += w * (0.5 * (vi + vo) * f - 0.5 * (th_in + th_out).dot(&t.normal));
            scale += w * ((vi * f).abs() + th_in.norm());
            k += 1;
        }
    }
    let n_sigma_defect = theta.iter().zip(&split.n_sigma).map(|(th, ns)| th.dot(ns)).sum::<f64>() + theta_flux;
    let pairing: f64 = v.iter().zip(&split.residual).map(|(a, b)| a * b).sum();
    Ok(SplitEntropyTerms {
        ck: pair + theta_flux,
        ck_alt: pair + geo,
        bdk,
        balance: pairing - gtheta,
        n_sigma_defect,
        scale,
    })
}
