use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use super::boundary::BoundaryData;
use crate::approximation::{edge_rules, ElementSpace, FieldCoeffs, QuadratureOrders, SpaceError};
use crate::correction::{Backend, CorrectionError, CorrectionField, CorrectionOperator, NeumannTarget};
use crate::entropy::{self, EntropyError, TauCorrection};
use crate::geometry::Vec2;
use crate::mesh::Mesh;
use crate::physics::{entropy_numerical_flux, FluxKind, Law, UnsupportedFlux};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SchemeError {
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Correction(#[from] CorrectionError),
    #[error(transparent)]
    Flux(#[from] UnsupportedFlux),
    #[error(transparent)]
    Entropy(#[from] EntropyError),
    #[error("no boundary data for tag {0:?}")]
    MissingBoundary(String),
    #[error("unknown residual variant {0:?} (expected dg, dg-interp, fr, fr-strong, cs or st)")]
    UnknownVariant(String),
    #[error("element {0}: sub-cell flux split needs a P1 triangle and an fr or dg-interp residual")]
    NotP1Triangle(usize),
    #[error("field layout does not match the discretization")]
    Layout,
}

/// Residual variant; `Fr` is the Gauss form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Pointwise flux at quadrature points.
    Dg,
    /// Nodally interpolated flux `f^h`.
    DgInterp,
    Fr,
    FrStrong,
    Cs,
    St,
}

impl Variant {
    pub const ALL: [Variant; 6] =
        [Variant::Dg, Variant::DgInterp, Variant::Fr, Variant::FrStrong, Variant::Cs, Variant::St];

    pub fn uses_correction(self) -> bool {
        !matches!(self, Variant::Dg | Variant::DgInterp)
    }
}

impl FromStr for Variant {
    type Err = SchemeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dg" => Ok(Variant::Dg),
            "dg-interp" => Ok(Variant::DgInterp),
            "fr" | "fr-gauss" => Ok(Variant::Fr),
            "fr-strong" => Ok(Variant::FrStrong),
            "cs" => Ok(Variant::Cs),
            "st" => Ok(Variant::St),
            other => Err(SchemeError::UnknownVariant(other.to_string())),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Dg => "dg",
            Variant::DgInterp => "dg-interp",
            Variant::Fr => "fr",
            Variant::FrStrong => "fr-strong",
            Variant::Cs => "cs",
            Variant::St => "st",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeOptions {
    pub degree: usize,
    pub flux: FluxKind,
    pub backend: Backend,
    pub orders: QuadratureOrders,
    /// `c` in `δ = c h_K λ_max`.
    pub st_coefficient: f64,
}

impl Default for SchemeOptions {
    fn default() -> Self {
        SchemeOptions {
            degree: 1,
            flux: FluxKind::Rusanov,
            backend: Backend::Auto,
            orders: QuadratureOrders::default(),
            st_coefficient: 0.1,
        }
    }
}

/// Edge data of one element at all its edge quadrature points, local edges
/// in order: `start[i]..start[i + 1]` indexes edge `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Traces {
    pub start: Vec<usize>,
    pub inner: Vec<f64>,
    /// Neighbour trace on interior edges, the inner trace on `∂Ω`.
    pub outer: Vec<f64>,
    /// `f̂(inner, outer, n_K)`; equals `f(u^h)·n` on `∂Ω`.
    pub fhat: Vec<f64>,
}

/// Everything one element residual evaluation produced.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementResidual {
    pub phi: Vec<f64>,
    pub field: Option<CorrectionField>,
    pub tau: Option<TauCorrection>,
    /// `δ` of the stabilization, ST only.
    pub delta: Option<f64>,
}

/// Broken FR/RD discretization of one law on one mesh.
#[derive(Debug, Clone)]
pub struct Scheme {
    pub mesh: Mesh,
    pub law: Law,
    pub options: SchemeOptions,
    pub spaces: Vec<ElementSpace>,
    pub corrections: Vec<CorrectionOperator>,
    pub boundary: BoundaryData,
    /// `u_b` at the rule points of every boundary edge, indexed by global edge.
    pub boundary_values: Vec<Option<Vec<f64>>>,
}

impl Scheme {
    pub fn new(mesh: Mesh, law: Law, boundary: BoundaryData, options: SchemeOptions) -> Result<Self, SchemeError> {
        options.flux.check(&law)?;
        let rules = edge_rules(&mesh, options.degree, options.orders.edge);
        let spaces = (0..mesh.elements.len())
            .into_par_iter()
            .map(|e| ElementSpace::new(&mesh, e, options.degree, options.orders.volume, &rules))
            .collect::<Result<Vec<_>, _>>()?;
        let corrections = spaces
            .par_iter()
            .map(|s| CorrectionOperator::new(s, options.backend))
            .collect::<Result<Vec<_>, _>>()?;
        let mut boundary_values = vec![None; mesh.edges.len()];
        for id in mesh.boundary_edge_ids() {
            let tag = mesh.boundary_tag(id).unwrap_or(crate::mesh::DEFAULT_BOUNDARY_TAG);
            let p = boundary.profile(tag).ok_or_else(|| SchemeError::MissingBoundary(tag.to_string()))?;
            boundary_values[id] = Some(rules[id].points.iter().map(|x| p.eval(x)).collect());
        }
        Ok(Scheme { mesh, law, options, spaces, corrections, boundary, boundary_values })
    }

    pub fn n_elements(&self) -> usize {
        self.spaces.len()
    }

    pub fn zeros(&self) -> FieldCoeffs {
        FieldCoeffs::zeros(&self.spaces)
    }

    pub fn interpolate(&self, f: impl Fn(&Vec2) -> f64) -> FieldCoeffs {
        FieldCoeffs::interpolate(&self.spaces, f)
    }

    pub fn check_layout(&self, u: &FieldCoeffs) -> Result<(), SchemeError> {
        let ok = u.n_elements() == self.spaces.len()
            && self.spaces.iter().enumerate().all(|(e, s)| u.element(e).len() == s.ndof());
        if ok {
            Ok(())
        } else {
            Err(SchemeError::Layout)
        }
    }

    pub fn traces(&self, u: &FieldCoeffs, e: usize) -> Traces {
        let s = &self.spaces[e];
        let n = s.ndof();
        let ue = u.element(e);
        let total: usize = s.edges.iter().map(|t| t.rule.len()).sum();
        let mut start = Vec::with_capacity(s.edges.len() + 1);
        let mut inner = Vec::with_capacity(total);
        let mut outer = Vec::with_capacity(total);
        let mut fhat = Vec::with_capacity(total);
        start.push(0);
        for t in &s.edges {
            let nq = t.rule.len();
            for q in 0..nq {
                inner.push(dot(&t.phi[q * n..(q + 1) * n], ue));
            }
            let base = outer.len();
            match t.neighbor {
                Some((ne, nl)) => {
                    let ns = &self.spaces[ne];
                    let nn = ns.ndof();
                    let phi = &ns.edges[nl].phi;
                    let un = u.element(ne);
                    for q in 0..nq {
                        outer.push(dot(&phi[q * nn..(q + 1) * nn], un));
                    }
                }
                None => outer.extend_from_slice(&inner[base..base + nq]),
            }
            for q in base..base + nq {
                fhat.push(self.options.flux.eval(&self.law, inner[q], outer[q], &t.normal));
            }
            start.push(inner.len());
        }
        Traces { start, inner, outer, fhat }
    }

    /// `u_b` at the quadrature points of local edge `i`, when on `∂Ω`.
    pub fn boundary_trace(&self, e: usize, i: usize) -> Option<&[f64]> {
        self.boundary_values[self.spaces[e].edges[i].global].as_deref()
    }

    /// `−∫ ∇φ_σ·f(u^h)` with the pointwise flux.
    pub fn volume_pointwise(&self, e: usize, ue: &[f64]) -> Vec<f64> {
        let s = &self.spaces[e];
        let n = s.ndof();
        let mut out = vec![0.0; n];
        for (q, w) in s.volume.weights.iter().enumerate() {
            let f = self.law.flux(dot(&s.vol_phi[q * n..(q + 1) * n], ue));
            for (o, g) in out.iter_mut().zip(&s.vol_grad[q * n..(q + 1) * n]) {
                *o -= w * g.dot(&f);
            }
        }
        out
    }

    /// `f(u_σ)` at every DOF.
    pub fn nodal_flux(&self, ue: &[f64]) -> Vec<Vec2> {
        ue.iter().map(|&u| self.law.flux(u)).collect()
    }

    /// `−∫ ∇φ_σ·f^h` with `f^h = Σ f(u_τ) φ_τ`.
    pub fn volume_interpolated(&self, e: usize, fu: &[Vec2]) -> Vec<f64> {
        let s = &self.spaces[e];
        let n = s.ndof();
        let mut out = vec![0.0; n];
        for (q, w) in s.volume.weights.iter().enumerate() {
            let f = combine(&s.vol_phi[q * n..(q + 1) * n], fu);
            for (o, g) in out.iter_mut().zip(&s.vol_grad[q * n..(q + 1) * n]) {
                *o -= w * g.dot(&f);
            }
        }
        out
    }

    /// `∮ φ_σ values` with values given at all edge quadrature points.
    pub fn edge_integral(&self, e: usize, values: &[f64]) -> Vec<f64> {
        let s = &self.spaces[e];
        let n = s.ndof();
        let mut out = vec![0.0; n];
        let mut k = 0;
        for t in &s.edges {
            for (q, w) in t.rule.weights.iter().enumerate() {
                let wv = w * values[k];
                for (o, p) in out.iter_mut().zip(&t.phi[q * n..(q + 1) * n]) {
                    *o += wv * p;
                }
                k += 1;
            }
        }
        out
    }

    /// `α = f̂ − f^h·n` at every edge quadrature point.
    pub fn alpha(&self, e: usize, fu: &[Vec2], tr: &Traces) -> Vec<f64> {
        let s = &self.spaces[e];
        let n = s.ndof();
        let mut out = Vec::with_capacity(tr.fhat.len());
        let mut k = 0;
        for t in &s.edges {
            for q in 0..t.rule.len() {
                let fh = combine(&t.phi[q * n..(q + 1) * n], fu);
                out.push(tr.fhat[k] - fh.dot(&t.normal));
                k += 1;
            }
        }
        out
    }

    /// `∮ ĝ` with `ĝ = {v} f̂ − θ({v})·n`.
    pub fn entropy_flux_integral(&self, e: usize, tr: &Traces) -> f64 {
        let s = &self.spaces[e];
        let mut total = 0.0;
        let mut k = 0;
        for t in &s.edges {
            for w in &t.rule.weights {
                total += w * entropy_numerical_flux(&self.law, tr.fhat[k], tr.inner[k], tr.outer[k], &t.normal);
                k += 1;
            }
        }
        total
    }

    pub fn entropy_variables(&self, ue: &[f64]) -> Vec<f64> {
        ue.iter().map(|&u| self.law.entropy_variable(u)).collect()
    }

    /// Correction field for the element from its interface defects.
    pub fn correction(&self, e: usize, ue: &[f64], fu: &[Vec2], tr: &Traces) -> Result<CorrectionField, SchemeError> {
        let op = &self.corrections[e];
        let alpha = self.alpha(e, fu, tr);
        let target = match op.neumann_target() {
            Some(NeumannTarget::EntropyConservative) => {
                let mut dgi = self.volume_interpolated(e, fu);
                add(&mut dgi, &self.edge_integral(e, &tr.fhat));
                let v = self.entropy_variables(ue);
                let e_dgi = self.entropy_flux_integral(e, tr) - dot(&v, &dgi);
                Some(entropy::entropy_conservative_target(&v, e_dgi))
            }
            _ => None,
        };
        Ok(op.assemble(&alpha, target.as_deref())?)
    }

    /// `∫ φ_σ ∇·(f^h + ∇ψ̃)`.
    pub fn strong_residual(&self, e: usize, fu: &[Vec2], field: &CorrectionField) -> Vec<f64> {
        let s = &self.spaces[e];
        let op = &self.corrections[e];
        let n = s.ndof();
        let mut out = vec![0.0; n];
        for (q, w) in s.volume.weights.iter().enumerate() {
            let div_fh: f64 = s.vol_grad[q * n..(q + 1) * n].iter().zip(fu).map(|(g, f)| g.dot(f)).sum();
            let d = w * (div_fh + op.divergence_at(field, q));
            for (o, p) in out.iter_mut().zip(&s.vol_phi[q * n..(q + 1) * n]) {
                *o += d * p;
            }
        }
        out
    }

    /// `δ = c h_K λ_max` over DOFs and edge traces.
    pub fn st_delta(&self, e: usize, ue: &[f64], tr: &Traces) -> f64 {
        let lambda = ue
            .iter()
            .chain(&tr.inner)
            .chain(&tr.outer)
            .map(|&u| self.law.max_wave_speed(u))
            .fold(0.0, f64::max);
        self.options.st_coefficient * self.spaces[e].h * lambda
    }

    pub fn element_residual(&self, u: &FieldCoeffs, e: usize, variant: Variant) -> Result<ElementResidual, SchemeError> {
        let tr = self.traces(u, e);
        self.element_residual_with(u, e, variant, &tr)
    }

    pub fn element_residual_with(
        &self,
        u: &FieldCoeffs,
        e: usize,
        variant: Variant,
        tr: &Traces,
    ) -> Result<ElementResidual, SchemeError> {
        let ue = u.element(e);
        let edge = || self.edge_integral(e, &tr.fhat);
        let plain = |phi| ElementResidual { phi, field: None, tau: None, delta: None };
        match variant {
            Variant::Dg => {
                let mut phi = self.volume_pointwise(e, ue);
                add(&mut phi, &edge());
                return Ok(plain(phi));
            }
            Variant::DgInterp => {
                let mut phi = self.volume_interpolated(e, &self.nodal_flux(ue));
                add(&mut phi, &edge());
                return Ok(plain(phi));
            }
            _ => {}
        }
        let fu = self.nodal_flux(ue);
        let field = self.correction(e, ue, &fu, tr)?;
        if variant == Variant::FrStrong {
            let phi = self.strong_residual(e, &fu, &field);
            return Ok(ElementResidual { phi, field: Some(field), tau: None, delta: None });
        }
        let mut phi = self.volume_interpolated(e, &fu);
        add(&mut phi, &edge());
        add(&mut phi, &field.r);
        if variant == Variant::Fr {
            return Ok(ElementResidual { phi, field: Some(field), tau: None, delta: None });
        }
        let v = self.entropy_variables(ue);
        let ghat = self.entropy_flux_integral(e, tr);
        let pairing = dot(&v, &phi);
        let err = ghat - pairing;
        let scale = 1.0 + ghat.abs() + v.iter().zip(&phi).map(|(a, b)| (a * b).abs()).sum::<f64>();
        let tau = entropy::tau_correction(&v, err, scale).map_err(|k| k.at(e))?;
        add(&mut phi, &tau.tau);
        let mut delta = None;
        if variant == Variant::St {
            let d = self.st_delta(e, ue, tr);
            for (p, psi) in phi.iter_mut().zip(entropy::st_dissipation(&v, d)) {
                *p += psi;
            }
            delta = Some(d);
        }
        Ok(ElementResidual { phi, field: Some(field), tau: Some(tau), delta })
    }

    /// `Φ^Γ_σ = ∮_Γ φ_σ (f̂(u^h, u_b) − f(u^h)·n)` on local edge `i`.
    pub fn boundary_residual(&self, e: usize, i: usize, tr: &Traces) -> Option<Vec<f64>> {
        let ub = self.boundary_trace(e, i)?;
        let s = &self.spaces[e];
        let t = &s.edges[i];
        let n = s.ndof();
        let mut out = vec![0.0; n];
        for (q, w) in t.rule.weights.iter().enumerate() {
            let ui = tr.inner[tr.start[i] + q];
            let d = self.options.flux.eval(&self.law, ui, ub[q], &t.normal) - self.law.flux(ui).dot(&t.normal);
            for (o, p) in out.iter_mut().zip(&t.phi[q * n..(q + 1) * n]) {
                *o += w * d * p;
            }
        }
        Some(out)
    }

    /// Sum of the boundary residuals of all `∂Ω` edges of the element.
    pub fn element_boundary_residual(&self, e: usize, tr: &Traces) -> Vec<f64> {
        let mut out = vec![0.0; self.spaces[e].ndof()];
        for i in 0..self.spaces[e].edges.len() {
            if let Some(b) = self.boundary_residual(e, i, tr) {
                add(&mut out, &b);
            }
        }
        out
    }

    /// `R(σ) = Φ^K_σ + Σ_Γ Φ^Γ_σ` for every DOF.
    pub fn global_residual(&self, u: &FieldCoeffs, variant: Variant) -> Result<FieldCoeffs, SchemeError> {
        self.check_layout(u)?;
        let parts = (0..self.n_elements())
            .into_par_iter()
            .map(|e| {
                let tr = self.traces(u, e);
                let mut r = self.element_residual_with(u, e, variant, &tr)?.phi;
                add(&mut r, &self.element_boundary_residual(e, &tr));
                Ok(r)
            })
            .collect::<Result<Vec<_>, SchemeError>>()?;
        let mut out = self.zeros();
        for (e, p) in parts.into_iter().enumerate() {
            out.element_mut(e).copy_from_slice(&p);
        }
        Ok(out)
    }

    /// `∮_{∂Ω} |f(u_b)·n|`.
    pub fn boundary_flux_scale(&self) -> f64 {
        let mut total = 0.0;
        for e in 0..self.n_elements() {
            for (i, t) in self.spaces[e].edges.iter().enumerate() {
                if let Some(ub) = self.boundary_trace(e, i) {
                    for (w, u) in t.rule.weights.iter().zip(ub) {
                        total += w * self.law.flux(*u).dot(&t.normal).abs();
                    }
                }
            }
        }
        total
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn combine(phi: &[f64], fu: &[Vec2]) -> Vec2 {
    let mut f = Vec2::zeros();
    for (p, v) in phi.iter().zip(fu) {
        f += *p * v;
    }
    f
}

#[inline]
pub(crate) fn add(a: &mut [f64], b: &[f64]) {
    for (x, y) in a.iter_mut().zip(b) {
        *x += y;
    }
}
