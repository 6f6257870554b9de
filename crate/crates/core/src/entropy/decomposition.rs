use crate::approximation::{quadrature, FieldCoeffs};
use crate::geometry::Vec2;
use crate::physics::entropy_numerical_flux;
use crate::residual::{SchemeError, Scheme, Variant};

/// Orders of the rules standing in for exact integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecompositionRules {
    pub volume: usize,
    pub edge: usize,
}

impl Default for DecompositionRules {
    fn default() -> Self {
        DecompositionRules { volume: 16, edge: 17 }
    }
}

/// `Ẽ = SUR₁ + SUR₂ + SUR₃ + BO + CO + EDGE + REST` on one element, with `Q`
/// the scheme quadrature and `I` the fine rules:
///
/// ```text
/// SUR₁ = −Q[∇·(v^h f^h)] + I[∇·(v^h f^h)]
/// SUR₂ =  Q[(v^h − v(u^h)) ∇·f(u^h)]
/// SUR₃ =  Q[v^h ∇·(f^h − f(u^h))]
/// BO   = −I_e[v^h f(u^h)·n] + Q_e[v^h f(u^h)·n]
/// CO   =  Σ v_σ r_σ
/// EDGE =  Q_e[−v^h f(u^h)·n + v^h f̂ + g(u^h)·n − ĝ]
/// REST =  (Q − I)[∇·g(u^h)] + (I_e − Q_e)[g(u^h)·n] + I_e[v^h (f(u^h) − f^h)·n]
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Decomposition {
    pub sur1: f64,
    pub sur2: f64,
    pub sur3: f64,
    pub bo: f64,
    pub co: f64,
    pub edge: f64,
    pub rest: f64,
    /// `Ẽ = −E` of the FR residual.
    pub e_tilde: f64,
}

impl Decomposition {
    pub fn sum(&self) -> f64 {
        self.sur1 + self.sur2 + self.sur3 + self.bo + self.co + self.edge + self.rest
    }

    pub fn closure_defect(&self) -> f64 {
        (self.e_tilde - self.sum()).abs()
    }
}

struct Local<'a> {
    scheme: &'a Scheme,
    e: usize,
    u: Vec<f64>,
    v: Vec<f64>,
    fu: Vec<Vec2>,
}

/// Point values `u^h, ∇u^h, v^h, f^h, ∇·f^h`.
struct Point {
    u: f64,
    grad_u: Vec2,
    v: f64,
    grad_v: Vec2,
    fh: Vec2,
    div_fh: f64,
}

impl Local<'_> {
    fn at(&self, x: &Vec2) -> Point {
        let (phi, grad) = self.scheme.spaces[self.e].eval(x);
        self.point_from_tables(&phi, &grad)
    }

    fn point_from_tables(&self, phi: &[f64], grad: &[Vec2]) -> Point {
        let mut p = Point { u: 0.0, grad_u: Vec2::zeros(), v: 0.0, grad_v: Vec2::zeros(), fh: Vec2::zeros(), div_fh: 0.0 };
        for s in 0..phi.len() {
            p.u += phi[s] * self.u[s];
            p.grad_u += grad[s] * self.u[s];
            p.v += phi[s] * self.v[s];
            p.grad_v += grad[s] * self.v[s];
            p.fh += phi[s] * self.fu[s];
            p.div_fh += grad[s].dot(&self.fu[s]);
        }
        p
    }
}

pub fn error_decomposition(
    scheme: &Scheme,
    u: &FieldCoeffs,
    e: usize,
    rules: DecompositionRules,
) -> Result<Decomposition, SchemeError> {
    let law = &scheme.law;
    let s = &scheme.spaces[e];
    let n = s.ndof();
    let ue = u.element(e).to_vec();
    let local = Local { scheme, e, v: scheme.entropy_variables(&ue), fu: scheme.nodal_flux(&ue), u: ue };
    let tr = scheme.traces(u, e);
    let fr = scheme.element_residual_with(u, e, Variant::Fr, &tr)?;
    let ghat_total = scheme.entropy_flux_integral(e, &tr);
    let pairing: f64 = local.v.iter().zip(&fr.phi).map(|(a, b)| a * b).sum();

    let div_vf = |p: &Point| p.grad_v.dot(&p.fh) + p.v * p.div_fh;
    let div_f = |p: &Point| law.flux_divergence(p.u, &p.grad_u);
    let div_g = |p: &Point| law.entropy_variable(p.u) * law.flux_divergence(p.u, &p.grad_u);

    let mut d = Decomposition { e_tilde: pairing - ghat_total, ..Default::default() };

    for (q, w) in s.volume.weights.iter().enumerate() {
        let p = local.point_from_tables(&s.vol_phi[q * n..(q + 1) * n], &s.vol_grad[q * n..(q + 1) * n]);
        d.sur1 -= w * div_vf(&p);
        d.sur2 += w * (p.v - law.entropy_variable(p.u)) * div_f(&p);
        d.sur3 += w * p.v * (p.div_fh - div_f(&p));
        d.rest += w * div_g(&p);
    }
    let fine = s.volume_rule(rules.volume);
    for (x, w) in fine.points.iter().zip(&fine.weights) {
        let p = local.at(x);
        d.sur1 += w * div_vf(&p);
        d.rest -= w * div_g(&p);
    }

    let mut k = 0;
    for t in &s.edges {
        for (q, w) in t.rule.weights.iter().enumerate() {
            let phi = &t.phi[q * n..(q + 1) * n];
            let uh: f64 = phi.iter().zip(&local.u).map(|(a, b)| a * b).sum();
            let vh: f64 = phi.iter().zip(&local.v).map(|(a, b)| a * b).sum();
            let fn_ = law.flux(uh).dot(&t.normal);
            let gn = law.entropy_flux(uh).dot(&t.normal);
            let ghat = entropy_numerical_flux(law, tr.fhat[k], tr.inner[k], tr.outer[k], &t.normal);
            d.bo += w * vh * fn_;
            d.edge += w * (-vh * fn_ + vh * tr.fhat[k] + gn - ghat);
            d.rest -= w * gn;
            k += 1;
        }
        let (a, b) = scheme.mesh.edge_endpoints(t.global);
        let fine = quadrature::edge_rule(&a, &b, rules.edge);
        for (x, w) in fine.points.iter().zip(&fine.weights) {
            let p = local.at(x);
            let fn_ = law.flux(p.u).dot(&t.normal);
            d.bo -= w * p.v * fn_;
            d.rest += w * law.entropy_flux(p.u).dot(&t.normal);
            d.rest += w * p.v * (law.flux(p.u) - p.fh).dot(&t.normal);
        }
    }
    let r = &fr.field.as_ref().expect("fr residual carries its field").r;
    d.co = local.v.iter().zip(r).map(|(a, b)| a * b).sum();
    Ok(d)
}
