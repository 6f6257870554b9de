//! Randomized invariant batteries over one discretization.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::approximation::FieldCoeffs;
use crate::correction::{check_admissibility, Backend, CorrectionOperator};
use crate::entropy::{self, split_entropy_terms, flux_split};
use crate::geometry::vec2;
use crate::mesh::ElementKind;
use crate::physics::{tadmor_edge_check, FluxKind, Law};
use crate::residual::{self, Scheme, SchemeError, Variant};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Conservation,
    CorrectionAdmissibility,
    EntropyCs,
    EntropySt,
    Tadmor,
    Identities,
}

impl Suite {
    pub const ALL: [Suite; 6] = [
        Suite::Conservation,
        Suite::CorrectionAdmissibility,
        Suite::EntropyCs,
        Suite::EntropySt,
        Suite::Tadmor,
        Suite::Identities,
    ];
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Suite::ALL
            .iter()
            .copied()
            .find(|x| x.to_string() == s)
            .ok_or_else(|| format!("unknown suite {s:?}"))
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::Conservation => "conservation",
            Suite::CorrectionAdmissibility => "correction-admissibility",
            Suite::EntropyCs => "entropy-cs",
            Suite::EntropySt => "entropy-st",
            Suite::Tadmor => "tadmor",
            Suite::Identities => "identities",
        })
    }
}

/// `Upper`: pass when `value ≤ tolerance`; `Lower`: when `value ≥ −tolerance`;
/// `Report`: never fails.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Bound {
    Upper,
    Lower,
    Report,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    /// Worst relative defect (`Upper`), smallest relative margin (`Lower`).
    pub value: f64,
    pub tolerance: f64,
    pub bound: Bound,
    pub samples: usize,
    pub pass: bool,
}

impl Check {
    fn new(name: &str, bound: Bound, tolerance: f64) -> Self {
        let value = match bound {
            Bound::Lower => f64::INFINITY,
            _ => f64::NEG_INFINITY,
        };
        Check { name: name.to_string(), value, tolerance, bound, samples: 0, pass: true }
    }

    fn upper(name: &str, tolerance: f64) -> Self {
        Self::new(name, Bound::Upper, tolerance)
    }

    fn lower(name: &str, tolerance: f64) -> Self {
        Self::new(name, Bound::Lower, tolerance)
    }

    fn report(name: &str) -> Self {
        Self::new(name, Bound::Report, f64::INFINITY)
    }

    /// Informational, tracking the smallest sample.
    fn report_min(name: &str) -> Self {
        Self::new(name, Bound::Lower, f64::INFINITY)
    }

    fn record(&mut self, value: f64) {
        self.samples += 1;
        match self.bound {
            Bound::Lower => self.value = self.value.min(value),
            _ => self.value = if value.is_nan() { f64::NAN } else { self.value.max(value) },
        }
    }

    fn finish(mut self, tol_scale: f64) -> Self {
        self.tolerance *= tol_scale;
        if self.samples == 0 {
            self.value = 0.0;
        }
        self.pass = match self.bound {
            Bound::Upper => self.value <= self.tolerance,
            Bound::Lower => self.value >= -self.tolerance,
            Bound::Report => true,
        };
        self
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.pass { "PASS" } else { "FAIL" };
        match self.bound {
            _ if self.bound == Bound::Report || self.tolerance.is_infinite() => write!(f, "INFO {}: {:.3e} ({} samples)", self.name, self.value, self.samples),
            Bound::Upper => write!(f, "{status} {}: {:.3e} <= {:.1e} ({} samples)", self.name, self.value, self.tolerance, self.samples),
            Bound::Lower => write!(f, "{status} {}: {:.3e} >= -{:.1e} ({} samples)", self.name, self.value, self.tolerance, self.samples),
            Bound::Report => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub checks: Vec<Check>,
    pub skipped: Vec<String>,
}

impl SuiteReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub draws: usize,
    pub seed: u64,
    pub tol_scale: f64,
    /// States are drawn from `[−amplitude, amplitude]`.
    pub amplitude: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { draws: 200, seed: 0, tol_scale: 1.0, amplitude: 2.0 }
    }
}

/// Alternates uniform per-DOF noise with smooth fields broken by
/// per-element offsets, so every draw is discontinuous across interfaces
/// and non-constant inside elements.
pub fn random_state(scheme: &Scheme, rng: &mut impl Rng, amplitude: f64, draw: usize) -> FieldCoeffs {
    let mut u = scheme.zeros();
    if draw.is_multiple_of(2) {
        for x in &mut u.values {
            *x = rng.gen_range(-amplitude..amplitude);
        }
    } else {
        let (kx, ky, ph) = (rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0), rng.gen_range(0.0..6.3));
        for e in 0..scheme.n_elements() {
            let jump = rng.gen_range(-0.25..0.25) * amplitude;
            for (x, p) in u.element_mut(e).iter_mut().zip(scheme.spaces[e].nodes()) {
                *x = 0.6 * amplitude * (kx * p.x + ky * p.y + ph).sin() + jump;
            }
        }
    }
    u
}

pub const CONSERVATION_VARIANTS: [Variant; 6] =
    [Variant::Dg, Variant::DgInterp, Variant::FrStrong, Variant::Fr, Variant::Cs, Variant::St];

pub fn run(scheme: &Scheme, suite: Suite, options: &VerifyOptions) -> Result<SuiteReport, SchemeError> {
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let report = match suite {
        Suite::Conservation => conservation(scheme, options, &mut rng)?,
        Suite::CorrectionAdmissibility => admissibility(scheme, options, &mut rng)?,
        Suite::EntropyCs => entropy_cs(scheme, options, &mut rng)?,
        Suite::EntropySt => entropy_st(scheme, options, &mut rng)?,
        Suite::Tadmor => tadmor(scheme, options, &mut rng)?,
        Suite::Identities => identities(scheme, options, &mut rng)?,
    };
    Ok(SuiteReport {
        checks: report.checks.into_iter().map(|c| c.finish(options.tol_scale)).collect(),
        ..report
    })
}

fn conservation(scheme: &Scheme, o: &VerifyOptions, rng: &mut ChaCha8Rng) -> Result<SuiteReport, SchemeError> {
    let mut checks: Vec<Check> = CONSERVATION_VARIANTS
        .iter()
        .map(|v| Check::upper(&format!("eq5 {v}"), 1e-10))
        .collect();
    let mut eq6 = Check::upper("eq6 boundary", 1e-11);
    let mut telescoping = Check::upper("global telescoping", 1e-10);
    for d in 0..o.draws {
        let u = random_state(scheme, rng, o.amplitude, d);
        for e in 0..scheme.n_elements() {
            let tr = scheme.traces(&u, e);
            for (c, v) in checks.iter_mut().zip(CONSERVATION_VARIANTS) {
                let phi = scheme.element_residual_with(&u, e, v, &tr)?.phi;
                c.record(residual::conservation_defect(scheme, e, &phi, &tr).relative());
            }
            for i in 0..scheme.spaces[e].edges.len() {
                if let Some(b) = residual::boundary_conservation_defect(scheme, e, i, &tr) {
                    eq6.record(b.relative());
                }
            }
        }
        if d % 10 == 0 {
            telescoping.record(global_telescoping(scheme, &u)?);
        }
    }
    checks.push(eq6);
    checks.push(telescoping);
    Ok(SuiteReport { suite: Suite::Conservation, checks, skipped: Vec::new() })
}

/// `|Σ_σ R(σ) − ∮_{∂Ω} f̂(u^h, u_b)|` relative to `1 + Σ|R|`.
fn global_telescoping(scheme: &Scheme, u: &FieldCoeffs) -> Result<f64, SchemeError> {
    let r = scheme.global_residual(u, Variant::Fr)?;
    let mut flux = 0.0;
    for e in 0..scheme.n_elements() {
        let tr = scheme.traces(u, e);
        for (i, t) in scheme.spaces[e].edges.iter().enumerate() {
            if let Some(ub) = scheme.boundary_trace(e, i) {
                for (q, w) in t.rule.weights.iter().enumerate() {
                    flux += w * scheme.options.flux.eval(&scheme.law, tr.inner[tr.start[i] + q], ub[q], &t.normal);
                }
            }
        }
    }
    let total: f64 = r.values.iter().sum();
    let scale = 1.0 + r.values.iter().map(|x| x.abs()).sum::<f64>() + flux.abs();
    Ok((total - flux).abs() / scale)
}

fn admissibility(scheme: &Scheme, o: &VerifyOptions, rng: &mut ChaCha8Rng) -> Result<SuiteReport, SchemeError> {
    let mut checks = Vec::new();
    let mut skipped = Vec::new();
    for backend in [Backend::Rt, Backend::Neumann, Backend::NeumannEc] {
        let ops: Result<Vec<_>, _> = scheme.spaces.iter().map(|s| CorrectionOperator::new(s, backend)).collect();
        let ops = match ops {
            Ok(ops) => ops,
            Err(err) => {
                skipped.push(format!("{backend}: {err}"));
                continue;
            }
        };
        let mut trace = Check::upper(&format!("eq21 {backend}"), 1e-11);
        let mut sum = Check::upper(&format!("eq27 {backend}"), 1e-11);
        for _ in 0..o.draws {
            for (e, op) in ops.iter().enumerate() {
                let alpha: Vec<f64> = (0..op.trace_len()).map(|_| rng.gen_range(-o.amplitude..o.amplitude)).collect();
                let target = (backend == Backend::NeumannEc).then(|| {
                    let mut t: Vec<f64> = (0..scheme.spaces[e].ndof()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    let mean = t.iter().sum::<f64>() / t.len() as f64;
                    t.iter_mut().for_each(|x| *x -= mean);
                    t
                });
                let field = op.assemble(&alpha, target.as_deref())?;
                let rep = check_admissibility(&op.traces(&field), &field, 1.0);
                trace.record(rep.trace_defect / rep.alpha_norm.max(1.0));
                sum.record(rep.sum_r / rep.r_scale);
            }
        }
        checks.push(trace);
        checks.push(sum);
    }
    let mut eq26 = Check::upper("eq26 fr = dg-interp + r", 1e-11);
    for d in 0..o.draws.div_ceil(4) {
        let u = random_state(scheme, rng, o.amplitude, d);
        for e in 0..scheme.n_elements() {
            eq26.record(decomposition_defect(scheme, &u, e)?);
        }
    }
    checks.push(eq26);
    Ok(SuiteReport { suite: Suite::CorrectionAdmissibility, checks, skipped })
}

/// `max_σ |Φ^FR_σ − Φ^{DG-interp}_σ − r_σ|` relative to `max(1, ‖Φ‖∞)`.
pub fn decomposition_defect(scheme: &Scheme, u: &FieldCoeffs, e: usize) -> Result<f64, SchemeError> {
    let tr = scheme.traces(u, e);
    let fr = scheme.element_residual_with(u, e, Variant::Fr, &tr)?;
    let dgi = scheme.element_residual_with(u, e, Variant::DgInterp, &tr)?.phi;
    let r = &fr.field.as_ref().expect("fr carries its field").r;
    let scale = fr.phi.iter().map(|x| x.abs()).fold(1.0, f64::max);
    Ok(fr
        .phi
        .iter()
        .zip(&dgi)
        .zip(r)
        .map(|((a, b), c)| (a - b - c).abs())
        .fold(0.0, f64::max)
        / scale)
}

fn entropy_cs(scheme: &Scheme, o: &VerifyOptions, rng: &mut ChaCha8Rng) -> Result<SuiteReport, SchemeError> {
    let mut eq32 = Check::upper("eq32 cs balance", 1e-10);
    let mut tau_sum = Check::upper("tau sum", 1e-12);
    let mut tau_pair = Check::upper("tau pairing = E", 1e-11);
    let mut dg_fr = Check::upper("E(dg-interp) = E(fr) + sum v r", 1e-11);
    let mut margin_id = Check::upper("fr condition identity", 1e-11);
    let mut telescoping = Check::upper("entropy flux telescoping", 1e-12);
    let mut fr_margin = Check::report_min("fr condition margin min");
    let mut hand = Check::upper("tau hand case", 0.0);
    let t = entropy::tau_correction(&[0.0, 1.0, 2.0], 1.0, 1.0)?;
    hand.record(t.tau.iter().zip([-0.5, 0.0, 0.5]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
    let mut min_margin = f64::INFINITY;
    for d in 0..o.draws {
        let u = random_state(scheme, rng, o.amplitude, d);
        for e in 0..scheme.n_elements() {
            let tr = scheme.traces(&u, e);
            let cs = scheme.element_residual_with(&u, e, Variant::Cs, &tr)?;
            let ent = entropy::element_entropy(scheme, &u, e, &cs.phi);
            eq32.record(ent.margin().abs() / ent.scale);
            let tau = cs.tau.as_ref().expect("cs carries tau");
            let tscale = 1.0 + tau.tau.iter().map(|x| x.abs()).sum::<f64>();
            tau_sum.record(tau.tau.iter().sum::<f64>().abs() / tscale);
            let v = scheme.entropy_variables(u.element(e));
            let pair: f64 = v.iter().zip(&tau.tau).map(|(a, b)| a * b).sum();
            tau_pair.record((pair - tau.error).abs() / tau.error.abs().max(1.0));

            let fr_phi = scheme.element_residual_with(&u, e, Variant::Fr, &tr)?;
            let fr = entropy::element_entropy(scheme, &u, e, &fr_phi.phi);
            let dgi = entropy::element_entropy(scheme, &u, e, &scheme.element_residual_with(&u, e, Variant::DgInterp, &tr)?.phi);
            let r = &fr_phi.field.as_ref().expect("fr carries its field").r;
            let vr: f64 = v.iter().zip(r).map(|(a, b)| a * b).sum();
            let sc = fr.scale + dgi.scale + vr.abs();
            dg_fr.record((dgi.error - fr.error - vr).abs() / sc);
            let margin = vr - dgi.error;
            margin_id.record((margin - fr.margin()).abs() / sc);
            min_margin = min_margin.min(margin / sc);
        }
        if d % 10 == 0 {
            telescoping.record(entropy_flux_telescoping(scheme, &u));
        }
    }
    fr_margin.record(min_margin);
    Ok(SuiteReport {
        suite: Suite::EntropyCs,
        checks: vec![eq32, tau_sum, tau_pair, hand, dg_fr, margin_id, telescoping, fr_margin],
        skipped: Vec::new(),
    })
}

/// Largest `|ĝ_K + ĝ_{K'}|` over interior edge quadrature points,
/// relative to `1 + |ĝ|`.
fn entropy_flux_telescoping(scheme: &Scheme, u: &FieldCoeffs) -> f64 {
    let law = &scheme.law;
    let mut worst: f64 = 0.0;
    let traces: Vec<_> = (0..scheme.n_elements()).map(|e| scheme.traces(u, e)).collect();
    for edge in &scheme.mesh.edges {
        let (Some(re), Some(rl)) = (edge.right_element, edge.right_local) else { continue };
        let (le, ll) = (edge.left_element, edge.left_local);
        let (tl, tr) = (&traces[le], &traces[re]);
        let (nl, nr) = (scheme.spaces[le].edges[ll].normal, scheme.spaces[re].edges[rl].normal);
        for q in 0..tl.start[ll + 1] - tl.start[ll] {
            let (a, b) = (tl.start[ll] + q, tr.start[rl] + q);
            let gl = crate::physics::entropy_numerical_flux(law, tl.fhat[a], tl.inner[a], tl.outer[a], &nl);
            let gr = crate::physics::entropy_numerical_flux(law, tr.fhat[b], tr.inner[b], tr.outer[b], &nr);
            worst = worst.max((gl + gr).abs() / (1.0 + gl.abs()));
        }
    }
    worst
}

fn entropy_st(scheme: &Scheme, o: &VerifyOptions, rng: &mut ChaCha8Rng) -> Result<SuiteReport, SchemeError> {
    let mut eq44 = Check::lower("eq44 st margin", 1e-11);
    let mut psi_sum = Check::upper("psi sum", 1e-12);
    let mut psi_pair = Check::lower("psi pairing", 0.0);
    let mut st_cons = Check::upper("eq5 st", 1e-10);
    for d in 0..o.draws {
        let u = random_state(scheme, rng, o.amplitude, d);
        for e in 0..scheme.n_elements() {
            let tr = scheme.traces(&u, e);
            let st = scheme.element_residual_with(&u, e, Variant::St, &tr)?;
            let ent = entropy::element_entropy(scheme, &u, e, &st.phi);
            eq44.record(ent.margin() / ent.scale);
            let v = scheme.entropy_variables(u.element(e));
            let psi = entropy::st_dissipation(&v, st.delta.unwrap_or(0.0));
            let pscale = 1.0 + psi.iter().map(|x| x.abs()).sum::<f64>();
            psi_sum.record(psi.iter().sum::<f64>().abs() / pscale);
            psi_pair.record(v.iter().zip(&psi).map(|(a, b)| a * b).sum());
            st_cons.record(residual::conservation_defect(scheme, e, &st.phi, &tr).relative());
        }
    }
    Ok(SuiteReport { suite: Suite::EntropySt, checks: vec![eq44, psi_sum, psi_pair, st_cons], skipped: Vec::new() })
}

fn tadmor(scheme: &Scheme, o: &VerifyOptions, rng: &mut ChaCha8Rng) -> Result<SuiteReport, SchemeError> {
    let burgers = Law::burgers_2d();
    let mut ec = Check::upper("eq58 tadmor_ec burgers", 1e-12);
    let mut rus = Check::upper("eq58 rusanov burgers", 0.0);
    let mut configured = Check::report(&format!("tadmor_max {}", scheme.options.flux));
    for _ in 0..o.draws {
        let (a, b) = (rng.gen_range(-o.amplitude..o.amplitude), rng.gen_range(-o.amplitude..o.amplitude));
        let t: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let n = vec2(t.cos(), t.sin());
        ec.record(tadmor_edge_check(&burgers, a, b, &n, FluxKind::TadmorEc.eval(&burgers, a, b, &n)).abs());
        rus.record(tadmor_edge_check(&burgers, a, b, &n, FluxKind::Rusanov.eval(&burgers, a, b, &n)));
        configured.record(tadmor_edge_check(&scheme.law, a, b, &n, scheme.options.flux.eval(&scheme.law, a, b, &n)));
    }
    let mut checks = vec![ec, rus, configured];
    let mut skipped = Vec::new();
    let p1 = scheme.spaces.iter().all(|s| s.kind == ElementKind::Triangle && s.degree == 1);
    if !p1 {
        skipped.push("sub-cell split: mesh is not all P1 triangles".to_string());
        return Ok(SuiteReport { suite: Suite::Tadmor, checks, skipped });
    }
    let mut reassembly = Check::upper("eq54 flux split reassembly", 1e-11);
    let mut nsig = Check::upper("eq63 N_sigma identity", 1e-10);
    let mut ngeo = Check::upper("N_sigma = -oint phi n", 1e-12);
    let mut ck = Check::upper("C_K forms agree", 1e-10);
    let mut balance = Check::upper("C_K - B_dK = balance", 1e-10);
    let mut ck_min = Check::report_min("ck_bdk min");
    for d in 0..o.draws.div_ceil(4) {
        let u = random_state(scheme, rng, o.amplitude, d);
        for e in 0..scheme.n_elements() {
            let split = flux_split(scheme, &u, e, Variant::Fr)?;
            let scale = split.residual.iter().map(|x| x.abs()).fold(1.0, f64::max);
            reassembly.record(split.reassembly_defect() / scale);
            let graph = split.graph.n_sigma();
            let size = 1.0 + split.n_sigma.iter().map(|n| n.norm()).sum::<f64>();
            ngeo.record(graph.iter().zip(&split.n_sigma).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max) / size);
            let t = split_entropy_terms(scheme, &u, e, Variant::Fr)?;
            nsig.record(t.n_sigma_defect.abs() / t.scale);
            ck.record((t.ck - t.ck_alt).abs() / t.scale);
            balance.record((t.ck_minus_bdk() - t.balance).abs() / t.scale);
            ck_min.record(t.ck_minus_bdk());
        }
    }
    checks.extend([reassembly, nsig, ngeo, ck, balance, ck_min]);
    Ok(SuiteReport { suite: Suite::Tadmor, checks, skipped })
}

fn identities(scheme: &Scheme, o: &VerifyOptions, rng: &mut ChaCha8Rng) -> Result<SuiteReport, SchemeError> {
    let mut eq31: Vec<Check> = CONSERVATION_VARIANTS
        .iter()
        .map(|v| Check::upper(&format!("eq31 {v}"), 1e-9))
        .collect();
    let mut eq26 = Check::upper("eq26 fr = dg-interp + r", 1e-11);
    let exact_rt = scheme.corrections.iter().all(|c| c.backend() == Backend::Rt);
    let mut strong = if exact_rt {
        Check::upper("strong = gauss", 1e-9)
    } else {
        Check::report("strong - gauss gap")
    };
    let draws = o.draws.div_ceil(10).max(1);
    for d in 0..draws {
        let u = random_state(scheme, rng, o.amplitude, d);
        let test = random_state(scheme, rng, 1.0, d + 1);
        for (c, v) in eq31.iter_mut().zip(CONSERVATION_VARIANTS) {
            c.record(residual::global_identity(scheme, &u, &test, v)?.defect.relative());
        }
        for e in 0..scheme.n_elements() {
            eq26.record(decomposition_defect(scheme, &u, e)?);
            let tr = scheme.traces(&u, e);
            let a = scheme.element_residual_with(&u, e, Variant::FrStrong, &tr)?.phi;
            let b = scheme.element_residual_with(&u, e, Variant::Fr, &tr)?.phi;
            let scale = b.iter().map(|x| x.abs()).fold(1.0, f64::max);
            strong.record(a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / scale);
        }
    }
    let mut lipschitz = Check::report("lipschitz constant");
    let mut flat = Check::upper("lipschitz constant-state residual", 1e-10);
    let e = scheme.n_elements() / 2;
    let est = residual::lipschitz_probe(scheme, e, Variant::Fr, o.amplitude, o.draws.max(8), rng)?;
    lipschitz.record(est.constant);
    flat.record(est.constant_state_residual);
    let mut checks = eq31;
    checks.extend([eq26, strong, lipschitz, flat]);
    Ok(SuiteReport { suite: Suite::Identities, checks, skipped: Vec::new() })
}
