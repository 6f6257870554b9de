//! Single runs and refinement studies driven by a [`RunConfig`].

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::approximation::FieldCoeffs;
use crate::config::{ConfigError, Resolved, RunConfig};
use crate::correction::check_admissibility;
use crate::entropy::{self, split_entropy_terms};
use crate::mesh::{ElementKind, Mesh};
use crate::physics::{tadmor_edge_check, FluxKind};
use crate::residual::{self, Scheme, SchemeError, Variant};
use crate::solver::{manufactured_error, solve_steady, SolverError, Termination};

#[derive(Debug, Error)]
pub enum StudyError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("level {level}: {source}")]
    Scheme {
        level: usize,
        #[source]
        source: SchemeError,
    },
    #[error("level {level}: {source}")]
    Solver {
        level: usize,
        #[source]
        source: SolverError,
    },
}

impl StudyError {
    pub fn is_divergence(&self) -> bool {
        matches!(self, StudyError::Solver { source: SolverError::Diverged { .. }, .. })
    }

    /// Failures of an invariant the scheme guarantees, such as a nonzero
    /// entropy defect on a constant element.
    pub fn is_invariant_violation(&self) -> bool {
        matches!(
            self,
            StudyError::Scheme { source: SchemeError::Entropy(_), .. }
                | StudyError::Solver { source: SolverError::Scheme(SchemeError::Entropy(_)), .. }
        )
    }
}

/// Worst defects of one converged state; `eq44` and `ck_bdk_min` are minima.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Defects {
    pub eq5: f64,
    pub eq6: f64,
    pub eq21: f64,
    pub eq27: f64,
    pub eq32: f64,
    pub eq44: f64,
    pub tadmor_max: f64,
    pub ck_bdk_min: Option<f64>,
}

impl Defects {
    fn worst(self, o: Defects) -> Defects {
        Defects {
            eq5: self.eq5.max(o.eq5),
            eq6: self.eq6.max(o.eq6),
            eq21: self.eq21.max(o.eq21),
            eq27: self.eq27.max(o.eq27),
            eq32: self.eq32.max(o.eq32),
            eq44: self.eq44.min(o.eq44),
            tadmor_max: self.tadmor_max.max(o.tadmor_max),
            ck_bdk_min: match (self.ck_bdk_min, o.ck_bdk_min) {
                (Some(a), Some(b)) => Some(a.min(b)),
                (a, b) => a.or(b),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelReport {
    pub level: usize,
    pub elements: usize,
    pub dofs: usize,
    /// `max_K 2|K| / perimeter`.
    pub h: f64,
    pub l2_error: Option<f64>,
    pub linf_error: Option<f64>,
    /// `max_K |Σ v_σ Φ^FR_σ − ∮ ĝ|`.
    pub fr_entropy_defect: f64,
    pub entropy_degenerate_elements: usize,
    pub iterations: usize,
    pub termination: Termination,
    pub final_residual: f64,
    pub defects: Defects,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderReport {
    pub from: usize,
    pub to: usize,
    pub l2: Option<f64>,
    pub linf: Option<f64>,
    pub entropy_defect: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Timing {
    pub levels: Vec<f64>,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyReport {
    pub case: String,
    pub law: String,
    pub degree: usize,
    pub variant: String,
    pub flux: String,
    pub backend: String,
    pub seed: u64,
    pub levels: Vec<LevelReport>,
    pub defects: Defects,
    pub orders: Vec<OrderReport>,
    pub violations: Vec<String>,
    pub timing: Timing,
}

impl StudyReport {
    /// The report without its timing object.
    pub fn numerics(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("report serializes");
        v.as_object_mut().expect("report is an object").remove("timing");
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ElementRow {
    pub level: usize,
    pub element: usize,
    pub cx: f64,
    pub cy: f64,
    pub h: f64,
    pub eq5: f64,
    pub fr_entropy: f64,
    /// `None` on constant elements with a nonzero entropy defect.
    pub cs_balance: Option<f64>,
    pub st_margin: Option<f64>,
    pub ck_bdk: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelRow {
    pub level: usize,
    pub elements: usize,
    pub h: f64,
    pub l2_error: Option<f64>,
    pub linf_error: Option<f64>,
    pub l2_order: Option<f64>,
    pub linf_order: Option<f64>,
    pub fr_entropy_defect: f64,
    pub entropy_order: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct StudyOutput {
    pub report: StudyReport,
    pub elements: Vec<ElementRow>,
}

impl StudyOutput {
    pub fn level_rows(&self) -> Vec<LevelRow> {
        self.report
            .levels
            .iter()
            .map(|l| {
                let order = self.report.orders.iter().find(|o| o.to == l.level);
                LevelRow {
                    level: l.level,
                    elements: l.elements,
                    h: l.h,
                    l2_error: l.l2_error,
                    linf_error: l.linf_error,
                    l2_order: order.and_then(|o| o.l2),
                    linf_order: order.and_then(|o| o.linf),
                    fr_entropy_defect: l.fr_entropy_defect,
                    entropy_order: order.and_then(|o| o.entropy_defect),
                    iterations: l.iterations,
                    converged: l.termination == Termination::Converged,
                }
            })
            .collect()
    }
}

/// Tolerances of the run-time invariant checks, before `tol_scale`.
pub const TOL_EQ5: f64 = 1e-10;
pub const TOL_EQ6: f64 = 1e-11;
pub const TOL_EQ21: f64 = 1e-11;
pub const TOL_EQ27: f64 = 1e-11;
pub const TOL_EQ32: f64 = 1e-10;
pub const TOL_EQ44: f64 = 1e-11;
pub const TOL_TADMOR: f64 = 1e-12;

fn violations(d: &Defects, level: usize, flux: FluxKind, tol_scale: f64) -> Vec<String> {
    let mut out = Vec::new();
    let mut upper = |key: &str, what: &str, value: f64, tol: f64| {
        let tol = tol * tol_scale;
        if !(value <= tol) {
            out.push(format!("{key} {what} {value:.3e} > {tol:.1e} at level {level}"));
        }
    };
    upper("eq5", "conservation defect", d.eq5, TOL_EQ5);
    upper("eq6", "boundary conservation defect", d.eq6, TOL_EQ6);
    upper("eq21", "correction trace defect", d.eq21, TOL_EQ21);
    upper("eq27", "correction sum defect", d.eq27, TOL_EQ27);
    upper("eq32", "entropy-conservative balance defect", d.eq32, TOL_EQ32);
    if flux != FluxKind::Central {
        upper("tadmor_max", "edge entropy production", d.tadmor_max, TOL_TADMOR);
    }
    let tol = TOL_EQ44 * tol_scale;
    if !(d.eq44 >= -tol) {
        out.push(format!("eq44 entropy-stable margin {:.3e} < -{tol:.1e} at level {level}", d.eq44));
    }
    out
}

pub fn initial_state(scheme: &Scheme, resolved: &Resolved, noise: f64, seed: u64) -> FieldCoeffs {
    let mut u = match resolved.initial.as_ref().or(resolved.exact.as_ref()) {
        Some(p) => scheme.interpolate(|x| p.eval(x)),
        None => scheme.zeros(),
    };
    if noise > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for x in &mut u.values {
            *x += rng.gen_range(-noise..noise);
        }
    }
    u
}

pub struct Diagnosis {
    pub defects: Defects,
    pub fr_entropy_max: f64,
    /// Constant elements on which the entropy-conservative correction is
    /// undefined, skipped when the run variant does not need it.
    pub degenerate: usize,
    pub rows: Vec<ElementRow>,
}

/// Invariant defects and per-element rows of one state.
pub fn diagnose(scheme: &Scheme, u: &FieldCoeffs, variant: Variant, level: usize) -> Result<Diagnosis, SchemeError> {
    let p1 = scheme.spaces.iter().all(|s| s.kind == ElementKind::Triangle && s.degree == 1);
    let mut d = Defects {
        eq5: 0.0,
        eq6: 0.0,
        eq21: 0.0,
        eq27: 0.0,
        eq32: 0.0,
        eq44: f64::INFINITY,
        tadmor_max: f64::NEG_INFINITY,
        ck_bdk_min: None,
    };
    let mut fr_max: f64 = 0.0;
    let mut degenerate = 0;
    let mut rows = Vec::with_capacity(scheme.n_elements());
    for e in 0..scheme.n_elements() {
        let s = &scheme.spaces[e];
        let tr = scheme.traces(u, e);
        let run = scheme.element_residual_with(u, e, variant, &tr)?;
        let eq5 = residual::conservation_defect(scheme, e, &run.phi, &tr).relative();
        d.eq5 = d.eq5.max(eq5);
        for i in 0..s.edges.len() {
            if let Some(b) = residual::boundary_conservation_defect(scheme, e, i, &tr) {
                d.eq6 = d.eq6.max(b.relative());
            }
        }
        let fr = scheme.element_residual_with(u, e, Variant::Fr, &tr)?;
        let field = run.field.as_ref().or(fr.field.as_ref()).expect("fr carries its field");
        let adm = check_admissibility(&scheme.corrections[e].traces(field), field, 1.0);
        d.eq21 = d.eq21.max(adm.trace_defect / adm.alpha_norm.max(1.0));
        d.eq27 = d.eq27.max(adm.sum_r / adm.r_scale);

        let fr_ent = entropy::element_entropy(scheme, u, e, &fr.phi);
        fr_max = fr_max.max(fr_ent.error.abs());
        let (cs_balance, st_margin) = match scheme.element_residual_with(u, e, Variant::Cs, &tr) {
            Err(SchemeError::Entropy(_)) if variant != Variant::Cs && variant != Variant::St => {
                degenerate += 1;
                (None, None)
            }
            cs => {
                let cs_ent = entropy::element_entropy(scheme, u, e, &cs?.phi);
                d.eq32 = d.eq32.max(cs_ent.margin().abs() / cs_ent.scale);
                let st = scheme.element_residual_with(u, e, Variant::St, &tr)?;
                let st_ent = entropy::element_entropy(scheme, u, e, &st.phi);
                let m = st_ent.margin() / st_ent.scale;
                d.eq44 = d.eq44.min(m);
                (Some(cs_ent.margin()), Some(m))
            }
        };

        let ck = if p1 {
            let t = split_entropy_terms(scheme, u, e, Variant::Fr)?;
            let v = t.ck_minus_bdk();
            d.ck_bdk_min = Some(d.ck_bdk_min.map_or(v, |m: f64| m.min(v)));
            Some(v)
        } else {
            None
        };
        for (i, t) in s.edges.iter().enumerate() {
            for (q, _) in t.rule.weights.iter().enumerate() {
                let k = tr.start[i] + q;
                let (a, b) = (tr.inner[k], tr.outer[k]);
                let check = tadmor_edge_check(&scheme.law, a, b, &t.normal, tr.fhat[k]);
                let (va, vb) = (scheme.law.entropy_variable(a), scheme.law.entropy_variable(b));
                let scale = 1.0 + ((vb - va) * tr.fhat[k]).abs()
                    + (scheme.law.potential(vb) - scheme.law.potential(va)).dot(&t.normal).abs();
                d.tadmor_max = d.tadmor_max.max(check / scale);
            }
            if let Some(ub) = scheme.boundary_trace(e, i) {
                for (q, &b) in ub.iter().enumerate() {
                    let a = tr.inner[tr.start[i] + q];
                    let fhat = scheme.options.flux.eval(&scheme.law, a, b, &t.normal);
                    let check = tadmor_edge_check(&scheme.law, a, b, &t.normal, fhat);
                    let (va, vb) = (scheme.law.entropy_variable(a), scheme.law.entropy_variable(b));
                    let scale = 1.0 + ((vb - va) * fhat).abs()
                        + (scheme.law.potential(vb) - scheme.law.potential(va)).dot(&t.normal).abs();
                    d.tadmor_max = d.tadmor_max.max(check / scale);
                }
            }
        }
        let c = crate::geometry::centroid(&s.vertices);
        rows.push(ElementRow {
            level,
            element: e,
            cx: c.x,
            cy: c.y,
            h: s.h,
            eq5,
            fr_entropy: fr_ent.error,
            cs_balance,
            st_margin,
            ck_bdk: ck,
        });
    }
    Ok(Diagnosis { defects: d, fr_entropy_max: fr_max, degenerate, rows })
}

fn order(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(a), Some(b)) if a > 0.0 && b > 0.0 => Some((a / b).log2()),
        _ => None,
    }
}

pub fn run_study(cfg: &RunConfig, seed: u64, tol_scale: f64) -> Result<StudyOutput, StudyError> {
    let resolved = cfg.resolve()?;
    let start = Instant::now();
    let base = cfg.build_mesh()?;
    let mut meshes: Vec<Mesh> = vec![base];
    for _ in 1..cfg.levels {
        let next = meshes.last().expect("base mesh").refine_uniform();
        meshes.push(next);
    }
    let mut levels = Vec::new();
    let mut elements = Vec::new();
    let mut timing = Vec::new();
    let mut violations_all = Vec::new();
    let mut worst: Option<Defects> = None;
    for (level, mesh) in meshes.into_iter().enumerate() {
        let t = Instant::now();
        let scheme = Scheme::new(mesh, resolved.law, resolved.boundary.clone(), resolved.options)
            .map_err(|source| StudyError::Scheme { level, source })?;
        let u0 = initial_state(&scheme, &resolved, cfg.initial_noise, seed.wrapping_add(level as u64));
        let (u, trace) = solve_steady(&scheme, &resolved.solver, u0).map_err(|source| StudyError::Solver { level, source })?;
        let (l2, linf) = match &resolved.exact {
            Some(p) => {
                let (a, b) = manufactured_error(&scheme, &u, |x| p.eval(x));
                (Some(a), Some(b))
            }
            None => (None, None),
        };
        let Diagnosis { defects, fr_entropy_max: fr_max, degenerate, rows } =
            diagnose(&scheme, &u, resolved.solver.variant, level).map_err(|source| StudyError::Scheme { level, source })?;
        violations_all.extend(violations(&defects, level, resolved.options.flux, tol_scale));
        worst = Some(worst.map_or(defects, |w| w.worst(defects)));
        elements.extend(rows);
        levels.push(LevelReport {
            level,
            elements: scheme.n_elements(),
            dofs: u.len(),
            h: scheme.spaces.iter().map(|s| s.h).fold(0.0, f64::max),
            l2_error: l2,
            linf_error: linf,
            fr_entropy_defect: fr_max,
            entropy_degenerate_elements: degenerate,
            iterations: trace.iterations,
            termination: trace.termination,
            final_residual: trace.final_residual(),
            defects,
        });
        timing.push(t.elapsed().as_secs_f64());
    }
    let orders = levels
        .windows(2)
        .map(|w| OrderReport {
            from: w[0].level,
            to: w[1].level,
            l2: order(w[0].l2_error, w[1].l2_error),
            linf: order(w[0].linf_error, w[1].linf_error),
            entropy_defect: order(Some(w[0].fr_entropy_defect), Some(w[1].fr_entropy_defect)),
        })
        .collect();
    let report = StudyReport {
        case: cfg.case.clone(),
        law: resolved.law.name().to_string(),
        degree: resolved.options.degree,
        variant: resolved.solver.variant.to_string(),
        flux: resolved.options.flux.to_string(),
        backend: resolved.options.backend.to_string(),
        seed,
        levels,
        defects: worst.expect("at least one level"),
        orders,
        violations: violations_all,
        timing: Timing { levels: timing, total: start.elapsed().as_secs_f64() },
    };
    Ok(StudyOutput { report, elements })
}

/// Builds the base-mesh discretization of a config, for the verify suites.
pub fn base_scheme(cfg: &RunConfig) -> Result<Scheme, StudyError> {
    let resolved = cfg.resolve()?;
    let mesh = cfg.build_mesh()?;
    Scheme::new(mesh, resolved.law, resolved.boundary, resolved.options).map_err(|source| StudyError::Scheme { level: 0, source })
}
