//! Explicit pseudo-time iteration driving the global residual to zero.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::approximation::FieldCoeffs;
use crate::geometry::Vec2;
use crate::residual::{Scheme, SchemeError, Variant};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Integrator {
    Euler,
    SspRk3,
}

impl FromStr for Integrator {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "euler" => Ok(Integrator::Euler),
            "ssp-rk3" | "rk3" => Ok(Integrator::SspRk3),
            other => Err(format!("unknown integrator {other:?} (expected euler or ssp-rk3)")),
        }
    }
}

impl fmt::Display for Integrator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Integrator::Euler => "euler",
            Integrator::SspRk3 => "ssp-rk3",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub variant: Variant,
    /// In `(0, 1]`.
    pub cfl: f64,
    pub max_iters: usize,
    /// Relative to `max(‖R₀‖, ∮_{∂Ω}|f(u_b)·n|)`.
    pub residual_tol: f64,
    pub integrator: Integrator,
    pub stagnation_window: usize,
    pub stagnation_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            variant: Variant::Fr,
            cfl: 0.3,
            max_iters: 10_000,
            residual_tol: 1e-10,
            integrator: Integrator::SspRk3,
            stagnation_window: 200,
            stagnation_tol: 1e-12,
        }
    }
}

pub const MIN_STEP: f64 = 1e-14;
const MIN_WAVE_SPEED: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error("solver diverged at iteration {iteration}: non-finite state")]
    Diverged { iteration: usize },
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(SolverError::Config(format!("cfl must lie in (0, 1], got {}", self.cfl)));
        }
        if !(self.residual_tol > 0.0 && self.residual_tol.is_finite()) {
            return Err(SolverError::Config(format!("residual_tol must be positive, got {}", self.residual_tol)));
        }
        if self.max_iters == 0 {
            return Err(SolverError::Config("max_iters must be positive".to_string()));
        }
        if self.stagnation_window == 0 {
            return Err(SolverError::Config("stagnation_window must be positive".to_string()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Converged,
    MaxIterations,
    Stagnated,
}

/// Norms of the global residual and the global entropy rate `Σ v_σ R(σ)`,
/// one entry per evaluated iterate including the initial one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveTrace {
    pub residual_l2: Vec<f64>,
    pub residual_linf: Vec<f64>,
    pub entropy_rate: Vec<f64>,
    pub steps: Vec<f64>,
    pub iterations: usize,
    pub termination: Termination,
    /// `max(‖R₀‖, F_ref)`.
    pub reference: f64,
    #[serde(skip)]
    pub wall_time: Duration,
}

impl SolveTrace {
    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }

    pub fn final_residual(&self) -> f64 {
        *self.residual_l2.last().unwrap_or(&0.0)
    }

    /// Equality of all recorded numerics, ignoring wall time.
    pub fn same_numerics(&self, other: &SolveTrace) -> bool {
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        bits(&self.residual_l2) == bits(&other.residual_l2)
            && bits(&self.residual_linf) == bits(&other.residual_linf)
            && bits(&self.entropy_rate) == bits(&other.entropy_rate)
            && bits(&self.steps) == bits(&other.steps)
            && self.iterations == other.iterations
            && self.termination == other.termination
            && self.reference.to_bits() == other.reference.to_bits()
    }
}

/// Element inverse mass matrices and the step-size rule
/// `Δτ = cfl · min_K h_K / (λ_K (2k + 1))`.
#[derive(Debug, Clone)]
pub struct PseudoTime {
    inv_mass: Vec<DMatrix<f64>>,
}

impl PseudoTime {
    pub fn new(scheme: &Scheme) -> Result<Self, SolverError> {
        let inv_mass = scheme
            .spaces
            .iter()
            .map(|s| {
                s.mass_matrix()
                    .try_inverse()
                    .ok_or_else(|| SolverError::Config(format!("element {}: singular mass matrix", s.element)))
            })
            .collect::<Result<_, _>>()?;
        Ok(PseudoTime { inv_mass })
    }

    pub fn step_size(&self, scheme: &Scheme, u: &FieldCoeffs, cfl: f64) -> f64 {
        let mut dt = f64::INFINITY;
        for (e, s) in scheme.spaces.iter().enumerate() {
            let lambda = u
                .element(e)
                .iter()
                .map(|&x| scheme.law.max_wave_speed(x))
                .fold(MIN_WAVE_SPEED, f64::max);
            dt = dt.min(cfl * s.h / (lambda * (2 * s.degree + 1) as f64));
        }
        dt.max(MIN_STEP)
    }

    /// `M_K⁻¹ R_K` element by element.
    pub fn apply_inverse_mass(&self, r: &FieldCoeffs) -> FieldCoeffs {
        let mut out = r.clone();
        for (e, m) in self.inv_mass.iter().enumerate() {
            let x = m * DVector::from_column_slice(r.element(e));
            out.element_mut(e).copy_from_slice(x.as_slice());
        }
        out
    }

    /// `u − Δτ M⁻¹ R(u)`.
    fn euler(&self, u: &FieldCoeffs, r: &FieldCoeffs, dt: f64) -> FieldCoeffs {
        let mut out = u.clone();
        let du = self.apply_inverse_mass(r);
        for (x, d) in out.values.iter_mut().zip(&du.values) {
            *x -= dt * d;
        }
        out
    }
}

fn combine(a: f64, x: &FieldCoeffs, b: f64, y: &FieldCoeffs) -> FieldCoeffs {
    let mut out = x.clone();
    for (o, v) in out.values.iter_mut().zip(&y.values) {
        *o = a * *o + b * v;
    }
    out
}

/// One pseudo-time step from `u` with residual `r = R(u)` already evaluated.
pub fn pseudo_time_step(
    scheme: &Scheme,
    stepper: &PseudoTime,
    u: &FieldCoeffs,
    r: &FieldCoeffs,
    dt: f64,
    config: &SolverConfig,
) -> Result<FieldCoeffs, SolverError> {
    let next = match config.integrator {
        Integrator::Euler => stepper.euler(u, r, dt),
        Integrator::SspRk3 => {
            let u1 = stepper.euler(u, r, dt);
            let r1 = scheme.global_residual(&u1, config.variant)?;
            let u2 = combine(0.75, u, 0.25, &stepper.euler(&u1, &r1, dt));
            let r2 = scheme.global_residual(&u2, config.variant)?;
            combine(1.0 / 3.0, u, 2.0 / 3.0, &stepper.euler(&u2, &r2, dt))
        }
    };
    Ok(next)
}

fn norms(r: &FieldCoeffs) -> (f64, f64) {
    let l2 = r.values.iter().map(|x| x * x).sum::<f64>().sqrt();
    let linf = r.values.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    (l2, linf)
}

fn entropy_rate(scheme: &Scheme, u: &FieldCoeffs, r: &FieldCoeffs) -> f64 {
    u.values.iter().zip(&r.values).map(|(x, y)| scheme.law.entropy_variable(*x) * y).sum()
}

/// Iterates until `‖R‖₂ ≤ tol · max(‖R₀‖₂, F_ref)`, `max_iters`, or a
/// plateau of relative change below `stagnation_tol` over the window.
pub fn solve_steady(
    scheme: &Scheme,
    config: &SolverConfig,
    initial: FieldCoeffs,
) -> Result<(FieldCoeffs, SolveTrace), SolverError> {
    config.validate()?;
    scheme.check_layout(&initial)?;
    if !initial.is_finite() {
        return Err(SolverError::Diverged { iteration: 0 });
    }
    let start = Instant::now();
    let stepper = PseudoTime::new(scheme)?;
    let mut u = initial;
    let mut r = scheme.global_residual(&u, config.variant)?;
    let (l2, linf) = norms(&r);
    let reference = l2.max(scheme.boundary_flux_scale());
    let mut trace = SolveTrace {
        residual_l2: vec![l2],
        residual_linf: vec![linf],
        entropy_rate: vec![entropy_rate(scheme, &u, &r)],
        steps: Vec::new(),
        iterations: 0,
        termination: Termination::MaxIterations,
        reference,
        wall_time: Duration::ZERO,
    };
    let target = config.residual_tol * reference;
    let mut best = (l2, u.clone());
    if l2 <= target {
        trace.termination = Termination::Converged;
    }
    while trace.termination != Termination::Converged && trace.iterations < config.max_iters {
        let dt = stepper.step_size(scheme, &u, config.cfl);
        let next = pseudo_time_step(scheme, &stepper, &u, &r, dt, config)?;
        trace.iterations += 1;
        if !next.is_finite() {
            return Err(SolverError::Diverged { iteration: trace.iterations });
        }
        u = next;
        r = scheme.global_residual(&u, config.variant)?;
        let (l2, linf) = norms(&r);
        if !l2.is_finite() {
            return Err(SolverError::Diverged { iteration: trace.iterations });
        }
        trace.residual_l2.push(l2);
        trace.residual_linf.push(linf);
        trace.entropy_rate.push(entropy_rate(scheme, &u, &r));
        trace.steps.push(dt);
        if l2 < best.0 {
            best = (l2, u.clone());
        }
        if l2 <= target {
            trace.termination = Termination::Converged;
            break;
        }
        let n = trace.residual_l2.len();
        if n > config.stagnation_window {
            let old = trace.residual_l2[n - 1 - config.stagnation_window];
            if (old - l2).abs() <= config.stagnation_tol * old.max(f64::MIN_POSITIVE) {
                trace.termination = Termination::Stagnated;
                break;
            }
        }
    }
    trace.wall_time = start.elapsed();
    if trace.termination == Termination::Stagnated {
        u = best.1;
    }
    Ok((u, trace))
}

/// `(L², L∞)` errors on a volume rule of order `2p + 2`, `p` the basis
/// polynomial degree, with L∞ taken over the rule points.
pub fn manufactured_error(scheme: &Scheme, u: &FieldCoeffs, exact: impl Fn(&Vec2) -> f64) -> (f64, f64) {
    let mut l2 = 0.0;
    let mut linf: f64 = 0.0;
    for (e, s) in scheme.spaces.iter().enumerate() {
        let rule = s.volume_rule(2 * s.polynomial_degree() + 2);
        let ue = u.element(e);
        for (x, w) in rule.points.iter().zip(&rule.weights) {
            let (phi, _) = s.eval(x);
            let uh: f64 = phi.iter().zip(ue).map(|(a, b)| a * b).sum();
            let d = uh - exact(x);
            l2 += w * d * d;
            linf = linf.max(d.abs());
        }
    }
    (l2.sqrt(), linf)
}

/// `Σ_K 1ᵀ M_K u_K = ∫_Ω u^h`.
pub fn total_mass(scheme: &Scheme, u: &FieldCoeffs) -> f64 {
    let mut total = 0.0;
    for (e, s) in scheme.spaces.iter().enumerate() {
        let n = s.ndof();
        let ue = u.element(e);
        for (q, w) in s.volume.weights.iter().enumerate() {
            total += w * s.vol_phi[q * n..(q + 1) * n].iter().zip(ue).map(|(a, b)| a * b).sum::<f64>();
        }
    }
    total
}
