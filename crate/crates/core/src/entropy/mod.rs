//! Element entropy balance: the error `E`, its conservative correction `τ̃`,
//! the stabilization `Ψ`, the error decomposition and the sub-cell Tadmor
//! diagnostics.

mod split;
mod decomposition;

pub use split::{split_entropy_terms, flux_split, SplitEntropyTerms, FluxSplit};
pub use decomposition::{error_decomposition, Decomposition, DecompositionRules};

use thiserror::Error;

use crate::approximation::FieldCoeffs;
use crate::residual::{SchemeError, Scheme, Variant};

/// `Σ(v_σ − v̄)²` below this times `max(1, Σv²)` counts as constant.
pub const DEGENERATE_SPREAD: f64 = 1e-13;
/// Largest `|E|` tolerated on a constant state, relative to the element scale.
pub const DEGENERATE_ERROR: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EntropyError {
    #[error("element {element:?}: entropy defect {error:e} on constant state (spread {spread:e})")]
    ConstantState { element: Option<usize>, error: f64, spread: f64 },
}

impl EntropyError {
    pub fn at(self, e: usize) -> Self {
        match self {
            EntropyError::ConstantState { error, spread, .. } => {
                EntropyError::ConstantState { element: Some(e), error, spread }
            }
        }
    }
}

/// `τ̃_σ = α (v_σ − v̄)` with `α = E / Σ(v_σ − v̄)²`.
#[derive(Debug, Clone, PartialEq)]
pub struct TauCorrection {
    pub tau: Vec<f64>,
    pub alpha: f64,
    pub mean: f64,
    pub error: f64,
}

fn mean_and_spread(v: &[f64]) -> (f64, f64) {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    (mean, v.iter().map(|x| (x - mean) * (x - mean)).sum())
}

fn is_constant(v: &[f64], spread: f64) -> bool {
    let vscale = v.iter().map(|x| x * x).sum::<f64>().max(1.0);
    spread < DEGENERATE_SPREAD * vscale
}

pub fn tau_correction(v: &[f64], error: f64, scale: f64) -> Result<TauCorrection, EntropyError> {
    let (mean, spread) = mean_and_spread(v);
    if is_constant(v, spread) {
        if error.abs() > DEGENERATE_ERROR * scale.max(1.0) {
            return Err(EntropyError::ConstantState { element: None, error, spread });
        }
        return Ok(TauCorrection { tau: vec![0.0; v.len()], alpha: 0.0, mean, error });
    }
    let alpha = error / spread;
    Ok(TauCorrection { tau: v.iter().map(|x| alpha * (x - mean)).collect(), alpha, mean, error })
}

/// `Ψ_σ = δ (v_σ − v̄)`.
pub fn st_dissipation(v: &[f64], delta: f64) -> Vec<f64> {
    let (mean, _) = mean_and_spread(v);
    v.iter().map(|x| delta * (x - mean)).collect()
}

/// Target `r_σ = α (v_σ − v̄)` with `α = E^{DG-interp} / Σ(v_σ − v̄)²`, which
/// makes the corrected residual entropy conservative.
pub fn entropy_conservative_target(v: &[f64], error: f64) -> Vec<f64> {
    let (mean, spread) = mean_and_spread(v);
    if is_constant(v, spread) {
        return vec![0.0; v.len()];
    }
    let alpha = error / spread;
    v.iter().map(|x| alpha * (x - mean)).collect()
}

/// Per-element entropy quantities of one residual evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementEntropy {
    /// `∮ ĝ`.
    pub boundary_flux: f64,
    /// `Σ v_σ Φ_σ`.
    pub pairing: f64,
    /// `E = ∮ĝ − Σ v_σ Φ_σ`.
    pub error: f64,
    /// Scale used by relative tolerances.
    pub scale: f64,
}

impl ElementEntropy {
    /// `Ẽ = −E`.
    pub fn error_tilde(&self) -> f64 {
        -self.error
    }

    /// `Σ v_σ Φ_σ − ∮ ĝ`, the balance margin.
    pub fn margin(&self) -> f64 {
        self.pairing - self.boundary_flux
    }
}

pub fn element_entropy(scheme: &Scheme, u: &FieldCoeffs, e: usize, phi: &[f64]) -> ElementEntropy {
    let tr = scheme.traces(u, e);
    let v = scheme.entropy_variables(u.element(e));
    let boundary_flux = scheme.entropy_flux_integral(e, &tr);
    let pairing: f64 = v.iter().zip(phi).map(|(a, b)| a * b).sum();
    let scale = 1.0 + boundary_flux.abs() + v.iter().zip(phi).map(|(a, b)| (a * b).abs()).sum::<f64>();
    ElementEntropy { boundary_flux, pairing, error: boundary_flux - pairing, scale }
}

/// `E` for the given residual variant on element `e`.
pub fn entropy_error(scheme: &Scheme, u: &FieldCoeffs, e: usize, variant: Variant) -> Result<ElementEntropy, SchemeError> {
    let phi = scheme.element_residual(u, e, variant)?.phi;
    Ok(element_entropy(scheme, u, e, &phi))
}

/// FR entropy condition `Σ v_σ r_σ − E^{DG}` with the interpolated-flux DG
/// residual; non-negative means the uncorrected FR element is entropy stable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrCondition {
    pub margin: f64,
    pub e_dg: f64,
    pub correction_pairing: f64,
    pub stable: bool,
}

pub fn fr_entropy_condition(scheme: &Scheme, u: &FieldCoeffs, e: usize) -> Result<FrCondition, SchemeError> {
    let e_dg = entropy_error(scheme, u, e, Variant::DgInterp)?.error;
    let fr = scheme.element_residual(u, e, Variant::Fr)?;
    let v = scheme.entropy_variables(u.element(e));
    let r = &fr.field.as_ref().expect("fr residual carries its field").r;
    let correction_pairing: f64 = v.iter().zip(r).map(|(a, b)| a * b).sum();
    let margin = correction_pairing - e_dg;
    Ok(FrCondition { margin, e_dg, correction_pairing, stable: margin >= 0.0 })
}
