//! Flux correction fields `∇ψ̃` and the two admissibility conditions:
//! normal trace `∇ψ̃·n = f̂ − f^h·n` at edge quadrature points, and
//! `Σ_σ r_σ = 0` with `r_σ = −∫_K ∇φ_σ·∇ψ̃`.

mod neumann;
mod rt;
pub mod vector_space;

pub use neumann::NeumannSolver;
pub use rt::{RtBasis, RtSolver};

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::approximation::basis::LocalFrame;
use crate::approximation::ElementSpace;
use crate::geometry::Vec2;
use crate::mesh::ElementKind;
use vector_space::VectorPolySpace;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CorrectionError {
    #[error("element {element}: Raviart-Thomas dual functional matrix is singular (condition {condition:e})")]
    SingularDual { element: usize, condition: f64 },
    #[error("element {element}: Raviart-Thomas correction needs triangles")]
    NotTriangle { element: usize },
    #[error("element {element}: flux points must be the {expected} edge quadrature points, edge {edge} has {found}")]
    FluxPoints { element: usize, edge: usize, expected: usize, found: usize },
    #[error("element {element}: no vector polynomial space up to degree {max_degree} satisfies the Neumann constraints")]
    NoFeasibleSpace { element: usize, max_degree: usize },
    #[error("element {element}: Neumann constraints infeasible, residual {residual:e} > {tolerance:e}")]
    Infeasible { element: usize, residual: f64, tolerance: f64 },
    #[error("element {element}: target r sums to {sum:e}, exceeds {tolerance:e}")]
    Incompatible { element: usize, sum: f64, tolerance: f64 },
    #[error("unknown correction backend {0:?} (expected rt, neumann, neumann-ec or auto)")]
    UnknownBackend(String),
}

/// Correction backend selected in the run configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Backend {
    /// Raviart–Thomas dual basis, triangles only.
    Rt,
    /// Discrete Neumann problem with `r ≡ 0`.
    Neumann,
    /// Discrete Neumann problem with the entropy-conservative target `r`.
    NeumannEc,
    /// `Rt` on triangles, `Neumann` elsewhere.
    Auto,
}

impl FromStr for Backend {
    type Err = CorrectionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rt" => Ok(Backend::Rt),
            "neumann" => Ok(Backend::Neumann),
            "neumann-ec" => Ok(Backend::NeumannEc),
            "auto" => Ok(Backend::Auto),
            other => Err(CorrectionError::UnknownBackend(other.to_string())),
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Backend::Rt => "rt",
            Backend::Neumann => "neumann",
            Backend::NeumannEc => "neumann-ec",
            Backend::Auto => "auto",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NeumannTarget {
    Zero,
    EntropyConservative,
}

#[derive(Debug, Clone)]
enum Solver {
    Rt(RtSolver),
    Neumann(NeumannSolver, NeumannTarget),
}

/// Per-element precomputed correction machinery.
#[derive(Debug, Clone)]
pub struct CorrectionOperator {
    pub element: usize,
    pub space: VectorPolySpace,
    /// Per local edge, `[q][b] = w_b(x_q)·n`.
    pub trace: Vec<DMatrix<f64>>,
    /// `[σ][b] = −∫ ∇φ_σ·w_b`.
    pub moments: DMatrix<f64>,
    /// `[q][b]` at the element volume rule.
    pub vol_values: Vec<Vec2>,
    pub vol_div: DMatrix<f64>,
    solver: Solver,
}

/// One correction field `∇ψ̃ = Σ_b c_b w_b` with the data that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrectionField {
    pub coeffs: Vec<f64>,
    /// `f̂ − f^h·n` at every edge quadrature point, local edges in order.
    pub alpha: Vec<f64>,
    pub r: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmissibilityReport {
    pub trace_defect: f64,
    pub alpha_norm: f64,
    pub sum_r: f64,
    pub r_scale: f64,
    pub pass: bool,
}

pub const TRACE_TOL: f64 = 1e-11;
pub const SUM_R_TOL: f64 = 1e-11;

impl CorrectionOperator {
    pub fn new(space: &ElementSpace, backend: Backend) -> Result<Self, CorrectionError> {
        let backend = match backend {
            Backend::Auto
                if space.kind == ElementKind::Triangle
                    && space.edges.iter().all(|t| t.rule.len() == space.degree + 1) =>
            {
                Backend::Rt
            }
            Backend::Auto => Backend::Neumann,
            b => b,
        };
        let frame = LocalFrame::for_polygon(&space.vertices);
        match backend {
            Backend::Rt => {
                let basis = RtBasis::new(space)?;
                let op = Self::with_space(space, basis.space.clone());
                Ok(CorrectionOperator { solver: Solver::Rt(RtSolver::new(basis)), ..op })
            }
            Backend::Neumann | Backend::NeumannEc => {
                let target = if backend == Backend::Neumann {
                    NeumannTarget::Zero
                } else {
                    NeumannTarget::EntropyConservative
                };
                let mut last = None;
                for m in space.degree + 1..=neumann::MAX_DEGREE {
                    let op = Self::with_space(space, VectorPolySpace::full(frame, m));
                    if let Some(s) = NeumannSolver::new(space, &op) {
                        return Ok(CorrectionOperator { solver: Solver::Neumann(s, target), ..op });
                    }
                    last = Some(m);
                }
                Err(CorrectionError::NoFeasibleSpace {
                    element: space.element,
                    max_degree: last.unwrap_or(neumann::MAX_DEGREE),
                })
            }
            Backend::Auto => unreachable!(),
        }
    }

    fn with_space(space: &ElementSpace, vs: VectorPolySpace) -> Self {
        let nb = vs.len();
        let n = space.ndof();
        let mut vals = vec![Vec2::zeros(); nb];
        let mut divs = vec![0.0; nb];
        let trace = space
            .edges
            .iter()
            .map(|t| {
                let mut m = DMatrix::zeros(t.rule.len(), nb);
                for (q, x) in t.rule.points.iter().enumerate() {
                    vs.eval(x, &mut vals, &mut divs);
                    for b in 0..nb {
                        m[(q, b)] = vals[b].dot(&t.normal);
                    }
                }
                m
            })
            .collect();
        let nq = space.volume.len();
        let mut moments = DMatrix::zeros(n, nb);
        let mut vol_values = vec![Vec2::zeros(); nq * nb];
        let mut vol_div = DMatrix::zeros(nq, nb);
        for (q, x) in space.volume.points.iter().enumerate() {
            vs.eval(x, &mut vals, &mut divs);
            let w = space.volume.weights[q];
            for b in 0..nb {
                vol_values[q * nb + b] = vals[b];
                vol_div[(q, b)] = divs[b];
                for s in 0..n {
                    moments[(s, b)] -= w * space.vol_grad[q * n + s].dot(&vals[b]);
                }
            }
        }
        CorrectionOperator {
            element: space.element,
            space: vs,
            trace,
            moments,
            vol_values,
            vol_div,
            solver: Solver::Rt(RtSolver::empty()),
        }
    }

    pub fn backend(&self) -> Backend {
        match &self.solver {
            Solver::Rt(_) => Backend::Rt,
            Solver::Neumann(_, NeumannTarget::Zero) => Backend::Neumann,
            Solver::Neumann(_, NeumannTarget::EntropyConservative) => Backend::NeumannEc,
        }
    }

    pub fn neumann_target(&self) -> Option<NeumannTarget> {
        match &self.solver {
            Solver::Neumann(_, t) => Some(*t),
            Solver::Rt(_) => None,
        }
    }

    pub fn len(&self) -> usize {
        self.space.len()
    }

    pub fn is_empty(&self) -> bool {
        self.space.is_empty()
    }

    pub fn trace_len(&self) -> usize {
        self.trace.iter().map(|t| t.nrows()).sum()
    }

    /// Field from the interface defects and, for Neumann backends, a target `r`.
    pub fn assemble(&self, alpha: &[f64], target_r: Option<&[f64]>) -> Result<CorrectionField, CorrectionError> {
        assert_eq!(alpha.len(), self.trace_len());
        let coeffs = match &self.solver {
            Solver::Rt(s) => s.coefficients(alpha),
            Solver::Neumann(s, _) => {
                let zero;
                let target = match target_r {
                    Some(t) => t,
                    None => {
                        zero = vec![0.0; self.moments.nrows()];
                        &zero
                    }
                };
                s.solve(self.element, alpha, target)?
            }
        };
        Ok(self.field_from_coeffs(coeffs, alpha.to_vec()))
    }

    pub fn field_from_coeffs(&self, coeffs: Vec<f64>, alpha: Vec<f64>) -> CorrectionField {
        let r = (&self.moments * DVector::from_column_slice(&coeffs)).as_slice().to_vec();
        CorrectionField { coeffs, alpha, r }
    }

    pub fn zero_field(&self) -> CorrectionField {
        CorrectionField {
            coeffs: vec![0.0; self.len()],
            alpha: vec![0.0; self.trace_len()],
            r: vec![0.0; self.moments.nrows()],
        }
    }

    /// `∇ψ̃·n` at every edge quadrature point.
    pub fn traces(&self, field: &CorrectionField) -> Vec<f64> {
        let c = DVector::from_column_slice(&field.coeffs);
        self.trace
            .iter()
            .flat_map(|t| (t * &c).as_slice().to_vec())
            .collect()
    }

    /// `∇ψ̃` at volume quadrature point `q`.
    pub fn value_at(&self, field: &CorrectionField, q: usize) -> Vec2 {
        let nb = self.len();
        self.vol_values[q * nb..(q + 1) * nb]
            .iter()
            .zip(&field.coeffs)
            .map(|(w, c)| w * *c)
            .sum()
    }

    /// `∇·∇ψ̃` at volume quadrature point `q`.
    pub fn divergence_at(&self, field: &CorrectionField, q: usize) -> f64 {
        (0..self.len()).map(|b| self.vol_div[(q, b)] * field.coeffs[b]).sum()
    }

    /// Evaluation of `∇ψ̃` and its divergence at an arbitrary point.
    pub fn eval(&self, field: &CorrectionField, x: &Vec2) -> (Vec2, f64) {
        let nb = self.len();
        let mut vals = vec![Vec2::zeros(); nb];
        let mut divs = vec![0.0; nb];
        self.space.eval(x, &mut vals, &mut divs);
        let mut v = Vec2::zeros();
        let mut d = 0.0;
        for b in 0..nb {
            v += vals[b] * field.coeffs[b];
            d += divs[b] * field.coeffs[b];
        }
        (v, d)
    }

    pub fn admissibility(&self, field: &CorrectionField, tol_scale: f64) -> AdmissibilityReport {
        check_admissibility(&self.traces(field), field, tol_scale)
    }
}

/// Both conditions for a field given its normal traces.
pub fn check_admissibility(traces: &[f64], field: &CorrectionField, tol_scale: f64) -> AdmissibilityReport {
    let trace_defect = traces
        .iter()
        .zip(&field.alpha)
        .map(|(t, a)| (t - a).abs())
        .fold(0.0, f64::max);
    let alpha_norm = field.alpha.iter().map(|a| a.abs()).fold(0.0, f64::max);
    let sum_r = field.r.iter().sum::<f64>().abs();
    let r_scale = field.r.iter().map(|r| r.abs()).fold(1.0, f64::max);
    let pass = trace_defect <= TRACE_TOL * tol_scale * alpha_norm.max(1.0)
        && sum_r <= SUM_R_TOL * tol_scale * r_scale;
    AdmissibilityReport { trace_defect, alpha_norm, sum_r, r_scale, pass }
}
