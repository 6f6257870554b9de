//! Scalar conservation laws with their entropy pair and interface fluxes.

mod flux;

pub use flux::{entropy_numerical_flux, tadmor_edge_check, FluxKind, UnsupportedFlux};

use crate::geometry::{vec2, Vec2};

/// Scalar law `∇·f(u) = 0` with `U = u²/2`, so `v = u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Law {
    Advection { velocity: [f64; 2] },
    Burgers,
}

/// States sampled by property checks lie in `[-BOX, BOX]`.
pub const ADMISSIBLE_BOX: f64 = 5.0;

impl Law {
    pub fn linear_advection(a: [f64; 2]) -> Self {
        assert!(a[0] != 0.0 || a[1] != 0.0, "advection velocity must be non-zero");
        Law::Advection { velocity: a }
    }

    pub fn burgers_2d() -> Self {
        Law::Burgers
    }

    pub fn name(&self) -> &'static str {
        match self {
            Law::Advection { .. } => "advection",
            Law::Burgers => "burgers",
        }
    }

    /// Number of conserved components.
    pub fn components(&self) -> usize {
        1
    }

    pub fn admissible(&self, u: f64) -> bool {
        u.is_finite() && u.abs() <= ADMISSIBLE_BOX
    }

    #[inline]
    pub fn flux(&self, u: f64) -> Vec2 {
        match *self {
            Law::Advection { velocity: a } => vec2(a[0] * u, a[1] * u),
            Law::Burgers => {
                let f = 0.5 * u * u;
                vec2(f, f)
            }
        }
    }

    /// `∂f/∂u`.
    #[inline]
    pub fn flux_jacobian(&self, u: f64) -> Vec2 {
        match *self {
            Law::Advection { velocity: a } => vec2(a[0], a[1]),
            Law::Burgers => vec2(u, u),
        }
    }

    #[inline]
    pub fn entropy(&self, u: f64) -> f64 {
        0.5 * u * u
    }

    #[inline]
    pub fn entropy_hessian(&self, _u: f64) -> f64 {
        1.0
    }

    #[inline]
    pub fn entropy_variable(&self, u: f64) -> f64 {
        u
    }

    #[inline]
    pub fn state_from_entropy_variable(&self, v: f64) -> f64 {
        v
    }

    #[inline]
    pub fn entropy_flux(&self, u: f64) -> Vec2 {
        match *self {
            Law::Advection { velocity: a } => {
                let g = 0.5 * u * u;
                vec2(a[0] * g, a[1] * g)
            }
            Law::Burgers => {
                let g = u * u * u / 3.0;
                vec2(g, g)
            }
        }
    }

    /// `θ(v)` with `∇_v θ = f` and `g = v f − θ`.
    #[inline]
    pub fn potential(&self, v: f64) -> Vec2 {
        match *self {
            Law::Advection { velocity: a } => {
                let t = 0.5 * v * v;
                vec2(a[0] * t, a[1] * t)
            }
            Law::Burgers => {
                let t = v * v * v / 6.0;
                vec2(t, t)
            }
        }
    }

    /// Spectral radius of `∂(f·n)/∂u` at `u`.
    #[inline]
    pub fn wave_speed(&self, u: f64, n: &Vec2) -> f64 {
        self.flux_jacobian(u).dot(n).abs()
    }

    /// Largest wave speed over all directions.
    #[inline]
    pub fn max_wave_speed(&self, u: f64) -> f64 {
        self.flux_jacobian(u).norm()
    }

    /// Divergence of `f(u(x))` given `u` and `∇u`.
    #[inline]
    pub fn flux_divergence(&self, u: f64, grad_u: &Vec2) -> f64 {
        self.flux_jacobian(u).dot(grad_u)
    }
}
