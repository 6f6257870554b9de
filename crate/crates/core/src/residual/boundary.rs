use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Vec2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProfileError {
    #[error("unknown profile {0:?} (expected constant, linear or sine)")]
    Unknown(String),
    #[error("profile {name} takes {expected} parameters, got {found}")]
    Arity { name: &'static str, expected: &'static str, found: usize },
    #[error("profile parameter {0} is not finite")]
    NotFinite(usize),
}

/// Analytic scalar profile `u(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Profile {
    Constant(f64),
    /// `c0 + cx x + cy y`.
    Linear { c0: f64, cx: f64, cy: f64 },
    /// `offset + amplitude sin(kx x + ky y + phase)`.
    Sine { amplitude: f64, kx: f64, ky: f64, phase: f64, offset: f64 },
}

/// Document form: `{"profile": "sine", "params": [a, kx, ky, phase, offset]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSpec {
    pub profile: String,
    #[serde(default)]
    pub params: Vec<f64>,
}

impl Profile {
    pub fn from_spec(spec: &ProfileSpec) -> Result<Self, ProfileError> {
        let p = &spec.params;
        if let Some(i) = p.iter().position(|v| !v.is_finite()) {
            return Err(ProfileError::NotFinite(i));
        }
        let at = |i: usize| p.get(i).copied().unwrap_or(0.0);
        match spec.profile.as_str() {
            "constant" => match p.len() {
                1 => Ok(Profile::Constant(p[0])),
                n => Err(ProfileError::Arity { name: "constant", expected: "1", found: n }),
            },
            "linear" => match p.len() {
                3 => Ok(Profile::Linear { c0: p[0], cx: p[1], cy: p[2] }),
                n => Err(ProfileError::Arity { name: "linear", expected: "3", found: n }),
            },
            "sine" => match p.len() {
                3..=5 => Ok(Profile::Sine { amplitude: p[0], kx: p[1], ky: p[2], phase: at(3), offset: at(4) }),
                n => Err(ProfileError::Arity { name: "sine", expected: "3 to 5", found: n }),
            },
            other => Err(ProfileError::Unknown(other.to_string())),
        }
    }

    pub fn to_spec(&self) -> ProfileSpec {
        let (profile, params) = match *self {
            Profile::Constant(c) => ("constant", vec![c]),
            Profile::Linear { c0, cx, cy } => ("linear", vec![c0, cx, cy]),
            Profile::Sine { amplitude, kx, ky, phase, offset } => ("sine", vec![amplitude, kx, ky, phase, offset]),
        };
        ProfileSpec { profile: profile.to_string(), params }
    }

    #[inline]
    pub fn eval(&self, x: &Vec2) -> f64 {
        match *self {
            Profile::Constant(c) => c,
            Profile::Linear { c0, cx, cy } => c0 + cx * x.x + cy * x.y,
            Profile::Sine { amplitude, kx, ky, phase, offset } => offset + amplitude * (kx * x.x + ky * x.y + phase).sin(),
        }
    }

    pub fn gradient(&self, x: &Vec2) -> Vec2 {
        match *self {
            Profile::Constant(_) => Vec2::zeros(),
            Profile::Linear { cx, cy, .. } => Vec2::new(cx, cy),
            Profile::Sine { amplitude, kx, ky, phase, .. } => {
                amplitude * (kx * x.x + ky * x.y + phase).cos() * Vec2::new(kx, ky)
            }
        }
    }
}

/// Dirichlet data per boundary tag; the tag `"*"` matches any tag not listed.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BoundaryData {
    pub profiles: BTreeMap<String, Profile>,
}

pub const WILDCARD_TAG: &str = "*";

impl BoundaryData {
    pub fn uniform(profile: Profile) -> Self {
        let mut profiles = BTreeMap::new();
        profiles.insert(WILDCARD_TAG.to_string(), profile);
        BoundaryData { profiles }
    }

    pub fn with(mut self, tag: &str, profile: Profile) -> Self {
        self.profiles.insert(tag.to_string(), profile);
        self
    }

    pub fn profile(&self, tag: &str) -> Option<&Profile> {
        self.profiles.get(tag).or_else(|| self.profiles.get(WILDCARD_TAG))
    }
}
