//! Run configuration document.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::approximation::QuadratureOrders;
use crate::correction::Backend;
use crate::mesh::{generators, Mesh, MeshError};
use crate::physics::{FluxKind, Law};
use crate::residual::{BoundaryData, Profile, ProfileSpec, SchemeOptions, Variant, WILDCARD_TAG};
use crate::solver::{Integrator, SolverConfig};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("malformed config document: {0}")]
    Malformed(String),
    #[error("cannot read config file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LawSpec {
    /// `linear_advection` or `burgers`.
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub velocity: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    /// `square-triangles`, `square-quads` or `honeycomb`.
    pub generator: String,
    /// Cells per side, or hexagon rings.
    pub n: usize,
    /// Hexagon side length.
    #[serde(default)]
    pub size: Option<f64>,
    /// Interior vertex perturbation relative to the shortest incident edge.
    #[serde(default)]
    pub perturb: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MeshSource {
    Path(String),
    Generator(GeneratorSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSpec {
    #[serde(default)]
    pub volume: Option<usize>,
    #[serde(default)]
    pub edge: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSpec {
    pub cfl: f64,
    pub max_iters: usize,
    pub residual_tol: f64,
    pub integrator: String,
    pub stagnation_window: usize,
    pub stagnation_tol: f64,
}

impl Default for SolverSpec {
    fn default() -> Self {
        let d = SolverConfig::default();
        SolverSpec {
            cfl: d.cfl,
            max_iters: d.max_iters,
            residual_tol: d.residual_tol,
            integrator: d.integrator.to_string(),
            stagnation_window: d.stagnation_window,
            stagnation_tol: d.stagnation_tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySpec {
    pub draws: usize,
    pub amplitude: f64,
}

impl Default for VerifySpec {
    fn default() -> Self {
        VerifySpec { draws: 200, amplitude: 2.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub case: String,
    pub mesh: MeshSource,
    pub law: LawSpec,
    #[serde(default = "default_degree")]
    pub degree: usize,
    #[serde(default = "default_variant")]
    pub variant: String,
    #[serde(default = "default_flux")]
    pub flux: String,
    #[serde(default = "default_backend")]
    pub backend: String,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
    #[serde(default)]
    pub solver: SolverSpec,
    /// Tag → profile; `"*"` covers unlisted tags.
    pub boundary: BTreeMap<String, ProfileSpec>,
    #[serde(default)]
    pub exact: Option<ProfileSpec>,
    /// Defaults to `exact`, then to zero.
    #[serde(default)]
    pub initial: Option<ProfileSpec>,
    /// Seeded uniform perturbation added to the initial state.
    #[serde(default)]
    pub initial_noise: f64,
    /// Number of meshes in the refinement study, the base mesh included.
    #[serde(default = "default_levels")]
    pub levels: usize,
    #[serde(default)]
    pub st_coefficient: Option<f64>,
    #[serde(default)]
    pub verify: VerifySpec,
    /// Directory that relative mesh paths resolve against.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

fn default_degree() -> usize {
    1
}
fn default_variant() -> String {
    "fr".to_string()
}
fn default_flux() -> String {
    "rusanov".to_string()
}
fn default_backend() -> String {
    "auto".to_string()
}
fn default_levels() -> usize {
    1
}

pub const MAX_LEVELS: usize = 8;
pub const MAX_DEGREE: usize = 6;
pub const MAX_GENERATOR_CELLS: usize = 256;

/// Fully resolved run parameters.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub law: Law,
    pub options: SchemeOptions,
    pub solver: SolverConfig,
    pub boundary: BoundaryData,
    pub exact: Option<Profile>,
    pub initial: Option<Profile>,
}

impl RunConfig {
    pub fn from_json_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| ConfigError::Malformed(e.to_string()))?;
        cfg.resolve()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        let mut cfg = Self::from_json_str(&text)?;
        cfg.base_dir = Some(path.parent().map(Path::to_path_buf).unwrap_or_default());
        Ok(cfg)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Parses every name and profile and checks the numeric ranges.
    pub fn resolve(&self) -> Result<Resolved, ConfigError> {
        let law = match (self.law.name.as_str(), self.law.velocity) {
            ("linear_advection" | "advection", Some(a)) if a.iter().all(|x| x.is_finite()) => Law::linear_advection(a),
            ("linear_advection" | "advection", _) => return Err(invalid("linear_advection needs a finite velocity [ax, ay]")),
            ("burgers", None) => Law::burgers_2d(),
            ("burgers", Some(_)) => return Err(invalid("burgers takes no velocity")),
            (other, _) => return Err(invalid(format!("unknown law {other:?} (expected linear_advection or burgers)"))),
        };
        if self.degree == 0 || self.degree > MAX_DEGREE {
            return Err(invalid(format!("degree must lie in 1..={MAX_DEGREE}, got {}", self.degree)));
        }
        let variant: Variant = self.variant.parse().map_err(|e: crate::residual::SchemeError| invalid(e.to_string()))?;
        let flux: FluxKind = self.flux.parse().map_err(|e: crate::physics::UnsupportedFlux| invalid(e.to_string()))?;
        let backend: Backend = self.backend.parse().map_err(|e: crate::correction::CorrectionError| invalid(e.to_string()))?;
        for order in [self.quadrature.volume, self.quadrature.edge].into_iter().flatten() {
            if order == 0 || order > 40 {
                return Err(invalid(format!("quadrature order must lie in 1..=40, got {order}")));
            }
        }
        let mut options = SchemeOptions {
            degree: self.degree,
            flux,
            backend,
            orders: QuadratureOrders { volume: self.quadrature.volume, edge: self.quadrature.edge },
            ..Default::default()
        };
        if let Some(c) = self.st_coefficient {
            if !(c >= 0.0 && c.is_finite()) {
                return Err(invalid(format!("st_coefficient must be finite and non-negative, got {c}")));
            }
            options.st_coefficient = c;
        }
        let integrator: Integrator = self.solver.integrator.parse().map_err(invalid)?;
        let solver = SolverConfig {
            variant,
            cfl: self.solver.cfl,
            max_iters: self.solver.max_iters,
            residual_tol: self.solver.residual_tol,
            integrator,
            stagnation_window: self.solver.stagnation_window,
            stagnation_tol: self.solver.stagnation_tol,
        };
        solver.validate().map_err(|e| invalid(e.to_string()))?;
        if self.boundary.is_empty() {
            return Err(invalid("boundary needs at least one profile"));
        }
        let mut boundary = BoundaryData::default();
        for (tag, spec) in &self.boundary {
            let p = Profile::from_spec(spec).map_err(|e| invalid(format!("boundary {tag:?}: {e}")))?;
            boundary = boundary.with(tag, p);
        }
        let profile = |name: &str, s: &Option<ProfileSpec>| {
            s.as_ref()
                .map(|s| Profile::from_spec(s).map_err(|e| invalid(format!("{name}: {e}"))))
                .transpose()
        };
        let exact = profile("exact", &self.exact)?;
        let initial = profile("initial", &self.initial)?;
        if !(self.initial_noise >= 0.0 && self.initial_noise.is_finite()) {
            return Err(invalid("initial_noise must be finite and non-negative"));
        }
        if self.levels == 0 || self.levels > MAX_LEVELS {
            return Err(invalid(format!("levels must lie in 1..={MAX_LEVELS}, got {}", self.levels)));
        }
        if self.verify.draws == 0 || !(self.verify.amplitude > 0.0 && self.verify.amplitude.is_finite()) {
            return Err(invalid("verify needs draws > 0 and a positive finite amplitude"));
        }
        if let MeshSource::Generator(g) = &self.mesh {
            if g.n == 0 || g.n > MAX_GENERATOR_CELLS {
                return Err(invalid(format!("generator n must lie in 1..={MAX_GENERATOR_CELLS}")));
            }
            if !(g.perturb >= 0.0 && g.perturb < 0.5) {
                return Err(invalid("generator perturb must lie in [0, 0.5)"));
            }
            if g.size.is_some_and(|s| !(s > 0.0 && s.is_finite())) {
                return Err(invalid("generator size must be positive"));
            }
        }
        Ok(Resolved { law, options, solver, boundary, exact, initial })
    }

    pub fn mesh_path(&self) -> Option<PathBuf> {
        match &self.mesh {
            MeshSource::Path(p) => {
                let p = PathBuf::from(p);
                Some(match &self.base_dir {
                    Some(dir) if p.is_relative() => dir.join(p),
                    _ => p,
                })
            }
            MeshSource::Generator(_) => None,
        }
    }

    /// The base mesh of the study.
    pub fn build_mesh(&self) -> Result<Mesh, ConfigError> {
        let mesh = match &self.mesh {
            MeshSource::Path(_) => Mesh::load(self.mesh_path().expect("path source"))?,
            MeshSource::Generator(g) => {
                let m = match g.generator.as_str() {
                    "square-triangles" => generators::unit_square_triangles(g.n),
                    "square-quads" => generators::unit_square_quads(g.n),
                    "honeycomb" => generators::honeycomb(g.n, g.size.unwrap_or(1.0)),
                    other => {
                        return Err(invalid(format!(
                            "unknown generator {other:?} (expected square-triangles, square-quads or honeycomb)"
                        )))
                    }
                };
                if g.perturb > 0.0 {
                    generators::perturb_interior(&m, g.perturb, g.seed)
                } else {
                    m
                }
            }
        };
        Ok(mesh)
    }
}

/// Wildcard-only boundary data from one profile.
pub fn uniform_boundary(spec: ProfileSpec) -> BTreeMap<String, ProfileSpec> {
    BTreeMap::from([(WILDCARD_TAG.to_string(), spec)])
}
