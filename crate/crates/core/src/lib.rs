//! Flux reconstruction written as residual distribution on 2D polygonal
//! meshes, with entropy-conservative corrections and discrete entropy
//! diagnostics.

pub mod approximation;
pub mod geometry;
pub mod mesh;
pub mod physics;
pub mod correction;
pub mod entropy;
pub mod residual;
pub mod verify;
pub mod solver;
pub mod config;
pub mod study;
