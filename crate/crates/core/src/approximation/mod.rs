//! Element-local polynomial spaces and quadrature.

pub mod basis;
mod field;
pub mod quadrature;
mod space;

pub use field::FieldCoeffs;
pub use quadrature::QuadratureRule;
pub use space::{
    default_edge_order, default_volume_order, edge_rules, polynomial_degree, EdgeTable, ElementSpace,
    QuadratureOrders, SpaceError,
};
