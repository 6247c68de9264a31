//! Rational laminations over mapping schemata, combinatorial tuning and
//! straightening, and the numerical dynamics of parabolic implosion.
//!
//! Combinatorial data is exact: angles are arbitrary-precision rationals.
//! The numerical modules are generic over the float type through
//! [`scalar::Real`]; the aliases at the crate root fix it to `f64`.

pub mod angles;
pub mod dynamics;
pub mod lamination;
pub mod parabolic;
pub mod portrait;
pub mod scalar;
pub mod schema;
pub mod tuning;

pub use angles::{ang, angs, Angle};
pub use lamination::RationalLamination;
pub use schema::{MappingSchema, SchemaAngle, Vertex};
pub use tuning::TuningContext;

pub use scalar::{Real, C64};

pub type SchemaPolynomial = dynamics::SchemaPolynomial<f64>;
pub type RayTrace = dynamics::RayTrace<f64>;
pub type RayOptions = dynamics::RayOptions<f64>;
pub type PeriodicPoint = dynamics::PeriodicPoint<f64>;
pub type QuadraticLike = dynamics::QuadraticLike<f64>;
