//! Stochastic billiards with random reflections on bounded domains.

pub mod billiard;
pub mod chords;
pub mod experiment;
pub mod geometry;
pub mod kernel;
pub mod quadrature;
pub mod reflection;
pub mod rng;
pub mod stats;
pub mod vector;
pub mod walk;

pub use geometry::{BoundaryPoint, Domain, GeometryError, HitResult, BUILTIN_DOMAINS};
pub use vector::{Point, UnitVector, Vector};
