//! Reference measures and monotone triangular (Knothe-Rosenblatt) maps.

mod bernstein;
mod io;
mod map;
mod reference;
mod restrict;
mod sampling;

pub use bernstein::{bernstein_basis, bernstein_eval, BernsteinComponent};
pub use io::{load_map, ComponentSpec, MapFile, MAP_SCHEMA_VERSION};
pub use map::{AffineComponent, Component, TriangularMap, DEFAULT_TOL, MAX_BISECTION_ITERS};
pub use reference::{Interval, ReferenceKind, ReferenceMeasure};
pub use restrict::{good_set_mass, restrict_reference, AxisBox, GoodSetSpec, Predicate};
pub use sampling::{conditional_sample, pushforward_sample, rejection_sample, FnMap, PointMap};
