//! Infinitesimal earthquakes of the hyperbolic plane.
//!
//! A vector field on the circle is encoded by its support function. Its lower
//! and upper convex envelopes over the Klein disk are polyhedral surfaces in
//! Half-pipe space; the dual Minkowski vectors of their support planes are
//! Killing fields, which assemble into the left and right infinitesimal
//! earthquakes extending the field. The bending of each envelope is the
//! earthquake lamination.

pub mod earthquake;
pub mod envelope;
pub mod field;
pub mod halfpipe;
pub mod lamination;
pub mod mink;
pub mod norms;
pub mod oracle;
