//! Support-function geometry of convex bodies and numerical checks of K-density.
//!
//! Bodies are described by their support functions ([`geometry::ConvexBody`]); volumes and
//! intersection volumes come from [`measure`]; the small- and large-r behaviour of
//! `V(G ∩ (x + rK))` is fitted in [`asymptotics`]; [`analysis`] holds the identity checks.

pub mod analysis;
pub mod asymptotics;
pub mod config;
pub mod error;
pub mod geometry;
pub mod measure;
pub mod oracles;
pub mod runner;

pub use error::{Error, Result};
pub use geometry::{ConvexBody, Direction};
