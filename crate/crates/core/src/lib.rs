//! Rigid point set registration by simulated gravitation.
//!
//! The reference cloud is a static field of massive particles organized in a
//! Barnes-Hut tree; the template is a swarm moving under that field with
//! velocity damping, projected back onto a rigid motion after every step.

pub mod bench;
pub mod bhtree;
pub mod dynamics;
pub mod error;
pub mod io;
pub mod masses;
pub mod metrics;
pub mod normalize;
pub mod procrustes;
pub mod registration;
pub mod synth;
pub mod types;

pub use error::{FgaError, Result};
pub use registration::{register, register_sequence, RegisterOptions};
pub use types::{default_params, FgaParams, Point, PointCloud, RegistrationResult, RigidTransform};
