//! Solitary water waves over sheared currents: wave construction, flow-field
//! reconstruction, particle kinematics, and drift-pattern classification.
//!
//! The crate builds small-amplitude solitary waves for rotational flows whose
//! vorticity is everywhere non-positive, reconstructs the velocity field under
//! the wave, traces fluid particles as the wave passes, and classifies the net
//! drift each particle experiences (forward humps, backward loops, straight
//! bed paths). A verification layer checks the qualitative structure of the
//! computed flow against the monotonicity and sign properties the model
//! guarantees.

pub mod classify;
pub mod error;
pub mod field;
pub mod kinematics;
pub mod laminar;
pub mod num;
pub mod par;
pub mod scenario;
pub mod verify;
pub mod vorticity;
pub mod wave;

pub use error::{Error, Result};
