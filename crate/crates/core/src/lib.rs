//! Khot-Vishnoi nonlocal game, isotropic states and local-polytope linear
//! programs, with the bound chains for super-activation of nonlocality.

pub mod bitlinalg;
pub mod cli;
pub mod error;
pub mod kvgame;
pub mod localpolytope;
pub mod states;
pub mod values;

pub use error::{Error, Result};
