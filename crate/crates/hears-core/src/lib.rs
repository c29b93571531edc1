//! Energy-aware reward-shaping laboratory.
//!
//! The crate is organized around a shaped-reward transform
//! `r + gamma*Phi(s') - Phi(s) - lambda*E(a)` with a dual potential
//! `Phi = alpha_task*Phi_task + alpha_energy*Phi_energy`, where the energy
//! potential is the negated mechanical energy of the controlled system.
//! Exact tabular solvers act as oracles for every checkable property of the
//! transform; physics environments, two learners, and a tracking MPC provide
//! the experiment substrate.

pub mod energy;
pub mod envs;
pub mod error;
pub mod harness;
pub mod learner;
pub mod linalg;
pub mod mdp;
pub mod mpc;
pub mod shaping;

pub use error::{Error, Result};
