#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Decay-norm operator algebra on lattices, normal forms and Sternberg
//! conjugacies for coupled map lattices.
//!
//! The state space is `ℓ∞(Z^m, R^n)`, truncated to finite windows
//! `{-L..L}^m`. Linear and multilinear maps carry a decay norm built from a
//! decay function `Γ`, which controls how coupling strength falls off with
//! lattice distance.

pub mod config;
pub mod decay;
pub mod error;
pub mod lattice;
pub mod linear;
pub mod jets;
pub mod multilinear;
pub mod normal_form;
pub mod pipeline;
pub mod spectrum;
pub mod sternberg;
pub mod sylvester;

pub use error::{Error, Result};
