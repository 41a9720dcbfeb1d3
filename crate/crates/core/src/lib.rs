//! Two-stage OTOC relaxation in averaged random circuits.
//!
//! The crate evolves the averaged spin and cluster Markov models with a
//! tensor-train engine (and a dense oracle for small chains), extracts
//! two-stage decay rates, probes dominant trajectories, and cross-checks
//! against exact Floquet state-vector dynamics.
//!
//! Numerical code is generic over [`Real`] (`f32` or `f64`); the aliases at
//! the bottom of this file fix the scalar to `f64`.

pub mod engine;
pub mod cluster;
pub mod fit;
pub mod floquet;
pub mod otoc;
pub mod error;
pub mod gates;
pub mod scalar;
pub mod schedule;
pub mod trajectory;

pub use error::{Error, Result};
pub use scalar::{LogValue, Real};

pub type ChainTT = engine::ChainStateTT<f64>;
pub type ChainDense = engine::ChainStateDense<f64>;
pub type Params = gates::GateParams<f64>;
pub type Matrix4 = gates::TransitionMatrix4<f64>;
