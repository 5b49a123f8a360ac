//! Broadcast processes on d-ary trees as hierarchical languages.

pub mod ar;
pub mod broadcast;
pub mod channel;
pub mod corpus;
pub mod error;
pub mod geometry;
pub mod matrix;
pub mod posterior;
pub mod reasoning;
pub mod rng;
pub mod scalar;
pub mod stats;
pub mod sweep;
pub mod theory;
pub mod tokenizer;
pub mod validity;

pub use error::{Error, Result};

pub type MomentTable64 = theory::MomentTable<f64>;
pub type ExactMomentTable = theory::MomentTable<num_rational::Rational64>;
pub type HeightDist64 = geometry::HeightDistribution<f64>;
pub type ExactHeightDist = geometry::HeightDistribution<num_rational::Rational64>;
