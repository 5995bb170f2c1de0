//! Top-two Thompson sampling for contextual top-m ranking and selection.

pub mod history;
pub mod instance;
pub mod kl;
pub mod optimize;
pub mod posterior;
pub mod quadrature;
pub mod ranking;
pub mod rng;
pub mod rates;
pub mod allocation;
pub mod policy;
pub mod harness;
