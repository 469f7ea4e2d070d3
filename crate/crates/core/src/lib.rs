//! Operator models and verification suites for monotone products of
//! algebras with designated state pairs.
//!
//! The crate provides:
//!
//! * moment evaluators for monotone and conditionally monotone families,
//!   and for monotone products of bimodule maps (`engine`);
//! * explicit operator models on chain-indexed spaces: the scalar two-state
//!   model (`fock`), the base-valued monotone module (`bimodule`), the
//!   free-chain module with its order-filtered actions (`freemod`),
//!   factor-indexed conditional expectations and induced representations
//!   (`induced`);
//! * embedding and transfer constructions: norm equality across nested
//!   inclusions (`embedding`) and completely positive transfer between
//!   matched product families (`cptransfer`);
//! * complete-positivity certificates and map products (`cp`);
//! * scenario files, deterministic verification suites and reports
//!   (`scenario`, `suites`, `report`).

pub mod algebra;
pub mod bimodule;
pub mod cp;
pub mod embedding;
pub mod engine;
pub mod error;
pub mod fock;
pub mod freemod;
pub mod gns;
pub mod induced;
pub mod linalg;
pub mod space;
pub mod transfer;
pub mod word;

pub use error::{Error, Result};
