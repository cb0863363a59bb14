//! Pairing-friendly curves and bilinear group arithmetic.
//!
//! [`generate_curve`] searches the Barreto-Naehrig family for a 128-bit
//! curve from a seed. The search is done with plain big-integer arithmetic
//! and works for any seed, but group operations ([`GroupElement`],
//! [`pair`], ...) are only implemented for the curve produced by
//! [`DEFAULT_CURVE_SEED`], which is the well-known BN254 parameterization.
//!
//! None of the arithmetic is constant time.

mod arith;
mod curve;
mod group;
pub mod instrument;
mod prime;

pub(crate) use curve::{parse_prefixed_hex, to_prefixed_hex};
pub use curve::{
    generate_curve, CurveDescription, CurveFamily, CurveParams, DEFAULT_CURVE_SEED, SUPPORTED_SECURITY_BITS,
};
pub use group::{
    group_add, group_neg, hash_to_scalar, pair, random_scalar, scalar_mul, Group, GroupElement,
    Scalar, G1_ENCODED_LEN, G2_ENCODED_LEN, GT_ENCODED_LEN, SCALAR_LEN,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PairingError {
    #[error("unsupported security level: {0} bits (only 128 is supported)")]
    UnsupportedSecurityLevel(u32),
    #[error("operands are in the wrong group: expected {expected}, got {got}")]
    WrongGroup { expected: String, got: String },
    #[error("invalid {group} encoding: {reason}")]
    InvalidEncoding { group: Group, reason: String },
    #[error("invalid scalar encoding: {0}")]
    InvalidScalar(String),
    #[error("invalid curve parameters: {0}")]
    InvalidCurve(String),
    #[error("group arithmetic is not available on this curve (u = {0})")]
    UnsupportedCurve(String),
}
