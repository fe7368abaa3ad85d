//! Joint local-global LDPC coding for time-bin QKD information
//! reconciliation: channel model, balanced modulation, code construction,
//! the joint belief-propagation decoder and a Monte-Carlo FER harness.

pub mod channel;
pub mod code;
pub mod combine;
pub mod decoder;
pub mod error;
pub mod gf2;
pub mod harness;
pub mod modulation;
pub mod wht;

pub use error::{Error, Result};
