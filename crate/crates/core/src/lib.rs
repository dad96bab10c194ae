//! Simulation and analysis toolkit for binary channels whose noise is a mix
//! of a memoryless random channel (BEC or BSC) and an online adversary that
//! sees the transmitted prefix and snoops on the receiver's output.
//!
//! The crate is organised bottom-up:
//!
//! - [`capacity`]: closed-form capacities, the bit-flip upper bound (numeric
//!   and piecewise closed form) and the breakpoint root solver.
//! - [`channel`]: single channel steps and the causal transmission loop.
//! - [`adversary`]: passive, i.i.d. and snoop-then-push strategies.
//! - [`codes`]: the chunked stochastic code, its two-phase decoder, and the
//!   ARQ scheme used when the transmitter also has feedback.
//! - [`sim`]: seeded Monte Carlo trials, Wilson error estimates and sweeps.

pub mod adversary;
pub mod capacity;
pub mod channel;
pub mod codes;
pub mod error;
pub mod rng;
pub mod sim;

pub use capacity::{FlipBoundBreakdown, Rate, Regime};
pub use channel::{ChannelKind, ChannelParams, Symbol, Transcript};
pub use error::{Error, Result};
