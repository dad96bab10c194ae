//! Codes and decoders.
//!
//! - [`Codebook`] is the static code knowledge an adversary works from: every
//!   codeword together with its message and prior mass.
//! - [`ChunkedCode`] is a stochastic code built from independently keyed
//!   chunks; [`two_phase_decode`] list-decodes a prefix up to a chunk end and
//!   refines the list on the suffix.
//! - [`arq_transmit`] is the repeat-until-received scheme for a transmitter
//!   that sees the receiver's output.

mod arq;
mod chunked;
mod codebook;
mod decoder;

pub use arq::{arq_transmit, default_max_uses, ArqEncoder, ArqOutcome};
pub use chunked::{
    asymptotic_parameters, AsymptoticParams, ChunkedCode, ChunkedParams, CodeDocument,
};
pub use codebook::{Codebook, CodewordEntry, ExplicitCode};
pub use decoder::{
    choose_decoding_point, decoding_conditions, distance_condition_check, erasure_counts,
    list_decode, nearest_message_decode, refine_list, two_phase_decode, DecodeOutcome,
    DecodeResult, DecoderConfig,
};

/// Hamming distance between equal-length bit strings.
pub fn hamming(a: &[bool], b: &[bool]) -> usize {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}
