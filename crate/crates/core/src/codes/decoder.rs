//! Two-phase decoder for [`ChunkedCode`] over the erasure channel.
//!
//! Bob counts the erasures `lambda_t` he saw up to each chunk end `t`, and
//! uses `lambda_t - q t` as his estimate of the adversarial erasures that did
//! not coincide with random ones. The decoding point `t*` is the first chunk
//! end where
//!
//! ```text
//! lambda_t - q t            <= t (1-q)(1-theta) - R n          (list decoding)
//! n p (1-q) - (lambda_t - q t) <= (n - t)(1-q)(1-theta) / 2     (list refinement)
//! ```
//!
//! Phase 1 lists every message with a left mega sub-codeword consistent with
//! `y[..t*]`; phase 2 keeps those with a right mega sub-codeword consistent
//! with `y[t*..]`. Exactly one survivor decodes.

use serde::Serialize;

use super::chunked::ChunkedCode;
use super::codebook::Codebook;
use super::hamming;
use crate::channel::Symbol;
use crate::error::{check_range, Error, Result};

/// Slack absorbed when comparing the two decoding-point inequalities.
const CONDITION_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecoderConfig {
    /// Estimation slack `delta`; defaults to `(1-q) theta^2 / 16`. It enters
    /// the analysis, not the decision rule.
    pub delta: f64,
    pub theta: f64,
    pub q: f64,
    pub p: f64,
    pub rate: f64,
    pub n: usize,
    pub chunk_ends: Vec<usize>,
}

impl DecoderConfig {
    pub fn for_code(code: &ChunkedCode, p: f64, q: f64) -> Result<Self> {
        check_range("p", p, 0.0, 1.0, "[0, 1]")?;
        check_range("q", q, 0.0, 1.0, "[0, 1]")?;
        let theta = code.theta();
        let cfg = DecoderConfig {
            delta: (1.0 - q) * theta * theta / 16.0,
            theta,
            q,
            p,
            rate: code.rate(),
            n: code.n(),
            chunk_ends: code.chunk_ends(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0) {
            return Err(Error::config("delta must be positive"));
        }
        if self.chunk_ends.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config("chunk ends must be strictly increasing"));
        }
        if self.chunk_ends.last().is_some_and(|&t| t >= self.n) {
            return Err(Error::config("chunk ends must lie below n"));
        }
        Ok(())
    }

    /// Slack of the list-decoding and list-refinement inequalities at `t`
    /// given `lambda` total erasures up to `t`. Non-negative means satisfied.
    pub fn slacks(&self, lambda: f64, t: usize) -> (f64, f64) {
        let (t, n) = (t as f64, self.n as f64);
        let lambda_hat = lambda - self.q * t;
        let keep = (1.0 - self.q) * (1.0 - self.theta);
        let list = t * keep - self.rate * n - lambda_hat;
        let refine = (n - t) * keep / 2.0 - (n * self.p * (1.0 - self.q) - lambda_hat);
        (list, refine)
    }
}

/// Whether the two decoding-point inequalities hold at `t`.
pub fn decoding_conditions(lambda: usize, t: usize, cfg: &DecoderConfig) -> (bool, bool) {
    let (a, b) = cfg.slacks(lambda as f64, t);
    (a >= -CONDITION_SLACK, b >= -CONDITION_SLACK)
}

/// Erasure counts `lambda_t` at each `t` in `ends`.
pub fn erasure_counts(y: &[Symbol], ends: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(ends.len());
    let (mut count, mut pos) = (0, 0);
    for &t in ends {
        count += y[pos..t].iter().filter(|s| s.is_erasure()).count();
        pos = t;
        out.push(count);
    }
    out
}

/// Smallest chunk end satisfying both inequalities; `erasure_counts[i]` is
/// `lambda` at `cfg.chunk_ends[i]`.
pub fn choose_decoding_point(erasure_counts: &[usize], cfg: &DecoderConfig) -> Option<usize> {
    cfg.chunk_ends
        .iter()
        .zip(erasure_counts)
        .find(|&(&t, &lambda)| {
            let (list, refine) = decoding_conditions(lambda, t, cfg);
            list && refine
        })
        .map(|(&t, _)| t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DecodeResult {
    Decoded(usize),
    /// The refined list did not contain exactly one message.
    ListAmbiguous,
    NoValidDecodingPoint,
}

impl DecodeResult {
    pub fn decoded(self) -> Option<usize> {
        match self {
            DecodeResult::Decoded(u) => Some(u),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DecodeOutcome {
    pub result: DecodeResult,
    pub t_star: Option<usize>,
    /// Phase-1 list.
    pub list: Vec<usize>,
    /// Survivors of phase 2.
    pub refined: Vec<usize>,
}

impl DecodeOutcome {
    pub fn list_size(&self) -> usize {
        self.list.len()
    }
}

/// Messages with some left mega sub-codeword (first `chunks` chunks)
/// consistent with `y1` on every unerased position.
pub fn list_decode(y1: &[Symbol], code: &ChunkedCode, chunks: usize) -> Vec<usize> {
    (0..code.num_messages())
        .filter(|&u| code.span_consistent(0..chunks, u, y1))
        .collect()
}

/// Keeps the messages of `list` with some right mega sub-codeword (chunks
/// `first_chunk..`) consistent with `y2`.
pub fn refine_list(
    list: &[usize],
    y2: &[Symbol],
    code: &ChunkedCode,
    first_chunk: usize,
) -> Vec<usize> {
    list.iter()
        .copied()
        .filter(|&u| code.span_consistent(first_chunk..code.num_chunks(), u, y2))
        .collect()
}

pub fn two_phase_decode(
    y: &[Symbol],
    code: &ChunkedCode,
    cfg: &DecoderConfig,
) -> Result<DecodeOutcome> {
    if y.len() != code.n() || cfg.n != code.n() {
        return Err(Error::config(format!(
            "received word has length {}, code {} and config {}",
            y.len(),
            code.n(),
            cfg.n
        )));
    }
    if let Some(&bad) = cfg
        .chunk_ends
        .iter()
        .find(|&&t| t % code.chunk_len() != 0 || t >= code.n())
    {
        return Err(Error::config(format!("{bad} is not a chunk end")));
    }

    let lambdas = erasure_counts(y, &cfg.chunk_ends);
    let Some(t) = choose_decoding_point(&lambdas, cfg) else {
        return Ok(DecodeOutcome {
            result: DecodeResult::NoValidDecodingPoint,
            t_star: None,
            list: Vec::new(),
            refined: Vec::new(),
        });
    };

    let k = t / code.chunk_len();
    let list = list_decode(&y[..t], code, k);
    let refined = refine_list(&list, &y[t..], code, k);
    let result = match refined[..] {
        [u] => DecodeResult::Decoded(u),
        _ => DecodeResult::ListAmbiguous,
    };
    Ok(DecodeOutcome {
        result,
        t_star: Some(t),
        list,
        refined,
    })
}

/// Whether the right mega sub-codeword of `(u_star, keys_right)` w.r.t.
/// chunk end `t` is at distance at least `(n - t)(1/2 - 3 theta / 8)` from
/// every right mega sub-codeword of every other message in `list`.
pub fn distance_condition_check(
    code: &ChunkedCode,
    t: usize,
    u_star: usize,
    keys_right: &[usize],
    list: &[usize],
) -> Result<bool> {
    if !code.chunk_ends().contains(&t) {
        return Err(Error::config(format!("{t} is not a chunk end")));
    }
    let k = t / code.chunk_len();
    let x2 = code.encode_suffix(u_star, k, keys_right)?;
    let threshold = (code.n() - t) as f64 * (0.5 - 3.0 * code.theta() / 8.0);
    for &u in list.iter().filter(|&&u| u != u_star) {
        for seq in code.key_sequences(code.num_chunks() - k) {
            let w = code.encode_suffix(u, k, &seq)?;
            if (hamming(&x2, &w) as f64) < threshold {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Minimum-distance decoding over the full codebook, ignoring erased
/// positions. Ties between distinct messages are ambiguous. Used as the
/// verdict for bit-flip trials.
pub fn nearest_message_decode(y: &[Symbol], code: &dyn Codebook) -> DecodeResult {
    let mut best = usize::MAX;
    let mut winners: Vec<usize> = Vec::new();
    for e in code.entries() {
        let d = y
            .iter()
            .zip(&e.bits)
            .filter(|(s, &b)| !s.agrees_with(b))
            .count();
        if d < best {
            best = d;
            winners.clear();
        }
        if d == best && !winners.contains(&e.message) {
            winners.push(e.message);
        }
    }
    match winners[..] {
        [u] => DecodeResult::Decoded(u),
        _ => DecodeResult::ListAmbiguous,
    }
}
