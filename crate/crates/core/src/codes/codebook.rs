use std::collections::BTreeSet;
use std::fmt::Debug;

use crate::channel::{consistent, Symbol};
use crate::error::{Error, Result};

/// One codeword of a (possibly stochastic) code.
#[derive(Debug, Clone, PartialEq)]
pub struct CodewordEntry {
    pub message: usize,
    /// Encoder randomness that selected this codeword (empty for
    /// deterministic codes).
    pub keys: Vec<usize>,
    pub bits: Vec<bool>,
    /// `P(u) * Phi(x | u)` with uniform messages.
    pub prior: f64,
}

/// Static description of a code: what an adversary "knows about the code".
pub trait Codebook: Debug + Send + Sync {
    fn block_len(&self) -> usize;

    fn num_messages(&self) -> usize;

    /// `log2(M) / n`.
    fn rate(&self) -> f64 {
        (self.num_messages() as f64).log2() / self.block_len() as f64
    }

    /// Every codeword with its prior mass. Masses sum to 1.
    fn entries(&self) -> Vec<CodewordEntry>;

    /// Messages with at least one codeword agreeing with `y` on every
    /// unerased position. `y` may be shorter than the block (a prefix).
    fn consistent_messages(&self, y: &[Symbol]) -> Vec<usize> {
        let set: BTreeSet<usize> = self
            .entries()
            .into_iter()
            .filter(|e| consistent(y, &e.bits[..y.len()]))
            .map(|e| e.message)
            .collect();
        set.into_iter().collect()
    }
}

/// A code given by an explicit list of `(message, codeword)` pairs. A message
/// listed more than once is encoded uniformly over its codewords.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplicitCode {
    n: usize,
    num_messages: usize,
    codewords: Vec<(usize, Vec<bool>)>,
}

impl ExplicitCode {
    pub fn new(num_messages: usize, codewords: Vec<(usize, Vec<bool>)>) -> Result<Self> {
        let n = codewords
            .first()
            .map(|(_, c)| c.len())
            .ok_or_else(|| Error::config("empty codebook"))?;
        if n == 0 {
            return Err(Error::config("zero-length codewords"));
        }
        if codewords.iter().any(|(_, c)| c.len() != n) {
            return Err(Error::config("codewords differ in length"));
        }
        for m in 0..num_messages {
            if !codewords.iter().any(|(u, _)| *u == m) {
                return Err(Error::config(format!("message {m} has no codeword")));
            }
        }
        if let Some((u, _)) = codewords.iter().find(|(u, _)| *u >= num_messages) {
            return Err(Error::OutOfRange {
                what: "message",
                index: *u,
                limit: num_messages,
            });
        }
        Ok(ExplicitCode {
            n,
            num_messages,
            codewords,
        })
    }

    /// Deterministic code: message `i` maps to `codewords[i]`.
    pub fn deterministic(codewords: Vec<Vec<bool>>) -> Result<Self> {
        let m = codewords.len();
        Self::new(m, codewords.into_iter().enumerate().collect())
    }

    /// Parses codewords written as `0`/`1` strings.
    pub fn from_strs(words: &[&str]) -> Result<Self> {
        let parsed = words
            .iter()
            .map(|w| {
                w.chars()
                    .map(|c| match c {
                        '0' => Ok(false),
                        '1' => Ok(true),
                        other => Err(Error::config(format!("bad bit {other:?}"))),
                    })
                    .collect::<Result<Vec<bool>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::deterministic(parsed)
    }
}

impl Codebook for ExplicitCode {
    fn block_len(&self) -> usize {
        self.n
    }

    fn num_messages(&self) -> usize {
        self.num_messages
    }

    fn entries(&self) -> Vec<CodewordEntry> {
        let mut per_message = vec![0usize; self.num_messages];
        for (u, _) in &self.codewords {
            per_message[*u] += 1;
        }
        let mut seen = vec![0usize; self.num_messages];
        self.codewords
            .iter()
            .map(|(u, bits)| {
                let key = seen[*u];
                seen[*u] += 1;
                CodewordEntry {
                    message: *u,
                    keys: vec![key],
                    bits: bits.clone(),
                    prior: 1.0 / (self.num_messages * per_message[*u]) as f64,
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn repetition_code_entries() {
        let code = ExplicitCode::from_strs(&["000000", "111111"]).unwrap();
        assert_eq!(code.block_len(), 6);
        assert!((code.rate() - 1.0 / 6.0).abs() < 1e-15);
        let e = code.entries();
        assert_eq!(e.len(), 2);
        assert_eq!(e.iter().map(|e| e.prior).sum::<f64>(), 1.0);
    }

    #[test]
    fn stochastic_priors_split_per_message() {
        let code = ExplicitCode::new(
            2,
            vec![
                (0, vec![false, false]),
                (0, vec![false, true]),
                (1, vec![true, true]),
            ],
        )
        .unwrap();
        let e = code.entries();
        assert_eq!(e[0].prior, 0.25);
        assert_eq!(e[1].prior, 0.25);
        assert_eq!(e[2].prior, 0.5);
    }

    #[test]
    fn rejects_malformed() {
        assert!(ExplicitCode::from_strs(&[]).is_err());
        assert!(ExplicitCode::from_strs(&["01", "011"]).is_err());
        assert!(ExplicitCode::from_strs(&["0x"]).is_err());
        assert!(ExplicitCode::new(3, vec![(0, vec![true]), (1, vec![false])]).is_err());
    }

    #[test]
    fn consistent_messages_on_prefix() {
        let code = ExplicitCode::from_strs(&["0011", "0101", "1111"]).unwrap();
        let y = [Symbol::Zero, Symbol::Erasure];
        assert_eq!(code.consistent_messages(&y), vec![0, 1]);
        assert_eq!(code.consistent_messages(&[]), vec![0, 1, 2]);
    }
}
