//! Channel steps and the causal transmission loop.
//!
//! At step `k` (1-based) the loop asks the encoder for `x_k`, shows the
//! adversary exactly `(x_1..x_k, y_1..y_{k-1})`, applies the adversary's
//! action subject to the budget, and only then draws `y_k` from the random
//! channel. The adversary never sees a future input or the current output.

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::adversary::{Adversary, SideInfo};
use crate::error::{check_range, Error, Result};
use crate::rng::TrialStreams;

/// Channel output symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Symbol {
    Zero,
    One,
    Erasure,
}

impl Symbol {
    #[inline]
    pub fn from_bit(bit: bool) -> Self {
        if bit {
            Symbol::One
        } else {
            Symbol::Zero
        }
    }

    /// The carried bit, or `None` for an erasure.
    #[inline]
    pub fn bit(self) -> Option<bool> {
        match self {
            Symbol::Zero => Some(false),
            Symbol::One => Some(true),
            Symbol::Erasure => None,
        }
    }

    #[inline]
    pub fn is_erasure(self) -> bool {
        self == Symbol::Erasure
    }

    /// True unless the symbol is unerased and differs from `bit`.
    #[inline]
    pub fn agrees_with(self, bit: bool) -> bool {
        self.bit().is_none_or(|b| b == bit)
    }

    pub fn as_char(self) -> char {
        match self {
            Symbol::Zero => '0',
            Symbol::One => '1',
            Symbol::Erasure => '-',
        }
    }
}

/// Renders a symbol sequence as `0`, `1`, `-` characters.
pub fn render(symbols: &[Symbol]) -> String {
    symbols.iter().map(|s| s.as_char()).collect()
}

/// Renders a bit sequence as `0`/`1` characters.
pub fn render_bits(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

/// `true` iff every unerased symbol of `y` agrees with the matching bit of `x`.
pub fn consistent(y: &[Symbol], x: &[bool]) -> bool {
    y.len() == x.len() && y.iter().zip(x).all(|(s, &b)| s.agrees_with(b))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    /// BEC(q) with adversarial erasures.
    Erasure,
    /// BSC(q) with adversarial bit flips.
    Flip,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub kind: ChannelKind,
    pub q: f64,
}

impl ChannelParams {
    pub fn new(kind: ChannelKind, q: f64) -> Result<Self> {
        let params = ChannelParams { kind, q };
        params.validate()?;
        Ok(params)
    }

    pub fn erasure(q: f64) -> Result<Self> {
        Self::new(ChannelKind::Erasure, q)
    }

    pub fn flip(q: f64) -> Result<Self> {
        Self::new(ChannelKind::Flip, q)
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            ChannelKind::Erasure => check_range("q", self.q, 0.0, 1.0, "[0, 1]"),
            ChannelKind::Flip => check_range("q", self.q, 0.0, 0.5, "[0, 1/2]"),
        }
    }

    /// One channel use with adversary action `act` (erase / flip).
    pub fn step<R: Rng + ?Sized>(&self, x: bool, act: bool, rng: &mut R) -> Symbol {
        match self.kind {
            ChannelKind::Erasure => bec_step(x, act, self.q, rng),
            ChannelKind::Flip => Symbol::from_bit(bsc_step(x, act, self.q, rng)),
        }
    }
}

/// Adversary budget `floor(p * n)`.
///
/// A small guard absorbs representation error so that e.g. `0.29 * 100`
/// yields 29.
pub fn budget(p: f64, n: usize) -> usize {
    let raw = p * n as f64;
    (raw + 1e-9 * raw.abs().max(1.0)).floor().max(0.0) as usize
}

/// BEC step: an adversarial erasure always wins; otherwise `x` is erased
/// with probability `q`.
pub fn bec_step<R: Rng + ?Sized>(x: bool, erase: bool, q: f64, rng: &mut R) -> Symbol {
    if erase || rng.gen_bool(q) {
        Symbol::Erasure
    } else {
        Symbol::from_bit(x)
    }
}

/// BSC step: `x xor a xor Ber(q)`.
pub fn bsc_step<R: Rng + ?Sized>(x: bool, a: bool, q: f64, rng: &mut R) -> bool {
    x ^ a ^ rng.gen_bool(q)
}

/// Produces channel inputs one step at a time.
pub trait StepEncoder {
    /// Input bit for step `k` (1-based). `feedback` holds `y_1..y_{k-1}` when
    /// the transmitter has feedback and is `None` otherwise. Returning `None`
    /// signals the encoder has nothing more to send.
    fn next_bit(
        &mut self,
        k: usize,
        feedback: Option<&[Symbol]>,
        rng: &mut dyn RngCore,
    ) -> Option<bool>;
}

/// Open-loop encoder that replays a fixed codeword.
#[derive(Debug, Clone)]
pub struct CodewordEncoder {
    bits: Vec<bool>,
}

impl CodewordEncoder {
    pub fn new(bits: Vec<bool>) -> Self {
        CodewordEncoder { bits }
    }
}

impl StepEncoder for CodewordEncoder {
    fn next_bit(
        &mut self,
        k: usize,
        _feedback: Option<&[Symbol]>,
        _rng: &mut dyn RngCore,
    ) -> Option<bool> {
        self.bits.get(k - 1).copied()
    }
}

/// Full record of one transmission.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Transcript {
    pub n: usize,
    pub x: Vec<bool>,
    /// Accepted adversary actions (erase flags or flip bits).
    pub a: Vec<bool>,
    pub y: Vec<Symbol>,
    pub budget: usize,
    pub actions_used: usize,
    /// Action requests refused because the budget was spent.
    pub violation_attempts: usize,
}

impl Transcript {
    pub fn with_capacity(n: usize, budget: usize) -> Self {
        Transcript {
            n,
            x: Vec::with_capacity(n),
            a: Vec::with_capacity(n),
            y: Vec::with_capacity(n),
            budget,
            actions_used: 0,
            violation_attempts: 0,
        }
    }

    pub fn budget_violated(&self) -> bool {
        self.violation_attempts > 0
    }

    pub fn weight(&self) -> usize {
        self.a.iter().filter(|&&b| b).count()
    }

    /// Checks the structural invariants every transcript must satisfy.
    pub fn check_invariants(&self, kind: ChannelKind) -> std::result::Result<(), String> {
        if self.x.len() != self.n || self.a.len() != self.n || self.y.len() != self.n {
            return Err(format!(
                "length mismatch: n={} x={} a={} y={}",
                self.n,
                self.x.len(),
                self.a.len(),
                self.y.len()
            ));
        }
        let w = self.weight();
        if w != self.actions_used {
            return Err(format!("weight {w} != actions_used {}", self.actions_used));
        }
        if w > self.budget {
            return Err(format!("weight {w} exceeds budget {}", self.budget));
        }
        for (k, (&act, &y)) in self.a.iter().zip(&self.y).enumerate() {
            match kind {
                ChannelKind::Erasure if act && y != Symbol::Erasure => {
                    return Err(format!(
                        "step {}: adversarial erasure not delivered as erasure",
                        k + 1
                    ));
                }
                ChannelKind::Flip if y == Symbol::Erasure => {
                    return Err(format!("step {}: erasure on a flip channel", k + 1));
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Records one step, clamping the action against the budget.
    pub(crate) fn push_step(&mut self, x: bool, requested: bool, limit: usize) -> bool {
        let act = if requested && self.actions_used >= limit {
            self.violation_attempts += 1;
            false
        } else {
            requested
        };
        if act {
            self.actions_used += 1;
        }
        self.x.push(x);
        self.a.push(act);
        act
    }
}

/// Runs `n` channel uses against `adversary` with budget `floor(p * n)`.
///
/// With `transmitter_feedback` the encoder sees `y_1..y_{k-1}`; otherwise it
/// runs open loop.
pub fn run_transmission(
    encoder: &mut dyn StepEncoder,
    adversary: &mut dyn Adversary,
    params: ChannelParams,
    p: f64,
    n: usize,
    transmitter_feedback: bool,
    streams: &mut TrialStreams,
) -> Result<Transcript> {
    params.validate()?;
    check_range("p", p, 0.0, 1.0, "[0, 1]")?;
    let limit = budget(p, n);
    let mut t = Transcript::with_capacity(n, limit);

    for k in 1..=n {
        let feedback = transmitter_feedback.then_some(&t.y[..]);
        let x = encoder
            .next_bit(k, feedback, &mut streams.encoder)
            .ok_or(Error::EncoderExhausted { step: k, n })?;
        t.x.push(x);
        let view = SideInfo {
            step: k,
            n,
            x_prefix: &t.x,
            y_prefix: &t.y,
            budget: limit,
            used: t.actions_used,
        };
        let requested = adversary.act(&view, &mut streams.adversary);
        t.x.pop();
        let act = t.push_step(x, requested, limit);
        t.y.push(params.step(x, act, &mut streams.channel));
    }
    Ok(t)
}
