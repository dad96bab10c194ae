//! Adversary strategies.
//!
//! A strategy sees one [`SideInfo`] per channel use and answers with a single
//! action bit (erase, or flip). Code knowledge is held by the strategy itself
//! as a [`CodeKnowledge`] snapshot taken at construction.

use std::sync::Arc;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, RngCore};
use serde::Serialize;

use crate::capacity::star_unchecked;
use crate::channel::{consistent, Symbol, Transcript};
use crate::codes::{Codebook, CodewordEntry};
use crate::error::{check_range, Error, Result};

/// What the adversary is shown at step `step` (1-based).
#[derive(Debug, Clone, Copy)]
pub struct SideInfo<'a> {
    pub step: usize,
    pub n: usize,
    /// `x_1..x_step`
    pub x_prefix: &'a [bool],
    /// `y_1..y_{step-1}`
    pub y_prefix: &'a [Symbol],
    pub budget: usize,
    pub used: usize,
}

impl SideInfo<'_> {
    pub fn remaining(&self) -> usize {
        self.budget.saturating_sub(self.used)
    }

    pub fn current_input(&self) -> bool {
        self.x_prefix[self.step - 1]
    }
}

pub trait Adversary {
    /// Requested action for the current step.
    fn act(&mut self, view: &SideInfo<'_>, rng: &mut dyn RngCore) -> bool;

    fn report(&self) -> Option<&AttackReport> {
        None
    }

    fn name(&self) -> &'static str;
}

impl<A: Adversary + ?Sized> Adversary for Box<A> {
    fn act(&mut self, view: &SideInfo<'_>, rng: &mut dyn RngCore) -> bool {
        (**self).act(view, rng)
    }

    fn report(&self) -> Option<&AttackReport> {
        (**self).report()
    }

    fn name(&self) -> &'static str {
        (**self).name()
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Passive;

impl Adversary for Passive {
    fn act(&mut self, _view: &SideInfo<'_>, _rng: &mut dyn RngCore) -> bool {
        false
    }

    fn name(&self) -> &'static str {
        "passive"
    }
}

/// Acts independently at every step with probability `prob`. It does not
/// watch its budget; over-budget requests are clamped by the channel loop.
#[derive(Debug, Clone, Copy)]
pub struct IidStrategy {
    prob: f64,
}

impl IidStrategy {
    pub fn new(prob: f64) -> Result<Self> {
        check_range("prob", prob, 0.0, 1.0, "[0, 1]")?;
        Ok(IidStrategy { prob })
    }
}

impl Adversary for IidStrategy {
    fn act(&mut self, _view: &SideInfo<'_>, rng: &mut dyn RngCore) -> bool {
        rng.gen_bool(self.prob)
    }

    fn name(&self) -> &'static str {
        "iid"
    }
}

/// Wraps a strategy and checks every view it receives against the causal
/// contract: at step `k`, exactly `k` inputs and `k - 1` outputs, each an
/// extension of the previous view.
#[derive(Debug, Clone)]
pub struct Spy<A> {
    inner: A,
    seen_x: Vec<bool>,
    seen_y: Vec<Symbol>,
    steps: usize,
    violation: Option<String>,
}

impl<A> Spy<A> {
    pub fn new(inner: A) -> Self {
        Spy {
            inner,
            seen_x: Vec::new(),
            seen_y: Vec::new(),
            steps: 0,
            violation: None,
        }
    }

    pub fn inner(&self) -> &A {
        &self.inner
    }

    fn observe(&mut self, view: &SideInfo<'_>) -> std::result::Result<(), String> {
        let k = self.steps + 1;
        if view.step != k {
            return Err(format!("expected step {k}, got {}", view.step));
        }
        if view.x_prefix.len() != k || view.y_prefix.len() != k - 1 {
            return Err(format!(
                "step {k}: saw {} inputs and {} outputs",
                view.x_prefix.len(),
                view.y_prefix.len()
            ));
        }
        if view.x_prefix[..k - 1] != self.seen_x[..]
            || view.y_prefix[..self.seen_y.len()] != self.seen_y[..]
        {
            return Err(format!("step {k}: view rewrites an earlier view"));
        }
        self.seen_x.push(view.x_prefix[k - 1]);
        self.seen_y
            .extend_from_slice(&view.y_prefix[self.seen_y.len()..]);
        self.steps = k;
        Ok(())
    }

    /// Checks the recorded views against the finished transcript: the spy
    /// saw every input and every output except the last one.
    pub fn verify(&self, t: &Transcript) -> std::result::Result<(), String> {
        if let Some(v) = &self.violation {
            return Err(v.clone());
        }
        if self.steps != t.y.len() {
            return Err(format!(
                "spy saw {} steps, transcript has {}",
                self.steps,
                t.y.len()
            ));
        }
        if self.seen_x != t.x {
            return Err("recorded inputs differ from the transcript".into());
        }
        if self.steps > 0 && self.seen_y[..] != t.y[..self.steps - 1] {
            return Err("recorded outputs differ from the transcript".into());
        }
        Ok(())
    }
}

impl<A: Adversary> Adversary for Spy<A> {
    fn act(&mut self, view: &SideInfo<'_>, rng: &mut dyn RngCore) -> bool {
        if self.violation.is_none() {
            if let Err(e) = self.observe(view) {
                self.violation = Some(e);
            }
        }
        self.inner.act(view, rng)
    }

    fn report(&self) -> Option<&AttackReport> {
        self.inner.report()
    }

    fn name(&self) -> &'static str {
        self.inner.name()
    }
}

/// Everything the adversary knows about the code: blocklength, rate and
/// the full codeword distribution.
#[derive(Debug, Clone)]
pub struct CodeKnowledge {
    pub n: usize,
    pub rate: f64,
    pub entries: Arc<[CodewordEntry]>,
}

impl CodeKnowledge {
    pub fn from_code(code: &dyn Codebook) -> Self {
        CodeKnowledge {
            n: code.block_len(),
            rate: code.rate(),
            entries: code.entries().into(),
        }
    }
}

/// How the snooped prefix relates to the transmitted one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Observation {
    /// Unerased symbols are exact.
    Erasure,
    /// Every symbol went through a BSC with this crossover.
    Flip { crossover: f64 },
}

/// Codewords weighted by their posterior given a snooped prefix.
#[derive(Debug, Clone)]
pub struct ConsistentSet {
    pub members: Vec<CodewordEntry>,
    /// Normalised to sum to one.
    pub weights: Vec<f64>,
}

impl ConsistentSet {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> &CodewordEntry {
        let dist = WeightedIndex::new(&self.weights).expect("weights are positive and finite");
        &self.members[dist.sample(rng)]
    }
}

pub fn consistent_set(
    y1: &[Symbol],
    code: &dyn Codebook,
    obs: Observation,
) -> Result<ConsistentSet> {
    consistent_set_from(y1, &code.entries(), obs)
}

/// [`consistent_set`] over pre-enumerated entries.
pub fn consistent_set_from(
    y1: &[Symbol],
    entries: &[CodewordEntry],
    obs: Observation,
) -> Result<ConsistentSet> {
    let l = y1.len();
    if entries.iter().any(|e| e.bits.len() < l) {
        return Err(Error::config("prefix longer than the codewords"));
    }
    let (members, mut weights): (Vec<CodewordEntry>, Vec<f64>) = match obs {
        Observation::Erasure => entries
            .iter()
            .filter(|e| consistent(y1, &e.bits[..l]))
            .map(|e| (e.clone(), e.prior))
            .unzip(),
        Observation::Flip { crossover } => {
            check_range("crossover", crossover, 0.0, 1.0, "[0, 1]")?;
            if y1.iter().any(|s| s.is_erasure()) {
                return Err(Error::config("erasure in a bit-flip observation"));
            }
            let logs: Vec<f64> = entries
                .iter()
                .map(|e| {
                    let d = y1
                        .iter()
                        .zip(&e.bits)
                        .filter(|(s, &b)| !s.agrees_with(b))
                        .count();
                    e.prior.ln() + ln_pow(crossover, d) + ln_pow(1.0 - crossover, l - d)
                })
                .collect();
            let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            entries
                .iter()
                .zip(logs)
                .filter(|(_, lw)| lw.is_finite())
                .map(|(e, lw)| (e.clone(), (lw - top).exp()))
                .unzip()
        }
    };
    let total: f64 = weights.iter().sum();
    if members.is_empty() || !(total > 0.0) {
        return Err(Error::EmptyConsistentSet);
    }
    weights.iter_mut().for_each(|w| *w /= total);
    Ok(ConsistentSet { members, weights })
}

/// `ln(prob^count)` with `0^0 = 1`.
fn ln_pow(prob: f64, count: usize) -> f64 {
    if count == 0 {
        0.0
    } else {
        count as f64 * prob.ln()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    WaitOrBabble,
    Push,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AttackPlan {
    pub phase: Phase,
    /// Length of the first phase.
    pub ell: usize,
    pub u_prime: Option<usize>,
    pub x_prime: Option<Vec<bool>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AttackReport {
    pub plan: AttackPlan,
    /// Size of the consistent set x' was drawn from.
    pub candidates: usize,
    pub budget_at_switch: usize,
    /// Actions taken while babbling.
    pub babble_actions: usize,
    /// Push positions where `x` and `x'` differ.
    pub push_disagreements: usize,
    pub push_actions: usize,
    /// A disagreement position came up after the budget ran out.
    pub exhausted: bool,
}

impl AttackReport {
    fn new(ell: usize) -> Self {
        AttackReport {
            plan: AttackPlan {
                phase: Phase::WaitOrBabble,
                ell,
                u_prime: None,
                x_prime: None,
            },
            candidates: 0,
            budget_at_switch: 0,
            babble_actions: 0,
            push_disagreements: 0,
            push_actions: 0,
            exhausted: false,
        }
    }

    /// The push completed against a codeword of a different message.
    pub fn confusion(&self, sent: usize) -> bool {
        self.plan.phase == Phase::Push
            && self.plan.u_prime.is_some_and(|u| u != sent)
            && !self.exhausted
    }
}

fn phase_length(raw: f64, n: usize) -> usize {
    (raw.round().max(1.0) as usize).min(n - 1)
}

fn check_block(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::config("snoop-then-push attacks need n >= 2"));
    }
    Ok(())
}

/// Erasure attack: stay silent for `ell` steps, sample `x'` from the
/// codewords consistent with what the receiver saw, then erase wherever the
/// transmitted bit differs from `x'`.
#[derive(Debug, Clone)]
pub struct WaitSnoopPush {
    code: CodeKnowledge,
    report: AttackReport,
}

impl WaitSnoopPush {
    /// `ell = round(n (R - eps/2) / (1 - q))`, clamped to `[1, n-1]`.
    pub fn new(code: CodeKnowledge, q: f64, epsilon: f64) -> Result<Self> {
        check_range("q", q, 0.0, 1.0 - f64::EPSILON, "[0, 1)")?;
        check_range("epsilon", epsilon, 0.0, 1.0, "[0, 1]")?;
        check_block(code.n)?;
        let ell = phase_length(
            code.n as f64 * (code.rate - epsilon / 2.0) / (1.0 - q),
            code.n,
        );
        Ok(WaitSnoopPush {
            report: AttackReport::new(ell),
            code,
        })
    }

    pub fn ell(&self) -> usize {
        self.report.plan.ell
    }
}

impl Adversary for WaitSnoopPush {
    fn act(&mut self, view: &SideInfo<'_>, rng: &mut dyn RngCore) -> bool {
        let ell = self.report.plan.ell;
        if view.step <= ell {
            return false;
        }
        if self.report.plan.phase == Phase::WaitOrBabble {
            let set = consistent_set_from(view.y_prefix, &self.code.entries, Observation::Erasure)
                .expect("the transmitted codeword is always consistent");
            let pick = set.sample(rng);
            self.report.candidates = set.len();
            self.report.budget_at_switch = view.remaining();
            self.report.plan.u_prime = Some(pick.message);
            self.report.plan.x_prime = Some(pick.bits.clone());
            self.report.plan.phase = Phase::Push;
        }
        let xp = self
            .report
            .plan
            .x_prime
            .as_ref()
            .expect("set at the switch")[view.step - 1];
        if xp == view.current_input() {
            return false;
        }
        self.report.push_disagreements += 1;
        if view.remaining() == 0 {
            self.report.exhausted = true;
            return false;
        }
        self.report.push_actions += 1;
        true
    }

    fn report(&self) -> Option<&AttackReport> {
        Some(&self.report)
    }

    fn name(&self) -> &'static str {
        "wait_snoop_push"
    }
}

/// Bit-flip attack: flip i.i.d. with probability `p_bar n / ell` for `ell`
/// steps, sample `x'` from the posterior given the noisy prefix, then flip
/// each disagreeing position with probability 1/2.
#[derive(Debug, Clone)]
pub struct BabbleSnoopPush {
    code: CodeKnowledge,
    babble_prob: f64,
    crossover: f64,
    report: AttackReport,
}

impl BabbleSnoopPush {
    /// `ell = round((alpha + eps/2) n)` with `alpha = 1 - 4 (p - p_bar)`.
    pub fn new(code: CodeKnowledge, p: f64, p_bar: f64, q: f64, epsilon: f64) -> Result<Self> {
        check_range("p", p, 0.0, 0.25 - f64::EPSILON, "[0, 1/4)")?;
        check_range("p_bar", p_bar, 0.0, p, "[0, p]")?;
        check_range("q", q, 0.0, 0.5, "[0, 1/2]")?;
        check_range("epsilon", epsilon, 0.0, 1.0, "[0, 1]")?;
        check_block(code.n)?;
        let n = code.n as f64;
        let alpha = 1.0 - 4.0 * (p - p_bar);
        let ell = phase_length((alpha + epsilon / 2.0) * n, code.n);
        let babble_prob = (p_bar * n / ell as f64).min(1.0);
        Ok(BabbleSnoopPush {
            crossover: star_unchecked(babble_prob, q),
            babble_prob,
            report: AttackReport::new(ell),
            code,
        })
    }

    pub fn ell(&self) -> usize {
        self.report.plan.ell
    }

    pub fn babble_prob(&self) -> f64 {
        self.babble_prob
    }

    /// Crossover of the prefix as seen through babble and BSC noise.
    pub fn crossover(&self) -> f64 {
        self.crossover
    }
}

impl Adversary for BabbleSnoopPush {
    fn act(&mut self, view: &SideInfo<'_>, rng: &mut dyn RngCore) -> bool {
        let ell = self.report.plan.ell;
        if view.step <= ell {
            let flip = rng.gen_bool(self.babble_prob);
            if flip && view.remaining() > 0 {
                self.report.babble_actions += 1;
                return true;
            }
            return false;
        }
        if self.report.plan.phase == Phase::WaitOrBabble {
            let obs = Observation::Flip {
                crossover: self.crossover,
            };
            let set = consistent_set_from(view.y_prefix, &self.code.entries, obs)
                .expect("posterior has positive mass");
            let pick = set.sample(rng);
            self.report.candidates = set.len();
            self.report.budget_at_switch = view.remaining();
            self.report.plan.u_prime = Some(pick.message);
            self.report.plan.x_prime = Some(pick.bits.clone());
            self.report.plan.phase = Phase::Push;
        }
        let xp = self
            .report
            .plan
            .x_prime
            .as_ref()
            .expect("set at the switch")[view.step - 1];
        let x = view.current_input();
        let flip = rng.gen_bool(push_flip_probability(x, xp));
        if x == xp {
            return false;
        }
        self.report.push_disagreements += 1;
        if view.remaining() == 0 {
            self.report.exhausted = true;
            return false;
        }
        if flip {
            self.report.push_actions += 1;
        }
        flip
    }

    fn report(&self) -> Option<&AttackReport> {
        Some(&self.report)
    }

    fn name(&self) -> &'static str {
        "babble_snoop_push"
    }
}

/// Push-phase flip probability for input bit `x` against target `x_prime`.
pub fn push_flip_probability(x: bool, x_prime: bool) -> f64 {
    if x == x_prime {
        0.0
    } else {
        0.5
    }
}

/// Output law `[P(y=0), P(y=1)]` for input `x` when the adversary flips with
/// probability `flip_prob` and the BSC with probability `q`.
pub fn position_output_law(x: bool, flip_prob: f64, q: f64) -> [f64; 2] {
    let keep = star_unchecked(flip_prob, q);
    let same = 1.0 - keep;
    if x {
        [keep, same]
    } else {
        [same, keep]
    }
}

/// `P(y2 | input)` under the push kernel aimed at `target`, with unlimited
/// budget.
pub fn push_likelihood(y2: &[bool], input: &[bool], target: &[bool], q: f64) -> f64 {
    y2.iter()
        .zip(input.iter().zip(target))
        .map(|(&y, (&x, &t))| position_output_law(x, push_flip_probability(x, t), q)[y as usize])
        .product()
}
