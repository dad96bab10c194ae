//! Monte Carlo harness.
//!
//! A [`Scenario`] is validated and turned into an [`Experiment`] once (the
//! code is drawn from its own seed); each trial then runs from a
//! [`TrialSeed`] alone, so trials may execute in any order or in parallel.

mod estimate;
mod report;
mod scenario;

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::adversary::{
    Adversary, AttackReport, BabbleSnoopPush, CodeKnowledge, IidStrategy, Passive, Spy,
    WaitSnoopPush,
};
use crate::channel::{run_transmission, ChannelKind, CodewordEncoder, Transcript};
use crate::codes::{
    arq_transmit, default_max_uses, nearest_message_decode, two_phase_decode, ChunkedCode,
    Codebook, DecodeResult, DecoderConfig,
};
use crate::error::Result;
use crate::rng::{substream, Substream, TrialSeed, TrialStreams};

pub use estimate::{estimate_error, wilson_interval, ErrorEstimate, EventCounts, WILSON_Z};
pub use report::{write_csv, ResultRow, CSV_COLUMNS};
pub use scenario::{
    merge_patch, AdversarySpec, CodeSpec, MessageSelection, Scenario, SCHEMA_VERSION,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Correct,
    Wrong,
    ListAmbiguous,
    NoValidDecodingPoint,
    /// ARQ hit its channel-use cap.
    Truncated,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TrialOutcome {
    pub sent: usize,
    pub decoded: Option<usize>,
    pub verdict: Verdict,
    pub t_star: Option<usize>,
    pub list_size: Option<usize>,
    pub channel_uses: usize,
    pub confusion: bool,
    pub attack_exhausted: bool,
    /// The final output is consistent with two or more messages (erasure
    /// channel, chunked code).
    pub ambiguous_output: bool,
    /// Budget or causality invariant that failed, if any.
    pub invariant_violation: Option<String>,
    pub attack: Option<AttackReport>,
    pub transcript: Transcript,
}

impl TrialOutcome {
    pub fn is_error(&self) -> bool {
        self.verdict != Verdict::Correct
    }
}

#[derive(Debug, Clone)]
enum Prepared {
    Chunked {
        code: Arc<ChunkedCode>,
        knowledge: Option<CodeKnowledge>,
        decoder: Option<DecoderConfig>,
    },
    Arq {
        k: usize,
        max_n: usize,
    },
}

/// A validated scenario with its code built.
#[derive(Debug, Clone)]
pub struct Experiment {
    scenario: Scenario,
    prepared: Prepared,
}

impl Experiment {
    pub fn prepare(scenario: &Scenario) -> Result<Self> {
        scenario.validate()?;
        let prepared = match &scenario.code {
            CodeSpec::Chunked { code_seed, .. } => {
                let params = scenario.chunked_params().expect("chunked");
                let code = ChunkedCode::build(params, &mut ChaCha8Rng::seed_from_u64(*code_seed))?;
                let knowledge = match scenario.adversary {
                    AdversarySpec::WaitSnoopPush { .. } | AdversarySpec::BabbleSnoopPush { .. } => {
                        Some(CodeKnowledge::from_code(&code))
                    }
                    _ => None,
                };
                let decoder = match scenario.channel.kind {
                    ChannelKind::Erasure => Some(DecoderConfig::for_code(
                        &code,
                        scenario.p,
                        scenario.channel.q,
                    )?),
                    ChannelKind::Flip => None,
                };
                Prepared::Chunked {
                    code: Arc::new(code),
                    knowledge,
                    decoder,
                }
            }
            CodeSpec::Arq { k, max_n } => Prepared::Arq {
                k: *k,
                max_n: match max_n {
                    Some(m) => *m,
                    None => default_max_uses(*k, scenario.p, scenario.channel.q)?,
                },
            },
        };
        let experiment = Experiment {
            scenario: scenario.clone(),
            prepared,
        };
        // constructing the adversary once surfaces its parameter errors early
        experiment.adversary()?;
        Ok(experiment)
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn code(&self) -> Option<&ChunkedCode> {
        match &self.prepared {
            Prepared::Chunked { code, .. } => Some(code),
            Prepared::Arq { .. } => None,
        }
    }

    pub fn decoder(&self) -> Option<&DecoderConfig> {
        match &self.prepared {
            Prepared::Chunked { decoder, .. } => decoder.as_ref(),
            Prepared::Arq { .. } => None,
        }
    }

    /// A fresh strategy for one trial.
    pub fn adversary(&self) -> Result<Box<dyn Adversary>> {
        let s = &self.scenario;
        let knowledge = match &self.prepared {
            Prepared::Chunked { knowledge, .. } => knowledge.clone(),
            Prepared::Arq { .. } => None,
        };
        Ok(match s.adversary {
            AdversarySpec::Passive => Box::new(Passive),
            AdversarySpec::Iid { prob } => Box::new(IidStrategy::new(prob)?),
            AdversarySpec::WaitSnoopPush { epsilon } => Box::new(WaitSnoopPush::new(
                knowledge.expect("built for snoop attacks"),
                s.channel.q,
                epsilon,
            )?),
            AdversarySpec::BabbleSnoopPush { p_bar, epsilon } => Box::new(BabbleSnoopPush::new(
                knowledge.expect("built for snoop attacks"),
                s.p,
                p_bar,
                s.channel.q,
                epsilon,
            )?),
        })
    }

    pub fn run_trial(&self, seed: TrialSeed) -> Result<TrialOutcome> {
        let mut streams = TrialStreams::new(seed);
        let mut selector = substream(seed, Substream::Code);
        let mut adversary = Spy::new(self.adversary()?);
        match &self.prepared {
            Prepared::Chunked { code, decoder, .. } => self.run_chunked(
                code,
                decoder.as_ref(),
                &mut adversary,
                &mut streams,
                &mut selector,
            ),
            Prepared::Arq { k, max_n } => {
                self.run_arq(*k, *max_n, &mut adversary, &mut streams, &mut selector)
            }
        }
    }

    fn run_chunked(
        &self,
        code: &ChunkedCode,
        decoder: Option<&DecoderConfig>,
        adversary: &mut Spy<Box<dyn Adversary>>,
        streams: &mut TrialStreams,
        selector: &mut ChaCha8Rng,
    ) -> Result<TrialOutcome> {
        let s = &self.scenario;
        let sent = match s.message {
            MessageSelection::Fixed(u) => u,
            MessageSelection::Uniform => selector.gen_range(0..code.num_messages()),
        };
        let keys = code.draw_keys(&mut streams.encoder);
        let x = code.encode(sent, &keys)?;
        let mut encoder = CodewordEncoder::new(x);
        let transcript = run_transmission(
            &mut encoder,
            adversary,
            s.channel,
            s.p,
            code.n(),
            s.transmitter_feedback,
            streams,
        )?;

        let (result, t_star, list_size, ambiguous_output) = match decoder {
            Some(cfg) => {
                let out = two_phase_decode(&transcript.y, code, cfg)?;
                let ambiguous = code.consistent_messages(&transcript.y).len() >= 2;
                (out.result, out.t_star, Some(out.list.len()), ambiguous)
            }
            None => (
                nearest_message_decode(&transcript.y, code),
                None,
                None,
                false,
            ),
        };
        let verdict = match result {
            DecodeResult::Decoded(u) if u == sent => Verdict::Correct,
            DecodeResult::Decoded(_) => Verdict::Wrong,
            DecodeResult::ListAmbiguous => Verdict::ListAmbiguous,
            DecodeResult::NoValidDecodingPoint => Verdict::NoValidDecodingPoint,
        };
        Ok(finish(
            sent,
            result.decoded(),
            verdict,
            t_star,
            list_size,
            ambiguous_output,
            adversary,
            transcript,
            s.channel.kind,
        ))
    }

    fn run_arq(
        &self,
        k: usize,
        max_n: usize,
        adversary: &mut Spy<Box<dyn Adversary>>,
        streams: &mut TrialStreams,
        selector: &mut ChaCha8Rng,
    ) -> Result<TrialOutcome> {
        let s = &self.scenario;
        let bits: Vec<bool> = match s.message {
            MessageSelection::Fixed(u) => (0..k)
                .map(|i| i < usize::BITS as usize && u >> i & 1 == 1)
                .collect(),
            MessageSelection::Uniform => (0..k).map(|_| selector.gen()).collect(),
        };
        let out = arq_transmit(&bits, s.p, s.channel.q, max_n, adversary, streams)?;
        let truncated = out.truncated(k);
        let verdict = if truncated {
            Verdict::Truncated
        } else if out.received == bits {
            Verdict::Correct
        } else {
            Verdict::Wrong
        };
        Ok(finish(
            message_id(&bits),
            (!truncated).then(|| message_id(&out.received)),
            verdict,
            None,
            None,
            false,
            adversary,
            out.transcript,
            ChannelKind::Erasure,
        ))
    }
}

/// Low 64 bits of a bit string read LSB first.
fn message_id(bits: &[bool]) -> usize {
    bits.iter()
        .take(usize::BITS as usize)
        .enumerate()
        .fold(0, |acc, (i, &b)| acc | (b as usize) << i)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    sent: usize,
    decoded: Option<usize>,
    verdict: Verdict,
    t_star: Option<usize>,
    list_size: Option<usize>,
    ambiguous_output: bool,
    adversary: &Spy<Box<dyn Adversary>>,
    transcript: Transcript,
    kind: ChannelKind,
) -> TrialOutcome {
    let invariant_violation = transcript
        .check_invariants(kind)
        .and_then(|_| adversary.verify(&transcript))
        .err();
    let attack = adversary.report().cloned();
    TrialOutcome {
        sent,
        decoded,
        verdict,
        t_star,
        list_size,
        channel_uses: transcript.y.len(),
        confusion: attack.as_ref().is_some_and(|r| r.confusion(sent)),
        attack_exhausted: attack.as_ref().is_some_and(|r| r.exhausted),
        ambiguous_output,
        invariant_violation,
        attack,
        transcript,
    }
}

/// Prepares `scenario` and runs one trial.
pub fn run_trial(scenario: &Scenario, seed: TrialSeed) -> Result<TrialOutcome> {
    Experiment::prepare(scenario)?.run_trial(seed)
}

/// One grid point of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub index: usize,
    pub scenario: Option<Scenario>,
    pub outcome: std::result::Result<ErrorEstimate, String>,
}

/// Base seed used for grid point `index`: `base_seed + index`.
pub fn point_seed(base_seed: u64, index: usize) -> u64 {
    base_seed.wrapping_add(index as u64)
}

/// Runs `trials` trials at every `base + delta` point. A point that fails
/// validation is recorded and the sweep moves on.
pub fn sweep(
    base: &Scenario,
    deltas: &[serde_json::Value],
    trials: u64,
    base_seed: u64,
) -> Result<Vec<SweepRow>> {
    if deltas.is_empty() {
        return Err(crate::Error::config("sweep grid is empty"));
    }
    Ok(deltas
        .iter()
        .enumerate()
        .map(|(index, delta)| {
            let scenario = base.with_delta(delta);
            let outcome = scenario
                .as_ref()
                .map_err(|e| e.clone())
                .and_then(|s| estimate_error(s, trials, point_seed(base_seed, index)))
                .map_err(|e| e.to_string());
            SweepRow {
                index,
                scenario: scenario.ok(),
                outcome,
            }
        })
        .collect())
}

/// Index of the row with the largest error estimate: the empirical stand-in
/// for the max over messages and strategies.
pub fn worst_case(rows: &[SweepRow]) -> Option<usize> {
    rows.iter()
        .filter_map(|r| r.outcome.as_ref().ok().map(|e| (r.index, e.p_hat)))
        .fold(None, |best: Option<(usize, f64)>, (i, p)| match best {
            Some((_, bp)) if bp >= p => best,
            _ => Some((i, p)),
        })
        .map(|(i, _)| i)
}
