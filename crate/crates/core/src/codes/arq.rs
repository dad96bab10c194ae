use rand::RngCore;
use serde::Serialize;

use crate::adversary::{Adversary, SideInfo};
use crate::channel::{budget, ChannelParams, StepEncoder, Symbol, Transcript};
use crate::error::{check_range, Error, Result};
use crate::rng::TrialStreams;

/// Repeats the current message bit until the feedback shows it arrived.
#[derive(Debug, Clone)]
pub struct ArqEncoder {
    bits: Vec<bool>,
}

impl ArqEncoder {
    pub fn new(bits: Vec<bool>) -> Self {
        ArqEncoder { bits }
    }

    /// Bits delivered so far according to the feedback.
    pub fn delivered(feedback: &[Symbol]) -> usize {
        feedback.iter().filter(|s| !s.is_erasure()).count()
    }
}

impl StepEncoder for ArqEncoder {
    fn next_bit(
        &mut self,
        _k: usize,
        feedback: Option<&[Symbol]>,
        _rng: &mut dyn RngCore,
    ) -> Option<bool> {
        let delivered = Self::delivered(feedback?);
        self.bits.get(delivered).copied()
    }
}

/// Channel-use cap `ceil(4k / ((1-p)(1-q)))`.
pub fn default_max_uses(k: usize, p: f64, q: f64) -> Result<usize> {
    check_range("p", p, 0.0, 1.0, "[0, 1]")?;
    check_range("q", q, 0.0, 1.0, "[0, 1]")?;
    let rate = (1.0 - p) * (1.0 - q);
    if rate <= 0.0 {
        return Err(Error::config("ARQ never delivers when p = 1 or q = 1"));
    }
    Ok((4.0 * k as f64 / rate).ceil() as usize)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ArqOutcome {
    pub delivered: usize,
    pub channel_uses: usize,
    /// Erased receptions, random or adversarial.
    pub erasures: usize,
    pub received: Vec<bool>,
    pub transcript: Transcript,
}

impl ArqOutcome {
    pub fn truncated(&self, k: usize) -> bool {
        self.delivered < k
    }
}

/// Sends `message` over BEC(q) with adversarial erasures and perfect
/// feedback, repeating each bit until it is received unerased.
///
/// The block length is not known in advance, so the adversary's budget is
/// enforced against the shortest length the run can still end at: an erasure
/// at step `t` with `d` bits delivered is accepted only if the running count
/// stays within `floor(p * min(t + k - d, max_n))`. Every finished run then
/// satisfies `erasures <= floor(p * channel_uses)`.
pub fn arq_transmit(
    message: &[bool],
    p: f64,
    q: f64,
    max_n: usize,
    adversary: &mut dyn Adversary,
    streams: &mut TrialStreams,
) -> Result<ArqOutcome> {
    check_range("p", p, 0.0, 1.0, "[0, 1]")?;
    let params = ChannelParams::erasure(q)?;
    let k = message.len();
    let mut encoder = ArqEncoder::new(message.to_vec());
    let mut t = Transcript::with_capacity(max_n, 0);
    let mut received = Vec::with_capacity(k);

    for step in 1..=max_n {
        if received.len() == k {
            break;
        }
        let Some(x) = encoder.next_bit(step, Some(&t.y), &mut streams.encoder) else {
            break;
        };
        let limit = budget(p, (step + k - received.len()).min(max_n));
        t.x.push(x);
        let view = SideInfo {
            step,
            n: max_n,
            x_prefix: &t.x,
            y_prefix: &t.y,
            budget: limit,
            used: t.actions_used,
        };
        let requested = adversary.act(&view, &mut streams.adversary);
        t.x.pop();
        let act = t.push_step(x, requested, limit);
        let y = params.step(x, act, &mut streams.channel);
        if let Some(bit) = y.bit() {
            received.push(bit);
        }
        t.y.push(y);
    }

    let channel_uses = t.y.len();
    t.n = channel_uses;
    t.budget = budget(p, channel_uses);
    Ok(ArqOutcome {
        delivered: received.len(),
        channel_uses,
        erasures: channel_uses - received.len(),
        received,
        transcript: t,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::{IidStrategy, Passive, Spy};
    use crate::channel::ChannelKind;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bits(k: usize, seed: u64) -> Vec<bool> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..k).map(|_| rng.gen()).collect()
    }

    #[test]
    fn noiseless_uses_exactly_k() {
        let msg = bits(100, 1);
        let out = arq_transmit(
            &msg,
            0.0,
            0.0,
            400,
            &mut Passive,
            &mut TrialStreams::from_u64(1),
        )
        .unwrap();
        assert_eq!(out.channel_uses, 100);
        assert_eq!(out.delivered, 100);
        assert_eq!(out.received, msg);
    }

    #[test]
    fn front_loaded_erasures() {
        for (k, p) in [(100, 0.2), (1000, 0.3), (37, 0.5)] {
            let msg = bits(k, 2);
            let max_n = default_max_uses(k, p, 0.0).unwrap();
            let mut adv = IidStrategy::new(1.0).unwrap();
            let out = arq_transmit(
                &msg,
                p,
                0.0,
                max_n,
                &mut adv,
                &mut TrialStreams::from_u64(2),
            )
            .unwrap();
            let e = budget(p, out.channel_uses);
            assert_eq!(out.channel_uses, k + e);
            assert_eq!(out.erasures, e);
            assert!(
                out.transcript.a[..e].iter().all(|&a| a),
                "erasures are a prefix"
            );
            assert_eq!(out.received, msg);
        }
    }

    #[test]
    fn rate_matches_geometric_mean() {
        let (p, q, k) = (0.2, 0.1, 1000);
        let max_n = default_max_uses(k, p, q).unwrap();
        let mut total = 0.0;
        for trial in 0..100 {
            let msg = bits(k, trial);
            let mut adv = IidStrategy::new(p).unwrap();
            let mut streams = TrialStreams::new(crate::rng::TrialSeed::new(3, trial));
            let out = arq_transmit(&msg, p, q, max_n, &mut adv, &mut streams).unwrap();
            assert!(!out.truncated(k));
            total += out.channel_uses as f64 / k as f64;
        }
        let mean = total / 100.0;
        let target = 1.0 / ((1.0 - p) * (1.0 - q));
        assert!((mean / target - 1.0).abs() < 0.05, "{mean} vs {target}");
    }

    #[test]
    fn conservation_and_budget() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for trial in 0..200 {
            let k = rng.gen_range(1..200);
            let p = rng.gen_range(0.0..0.6);
            let q = rng.gen_range(0.0..0.6);
            // small caps force truncation in some runs
            let max_n = if trial % 3 == 0 {
                k + k / 3
            } else {
                default_max_uses(k, p, q).unwrap()
            };
            let msg = bits(k, trial);
            let mut adv = Spy::new(IidStrategy::new(rng.gen_range(0.0..1.0)).unwrap());
            let out = arq_transmit(
                &msg,
                p,
                q,
                max_n,
                &mut adv,
                &mut TrialStreams::from_u64(trial),
            )
            .unwrap();
            assert_eq!(out.channel_uses, out.delivered + out.erasures);
            if !out.truncated(k) {
                assert_eq!(out.channel_uses, k + out.erasures);
            } else {
                assert_eq!(out.channel_uses, max_n);
            }
            assert!(out.transcript.actions_used <= budget(p, out.channel_uses));
            assert_eq!(out.received, msg[..out.delivered]);
            out.transcript
                .check_invariants(ChannelKind::Erasure)
                .unwrap();
            adv.verify(&out.transcript).unwrap();
        }
    }

    #[test]
    fn max_uses_rejects_dead_channel() {
        assert!(default_max_uses(10, 1.0, 0.0).is_err());
        assert!(default_max_uses(10, 0.0, 1.0).is_err());
        assert_eq!(default_max_uses(10, 0.0, 0.0).unwrap(), 40);
    }

    #[test]
    fn open_loop_encoder_stops() {
        let mut enc = ArqEncoder::new(vec![true]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(enc.next_bit(1, None, &mut rng), None);
        assert_eq!(enc.next_bit(1, Some(&[]), &mut rng), Some(true));
        assert_eq!(enc.next_bit(2, Some(&[Symbol::One]), &mut rng), None);
    }
}
