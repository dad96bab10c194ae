use rayon::prelude::*;
use serde::Serialize;

use super::{Experiment, Scenario, TrialOutcome, Verdict};
use crate::error::{Error, Result};
use crate::rng::TrialSeed;

/// Two-sided 95% normal quantile.
pub const WILSON_Z: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `errors` out of `trials`.
pub fn wilson_interval(errors: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let phat = errors as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (phat + z2 / (2.0 * n)) / denom;
    let half = z * (phat * (1.0 - phat) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    // the bounds are exactly 0 and 1 at the extremes; avoid rounding dust
    let lo = if errors == 0 {
        0.0
    } else {
        (centre - half).max(0.0)
    };
    let hi = if errors == trials {
        1.0
    } else {
        (centre + half).min(1.0)
    };
    (lo, hi)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct EventCounts {
    /// Push completed against another message's codeword.
    pub confusion_success: u64,
    pub attack_exhausted: u64,
    pub no_decoding_point: u64,
    pub list_ambiguous: u64,
    pub truncated: u64,
    pub ambiguous_output: u64,
    /// Errors plus trials whose output could not single out the message.
    pub potential_errors: u64,
    /// Trials where the channel loop refused at least one request.
    pub clamped_trials: u64,
    pub invariant_failures: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Tally {
    trials: u64,
    errors: u64,
    channel_uses: u64,
    events: EventCounts,
}

impl Tally {
    fn of(o: &TrialOutcome) -> Self {
        let b = |x: bool| x as u64;
        let error = o.is_error();
        Tally {
            trials: 1,
            errors: b(error),
            channel_uses: o.channel_uses as u64,
            events: EventCounts {
                confusion_success: b(o.confusion),
                attack_exhausted: b(o.attack_exhausted),
                no_decoding_point: b(o.verdict == Verdict::NoValidDecodingPoint),
                list_ambiguous: b(o.verdict == Verdict::ListAmbiguous),
                truncated: b(o.verdict == Verdict::Truncated),
                ambiguous_output: b(o.ambiguous_output),
                potential_errors: b(error || o.ambiguous_output),
                clamped_trials: b(o.transcript.violation_attempts > 0),
                invariant_failures: b(o.invariant_violation.is_some()),
            },
        }
    }

    fn add(self, o: Self) -> Self {
        let (a, b) = (self.events, o.events);
        Tally {
            trials: self.trials + o.trials,
            errors: self.errors + o.errors,
            channel_uses: self.channel_uses + o.channel_uses,
            events: EventCounts {
                confusion_success: a.confusion_success + b.confusion_success,
                attack_exhausted: a.attack_exhausted + b.attack_exhausted,
                no_decoding_point: a.no_decoding_point + b.no_decoding_point,
                list_ambiguous: a.list_ambiguous + b.list_ambiguous,
                truncated: a.truncated + b.truncated,
                ambiguous_output: a.ambiguous_output + b.ambiguous_output,
                potential_errors: a.potential_errors + b.potential_errors,
                clamped_trials: a.clamped_trials + b.clamped_trials,
                invariant_failures: a.invariant_failures + b.invariant_failures,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorEstimate {
    pub trials: u64,
    pub errors: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub events: EventCounts,
    pub mean_channel_uses: f64,
}

impl ErrorEstimate {
    fn from_tally(t: Tally) -> Self {
        let (ci_low, ci_high) = wilson_interval(t.errors, t.trials, WILSON_Z);
        ErrorEstimate {
            trials: t.trials,
            errors: t.errors,
            p_hat: t.errors as f64 / t.trials as f64,
            ci_low,
            ci_high,
            events: t.events,
            mean_channel_uses: t.channel_uses as f64 / t.trials as f64,
        }
    }

    pub fn success_fraction(&self) -> f64 {
        1.0 - self.p_hat
    }
}

/// Runs trials `0..num_trials` of `scenario` under `base_seed` in parallel.
/// Counts are integer sums, so the result does not depend on scheduling.
pub fn estimate_error(
    scenario: &Scenario,
    num_trials: u64,
    base_seed: u64,
) -> Result<ErrorEstimate> {
    let exp = Experiment::prepare(scenario)?;
    exp.estimate(num_trials, base_seed)
}

impl Experiment {
    pub fn estimate(&self, num_trials: u64, base_seed: u64) -> Result<ErrorEstimate> {
        self.estimate_with(num_trials, base_seed, |_| {})
    }

    /// As [`Experiment::estimate`], also handing every outcome to `inspect`
    /// (from worker threads, in no particular order).
    pub fn estimate_with<F>(
        &self,
        num_trials: u64,
        base_seed: u64,
        inspect: F,
    ) -> Result<ErrorEstimate>
    where
        F: Fn(&TrialOutcome) + Sync,
    {
        if num_trials == 0 {
            return Err(Error::config("need at least one trial"));
        }
        let tally = (0..num_trials)
            .into_par_iter()
            .map(|i| {
                let o = self.run_trial(TrialSeed::new(base_seed, i))?;
                inspect(&o);
                Ok(Tally::of(&o))
            })
            .try_reduce(Tally::default, |a, b| Ok(a.add(b)))?;
        Ok(ErrorEstimate::from_tally(tally))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn wilson_zero_errors() {
        let (lo, hi) = wilson_interval(0, 100, WILSON_Z);
        assert_eq!(lo, 0.0);
        let z2 = WILSON_Z * WILSON_Z;
        assert!((hi - z2 / (100.0 + z2)).abs() < 1e-15);
        assert!((hi - 0.037).abs() < 1e-3);
    }

    #[test]
    fn wilson_brackets_and_shrinks() {
        for (e, n) in [(3, 50), (50, 100), (100, 100), (1, 1000)] {
            let (lo, hi) = wilson_interval(e, n, WILSON_Z);
            let p = e as f64 / n as f64;
            assert!(lo <= p && p <= hi);
        }
        let w = |n: u64| {
            let (lo, hi) = wilson_interval(n / 5, n, WILSON_Z);
            hi - lo
        };
        let ratio = w(20_000) / w(10_000);
        assert!(
            (ratio - std::f64::consts::FRAC_1_SQRT_2).abs() < 0.01,
            "{ratio}"
        );
    }

    fn scenario(adv: serde_json::Value, q: f64, p: f64, m: usize) -> Scenario {
        Scenario::from_json(
            &json!({
                "schema_version": 1,
                "channel": {"kind": "erasure", "q": q},
                "p": p,
                "code": {"type": "chunked", "n": 16, "theta": 0.25, "num_messages": m, "num_keys": 1, "code_seed": 3},
                "adversary": adv,
            })
            .to_string(),
        )
        .unwrap()
    }

    #[test]
    fn full_erasure_always_fails() {
        let s = scenario(json!({"type": "iid", "prob": 1.0}), 0.0, 1.0, 16);
        let e = estimate_error(&s, 50, 1).unwrap();
        assert_eq!(e.p_hat, 1.0);
        assert_eq!(e.errors, 50);
    }

    #[test]
    fn parallel_matches_serial() {
        let s = scenario(
            json!({"type": "wait_snoop_push", "epsilon": 0.05}),
            0.1,
            0.3,
            8,
        );
        let exp = Experiment::prepare(&s).unwrap();
        let par = exp.estimate(200, 17).unwrap();
        let serial = (0..200)
            .map(|i| Tally::of(&exp.run_trial(TrialSeed::new(17, i)).unwrap()))
            .fold(Tally::default(), Tally::add);
        assert_eq!(par, ErrorEstimate::from_tally(serial));
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        assert_eq!(pool.install(|| exp.estimate(200, 17).unwrap()), par);
    }

    #[test]
    fn zero_trials_rejected() {
        let s = scenario(json!({"type": "passive"}), 0.0, 0.0, 4);
        assert!(estimate_error(&s, 0, 0).is_err());
    }
}
