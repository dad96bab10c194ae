use std::io::Write;

use serde::Serialize;

use super::{ErrorEstimate, Scenario, SweepRow};
use crate::channel::ChannelKind;
use crate::error::{Error, Result};

pub const CSV_COLUMNS: [&str; 26] = [
    "index",
    "label",
    "channel",
    "q",
    "p",
    "n",
    "code",
    "adversary",
    "feedback",
    "message",
    "trials",
    "errors",
    "p_hat",
    "ci_low",
    "ci_high",
    "confusion_success",
    "attack_exhausted",
    "no_decoding_point",
    "list_ambiguous",
    "truncated",
    "ambiguous_output",
    "potential_errors",
    "clamped_trials",
    "invariant_failures",
    "mean_channel_uses",
    "status",
];

/// Flat CSV record. Numeric fields are empty for points that failed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub index: usize,
    pub label: String,
    pub channel: Option<&'static str>,
    pub q: Option<f64>,
    pub p: Option<f64>,
    pub n: Option<usize>,
    pub code: String,
    pub adversary: String,
    pub feedback: Option<bool>,
    pub message: String,
    pub trials: Option<u64>,
    pub errors: Option<u64>,
    pub p_hat: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub confusion_success: Option<u64>,
    pub attack_exhausted: Option<u64>,
    pub no_decoding_point: Option<u64>,
    pub list_ambiguous: Option<u64>,
    pub truncated: Option<u64>,
    pub ambiguous_output: Option<u64>,
    pub potential_errors: Option<u64>,
    pub clamped_trials: Option<u64>,
    pub invariant_failures: Option<u64>,
    pub mean_channel_uses: Option<f64>,
    pub status: String,
}

impl ResultRow {
    pub fn new(
        index: usize,
        scenario: Option<&Scenario>,
        outcome: std::result::Result<&ErrorEstimate, &str>,
    ) -> Self {
        let e = outcome.ok();
        let ev = e.map(|e| e.events);
        ResultRow {
            index,
            label: scenario.map(|s| s.label.clone()).unwrap_or_default(),
            channel: scenario.map(|s| match s.channel.kind {
                ChannelKind::Erasure => "erasure",
                ChannelKind::Flip => "flip",
            }),
            q: scenario.map(|s| s.channel.q),
            p: scenario.map(|s| s.p),
            n: scenario.map(Scenario::n),
            code: scenario.map(Scenario::code_label).unwrap_or_default(),
            adversary: scenario.map(Scenario::adversary_label).unwrap_or_default(),
            feedback: scenario.map(|s| s.transmitter_feedback),
            message: scenario.map(Scenario::message_label).unwrap_or_default(),
            trials: e.map(|e| e.trials),
            errors: e.map(|e| e.errors),
            p_hat: e.map(|e| e.p_hat),
            ci_low: e.map(|e| e.ci_low),
            ci_high: e.map(|e| e.ci_high),
            confusion_success: ev.map(|v| v.confusion_success),
            attack_exhausted: ev.map(|v| v.attack_exhausted),
            no_decoding_point: ev.map(|v| v.no_decoding_point),
            list_ambiguous: ev.map(|v| v.list_ambiguous),
            truncated: ev.map(|v| v.truncated),
            ambiguous_output: ev.map(|v| v.ambiguous_output),
            potential_errors: ev.map(|v| v.potential_errors),
            clamped_trials: ev.map(|v| v.clamped_trials),
            invariant_failures: ev.map(|v| v.invariant_failures),
            mean_channel_uses: e.map(|e| e.mean_channel_uses),
            status: match outcome {
                Ok(_) => "ok".into(),
                Err(msg) => msg.into(),
            },
        }
    }

    pub fn from_sweep(row: &SweepRow) -> Self {
        Self::new(
            row.index,
            row.scenario.as_ref(),
            row.outcome.as_ref().map_err(String::as_str),
        )
    }
}

/// Writes a header row and one row per entry.
pub fn write_csv<W: Write>(out: W, rows: &[ResultRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::config(format!("csv: {e}"));
    if rows.is_empty() {
        w.write_record(CSV_COLUMNS).map_err(io)?;
    }
    for row in rows {
        w.serialize(row).map_err(io)?;
    }
    w.flush().map_err(|e| Error::config(format!("csv: {e}")))?;
    Ok(())
}
