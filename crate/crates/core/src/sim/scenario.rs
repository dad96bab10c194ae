use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::channel::{ChannelKind, ChannelParams};
use crate::codes::{default_max_uses, ChunkedParams};
use crate::error::{check_range, Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// One simulated configuration, as read from a scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    #[serde(default)]
    pub label: String,
    pub channel: ChannelParams,
    pub p: f64,
    pub code: CodeSpec,
    pub adversary: AdversarySpec,
    #[serde(default)]
    pub transmitter_feedback: bool,
    #[serde(default)]
    pub message: MessageSelection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum CodeSpec {
    /// Random chunked code drawn from `code_seed`.
    Chunked {
        n: usize,
        theta: f64,
        num_messages: usize,
        num_keys: usize,
        #[serde(default)]
        code_seed: u64,
    },
    /// Repeat-until-received over `k` message bits.
    Arq {
        k: usize,
        #[serde(default)]
        max_n: Option<usize>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum AdversarySpec {
    Passive,
    Iid { prob: f64 },
    WaitSnoopPush { epsilon: f64 },
    BabbleSnoopPush { p_bar: f64, epsilon: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageSelection {
    #[default]
    Uniform,
    Fixed(usize),
}

impl Scenario {
    /// Parses and validates a scenario document.
    pub fn from_json(s: &str) -> Result<Self> {
        let scenario: Scenario = serde_json::from_str(s).map_err(|e| {
            Error::config(format!(
                "scenario line {}, column {}: {e}",
                e.line(),
                e.column()
            ))
        })?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// Applies a JSON merge patch and re-validates.
    pub fn with_delta(&self, delta: &Value) -> Result<Self> {
        if !delta.is_object() {
            return Err(Error::config("scenario delta must be a JSON object"));
        }
        let mut doc = serde_json::to_value(self).expect("scenario serializes");
        merge_patch(&mut doc, delta);
        let scenario: Scenario = serde_json::from_value(doc)
            .map_err(|e| Error::config(format!("scenario delta: {e}")))?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        self.channel.validate()?;
        check_range("p", self.p, 0.0, 1.0, "[0, 1]")?;
        let q = self.channel.q;

        match &self.code {
            CodeSpec::Chunked { .. } => {
                self.chunked_params().expect("chunked").shape()?;
            }
            CodeSpec::Arq { k, max_n } => {
                if *k == 0 {
                    return Err(Error::config("ARQ needs k >= 1"));
                }
                if !self.transmitter_feedback {
                    return Err(Error::config("ARQ requires transmitter_feedback"));
                }
                if self.channel.kind != ChannelKind::Erasure {
                    return Err(Error::config("ARQ runs on the erasure channel"));
                }
                match max_n {
                    Some(m) if m < k => return Err(Error::config("max_n must be at least k")),
                    Some(_) => {}
                    None => {
                        default_max_uses(*k, self.p, q)?;
                    }
                }
            }
        }

        match &self.adversary {
            AdversarySpec::Passive => {}
            AdversarySpec::Iid { prob } => check_range("prob", *prob, 0.0, 1.0, "[0, 1]")?,
            AdversarySpec::WaitSnoopPush { epsilon } => {
                check_range("epsilon", *epsilon, 0.0, 1.0, "[0, 1]")?;
                if self.channel.kind != ChannelKind::Erasure || !self.is_chunked() {
                    return Err(Error::config(
                        "wait_snoop_push needs a chunked code on the erasure channel",
                    ));
                }
                check_range("q", q, 0.0, 1.0 - f64::EPSILON, "[0, 1)")?;
            }
            AdversarySpec::BabbleSnoopPush { p_bar, epsilon } => {
                check_range("epsilon", *epsilon, 0.0, 1.0, "[0, 1]")?;
                if self.channel.kind != ChannelKind::Flip || !self.is_chunked() {
                    return Err(Error::config(
                        "babble_snoop_push needs a chunked code on the flip channel",
                    ));
                }
                check_range("p", self.p, 0.0, 0.25 - f64::EPSILON, "[0, 1/4)")?;
                check_range("p_bar", *p_bar, 0.0, self.p, "[0, p]")?;
            }
        }

        if let MessageSelection::Fixed(u) = self.message {
            let ok = match &self.code {
                CodeSpec::Chunked { num_messages, .. } => u < *num_messages,
                CodeSpec::Arq { k, .. } => *k >= usize::BITS as usize || u >> k == 0,
            };
            if !ok {
                return Err(Error::config(format!("fixed message {u} is out of range")));
            }
        }
        Ok(())
    }

    pub fn is_chunked(&self) -> bool {
        matches!(self.code, CodeSpec::Chunked { .. })
    }

    pub fn chunked_params(&self) -> Option<ChunkedParams> {
        match self.code {
            CodeSpec::Chunked {
                n,
                theta,
                num_messages,
                num_keys,
                ..
            } => Some(ChunkedParams {
                n,
                theta,
                num_messages,
                num_keys,
            }),
            CodeSpec::Arq { .. } => None,
        }
    }

    /// Block length of a chunked code, or `k` for ARQ.
    pub fn n(&self) -> usize {
        match self.code {
            CodeSpec::Chunked { n, .. } => n,
            CodeSpec::Arq { k, .. } => k,
        }
    }

    pub fn code_label(&self) -> String {
        match &self.code {
            CodeSpec::Chunked {
                n,
                theta,
                num_messages,
                num_keys,
                code_seed,
            } => format!("chunked(n={n};theta={theta};messages={num_messages};keys={num_keys};seed={code_seed})"),
            CodeSpec::Arq { k, max_n: Some(m) } => format!("arq(k={k};max_n={m})"),
            CodeSpec::Arq { k, max_n: None } => format!("arq(k={k})"),
        }
    }

    pub fn adversary_label(&self) -> String {
        match &self.adversary {
            AdversarySpec::Passive => "passive".into(),
            AdversarySpec::Iid { prob } => format!("iid(prob={prob})"),
            AdversarySpec::WaitSnoopPush { epsilon } => {
                format!("wait_snoop_push(epsilon={epsilon})")
            }
            AdversarySpec::BabbleSnoopPush { p_bar, epsilon } => {
                format!("babble_snoop_push(p_bar={p_bar};epsilon={epsilon})")
            }
        }
    }

    pub fn message_label(&self) -> String {
        match self.message {
            MessageSelection::Uniform => "uniform".into(),
            MessageSelection::Fixed(u) => format!("fixed({u})"),
        }
    }
}

/// JSON merge patch: objects merge recursively, `null` removes a key, any
/// other value replaces.
pub fn merge_patch(target: &mut Value, patch: &Value) {
    let Value::Object(patch) = patch else {
        *target = patch.clone();
        return;
    };
    if !target.is_object() {
        *target = Value::Object(Default::default());
    }
    let map = target.as_object_mut().expect("object");
    for (key, value) in patch {
        if value.is_null() {
            map.remove(key);
        } else {
            merge_patch(map.entry(key.clone()).or_insert(Value::Null), value);
        }
    }
}
