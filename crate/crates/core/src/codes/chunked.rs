use std::ops::Range;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::codebook::{Codebook, CodewordEntry};
use crate::channel::Symbol;
use crate::error::{check_range, Error, Result};

/// Shape of a [`ChunkedCode`] at desk scale: `theta`, message count and key
/// count are given directly rather than derived from `epsilon`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChunkedParams {
    pub n: usize,
    /// Chunk fraction; `1/theta` chunks of `n * theta` bits.
    pub theta: f64,
    pub num_messages: usize,
    pub num_keys: usize,
}

impl ChunkedParams {
    /// Returns `(num_chunks, chunk_len)` after checking the shape is integral.
    pub fn shape(&self) -> Result<(usize, usize)> {
        check_range("theta", self.theta, f64::MIN_POSITIVE, 1.0, "(0, 1]")?;
        let chunks_f = 1.0 / self.theta;
        let num_chunks = chunks_f.round() as usize;
        if (chunks_f - num_chunks as f64).abs() > 1e-9 || num_chunks == 0 {
            return Err(Error::config(format!(
                "1/theta = {chunks_f} is not an integer"
            )));
        }
        if self.n == 0 || !self.n.is_multiple_of(num_chunks) {
            return Err(Error::config(format!(
                "n * theta = {} is not an integer",
                self.n as f64 * self.theta
            )));
        }
        if self.num_messages < 2 {
            return Err(Error::config("need at least 2 messages"));
        }
        if self.num_keys < 1 {
            return Err(Error::config("need at least 1 key"));
        }
        Ok((num_chunks, self.n / num_chunks))
    }
}

/// Asymptotic parameter choices for a target slack `epsilon`: chunk fraction
/// `epsilon / 4` and key rate `theta^3 / 8`. At desk scale these give
/// degenerate integer shapes; they are reported for reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticParams {
    pub theta: f64,
    pub key_rate: f64,
}

pub fn asymptotic_parameters(epsilon: f64) -> AsymptoticParams {
    let theta = epsilon / 4.0;
    AsymptoticParams {
        theta,
        key_rate: theta.powi(3) / 8.0,
    }
}

/// Stochastic code made of `1/theta` independently drawn sub-codes.
///
/// Chunk `i` maps `(message, key)` to a bit string of length `n * theta`; a
/// codeword is the concatenation over chunks with an independent key per
/// chunk.
#[derive(Debug, Clone, PartialEq)]
pub struct ChunkedCode {
    n: usize,
    num_chunks: usize,
    chunk_len: usize,
    num_messages: usize,
    num_keys: usize,
    /// `tables[chunk][message * num_keys + key]`
    tables: Vec<Vec<Vec<bool>>>,
}

impl ChunkedCode {
    /// Draws every chunk entry as an independent uniform bit string.
    pub fn build<R: Rng + ?Sized>(params: ChunkedParams, rng: &mut R) -> Result<Self> {
        let (num_chunks, chunk_len) = params.shape()?;
        let entries = params.num_messages * params.num_keys;
        let tables = (0..num_chunks)
            .map(|_| {
                (0..entries)
                    .map(|_| (0..chunk_len).map(|_| rng.gen::<bool>()).collect())
                    .collect()
            })
            .collect();
        Ok(ChunkedCode {
            n: params.n,
            num_chunks,
            chunk_len,
            num_messages: params.num_messages,
            num_keys: params.num_keys,
            tables,
        })
    }

    /// Builds a code from explicit chunk tables.
    pub fn from_tables(
        num_messages: usize,
        num_keys: usize,
        tables: Vec<Vec<Vec<bool>>>,
    ) -> Result<Self> {
        let num_chunks = tables.len();
        if num_chunks == 0 {
            return Err(Error::config("no chunk tables"));
        }
        let chunk_len = tables[0].first().map_or(0, Vec::len);
        if chunk_len == 0 {
            return Err(Error::config("empty chunk"));
        }
        for table in &tables {
            if table.len() != num_messages * num_keys {
                return Err(Error::config(format!(
                    "chunk table has {} entries, expected {}",
                    table.len(),
                    num_messages * num_keys
                )));
            }
            if table.iter().any(|e| e.len() != chunk_len) {
                return Err(Error::config("chunk entries differ in length"));
            }
        }
        let code = ChunkedCode {
            n: num_chunks * chunk_len,
            num_chunks,
            chunk_len,
            num_messages,
            num_keys,
            tables,
        };
        code.params().shape()?;
        Ok(code)
    }

    pub fn params(&self) -> ChunkedParams {
        ChunkedParams {
            n: self.n,
            theta: self.theta(),
            num_messages: self.num_messages,
            num_keys: self.num_keys,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn theta(&self) -> f64 {
        1.0 / self.num_chunks as f64
    }

    pub fn num_chunks(&self) -> usize {
        self.num_chunks
    }

    pub fn chunk_len(&self) -> usize {
        self.chunk_len
    }

    pub fn num_keys(&self) -> usize {
        self.num_keys
    }

    /// `log2(num_keys) / n`.
    pub fn key_rate(&self) -> f64 {
        (self.num_keys as f64).log2() / self.n as f64
    }

    /// Chunk ends `{n theta, 2 n theta, ..., n - n theta}`.
    pub fn chunk_ends(&self) -> Vec<usize> {
        (1..self.num_chunks).map(|i| i * self.chunk_len).collect()
    }

    pub fn chunk_span(&self, chunk: usize) -> Range<usize> {
        chunk * self.chunk_len..(chunk + 1) * self.chunk_len
    }

    /// Table entry of chunk `chunk` for `(message, key)`.
    pub fn chunk(&self, chunk: usize, message: usize, key: usize) -> &[bool] {
        &self.tables[chunk][message * self.num_keys + key]
    }

    fn check_message(&self, message: usize) -> Result<()> {
        if message >= self.num_messages {
            return Err(Error::OutOfRange {
                what: "message",
                index: message,
                limit: self.num_messages,
            });
        }
        Ok(())
    }

    fn check_keys(&self, keys: &[usize], expected: usize) -> Result<()> {
        if keys.len() != expected {
            return Err(Error::config(format!(
                "expected {expected} keys, got {}",
                keys.len()
            )));
        }
        if let Some(&bad) = keys.iter().find(|&&k| k >= self.num_keys) {
            return Err(Error::OutOfRange {
                what: "key",
                index: bad,
                limit: self.num_keys,
            });
        }
        Ok(())
    }

    /// Concatenates the chunk entries for `message` under `keys`.
    pub fn encode(&self, message: usize, keys: &[usize]) -> Result<Vec<bool>> {
        self.check_message(message)?;
        self.check_keys(keys, self.num_chunks)?;
        Ok(self.concat(message, 0, keys))
    }

    /// Right mega sub-codeword: chunks `first_chunk..` under `keys`.
    pub fn encode_suffix(
        &self,
        message: usize,
        first_chunk: usize,
        keys: &[usize],
    ) -> Result<Vec<bool>> {
        self.check_message(message)?;
        if first_chunk > self.num_chunks {
            return Err(Error::OutOfRange {
                what: "chunk",
                index: first_chunk,
                limit: self.num_chunks,
            });
        }
        self.check_keys(keys, self.num_chunks - first_chunk)?;
        Ok(self.concat(message, first_chunk, keys))
    }

    fn concat(&self, message: usize, first_chunk: usize, keys: &[usize]) -> Vec<bool> {
        let mut out = Vec::with_capacity(keys.len() * self.chunk_len);
        for (offset, &key) in keys.iter().enumerate() {
            out.extend_from_slice(self.chunk(first_chunk + offset, message, key));
        }
        out
    }

    /// Draws one uniform key per chunk.
    pub fn draw_keys<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<usize> {
        (0..self.num_chunks)
            .map(|_| rng.gen_range(0..self.num_keys))
            .collect()
    }

    /// Every key sequence of length `len`, in lexicographic order.
    pub fn key_sequences(&self, len: usize) -> impl Iterator<Item = Vec<usize>> + '_ {
        let total = self.num_keys.pow(len as u32);
        (0..total).map(move |mut idx| {
            let mut seq = vec![0; len];
            for slot in seq.iter_mut().rev() {
                *slot = idx % self.num_keys;
                idx /= self.num_keys;
            }
            seq
        })
    }

    /// Whether some key makes chunk `chunk` of `message` agree with `y_chunk`
    /// on every unerased position.
    pub fn chunk_consistent(&self, chunk: usize, message: usize, y_chunk: &[Symbol]) -> bool {
        (0..self.num_keys).any(|key| {
            self.chunk(chunk, message, key)
                .iter()
                .zip(y_chunk)
                .all(|(&b, s)| s.agrees_with(b))
        })
    }

    /// Whether some key sequence makes chunks `chunks` of `message` agree
    /// with `y_span` (the received symbols over those chunks). Keys are
    /// independent per chunk, so this factorises chunk by chunk.
    pub fn span_consistent(&self, chunks: Range<usize>, message: usize, y_span: &[Symbol]) -> bool {
        let first = chunks.start;
        chunks.clone().all(|c| {
            let lo = (c - first) * self.chunk_len;
            let hi = (lo + self.chunk_len).min(y_span.len());
            lo >= hi || self.chunk_consistent(c, message, &y_span[lo..hi])
        })
    }

    pub fn to_document(&self) -> CodeDocument {
        CodeDocument {
            schema_version: 1,
            n: self.n,
            theta: self.theta(),
            num_chunks: self.num_chunks,
            chunk_len: self.chunk_len,
            num_messages: self.num_messages,
            num_keys: self.num_keys,
            chunks: self
                .tables
                .iter()
                .map(|t| t.iter().map(|bits| hex::encode(pack_bits(bits))).collect())
                .collect(),
        }
    }

    pub fn from_document(doc: &CodeDocument) -> Result<Self> {
        if doc.schema_version != 1 {
            return Err(Error::config(format!(
                "unsupported schema_version {}",
                doc.schema_version
            )));
        }
        let tables = doc
            .chunks
            .iter()
            .map(|t| {
                t.iter()
                    .map(|h| {
                        let bytes = hex::decode(h)
                            .map_err(|e| Error::config(format!("bad hex {h:?}: {e}")))?;
                        unpack_bits(&bytes, doc.chunk_len)
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let code = Self::from_tables(doc.num_messages, doc.num_keys, tables)?;
        if code.n != doc.n || code.num_chunks != doc.num_chunks || code.chunk_len != doc.chunk_len {
            return Err(Error::config(
                "document shape fields disagree with chunk tables",
            ));
        }
        Ok(code)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("code document serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: CodeDocument =
            serde_json::from_str(s).map_err(|e| Error::config(format!("code document: {e}")))?;
        Self::from_document(&doc)
    }
}

/// JSON form of a [`ChunkedCode`]. Chunk entries are hex strings of the bits
/// packed MSB first, ordered message-major (`message * num_keys + key`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeDocument {
    pub schema_version: u32,
    pub n: usize,
    pub theta: f64,
    pub num_chunks: usize,
    pub chunk_len: usize,
    pub num_messages: usize,
    pub num_keys: usize,
    pub chunks: Vec<Vec<String>>,
}

fn pack_bits(bits: &[bool]) -> Vec<u8> {
    bits.chunks(8)
        .map(|byte| {
            byte.iter()
                .enumerate()
                .fold(0u8, |acc, (i, &b)| acc | ((b as u8) << (7 - i)))
        })
        .collect()
}

fn unpack_bits(bytes: &[u8], len: usize) -> Result<Vec<bool>> {
    if bytes.len() != len.div_ceil(8) {
        return Err(Error::config(format!(
            "{} bytes cannot hold exactly {len} bits",
            bytes.len()
        )));
    }
    Ok((0..len)
        .map(|i| bytes[i / 8] >> (7 - i % 8) & 1 == 1)
        .collect())
}

impl Codebook for ChunkedCode {
    fn block_len(&self) -> usize {
        self.n
    }

    fn num_messages(&self) -> usize {
        self.num_messages
    }

    fn entries(&self) -> Vec<CodewordEntry> {
        let per_message = self.num_keys.pow(self.num_chunks as u32);
        let prior = 1.0 / (self.num_messages * per_message) as f64;
        (0..self.num_messages)
            .flat_map(|u| {
                self.key_sequences(self.num_chunks)
                    .map(move |keys| CodewordEntry {
                        message: u,
                        bits: self.concat(u, 0, &keys),
                        keys,
                        prior,
                    })
            })
            .collect()
    }

    fn consistent_messages(&self, y: &[Symbol]) -> Vec<usize> {
        let chunks = 0..y.len().div_ceil(self.chunk_len).min(self.num_chunks);
        (0..self.num_messages)
            .filter(|&u| self.span_consistent(chunks.clone(), u, y))
            .collect()
    }
}
