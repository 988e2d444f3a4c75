//! Channel coding: rate-1/2 convolutional and turbo codes, channel
//! interleaving, feedback-symbol reconstruction and the decoder
//! characteristic `Pe = g(1/SINR)`.
//!
//! Coded bit 0 maps to the channel symbol `+1`. Soft values are LLRs with the
//! positive sign favouring bit 0; an observation `z = b + n` with complex noise
//! variance `v` has LLR `4·Re(z)/v`.

mod conv;
mod gcurve;
mod interleaver;
mod trellis;
mod turbo;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

pub use conv::viterbi;
pub use gcurve::{
    estimate_gcurve, BlockFading, CodecSampler, ErrorRateSampler, GCurve, GCurvePoint,
    GenieSampler, PointEstimate,
};
pub use interleaver::Interleaver;
pub use trellis::Trellis;
pub use turbo::{max_log_bcjr, turbo_decode};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum CodecFamily {
    /// Feedforward code terminated to the zero state.
    Convolutional,
    /// Two recursive systematic constituents, parities alternately
    /// punctured, unterminated.
    Turbo,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CodecSpec {
    pub family: CodecFamily,
    /// Octal generators. Convolutional: the two feedforward polynomials.
    /// Turbo: (feedback, parity) of each constituent.
    pub generators: (u32, u32),
    pub codeword_length: usize,
    /// Channel interleaver seed; 0 is the identity.
    pub interleaver_seed: u64,
    /// Turbo internal interleaver seed; must be nonzero for a useful code.
    pub turbo_interleaver_seed: u64,
    /// Turbo decoder iterations.
    pub iterations: usize,
}

impl CodecSpec {
    /// (35,23)₈ convolutional code, codeword length 1024.
    pub fn convolutional() -> Self {
        Self {
            family: CodecFamily::Convolutional,
            generators: (0o35, 0o23),
            codeword_length: 1024,
            interleaver_seed: 0x5eed_0001,
            turbo_interleaver_seed: 0,
            iterations: 0,
        }
    }

    /// Turbo code with (37,21)₈ constituents, codeword length 1024, 8
    /// decoder iterations.
    pub fn turbo() -> Self {
        Self {
            family: CodecFamily::Turbo,
            generators: (0o37, 0o21),
            codeword_length: 1024,
            interleaver_seed: 0x5eed_0001,
            turbo_interleaver_seed: 0x5eed_0002,
            iterations: 8,
        }
    }

    pub fn with_codeword_length(mut self, n: usize) -> Self {
        self.codeword_length = n;
        self
    }

    pub fn with_interleaver_seed(mut self, seed: u64) -> Self {
        self.interleaver_seed = seed;
        self
    }

    fn memory(&self) -> usize {
        let (a, b) = self.generators;
        (32 - (a | b).leading_zeros() as usize).saturating_sub(1)
    }

    /// Number of information bits per codeword.
    pub fn info_length(&self) -> usize {
        match self.family {
            CodecFamily::Convolutional => (self.codeword_length / 2).saturating_sub(self.memory()),
            CodecFamily::Turbo => self.codeword_length / 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.codeword_length % 2 != 0 {
            return Err(Error::Parameter(format!(
                "codeword length {} is not even",
                self.codeword_length
            )));
        }
        if self.info_length() == 0 {
            return Err(Error::Parameter(format!(
                "codeword length {} leaves no information bits",
                self.codeword_length
            )));
        }
        if self.family == CodecFamily::Turbo && self.iterations == 0 {
            return Err(Error::Parameter(
                "turbo decoder needs at least one iteration".into(),
            ));
        }
        Ok(())
    }
}

/// Hard output of [`Codec::decode`].
#[derive(Debug, Clone, PartialEq)]
pub struct Decoded {
    pub info: Vec<u8>,
    /// Re-encoded and re-interleaved ±1 channel symbols.
    pub symbols: Vec<f64>,
}

/// Encoder/decoder pair built from a [`CodecSpec`].
#[derive(Debug, Clone)]
pub struct Codec {
    spec: CodecSpec,
    trellis: Trellis,
    channel: Interleaver,
    inner: Interleaver,
}

impl Codec {
    pub fn new(spec: CodecSpec) -> Result<Self> {
        spec.validate()?;
        let (g1, g2) = spec.generators;
        let trellis = match spec.family {
            CodecFamily::Convolutional => Trellis::feedforward(&[g1, g2])?,
            CodecFamily::Turbo => Trellis::recursive_systematic(g1, g2)?,
        };
        let channel = Interleaver::new(spec.codeword_length, spec.interleaver_seed);
        let inner = Interleaver::new(spec.info_length(), spec.turbo_interleaver_seed);
        Ok(Self {
            spec,
            trellis,
            channel,
            inner,
        })
    }

    pub fn spec(&self) -> &CodecSpec {
        &self.spec
    }

    pub fn info_length(&self) -> usize {
        self.spec.info_length()
    }

    pub fn codeword_length(&self) -> usize {
        self.spec.codeword_length
    }

    /// Coded bits in encoder order (before channel interleaving).
    pub fn encode_bits(&self, info: &[u8]) -> Result<Vec<u8>> {
        let k = self.info_length();
        if info.len() != k {
            return Err(Error::Parameter(format!(
                "expected {k} information bits, got {}",
                info.len()
            )));
        }
        match self.spec.family {
            CodecFamily::Convolutional => {
                let mut padded = info.to_vec();
                padded.resize(k + self.trellis.memory, 0);
                Ok(self.trellis.encode(&padded).0)
            }
            CodecFamily::Turbo => {
                let (c1, _) = self.trellis.encode(info);
                let (c2, _) = self.trellis.encode(&self.inner.interleave(info)?);
                let mut out = Vec::with_capacity(2 * k);
                for t in 0..k {
                    out.push(info[t] & 1);
                    out.push(if t % 2 == 0 {
                        c1[2 * t + 1]
                    } else {
                        c2[2 * t + 1]
                    });
                }
                Ok(out)
            }
        }
    }

    /// Interleaved ±1 channel symbols.
    pub fn encode(&self, info: &[u8]) -> Result<Vec<f64>> {
        let bits = self.encode_bits(info)?;
        let symbols: Vec<f64> = bits
            .iter()
            .map(|&b| if b == 0 { 1.0 } else { -1.0 })
            .collect();
        self.channel.interleave(&symbols)
    }

    /// Decodes real observations `z = b + n` of the interleaved channel
    /// symbols, `noise_variance` being the complex variance of `n`. A
    /// nonpositive variance is treated as "scale unknown"; both decoders are
    /// invariant to a common LLR scale.
    pub fn decode(&self, z: &[f64], noise_variance: f64) -> Result<Decoded> {
        let scale = if noise_variance > 0.0 && noise_variance.is_finite() {
            4.0 / noise_variance
        } else {
            1.0
        };
        let llr: Vec<f64> = z.iter().map(|v| v * scale).collect();
        self.decode_llr(&llr)
    }

    /// Decodes interleaved channel LLRs.
    pub fn decode_llr(&self, llr: &[f64]) -> Result<Decoded> {
        if llr.len() != self.spec.codeword_length {
            return Err(Error::Parameter(format!(
                "expected {} soft values, got {}",
                self.spec.codeword_length,
                llr.len()
            )));
        }
        let llr = self.channel.deinterleave(llr)?;
        let k = self.info_length();
        let info = match self.spec.family {
            CodecFamily::Convolutional => {
                let mut bits = viterbi(&self.trellis, &llr, true);
                bits.truncate(k);
                bits
            }
            CodecFamily::Turbo => {
                let sys: Vec<f64> = llr.iter().step_by(2).copied().collect();
                let mut p1 = vec![0.0; k];
                let mut p2 = vec![0.0; k];
                for t in 0..k {
                    let p = llr[2 * t + 1];
                    if t % 2 == 0 {
                        p1[t] = p;
                    } else {
                        p2[t] = p;
                    }
                }
                // parity 2 is indexed by the position in the permuted sequence
                let post = turbo_decode(
                    &self.trellis,
                    &self.inner,
                    &sys,
                    &p1,
                    &p2,
                    self.spec.iterations,
                )?;
                post.iter().map(|&l| u8::from(l < 0.0)).collect()
            }
        };
        let symbols = self.encode(&info)?;
        Ok(Decoded { info, symbols })
    }
}
