use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Parses an octal generator such as `0o35` into its taps, most significant
/// (current input) first.
fn taps(generator: u32, constraint: usize) -> Vec<u8> {
    (0..constraint)
        .map(|i| ((generator >> (constraint - 1 - i)) & 1) as u8)
        .collect()
}

fn constraint_length(generators: &[u32]) -> usize {
    generators
        .iter()
        .map(|g| 32 - g.leading_zeros() as usize)
        .max()
        .unwrap_or(1)
}

/// State-transition table of a binary rate-1/n trellis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trellis {
    pub memory: usize,
    pub states: usize,
    pub outputs: usize,
    /// `next[state·2 + input]`.
    pub next: Vec<usize>,
    /// `out[(state·2 + input)·outputs + j]`.
    pub out: Vec<u8>,
}

impl Trellis {
    /// Feedforward encoder with one output per generator.
    pub fn feedforward(generators: &[u32]) -> Result<Self> {
        if generators.is_empty() || generators.contains(&0) {
            return Err(Error::Parameter(format!(
                "invalid generators {generators:?}"
            )));
        }
        let k = constraint_length(generators);
        let memory = k - 1;
        let states = 1 << memory;
        let g: Vec<Vec<u8>> = generators.iter().map(|&x| taps(x, k)).collect();
        let mut next = vec![0; states * 2];
        let mut out = vec![0u8; states * 2 * generators.len()];
        for s in 0..states {
            for u in 0..2usize {
                // register: current input followed by the last `memory` inputs,
                // most recent in the highest state bit
                let reg: Vec<u8> = core::iter::once(u as u8)
                    .chain((0..memory).map(|i| ((s >> (memory - 1 - i)) & 1) as u8))
                    .collect();
                for (j, gj) in g.iter().enumerate() {
                    let bit = reg.iter().zip(gj).fold(0u8, |acc, (r, t)| acc ^ (r & t));
                    out[(s * 2 + u) * generators.len() + j] = bit;
                }
                next[s * 2 + u] = (u << (memory - 1)) | (s >> 1);
            }
        }
        Ok(Self {
            memory,
            states,
            outputs: generators.len(),
            next,
            out,
        })
    }

    /// Recursive systematic encoder with feedback polynomial `feedback` and
    /// parity polynomial `forward`. Outputs are (systematic, parity).
    pub fn recursive_systematic(feedback: u32, forward: u32) -> Result<Self> {
        if feedback & 1 == 0 || forward == 0 {
            return Err(Error::Parameter(format!(
                "invalid recursive generators ({feedback:o}, {forward:o})"
            )));
        }
        let k = constraint_length(&[feedback, forward]);
        let memory = k - 1;
        let states = 1 << memory;
        let fb = taps(feedback, k);
        let ff = taps(forward, k);
        let mut next = vec![0; states * 2];
        let mut out = vec![0u8; states * 4];
        for s in 0..states {
            let regs: Vec<u8> = (0..memory)
                .map(|i| ((s >> (memory - 1 - i)) & 1) as u8)
                .collect();
            for u in 0..2usize {
                let w = regs
                    .iter()
                    .zip(&fb[1..])
                    .fold(u as u8, |acc, (r, t)| acc ^ (r & t));
                let p = regs
                    .iter()
                    .zip(&ff[1..])
                    .fold(w & ff[0], |acc, (r, t)| acc ^ (r & t));
                out[(s * 2 + u) * 2] = u as u8;
                out[(s * 2 + u) * 2 + 1] = p;
                next[s * 2 + u] = ((w as usize) << (memory - 1)) | (s >> 1);
            }
        }
        Ok(Self {
            memory,
            states,
            outputs: 2,
            next,
            out,
        })
    }

    #[inline]
    pub fn output(&self, state: usize, input: usize) -> &[u8] {
        let i = (state * 2 + input) * self.outputs;
        &self.out[i..i + self.outputs]
    }

    /// Encodes from the zero state; returns outputs and the final state.
    pub fn encode(&self, bits: &[u8]) -> (Vec<u8>, usize) {
        let mut state = 0;
        let mut out = Vec::with_capacity(bits.len() * self.outputs);
        for &b in bits {
            let u = (b & 1) as usize;
            out.extend_from_slice(self.output(state, u));
            state = self.next[state * 2 + u];
        }
        (out, state)
    }
}
