use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};

use crate::error::{Error, Result};
use crate::rng::Stream;

/// Seeded uniform random permutation. Seed 0 is the identity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interleaver {
    /// `out[i] = in[order[i]]`.
    order: Vec<usize>,
}

impl Interleaver {
    pub fn new(len: usize, seed: u64) -> Self {
        let mut order: Vec<usize> = (0..len).collect();
        if seed != 0 {
            let mut rng = Stream::seed_from_u64(seed);
            for i in (1..len).rev() {
                let j = rng.random_range(0..=i);
                order.swap(i, j);
            }
        }
        Self { order }
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    fn check(&self, len: usize) -> Result<()> {
        if len != self.order.len() {
            return Err(Error::Parameter(format!(
                "interleaver of length {} applied to {len} values",
                self.order.len()
            )));
        }
        Ok(())
    }

    pub fn interleave<T: Copy>(&self, input: &[T]) -> Result<Vec<T>> {
        self.check(input.len())?;
        Ok(self.order.iter().map(|&i| input[i]).collect())
    }

    pub fn deinterleave<T: Copy>(&self, input: &[T]) -> Result<Vec<T>> {
        self.check(input.len())?;
        let mut out = input.to_vec();
        for (i, &src) in self.order.iter().enumerate() {
            out[src] = input[i];
        }
        Ok(out)
    }
}
