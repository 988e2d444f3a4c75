use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::{Float, Zero};

use crate::error::{Error, Result};
use crate::linalg::{SymMatrix, C64};
use crate::model::{ReceivedFrame, SpreadingEnsemble};

/// Which symbols multiplied the codes when the matrix was assembled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymbolSource {
    /// Transmitted symbols (`S`).
    Truth,
    /// Decision feedback (`Ŝ`), possibly with true training symbols.
    Feedback,
    /// Training periods only.
    Training,
}

/// Stacked code matrix: rows are the `N` chips of each used period, column
/// `i = k·L + l` holds `b_k(m)·s_kl(m)` at period `m`.
///
/// Every entry is `±1/√N`, so columns are stored as packed sign bits and the
/// Gram matrix is computed exactly from XOR/popcount.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedMatrix {
    rows: usize,
    cols: usize,
    periods: Vec<usize>,
    source: SymbolSource,
    words: usize,
    /// Column-major packed signs: bit set means a negative entry.
    bits: Vec<u64>,
    amplitude: f64,
}

impl StackedMatrix {
    /// Assembles the matrix from `codes` and per-period symbols
    /// (`symbols[t·K + k]`) over the listed periods, in order.
    pub fn build(
        codes: &SpreadingEnsemble,
        symbols: &[f64],
        periods: &[usize],
        source: SymbolSource,
    ) -> Result<Self> {
        if periods.is_empty() {
            return Err(Error::Parameter(
                "stacked matrix needs at least one period".into(),
            ));
        }
        let (k, l, n) = (codes.users, codes.paths, codes.chips);
        if symbols.len() != k * codes.periods {
            return Err(Error::Config(format!(
                "expected {} symbols, got {}",
                k * codes.periods,
                symbols.len()
            )));
        }
        if let Some(&bad) = periods.iter().find(|&&p| p >= codes.periods) {
            return Err(Error::Parameter(format!(
                "period {bad} outside 0..{}",
                codes.periods
            )));
        }
        let rows = n * periods.len();
        let cols = k * l;
        let words = rows.div_ceil(64);
        let mut bits = vec![0u64; words * cols];
        for user in 0..k {
            for path in 0..l {
                let col = user * l + path;
                let dst = &mut bits[col * words..(col + 1) * words];
                for (j, &t) in periods.iter().enumerate() {
                    let negative_symbol = symbols[t * k + user] < 0.0;
                    for (c, &s) in codes.code(user, path, t).iter().enumerate() {
                        if (s < 0.0) != negative_symbol {
                            let row = j * n + c;
                            dst[row / 64] |= 1u64 << (row % 64);
                        }
                    }
                }
            }
        }
        Ok(Self {
            rows,
            cols,
            periods: periods.to_vec(),
            source,
            words,
            bits,
            amplitude: 1.0 / (n as f64).sqrt(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn periods(&self) -> &[usize] {
        &self.periods
    }

    pub fn source(&self) -> SymbolSource {
        self.source
    }

    fn column_bits(&self, col: usize) -> &[u64] {
        &self.bits[col * self.words..(col + 1) * self.words]
    }

    #[inline]
    pub fn value(&self, row: usize, col: usize) -> f64 {
        let w = self.column_bits(col)[row / 64];
        if (w >> (row % 64)) & 1 == 1 {
            -self.amplitude
        } else {
            self.amplitude
        }
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.value(r, col)).collect()
    }

    /// `SᵀS`, exact.
    pub fn gram(&self) -> SymMatrix {
        let n = self.cols;
        let mut g = SymMatrix::zeros(n);
        let scale = self.amplitude * self.amplitude;
        for i in 0..n {
            let ci = self.column_bits(i);
            g.set(i, i, self.rows as f64 * scale);
            for j in (i + 1)..n {
                let cj = self.column_bits(j);
                let disagree: u32 = ci.iter().zip(cj).map(|(a, b)| (a ^ b).count_ones()).sum();
                let v = (self.rows as f64 - 2.0 * disagree as f64) * scale;
                g.set(i, j, v);
                g.set(j, i, v);
            }
        }
        g
    }

    /// `Sᵀx` for a stacked complex vector of length `rows`.
    pub fn transpose_mul(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.rows);
        (0..self.cols)
            .map(|col| {
                let bits = self.column_bits(col);
                let mut acc = C64::zero();
                for (r, v) in x.iter().enumerate() {
                    if (bits[r / 64] >> (r % 64)) & 1 == 1 {
                        acc -= v;
                    } else {
                        acc += v;
                    }
                }
                acc * self.amplitude
            })
            .collect()
    }

    /// `S a` for a complex vector of length `cols`.
    pub fn mul(&self, a: &[C64]) -> Vec<C64> {
        assert_eq!(a.len(), self.cols);
        let mut out = vec![C64::zero(); self.rows];
        for (col, &g) in a.iter().enumerate() {
            let bits = self.column_bits(col);
            let g = g * self.amplitude;
            for (r, o) in out.iter_mut().enumerate() {
                if (bits[r / 64] >> (r % 64)) & 1 == 1 {
                    *o -= g;
                } else {
                    *o += g;
                }
            }
        }
        out
    }

    /// Stacks the received samples of the matrix's periods.
    pub fn stack_received(&self, received: &ReceivedFrame) -> Vec<C64> {
        self.stack(received, false)
    }

    /// Stacks the noise record of the matrix's periods.
    pub fn stack_noise(&self, received: &ReceivedFrame) -> Vec<C64> {
        self.stack(received, true)
    }

    fn stack(&self, received: &ReceivedFrame, noise: bool) -> Vec<C64> {
        let mut out = Vec::with_capacity(self.rows);
        for &t in &self.periods {
            let src = if noise {
                received.noise_period(t)
            } else {
                received.period(t)
            };
            out.extend_from_slice(src);
        }
        debug_assert_eq!(out.len(), self.rows);
        out
    }

    /// Same-shaped difference `self − other` as dense columns.
    pub fn difference(&self, other: &StackedMatrix) -> Result<Vec<Vec<f64>>> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Config(
                "stacked matrices have different shapes".into(),
            ));
        }
        Ok((0..self.cols)
            .map(|c| {
                (0..self.rows)
                    .map(|r| self.value(r, c) - other.value(r, c))
                    .collect()
            })
            .collect())
    }
}

/// Periods `0..M`.
pub fn all_periods(periods: usize) -> Vec<usize> {
    (0..periods).collect()
}

/// The training periods of a frame.
pub fn training_periods(training: &[bool]) -> Vec<usize> {
    training
        .iter()
        .enumerate()
        .filter_map(|(t, &is)| is.then_some(t))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SystemConfig;
    use crate::model::{generate_codes, generate_symbols};
    use crate::rng::trial_stream;

    #[test]
    fn two_period_single_column() {
        let cfg = SystemConfig::new(1, 8, 1, 2);
        let codes = generate_codes(&cfg, &mut trial_stream(0, "s", 0));
        let s = StackedMatrix::build(&codes, &[1.0, -1.0], &[0, 1], SymbolSource::Truth).unwrap();
        let col = s.column(0);
        for c in 0..8 {
            assert_eq!(col[c], codes.code(0, 0, 0)[c]);
            assert_eq!(col[8 + c], -codes.code(0, 0, 1)[c]);
        }
    }

    #[test]
    fn gram_matches_dense_product() {
        let cfg = SystemConfig::new(3, 13, 2, 5);
        let mut st = trial_stream(1, "s", 0);
        let codes = generate_codes(&cfg, &mut st);
        let sym = generate_symbols(&cfg, &mut st);
        let s = StackedMatrix::build(&codes, &sym.symbols, &all_periods(5), SymbolSource::Truth)
            .unwrap();
        let g = s.gram();
        let cols: Vec<Vec<f64>> = (0..6).map(|c| s.column(c)).collect();
        for i in 0..6 {
            // unit-norm codes over M periods give diagonal M
            assert!((g.get(i, i) - 5.0).abs() < 1e-12);
            for j in 0..6 {
                let d: f64 = cols[i].iter().zip(&cols[j]).map(|(a, b)| a * b).sum();
                assert!((g.get(i, j) - d).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn one_flip_changes_only_that_users_block() {
        let cfg = SystemConfig::new(3, 8, 2, 4);
        let mut st = trial_stream(2, "s", 0);
        let codes = generate_codes(&cfg, &mut st);
        let sym = generate_symbols(&cfg, &mut st);
        let mut fb = sym.symbols.clone();
        let (k, m) = (1, 2);
        fb[m * 3 + k] *= -1.0;
        let periods = all_periods(4);
        let s = StackedMatrix::build(&codes, &sym.symbols, &periods, SymbolSource::Truth).unwrap();
        let sh = StackedMatrix::build(&codes, &fb, &periods, SymbolSource::Feedback).unwrap();
        let ds = s.difference(&sh).unwrap();
        for (col, d) in ds.iter().enumerate() {
            for (row, &v) in d.iter().enumerate() {
                let (block, chip) = (row / 8, row % 8);
                let user = col / 2;
                if user == k && block == m {
                    let want = 2.0 * sym.symbol(k, m) * codes.code(k, col % 2, m)[chip];
                    assert!((v - want).abs() < 1e-12);
                } else {
                    assert_eq!(v, 0.0);
                }
            }
        }
    }

    #[test]
    fn empty_period_subset_is_rejected() {
        let cfg = SystemConfig::new(1, 4, 1, 2);
        let codes = generate_codes(&cfg, &mut trial_stream(0, "s", 0));
        assert!(matches!(
            StackedMatrix::build(&codes, &[1.0, 1.0], &[], SymbolSource::Truth),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn products_match_dense() {
        let cfg = SystemConfig::new(2, 70, 2, 2);
        let mut st = trial_stream(3, "s", 0);
        let codes = generate_codes(&cfg, &mut st);
        let sym = generate_symbols(&cfg, &mut st);
        let s = StackedMatrix::build(&codes, &sym.symbols, &[0, 1], SymbolSource::Truth).unwrap();
        let a: Vec<C64> = (0..4).map(|i| C64::new(i as f64, 1.0)).collect();
        let sa = s.mul(&a);
        for r in 0..s.rows() {
            let want: C64 = (0..4).map(|c| a[c] * s.value(r, c)).sum();
            assert!((sa[r] - want).norm() < 1e-12);
        }
        let st_x = s.transpose_mul(&sa);
        let g = s.gram();
        let ga = g.mul_vec(&a);
        for i in 0..4 {
            assert!((st_x[i] - ga[i]).norm() < 1e-10);
        }
    }
}
