//! Stream-split Monte Carlo over generator draws.
//!
//! The sample of size `n` is cut into `streams` contiguous blocks. Block `s`
//! has `n(s+1)/S - ns/S` rows and draws from its own ChaCha stream, so the
//! rows and the reduction order depend only on `(seed, n, streams)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::Generator;
use crate::dependence::{Estimate, McConfig};
use crate::error::{Error, Result};

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn stream_len(samples: usize, streams: usize, s: usize) -> usize {
    let n = samples as u128;
    let k = streams as u128;
    let s = s as u128;
    (n * (s + 1) / k - n * s / k) as usize
}

/// Running mean and centred sum of squares.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub count: u64,
    pub mean: f64,
    pub m2: f64,
}

impl Moments {
    #[inline]
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Moments) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let na = self.count as f64;
        let nb = other.count as f64;
        let n = na + nb;
        let delta = other.mean - self.mean;
        self.mean += delta * (nb / n);
        self.m2 += other.m2 + delta * delta * (na * nb / n);
        self.count += other.count;
    }

    pub fn sample_variance(&self) -> f64 {
        if self.count < 2 {
            return f64::NAN;
        }
        (self.m2 / (self.count - 1) as f64).max(0.0)
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        (self.sample_variance() / self.count as f64).sqrt()
    }

    pub fn estimate(&self) -> Estimate {
        Estimate { value: self.mean, se: Some(self.std_error()) }
    }
}

/// A materialized sample: one flattened row block per stream.
/// With antithetic sampling every draw occupies two consecutive rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleStore {
    dim: usize,
    antithetic: bool,
    blocks: Vec<Vec<f64>>,
}

impl SampleStore {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn antithetic(&self) -> bool {
        self.antithetic
    }

    /// All rows in stream order.
    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.blocks.iter().flat_map(move |b| b.chunks_exact(self.dim))
    }
}

fn check(gen: &Generator, cfg: &McConfig) -> Result<()> {
    cfg.validate()?;
    if cfg.antithetic && !gen.supports_antithetic() {
        return Err(Error::Unsupported(format!(
            "antithetic sampling is not available for the {} generator",
            gen.kind_name()
        )));
    }
    Ok(())
}

fn draw_block(gen: &Generator, cfg: &McConfig, s: usize) -> Vec<f64> {
    let d = gen.dim();
    let len = stream_len(cfg.samples, cfg.streams, s);
    let width = if cfg.antithetic { 2 * d } else { d };
    let mut rng = stream_rng(cfg.seed, s as u64);
    let mut block = vec![0.0; len * width];
    for row in block.chunks_exact_mut(width) {
        if cfg.antithetic {
            let (a, b) = row.split_at_mut(d);
            gen.sample_pair(&mut rng, a, b);
        } else {
            gen.sample(&mut rng, row);
        }
    }
    block
}

pub fn materialize(gen: &Generator, cfg: &McConfig) -> Result<SampleStore> {
    check(gen, cfg)?;
    let blocks = (0..cfg.streams).into_par_iter().map(|s| draw_block(gen, cfg, s)).collect();
    Ok(SampleStore { dim: gen.dim(), antithetic: cfg.antithetic, blocks })
}

/// Reduce the per-row outputs of `f` over one stream block.
fn reduce_block<F>(
    rows: &mut dyn FnMut(&mut dyn FnMut(&[f64], Option<&[f64]>)),
    outputs: usize,
    f: &F,
) -> Vec<Moments>
where
    F: Fn(&[f64], &mut [f64]) + Sync,
{
    let mut acc = vec![Moments::default(); outputs];
    let mut out_a = vec![0.0; outputs];
    let mut out_b = vec![0.0; outputs];
    rows(&mut |a, b| {
        f(a, &mut out_a);
        if let Some(b) = b {
            f(b, &mut out_b);
            for ((m, x), y) in acc.iter_mut().zip(&out_a).zip(&out_b) {
                m.push(0.5 * (x + y));
            }
        } else {
            for (m, x) in acc.iter_mut().zip(&out_a) {
                m.push(*x);
            }
        }
    });
    acc
}

/// Per-stream moments of the `outputs` values that `f` writes for each draw.
pub fn stream_moments<F>(
    gen: &Generator,
    cfg: &McConfig,
    store: Option<&SampleStore>,
    outputs: usize,
    f: F,
) -> Result<Vec<Vec<Moments>>>
where
    F: Fn(&[f64], &mut [f64]) + Sync,
{
    check(gen, cfg)?;
    let d = gen.dim();
    if let Some(store) = store {
        if store.dim != d || store.antithetic != cfg.antithetic || store.blocks.len() != cfg.streams {
            return Err(Error::InvalidParameter("sample store does not match the configuration".into()));
        }
    }
    let per_stream = (0..cfg.streams)
        .into_par_iter()
        .map(|s| {
            if let Some(store) = store {
                let block = &store.blocks[s];
                let width = if cfg.antithetic { 2 * d } else { d };
                reduce_block(
                    &mut |visit| {
                        for row in block.chunks_exact(width) {
                            if cfg.antithetic {
                                let (a, b) = row.split_at(d);
                                visit(a, Some(b));
                            } else {
                                visit(row, None);
                            }
                        }
                    },
                    outputs,
                    &f,
                )
            } else {
                let len = stream_len(cfg.samples, cfg.streams, s);
                let mut rng = stream_rng(cfg.seed, s as u64);
                let mut a = vec![0.0; d];
                let mut b = vec![0.0; d];
                reduce_block(
                    &mut |visit| {
                        for _ in 0..len {
                            if cfg.antithetic {
                                gen.sample_pair(&mut rng, &mut a, &mut b);
                                visit(&a, Some(&b));
                            } else {
                                gen.sample(&mut rng, &mut a);
                                visit(&a, None);
                            }
                        }
                    },
                    outputs,
                    &f,
                )
            }
        })
        .collect();
    Ok(per_stream)
}

/// Sample means of the outputs of `f` with standard errors, merged in
/// stream order. Needs at least two draws.
pub fn estimate_means<F>(
    gen: &Generator,
    cfg: &McConfig,
    store: Option<&SampleStore>,
    outputs: usize,
    f: F,
) -> Result<Vec<Estimate>>
where
    F: Fn(&[f64], &mut [f64]) + Sync,
{
    if cfg.samples < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: cfg.samples });
    }
    let per_stream = stream_moments(gen, cfg, store, outputs, f)?;
    let mut total = vec![Moments::default(); outputs];
    for block in &per_stream {
        for (t, m) in total.iter_mut().zip(block) {
            t.merge(m);
        }
    }
    Ok(total.iter().map(Moments::estimate).collect())
}
