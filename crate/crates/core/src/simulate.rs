//! Sampling from the SBM and simulating the achievability test channel.
//!
//! The reconstruction `Ĝ` is produced edge by edge from the forward channel
//! `P(Ê | E, labels)`, obtained by Bayes inversion of a backward binary
//! symmetric channel with crossover `d*_{l,m}` and reproduction marginal
//! `q1 = (w - d*) / (1 - 2 d*)`.
//!
//! Randomness is counter based: the uniform consumed by node `i` or pair `e`
//! in trial `t` depends only on `(seed, t, purpose, index)`, so results do not
//! depend on how trials are scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::{pair_count, pairs, Graph, LabelVector, SbmParams};
use crate::numerics::SymMatrix;
use crate::rdf::sbm_conditional_rdf;
use crate::waterfill::{cap, solve_sbm_waterfill, SbmAllocation};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Purpose {
    Labels = 0,
    Graph = 1,
    Channel = 2,
}

/// Seed plus trial number selecting a family of independent streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RngSpec {
    pub seed: u64,
    pub trial: u64,
}

impl RngSpec {
    pub fn new(seed: u64) -> Self {
        Self { seed, trial: 0 }
    }

    pub fn with_trial(self, trial: u64) -> Self {
        Self { trial, ..self }
    }

    /// Stream positioned at draw 0; draw `i` is a function of
    /// `(seed, trial, purpose, i)` alone.
    fn stream(&self, purpose: Purpose) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream((self.trial << 2) | purpose as u64);
        rng.set_word_pos(0);
        rng
    }
}

/// I.i.d. community labels from the prior.
pub fn sample_labels(params: &SbmParams, rng: &RngSpec) -> LabelVector {
    let prior = params.prior().as_slice();
    let last_positive = prior.iter().rposition(|&p| p > 0.0).unwrap_or(0);
    let mut stream = rng.stream(Purpose::Labels);
    let labels = (0..params.n())
        .map(|_| {
            let u: f64 = stream.gen();
            let mut acc = 0.0;
            for (l, &p) in prior.iter().enumerate() {
                acc += p;
                if p > 0.0 && u < acc {
                    return l;
                }
            }
            last_positive
        })
        .collect();
    LabelVector::new(labels, params.k()).expect("labels drawn within range")
}

/// Independent edges with probability `w[x_i][x_j]`.
pub fn sample_graph(labels: &LabelVector, w: &SymMatrix, rng: &RngSpec) -> Result<Graph> {
    if labels.k() != w.order() {
        return Err(Error::DimensionMismatch {
            expected: w.order(),
            found: labels.k(),
        });
    }
    let n = labels.len();
    let mut stream = rng.stream(Purpose::Graph);
    let mut graph = Graph::empty(n);
    for (e, (i, j)) in pairs(n).enumerate() {
        let u: f64 = stream.gen();
        if u < w.get(labels.get(i), labels.get(j)) {
            graph.set_pair(e, true);
        }
    }
    Ok(graph)
}

/// Forward channel of one label pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChannelPair {
    pub crossover: f64,
    /// Reproduction marginal `P(Ê = 1)`.
    pub q1: f64,
    /// `P(Ê = 1 | E = 1)`.
    pub keep_one: f64,
    /// `P(Ê = 1 | E = 0)`.
    pub raise_zero: f64,
}

impl ChannelPair {
    /// Invert the backward BSC with crossover `d` for an edge probability `w`.
    pub fn new(w: f64, d: f64) -> Result<Self> {
        let c = cap(w);
        if !(d >= 0.0) || d > c + 1e-12 {
            return Err(Error::InvalidParams(format!(
                "crossover {d} must lie in [0, min(w, 1-w)] = [0, {c}]"
            )));
        }
        let d = d.min(c);
        if w <= 0.0 || w >= 1.0 || d == 0.0 {
            return Ok(Self {
                crossover: 0.0,
                q1: w,
                keep_one: 1.0,
                raise_zero: 0.0,
            });
        }
        if 1.0 - 2.0 * d <= 1e-15 {
            // w = d = 1/2: reproduction independent of the source
            return Ok(Self {
                crossover: 0.5,
                q1: 0.5,
                keep_one: 0.5,
                raise_zero: 0.5,
            });
        }
        let q1 = (w - d) / (1.0 - 2.0 * d);
        let keep_one = (1.0 - d) * q1 / w;
        let raise_zero = d * q1 / (1.0 - w);
        for (name, v) in [("q1", q1), ("P(1|1)", keep_one), ("P(1|0)", raise_zero)] {
            if !(-1e-12..=1.0 + 1e-12).contains(&v) {
                return Err(Error::InvalidParams(format!(
                    "test channel {name} = {v} is not a probability (w = {w}, d = {d})"
                )));
            }
        }
        Ok(Self {
            crossover: d,
            q1: q1.clamp(0.0, 1.0),
            keep_one: keep_one.clamp(0.0, 1.0),
            raise_zero: raise_zero.clamp(0.0, 1.0),
        })
    }

    /// `P(E != Ê)` implied by the forward probabilities and prior `w`.
    pub fn flip_probability(&self, w: f64) -> f64 {
        w * (1.0 - self.keep_one) + (1.0 - w) * self.raise_zero
    }
}

/// Test channel for every label pair of an SBM allocation.
#[derive(Debug, Clone, PartialEq)]
pub struct TestChannel {
    k: usize,
    pairs: Vec<ChannelPair>,
}

impl TestChannel {
    pub fn new(w: &SymMatrix, dstar: &SymMatrix) -> Result<Self> {
        if w.order() != dstar.order() {
            return Err(Error::DimensionMismatch {
                expected: w.order(),
                found: dstar.order(),
            });
        }
        let k = w.order();
        let mut pairs = Vec::with_capacity(k * k);
        for l in 0..k {
            for m in 0..k {
                pairs.push(ChannelPair::new(w.get(l, m), dstar.get(l, m))?);
            }
        }
        Ok(Self { k, pairs })
    }

    pub fn pair(&self, l: usize, m: usize) -> &ChannelPair {
        &self.pairs[l * self.k + m]
    }
}

/// Draw `Ĝ` from the forward test channel given `G` and the labels.
pub fn apply_test_channel(
    graph: &Graph,
    labels: &LabelVector,
    alloc: &SbmAllocation,
    w: &SymMatrix,
    rng: &RngSpec,
) -> Result<Graph> {
    let channel = TestChannel::new(w, &alloc.dstar)?;
    apply_channel(graph, labels, &channel, rng)
}

fn apply_channel(
    graph: &Graph,
    labels: &LabelVector,
    channel: &TestChannel,
    rng: &RngSpec,
) -> Result<Graph> {
    let n = graph.n();
    if labels.len() != n {
        return Err(Error::GraphSizeMismatch {
            left: n,
            right: labels.len(),
        });
    }
    if labels.k() != channel.k {
        return Err(Error::DimensionMismatch {
            expected: channel.k,
            found: labels.k(),
        });
    }
    let mut stream = rng.stream(Purpose::Channel);
    let mut out = Graph::empty(n);
    for (e, (i, j)) in pairs(n).enumerate() {
        let u: f64 = stream.gen();
        let pair = channel.pair(labels.get(i), labels.get(j));
        let p_one = if graph.has_pair(e) {
            pair.keep_one
        } else {
            pair.raise_zero
        };
        if u < p_one {
            out.set_pair(e, true);
        }
    }
    Ok(out)
}

/// Number of vertex pairs whose edge indicators differ.
pub fn hamming_distortion(g1: &Graph, g2: &Graph) -> Result<u64> {
    if g1.n() != g2.n() {
        return Err(Error::GraphSizeMismatch {
            left: g1.n(),
            right: g2.n(),
        });
    }
    Ok(g1
        .words()
        .iter()
        .zip(g2.words())
        .map(|(a, b)| (a ^ b).count_ones() as u64)
        .sum())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SimOptions {
    /// Worker threads; `None` uses the global rayon pool.
    pub threads: Option<usize>,
}

/// Empirical flips of one label pair `(l, m)`, `l <= m`, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairFlipStat {
    pub l: usize,
    pub m: usize,
    pub edges: u64,
    pub flips: u64,
    pub flip_rate: f64,
    pub dstar: f64,
    /// Binomial standard deviation of `flip_rate` under `dstar`.
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    pub trials: usize,
    pub seed: u64,
    pub mean_distortion: f64,
    /// `None` for a single trial.
    pub stderr: Option<f64>,
    pub target_distortion: f64,
    pub analytic_rate: f64,
    pub mu: f64,
    pub pair_stats: Vec<PairFlipStat>,
}

struct TrialOutcome {
    distortion: u64,
    pair_edges: Vec<u64>,
    pair_flips: Vec<u64>,
}

fn run_trial(params: &SbmParams, channel: &TestChannel, rng: RngSpec) -> Result<TrialOutcome> {
    let k = params.k();
    let labels = sample_labels(params, &rng);
    let graph = sample_graph(&labels, params.connection(), &rng)?;
    let recon = apply_channel(&graph, &labels, channel, &rng)?;
    let mut pair_edges = vec![0u64; k * k];
    let mut pair_flips = vec![0u64; k * k];
    for (e, (i, j)) in pairs(params.n()).enumerate() {
        let (a, b) = (labels.get(i), labels.get(j));
        let idx = a.min(b) * k + a.max(b);
        pair_edges[idx] += 1;
        if graph.has_pair(e) != recon.has_pair(e) {
            pair_flips[idx] += 1;
        }
    }
    Ok(TrialOutcome {
        distortion: hamming_distortion(&graph, &recon)?,
        pair_edges,
        pair_flips,
    })
}

/// Monte Carlo estimate of `E[d(G, Ĝ)]` under the test channel at budget `d`.
pub fn monte_carlo_distortion(
    params: &SbmParams,
    d: f64,
    trials: usize,
    rng: RngSpec,
) -> Result<SimReport> {
    monte_carlo_distortion_with(params, d, trials, rng, SimOptions::default())
}

pub fn monte_carlo_distortion_with(
    params: &SbmParams,
    d: f64,
    trials: usize,
    rng: RngSpec,
    opts: SimOptions,
) -> Result<SimReport> {
    if trials == 0 {
        return Err(Error::InvalidParams("trials must be at least 1".into()));
    }
    let alloc = solve_sbm_waterfill(params, d)?;
    let analytic_rate = sbm_conditional_rdf(params, d)?.rate_bits;
    let channel = TestChannel::new(params.connection(), &alloc.dstar)?;

    let run_all = || -> Result<Vec<TrialOutcome>> {
        (0..trials as u64)
            .into_par_iter()
            .map(|t| run_trial(params, &channel, rng.with_trial(t)))
            .collect()
    };
    let outcomes = match opts.threads {
        Some(threads) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .build()
            .map_err(|e| Error::InvalidParams(format!("thread pool: {e}")))?
            .install(run_all)?,
        None => run_all()?,
    };

    let k = params.k();
    let total: u64 = outcomes.iter().map(|o| o.distortion).sum();
    let mean = total as f64 / trials as f64;
    let stderr = (trials > 1).then(|| {
        let ss: f64 = outcomes
            .iter()
            .map(|o| (o.distortion as f64 - mean).powi(2))
            .sum();
        (ss / (trials - 1) as f64 / trials as f64).sqrt()
    });

    let mut pair_stats = Vec::new();
    for l in 0..k {
        for m in l..k {
            let idx = l * k + m;
            let edges: u64 = outcomes.iter().map(|o| o.pair_edges[idx]).sum();
            let flips: u64 = outcomes.iter().map(|o| o.pair_flips[idx]).sum();
            let dstar = channel.pair(l, m).crossover;
            let (flip_rate, sigma) = if edges > 0 {
                (
                    flips as f64 / edges as f64,
                    (dstar * (1.0 - dstar) / edges as f64).sqrt(),
                )
            } else {
                (0.0, 0.0)
            };
            pair_stats.push(PairFlipStat {
                l: l + 1,
                m: m + 1,
                edges,
                flips,
                flip_rate,
                dstar,
                sigma,
            });
        }
    }

    debug_assert_eq!(
        pair_count(params.n()) as u64 * trials as u64,
        pair_stats.iter().map(|s| s.edges).sum::<u64>()
    );

    Ok(SimReport {
        trials,
        seed: rng.seed,
        mean_distortion: mean,
        stderr,
        target_distortion: d,
        analytic_rate,
        mu: alloc.mu,
        pair_stats,
    })
}
