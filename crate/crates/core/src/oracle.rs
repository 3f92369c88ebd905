//! Blahut–Arimoto verification of the closed forms.
//!
//! [`blahut_arimoto`] computes one point of the rate-distortion curve of a
//! finite source by alternating minimization of `I(X; Y) + s E[d(X, Y)]`.
//! The graph oracles build small product sources over edge indicators, run
//! it at a common slope and bisect the slope until the target distortion is
//! met. Nothing here touches the water-filling code, so agreement with the
//! closed forms is an independent check.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::{pair_count, pairs, SbmParams};
use crate::numerics::{
    check_probability, compensated_sum, h2, CompensatedSum, SymMatrix, PROB_SLACK,
};

/// Largest product source accepted by the graph oracles: `2^6` symbols.
pub const MAX_ORACLE_EDGES: usize = 6;
/// Node and community limits for [`conditional_sbm_oracle`].
pub const MAX_ORACLE_NODES: usize = 4;
pub const MAX_ORACLE_COMMUNITIES: usize = 2;

/// A finite source with a distortion matrix between source and reproduction
/// symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteRdProblem {
    source_probs: Vec<f64>,
    /// Row-major `sources x outputs`.
    distortion: Vec<f64>,
    outputs: usize,
}

impl DiscreteRdProblem {
    pub fn new(source_probs: Vec<f64>, distortion: Vec<Vec<f64>>) -> Result<Self> {
        if source_probs.is_empty() || distortion.len() != source_probs.len() {
            return Err(Error::DimensionMismatch {
                expected: source_probs.len(),
                found: distortion.len(),
            });
        }
        let source_probs = source_probs
            .into_iter()
            .map(|v| check_probability(v, "source probability"))
            .collect::<Result<Vec<_>>>()?;
        let sum = compensated_sum(source_probs.iter().copied());
        if (sum - 1.0).abs() > PROB_SLACK {
            return Err(Error::PriorSum { sum });
        }
        let outputs = distortion[0].len();
        if outputs == 0 {
            return Err(Error::InvalidParams(
                "reproduction alphabet is empty".into(),
            ));
        }
        let mut flat = Vec::with_capacity(outputs * distortion.len());
        for row in distortion {
            if row.len() != outputs {
                return Err(Error::DimensionMismatch {
                    expected: outputs,
                    found: row.len(),
                });
            }
            if let Some(bad) = row.iter().find(|v| !v.is_finite() || **v < 0.0) {
                return Err(Error::InvalidParams(format!(
                    "distortion entries must be finite and nonnegative, got {bad}"
                )));
            }
            flat.extend(row);
        }
        Ok(Self {
            source_probs,
            distortion: flat,
            outputs,
        })
    }

    /// Product of independent Bernoulli coordinates with Hamming distortion.
    /// Symbol `x` has bit `e` equal to coordinate `e`.
    pub fn bernoulli_product(edge_probs: &[f64]) -> Result<Self> {
        let m = edge_probs.len();
        if m == 0 || m > MAX_ORACLE_EDGES {
            return Err(Error::InstanceTooLarge(format!(
                "{m} edges; the product source supports 1..={MAX_ORACLE_EDGES}"
            )));
        }
        let edge_probs = edge_probs
            .iter()
            .map(|&v| check_probability(v, "edge probability"))
            .collect::<Result<Vec<_>>>()?;
        let size = 1usize << m;
        let source_probs = (0..size)
            .map(|x| {
                edge_probs
                    .iter()
                    .enumerate()
                    .map(|(e, &q)| if x >> e & 1 == 1 { q } else { 1.0 - q })
                    .product()
            })
            .collect();
        let distortion = (0..size)
            .flat_map(|x| (0..size).map(move |y| (x ^ y).count_ones() as f64))
            .collect();
        Ok(Self {
            source_probs,
            distortion,
            outputs: size,
        })
    }

    pub fn sources(&self) -> usize {
        self.source_probs.len()
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn source_probs(&self) -> &[f64] {
        &self.source_probs
    }

    fn d(&self, x: usize, y: usize) -> f64 {
        self.distortion[x * self.outputs + y]
    }

    /// Source entropy in bits.
    pub fn entropy_bits(&self) -> f64 {
        compensated_sum(
            self.source_probs
                .iter()
                .filter(|&&p| p > 0.0)
                .map(|&p| -p * p.log2()),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaOptions {
    /// Stop once the rate changes by less than this between sweeps (bits).
    pub tol: f64,
    pub max_iter: usize,
}

impl BaOptions {
    /// Budget used by the graph oracles. Targets whose water level equals a
    /// cap sit at a critical slope where the iteration converges like `1/t`,
    /// and reaching the rate tolerance there takes close to `10^5` sweeps.
    pub fn graph_oracle() -> Self {
        Self {
            max_iter: 200_000,
            ..Self::default()
        }
    }
}

impl Default for BaOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 10_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleResult {
    pub rate_bits: f64,
    pub achieved_distortion: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Lagrange slope the point was computed at (nats per unit distortion).
    pub slope: f64,
    /// Largest increase of `I + s D` (nats) between consecutive sweeps; the
    /// iteration is a descent method, so this stays at rounding level.
    pub max_objective_increase: f64,
}

struct BaRun {
    result: OracleResult,
    /// Final `Q(y|x)`, row-major.
    transition: Vec<f64>,
}

fn run_ba(problem: &DiscreteRdProblem, slope: f64, opts: BaOptions) -> BaRun {
    let (ns, no) = (problem.sources(), problem.outputs);
    let p = &problem.source_probs;
    let kernel: Vec<f64> = problem
        .distortion
        .iter()
        .map(|&d| (-slope * d).exp())
        .collect();
    let mut q = vec![1.0 / no as f64; no];
    let mut transition = vec![0.0; ns * no];
    let mut next_q = vec![0.0; no];

    let mut prev_rate = f64::NAN;
    let mut prev_objective = f64::INFINITY;
    let mut max_increase: f64 = 0.0;
    let mut rate_bits = 0.0;
    let mut distortion = 0.0;
    let mut converged = false;
    let mut iterations = 0;

    let mut log_z = vec![0.0; ns];
    while iterations < opts.max_iter {
        iterations += 1;
        for x in 0..ns {
            let row = &mut transition[x * no..(x + 1) * no];
            let krow = &kernel[x * no..(x + 1) * no];
            let mut z = 0.0;
            for y in 0..no {
                row[y] = q[y] * krow[y];
                z += row[y];
            }
            if z > 0.0 {
                row.iter_mut().for_each(|v| *v /= z);
            }
            log_z[x] = z.ln();
        }
        next_q.iter_mut().for_each(|v| *v = 0.0);
        let mut dist = 0.0;
        for x in 0..ns {
            if p[x] == 0.0 {
                continue;
            }
            for y in 0..no {
                let t = p[x] * transition[x * no + y];
                next_q[y] += t;
                dist += t * problem.d(x, y);
            }
        }
        distortion = dist;
        // With Q(y|x) = q(y) K(x,y) / Z(x):
        // I = sum_y q'(y) ln(q(y)/q'(y)) - s D - sum_x p(x) ln Z(x)
        let mut info = CompensatedSum::new();
        for y in 0..no {
            if next_q[y] > 0.0 {
                info.add(next_q[y] * (q[y] / next_q[y]).ln());
            }
        }
        info.add(-slope * distortion);
        for x in 0..ns {
            if p[x] > 0.0 {
                info.add(-p[x] * log_z[x]);
            }
        }
        let info_nats = info.value().max(0.0);
        rate_bits = info_nats / std::f64::consts::LN_2;
        let objective = info_nats + slope * distortion;
        if prev_objective.is_finite() {
            max_increase = max_increase.max(objective - prev_objective);
        }
        prev_objective = objective;
        std::mem::swap(&mut q, &mut next_q);
        if (rate_bits - prev_rate).abs() < opts.tol {
            converged = true;
            break;
        }
        prev_rate = rate_bits;
    }

    BaRun {
        result: OracleResult {
            rate_bits,
            achieved_distortion: distortion,
            iterations,
            converged,
            slope,
            max_objective_increase: max_increase,
        },
        transition,
    }
}

fn check_options(slope: f64, opts: BaOptions) -> Result<()> {
    if !slope.is_finite() || slope < 0.0 {
        return Err(Error::InvalidParams(format!(
            "slope must be finite and nonnegative, got {slope}"
        )));
    }
    if !(opts.tol > 0.0) || opts.max_iter == 0 {
        return Err(Error::InvalidParams(
            "tolerance must be positive and max_iter at least 1".into(),
        ));
    }
    Ok(())
}

/// One Blahut–Arimoto point `(D(s), R(s))` of the Lagrangian `R + s D`,
/// starting from the uniform reproduction distribution. Non-convergence is
/// reported through [`OracleResult::converged`].
pub fn blahut_arimoto(
    problem: &DiscreteRdProblem,
    slope: f64,
    opts: BaOptions,
) -> Result<OracleResult> {
    check_options(slope, opts)?;
    Ok(run_ba(problem, slope, opts).result)
}

/// Find the slope whose distortion is within `tol` of `target`.
/// `eval` must be nonincreasing in `s` and is queried at `s >= 0`. The root
/// is bracketed by doubling, then refined by regula falsi with the Illinois
/// modification, which keeps the bracket while converging superlinearly on
/// the smooth distortion-slope curve.
fn match_slope<T>(target: f64, tol: f64, eval: impl Fn(f64) -> (f64, T)) -> Result<(f64, T)> {
    const MAX_STEPS: usize = 200;
    let (d0, at_zero) = eval(0.0);
    if target >= d0 - tol {
        return Ok((0.0, at_zero));
    }
    let mut hi = 1.0;
    let mut at_hi = eval(hi);
    while at_hi.0 > target {
        if (at_hi.0 - target).abs() <= tol {
            return Ok((hi, at_hi.1));
        }
        hi *= 2.0;
        if hi > 1024.0 {
            return Err(Error::Infeasible {
                requested: target,
                boundary: at_hi.0,
            });
        }
        at_hi = eval(hi);
    }
    if (at_hi.0 - target).abs() <= tol {
        return Ok((hi, at_hi.1));
    }
    let mut lo = hi / 2.0;
    let mut at_lo = eval(lo);
    if at_lo.0 <= target {
        lo = 0.0;
        at_lo = (d0, at_zero);
    }
    // f > 0 at lo, f < 0 at hi
    let (mut f_lo, mut f_hi) = (at_lo.0 - target, at_hi.0 - target);
    let mut side = 0i8;
    for _ in 0..MAX_STEPS {
        let mut s = hi - f_hi * (hi - lo) / (f_hi - f_lo);
        if !(s > lo && s < hi) {
            s = 0.5 * (lo + hi);
        }
        if s <= lo || s >= hi {
            break;
        }
        let at = eval(s);
        let f = at.0 - target;
        if f.abs() <= tol {
            return Ok((s, at.1));
        }
        if f > 0.0 {
            lo = s;
            f_lo = f;
            at_lo = at;
            if side == 1 {
                f_hi *= 0.5;
            }
            side = 1;
        } else {
            hi = s;
            f_hi = f;
            at_hi = at;
            if side == -1 {
                f_lo *= 0.5;
            }
            side = -1;
        }
    }
    let (s, best) = if (at_hi.0 - target).abs() <= (at_lo.0 - target).abs() {
        (hi, at_hi)
    } else {
        (lo, at_lo)
    };
    if (best.0 - target).abs() <= tol {
        Ok((s, best.1))
    } else {
        Err(Error::NonConvergence {
            iterations: MAX_STEPS,
        })
    }
}

/// Oracle result for a product source, with the achieved per-coordinate
/// crossover probabilities `P(E_e != Ê_e)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointOracleResult {
    pub result: OracleResult,
    pub coordinate_distortion: Vec<f64>,
}

fn coordinate_distortion(problem: &DiscreteRdProblem, transition: &[f64], m: usize) -> Vec<f64> {
    let no = problem.outputs;
    (0..m)
        .map(|e| {
            let mut acc = CompensatedSum::new();
            for (x, &px) in problem.source_probs.iter().enumerate() {
                if px == 0.0 {
                    continue;
                }
                for y in 0..no {
                    if (x ^ y) >> e & 1 == 1 {
                        acc.add(px * transition[x * no + y]);
                    }
                }
            }
            acc.value()
        })
        .collect()
}

fn lossless(entropy: f64) -> OracleResult {
    OracleResult {
        rate_bits: entropy,
        achieved_distortion: 0.0,
        iterations: 0,
        converged: true,
        slope: f64::INFINITY,
        max_objective_increase: 0.0,
    }
}

fn check_target(d: f64, boundary: f64) -> Result<f64> {
    if !d.is_finite() || d < 0.0 {
        return Err(Error::NegativeDistortion(d));
    }
    if d > boundary + 1e-12 * boundary.max(1.0) {
        return Err(Error::Infeasible {
            requested: d,
            boundary,
        });
    }
    Ok(d.min(boundary))
}

/// Rate of `m <= 6` independent edges at total Hamming distortion `d`,
/// computed by Blahut–Arimoto on the joint source over `{0,1}^m`.
/// `tol` bounds `|achieved distortion - d|`.
pub fn joint_graph_rdf_oracle(edge_probs: &[f64], d: f64, tol: f64) -> Result<JointOracleResult> {
    joint_graph_rdf_oracle_with(edge_probs, d, tol, BaOptions::graph_oracle())
}

pub fn joint_graph_rdf_oracle_with(
    edge_probs: &[f64],
    d: f64,
    tol: f64,
    opts: BaOptions,
) -> Result<JointOracleResult> {
    let problem = DiscreteRdProblem::bernoulli_product(edge_probs)?;
    check_options(0.0, opts)?;
    let m = edge_probs.len();
    let boundary = compensated_sum(edge_probs.iter().map(|&q| q.min(1.0 - q)));
    let d = check_target(d, boundary)?;
    if d == 0.0 {
        return Ok(JointOracleResult {
            result: lossless(problem.entropy_bits()),
            coordinate_distortion: vec![0.0; m],
        });
    }
    let (_, run) = match_slope(d, tol, |s| {
        let run = run_ba(&problem, s, opts);
        (run.result.achieved_distortion, run)
    })?;
    if !run.result.converged {
        return Err(Error::NonConvergence {
            iterations: run.result.iterations,
        });
    }
    Ok(JointOracleResult {
        coordinate_distortion: coordinate_distortion(&problem, &run.transition, m),
        result: run.result,
    })
}

/// Oracle result for the labelled SBM, with the achieved crossover
/// probability of each label pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionalOracleResult {
    pub result: OracleResult,
    /// `P(E != Ê | labels l, m)`; pairs that never occur take the cap
    /// `min(w, 1 - w)`.
    pub crossovers: SymMatrix,
}

struct LabelledSource {
    prob: f64,
    label_pairs: Vec<(usize, usize)>,
    problem: DiscreteRdProblem,
}

/// Conditional rate of a small SBM given its labels, by Blahut–Arimoto on
/// every label assignment at a common slope.
///
/// Every `x in [k]^n` with positive probability yields a product source over
/// the `n choose 2` edges with probabilities `w_{x_i x_j}`. Distortions and
/// rates are averaged with weights `P(x)` and the shared slope is bisected
/// until the average distortion reaches `d`.
pub fn conditional_sbm_oracle(
    params: &SbmParams,
    d: f64,
    tol: f64,
) -> Result<ConditionalOracleResult> {
    conditional_sbm_oracle_with(params, d, tol, BaOptions::graph_oracle())
}

pub fn conditional_sbm_oracle_with(
    params: &SbmParams,
    d: f64,
    tol: f64,
    opts: BaOptions,
) -> Result<ConditionalOracleResult> {
    let (n, k) = (params.n(), params.k());
    if n > MAX_ORACLE_NODES || k > MAX_ORACLE_COMMUNITIES {
        return Err(Error::InstanceTooLarge(format!(
            "n = {n}, k = {k}; the conditional oracle supports n <= {MAX_ORACLE_NODES}, k <= {MAX_ORACLE_COMMUNITIES}"
        )));
    }
    check_options(0.0, opts)?;
    let w = params.connection();
    let prior = params.prior();
    let m = pair_count(n);
    let boundary = m as f64
        * compensated_sum(
            (0..k)
                .flat_map(|l| (0..k).map(move |j| (l, j)))
                .map(|(l, j)| prior[l] * prior[j] * w.get(l, j).min(1.0 - w.get(l, j))),
        );
    let d = check_target(d, boundary)?;

    let mut sources = Vec::new();
    for code in 0..k.pow(n as u32) {
        let labels: Vec<usize> = (0..n).map(|i| code / k.pow(i as u32) % k).collect();
        let prob: f64 = labels.iter().map(|&l| prior[l]).product();
        if prob == 0.0 {
            continue;
        }
        let label_pairs: Vec<(usize, usize)> = pairs(n)
            .map(|(i, j)| {
                let (a, b) = (labels[i], labels[j]);
                (a.min(b), a.max(b))
            })
            .collect();
        let edge_probs: Vec<f64> = label_pairs.iter().map(|&(a, b)| w.get(a, b)).collect();
        sources.push(LabelledSource {
            prob,
            label_pairs,
            problem: DiscreteRdProblem::bernoulli_product(&edge_probs)?,
        });
    }

    if d == 0.0 {
        let entropy = compensated_sum(sources.iter().map(|s| {
            s.prob * compensated_sum(s.label_pairs.iter().map(|&(a, b)| h2(w.get(a, b))))
        }));
        return Ok(ConditionalOracleResult {
            result: lossless(entropy),
            crossovers: SymMatrix::from_fn(k, |_, _| 0.0),
        });
    }

    let evaluate = |s: f64| {
        let runs: Vec<BaRun> = sources
            .par_iter()
            .map(|src| run_ba(&src.problem, s, opts))
            .collect();
        let dist = compensated_sum(
            sources
                .iter()
                .zip(&runs)
                .map(|(src, run)| src.prob * run.result.achieved_distortion),
        );
        (dist, runs)
    };
    let (slope, runs) = match_slope(d, tol, evaluate)?;

    let rate = compensated_sum(
        sources
            .iter()
            .zip(&runs)
            .map(|(src, run)| src.prob * run.result.rate_bits),
    );
    let achieved = compensated_sum(
        sources
            .iter()
            .zip(&runs)
            .map(|(src, run)| src.prob * run.result.achieved_distortion),
    );
    let converged = runs.iter().all(|r| r.result.converged);
    let iterations = runs.iter().map(|r| r.result.iterations).max().unwrap_or(0);
    if !converged {
        return Err(Error::NonConvergence { iterations });
    }

    let mut flips = vec![CompensatedSum::new(); k * k];
    let mut mass = vec![0.0; k * k];
    for (src, run) in sources.iter().zip(&runs) {
        let per_edge = coordinate_distortion(&src.problem, &run.transition, m);
        for (&(a, b), flip) in src.label_pairs.iter().zip(per_edge) {
            flips[a * k + b].add(src.prob * flip);
            mass[a * k + b] += src.prob;
        }
    }
    let crossovers = SymMatrix::from_fn(k, |l, j| {
        let idx = l * k + j;
        if mass[idx] > 0.0 {
            flips[idx].value() / mass[idx]
        } else {
            w.get(l, j).min(1.0 - w.get(l, j))
        }
    });

    Ok(ConditionalOracleResult {
        result: OracleResult {
            rate_bits: rate,
            achieved_distortion: achieved,
            iterations,
            converged,
            slope,
            max_objective_increase: runs
                .iter()
                .map(|r| r.result.max_objective_increase)
                .fold(0.0, f64::max),
        },
        crossovers,
    })
}
