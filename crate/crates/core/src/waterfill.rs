//! Reverse water-filling of the Hamming distortion budget.
//!
//! For the SBM the budget is shared across label pairs `(l, m)` weighted by
//! `p_l p_m`; each pair receives `d*_{l,m} = min(min(w, 1-w), mu)` and the
//! water level `mu` is set so that `p^T D* p = D / (n choose 2)`. The
//! inhomogeneous ER case is the same problem over vertex pairs with unit
//! weights.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::{InhomErParams, SbmParams};
use crate::numerics::{compensated_sum, solve_monotone_piecewise, SymMatrix, Threshold};

/// Relative slack for a distortion sitting just above its boundary.
const BOUNDARY_SLACK: f64 = 1e-12;

/// Optimal SBM distortion allocation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SbmAllocation {
    pub dstar: SymMatrix,
    pub mu: f64,
    /// `D / (n choose 2)`.
    pub normalized_distortion: f64,
}

/// Optimal per-pair allocation for an inhomogeneous ER graph.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErAllocation {
    /// Per-pair distortion in `pair_index` order.
    pub d: Vec<f64>,
    pub lambda: f64,
}

impl ErAllocation {
    pub fn total(&self) -> f64 {
        compensated_sum(self.d.iter().copied())
    }
}

pub(crate) fn cap(w: f64) -> f64 {
    w.min(1.0 - w)
}

/// Largest `D` with a positive conditional rate:
/// `(n choose 2) sum_{l,m} p_l p_m min(w_lm, 1 - w_lm)`.
pub fn sbm_distortion_boundary(params: &SbmParams) -> f64 {
    let w = params.connection();
    params.pairs() as f64 * params.weighted_sum(|l, m| cap(w.get(l, m)))
}

/// Distortion reachable by a reconstruction independent of the graph:
/// `(n choose 2) min(sum p_l p_m w_lm, sum p_l p_m (1 - w_lm))`.
pub fn sbm_independence_boundary(params: &SbmParams) -> f64 {
    let w = params.connection();
    let ones = params.weighted_sum(|l, m| w.get(l, m));
    let zeros = params.weighted_sum(|l, m| 1.0 - w.get(l, m));
    params.pairs() as f64 * ones.min(zeros)
}

/// `sum_{i<j} min(p_ij, 1 - p_ij)`.
pub fn er_distortion_boundary(params: &InhomErParams) -> f64 {
    compensated_sum(params.edge_probs().iter().map(|&q| cap(q)))
}

/// `min(sum p_ij, sum (1 - p_ij))`.
pub fn er_independence_boundary(params: &InhomErParams) -> f64 {
    let ones = compensated_sum(params.edge_probs().iter().copied());
    let zeros = compensated_sum(params.edge_probs().iter().map(|&q| 1.0 - q));
    ones.min(zeros)
}

/// Clamp `d` onto `[0, boundary]`, tolerating rounding just above it.
/// Returns the clamped value and whether it sits on the boundary.
fn check_budget(d: f64, boundary: f64) -> Result<(f64, bool)> {
    if !d.is_finite() || d < 0.0 {
        return Err(Error::NegativeDistortion(d));
    }
    if d > boundary + BOUNDARY_SLACK * boundary.max(1.0) {
        return Err(Error::Infeasible {
            requested: d,
            boundary,
        });
    }
    Ok((d.min(boundary), d >= boundary))
}

/// Reverse water-filling over label pairs.
///
/// Off-diagonal pairs are merged with weight `2 p_l p_m`. Pairs with a zero
/// cap get `d* = 0`; pairs involving an empty community (`p_l = 0`) get
/// `d* = cap`. At the boundary every cap is active and `mu` is reported as the
/// largest cap.
pub fn solve_sbm_waterfill(params: &SbmParams, d: f64) -> Result<SbmAllocation> {
    let boundary = sbm_distortion_boundary(params);
    let (d, saturated) = check_budget(d, boundary)?;
    let target = d / params.pairs() as f64;
    let w = params.connection();
    let p = params.prior();
    let k = params.k();

    let mut thresholds = Vec::with_capacity(k * (k + 1) / 2);
    for l in 0..k {
        for m in l..k {
            let weight = if l == m {
                p[l] * p[m]
            } else {
                2.0 * p[l] * p[m]
            };
            let c = cap(w.get(l, m));
            if weight > 0.0 && c > 0.0 {
                thresholds.push(Threshold::new(c, weight));
            }
        }
    }
    let max_cap = thresholds.iter().map(|t| t.cap).fold(0.0, f64::max);
    let mu = if saturated {
        max_cap
    } else {
        let total = compensated_sum(thresholds.iter().map(|t| t.weight * t.cap));
        solve_monotone_piecewise(&thresholds, target.min(total))?
    };

    let dstar = SymMatrix::from_fn(k, |l, m| {
        let c = cap(w.get(l, m));
        if p[l] == 0.0 || p[m] == 0.0 {
            c
        } else {
            c.min(mu)
        }
    });
    Ok(SbmAllocation {
        dstar,
        mu,
        normalized_distortion: target,
    })
}

/// Reverse water-filling over vertex pairs with unit weights.
pub fn solve_er_waterfill(params: &InhomErParams, d: f64) -> Result<ErAllocation> {
    let boundary = er_distortion_boundary(params);
    let (d, saturated) = check_budget(d, boundary)?;
    let caps: Vec<f64> = params.edge_probs().iter().map(|&q| cap(q)).collect();
    let max_cap = caps.iter().copied().fold(0.0, f64::max);
    let lambda = if saturated {
        max_cap
    } else {
        let thresholds: Vec<Threshold> = caps
            .iter()
            .filter(|&&c| c > 0.0)
            .map(|&c| Threshold::new(c, 1.0))
            .collect();
        solve_monotone_piecewise(&thresholds, d)?
    };
    Ok(ErAllocation {
        d: caps.iter().map(|&c| c.min(lambda)).collect(),
        lambda,
    })
}

/// Multipliers recovered from an allocation, checking the optimality
/// conditions of `min -sum w h2(d)` s.t. `sum w d <= target`, `d <= cap`.
///
/// With `nu = ln((1 - mu)/mu)` the cap multipliers are
/// `lambda = w [ln((1 - d)/d) - nu]`; optimality needs `lambda >= 0`,
/// `lambda (d - cap) = 0` and `nu (sum w d - target) = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KktCertificate {
    pub nu: f64,
    /// Smallest recovered cap multiplier.
    pub min_multiplier: f64,
    /// Largest `|lambda (d - cap)|`.
    pub max_slackness_residual: f64,
    /// `|nu (sum w d - target)|`.
    pub budget_slackness_residual: f64,
    /// Largest `d - cap`, positive when a cap is violated.
    pub max_cap_violation: f64,
    /// `mu = 0`: the zero budget pins every `d` to zero and the stationarity
    /// conditions have no finite multipliers.
    pub degenerate: bool,
}

impl KktCertificate {
    /// Largest violation across all conditions, 0 when every one holds exactly.
    pub fn max_violation(&self) -> f64 {
        (-self.min_multiplier)
            .max(self.max_slackness_residual)
            .max(self.budget_slackness_residual)
            .max(self.max_cap_violation)
            .max(-self.nu)
            .max(0.0)
    }
}

fn log_odds(x: f64) -> f64 {
    ((1.0 - x) / x).ln()
}

fn certify(entries: impl Iterator<Item = (f64, f64, f64)>, mu: f64, target: f64) -> KktCertificate {
    let entries: Vec<(f64, f64, f64)> = entries.collect();
    let used = compensated_sum(entries.iter().map(|&(weight, _, d)| weight * d));
    let max_cap_violation = entries
        .iter()
        .map(|&(_, c, d)| d - c)
        .fold(f64::NEG_INFINITY, f64::max)
        .max(0.0);
    if mu <= 0.0 {
        return KktCertificate {
            nu: f64::INFINITY,
            min_multiplier: 0.0,
            max_slackness_residual: 0.0,
            budget_slackness_residual: 0.0,
            max_cap_violation,
            degenerate: true,
        };
    }
    let nu = log_odds(mu);
    let mut min_multiplier = f64::INFINITY;
    let mut max_slackness_residual: f64 = 0.0;
    for (weight, c, d) in entries {
        if weight == 0.0 {
            min_multiplier = min_multiplier.min(0.0);
            continue;
        }
        if c == 0.0 {
            // d pinned at 0 with an unbounded multiplier
            continue;
        }
        let lambda = weight * (log_odds(d) - nu);
        min_multiplier = min_multiplier.min(lambda);
        max_slackness_residual = max_slackness_residual.max((lambda * (d - c)).abs());
    }
    if min_multiplier == f64::INFINITY {
        min_multiplier = 0.0;
    }
    KktCertificate {
        nu,
        min_multiplier,
        max_slackness_residual,
        budget_slackness_residual: (nu * (used - target)).abs(),
        max_cap_violation,
        degenerate: false,
    }
}

/// KKT check for an SBM allocation, over ordered label pairs.
pub fn kkt_certificate(params: &SbmParams, alloc: &SbmAllocation) -> KktCertificate {
    let k = params.k();
    let p = params.prior();
    let w = params.connection();
    let entries = (0..k).flat_map(move |l| {
        (0..k).map(move |m| (p[l] * p[m], cap(w.get(l, m)), alloc.dstar.get(l, m)))
    });
    certify(entries, alloc.mu, alloc.normalized_distortion)
}

/// KKT check for an inhomogeneous ER allocation at absolute budget `d`.
pub fn er_kkt_certificate(params: &InhomErParams, alloc: &ErAllocation, d: f64) -> KktCertificate {
    let entries = params
        .edge_probs()
        .iter()
        .zip(&alloc.d)
        .map(|(&q, &dd)| (1.0, cap(q), dd));
    certify(entries, alloc.lambda, d)
}
