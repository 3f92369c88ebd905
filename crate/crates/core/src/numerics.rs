//! Scalar and matrix primitives shared by the rest of the crate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack tolerated when a value should be a probability. Values this close to
/// the valid range are clamped; anything further out is rejected.
pub const PROB_SLACK: f64 = 1e-12;

/// Clamp `value` into `[0, 1]` if it lies within [`PROB_SLACK`] of it.
pub fn check_probability(value: f64, what: &str) -> Result<f64> {
    if !value.is_finite() || value < -PROB_SLACK || value > 1.0 + PROB_SLACK {
        return Err(Error::Domain {
            what: what.to_string(),
            value,
        });
    }
    Ok(value.clamp(0.0, 1.0))
}

/// Binary entropy in bits, `h2(t) = -t log2 t - (1-t) log2 (1-t)`.
pub fn binary_entropy(t: f64) -> Result<f64> {
    Ok(h2(check_probability(t, "binary entropy argument")?))
}

/// Binary entropy for an argument already known to be in `[0, 1]`.
pub(crate) fn h2(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        return 0.0;
    }
    let s = 1.0 - t;
    let value = -(t * t.log2() + s * s.log2());
    value.clamp(0.0, 1.0)
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Compensated sum of an iterator of floats.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<CompensatedSum>().value()
}

/// A probability vector: entries in `[0, 1]` summing to one.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParams(
                "probability vector must be non-empty".into(),
            ));
        }
        let values = values
            .into_iter()
            .enumerate()
            .map(|(i, v)| check_probability(v, &format!("p[{}]", i + 1)))
            .collect::<Result<Vec<_>>>()?;
        let sum = compensated_sum(values.iter().copied());
        if (sum - 1.0).abs() > PROB_SLACK {
            return Err(Error::PriorSum { sum });
        }
        Ok(Self(values))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Shannon entropy in bits.
    pub fn entropy_bits(&self) -> f64 {
        compensated_sum(self.0.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.log2()))
    }
}

impl std::ops::Index<usize> for ProbVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// A square matrix whose `(l, m)` and `(m, l)` entries are bitwise equal.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    order: usize,
    entries: Vec<f64>,
}

impl SymMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let order = rows.len();
        if order == 0 {
            return Err(Error::InvalidParams("matrix must have order >= 1".into()));
        }
        let mut entries = Vec::with_capacity(order * order);
        for row in &rows {
            if row.len() != order {
                return Err(Error::DimensionMismatch {
                    expected: order,
                    found: row.len(),
                });
            }
            entries.extend_from_slice(row);
        }
        for l in 0..order {
            for m in (l + 1)..order {
                if entries[l * order + m] != entries[m * order + l] {
                    return Err(Error::Asymmetric {
                        row: l + 1,
                        col: m + 1,
                    });
                }
            }
        }
        Ok(Self { order, entries })
    }

    /// Build from a function of the unordered pair; `f(l, m)` is only called
    /// with `l <= m`.
    pub fn from_fn(order: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut entries = vec![0.0; order * order];
        for l in 0..order {
            for m in l..order {
                let v = f(l, m);
                entries[l * order + m] = v;
                entries[m * order + l] = v;
            }
        }
        Self { order, entries }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn get(&self, l: usize, m: usize) -> f64 {
        self.entries[l * self.order + m]
    }

    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Self {
        Self::from_fn(self.order, |l, m| f(self.get(l, m)))
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries
            .chunks(self.order)
            .map(|row| row.to_vec())
            .collect()
    }

    /// Check every entry is a probability, clamping values within slack.
    pub fn into_probabilities(self, what: &str) -> Result<Self> {
        let order = self.order;
        let mut entries = self.entries;
        for l in 0..order {
            for m in 0..order {
                let v = entries[l * order + m];
                entries[l * order + m] =
                    check_probability(v, &format!("{what}[{}][{}]", l + 1, m + 1))?;
            }
        }
        Ok(Self { order, entries })
    }
}

impl Serialize for SymMatrix {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        self.rows().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SymMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(deserializer)?;
        SymMatrix::new(rows).map_err(serde::de::Error::custom)
    }
}

/// Elementwise binary entropy of a probability matrix.
pub fn entropy_matrix(w: &SymMatrix) -> Result<SymMatrix> {
    let checked = w.clone().into_probabilities("W")?;
    Ok(checked.map(h2))
}

/// `p^T M p`.
pub fn quadratic_form(p: &ProbVector, m: &SymMatrix) -> Result<f64> {
    if p.len() != m.order() {
        return Err(Error::DimensionMismatch {
            expected: m.order(),
            found: p.len(),
        });
    }
    let k = p.len();
    Ok(compensated_sum(
        (0..k)
            .flat_map(|l| (0..k).map(move |j| (l, j)))
            .map(|(l, j)| p[l] * p[j] * m.get(l, j)),
    ))
}

/// One breakpoint of the clipped-linear function `weight * min(cap, mu)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Threshold {
    pub cap: f64,
    pub weight: f64,
}

impl Threshold {
    pub fn new(cap: f64, weight: f64) -> Self {
        Self { cap, weight }
    }
}

/// `sum_i weight_i * min(cap_i, mu)`.
pub fn clipped_sum(thresholds: &[Threshold], mu: f64) -> f64 {
    compensated_sum(thresholds.iter().map(|t| t.weight * t.cap.min(mu)))
}

fn check_thresholds(thresholds: &[Threshold], target: f64) -> Result<f64> {
    for t in thresholds {
        if !(t.cap >= 0.0 && t.weight >= 0.0 && t.cap.is_finite() && t.weight.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "threshold needs cap >= 0 and weight >= 0, got cap={} weight={}",
                t.cap, t.weight
            )));
        }
    }
    if !target.is_finite() || target < 0.0 {
        return Err(Error::NegativeDistortion(target));
    }
    let total = compensated_sum(thresholds.iter().map(|t| t.weight * t.cap));
    if target > total + PROB_SLACK {
        return Err(Error::Infeasible {
            requested: target,
            boundary: total,
        });
    }
    Ok(total)
}

/// Solve `sum_i weight_i * min(cap_i, mu) = target` for the smallest `mu >= 0`.
///
/// The left side is piecewise linear and nondecreasing in `mu` with kinks at
/// the caps, so the root is found exactly by walking the sorted breakpoints.
pub fn solve_monotone_piecewise(thresholds: &[Threshold], target: f64) -> Result<f64> {
    let total = check_thresholds(thresholds, target)?;
    if target == 0.0 {
        return Ok(0.0);
    }
    let mut active: Vec<Threshold> = thresholds
        .iter()
        .copied()
        .filter(|t| t.weight > 0.0 && t.cap > 0.0)
        .collect();
    active.sort_by(|a, b| a.cap.total_cmp(&b.cap));
    let Some(max_cap) = active.last().map(|t| t.cap) else {
        return Ok(0.0);
    };
    if target >= total {
        return Ok(max_cap);
    }

    // suffix[i] = total weight of breakpoints i.. (still growing at mu = cap_i)
    let mut suffix = vec![0.0; active.len() + 1];
    for i in (0..active.len()).rev() {
        suffix[i] = suffix[i + 1] + active[i].weight;
    }
    let mut saturated = CompensatedSum::new();
    let mut i = 0;
    while i < active.len() {
        let cap = active[i].cap;
        let at_cap = saturated.value() + cap * suffix[i];
        if target <= at_cap {
            let mu = (target - saturated.value()) / suffix[i];
            return Ok(mu.clamp(0.0, cap));
        }
        // absorb every breakpoint sharing this cap
        while i < active.len() && active[i].cap == cap {
            saturated.add(active[i].weight * cap);
            i += 1;
        }
    }
    Ok(max_cap)
}

/// Bisection on `mu` for the same equation; the cross-check and fallback for
/// [`solve_monotone_piecewise`]. Stops when the bracket is narrower than `tol`.
pub fn solve_monotone_bisect(thresholds: &[Threshold], target: f64, tol: f64) -> Result<f64> {
    let total = check_thresholds(thresholds, target)?;
    let max_cap = thresholds
        .iter()
        .filter(|t| t.weight > 0.0)
        .map(|t| t.cap)
        .fold(0.0, f64::max);
    if target == 0.0 {
        return Ok(0.0);
    }
    if target >= total {
        return Ok(max_cap);
    }
    let (mut lo, mut hi) = (0.0_f64, max_cap);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if clipped_sum(thresholds, mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}
