//! Graph source models and their entropies.
//!
//! Three sources are supported: the stochastic block model `SBM(n, p, W)`,
//! the inhomogeneous Erdős–Rényi model with a probability per vertex pair, and
//! the homogeneous `G(n, p)`.

mod graph;
mod spec;

pub use graph::{Graph, LabelVector};
pub use spec::{Model, ModelSpec};

use crate::error::{Error, Result};
use crate::numerics::{
    check_probability, compensated_sum, entropy_matrix, h2, quadratic_form, ProbVector, SymMatrix,
};

/// Number of unordered vertex pairs, `n choose 2`.
pub fn pair_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Flat index of the pair `{i, j}` (0-based, `i < j`) in the upper-triangular
/// row-major layout: `i*n - i(i+1)/2 + (j - i - 1)`.
pub fn pair_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

/// Iterate all pairs `(i, j)`, `i < j`, in `pair_index` order.
pub fn pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| ((i + 1)..n).map(move |j| (i, j)))
}

fn check_nodes(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidParams(format!(
            "node count must be at least 2, got {n}"
        )));
    }
    Ok(())
}

/// Parameters of `SBM(n, p, W)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SbmParams {
    n: usize,
    prior: ProbVector,
    connection: SymMatrix,
}

impl SbmParams {
    pub fn new(n: usize, p: Vec<f64>, w: Vec<Vec<f64>>) -> Result<Self> {
        validate_sbm(n, p, w)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of communities.
    pub fn k(&self) -> usize {
        self.prior.len()
    }

    pub fn prior(&self) -> &ProbVector {
        &self.prior
    }

    pub fn connection(&self) -> &SymMatrix {
        &self.connection
    }

    pub fn pairs(&self) -> usize {
        pair_count(self.n)
    }

    /// `p_l p_m` summed over ordered label pairs of `f(l, m)`.
    pub(crate) fn weighted_sum(&self, mut f: impl FnMut(usize, usize) -> f64) -> f64 {
        let k = self.k();
        let p = &self.prior;
        let mut terms = Vec::with_capacity(k * k);
        for l in 0..k {
            for m in 0..k {
                terms.push(p[l] * p[m] * f(l, m));
            }
        }
        compensated_sum(terms)
    }
}

/// Check the SBM invariants and build validated parameters. Reports the first
/// violation found: node count, matrix shape, matrix range, matrix symmetry,
/// prior range, prior sum.
pub fn validate_sbm(n: usize, p: Vec<f64>, w: Vec<Vec<f64>>) -> Result<SbmParams> {
    check_nodes(n)?;
    if p.is_empty() {
        return Err(Error::InvalidParams(
            "at least one community is required".into(),
        ));
    }
    if w.len() != p.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            found: w.len(),
        });
    }
    for (l, row) in w.iter().enumerate() {
        if row.len() != p.len() {
            return Err(Error::DimensionMismatch {
                expected: p.len(),
                found: row.len(),
            });
        }
        for (m, &v) in row.iter().enumerate() {
            check_probability(v, &format!("W[{}][{}]", l + 1, m + 1))?;
        }
    }
    let connection = SymMatrix::new(w)?.into_probabilities("W")?;
    let prior = ProbVector::new(p)?;
    Ok(SbmParams {
        n,
        prior,
        connection,
    })
}

/// Parameters of an inhomogeneous Erdős–Rényi graph: one probability per
/// unordered pair, stored densely in `pair_index` order.
#[derive(Debug, Clone, PartialEq)]
pub struct InhomErParams {
    n: usize,
    edge_probs: Vec<f64>,
}

impl InhomErParams {
    pub fn new(n: usize, edge_probs: Vec<f64>) -> Result<Self> {
        check_nodes(n)?;
        if edge_probs.len() != pair_count(n) {
            return Err(Error::DimensionMismatch {
                expected: pair_count(n),
                found: edge_probs.len(),
            });
        }
        let edge_probs = edge_probs
            .into_iter()
            .enumerate()
            .map(|(e, v)| check_probability(v, &format!("edge_probs[{e}]")))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { n, edge_probs })
    }

    /// Every pair gets the same probability `q`.
    pub fn homogeneous(n: usize, q: f64) -> Result<Self> {
        Self::new(n, vec![q; pair_count(n)])
    }

    /// Build from a function of the pair `(i, j)`, `i < j`.
    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        Self::new(n, pairs(n).map(|(i, j)| f(i, j)).collect())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_probs(&self) -> &[f64] {
        &self.edge_probs
    }

    pub fn prob(&self, i: usize, j: usize) -> f64 {
        self.edge_probs[pair_index(self.n, i, j)]
    }
}

/// Parameters of `G(n, p)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErParams {
    n: usize,
    p: f64,
}

impl ErParams {
    pub fn new(n: usize, p: f64) -> Result<Self> {
        check_nodes(n)?;
        let p = check_probability(p, "p")?;
        Ok(Self { n, p })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> f64 {
        self.p
    }
}

/// `sum_{i<j} h2(p_ij)` bits.
pub fn inhomogeneous_er_entropy(params: &InhomErParams) -> f64 {
    compensated_sum(params.edge_probs.iter().map(|&q| h2(q)))
}

/// `(n choose 2) h2(p)` bits.
pub fn er_entropy(params: &ErParams) -> f64 {
    pair_count(params.n) as f64 * h2(params.p)
}

/// Entropy of the SBM graph given the labels: `(n choose 2) p^T h2(W) p`.
pub fn sbm_conditional_entropy(params: &SbmParams) -> f64 {
    let h = entropy_matrix(&params.connection).expect("validated connection matrix");
    let q = quadratic_form(&params.prior, &h).expect("validated dimensions");
    params.pairs() as f64 * q
}

/// Bracket on an unconditional entropy.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct EntropyInterval {
    pub lower: f64,
    pub upper: f64,
}

/// `H(G|X) <= H(G) <= H(G|X) + H(X)` with `H(X) = n H(p)`.
pub fn sbm_entropy_interval(params: &SbmParams) -> EntropyInterval {
    let lower = sbm_conditional_entropy(params);
    let slack = params.n as f64 * params.prior.entropy_bits();
    EntropyInterval {
        lower,
        upper: lower + slack,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) fn reference_sbm() -> SbmParams {
        SbmParams::new(
            100,
            vec![0.4, 0.3, 0.3],
            vec![
                vec![0.5, 0.2, 0.1],
                vec![0.2, 0.5, 0.1],
                vec![0.1, 0.1, 0.4],
            ],
        )
        .unwrap()
    }

    #[test]
    fn pair_index_layout() {
        let n = 5;
        for (e, (i, j)) in pairs(n).enumerate() {
            assert_eq!(pair_index(n, i, j), e);
        }
        assert_eq!(pair_count(100), 4950);
        assert_eq!(pair_count(1), 0);
    }

    #[test]
    fn validate_examples() {
        let params = reference_sbm();
        assert_eq!(params.k(), 3);
        assert_eq!(params.n(), 100);

        let err =
            SbmParams::new(10, vec![0.6, 0.6], vec![vec![0.1, 0.1], vec![0.1, 0.1]]).unwrap_err();
        assert!(matches!(err, Error::PriorSum { sum } if (sum - 1.2).abs() < 1e-12));

        let err =
            SbmParams::new(10, vec![0.5, 0.5], vec![vec![0.1, 0.2], vec![0.3, 0.1]]).unwrap_err();
        assert_eq!(err, Error::Asymmetric { row: 1, col: 2 });

        let err = SbmParams::new(10, vec![1.0], vec![vec![1.5]]).unwrap_err();
        assert!(matches!(err, Error::Domain { .. }));

        assert!(SbmParams::new(1, vec![1.0], vec![vec![0.5]]).is_err());
        assert!(SbmParams::new(0, vec![1.0], vec![vec![0.5]]).is_err());
        assert!(SbmParams::new(5, vec![1.0], vec![vec![0.5, 0.5]]).is_err());
    }

    #[test]
    fn inhomogeneous_entropy_examples() {
        let all_half = InhomErParams::homogeneous(4, 0.5).unwrap();
        assert_eq!(inhomogeneous_er_entropy(&all_half), 6.0);
        let empty = InhomErParams::homogeneous(7, 0.0).unwrap();
        assert_eq!(inhomogeneous_er_entropy(&empty), 0.0);
        let three = InhomErParams::new(3, vec![0.1, 0.2, 0.5]).unwrap();
        // h2(0.1) + h2(0.2) + 1 from 30-digit references
        let expected = 0.468_995_593_589_281_2 + 0.721_928_094_887_362_3 + 1.0;
        assert!((inhomogeneous_er_entropy(&three) - expected).abs() < 1e-14);
        assert!(InhomErParams::new(3, vec![0.1, 0.2]).is_err());
    }

    #[test]
    fn er_entropy_examples() {
        assert_eq!(er_entropy(&ErParams::new(100, 0.5).unwrap()), 4950.0);
        let e = er_entropy(&ErParams::new(2, 0.2).unwrap());
        assert!((e - 0.721_928_094_887_362_3).abs() < 1e-15);
        assert_eq!(er_entropy(&ErParams::new(9, 1.0).unwrap()), 0.0);
    }

    #[test]
    fn sbm_entropy_examples() {
        let reference = reference_sbm();
        // 4950 * 0.707626445581385253925... (30-digit reference)
        assert!((sbm_conditional_entropy(&reference) - 3502.750905627857).abs() < 1e-9);

        let interval = sbm_entropy_interval(&reference);
        assert!((interval.upper - interval.lower - 157.095_059_445_466_86).abs() < 1e-9);

        let half = SbmParams::new(12, vec![0.25, 0.75], vec![vec![0.5; 2]; 2]).unwrap();
        assert_eq!(sbm_conditional_entropy(&half), 66.0);

        let degenerate =
            SbmParams::new(12, vec![1.0, 0.0], vec![vec![0.3, 0.1], vec![0.1, 0.2]]).unwrap();
        let iv = sbm_entropy_interval(&degenerate);
        assert_eq!(iv.lower, iv.upper);
    }

    proptest! {
        #[test]
        fn single_community_matches_er(q in 0.0..=1.0f64, n in 2usize..200) {
            let sbm = SbmParams::new(n, vec![1.0], vec![vec![q]]).unwrap();
            let er = ErParams::new(n, q).unwrap();
            let a = sbm_conditional_entropy(&sbm);
            let b = er_entropy(&er);
            prop_assert!((a - b).abs() <= 1e-12 * b.max(1.0));
            let iv = sbm_entropy_interval(&sbm);
            prop_assert_eq!(iv.lower, iv.upper);
        }

        #[test]
        fn homogeneous_matches_er(q in 0.0..=1.0f64, n in 2usize..80) {
            let inh = InhomErParams::homogeneous(n, q).unwrap();
            let er = ErParams::new(n, q).unwrap();
            let a = inhomogeneous_er_entropy(&inh);
            let b = er_entropy(&er);
            prop_assert!((a - b).abs() <= 1e-12 * b.max(1.0));
        }

        #[test]
        fn entropy_bounds(raw in prop::collection::vec(0.01..1.0f64, 1..5), wseed in prop::collection::vec(0.0..=1.0f64, 15), n in 2usize..60) {
            let k = raw.len();
            let s: f64 = raw.iter().sum();
            let p: Vec<f64> = raw.iter().map(|v| v / s).collect();
            let w = SymMatrix::from_fn(k, |l, m| wseed[l * 5 + m - l * (l + 1) / 2]).rows();
            let sbm = match SbmParams::new(n, p, w) {
                Ok(sbm) => sbm,
                Err(Error::PriorSum { .. }) => return Ok(()),
                Err(e) => panic!("{e}"),
            };
            let h = sbm_conditional_entropy(&sbm);
            prop_assert!(h >= 0.0 && h <= pair_count(n) as f64 + 1e-9);
            let iv = sbm_entropy_interval(&sbm);
            prop_assert!(iv.lower <= iv.upper);
            let slack = n as f64 * sbm.prior().entropy_bits();
            prop_assert!(((iv.upper - iv.lower) - slack).abs() <= 1e-12 * iv.upper.max(1.0));
        }
    }
}
