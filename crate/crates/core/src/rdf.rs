//! Closed-form rate-distortion functions and curve generation.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::{
    pair_count, sbm_conditional_entropy, ErParams, InhomErParams, Model, SbmParams,
};
use crate::numerics::{compensated_sum, entropy_matrix, h2, quadratic_form};
use crate::waterfill::{
    cap, er_distortion_boundary, er_independence_boundary, sbm_distortion_boundary,
    sbm_independence_boundary, solve_er_waterfill, solve_sbm_waterfill,
};

/// One point of a rate-distortion curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RdCurvePoint {
    /// Absolute Hamming distortion (edge count).
    pub distortion_abs: f64,
    pub distortion_per_edge: f64,
    pub rate_bits: f64,
    /// Water level of the optimal allocation.
    pub water_level: f64,
}

/// Bracket on the unconditional SBM rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateInterval {
    pub lower: f64,
    pub upper: f64,
}

fn check_distortion(d: f64) -> Result<()> {
    if !d.is_finite() || d < 0.0 {
        return Err(Error::NegativeDistortion(d));
    }
    Ok(())
}

/// Rate of the SBM graph given its community labels:
/// `(n choose 2) p^T [h2(W) - h2(D*)] p`, and exactly 0 from the distortion
/// boundary onwards.
pub fn sbm_conditional_rdf(params: &SbmParams, d: f64) -> Result<RdCurvePoint> {
    check_distortion(d)?;
    let pairs = params.pairs() as f64;
    let boundary = sbm_distortion_boundary(params);
    let alloc = solve_sbm_waterfill(params, d.min(boundary))?;
    let rate = if d >= boundary {
        0.0
    } else {
        let hw = entropy_matrix(params.connection())?;
        let hd = alloc.dstar.map(h2);
        let gap = quadratic_form(params.prior(), &hw)? - quadratic_form(params.prior(), &hd)?;
        (pairs * gap).max(0.0)
    };
    Ok(RdCurvePoint {
        distortion_abs: d,
        distortion_per_edge: d / pairs,
        rate_bits: rate,
        water_level: alloc.mu,
    })
}

/// Bracket on the unconditional SBM rate. The lower end is the conditional
/// rate and the upper end adds `I(G; X) <= H(X) = n H(p)`. Past the
/// independence boundary the rate is exactly 0.
pub fn sbm_rdf_interval(params: &SbmParams, d: f64) -> Result<RateInterval> {
    let lower = sbm_conditional_rdf(params, d)?.rate_bits;
    if d >= sbm_independence_boundary(params) {
        return Ok(RateInterval {
            lower: 0.0,
            upper: 0.0,
        });
    }
    let slack = params.n() as f64 * params.prior().entropy_bits();
    Ok(RateInterval {
        lower,
        upper: lower + slack,
    })
}

/// `sum_{i<j} [h2(p_ij) - h2(d_ij)]` with the per-pair water-filling
/// allocation; 0 once `d` reaches `sum min(p_ij, 1 - p_ij)`.
pub fn inhomogeneous_er_rdf(params: &InhomErParams, d: f64) -> Result<RdCurvePoint> {
    check_distortion(d)?;
    let pairs = pair_count(params.n()) as f64;
    let boundary = er_distortion_boundary(params);
    let alloc = solve_er_waterfill(params, d.min(boundary))?;
    let rate = if d >= boundary {
        0.0
    } else {
        compensated_sum(
            params
                .edge_probs()
                .iter()
                .zip(&alloc.d)
                .map(|(&q, &dd)| h2(q) - h2(dd)),
        )
        .max(0.0)
    };
    Ok(RdCurvePoint {
        distortion_abs: d,
        distortion_per_edge: d / pairs,
        rate_bits: rate,
        water_level: alloc.lambda,
    })
}

/// `G(n, p)`: `(n choose 2) [h2(p) - h2(D / (n choose 2))]` up to
/// `(n choose 2) min(p, 1 - p)`, 0 beyond.
pub fn er_rdf(params: &ErParams, d: f64) -> Result<RdCurvePoint> {
    check_distortion(d)?;
    let pairs = pair_count(params.n()) as f64;
    let c = cap(params.p());
    let per_edge = d / pairs;
    let (rate, level) = if per_edge >= c {
        (0.0, c)
    } else {
        ((pairs * (h2(params.p()) - h2(per_edge))).max(0.0), per_edge)
    };
    Ok(RdCurvePoint {
        distortion_abs: d,
        distortion_per_edge: per_edge,
        rate_bits: rate,
        water_level: level,
    })
}

impl Model {
    /// Rate-distortion point of the model's closed form at `d`.
    pub fn rdf(&self, d: f64) -> Result<RdCurvePoint> {
        match self {
            Model::Sbm(p) => sbm_conditional_rdf(p, d),
            Model::Er(p) => er_rdf(p, d),
            Model::InhomEr(p) => inhomogeneous_er_rdf(p, d),
        }
    }

    /// Smallest distortion with zero rate.
    pub fn distortion_boundary(&self) -> f64 {
        match self {
            Model::Sbm(p) => sbm_distortion_boundary(p),
            Model::Er(p) => pair_count(p.n()) as f64 * cap(p.p()),
            Model::InhomEr(p) => er_distortion_boundary(p),
        }
    }

    /// Distortion reachable with a reconstruction independent of the source
    /// (and of the labels, for the SBM).
    pub fn independence_boundary(&self) -> f64 {
        match self {
            Model::Sbm(p) => sbm_independence_boundary(p),
            Model::Er(p) => pair_count(p.n()) as f64 * cap(p.p()),
            Model::InhomEr(p) => er_independence_boundary(p),
        }
    }

    /// Rate at zero distortion: the (conditional) entropy.
    pub fn lossless_rate(&self) -> f64 {
        match self {
            Model::Sbm(p) => sbm_conditional_entropy(p),
            Model::Er(p) => crate::models::er_entropy(p),
            Model::InhomEr(p) => crate::models::inhomogeneous_er_entropy(p),
        }
    }
}

/// Distortion grid for [`rdf_curve`].
#[derive(Debug, Clone, PartialEq)]
pub enum Grid {
    /// Uniform over `[0, boundary]`; a single point is `D = 0`.
    Points(usize),
    /// Explicit nonnegative values in ascending order.
    Explicit(Vec<f64>),
}

impl Grid {
    pub fn values(&self, boundary: f64) -> Result<Vec<f64>> {
        match self {
            Grid::Points(0) => Err(Error::InvalidParams("grid needs at least one point".into())),
            Grid::Points(1) => Ok(vec![0.0]),
            Grid::Points(count) => {
                let last = (count - 1) as f64;
                Ok((0..*count)
                    .map(|i| {
                        if i == count - 1 {
                            boundary
                        } else {
                            boundary * i as f64 / last
                        }
                    })
                    .collect())
            }
            Grid::Explicit(values) => {
                if let Some(&bad) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
                    return Err(Error::NegativeDistortion(bad));
                }
                if values.windows(2).any(|w| w[1] < w[0]) {
                    return Err(Error::InvalidParams(
                        "grid values must be sorted ascending".into(),
                    ));
                }
                Ok(values.clone())
            }
        }
    }
}

/// Evaluate the model's rate at every grid point, in grid order.
pub fn rdf_curve(model: &Model, grid: &Grid) -> Result<Vec<RdCurvePoint>> {
    let values = grid.values(model.distortion_boundary())?;
    values.par_iter().map(|&d| model.rdf(d)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::er_entropy;
    use proptest::prelude::*;

    fn reference_sbm() -> SbmParams {
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
    fn sbm_conditional_examples() {
        let reference = reference_sbm();
        let lossless = sbm_conditional_rdf(&reference, 0.0).unwrap();
        assert_eq!(lossless.rate_bits, sbm_conditional_entropy(&reference));

        let at_boundary = sbm_conditional_rdf(&reference, 1242.45).unwrap();
        assert!(at_boundary.rate_bits <= 1e-9);
        let beyond = sbm_conditional_rdf(&reference, 2000.0).unwrap();
        assert_eq!(beyond.rate_bits, 0.0);
        assert_eq!(beyond.water_level, 0.5);

        // 4950 (p^T h2(W) p - h2(0.1)), 30-digit reference 1181.2227173609...
        let mid = sbm_conditional_rdf(&reference, 495.0).unwrap();
        assert!((mid.rate_bits - 1181.222717360915).abs() < 1e-9);
        assert!((mid.distortion_per_edge - 0.1).abs() < 1e-15);
        assert!(sbm_conditional_rdf(&reference, -1.0).is_err());
    }

    #[test]
    fn interval_examples() {
        let reference = reference_sbm();
        let iv = sbm_rdf_interval(&reference, 495.0).unwrap();
        assert!((iv.lower - 1181.222717360915).abs() < 1e-9);
        assert!((iv.upper - iv.lower - 157.095_059_445_466_86).abs() < 1e-9);
        let past = sbm_rdf_interval(&reference, 1242.45).unwrap();
        assert_eq!(past.lower, 0.0);

        let single = SbmParams::new(30, vec![1.0], vec![vec![0.2]]).unwrap();
        let iv = sbm_rdf_interval(&single, 10.0).unwrap();
        let er = er_rdf(&ErParams::new(30, 0.2).unwrap(), 10.0).unwrap();
        assert_eq!(iv.lower, iv.upper);
        assert!((iv.lower - er.rate_bits).abs() < 1e-12 * er.rate_bits);
    }

    #[test]
    fn interval_between_boundaries() {
        // conditional boundary 45*0.5*0.2 ... strictly below the independence one
        let params =
            SbmParams::new(10, vec![0.5, 0.5], vec![vec![0.9, 0.1], vec![0.1, 0.9]]).unwrap();
        let cond = sbm_distortion_boundary(&params);
        let indep = sbm_independence_boundary(&params);
        assert!(cond < indep);
        let iv = sbm_rdf_interval(&params, 0.5 * (cond + indep)).unwrap();
        assert_eq!(iv.lower, 0.0);
        assert!((iv.upper - 10.0).abs() < 1e-12);
    }

    #[test]
    fn inhomogeneous_examples() {
        let params = InhomErParams::new(3, vec![0.05, 0.3, 0.5]).unwrap();
        let zero = inhomogeneous_er_rdf(&params, 0.0).unwrap();
        assert_eq!(
            zero.rate_bits,
            crate::models::inhomogeneous_er_entropy(&params)
        );
        // h2(0.3) + 1 - 2 h2(0.075), 30-digit reference 1.112667810977698...
        let r = inhomogeneous_er_rdf(&params, 0.2).unwrap();
        assert!((r.rate_bits - 1.112_667_810_977_698_4).abs() < 1e-13);
        assert!((r.water_level - 0.075).abs() < 1e-15);
        assert_eq!(inhomogeneous_er_rdf(&params, 0.85).unwrap().rate_bits, 0.0);
    }

    #[test]
    fn er_examples() {
        let er = ErParams::new(100, 0.5).unwrap();
        assert_eq!(er_rdf(&er, 0.0).unwrap().rate_bits, 4950.0);
        assert_eq!(er_rdf(&er, 2475.0).unwrap().rate_bits, 0.0);
        let one = ErParams::new(2, 0.2).unwrap();
        // h2(0.2) - h2(0.1) = 0.252932501298081126...
        assert!((er_rdf(&one, 0.1).unwrap().rate_bits - 0.252_932_501_298_081_1).abs() < 1e-15);
        assert_eq!(er_rdf(&one, 0.5).unwrap().rate_bits, 0.0);
    }

    #[test]
    fn curve_examples() {
        let model = Model::Sbm(reference_sbm());
        let curve = rdf_curve(&model, &Grid::Points(200)).unwrap();
        assert_eq!(curve.len(), 200);
        assert!((curve[0].rate_bits - 3502.750905627857).abs() < 1e-9);
        assert!(curve[199].rate_bits <= 1e-9);
        assert!(curve
            .windows(2)
            .all(|w| w[1].rate_bits <= w[0].rate_bits + 1e-10));

        let single = rdf_curve(&model, &Grid::Points(1)).unwrap();
        assert_eq!(single.len(), 1);
        assert_eq!(single[0].distortion_abs, 0.0);
        let explicit = rdf_curve(&model, &Grid::Explicit(vec![0.0])).unwrap();
        assert_eq!(explicit, single);

        assert!(rdf_curve(&model, &Grid::Explicit(vec![1.0, -1.0])).is_err());
        assert!(rdf_curve(&model, &Grid::Explicit(vec![3.0, 1.0])).is_err());
        assert!(rdf_curve(&model, &Grid::Points(0)).is_err());
    }

    #[test]
    fn curve_reduction_k1() {
        let sbm = Model::Sbm(SbmParams::new(40, vec![1.0], vec![vec![0.35]]).unwrap());
        let er = Model::Er(ErParams::new(40, 0.35).unwrap());
        let a = rdf_curve(&sbm, &Grid::Points(50)).unwrap();
        let b = rdf_curve(&er, &Grid::Points(50)).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.distortion_abs, y.distortion_abs);
            assert!((x.rate_bits - y.rate_bits).abs() <= 1e-12 * y.rate_bits.max(1.0));
        }
    }

    fn sbm_strategy() -> impl Strategy<Value = SbmParams> {
        (1usize..4, 2usize..120).prop_flat_map(|(k, n)| {
            (
                prop::collection::vec(0.05..1.0f64, k),
                prop::collection::vec(0.0..=1.0f64, k * (k + 1) / 2),
            )
                .prop_map(move |(raw, upper)| {
                    let s: f64 = raw.iter().sum();
                    let mut p: Vec<f64> = raw.iter().map(|v| v / s).collect();
                    let rest: f64 = p[1..].iter().sum();
                    p[0] = 1.0 - rest;
                    let mut idx = 0;
                    let mut w = vec![vec![0.0; k]; k];
                    for l in 0..k {
                        for m in l..k {
                            w[l][m] = upper[idx];
                            w[m][l] = upper[idx];
                            idx += 1;
                        }
                    }
                    SbmParams::new(n, p, w).unwrap()
                })
        })
    }

    proptest! {
        #[test]
        fn nonincreasing_and_convex(params in sbm_strategy(), a in 0.0..=1.0f64, b in 0.0..=1.0f64) {
            let boundary = sbm_distortion_boundary(&params);
            let (d1, d2) = if a <= b { (a * boundary, b * boundary) } else { (b * boundary, a * boundary) };
            let r1 = sbm_conditional_rdf(&params, d1).unwrap().rate_bits;
            let r2 = sbm_conditional_rdf(&params, d2).unwrap().rate_bits;
            let rm = sbm_conditional_rdf(&params, 0.5 * (d1 + d2)).unwrap().rate_bits;
            prop_assert!(r1 >= r2 - 1e-10);
            prop_assert!(rm <= 0.5 * (r1 + r2) + 1e-9);
        }

        #[test]
        fn endpoints(params in sbm_strategy()) {
            let r0 = sbm_conditional_rdf(&params, 0.0).unwrap().rate_bits;
            prop_assert!((r0 - sbm_conditional_entropy(&params)).abs() <= 1e-10 * r0.max(1.0));
            let rb = sbm_conditional_rdf(&params, sbm_distortion_boundary(&params)).unwrap();
            prop_assert!(rb.rate_bits <= 1e-9);
        }

        #[test]
        fn reduction_chain(q in 0.0..=1.0f64, n in 2usize..80, frac in 0.0..=1.0f64) {
            let er = ErParams::new(n, q).unwrap();
            let sbm = SbmParams::new(n, vec![1.0], vec![vec![q]]).unwrap();
            let inh = InhomErParams::homogeneous(n, q).unwrap();
            let d = frac * pair_count(n) as f64 * cap(q);
            let a = er_rdf(&er, d).unwrap().rate_bits;
            let b = sbm_conditional_rdf(&sbm, d).unwrap().rate_bits;
            let c = inhomogeneous_er_rdf(&inh, d).unwrap().rate_bits;
            let scale = er_entropy(&er).max(1.0);
            prop_assert!((a - b).abs() <= 1e-12 * scale);
            prop_assert!((a - c).abs() <= 1e-12 * scale);
        }
    }
}
