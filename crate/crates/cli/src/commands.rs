use std::path::Path;

use serde::Serialize;
use serde_json::json;

use sbmrd::oracle::{MAX_ORACLE_COMMUNITIES, MAX_ORACLE_EDGES, MAX_ORACLE_NODES};
use sbmrd::simulate::monte_carlo_distortion_with;
use sbmrd::waterfill::er_kkt_certificate;
use sbmrd::{
    apply_test_channel, conditional_sbm_oracle, er_entropy, inhomogeneous_er_entropy,
    joint_graph_rdf_oracle, kkt_certificate, pair_count, rdf_curve, sample_graph, sample_labels,
    sbm_conditional_entropy, sbm_entropy_interval, solve_er_waterfill, solve_sbm_waterfill, Grid,
    InhomErParams, Model, RngSpec, SimOptions,
};

use crate::config::{CommandConfig, GridSpec};
use crate::error::CliError;
use crate::format::fmt_sig;

pub const DEFAULT_POINTS: usize = 200;
pub const DEFAULT_TRIALS: usize = 1000;
pub const DEFAULT_VERIFY_TOL: f64 = 1e-4;
/// Distortion-matching tolerance handed to the oracles.
const ORACLE_DISTORTION_TOL: f64 = 1e-10;

/// Flag values that override the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub d: Option<f64>,
    pub points: Option<usize>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub threads: Option<usize>,
}

fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Compute(format!("serializing output: {e}")))?;
    s.push('\n');
    Ok(s)
}

fn homogeneous(model: &Model) -> Result<Option<InhomErParams>, CliError> {
    match model {
        Model::Er(p) => Ok(Some(InhomErParams::homogeneous(p.n(), p.p())?)),
        Model::InhomEr(p) => Ok(Some(p.clone())),
        Model::Sbm(_) => Ok(None),
    }
}

fn required_d(cfg: &CommandConfig, over: &Overrides) -> Result<f64, CliError> {
    over.d
        .or(cfg.d)
        .ok_or_else(|| CliError::Config("a distortion is required (--D or \"D\")".into()))
}

pub fn cmd_entropy(cfg: CommandConfig) -> Result<String, CliError> {
    let model = cfg.model.validate()?;
    let value = match &model {
        Model::Sbm(p) => {
            let iv = sbm_entropy_interval(p);
            json!({
                "model": "sbm",
                "conditional_bits": sbm_conditional_entropy(p),
                "interval": [iv.lower, iv.upper],
            })
        }
        Model::Er(p) => json!({ "model": "er", "entropy_bits": er_entropy(p) }),
        Model::InhomEr(p) => {
            json!({ "model": "inhom_er", "entropy_bits": inhomogeneous_er_entropy(p) })
        }
    };
    to_json(&value)
}

pub fn cmd_curve(cfg: CommandConfig, over: &Overrides) -> Result<String, CliError> {
    let model = cfg.model.validate()?;
    let grid = match (over.points, cfg.grid) {
        (Some(points), _) => Grid::Points(points),
        (None, Some(GridSpec::Points { points })) => Grid::Points(points),
        (None, Some(GridSpec::Explicit(values))) => Grid::Explicit(values),
        (None, None) => Grid::Points(DEFAULT_POINTS),
    };
    let curve = rdf_curve(&model, &grid)?;
    let mut writer = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Compute(format!("writing csv: {e}"));
    writer
        .write_record(["D", "D_per_edge", "rate_bits", "mu"])
        .map_err(io)?;
    for point in &curve {
        writer
            .write_record([
                fmt_sig(point.distortion_abs),
                fmt_sig(point.distortion_per_edge),
                fmt_sig(point.rate_bits),
                fmt_sig(point.water_level),
            ])
            .map_err(io)?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| CliError::Compute(format!("writing csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| CliError::Compute(e.to_string()))
}

pub fn cmd_waterfill(cfg: CommandConfig, over: &Overrides) -> Result<String, CliError> {
    let d = required_d(&cfg, over)?;
    let model = cfg.model.validate()?;
    let value = match &model {
        Model::Sbm(p) => {
            let alloc = solve_sbm_waterfill(p, d)?;
            let cert = kkt_certificate(p, &alloc);
            json!({
                "model": "sbm",
                "D": d,
                "D_per_edge": alloc.normalized_distortion,
                "mu": alloc.mu,
                "dstar": alloc.dstar,
                "kkt": cert,
                "kkt_max_violation": cert.max_violation(),
            })
        }
        _ => {
            let params = homogeneous(&model)?.expect("non-sbm model");
            let alloc = solve_er_waterfill(&params, d)?;
            let cert = er_kkt_certificate(&params, &alloc, d);
            json!({
                "model": if matches!(model, Model::Er(_)) { "er" } else { "inhom_er" },
                "D": d,
                "D_per_edge": d / pair_count(params.n()) as f64,
                "lambda": alloc.lambda,
                "d": alloc.d,
                "kkt": cert,
                "kkt_max_violation": cert.max_violation(),
            })
        }
    };
    to_json(&value)
}

#[derive(Debug, Serialize)]
struct VerifyRow {
    #[serde(rename = "D")]
    d: f64,
    closed_form_bits: f64,
    oracle_bits: f64,
    abs_diff: f64,
    achieved_distortion: f64,
    iterations: usize,
    within: bool,
}

#[derive(Debug, Serialize)]
struct VerifyReport {
    tolerance: f64,
    all_within: bool,
    max_abs_diff: f64,
    results: Vec<VerifyRow>,
}

/// Returns the report and whether every point is within tolerance.
pub fn cmd_verify(cfg: CommandConfig, over: &Overrides) -> Result<(String, bool), CliError> {
    let tol = over.tol.or(cfg.tol).unwrap_or(DEFAULT_VERIFY_TOL);
    let model = cfg.model.validate()?;
    match &model {
        Model::Sbm(p) if p.n() > MAX_ORACLE_NODES || p.k() > MAX_ORACLE_COMMUNITIES => {
            return Err(CliError::Config(format!(
                "instance too large for the oracle: n = {}, k = {} (limits n <= {MAX_ORACLE_NODES}, k <= {MAX_ORACLE_COMMUNITIES})",
                p.n(),
                p.k()
            )));
        }
        Model::Er(_) | Model::InhomEr(_) if pair_count(model.n()) > MAX_ORACLE_EDGES => {
            return Err(CliError::Config(format!(
                "instance too large for the oracle: {} vertex pairs (limit {MAX_ORACLE_EDGES})",
                pair_count(model.n())
            )));
        }
        _ => {}
    }
    if !(tol > 0.0) {
        return Err(CliError::Compute(format!(
            "tolerance {tol} is unattainable; it must be positive"
        )));
    }
    let values = match (over.d, cfg.d_list, cfg.d) {
        (Some(d), _, _) => vec![d],
        (None, Some(list), _) => list,
        (None, None, Some(d)) => vec![d],
        (None, None, None) => {
            let boundary = model.distortion_boundary();
            [0.1, 0.3, 0.5, 0.7, 0.9]
                .iter()
                .map(|f| f * boundary)
                .collect()
        }
    };

    let mut rows = Vec::with_capacity(values.len());
    for d in values {
        let closed = model.rdf(d)?.rate_bits;
        let oracle = match &model {
            Model::Sbm(p) => conditional_sbm_oracle(p, d, ORACLE_DISTORTION_TOL)?.result,
            _ => {
                let params = homogeneous(&model)?.expect("non-sbm model");
                joint_graph_rdf_oracle(params.edge_probs(), d, ORACLE_DISTORTION_TOL)?.result
            }
        };
        let diff = (oracle.rate_bits - closed).abs();
        rows.push(VerifyRow {
            d,
            closed_form_bits: closed,
            oracle_bits: oracle.rate_bits,
            abs_diff: diff,
            achieved_distortion: oracle.achieved_distortion,
            iterations: oracle.iterations,
            within: diff <= tol,
        });
    }
    let all_within = rows.iter().all(|r| r.within);
    let report = VerifyReport {
        tolerance: tol,
        all_within,
        max_abs_diff: rows.iter().map(|r| r.abs_diff).fold(0.0, f64::max),
        results: rows,
    };
    Ok((to_json(&report)?, all_within))
}

pub fn cmd_simulate(
    cfg: CommandConfig,
    over: &Overrides,
    dump_dir: Option<&Path>,
) -> Result<String, CliError> {
    let d = required_d(&cfg, over)?;
    let trials = over.trials.or(cfg.trials).unwrap_or(DEFAULT_TRIALS);
    if trials == 0 {
        return Err(CliError::Config("trials must be at least 1".into()));
    }
    let seed = over.seed.or(cfg.seed).unwrap_or(0);
    let Model::Sbm(params) = cfg.model.validate()? else {
        return Err(CliError::Config("simulate requires an sbm model".into()));
    };
    let rng = RngSpec::new(seed);
    let report = monte_carlo_distortion_with(
        &params,
        d,
        trials,
        rng,
        SimOptions {
            threads: over.threads,
        },
    )?;
    if let Some(dir) = dump_dir {
        let alloc = solve_sbm_waterfill(&params, d)?;
        let labels = sample_labels(&params, &rng);
        let graph = sample_graph(&labels, params.connection(), &rng)?;
        let recon = apply_test_channel(&graph, &labels, &alloc, params.connection(), &rng)?;
        let write = |name: &str, text: String| {
            std::fs::write(dir.join(name), text)
                .map_err(|e| CliError::Compute(format!("writing {name}: {e}")))
        };
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Compute(format!("creating {}: {e}", dir.display())))?;
        write("labels.txt", labels.to_text())?;
        write("graph.txt", graph.to_text())?;
        write("reconstruction.txt", recon.to_text())?;
    }
    to_json(&report)
}
