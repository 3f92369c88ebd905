use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::models::{ErParams, InhomErParams, SbmParams};

/// JSON form of a model, tagged by `"model"`.
///
/// ```json
/// {"model": "sbm", "n": 100, "p": [0.4, 0.3, 0.3], "W": [[0.5, 0.2, 0.1], [0.2, 0.5, 0.1], [0.1, 0.1, 0.4]]}
/// {"model": "er", "n": 100, "p": 0.5}
/// {"model": "inhom_er", "n": 3, "edge_probs": [0.05, 0.3, 0.5]}
/// ```
///
/// `edge_probs` is dense in pair-index order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelSpec {
    Sbm {
        n: usize,
        p: Vec<f64>,
        #[serde(rename = "W")]
        w: Vec<Vec<f64>>,
    },
    Er {
        n: usize,
        p: f64,
    },
    InhomEr {
        n: usize,
        edge_probs: Vec<f64>,
    },
}

impl ModelSpec {
    pub fn validate(self) -> Result<Model> {
        Ok(match self {
            ModelSpec::Sbm { n, p, w } => Model::Sbm(SbmParams::new(n, p, w)?),
            ModelSpec::Er { n, p } => Model::Er(ErParams::new(n, p)?),
            ModelSpec::InhomEr { n, edge_probs } => {
                Model::InhomEr(InhomErParams::new(n, edge_probs)?)
            }
        })
    }
}

/// A validated graph source.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Sbm(SbmParams),
    Er(ErParams),
    InhomEr(InhomErParams),
}

impl Model {
    pub fn n(&self) -> usize {
        match self {
            Model::Sbm(p) => p.n(),
            Model::Er(p) => p.n(),
            Model::InhomEr(p) => p.n(),
        }
    }

    pub fn to_spec(&self) -> ModelSpec {
        match self {
            Model::Sbm(p) => ModelSpec::Sbm {
                n: p.n(),
                p: p.prior().as_slice().to_vec(),
                w: p.connection().rows(),
            },
            Model::Er(p) => ModelSpec::Er { n: p.n(), p: p.p() },
            Model::InhomEr(p) => ModelSpec::InhomEr {
                n: p.n(),
                edge_probs: p.edge_probs().to_vec(),
            },
        }
    }
}
