use std::io::Read;
use std::path::Path;

use serde::Deserialize;

use sbmrd::ModelSpec;

use crate::error::CliError;

/// Grid as written in a config: `{"points": 200}` or an explicit list.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    Points { points: usize },
    Explicit(Vec<f64>),
}

/// A model block plus the options any subcommand may read.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct CommandConfig {
    #[serde(flatten)]
    pub model: ModelSpec,
    #[serde(rename = "D", default)]
    pub d: Option<f64>,
    #[serde(rename = "D_list", default)]
    pub d_list: Option<Vec<f64>>,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub trials: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub tol: Option<f64>,
}

impl CommandConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("bad config: {e}")))
    }

    /// Read from a file, or standard input for `-`.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = if path.as_os_str() == "-" {
            let mut buf = String::new();
            std::io::stdin()
                .read_to_string(&mut buf)
                .map_err(|e| CliError::Config(format!("reading stdin: {e}")))?;
            buf
        } else {
            std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("reading {}: {e}", path.display())))?
        };
        Self::parse(&text)
    }
}
