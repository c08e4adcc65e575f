//! TOML configuration files for the `design` and `simulate` commands.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::linkmodel::{rayleigh_channel, ConstellationSpec};
use crate::majorization::Objective;
use crate::matdecomp::{c, CMatrix};
use crate::montecarlo::SweepConfig;
use crate::transceiver::{ChannelInstance, Scheme};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Row-major nested arrays of `[re, im]` pairs.
pub type MatrixRepr = Vec<Vec<[f64; 2]>>;

pub fn matrix_to_repr(m: &CMatrix) -> MatrixRepr {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

pub fn repr_to_matrix(name: &str, rows: &MatrixRepr) -> Result<CMatrix, String> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if n == 0 || m == 0 {
        return Err(format!("matrix `{name}` is empty"));
    }
    if let Some(i) = rows.iter().position(|r| r.len() != m) {
        return Err(format!(
            "matrix `{name}` row {} has {} entries, expected {m}",
            i + 1,
            rows[i].len()
        ));
    }
    Ok(CMatrix::from_fn(n, m, |i, j| c(rows[i][j][0], rows[i][j][1])))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChannelSpec {
    Explicit {
        h: MatrixRepr,
        rn: MatrixRepr,
    },
    /// I.i.d. unit-variance Rayleigh draw with white noise.
    Rayleigh {
        tx_antennas: usize,
        rx_antennas: usize,
        noise_power: f64,
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignConfig {
    pub streams: usize,
    pub total_power: f64,
    pub scheme: Scheme,
    /// QAM order; required for THP, where it fixes `σ_v² = M/(M−1)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constellation: Option<usize>,
    pub objective: Objective,
    pub channel: ChannelSpec,
}

impl DesignConfig {
    pub fn sigma2(&self) -> Result<f64, String> {
        match (self.scheme, self.constellation) {
            (Scheme::Dfe, _) => Ok(1.0),
            (Scheme::Thp, Some(m)) => ConstellationSpec::new(m)
                .map(|s| s.sigma_v2())
                .map_err(|e| e.to_string()),
            (Scheme::Thp, None) => Err("scheme \"thp\" needs `constellation`".into()),
        }
    }

    /// Materializes the channel. Errors are configuration errors.
    pub fn channel_instance(&self) -> Result<ChannelInstance, String> {
        let sigma2 = self.sigma2()?;
        let (h, rn) = match &self.channel {
            ChannelSpec::Explicit { h, rn } => (repr_to_matrix("h", h)?, repr_to_matrix("rn", rn)?),
            ChannelSpec::Rayleigh {
                tx_antennas,
                rx_antennas,
                noise_power,
                seed,
            } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let base = rayleigh_channel(&mut rng, *rx_antennas, *tx_antennas, *noise_power)
                    .map_err(|e| e.to_string())?;
                (base.h().clone(), base.rn().clone())
            }
        };
        ChannelInstance::new(h, rn, self.streams, self.scheme, sigma2).map_err(|e| e.to_string())
    }
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Config {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

pub fn parse_design_config(text: &str) -> Result<DesignConfig, String> {
    toml::from_str(text).map_err(|e| e.to_string())
}

pub fn parse_sweep_config(text: &str) -> Result<SweepConfig, String> {
    let cfg: SweepConfig = toml::from_str(text).map_err(|e| e.to_string())?;
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

pub fn load_design_config(path: &Path) -> Result<DesignConfig, CliError> {
    parse_design_config(&read_text(path)?).map_err(|message| CliError::Config {
        path: path.display().to_string(),
        message,
    })
}

pub fn load_sweep_config(path: &Path) -> Result<SweepConfig, CliError> {
    parse_sweep_config(&read_text(path)?).map_err(|message| CliError::Config {
        path: path.display().to_string(),
        message,
    })
}

pub fn to_toml<T: Serialize>(value: &T) -> String {
    toml::to_string(value).expect("config types serialize to TOML")
}
