use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::array::{LinkBudget, UpaConfig};
use crate::scenario::FleetConfig;
use crate::sensing::{EchoArrays, SensingConfig};
use crate::{Error, Result};

/// Array sizes: BS transmit (`nt`), BS echo receive (`nrb`), UAV receive (`nru`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArrayConfig {
    pub nt_x: usize,
    pub nt_y: usize,
    pub nrb_x: usize,
    pub nrb_y: usize,
    pub nru_x: usize,
    pub nru_y: usize,
}

impl Default for ArrayConfig {
    fn default() -> Self {
        Self {
            nt_x: 8,
            nt_y: 8,
            nrb_x: 8,
            nrb_y: 8,
            nru_x: 8,
            nru_y: 8,
        }
    }
}

impl ArrayConfig {
    pub fn bs_tx(&self) -> Result<UpaConfig> {
        UpaConfig::new(self.nt_x, self.nt_y)
    }

    pub fn bs_rx(&self) -> Result<UpaConfig> {
        UpaConfig::new(self.nrb_x, self.nrb_y)
    }

    pub fn uav_rx(&self) -> Result<UpaConfig> {
        UpaConfig::new(self.nru_x, self.nru_y)
    }

    pub fn echo(&self) -> EchoArrays {
        EchoArrays {
            n_t: self.nt_x * self.nt_y,
            n_rb: self.nrb_x * self.nrb_y,
        }
    }

    /// Square-ish layout for `n` elements per array (64 → 8×8, 128 → 8×16).
    pub fn with_elements(n: usize) -> Result<Self> {
        let mut nx = (n as f64).sqrt().floor() as usize;
        while nx > 1 && n % nx != 0 {
            nx -= 1;
        }
        let nx = nx.max(1);
        let ny = n / nx;
        if nx * ny != n || n == 0 {
            return Err(Error::Config(format!("cannot lay out {n} elements")));
        }
        Ok(Self {
            nt_x: nx,
            nt_y: ny,
            nrb_x: nx,
            nrb_y: ny,
            nru_x: nx,
            nru_y: ny,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub scheme: String,
    pub trials: usize,
    pub master_seed: u64,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scheme: "dia".into(),
            trials: 40,
            master_seed: 1,
            out_dir: PathBuf::from("out"),
        }
    }
}

/// Complete simulation configuration. Every section and key is optional in
/// the JSON file; missing values take the defaults below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub fleet: FleetConfig,
    pub sensing: SensingConfig,
    pub link: LinkBudget,
    pub array: ArrayConfig,
    pub run: RunConfig,
}

impl SimConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let cfg: SimConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("cannot parse config {}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.fleet.validate()?;
        self.sensing.validate()?;
        self.link.validate()?;
        self.array.bs_tx()?;
        self.array.bs_rx()?;
        self.array.uav_rx()?;
        if self.run.trials < 1 {
            return Err(Error::Config("run.trials must be at least 1".into()));
        }
        Ok(())
    }

    /// Base-station position; the fleet is generated around the origin.
    pub fn bs_position(&self) -> Vector3<f64> {
        Vector3::zeros()
    }

    /// Same configuration with every noise source switched off.
    pub fn noiseless(mut self) -> Self {
        self.fleet.sigma_p = 0.0;
        self.fleet.sigma_v = 0.0;
        self.sensing.sigma = 0.0;
        self
    }
}
