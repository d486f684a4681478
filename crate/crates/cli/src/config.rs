//! TOML layout of `simulate --config`.

use serde::{Deserialize, Serialize};

use delayfront::birthfn::BirthFunction;
use delayfront::pdesim::{Initial, SimConfig};

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SimFile {
    /// Birth-function spec, same grammar as `--g`.
    pub g: String,
    pub h: f64,
    pub length: f64,
    pub nx: usize,
    /// Defaults to the largest stable step dividing `h`.
    pub dt: Option<f64>,
    pub t_end: f64,
    pub level: Option<f64>,
    #[serde(default = "default_record_interval")]
    pub record_interval: f64,
    pub initial: InitialFile,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialFile {
    Bump { width: f64, height: f64 },
    Step { height: f64 },
}

fn default_record_interval() -> f64 {
    0.5
}

impl SimFile {
    pub fn into_config(self) -> Result<SimConfig, delayfront::Error> {
        let g: BirthFunction = self.g.parse()?;
        let nx = self.nx.max(3);
        Ok(SimConfig {
            length: self.length,
            nx: self.nx,
            dt: self
                .dt
                .unwrap_or_else(|| SimConfig::stable_dt(self.length, nx, self.h)),
            t_end: self.t_end,
            h: self.h,
            g,
            initial: match self.initial {
                InitialFile::Bump { width, height } => Initial::Bump { width, height },
                InitialFile::Step { height } => Initial::Step { height },
            },
            level: self.level,
            record_interval: self.record_interval,
        })
    }
}
