//! JSON checkpoints: network shape plus the flat parameter vector.
//!
//! Floats are written in shortest round-trip form, so a save/load cycle
//! reproduces every parameter bit for bit.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::network::{Network, NetworkShape};
use super::params::ParameterStore;
use crate::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "unlearn-lab/network";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub shape: NetworkShape,
    pub params: Vec<f64>,
}

impl Checkpoint {
    pub fn from_network(net: &Network) -> Self {
        Self {
            format: CHECKPOINT_FORMAT.to_owned(),
            version: CHECKPOINT_VERSION,
            shape: net.shape().clone(),
            params: net.params().values().to_vec(),
        }
    }

    pub fn into_network(self) -> Result<Network> {
        if self.format != CHECKPOINT_FORMAT {
            return Err(Error::Format(format!(
                "unknown checkpoint format {:?}",
                self.format
            )));
        }
        if self.version != CHECKPOINT_VERSION {
            return Err(Error::Format(format!(
                "unsupported checkpoint version {}",
                self.version
            )));
        }
        self.shape.validate()?;
        let params = ParameterStore::from_values(self.shape.layout(), self.params)?;
        Network::new(self.shape, params)
    }
}

pub fn to_json(net: &Network) -> Result<String> {
    Ok(serde_json::to_string(&Checkpoint::from_network(net))?)
}

pub fn from_json(s: &str) -> Result<Network> {
    serde_json::from_str::<Checkpoint>(s)?.into_network()
}

pub fn save(net: &Network, path: &Path) -> Result<()> {
    fs::write(path, to_json(net)?).map_err(|e| Error::io(path, e))
}

pub fn load(path: &Path) -> Result<Network> {
    let s = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_json(&s)
}
