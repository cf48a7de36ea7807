//! Run configuration loaded from a JSON file. Missing keys take defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};

use noma_mop::experiments::{EvalContext, SweepSetup};
use noma_mop::numeric::SolverConfig;
use noma_mop::scenario::{CellGeometry, ChannelParams};
use noma_mop::model::SystemParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Inverse amplifier efficiency.
    pub phi: f64,
    /// Circuit power, mW.
    pub q: f64,
    /// Per-user power budget, mW.
    pub p_max: f64,
    pub k_s: f64,
    pub k_e: f64,
    /// Bandwidth per user, Hz.
    pub bandwidth: f64,
    /// Noise spectral density, dBm/Hz.
    pub n0: f64,
    /// Noise figure, dB.
    pub nf: f64,
    /// Path-loss constant G0, dB.
    pub g0: f64,
    pub n_exp: f64,
    pub r_inner: f64,
    pub r_outer: f64,
    pub seed: u64,
    pub drops: usize,
    /// Points per axis of the grid used by `oracle-check`.
    pub oracle_grid: usize,
    pub solver: SolverConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            phi: 2.0,
            q: 10.0,
            p_max: 10.0,
            k_s: 30.0,
            k_e: 1.0,
            bandwidth: 1e5,
            n0: -170.0,
            nf: 10.0,
            g0: -70.0,
            n_exp: 2.0,
            r_inner: 10.0,
            r_outer: 100.0,
            seed: 1,
            drops: 50,
            oracle_grid: 1000,
            solver: SolverConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, String> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("bad config {}: {e}", path.display()))
    }

    pub fn params(&self) -> SystemParams {
        SystemParams {
            phi: self.phi,
            q: self.q,
            k_s: self.k_s,
            k_e: self.k_e,
            bandwidth_hz: self.bandwidth,
        }
    }

    pub fn channel(&self) -> ChannelParams {
        ChannelParams {
            g0_db: self.g0,
            n_exp: self.n_exp,
            n0_dbm_hz: self.n0,
            nf_db: self.nf,
            bandwidth_hz: self.bandwidth,
        }
    }

    pub fn geometry(&self) -> CellGeometry {
        CellGeometry {
            r_inner: self.r_inner,
            r_outer: self.r_outer,
        }
    }

    pub fn sweep_setup(&self) -> SweepSetup {
        SweepSetup {
            ctx: EvalContext {
                params: self.params(),
                p_max: self.p_max,
                solver: self.solver.clone(),
            },
            geometry: self.geometry(),
            channel: self.channel(),
            drops: self.drops,
            seed: self.seed,
        }
    }
}
