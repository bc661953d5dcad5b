//! One deployment: topology, large-scale state, LoS channels and powers.

use crate::channel::{large_scale, LargeScale, LosChannels};
use crate::config::{ensure_valid, SystemConfig};
use crate::error::Result;
use crate::geometry::{draw_topology, Topology};
use crate::power::{full_power_coefficients, PowerAllocation};
use crate::rng::{substream, Purpose};

#[derive(Debug, Clone)]
pub struct Deployment {
    pub cfg: SystemConfig,
    pub index: u64,
    pub topo: Topology,
    pub ls: LargeScale,
    pub los: LosChannels,
    pub pa: PowerAllocation,
}

impl Deployment {
    /// Deployment `index` of the configured seed. Topology and shadowing use
    /// separate streams, so changing one parameter does not reshuffle the other.
    pub fn draw(cfg: &SystemConfig, index: u64) -> Result<Self> {
        ensure_valid(cfg)?;
        let topo = draw_topology(cfg, &mut substream(cfg.seed, Purpose::Topology, index, 0));
        Self::from_topology(cfg, index, topo)
    }

    pub fn from_topology(cfg: &SystemConfig, index: u64, topo: Topology) -> Result<Self> {
        let ls = large_scale(cfg, &topo, &mut substream(cfg.seed, Purpose::Shadowing, index, 0))?;
        let los = LosChannels::new(cfg, &topo, &ls)?;
        let pa = full_power_coefficients(&ls, cfg)?;
        Ok(Self {
            cfg: cfg.clone(),
            index,
            topo,
            ls,
            los,
            pa,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::default_config;

    #[test]
    fn reproducible() {
        let cfg = default_config();
        let a = Deployment::draw(&cfg, 7).unwrap();
        let b = Deployment::draw(&cfg, 7).unwrap();
        assert_eq!(a.topo, b.topo);
        assert_eq!(a.pa, b.pa);
        assert_ne!(Deployment::draw(&cfg, 8).unwrap().topo, a.topo);
    }

    #[test]
    fn invalid_config_is_refused() {
        let mut cfg = default_config();
        cfg.theta_pm_t = 0.9;
        cfg.theta_pm_1 = 0.9;
        assert!(Deployment::draw(&cfg, 0).is_err());
    }
}
