//! Simulation parameters.
//!
//! A [`SystemConfig`] is a flat record of every scalar that drives the
//! simulator. It is read from (and written to) flat TOML with exactly the
//! field names of the struct; unknown keys are rejected. Field-level
//! overrides of the form `key=value` are applied on top of a parsed file.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

/// Boltzmann constant in J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// Reference noise temperature in K.
pub const T0_KELVIN: f64 = 290.0;
/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    /// Communication APs.
    pub n_cap: usize,
    /// Sensing transmit APs.
    pub n_sap_tx: usize,
    /// Sensing receive APs.
    pub n_sap_rx: usize,
    /// Single-antenna UEs; UE index 0 is the suspicious one.
    pub n_ue: usize,
    /// Antennas per AP.
    pub n_ant_ap: usize,
    /// Monitor antennas.
    pub n_ant_pm: usize,

    /// Transmit powers in watts.
    pub p_c: f64,
    pub p_s: f64,
    pub p_p: f64,
    pub p_pm: f64,
    pub noise_figure_db: f64,
    pub bandwidth_hz: f64,
    pub carrier_hz: f64,

    /// Pilot length in symbols.
    pub tau_p: usize,
    /// Monitor spoofing pilot power relative to the UE pilot power.
    pub rho_p_pm_scale: f64,

    pub sigma_sh_db: f64,
    /// Self-interference channel variance in dB (0 dB = unit variance).
    pub sigma_si_db: f64,
    pub sigma_rcs_m2: f64,
    /// Exponent applied to the free-space factor of air links.
    pub pathloss_exponent: f64,
    pub target_height_m: f64,
    pub monitor_radius_m: f64,
    /// Side of the wrap-around square in km.
    pub area_km: f64,

    /// Sensing detection threshold.
    pub kappa_db: f64,
    pub theta_pm_t: f64,
    pub theta_pm_1: f64,

    pub seed: u64,
    pub mc_trials: usize,
    pub topo_draws: usize,
}

impl Default for SystemConfig {
    fn default() -> Self {
        default_config()
    }
}

/// Reference deployment: 20 C-APs, 3 + 3 S-APs, 5 UEs on a 1 km square.
pub fn default_config() -> SystemConfig {
    SystemConfig {
        n_cap: 20,
        n_sap_tx: 3,
        n_sap_rx: 3,
        n_ue: 5,
        n_ant_ap: 5,
        n_ant_pm: 32,
        p_c: 1.0,
        p_s: 1.0,
        p_p: 0.2,
        p_pm: 1.0,
        noise_figure_db: 8.0,
        bandwidth_hz: 20e6,
        carrier_hz: 1.9e9,
        tau_p: 5,
        rho_p_pm_scale: 1.0,
        sigma_sh_db: 9.0,
        sigma_si_db: 0.0,
        sigma_rcs_m2: 0.1,
        pathloss_exponent: 2.0,
        target_height_m: 100.0,
        monitor_radius_m: 50.0,
        area_km: 1.0,
        kappa_db: 3.0,
        theta_pm_t: 0.5,
        theta_pm_1: 0.5,
        seed: 1,
        mc_trials: 100_000,
        topo_draws: 500,
    }
}

/// One violated invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: &'static str,
    pub message: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

/// Every violated invariant of `cfg`; empty iff the config is admissible.
pub fn validate(cfg: &SystemConfig) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut check = |ok: bool, field: &'static str, message: &str| {
        if !ok {
            out.push(Violation {
                field,
                message: message.to_string(),
            });
        }
    };

    for (field, n) in [
        ("n_cap", cfg.n_cap),
        ("n_sap_tx", cfg.n_sap_tx),
        ("n_sap_rx", cfg.n_sap_rx),
        ("n_ue", cfg.n_ue),
        ("n_ant_ap", cfg.n_ant_ap),
        ("n_ant_pm", cfg.n_ant_pm),
        ("tau_p", cfg.tau_p),
        ("mc_trials", cfg.mc_trials),
        ("topo_draws", cfg.topo_draws),
    ] {
        check(n >= 1, field, "count must be at least 1");
    }

    for (field, p) in [
        ("p_c", cfg.p_c),
        ("p_s", cfg.p_s),
        ("p_p", cfg.p_p),
        ("bandwidth_hz", cfg.bandwidth_hz),
        ("carrier_hz", cfg.carrier_hz),
        ("pathloss_exponent", cfg.pathloss_exponent),
        ("target_height_m", cfg.target_height_m),
        ("area_km", cfg.area_km),
    ] {
        check(p.is_finite() && p > 0.0, field, "must be finite and > 0");
    }

    // A silent monitor (p_pm = 0) is the no-jamming reference.
    for (field, v) in [
        ("p_pm", cfg.p_pm),
        ("rho_p_pm_scale", cfg.rho_p_pm_scale),
        ("sigma_sh_db", cfg.sigma_sh_db),
        ("sigma_rcs_m2", cfg.sigma_rcs_m2),
        ("monitor_radius_m", cfg.monitor_radius_m),
    ] {
        check(v.is_finite() && v >= 0.0, field, "must be finite and >= 0");
    }

    for (field, v) in [
        ("noise_figure_db", cfg.noise_figure_db),
        ("sigma_si_db", cfg.sigma_si_db),
        ("kappa_db", cfg.kappa_db),
    ] {
        check(v.is_finite(), field, "must be finite");
    }

    check(
        (0.0..=1.0).contains(&cfg.theta_pm_t),
        "theta_pm_t",
        "must lie in [0, 1]",
    );
    check(
        (0.0..=1.0).contains(&cfg.theta_pm_1),
        "theta_pm_1",
        "must lie in [0, 1]",
    );
    check(
        cfg.theta_pm_t + cfg.theta_pm_1 <= 1.0 + 1e-12,
        "theta_pm_t+theta_pm_1",
        "monitor power split exceeds the power constraint (sum > 1)",
    );
    check(
        cfg.seed <= i64::MAX as u64,
        "seed",
        "must fit in a signed 64-bit integer",
    );
    check(
        cfg.monitor_radius_m < 0.5 * cfg.area_km * 1000.0,
        "monitor_radius_m",
        "must be smaller than half the area side",
    );
    out
}

/// Returns `cfg` unchanged if admissible, otherwise an error listing every violation.
pub fn ensure_valid(cfg: &SystemConfig) -> Result<()> {
    let v = validate(cfg);
    if v.is_empty() {
        Ok(())
    } else {
        let msg = v.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ");
        Err(SimError::InvalidConfig(msg))
    }
}

/// Thermal noise power k_B·T0·B scaled by the noise figure.
pub fn noise_power_w(cfg: &SystemConfig) -> Result<f64> {
    if !(cfg.bandwidth_hz > 0.0) {
        return Err(SimError::InvalidConfig(format!(
            "bandwidth_hz must be > 0, got {}",
            cfg.bandwidth_hz
        )));
    }
    Ok(BOLTZMANN * T0_KELVIN * cfg.bandwidth_hz * db_to_linear(cfg.noise_figure_db))
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

impl SystemConfig {
    pub fn wavelength_m(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_hz
    }

    pub fn area_side_m(&self) -> f64 {
        self.area_km * 1000.0
    }

    /// Total APs modelled: C-APs, then sensing transmitters, then sensing receivers.
    pub fn n_ap_total(&self) -> usize {
        self.n_cap + self.n_sap_tx + self.n_sap_rx
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| SimError::Parse(e.to_string()))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| SimError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    /// Applies one `key=value` override. The key must name an existing field.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (key, raw) = assignment
            .split_once('=')
            .ok_or_else(|| SimError::Parse(format!("expected key=value, got `{assignment}`")))?;
        let key = key.trim();
        let raw = raw.trim();

        let mut table: toml::Table = toml::from_str(&self.to_toml_string()?)
            .map_err(|e| SimError::Parse(e.to_string()))?;
        let current = table
            .get(key)
            .ok_or_else(|| SimError::UnknownKey(key.to_string()))?;

        let parsed: toml::Table = toml::from_str(&format!("v = {raw}"))
            .map_err(|e| SimError::Parse(format!("bad value for `{key}`: {e}")))?;
        let mut value = parsed["v"].clone();
        if let (toml::Value::Float(_), toml::Value::Integer(i)) = (current, &value) {
            value = toml::Value::Float(*i as f64);
        }
        table.insert(key.to_string(), value);

        let text = toml::to_string(&table).map_err(|e| SimError::Parse(e.to_string()))?;
        *self = Self::from_toml_str(&text)?;
        Ok(())
    }

    pub fn with_overrides<'a>(mut self, overrides: impl IntoIterator<Item = &'a str>) -> Result<Self> {
        for o in overrides {
            self.apply_override(o)?;
        }
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_reference_setup() {
        let c = default_config();
        assert_eq!((c.n_cap, c.n_sap_tx, c.n_sap_rx, c.n_ue), (20, 3, 3, 5));
        assert_eq!(c.kappa_db, 3.0);
        assert_eq!(c.sigma_rcs_m2, 0.1);
        assert_eq!(c.p_p, 0.2);
        assert_eq!((c.p_c, c.p_s), (1.0, 1.0));
        assert_eq!(c.sigma_sh_db, 9.0);
        assert_eq!(c.noise_figure_db, 8.0);
        assert_eq!(c.area_km, 1.0);
        assert_eq!(c.tau_p, c.n_ue);
    }

    #[test]
    fn default_is_admissible() {
        assert!(validate(&default_config()).is_empty());
    }

    #[test]
    fn power_split_violation_is_reported() {
        let mut c = default_config();
        c.theta_pm_t = 0.7;
        c.theta_pm_1 = 0.4;
        let v = validate(&c);
        assert_eq!(v.len(), 1, "{v:?}");
        assert!(v[0].field.contains("theta_pm_t+theta_pm_1"));
        assert!(v[0].message.contains("power constraint"));
    }

    #[test]
    fn zero_ues_is_reported() {
        let mut c = default_config();
        c.n_ue = 0;
        let v = validate(&c);
        assert_eq!(v.len(), 1, "{v:?}");
        assert_eq!(v[0].field, "n_ue");
    }

    #[test]
    fn noise_power_reference_values() {
        let c = default_config();
        // 1.380649e-23 * 290 * 20e6 * 10^0.8
        let hand = 1.380649e-23 * 290.0 * 2.0e7 * 6.309_573_444_801_933;
        let n = noise_power_w(&c).unwrap();
        assert!((n - hand).abs() / hand < 1e-12);
        assert!((n - 5.03e-13).abs() / 5.03e-13 < 0.01);

        let mut unit = c.clone();
        unit.noise_figure_db = 0.0;
        unit.bandwidth_hz = 1.0;
        let n1 = noise_power_w(&unit).unwrap();
        assert!((n1 - 4.003_882_1e-21).abs() < 1e-27);

        let mut wide = c.clone();
        wide.bandwidth_hz *= 2.0;
        let n2 = noise_power_w(&wide).unwrap();
        assert!((n2 / n - 2.0).abs() < 1e-12);
    }

    #[test]
    fn non_positive_bandwidth_is_rejected() {
        let mut c = default_config();
        c.bandwidth_hz = 0.0;
        assert!(matches!(noise_power_w(&c), Err(SimError::InvalidConfig(_))));
    }

    #[test]
    fn toml_round_trip() {
        let c = default_config();
        let text = c.to_toml_string().unwrap();
        let back = SystemConfig::from_toml_str(&text).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn unknown_key_is_rejected() {
        let mut text = default_config().to_toml_string().unwrap();
        text.push_str("n_caps = 3\n");
        assert!(SystemConfig::from_toml_str(&text).is_err());

        let mut c = default_config();
        assert!(matches!(
            c.apply_override("kapa_db=4"),
            Err(SimError::UnknownKey(_))
        ));
    }

    #[test]
    fn overrides_apply_with_type_coercion() {
        let c = default_config()
            .with_overrides(["p_pm=3", "n_ant_pm = 64", "seed=42"])
            .unwrap();
        assert_eq!(c.p_pm, 3.0);
        assert_eq!(c.n_ant_pm, 64);
        assert_eq!(c.seed, 42);
        assert!(default_config().with_overrides(["n_ue=abc"]).is_err());
    }
}
