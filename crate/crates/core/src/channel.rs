//! Large-scale gains and per-trial small-scale channel draws.
//!
//! AP index order everywhere: `0..n_cap` are C-APs, then `n_sap_tx`
//! sensing transmitters, then `n_sap_rx` sensing receivers. Ground links are
//! Rayleigh with a three-slope path loss and log-normal shadowing; links that
//! touch the aerial target are deterministic line-of-sight.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::cmat::CMat;
use crate::config::{db_to_linear, noise_power_w, SystemConfig};
use crate::error::{Result, SimError};
use crate::estimation::{split_estimate, EstimationModel};
use crate::geometry::{
    departure_angles, distance_3d_to_target, steering_vector, torus_distance_2d, Point2, Topology,
};
use crate::rng::cn_vec;

/// Three-slope model constants: L in dB, breakpoints in metres.
pub const PL_CONST_DB: f64 = 140.7;
pub const PL_D0_M: f64 = 10.0;
pub const PL_D1_M: f64 = 50.0;

/// Three-slope path loss in dB (negative). Distances enter the logarithms in km.
pub fn three_slope_pathloss_db(d_m: f64) -> Result<f64> {
    if !(d_m > 0.0) {
        return Err(SimError::Domain(format!("path-loss distance must be > 0, got {d_m}")));
    }
    let km = |m: f64| (m / 1000.0).log10();
    Ok(if d_m > PL_D1_M {
        -PL_CONST_DB - 35.0 * km(d_m)
    } else if d_m > PL_D0_M {
        -PL_CONST_DB - 15.0 * km(PL_D1_M) - 20.0 * km(d_m)
    } else {
        -PL_CONST_DB - 15.0 * km(PL_D1_M) - 20.0 * km(PL_D0_M)
    })
}

/// Free-space factor `(λ / 4πd)^L`.
pub fn free_space_gain(wavelength_m: f64, d_m: f64, exponent: f64) -> f64 {
    (wavelength_m / (4.0 * PI * d_m)).powf(exponent)
}

/// Target reflection gain `4πσ_RCS / λ²`.
pub fn reflection_gain(sigma_rcs_m2: f64, wavelength_m: f64) -> f64 {
    4.0 * PI * sigma_rcs_m2 / (wavelength_m * wavelength_m)
}

/// Large-scale state of one deployment.
#[derive(Debug, Clone, Serialize)]
pub struct LargeScale {
    pub n_cap: usize,
    pub n_sap_tx: usize,
    pub n_sap_rx: usize,
    /// `[ap][k]` for every AP.
    pub beta_ap_ue: Vec<Vec<f64>>,
    /// `[ap]` AP ↔ monitor.
    pub beta_ap_pm: Vec<f64>,
    /// `[k]` monitor ↔ UE.
    pub beta_pm_ue: Vec<f64>,
    /// `[m][r]` C-AP m → sensing receiver r.
    pub beta_cap_rx: Vec<Vec<f64>>,
    /// `[r]` monitor → sensing receiver r.
    pub beta_pm_rx: Vec<f64>,
    /// Self-interference variance at the monitor.
    pub beta_pm_pm: f64,
    pub zeta_tx_t: Vec<f64>,
    pub zeta_t_rx: Vec<f64>,
    pub zeta_pm_t: f64,
    pub zeta_t_ue: Vec<f64>,
    /// `[ap][k]` MMSE estimation quality.
    pub gamma: Vec<Vec<f64>>,
    pub alpha: f64,
}

impl LargeScale {
    pub fn tx(&self, i: usize) -> usize {
        self.n_cap + i
    }

    pub fn rx(&self, i: usize) -> usize {
        self.n_cap + self.n_sap_tx + i
    }

    pub fn n_ue(&self) -> usize {
        self.beta_pm_ue.len()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("large-scale state serializes")
    }
}

fn ground_beta<R: Rng + ?Sized>(d: f64, sigma_sh_db: f64, rng: &mut R) -> Result<f64> {
    let z: f64 = rng.sample(StandardNormal);
    Ok(db_to_linear(three_slope_pathloss_db(d)? + sigma_sh_db * z))
}

/// Large-scale coefficients for `topo`, with shadowing drawn from `rng` in a
/// fixed link order, and the MMSE qualities filled in.
pub fn large_scale<R: Rng + ?Sized>(cfg: &SystemConfig, topo: &Topology, rng: &mut R) -> Result<LargeScale> {
    let side = topo.side_m;
    let lambda = cfg.wavelength_m();
    let sh = cfg.sigma_sh_db;
    let aps: Vec<Point2> = topo.all_aps().copied().collect();
    let pm = topo.monitor_pos;

    let mut beta_ap_ue = Vec::with_capacity(aps.len());
    for a in &aps {
        let row = topo
            .ue_pos
            .iter()
            .map(|u| ground_beta(torus_distance_2d(*a, *u, side), sh, rng))
            .collect::<Result<Vec<_>>>()?;
        beta_ap_ue.push(row);
    }
    let beta_ap_pm = aps
        .iter()
        .map(|a| ground_beta(torus_distance_2d(*a, pm, side), sh, rng))
        .collect::<Result<Vec<_>>>()?;
    let beta_pm_ue = topo
        .ue_pos
        .iter()
        .map(|u| ground_beta(torus_distance_2d(pm, *u, side), sh, rng))
        .collect::<Result<Vec<_>>>()?;
    let mut beta_cap_rx = Vec::with_capacity(topo.cap_pos.len());
    for c in &topo.cap_pos {
        let row = topo
            .sap_rx_pos
            .iter()
            .map(|r| ground_beta(torus_distance_2d(*c, *r, side), sh, rng))
            .collect::<Result<Vec<_>>>()?;
        beta_cap_rx.push(row);
    }
    let beta_pm_rx = topo
        .sap_rx_pos
        .iter()
        .map(|r| ground_beta(torus_distance_2d(pm, *r, side), sh, rng))
        .collect::<Result<Vec<_>>>()?;

    let t = topo.target_pos;
    let zeta = |p: &Point2| free_space_gain(lambda, distance_3d_to_target(*p, t, side), cfg.pathloss_exponent);
    let zeta_tx_t = topo.sap_tx_pos.iter().map(zeta).collect();
    let zeta_t_rx = topo.sap_rx_pos.iter().map(zeta).collect();
    let zeta_pm_t = zeta(&pm);
    let zeta_t_ue = topo.ue_pos.iter().map(zeta).collect();

    let noise = noise_power_w(cfg)?;
    let rho_p = cfg.p_p / noise;
    let tau = cfg.tau_p as f64;
    let est = EstimationModel::new(&beta_ap_ue, &beta_ap_pm, tau * rho_p, tau * rho_p * cfg.rho_p_pm_scale);

    Ok(LargeScale {
        n_cap: cfg.n_cap,
        n_sap_tx: cfg.n_sap_tx,
        n_sap_rx: cfg.n_sap_rx,
        beta_ap_ue,
        beta_ap_pm,
        beta_pm_ue,
        beta_cap_rx,
        beta_pm_rx,
        beta_pm_pm: db_to_linear(cfg.sigma_si_db),
        zeta_tx_t,
        zeta_t_rx,
        zeta_pm_t,
        zeta_t_ue,
        gamma: est.gamma,
        alpha: reflection_gain(cfg.sigma_rcs_m2, lambda),
    })
}

/// Deterministic line-of-sight channels of one deployment: `√ζ` times the
/// steering vector for array sides, a pure path phase for single antennas.
#[derive(Debug, Clone, PartialEq)]
pub struct LosChannels {
    /// `[i]` sensing transmitter i → target (N entries).
    pub h_tx_t: Vec<Vec<Complex64>>,
    /// `[i]` target → sensing receiver i (N entries).
    pub h_t_rx: Vec<Vec<Complex64>>,
    /// Monitor ↔ target (N_pm entries); used in both directions.
    pub h_pm_t: Vec<Complex64>,
    /// `[k]` target → UE k.
    pub h_t_ue: Vec<Complex64>,
}

impl LosChannels {
    pub fn new(cfg: &SystemConfig, topo: &Topology, ls: &LargeScale) -> Result<Self> {
        let side = topo.side_m;
        let t = topo.target_pos;
        let array = |p: &Point2, zeta: f64, n: usize| -> Result<Vec<Complex64>> {
            let (az, el) = departure_angles(*p, t, side)?;
            let a = steering_vector(az, el, n, 0.5);
            Ok(a.0.into_iter().map(|z| z * zeta.sqrt()).collect())
        };
        let h_tx_t = topo
            .sap_tx_pos
            .iter()
            .zip(&ls.zeta_tx_t)
            .map(|(p, &z)| array(p, z, cfg.n_ant_ap))
            .collect::<Result<_>>()?;
        let h_t_rx = topo
            .sap_rx_pos
            .iter()
            .zip(&ls.zeta_t_rx)
            .map(|(p, &z)| array(p, z, cfg.n_ant_ap))
            .collect::<Result<_>>()?;
        let h_pm_t = array(&topo.monitor_pos, ls.zeta_pm_t, cfg.n_ant_pm)?;
        let lambda = cfg.wavelength_m();
        let h_t_ue = topo
            .ue_pos
            .iter()
            .zip(&ls.zeta_t_ue)
            .map(|(u, &z)| {
                let d = distance_3d_to_target(*u, t, side);
                Complex64::from_polar(z.sqrt(), -2.0 * PI * d / lambda)
            })
            .collect();
        Ok(Self {
            h_tx_t,
            h_t_rx,
            h_pm_t,
            h_t_ue,
        })
    }
}

/// One draw of every Rayleigh channel plus the C-AP estimates.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    /// `[m][k]` true C-AP → UE channel, `g = ĝ + g̃`.
    pub g: Vec<Vec<Vec<Complex64>>>,
    /// `[m][k]` C-AP estimate.
    pub g_hat: Vec<Vec<Vec<Complex64>>>,
    /// `[i][k]` sensing transmitter → UE.
    pub g_tx_ue: Vec<Vec<Vec<Complex64>>>,
    /// `[k]` monitor → UE (N_pm entries).
    pub g_pm_ue: Vec<Vec<Complex64>>,
    /// `[m]` C-AP → monitor, N × N_pm.
    pub g_cap_pm: Vec<CMat>,
    /// `[i]` sensing transmitter → monitor, N × N_pm.
    pub g_tx_pm: Vec<CMat>,
    /// Monitor self-interference, N_pm × N_pm.
    pub g_pm_pm: CMat,
    /// `[m][r]` C-AP → sensing receiver, N × N.
    pub g_cap_rx: Vec<Vec<CMat>>,
    /// `[r]` monitor → sensing receiver, N_pm × N.
    pub g_pm_rx: Vec<CMat>,
}

/// Draws one realization. Every Rayleigh entry of link ℓ is `CN(0, β_ℓ)`;
/// C-AP channels are drawn as an independent estimate/error pair.
pub fn draw_small_scale<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    ls: &LargeScale,
    rng: &mut R,
) -> Result<ChannelRealization> {
    let n = cfg.n_ant_ap;
    let npm = cfg.n_ant_pm;
    let k_ue = cfg.n_ue;

    let mut g = Vec::with_capacity(cfg.n_cap);
    let mut g_hat = Vec::with_capacity(cfg.n_cap);
    for m in 0..cfg.n_cap {
        let mut gr = Vec::with_capacity(k_ue);
        let mut hr = Vec::with_capacity(k_ue);
        for k in 0..k_ue {
            let (hat, err) = split_estimate(rng, n, ls.beta_ap_ue[m][k], ls.gamma[m][k])?;
            gr.push(hat.iter().zip(&err).map(|(a, b)| a + b).collect());
            hr.push(hat);
        }
        g.push(gr);
        g_hat.push(hr);
    }
    let g_tx_ue = (0..cfg.n_sap_tx)
        .map(|i| {
            (0..k_ue)
                .map(|k| cn_vec(rng, n, ls.beta_ap_ue[ls.tx(i)][k]))
                .collect()
        })
        .collect();
    let g_pm_ue = (0..k_ue).map(|k| cn_vec(rng, npm, ls.beta_pm_ue[k])).collect();
    let g_cap_pm = (0..cfg.n_cap)
        .map(|m| CMat::random(rng, n, npm, ls.beta_ap_pm[m]))
        .collect();
    let g_tx_pm = (0..cfg.n_sap_tx)
        .map(|i| CMat::random(rng, n, npm, ls.beta_ap_pm[ls.tx(i)]))
        .collect();
    let g_pm_pm = CMat::random(rng, npm, npm, ls.beta_pm_pm);
    let g_cap_rx = (0..cfg.n_cap)
        .map(|m| {
            (0..cfg.n_sap_rx)
                .map(|r| CMat::random(rng, n, n, ls.beta_cap_rx[m][r]))
                .collect()
        })
        .collect();
    let g_pm_rx = (0..cfg.n_sap_rx)
        .map(|r| CMat::random(rng, npm, n, ls.beta_pm_rx[r]))
        .collect();

    Ok(ChannelRealization {
        g,
        g_hat,
        g_tx_ue,
        g_pm_ue,
        g_cap_pm,
        g_tx_pm,
        g_pm_pm,
        g_cap_rx,
        g_pm_rx,
    })
}
