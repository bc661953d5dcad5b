//! Conjugate precoders and full-power coefficients.

use num_complex::Complex64;

use crate::channel::{ChannelRealization, LargeScale, LosChannels};
use crate::cmat::{axpy, conj};
use crate::config::{noise_power_w, SystemConfig};
use crate::error::{Result, SimError};

#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation {
    /// `[ap][k]` for every AP. Only C-AP rows drive transmissions; sensing-AP
    /// rows are evaluated for the literal monitor self-interference sum.
    pub eta_c: Vec<Vec<f64>>,
    /// `[i]` sensing transmitter coefficients.
    pub eta_s: Vec<f64>,
    pub eta_pm_t: f64,
    pub eta_pm_1: f64,
    pub rho_c: f64,
    pub rho_s: f64,
    pub rho_p: f64,
    pub rho_pm: f64,
}

impl PowerAllocation {
    /// Monitor split fractions implied by the coefficients.
    pub fn theta(&self, cfg: &SystemConfig, ls: &LargeScale) -> (f64, f64) {
        let npm = cfg.n_ant_pm as f64;
        (
            npm * self.eta_pm_t * ls.zeta_pm_t,
            npm * self.eta_pm_1 * ls.beta_pm_ue[0],
        )
    }

    /// Re-targets the monitor coefficients to the split `(θ_t, θ_1)`.
    pub fn set_monitor_split(&mut self, cfg: &SystemConfig, ls: &LargeScale, theta_t: f64, theta_1: f64) {
        let npm = cfg.n_ant_pm as f64;
        self.eta_pm_t = theta_t / (npm * ls.zeta_pm_t);
        self.eta_pm_1 = theta_1 / (npm * ls.beta_pm_ue[0]);
    }
}

/// Full-power coefficients: `η_{m,k} = 1/(N Σ_k γ_{m,k})`, `η_{m',t} = 1/(N ζ_{m',t})`,
/// monitor coefficients from the configured power split.
pub fn full_power_coefficients(ls: &LargeScale, cfg: &SystemConfig) -> Result<PowerAllocation> {
    let n = cfg.n_ant_ap as f64;
    let eta_c = ls
        .gamma
        .iter()
        .enumerate()
        .map(|(ap, row)| {
            let s: f64 = row.iter().sum();
            if !(s > 0.0) {
                return Err(SimError::DegenerateConfig(format!(
                    "AP {ap} has zero total estimation quality"
                )));
            }
            Ok(vec![1.0 / (n * s); row.len()])
        })
        .collect::<Result<Vec<_>>>()?;
    let eta_s = ls
        .zeta_tx_t
        .iter()
        .map(|z| 1.0 / (n * z))
        .collect();
    let noise = noise_power_w(cfg)?;
    let mut pa = PowerAllocation {
        eta_c,
        eta_s,
        eta_pm_t: 0.0,
        eta_pm_1: 0.0,
        rho_c: cfg.p_c / noise,
        rho_s: cfg.p_s / noise,
        rho_p: cfg.p_p / noise,
        rho_pm: cfg.p_pm / noise,
    };
    pa.set_monitor_split(cfg, ls, cfg.theta_pm_t, cfg.theta_pm_1);
    Ok(pa)
}

/// Conjugate precoders, unnormalized; the η coefficients carry the power.
#[derive(Debug, Clone)]
pub struct PrecoderSet {
    /// `[m][k]` = conj(ĝ_{m,k}).
    pub w_c: Vec<Vec<Vec<Complex64>>>,
    /// `[i]` = conj(h_{m',t}).
    pub w_s: Vec<Vec<Complex64>>,
    /// conj(h_{pm,t}).
    pub w_pm_t: Vec<Complex64>,
    /// conj(g_{pm,1}) from the monitor's perfect CSI.
    pub w_pm_1: Vec<Complex64>,
}

pub fn precoders(real: &ChannelRealization, los: &LosChannels) -> PrecoderSet {
    PrecoderSet {
        w_c: real
            .g_hat
            .iter()
            .map(|row| row.iter().map(|g| conj(g)).collect())
            .collect(),
        w_s: los.h_tx_t.iter().map(|h| conj(h)).collect(),
        w_pm_t: conj(&los.h_pm_t),
        w_pm_1: conj(&real.g_pm_ue[0]),
    }
}

/// Data, probing and jamming symbols of one channel use.
#[derive(Debug, Clone)]
pub struct Symbols {
    /// `[k]` UE data symbols.
    pub s_ue: Vec<Complex64>,
    pub s_t: Complex64,
    pub s_pm_t: Complex64,
    pub s_pm_1: Complex64,
}

#[derive(Debug, Clone)]
pub struct TransmitSignals {
    /// `[m]` C-AP transmit vectors.
    pub x_cap: Vec<Vec<Complex64>>,
    /// `[i]` sensing transmitter vectors.
    pub x_tx: Vec<Vec<Complex64>>,
    pub x_pm: Vec<Complex64>,
}

pub fn transmit_signals(pa: &PowerAllocation, pre: &PrecoderSet, sym: &Symbols) -> TransmitSignals {
    let x_cap = pre
        .w_c
        .iter()
        .enumerate()
        .map(|(m, row)| {
            let mut x = vec![Complex64::new(0.0, 0.0); row[0].len()];
            for (k, w) in row.iter().enumerate() {
                let a = (pa.eta_c[m][k] * pa.rho_c).sqrt();
                axpy(&mut x, sym.s_ue[k] * a, w);
            }
            x
        })
        .collect();
    let x_tx = pre
        .w_s
        .iter()
        .zip(&pa.eta_s)
        .map(|(w, eta)| {
            let a = (eta * pa.rho_s).sqrt() * sym.s_t;
            w.iter().map(|v| v * a).collect()
        })
        .collect();
    let mut x_pm = vec![Complex64::new(0.0, 0.0); pre.w_pm_t.len()];
    axpy(&mut x_pm, sym.s_pm_t * (pa.eta_pm_t * pa.rho_pm).sqrt(), &pre.w_pm_t);
    axpy(&mut x_pm, sym.s_pm_1 * (pa.eta_pm_1 * pa.rho_pm).sqrt(), &pre.w_pm_1);
    TransmitSignals { x_cap, x_tx, x_pm }
}
