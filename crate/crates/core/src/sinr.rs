//! Closed-form SINRs at the monitor, the UEs and the sensing CPU.
//!
//! Each receiver's SINR has the use-and-then-forget layout
//! `|E{DS}|² / (Σ interference terms + noise)`. Every term is returned by
//! name so it can be compared one-to-one with the Monte Carlo oracle.
//!
//! Two variants are provided. [`FormVariant::AsPrinted`] reproduces the
//! reference expressions literally, including the sensing-AP index set of the
//! monitor's `SI_s` sum. [`FormVariant::Corrected`] replaces the terms whose
//! as-printed form disagrees with the exact expectation of the signal model
//! (see [`suspected_terms`]); the remaining terms are shared.

use std::fmt;

use serde::Serialize;

use crate::channel::LargeScale;
use crate::config::SystemConfig;
use crate::error::{Result, SimError};
use crate::power::PowerAllocation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Receiver {
    Monitor,
    /// Zero-based UE index; UE 0 is the suspicious UE.
    Ue(usize),
    Cpu,
}

impl fmt::Display for Receiver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Receiver::Monitor => write!(f, "monitor"),
            Receiver::Ue(k) => write!(f, "ue{}", k + 1),
            Receiver::Cpu => write!(f, "cpu"),
        }
    }
}

impl std::str::FromStr for Receiver {
    type Err = SimError;

    /// Accepts `monitor`, `cpu`, and one-based `ue<k>`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "monitor" | "pm" => Ok(Receiver::Monitor),
            "cpu" => Ok(Receiver::Cpu),
            _ => s
                .strip_prefix("ue")
                .and_then(|k| k.parse::<usize>().ok())
                .filter(|k| *k >= 1)
                .map(|k| Receiver::Ue(k - 1))
                .ok_or_else(|| SimError::UnknownReceiver(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Default)]
pub enum FormVariant {
    AsPrinted,
    #[default]
    Corrected,
}

/// Denominator term names in display order.
pub const MONITOR_TERMS: [&str; 6] = ["BU", "IC", "IS", "SI_s", "SI_c", "n"];
pub const UE_TERMS: [&str; 6] = ["BU", "IUI", "IS", "JS_s", "JS_c", "n"];
pub const CPU_TERMS: [&str; 5] = ["BU", "IC", "JS_s", "JS_c", "n"];

pub fn term_names(rx: Receiver) -> &'static [&'static str] {
    match rx {
        Receiver::Monitor => &MONITOR_TERMS,
        Receiver::Ue(_) => &UE_TERMS,
        Receiver::Cpu => &CPU_TERMS,
    }
}

/// Terms (including `DS`) whose as-printed form differs from the exact
/// expectation, with the nature of the difference.
pub fn suspected_terms(rx: Receiver) -> &'static [(&'static str, &'static str)] {
    match rx {
        Receiver::Monitor => &[
            ("BU", "diagonal fourth moment uses N^2 where E|ĝ|^4 gives N"),
            ("IC", "cross-AP sum includes m~ = m, double counting the own-AP term"),
            ("IS", "coherent probing sum counts its diagonal twice"),
            ("SI_s", "sum runs over sensing APs; the derivation sums over C-APs"),
        ],
        Receiver::Ue(0) => &[("IS", "coherent probing sum counts its diagonal twice and drops one sqrt(eta)")],
        Receiver::Ue(_) => &[
            ("IS", "coherent probing sum counts its diagonal twice and drops one sqrt(eta)"),
            ("JS_c", "uses the k = 1 fourth moment for every k; for k != 1 it is N_pm beta_pm,k beta_pm,1"),
        ],
        Receiver::Cpu => &[
            ("DS", "coherent probing sum counts its diagonal twice"),
            ("IC", "missing the reflection gain alpha; diagonal counted twice"),
            ("JS_s", "reflected jamming adds incoherently over receivers; diagonal counted twice"),
            ("JS_c", "reflected jamming adds incoherently over receivers; diagonal counted twice"),
            ("n", "coherent probing sum counts its diagonal twice"),
        ],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Term {
    pub name: &'static str,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SinrBreakdown {
    pub receiver: Receiver,
    pub variant: FormVariant,
    /// `E{DS}`.
    pub ds_mean: f64,
    /// `|E{DS}|²`.
    pub numerator: f64,
    pub terms: Vec<Term>,
    pub sinr: f64,
}

impl SinrBreakdown {
    fn new(receiver: Receiver, variant: FormVariant, ds_mean: f64, terms: Vec<Term>) -> Self {
        let numerator = ds_mean * ds_mean;
        let denom = compensated_sum(terms.iter().map(|t| t.value));
        let sinr = if numerator == 0.0 { 0.0 } else { numerator / denom };
        Self {
            receiver,
            variant,
            ds_mean,
            numerator,
            terms,
            sinr,
        }
    }

    pub fn term(&self, name: &str) -> Option<f64> {
        if name == "DS" {
            return Some(self.ds_mean);
        }
        self.terms.iter().find(|t| t.name == name).map(|t| t.value)
    }

    pub fn denominator(&self) -> f64 {
        compensated_sum(self.terms.iter().map(|t| t.value))
    }

    pub fn csv_header(&self) -> Vec<String> {
        let mut h = vec!["receiver".to_string(), "variant".to_string(), "DS".to_string()];
        h.extend(self.terms.iter().map(|t| t.name.to_string()));
        h.push("sinr".to_string());
        h
    }

    pub fn csv_row(&self) -> Vec<String> {
        let mut r = vec![
            self.receiver.to_string(),
            format!("{:?}", self.variant),
            self.ds_mean.to_string(),
        ];
        r.extend(self.terms.iter().map(|t| t.value.to_string()));
        r.push(self.sinr.to_string());
        r
    }
}

/// Neumaier summation over the values sorted by decreasing magnitude.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.into_iter().collect();
    v.sort_by(|a, b| b.abs().total_cmp(&a.abs()));
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for x in v {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            c += (sum - t) + x;
        } else {
            c += (x - t) + sum;
        }
        sum = t;
    }
    sum + c
}

fn check_dims(ls: &LargeScale, pa: &PowerAllocation, cfg: &SystemConfig) -> Result<()> {
    let m_total = cfg.n_ap_total();
    let ok = ls.gamma.len() == m_total
        && ls.beta_ap_ue.len() == m_total
        && ls.beta_ap_pm.len() == m_total
        && pa.eta_c.len() == m_total
        && pa.eta_s.len() == cfg.n_sap_tx
        && ls.zeta_tx_t.len() == cfg.n_sap_tx
        && ls.zeta_t_rx.len() == cfg.n_sap_rx
        && ls.beta_pm_rx.len() == cfg.n_sap_rx
        && ls.beta_cap_rx.len() == cfg.n_cap
        && ls.beta_pm_ue.len() == cfg.n_ue
        && ls.zeta_t_ue.len() == cfg.n_ue
        && ls.gamma.iter().all(|r| r.len() == cfg.n_ue)
        && pa.eta_c.iter().all(|r| r.len() == cfg.n_ue);
    if ok {
        Ok(())
    } else {
        Err(SimError::Dimension(
            "large-scale state, power allocation and config disagree on node counts".into(),
        ))
    }
}

/// `Σ_{m'} √η_{m',t} ζ_{m',t}`.
fn probe_sum(ls: &LargeScale, pa: &PowerAllocation) -> f64 {
    compensated_sum(pa.eta_s.iter().zip(&ls.zeta_tx_t).map(|(e, z)| e.sqrt() * z))
}

/// `Σ_{m'} √η ζ (√η ζ + Σ √η ζ)`: the as-printed coherent probing factor.
fn probe_sum_printed(ls: &LargeScale, pa: &PowerAllocation) -> f64 {
    let s = probe_sum(ls, pa);
    compensated_sum(pa.eta_s.iter().zip(&ls.zeta_tx_t).map(|(e, z)| {
        let a = e.sqrt() * z;
        a * (a + s)
    }))
}

/// Overheard SINR of UE 1 at the monitor after maximum-ratio combining.
pub fn sinr_monitor(ls: &LargeScale, pa: &PowerAllocation, cfg: &SystemConfig, variant: FormVariant) -> Result<SinrBreakdown> {
    check_dims(ls, pa, cfg)?;
    let n = cfg.n_ant_ap as f64;
    let npm = cfg.n_ant_pm as f64;
    let rc = pa.rho_c;
    let caps = 0..cfg.n_cap;

    // b_m = η_{m,1} β_{m,pm} γ_{m,1}
    let b: Vec<f64> = caps
        .clone()
        .map(|m| pa.eta_c[m][0] * ls.beta_ap_pm[m] * ls.gamma[m][0])
        .collect();
    let sum_b = compensated_sum(b.iter().copied());
    let sum_b2 = compensated_sum(b.iter().map(|x| x * x));
    let combined = rc * n * npm * sum_b;

    let ds = combined;
    let bu = match variant {
        FormVariant::AsPrinted => {
            rc * rc * n * n * npm * (npm + 1.0) * (sum_b2 + sum_b * sum_b) - combined * combined
        }
        FormVariant::Corrected => rc * rc * n * npm * (n * sum_b * sum_b + (npm + 1.0) * sum_b2),
    };

    let ic = compensated_sum(caps.clone().flat_map(|m| {
        let b = &b;
        (1..cfg.n_ue).map(move |kp| {
            let cross = match variant {
                FormVariant::AsPrinted => n * sum_b,
                FormVariant::Corrected => n * (sum_b - b[m]),
            };
            pa.eta_c[m][kp] * rc * rc * npm * n * ls.gamma[m][kp] * ls.beta_ap_pm[m]
                * (pa.eta_c[m][0] * (npm + n) * ls.beta_ap_pm[m] * ls.gamma[m][0] + cross)
        })
    }));

    let s = probe_sum(ls, pa);
    let leak = compensated_sum((0..cfg.n_sap_tx).map(|i| pa.eta_s[i] * ls.zeta_tx_t[i] * ls.beta_ap_pm[ls.tx(i)]));
    let refl = match variant {
        FormVariant::AsPrinted => {
            let diag = compensated_sum(
                (0..cfg.n_sap_tx).map(|i| pa.eta_s[i] * ls.zeta_tx_t[i] * ls.zeta_tx_t[i]),
            );
            n * ls.zeta_pm_t * ls.alpha * (diag + s * s)
        }
        FormVariant::Corrected => n * ls.zeta_pm_t * ls.alpha * s * s,
    };
    let is = pa.rho_s * rc * npm * n * n * sum_b * (leak + refl);

    let si_factor = ls.beta_pm_pm + ls.alpha * npm * ls.zeta_pm_t * ls.zeta_pm_t;
    let si_s_over = |aps: std::ops::Range<usize>| {
        compensated_sum(aps.map(|m| {
            pa.eta_pm_t * pa.rho_pm * pa.eta_c[m][0] * rc * ls.zeta_pm_t * ls.beta_ap_pm[m]
                * npm * npm * n * ls.gamma[m][0] * si_factor
        }))
    };
    let si_s = match variant {
        FormVariant::AsPrinted => si_s_over(cfg.n_cap..cfg.n_ap_total()),
        FormVariant::Corrected => si_s_over(0..cfg.n_cap),
    };
    let si_c = pa.eta_pm_1 * rc * pa.rho_pm * n * npm * npm * sum_b * ls.beta_pm_ue[0]
        * (ls.beta_pm_pm + ls.alpha * ls.zeta_pm_t * ls.zeta_pm_t);
    let noise = combined;

    Ok(SinrBreakdown::new(
        Receiver::Monitor,
        variant,
        ds,
        vec![
            Term { name: "BU", value: bu },
            Term { name: "IC", value: ic },
            Term { name: "IS", value: is },
            Term { name: "SI_s", value: si_s },
            Term { name: "SI_c", value: si_c },
            Term { name: "n", value: noise },
        ],
    ))
}

/// Effective SINR of UE `k` (zero-based).
pub fn sinr_ue(k: usize, ls: &LargeScale, pa: &PowerAllocation, cfg: &SystemConfig, variant: FormVariant) -> Result<SinrBreakdown> {
    check_dims(ls, pa, cfg)?;
    if k >= cfg.n_ue {
        return Err(SimError::OutOfRange { index: k, len: cfg.n_ue });
    }
    let n = cfg.n_ant_ap as f64;
    let npm = cfg.n_ant_pm as f64;
    let rc = pa.rho_c;
    let caps = 0..cfg.n_cap;

    let ds = compensated_sum(caps.clone().map(|m| (pa.eta_c[m][k] * rc).sqrt() * n * ls.gamma[m][k]));
    let bu = rc * n * compensated_sum(caps.clone().map(|m| pa.eta_c[m][k] * ls.gamma[m][k] * ls.beta_ap_ue[m][k]));
    let iui = compensated_sum(caps.clone().flat_map(|m| {
        (0..cfg.n_ue)
            .filter(move |kp| *kp != k)
            .map(move |kp| pa.eta_c[m][kp] * rc * n * ls.gamma[m][kp] * ls.beta_ap_ue[m][k])
    }));

    let s = probe_sum(ls, pa);
    let zt = ls.zeta_t_ue[k];
    let is = match variant {
        FormVariant::AsPrinted => compensated_sum((0..cfg.n_sap_tx).map(|i| {
            let z = ls.zeta_tx_t[i];
            pa.eta_s[i].sqrt() * pa.rho_s * z * n
                * (ls.beta_ap_ue[ls.tx(i)][k] + ls.alpha * z * zt * n + s * zt * ls.alpha * n)
        })),
        FormVariant::Corrected => {
            let leak = compensated_sum(
                (0..cfg.n_sap_tx).map(|i| pa.eta_s[i] * ls.zeta_tx_t[i] * ls.beta_ap_ue[ls.tx(i)][k]),
            );
            pa.rho_s * n * leak + ls.alpha * zt * pa.rho_s * n * n * s * s
        }
    };

    let zp = ls.zeta_pm_t;
    let js_s = pa.eta_pm_t * pa.rho_pm * (ls.beta_pm_ue[k] * zp * npm + ls.alpha * zt * npm * npm * zp * zp);
    let b1 = ls.beta_pm_ue[0];
    let js_c = match (variant, k) {
        (FormVariant::Corrected, kk) if kk != 0 => {
            pa.eta_pm_1 * pa.rho_pm * npm * b1 * (ls.beta_pm_ue[kk] + ls.alpha * zt * zp)
        }
        _ => pa.eta_pm_1 * pa.rho_pm * npm * b1 * (npm * b1 + b1 + ls.alpha * zt * zp),
    };

    Ok(SinrBreakdown::new(
        Receiver::Ue(k),
        variant,
        ds,
        vec![
            Term { name: "BU", value: bu },
            Term { name: "IUI", value: iui },
            Term { name: "IS", value: is },
            Term { name: "JS_s", value: js_s },
            Term { name: "JS_c", value: js_c },
            Term { name: "n", value: 1.0 },
        ],
    ))
}

/// Sensing SINR at the CPU after the matched combiners of the sensing receivers.
pub fn sinr_cpu(ls: &LargeScale, pa: &PowerAllocation, cfg: &SystemConfig, variant: FormVariant) -> Result<SinrBreakdown> {
    check_dims(ls, pa, cfg)?;
    let n = cfg.n_ant_ap as f64;
    let npm = cfg.n_ant_pm as f64;
    let a = ls.alpha;
    let zp = ls.zeta_pm_t;

    // Coherent probing factor: (Σ √η ζ)² exactly, or the as-printed form.
    let coh = match variant {
        FormVariant::AsPrinted => probe_sum_printed(ls, pa),
        FormVariant::Corrected => {
            let s = probe_sum(ls, pa);
            s * s
        }
    };
    let z_sum = compensated_sum(ls.zeta_t_rx.iter().copied());
    let base = pa.rho_s * n * n * n * coh;

    let ds = a * base * z_sum;
    let noise = a * base * z_sum;

    // Σ_{m''} ζ_{t,m''} Σ_m β_{m,m''} Σ_k η_{m,k} γ_{m,k}
    let ic_geom = compensated_sum((0..cfg.n_sap_rx).flat_map(|r| {
        (0..cfg.n_cap).map(move |m| {
            let load = compensated_sum((0..cfg.n_ue).map(|k| pa.eta_c[m][k] * ls.gamma[m][k]));
            ls.zeta_t_rx[r] * ls.beta_cap_rx[m][r] * load
        })
    }));
    let ic = match variant {
        FormVariant::AsPrinted => pa.rho_c * base * n * ic_geom,
        FormVariant::Corrected => a * pa.rho_c * base * n * ic_geom,
    };

    let leak = compensated_sum((0..cfg.n_sap_rx).map(|r| ls.zeta_t_rx[r] * ls.beta_pm_rx[r]));
    let (refl_s, refl_c) = match variant {
        FormVariant::AsPrinted => {
            let z2 = compensated_sum(ls.zeta_t_rx.iter().map(|z| z * z));
            (a * zp * n * npm * z2, a * n * zp * z2)
        }
        FormVariant::Corrected => (a * n * npm * zp * z_sum * z_sum, a * n * zp * z_sum * z_sum),
    };
    let js_s = pa.eta_pm_t * pa.rho_pm * a * base * npm * zp * (leak + refl_s);
    let js_c = pa.eta_pm_1 * pa.rho_pm * a * base * npm * ls.beta_pm_ue[0] * (leak + refl_c);

    Ok(SinrBreakdown::new(
        Receiver::Cpu,
        variant,
        ds,
        vec![
            Term { name: "BU", value: 0.0 },
            Term { name: "IC", value: ic },
            Term { name: "JS_s", value: js_s },
            Term { name: "JS_c", value: js_c },
            Term { name: "n", value: noise },
        ],
    ))
}

/// Sensing SINR with the monitor absent: the jamming terms are dropped.
pub fn sinr_cpu_without_monitor(ls: &LargeScale, pa: &PowerAllocation, cfg: &SystemConfig, variant: FormVariant) -> Result<SinrBreakdown> {
    let full = sinr_cpu(ls, pa, cfg, variant)?;
    let terms = full
        .terms
        .into_iter()
        .filter(|t| !t.name.starts_with("JS"))
        .collect();
    Ok(SinrBreakdown::new(Receiver::Cpu, variant, full.ds_mean, terms))
}

pub fn breakdown(rx: Receiver, ls: &LargeScale, pa: &PowerAllocation, cfg: &SystemConfig, variant: FormVariant) -> Result<SinrBreakdown> {
    match rx {
        Receiver::Monitor => sinr_monitor(ls, pa, cfg, variant),
        Receiver::Ue(k) => sinr_ue(k, ls, pa, cfg, variant),
        Receiver::Cpu => sinr_cpu(ls, pa, cfg, variant),
    }
}
