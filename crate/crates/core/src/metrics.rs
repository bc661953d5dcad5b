//! Monitoring success probability (MSP) and sensing detection probability
//! (SDP) over topology ensembles, and the θ and N_pm sweeps.
//!
//! Probabilities are taken over topologies and shadowing. The closed-form
//! SINRs already average over small-scale fading, so each deployment
//! contributes one indicator per metric.

use rayon::prelude::*;
use serde::Serialize;

use crate::config::{db_to_linear, SystemConfig};
use crate::error::{Result, SimError};
use crate::scenario::Deployment;
use crate::sinr::{sinr_cpu, sinr_cpu_without_monitor, sinr_monitor, sinr_ue, FormVariant};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Proportion {
    pub p: f64,
    pub stderr: f64,
    pub n: usize,
}

/// Binomial proportion with standard error `√(p(1−p)/n)`.
pub fn proportion(hits: usize, n: usize) -> Proportion {
    let p = if n == 0 { 0.0 } else { hits as f64 / n as f64 };
    Proportion {
        p,
        stderr: if n == 0 { 0.0 } else { (p * (1.0 - p) / n as f64).sqrt() },
        n,
    }
}

/// One row of a sweep CSV. `msp` is empty for the monitor-free baseline.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricPoint {
    pub sweep_name: String,
    pub sweep_var: String,
    pub sweep_value: f64,
    pub series: String,
    pub msp: Option<f64>,
    pub msp_stderr: Option<f64>,
    pub sdp: f64,
    pub sdp_stderr: f64,
    pub n_draws: usize,
    pub seed: u64,
}

pub const CSV_HEADER: [&str; 10] = [
    "sweep_name",
    "sweep_var",
    "sweep_value",
    "series",
    "msp",
    "msp_stderr",
    "sdp",
    "sdp_stderr",
    "n_draws",
    "seed",
];

/// Closed-form SINRs of one deployment that the metrics need.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DrawOutcome {
    pub sinr_pm: f64,
    pub sinr_1: f64,
    pub sinr_cpu: f64,
    pub sinr_cpu_no_monitor: f64,
}

impl DrawOutcome {
    pub fn monitored(&self) -> bool {
        self.sinr_pm >= self.sinr_1
    }

    pub fn detected(&self, kappa_lin: f64) -> bool {
        self.sinr_cpu >= kappa_lin
    }

    pub fn detected_without_monitor(&self, kappa_lin: f64) -> bool {
        self.sinr_cpu_no_monitor >= kappa_lin
    }
}

pub fn evaluate(dep: &Deployment, variant: FormVariant) -> Result<DrawOutcome> {
    let (ls, pa, cfg) = (&dep.ls, &dep.pa, &dep.cfg);
    Ok(DrawOutcome {
        sinr_pm: sinr_monitor(ls, pa, cfg, variant)?.sinr,
        sinr_1: sinr_ue(0, ls, pa, cfg, variant)?.sinr,
        sinr_cpu: sinr_cpu(ls, pa, cfg, variant)?.sinr,
        sinr_cpu_no_monitor: sinr_cpu_without_monitor(ls, pa, cfg, variant)?.sinr,
    })
}

fn check_draws(n: usize) -> Result<()> {
    if n == 0 {
        return Err(SimError::Precondition("at least one topology draw is required".into()));
    }
    Ok(())
}

/// Outcomes for deployments `0..n` of `cfg.seed`, in draw order.
pub fn outcomes(cfg: &SystemConfig, n: usize, variant: FormVariant) -> Result<Vec<DrawOutcome>> {
    check_draws(n)?;
    (0..n as u64)
        .into_par_iter()
        .map(|i| evaluate(&Deployment::draw(cfg, i)?, variant))
        .collect()
}

pub fn msp(cfg: &SystemConfig, n: usize, variant: FormVariant) -> Result<Proportion> {
    let o = outcomes(cfg, n, variant)?;
    Ok(proportion(o.iter().filter(|d| d.monitored()).count(), n))
}

pub fn sdp(cfg: &SystemConfig, n: usize, variant: FormVariant) -> Result<Proportion> {
    let kappa = db_to_linear(cfg.kappa_db);
    let o = outcomes(cfg, n, variant)?;
    Ok(proportion(o.iter().filter(|d| d.detected(kappa)).count(), n))
}

pub fn default_theta_grid() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

pub fn default_r_values() -> Vec<f64> {
    vec![10.0, 50.0, 100.0]
}

pub fn default_npm_grid() -> Vec<usize> {
    vec![8, 16, 32, 64]
}

pub fn default_p_pm_values() -> Vec<f64> {
    vec![1.0, 3.0]
}

fn fmt_num(x: f64) -> String {
    if x.fract() == 0.0 {
        format!("{}", x as i64)
    } else {
        format!("{x}")
    }
}

/// MSP and SDP against `θ_pm,t` with `θ_pm,1 = 1 − θ_pm,t`, one series per
/// monitor radius. Every grid point reuses the same deployments.
pub fn sweep_theta(
    cfg: &SystemConfig,
    theta_grid: &[f64],
    r_values: &[f64],
    n_topologies: usize,
    variant: FormVariant,
) -> Result<Vec<MetricPoint>> {
    check_draws(n_topologies)?;
    if let Some(t) = theta_grid.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(SimError::InvalidConfig(format!("theta grid value {t} is outside [0, 1]")));
    }
    let kappa = db_to_linear(cfg.kappa_db);
    let mut rows = Vec::with_capacity(theta_grid.len() * r_values.len());
    for &r in r_values {
        let mut c = cfg.clone();
        c.monitor_radius_m = r;
        // per draw: outcome at each grid point
        let per_draw: Vec<Vec<DrawOutcome>> = (0..n_topologies as u64)
            .into_par_iter()
            .map(|i| {
                let mut dep = Deployment::draw(&c, i)?;
                theta_grid
                    .iter()
                    .map(|&t| {
                        dep.pa.set_monitor_split(&c, &dep.ls, t, 1.0 - t);
                        evaluate(&dep, variant)
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        for (j, &t) in theta_grid.iter().enumerate() {
            let m = proportion(per_draw.iter().filter(|d| d[j].monitored()).count(), n_topologies);
            let s = proportion(per_draw.iter().filter(|d| d[j].detected(kappa)).count(), n_topologies);
            rows.push(MetricPoint {
                sweep_name: "theta".into(),
                sweep_var: "theta_pm_t".into(),
                sweep_value: t,
                series: format!("r={}", fmt_num(r)),
                msp: Some(m.p),
                msp_stderr: Some(m.stderr),
                sdp: s.p,
                sdp_stderr: s.stderr,
                n_draws: n_topologies,
                seed: cfg.seed,
            });
        }
    }
    Ok(rows)
}

/// SDP against the monitor antenna count with an even power split, one
/// series per monitor power, plus the monitor-free baseline.
pub fn sweep_npm(
    cfg: &SystemConfig,
    npm_grid: &[usize],
    p_pm_values: &[f64],
    n_topologies: usize,
    variant: FormVariant,
) -> Result<Vec<MetricPoint>> {
    check_draws(n_topologies)?;
    if npm_grid.contains(&0) {
        return Err(SimError::InvalidConfig("monitor antenna count must be at least 1".into()));
    }
    let kappa = db_to_linear(cfg.kappa_db);
    let noise = crate::config::noise_power_w(cfg)?;
    let mut rows = Vec::new();
    // with_monitor[p] and baseline rows are emitted series by series
    let mut with_monitor: Vec<Vec<MetricPoint>> = vec![Vec::new(); p_pm_values.len()];
    let mut baseline = Vec::new();
    for &npm in npm_grid {
        let mut c = cfg.clone();
        c.n_ant_pm = npm;
        c.theta_pm_t = 0.5;
        c.theta_pm_1 = 0.5;
        // per draw: (monitored, detected) per power, detected without monitor
        let per_draw: Vec<(Vec<(bool, bool)>, bool)> = (0..n_topologies as u64)
            .into_par_iter()
            .map(|i| {
                let mut dep = Deployment::draw(&c, i)?;
                let base = sinr_cpu_without_monitor(&dep.ls, &dep.pa, &c, variant)?.sinr >= kappa;
                let hits = p_pm_values
                    .iter()
                    .map(|&p| {
                        dep.pa.rho_pm = p / noise;
                        let o = evaluate(&dep, variant)?;
                        Ok((o.monitored(), o.detected(kappa)))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok((hits, base))
            })
            .collect::<Result<_>>()?;
        let point = |series: String, msp: Option<Proportion>, sdp: Proportion| MetricPoint {
            sweep_name: "npm".into(),
            sweep_var: "n_pm".into(),
            sweep_value: npm as f64,
            series,
            msp: msp.map(|m| m.p),
            msp_stderr: msp.map(|m| m.stderr),
            sdp: sdp.p,
            sdp_stderr: sdp.stderr,
            n_draws: n_topologies,
            seed: cfg.seed,
        };
        for (b, &p) in p_pm_values.iter().enumerate() {
            let m = proportion(per_draw.iter().filter(|(h, _)| h[b].0).count(), n_topologies);
            let s = proportion(per_draw.iter().filter(|(h, _)| h[b].1).count(), n_topologies);
            with_monitor[b].push(point(format!("P_pm={}W", fmt_num(p)), Some(m), s));
        }
        let s = proportion(per_draw.iter().filter(|(_, base)| *base).count(), n_topologies);
        baseline.push(point("baseline".into(), None, s));
    }
    for series in with_monitor {
        rows.extend(series);
    }
    rows.extend(baseline);
    Ok(rows)
}

/// Serializes sweep rows with the fixed header.
pub fn write_csv<W: std::io::Write>(rows: &[MetricPoint], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
