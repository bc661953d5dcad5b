//! Monte Carlo oracle for the closed-form terms.
//!
//! Every trial draws a full channel realization, symbols and receiver noise,
//! forms each receiver's combiner, and extracts the exact coefficient that
//! multiplies every transmitted symbol after combining. Term powers are the
//! trial averages of the squared coefficients; the desired term's mean and
//! variance give `DS` and `BU`. No closed-form expression is used here.
//!
//! Trials are split into fixed-size chunks that run in parallel and are
//! merged in chunk order, so the estimates do not depend on the thread count.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::ChannelRealization;
use crate::cmat::{conj, dot, hdot};
use crate::config::SystemConfig;
use crate::error::{Result, SimError};
use crate::power::{precoders, transmit_signals, PrecoderSet, Symbols};
use crate::rng::{cn, cn_vec, substream, Purpose};
use crate::scenario::Deployment;
use crate::sinr::{breakdown, term_names, FormVariant, Receiver};

/// Smallest trial count accepted by the estimators.
pub const MIN_TRIALS: usize = 100;
const CHUNK: usize = 1024;
/// Relative floor on the standard error, for terms that are deterministic.
pub const SE_FLOOR_REL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Symbol {
    Ue(usize),
    Probe,
    JamTarget,
    JamUe,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Contribution {
    pub term: &'static str,
    pub symbol: Symbol,
    pub coef: Complex64,
}

/// Combined output of one receiver in one trial:
/// `z = desired · s_desired + Σ coef · s + noise`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceiverCoefficients {
    pub receiver: Receiver,
    pub desired: Complex64,
    pub contributions: Vec<Contribution>,
    pub noise: Complex64,
}

impl ReceiverCoefficients {
    pub fn desired_symbol(&self) -> Symbol {
        match self.receiver {
            Receiver::Monitor => Symbol::Ue(0),
            Receiver::Ue(k) => Symbol::Ue(k),
            Receiver::Cpu => Symbol::Probe,
        }
    }

    pub fn term_power(&self, term: &str) -> f64 {
        if term == "n" {
            return self.noise.norm_sqr();
        }
        self.contributions
            .iter()
            .filter(|c| c.term == term)
            .map(|c| c.coef.norm_sqr())
            .sum()
    }

    pub fn reconstruct(&self, sym: &Symbols) -> Complex64 {
        let s = |x: Symbol| match x {
            Symbol::Ue(k) => sym.s_ue[k],
            Symbol::Probe => sym.s_t,
            Symbol::JamTarget => sym.s_pm_t,
            Symbol::JamUe => sym.s_pm_1,
        };
        let mut z = self.desired * s(self.desired_symbol()) + self.noise;
        for c in &self.contributions {
            z += c.coef * s(c.symbol);
        }
        z
    }
}

/// Receiver noise, normalized to unit variance per antenna.
#[derive(Debug, Clone)]
pub struct NoiseDraw {
    pub ue: Vec<Complex64>,
    pub pm: Vec<Complex64>,
    /// `[r]` sensing receiver r.
    pub rx: Vec<Vec<Complex64>>,
}

#[derive(Debug, Clone)]
pub struct Trial {
    pub real: ChannelRealization,
    pub sym: Symbols,
    pub noise: NoiseDraw,
}

/// Draws trial `t` of deployment `dep` from its own substream.
pub fn draw_trial(dep: &Deployment, t: u64) -> Result<Trial> {
    let cfg = &dep.cfg;
    let mut rng = substream(cfg.seed, Purpose::Trial, dep.index, t);
    let real = crate::channel::draw_small_scale(cfg, &dep.ls, &mut rng)?;
    let sym = Symbols {
        s_ue: cn_vec(&mut rng, cfg.n_ue, 1.0),
        s_t: cn(&mut rng, 1.0),
        s_pm_t: cn(&mut rng, 1.0),
        s_pm_1: cn(&mut rng, 1.0),
    };
    let noise = NoiseDraw {
        ue: cn_vec(&mut rng, cfg.n_ue, 1.0),
        pm: cn_vec(&mut rng, cfg.n_ant_pm, 1.0),
        rx: (0..cfg.n_sap_rx).map(|_| cn_vec(&mut rng, cfg.n_ant_ap, 1.0)).collect(),
    };
    Ok(Trial { real, sym, noise })
}

fn scaled(v: &[Complex64], a: f64) -> Vec<Complex64> {
    v.iter().map(|z| z * a).collect()
}

fn add_into(acc: &mut [Complex64], v: &[Complex64]) {
    for (a, b) in acc.iter_mut().zip(v) {
        *a += b;
    }
}

/// Monitor MRC combiner `u = Σ_m √(η_{m,1} ρ_c) G_{m,pm}ᵀ ĝ*_{m,1}`.
pub fn monitor_combiner(dep: &Deployment, real: &ChannelRealization) -> Vec<Complex64> {
    let mut u = vec![Complex64::new(0.0, 0.0); dep.cfg.n_ant_pm];
    for m in 0..dep.cfg.n_cap {
        let a = (dep.pa.eta_c[m][0] * dep.pa.rho_c).sqrt();
        add_into(&mut u, &scaled(&real.g_cap_pm[m].t_mul(&conj(&real.g_hat[m][0])), a));
    }
    u
}

/// CPU combining gain `√(α ρ_s) N Σ_{m'} √η_{m',t} ζ_{m',t}` applied to each `h_{t,r}ᴴ y_r`.
pub fn cpu_combiner_gain(dep: &Deployment) -> f64 {
    let n = dep.cfg.n_ant_ap as f64;
    let s: f64 = dep
        .pa
        .eta_s
        .iter()
        .zip(&dep.ls.zeta_tx_t)
        .map(|(e, z)| e.sqrt() * z)
        .sum();
    (dep.ls.alpha * dep.pa.rho_s).sqrt() * n * s
}

/// Coefficients at every receiver: monitor, UEs in order, CPU.
pub fn coefficients(dep: &Deployment, trial: &Trial) -> Vec<ReceiverCoefficients> {
    let cfg = &dep.cfg;
    let pa = &dep.pa;
    let ls = &dep.ls;
    let los = &dep.los;
    let real = &trial.real;
    let pre = precoders(real, los);
    let sa = ls.alpha.sqrt();
    let zero = Complex64::new(0.0, 0.0);

    // √(η_{i,t} ρ_s) h_iᵀ h_i* summed over sensing transmitters
    let probe_gain: Complex64 = (0..cfg.n_sap_tx)
        .map(|i| dot(&los.h_tx_t[i], &pre.w_s[i]) * (pa.eta_s[i] * pa.rho_s).sqrt())
        .sum();
    let amp_pt = (pa.eta_pm_t * pa.rho_pm).sqrt();
    let amp_p1 = (pa.eta_pm_1 * pa.rho_pm).sqrt();
    let mut out = Vec::with_capacity(cfg.n_ue + 2);

    // Monitor.
    {
        // Gᵀ √(η ρ_c) ĝ* per (m, k), summed over m
        let mut v = vec![vec![zero; cfg.n_ant_pm]; cfg.n_ue];
        for m in 0..cfg.n_cap {
            for (k, vk) in v.iter_mut().enumerate() {
                let a = (pa.eta_c[m][k] * pa.rho_c).sqrt();
                add_into(vk, &scaled(&real.g_cap_pm[m].t_mul(&pre.w_c[m][k]), a));
            }
        }
        let u = v[0].clone();
        let mut contributions = Vec::new();
        for (k, vk) in v.iter().enumerate().skip(1) {
            contributions.push(Contribution { term: "IC", symbol: Symbol::Ue(k), coef: hdot(&u, vk) });
        }
        let mut w = vec![zero; cfg.n_ant_pm];
        for i in 0..cfg.n_sap_tx {
            let a = (pa.eta_s[i] * pa.rho_s).sqrt();
            add_into(&mut w, &scaled(&real.g_tx_pm[i].t_mul(&pre.w_s[i]), a));
        }
        for (wj, h) in w.iter_mut().zip(&los.h_pm_t) {
            *wj += h * sa * probe_gain;
        }
        contributions.push(Contribution { term: "IS", symbol: Symbol::Probe, coef: hdot(&u, &w) });
        let self_path = |x: &[Complex64]| {
            let mut y = real.g_pm_pm.t_mul(x);
            let r = dot(&los.h_pm_t, x) * sa;
            for (yj, h) in y.iter_mut().zip(&los.h_pm_t) {
                *yj += h * r;
            }
            hdot(&u, &y)
        };
        contributions.push(Contribution {
            term: "SI_s",
            symbol: Symbol::JamTarget,
            coef: self_path(&pre.w_pm_t) * amp_pt,
        });
        contributions.push(Contribution {
            term: "SI_c",
            symbol: Symbol::JamUe,
            coef: self_path(&pre.w_pm_1) * amp_p1,
        });
        out.push(ReceiverCoefficients {
            receiver: Receiver::Monitor,
            desired: hdot(&u, &u),
            contributions,
            noise: hdot(&u, &trial.noise.pm),
        });
    }

    // UEs.
    for k in 0..cfg.n_ue {
        let mut per_stream = vec![zero; cfg.n_ue];
        for m in 0..cfg.n_cap {
            for (kp, c) in per_stream.iter_mut().enumerate() {
                *c += dot(&real.g[m][k], &pre.w_c[m][kp]) * (pa.eta_c[m][kp] * pa.rho_c).sqrt();
            }
        }
        let mut contributions: Vec<Contribution> = per_stream
            .iter()
            .enumerate()
            .filter(|(kp, _)| *kp != k)
            .map(|(kp, c)| Contribution { term: "IUI", symbol: Symbol::Ue(kp), coef: *c })
            .collect();
        let mut is = los.h_t_ue[k] * sa * probe_gain;
        for i in 0..cfg.n_sap_tx {
            is += dot(&real.g_tx_ue[i][k], &pre.w_s[i]) * (pa.eta_s[i] * pa.rho_s).sqrt();
        }
        contributions.push(Contribution { term: "IS", symbol: Symbol::Probe, coef: is });
        let pm_path = |x: &[Complex64]| dot(&real.g_pm_ue[k], x) + los.h_t_ue[k] * sa * dot(&los.h_pm_t, x);
        contributions.push(Contribution {
            term: "JS_s",
            symbol: Symbol::JamTarget,
            coef: pm_path(&pre.w_pm_t) * amp_pt,
        });
        contributions.push(Contribution {
            term: "JS_c",
            symbol: Symbol::JamUe,
            coef: pm_path(&pre.w_pm_1) * amp_p1,
        });
        out.push(ReceiverCoefficients {
            receiver: Receiver::Ue(k),
            desired: per_stream[k],
            contributions,
            noise: trial.noise.ue[k],
        });
    }

    // CPU.
    {
        let c = cpu_combiner_gain(dep);
        let mut desired = zero;
        let mut ic = vec![zero; cfg.n_ue];
        let (mut js_s, mut js_c, mut noise) = (zero, zero, zero);
        let jam_refl_t = dot(&los.h_pm_t, &pre.w_pm_t) * sa;
        let jam_refl_1 = dot(&los.h_pm_t, &pre.w_pm_1) * sa;
        for r in 0..cfg.n_sap_rx {
            let h = &los.h_t_rx[r];
            let hh = hdot(h, h);
            desired += hh * sa * probe_gain;
            for (k, ick) in ic.iter_mut().enumerate() {
                for m in 0..cfg.n_cap {
                    let y = real.g_cap_rx[m][r].t_mul(&pre.w_c[m][k]);
                    *ick += hdot(h, &y) * (pa.eta_c[m][k] * pa.rho_c).sqrt();
                }
            }
            js_s += hdot(h, &real.g_pm_rx[r].t_mul(&pre.w_pm_t)) + hh * jam_refl_t;
            js_c += hdot(h, &real.g_pm_rx[r].t_mul(&pre.w_pm_1)) + hh * jam_refl_1;
            noise += hdot(h, &trial.noise.rx[r]);
        }
        let mut contributions: Vec<Contribution> = ic
            .into_iter()
            .enumerate()
            .map(|(k, v)| Contribution { term: "IC", symbol: Symbol::Ue(k), coef: v * c })
            .collect();
        contributions.push(Contribution { term: "JS_s", symbol: Symbol::JamTarget, coef: js_s * amp_pt * c });
        contributions.push(Contribution { term: "JS_c", symbol: Symbol::JamUe, coef: js_c * amp_p1 * c });
        out.push(ReceiverCoefficients {
            receiver: Receiver::Cpu,
            desired: desired * c,
            contributions,
            noise: noise * c,
        });
    }
    out
}

/// Raw received signals formed from the transmit vectors.
#[derive(Debug, Clone)]
pub struct ReceivedSignals {
    pub y_ue: Vec<Complex64>,
    pub y_pm: Vec<Complex64>,
    pub y_rx: Vec<Vec<Complex64>>,
}

pub fn received_signals(dep: &Deployment, trial: &Trial) -> ReceivedSignals {
    let cfg = &dep.cfg;
    let los = &dep.los;
    let real = &trial.real;
    let pre: PrecoderSet = precoders(real, los);
    let x = transmit_signals(&dep.pa, &pre, &trial.sym);
    let sa = dep.ls.alpha.sqrt();
    // √α × (target illumination from every transmitter)
    let illum: Complex64 = sa
        * ((0..cfg.n_sap_tx).map(|i| dot(&los.h_tx_t[i], &x.x_tx[i])).sum::<Complex64>()
            + dot(&los.h_pm_t, &x.x_pm));

    let y_ue = (0..cfg.n_ue)
        .map(|k| {
            let mut y = trial.noise.ue[k] + los.h_t_ue[k] * illum + dot(&real.g_pm_ue[k], &x.x_pm);
            for m in 0..cfg.n_cap {
                y += dot(&real.g[m][k], &x.x_cap[m]);
            }
            for i in 0..cfg.n_sap_tx {
                y += dot(&real.g_tx_ue[i][k], &x.x_tx[i]);
            }
            y
        })
        .collect();

    let mut y_pm = trial.noise.pm.clone();
    for m in 0..cfg.n_cap {
        add_into(&mut y_pm, &real.g_cap_pm[m].t_mul(&x.x_cap[m]));
    }
    for i in 0..cfg.n_sap_tx {
        add_into(&mut y_pm, &real.g_tx_pm[i].t_mul(&x.x_tx[i]));
    }
    add_into(&mut y_pm, &real.g_pm_pm.t_mul(&x.x_pm));
    for (yj, h) in y_pm.iter_mut().zip(&los.h_pm_t) {
        *yj += h * illum;
    }

    let y_rx = (0..cfg.n_sap_rx)
        .map(|r| {
            let mut y = trial.noise.rx[r].clone();
            for m in 0..cfg.n_cap {
                add_into(&mut y, &real.g_cap_rx[m][r].t_mul(&x.x_cap[m]));
            }
            add_into(&mut y, &real.g_pm_rx[r].t_mul(&x.x_pm));
            for (yj, h) in y.iter_mut().zip(&los.h_t_rx[r]) {
                *yj += h * illum;
            }
            y
        })
        .collect();
    ReceivedSignals { y_ue, y_pm, y_rx }
}

/// Applies each receiver's combiner to the raw signals; same order as [`coefficients`].
pub fn combine(dep: &Deployment, trial: &Trial, rs: &ReceivedSignals) -> Vec<Complex64> {
    let u = monitor_combiner(dep, &trial.real);
    let mut z = vec![hdot(&u, &rs.y_pm)];
    z.extend(rs.y_ue.iter().copied());
    let c = cpu_combiner_gain(dep);
    z.push(
        (0..dep.cfg.n_sap_rx)
            .map(|r| hdot(&dep.los.h_t_rx[r], &rs.y_rx[r]))
            .sum::<Complex64>()
            * c,
    );
    z
}

/// Receivers in report order.
pub fn receivers(cfg: &SystemConfig) -> Vec<Receiver> {
    let mut v = vec![Receiver::Monitor];
    v.extend((0..cfg.n_ue).map(Receiver::Ue));
    v.push(Receiver::Cpu);
    v
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TermEstimate {
    pub mean: f64,
    pub std_err: f64,
    pub n_trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReceiverEstimate {
    pub receiver: Receiver,
    pub ds: TermEstimate,
    /// Mean imaginary part of the desired coefficient.
    pub ds_imag: f64,
    /// `BU` and the interference/noise terms, in [`term_names`] order.
    pub terms: Vec<(&'static str, TermEstimate)>,
}

impl ReceiverEstimate {
    pub fn term(&self, name: &str) -> Option<TermEstimate> {
        if name == "DS" {
            return Some(self.ds);
        }
        self.terms.iter().find(|(n, _)| *n == name).map(|(_, e)| *e)
    }

    /// Ratio of the mean desired power to the mean of all other terms.
    pub fn empirical_sinr(&self) -> Result<f64> {
        self.empirical_sinr_excluding(&[])
    }

    pub fn empirical_sinr_excluding(&self, skip: &[&str]) -> Result<f64> {
        let denom: f64 = self
            .terms
            .iter()
            .filter(|(n, _)| !skip.contains(n))
            .map(|(_, e)| e.mean)
            .sum();
        if denom <= 0.0 {
            return Err(SimError::DegenerateSignal(format!(
                "{}: interference-plus-noise power is zero",
                self.receiver
            )));
        }
        Ok(self.ds.mean * self.ds.mean / denom)
    }
}

#[derive(Debug, Clone, Default)]
struct Acc {
    desired: Vec<Complex64>,
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
}

fn accumulate(dep: &Deployment, range: std::ops::Range<usize>) -> Result<Vec<Acc>> {
    let rxs = receivers(&dep.cfg);
    let mut accs: Vec<Acc> = rxs
        .iter()
        .map(|rx| {
            let n = term_names(*rx).len();
            Acc {
                desired: Vec::with_capacity(range.len()),
                sum: vec![0.0; n],
                sum_sq: vec![0.0; n],
            }
        })
        .collect();
    for t in range {
        let trial = draw_trial(dep, t as u64)?;
        for (acc, rc) in accs.iter_mut().zip(coefficients(dep, &trial)) {
            acc.desired.push(rc.desired);
            for (j, name) in term_names(rc.receiver).iter().enumerate() {
                if *name == "BU" {
                    continue;
                }
                let p = rc.term_power(name);
                acc.sum[j] += p;
                acc.sum_sq[j] += p * p;
            }
        }
    }
    Ok(accs)
}

/// Oracle estimates of every term at every receiver from `n_trials` trials.
pub fn estimate_terms(dep: &Deployment, n_trials: usize) -> Result<Vec<ReceiverEstimate>> {
    if n_trials < MIN_TRIALS {
        return Err(SimError::Precondition(format!(
            "at least {MIN_TRIALS} Monte Carlo trials are required, got {n_trials}"
        )));
    }
    let chunks: Vec<std::ops::Range<usize>> = (0..n_trials)
        .step_by(CHUNK)
        .map(|s| s..(s + CHUNK).min(n_trials))
        .collect();
    let parts = chunks
        .into_par_iter()
        .map(|r| accumulate(dep, r))
        .collect::<Result<Vec<_>>>()?;

    let rxs = receivers(&dep.cfg);
    let mut merged: Vec<Acc> = rxs
        .iter()
        .map(|rx| Acc {
            desired: Vec::with_capacity(n_trials),
            sum: vec![0.0; term_names(*rx).len()],
            sum_sq: vec![0.0; term_names(*rx).len()],
        })
        .collect();
    for part in parts {
        for (m, p) in merged.iter_mut().zip(part) {
            m.desired.extend(p.desired);
            for j in 0..m.sum.len() {
                m.sum[j] += p.sum[j];
                m.sum_sq[j] += p.sum_sq[j];
            }
        }
    }

    let nf = n_trials as f64;
    Ok(rxs
        .into_iter()
        .zip(merged)
        .map(|(rx, acc)| {
            let mean: Complex64 = acc.desired.iter().sum::<Complex64>() / nf;
            let re_var = acc.desired.iter().map(|d| (d.re - mean.re).powi(2)).sum::<f64>() / (nf - 1.0);
            let dev2: Vec<f64> = acc.desired.iter().map(|d| (d - mean).norm_sqr()).collect();
            let var = dev2.iter().sum::<f64>() / nf;
            let m4 = dev2.iter().map(|x| x * x).sum::<f64>() / nf;
            let terms = term_names(rx)
                .iter()
                .enumerate()
                .map(|(j, name)| {
                    let est = if *name == "BU" {
                        TermEstimate {
                            mean: var,
                            std_err: ((m4 - var * var).max(0.0) / nf).sqrt(),
                            n_trials,
                        }
                    } else {
                        let m = acc.sum[j] / nf;
                        let v = (acc.sum_sq[j] / nf - m * m).max(0.0) * nf / (nf - 1.0);
                        TermEstimate {
                            mean: m,
                            std_err: (v / nf).sqrt(),
                            n_trials,
                        }
                    };
                    (*name, est)
                })
                .collect();
            ReceiverEstimate {
                receiver: rx,
                ds: TermEstimate {
                    mean: mean.re,
                    std_err: (re_var / nf).sqrt(),
                    n_trials,
                },
                ds_imag: mean.im,
                terms,
            }
        })
        .collect())
}

/// `(closed − oracle) / se`, with the standard error floored at
/// [`SE_FLOOR_REL`] × `scale` so deterministic terms compare at round-off level.
pub fn z_score(closed: f64, est: &TermEstimate, scale: f64) -> f64 {
    let floor = SE_FLOOR_REL * scale.abs().max(closed.abs()).max(est.mean.abs());
    let se = (est.std_err * est.std_err + floor * floor).sqrt();
    let diff = closed - est.mean;
    if diff == 0.0 {
        0.0
    } else if se == 0.0 {
        f64::INFINITY.copysign(diff)
    } else {
        diff / se
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConformanceRow {
    pub receiver: Receiver,
    pub term: &'static str,
    pub closed_form: f64,
    pub oracle_mean: f64,
    pub oracle_stderr: f64,
    pub z_score: f64,
}

/// Closed form of `variant` against the oracle, term by term, for every receiver.
pub fn conformance(dep: &Deployment, estimates: &[ReceiverEstimate], variant: FormVariant) -> Result<Vec<ConformanceRow>> {
    let mut rows = Vec::new();
    for est in estimates {
        let b = breakdown(est.receiver, &dep.ls, &dep.pa, &dep.cfg, variant)?;
        for name in std::iter::once("DS").chain(term_names(est.receiver).iter().copied()) {
            let closed = b.term(name).expect("breakdown has every named term");
            let e = est.term(name).expect("estimate has every named term");
            // power terms are compared on the scale of the received signal power
            let scale = if name == "DS" { closed } else { b.numerator };
            rows.push(ConformanceRow {
                receiver: est.receiver,
                term: name,
                closed_form: closed,
                oracle_mean: e.mean,
                oracle_stderr: e.std_err,
                z_score: z_score(closed, &e, scale),
            });
        }
    }
    Ok(rows)
}
