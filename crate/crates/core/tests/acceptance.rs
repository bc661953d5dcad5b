//! Acceptance suite. Prints one PASS/FAIL line per criterion and a summary.
//!
//! Criteria that fail are reported, not panicked on, so the rest of the
//! suite still runs; the process only aborts on an internal error.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::time::Instant;

use cf_isac::config::{db_to_linear, default_config, SystemConfig};
use cf_isac::metrics::{
    default_npm_grid, default_p_pm_values, default_r_values, default_theta_grid, evaluate, sweep_npm, sweep_theta,
    MetricPoint,
};
use cf_isac::oracle::{coefficients, combine, conformance, draw_trial, estimate_terms, received_signals};
use cf_isac::runner::run_from;
use cf_isac::scenario::Deployment;
use cf_isac::sinr::{breakdown, sinr_cpu, FormVariant, Receiver};

struct Report {
    results: Vec<(String, bool)>,
}

impl Report {
    fn record(&mut self, name: &str, pass: bool, detail: String) {
        println!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        self.results.push((name.to_string(), pass));
    }
}

fn all_receivers(cfg: &SystemConfig) -> Vec<Receiver> {
    let mut v = vec![Receiver::Monitor, Receiver::Cpu];
    v.extend((0..cfg.n_ue).map(Receiver::Ue));
    v
}

fn oracle_conformance(rep: &mut Report) {
    let cfg = default_config();
    let t0 = Instant::now();
    let mut worst = (0.0f64, String::new());
    let mut n_terms = 0;
    let mut printed_rejected = Vec::new();
    for topo in 0..5 {
        let dep = Deployment::draw(&cfg, topo).unwrap();
        let est = estimate_terms(&dep, 100_000).unwrap();
        for row in conformance(&dep, &est, FormVariant::Corrected).unwrap() {
            n_terms += 1;
            if !(row.z_score.abs() <= worst.0) {
                worst = (row.z_score.abs(), format!("topology {topo} {} {}", row.receiver, row.term));
            }
        }
        for row in conformance(&dep, &est, FormVariant::AsPrinted).unwrap() {
            if row.z_score.abs() > 4.0 {
                let name = format!("{}:{}", row.receiver, row.term);
                if !printed_rejected.contains(&name) {
                    printed_rejected.push(name);
                }
            }
        }
    }
    rep.record(
        "oracle conformance (5 topologies, 1e5 trials, |z| <= 4)",
        worst.0 <= 4.0,
        format!(
            "{n_terms} terms, max |z| = {:.2} at {}; as-printed forms rejected for [{}]; {:.0} s",
            worst.0,
            worst.1,
            printed_rejected.join(", "),
            t0.elapsed().as_secs_f64()
        ),
    );
}

fn exact_zero_bu_cpu(rep: &mut Report) {
    let cfg = default_config();
    let mut closed_ok = true;
    let mut trials_ok = true;
    for topo in 0..5 {
        let dep = Deployment::draw(&cfg, topo).unwrap();
        for v in [FormVariant::AsPrinted, FormVariant::Corrected] {
            closed_ok &= sinr_cpu(&dep.ls, &dep.pa, &cfg, v).unwrap().term("BU") == Some(0.0);
        }
        let cpu = |t| coefficients(&dep, &draw_trial(&dep, t).unwrap()).pop().unwrap();
        let first = cpu(0).desired;
        for t in 1..1000 {
            trials_ok &= cpu(t).desired == first;
        }
    }
    rep.record(
        "exact zero BU_cpu",
        closed_ok && trials_ok,
        format!(
            "closed form identically 0: {closed_ok}; desired CPU coefficient bit-identical across 5x1000 trials: {trials_ok}"
        ),
    );
}

fn degeneration(rep: &mut Report) {
    let mut cfg = default_config();
    cfg.p_pm = 0.0;
    let kappa = db_to_linear(cfg.kappa_db);
    let (mut same_sinr, mut zero_terms, mut zero_coefs) = (true, true, true);
    let (mut with, mut without) = (0, 0);
    for topo in 0..200 {
        let dep = Deployment::draw(&cfg, topo).unwrap();
        let o = evaluate(&dep, FormVariant::Corrected).unwrap();
        same_sinr &= o.sinr_cpu == o.sinr_cpu_no_monitor;
        with += o.detected(kappa) as usize;
        without += o.detected_without_monitor(kappa) as usize;
        for v in [FormVariant::AsPrinted, FormVariant::Corrected] {
            for rx in all_receivers(&cfg) {
                let b = breakdown(rx, &dep.ls, &dep.pa, &cfg, v).unwrap();
                for name in ["JS_s", "JS_c", "SI_s", "SI_c"] {
                    if let Some(x) = b.term(name) {
                        zero_terms &= x == 0.0;
                    }
                }
            }
        }
        if topo < 5 {
            for t in 0..50 {
                for rc in coefficients(&dep, &draw_trial(&dep, t).unwrap()) {
                    for c in rc.contributions.iter().filter(|c| c.term.starts_with("JS") || c.term.starts_with("SI")) {
                        zero_coefs &= c.coef.norm() == 0.0;
                    }
                }
            }
        }
    }
    rep.record(
        "degeneration at rho_pm = 0",
        same_sinr && zero_terms && zero_coefs && with == without,
        format!(
            "SINR_cpu identical with/without monitor: {same_sinr}; SDP {with}/200 vs {without}/200; \
             closed-form JS/SI all 0: {zero_terms}; oracle JS/SI coefficients all 0: {zero_coefs}"
        ),
    );
}

fn series<'a>(rows: &'a [MetricPoint], name: &str) -> Vec<&'a MetricPoint> {
    rows.iter().filter(|r| r.series == name).collect()
}

fn fig2(rep: &mut Report) {
    let cfg = default_config();
    let t0 = Instant::now();
    let rows = sweep_theta(&cfg, &default_theta_grid(), &default_r_values(), 500, FormVariant::Corrected).unwrap();
    let secs = t0.elapsed().as_secs_f64();
    let mut monotone = true;
    let mut reductions = Vec::new();
    for r in default_r_values() {
        let s = series(&rows, &format!("r={r}"));
        monotone &= s.windows(2).all(|w| w[1].sdp <= w[0].sdp);
        let (first, last) = (s[0].sdp, s[s.len() - 1].sdp);
        reductions.push(if first > 0.0 { Some((first - last) / first) } else { None });
    }
    let reduction_ok = reductions.iter().all(|r| r.is_some_and(|x| x >= 0.45));
    let small_r = series(&rows, "r=10");
    let msp_min = small_r
        .iter()
        .filter(|p| p.sweep_value <= 0.5 + 1e-12)
        .map(|p| p.msp.unwrap())
        .fold(f64::INFINITY, f64::min);
    let sdp_max = rows.iter().map(|p| p.sdp).fold(0.0, f64::max);
    let fmt_red: Vec<String> = reductions
        .iter()
        .map(|r| r.map_or("undefined (SDP(0) = 0)".into(), |x| format!("{:.1}%", 100.0 * x)))
        .collect();
    rep.record(
        "theta sweep: SDP non-increasing in theta_pm,t",
        monotone,
        format!(
            "500 topologies x 11 theta x 3 r, max SDP over sweep = {sdp_max:.3}{}; {secs:.1} s",
            if sdp_max == 0.0 { " (holds trivially)" } else { "" }
        ),
    );
    rep.record(
        "theta sweep: SDP reduction theta 0 -> 1 >= 45%",
        reduction_ok,
        format!("reductions per r = [{}]", fmt_red.join(", ")),
    );
    rep.record(
        "theta sweep: MSP >= 0.9 at r = 10 m for theta_pm,t <= 0.5",
        msp_min >= 0.9,
        format!("min MSP = {msp_min:.3}; runtime {secs:.1} s (limit 300 s)"),
    );
}

fn fig3(rep: &mut Report) {
    let cfg = default_config();
    let rows = sweep_npm(&cfg, &default_npm_grid(), &default_p_pm_values(), 500, FormVariant::Corrected).unwrap();
    let base = series(&rows, "baseline");
    let below = rows
        .iter()
        .filter(|r| r.series != "baseline")
        .all(|r| r.sdp <= base.iter().find(|b| b.sweep_value == r.sweep_value).unwrap().sdp);
    rep.record(
        "N_pm sweep: with-monitor SDP <= baseline",
        below,
        format!(
            "baseline SDP = {:.3} at every N_pm{}",
            base[0].sdp,
            if rows.iter().all(|r| r.sdp == 0.0) { " (holds trivially: SDP is 0 everywhere)" } else { "" }
        ),
    );
    let p3 = series(&rows, "P_pm=3W");
    let at32 = p3.iter().find(|r| r.sweep_value == 32.0).unwrap().sdp;
    let b32 = base.iter().find(|r| r.sweep_value == 32.0).unwrap().sdp;
    let drop = if b32 > 0.0 { Some((b32 - at32) / b32) } else { None };
    rep.record(
        "N_pm sweep: SDP decrease >= 30% at P_pm = 3 W, N_pm = 32",
        drop.is_some_and(|d| d >= 0.30),
        match drop {
            Some(d) => format!("SDP {at32:.3} vs baseline {b32:.3} ({:.1}% decrease)", 100.0 * d),
            None => format!("SDP {at32:.3} vs baseline {b32:.3} (decrease undefined)"),
        },
    );
    let strictly = p3.windows(2).all(|w| w[1].sdp < w[0].sdp);
    let vals: Vec<String> = p3.iter().map(|p| format!("{:.3}", p.sdp)).collect();
    rep.record(
        "N_pm sweep: SDP strictly decreasing in N_pm at P_pm = 3 W",
        strictly,
        format!("SDP over N_pm {{8,16,32,64}} = [{}]", vals.join(", ")),
    );
}

fn hygiene(rep: &mut Report) {
    let cfg = default_config();
    let dep = Deployment::draw(&cfg, 0).unwrap();
    let mut worst = 0.0f64;
    // mean received power against the mean of the component powers, per receiver
    let nrx = cfg.n_ue + 2;
    let mut total = vec![0.0; nrx];
    let mut parts = vec![0.0; nrx];
    for t in 0..1000 {
        let trial = draw_trial(&dep, t).unwrap();
        let z = combine(&dep, &trial, &received_signals(&dep, &trial));
        for (i, rc) in coefficients(&dep, &trial).into_iter().enumerate() {
            let r = rc.reconstruct(&trial.sym);
            worst = worst.max((z[i] - r).norm() / z[i].norm().max(f64::MIN_POSITIVE));
            total[i] += z[i].norm_sqr();
            parts[i] += rc.desired.norm_sqr()
                + rc.contributions.iter().map(|c| c.coef.norm_sqr()).sum::<f64>()
                + rc.noise.norm_sqr();
        }
    }
    let power_gap = total
        .iter()
        .zip(&parts)
        .map(|(a, b)| (a - b).abs() / b)
        .fold(0.0, f64::max);
    rep.record(
        "hygiene: per-trial bookkeeping identity (1e3 trials, 1e-9 relative)",
        worst <= 1e-9,
        format!(
            "max relative gap between combined output and sum of symbol components = {worst:.2e}; \
             mean |z|^2 vs mean component power differ by at most {:.1}% (symbol cross terms average out)",
            100.0 * power_gap
        ),
    );

    let ns = [4000usize, 8000, 16000];
    let est: Vec<_> = ns.iter().map(|&n| estimate_terms(&dep, n).unwrap()).collect();
    let mut ratios = Vec::new();
    for (rx, first) in est[0].iter().enumerate() {
        for j in 0..first.terms.len() {
            for w in 0..2 {
                let a = est[w][rx].terms[j].1.std_err;
                let b = est[w + 1][rx].terms[j].1.std_err;
                if a > 0.0 && b > 0.0 {
                    ratios.push(a / b / 2f64.sqrt());
                }
            }
        }
    }
    let off = ratios.iter().map(|r| (r - 1.0).abs()).fold(0.0, f64::max);
    let within = ratios.iter().filter(|r| (*r - 1.0).abs() <= 0.2).count();
    rep.record(
        "hygiene: stderr scales as 1/sqrt(n) across doublings within 20%",
        off <= 0.2,
        format!(
            "{within}/{} (term, doubling) ratios within 20%, worst deviation {:.1}%",
            ratios.len(),
            100.0 * off
        ),
    );
}

fn determinism(rep: &mut Report) {
    let dir = tempfile::tempdir().unwrap();
    let run = |threads: usize, tag: &str, args: &[&str]| -> Vec<(String, Vec<u8>)> {
        let out = dir.path().join(format!("{tag}-{threads}"));
        let mut argv = vec!["cf-isac".to_string()];
        argv.extend(args.iter().map(|s| s.to_string()));
        argv.extend(["--threads".into(), threads.to_string(), "--out".into(), out.display().to_string()]);
        let code = run_from(&argv);
        assert!(code == 0, "{args:?} exited with {code}");
        let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(&out)
            .unwrap()
            .map(|e| e.unwrap().path())
            .filter(|p| p.extension().is_some_and(|x| x == "csv"))
            .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
            .collect();
        files.sort();
        files
    };
    let commands: [(&str, &[&str]); 3] = [
        ("conf", &["conformance", "--trials", "3000", "--topologies", "2"]),
        ("theta", &["sweep", "--sweep", "theta", "--topologies", "100"]),
        ("npm", &["sweep", "--sweep", "npm", "--topologies", "100"]),
    ];
    let mut ok = true;
    let mut n_files = 0;
    for (tag, args) in commands {
        let reference = run(1, &format!("{tag}a"), args);
        n_files += reference.len();
        ok &= run(1, &format!("{tag}b"), args) == reference;
        ok &= run(8, &format!("{tag}c"), args) == reference;
    }
    rep.record(
        "determinism: byte-identical CSVs at 1 and 8 threads",
        ok,
        format!("{n_files} CSVs from conformance, theta and npm runs compared across 3 runs each"),
    );
}

/// Not criteria: the same sweeps with σ_SI and κ moved off their defaults,
/// to show which part of the model drives the failing trend criteria.
fn diagnostics() {
    let mut cfg = default_config();
    cfg.sigma_si_db = -110.0;
    let rows = sweep_theta(&cfg, &[0.0, 0.5, 1.0], &[10.0], 500, FormVariant::Corrected).unwrap();
    let msp: Vec<String> = rows.iter().map(|r| format!("{:.3}", r.msp.unwrap())).collect();
    println!("INFO sigma_si_db = -110: MSP at r = 10 m for theta_pm,t = 0, 0.5, 1 -> [{}]", msp.join(", "));

    let mut cfg = default_config();
    cfg.kappa_db = -25.0;
    let rows = sweep_theta(&cfg, &[0.0, 0.5, 1.0], &[10.0], 500, FormVariant::Corrected).unwrap();
    let sdp: Vec<String> = rows.iter().map(|r| format!("{:.3}", r.sdp)).collect();
    println!("INFO kappa_db = -25: SDP at r = 10 m for theta_pm,t = 0, 0.5, 1 -> [{}]", sdp.join(", "));
    let rows = sweep_npm(&cfg, &[8, 32, 64], &[3.0], 500, FormVariant::Corrected).unwrap();
    let sdp: Vec<String> = rows.iter().map(|r| format!("{}@{}={:.3}", r.series, r.sweep_value, r.sdp)).collect();
    println!("INFO kappa_db = -25: {}", sdp.join(", "));
}

fn main() {
    let mut rep = Report { results: Vec::new() };
    exact_zero_bu_cpu(&mut rep);
    degeneration(&mut rep);
    hygiene(&mut rep);
    determinism(&mut rep);
    fig2(&mut rep);
    fig3(&mut rep);
    oracle_conformance(&mut rep);
    let passed = rep.results.iter().filter(|(_, p)| *p).count();
    diagnostics();
    println!("acceptance: {passed}/{} criteria passed", rep.results.len());
    for (name, p) in &rep.results {
        if !p {
            println!("  failing: {name}");
        }
    }
}
