use cf_isac::default_config;
use cf_isac::oracle::{conformance, estimate_terms, ReceiverEstimate};
use cf_isac::scenario::Deployment;
use cf_isac::sinr::{breakdown, sinr_cpu_without_monitor, FormVariant, Receiver};

fn estimates(dep: &Deployment, trials: usize, threads: usize) -> Vec<ReceiverEstimate> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(|| estimate_terms(dep, trials).unwrap())
}

#[test]
fn corrected_terms_and_sinrs_match_the_oracle() {
    let cfg = default_config();
    let dep = Deployment::draw(&cfg, 11).unwrap();
    let est = estimates(&dep, 20_000, 2);
    for row in conformance(&dep, &est, FormVariant::Corrected).unwrap() {
        assert!(row.z_score.abs() <= 4.0, "{row:?}");
    }
    for e in &est {
        let closed = breakdown(e.receiver, &dep.ls, &dep.pa, &cfg, FormVariant::Corrected).unwrap();
        let emp = e.empirical_sinr().unwrap();
        assert!(
            (emp - closed.sinr).abs() <= 0.05 * closed.sinr,
            "{}: empirical {emp} vs closed {}",
            e.receiver,
            closed.sinr
        );
    }
    let cpu = est.iter().find(|e| e.receiver == Receiver::Cpu).unwrap();
    let emp = cpu.empirical_sinr_excluding(&["JS_s", "JS_c"]).unwrap();
    let closed = sinr_cpu_without_monitor(&dep.ls, &dep.pa, &cfg, FormVariant::Corrected).unwrap().sinr;
    assert!((emp - closed).abs() <= 0.05 * closed);
}

#[test]
fn estimates_do_not_depend_on_thread_count() {
    let mut cfg = default_config();
    cfg.n_ant_pm = 8;
    let dep = Deployment::draw(&cfg, 3).unwrap();
    let a = estimates(&dep, 3000, 1);
    let b = estimates(&dep, 3000, 3);
    assert_eq!(a, b);
}

#[test]
fn adding_trials_keeps_earlier_draws() {
    let cfg = default_config();
    let dep = Deployment::draw(&cfg, 0).unwrap();
    let t5 = cf_isac::oracle::draw_trial(&dep, 5).unwrap();
    let again = cf_isac::oracle::draw_trial(&dep, 5).unwrap();
    assert_eq!(t5.sym.s_ue, again.sym.s_ue);
    assert_eq!(t5.real.g_hat, again.real.g_hat);
}
