//! MMSE uplink estimation under the monitor's pilot-spoofing attack.
//!
//! With orthogonal pilots the estimate of `g_{m,k}` is `CN(0, γ_{m,k} I)`.
//! The monitor replays UE 1's pilot, which adds `τ_p ρ_{p,pm} β_{m,pm}` to the
//! effective noise seen when estimating UE 1 and lowers `γ_{m,1}`.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Result, SimError};
use crate::rng::cn;

/// Estimation qualities for every (AP, UE) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimationModel {
    /// `gamma[ap][k]`, APs in [`crate::channel::LargeScale`] order.
    pub gamma: Vec<Vec<f64>>,
    pub tau_rho_p: f64,
    pub tau_rho_p_pm: f64,
}

/// MMSE estimation quality. `is_suspicious` selects the spoofed UE-1 branch.
pub fn gamma_mk(
    beta_mk: f64,
    beta_m_pm: f64,
    tau_rho_p: f64,
    tau_rho_p_pm: f64,
    is_suspicious: bool,
) -> f64 {
    let spoof = if is_suspicious {
        tau_rho_p_pm * beta_m_pm
    } else {
        0.0
    };
    tau_rho_p * beta_mk * beta_mk / (tau_rho_p * beta_mk + spoof + 1.0)
}

impl EstimationModel {
    /// `beta_ap_ue[ap][k]` and `beta_ap_pm[ap]` for every AP; UE 0 is spoofed.
    pub fn new(beta_ap_ue: &[Vec<f64>], beta_ap_pm: &[f64], tau_rho_p: f64, tau_rho_p_pm: f64) -> Self {
        let gamma = beta_ap_ue
            .iter()
            .zip(beta_ap_pm)
            .map(|(row, &b_pm)| {
                row.iter()
                    .enumerate()
                    .map(|(k, &b)| gamma_mk(b, b_pm, tau_rho_p, tau_rho_p_pm, k == 0))
                    .collect()
            })
            .collect();
        Self {
            gamma,
            tau_rho_p,
            tau_rho_p_pm,
        }
    }
}

/// Draws an independent estimate `ĝ ~ CN(0, γI)` and error `g̃ ~ CN(0, (β−γ)I)`.
/// Their sum is distributed as the true channel.
pub fn split_estimate<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    beta: f64,
    gamma: f64,
) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    if !(gamma > 0.0 && gamma < beta) {
        return Err(SimError::Domain(format!(
            "estimation quality must satisfy 0 < gamma < beta (gamma = {gamma}, beta = {beta})"
        )));
    }
    let hat = (0..n).map(|_| cn(rng, gamma)).collect();
    let err = (0..n).map(|_| cn(rng, beta - gamma)).collect();
    Ok((hat, err))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, Purpose};

    #[test]
    fn unspoofed_branch_hand_value() {
        let g = gamma_mk(0.1, 0.5, 100.0, 100.0, false);
        assert!((g - 1.0 / 11.0).abs() < 1e-15);
    }

    #[test]
    fn zero_spoofing_power_matches_clean_branch() {
        let a = gamma_mk(0.3, 0.7, 40.0, 0.0, true);
        let b = gamma_mk(0.3, 0.7, 40.0, 0.0, false);
        assert_eq!(a, b);
    }

    #[test]
    fn perfect_estimation_limit() {
        let beta = 0.25;
        let g = gamma_mk(beta, 1.0, 1e15, 0.0, false);
        assert!((g - beta).abs() / beta < 1e-12);
    }

    #[test]
    fn spoofing_is_strictly_harmful() {
        let mut last = f64::INFINITY;
        for p in [0.0, 1.0, 10.0, 100.0, 1e4] {
            let g = gamma_mk(1e-3, 2e-3, 1e4, p, true);
            assert!(g < last);
            assert!(g > 0.0 && g < 1e-3);
            last = g;
        }
    }

    #[test]
    fn split_rejects_bad_quality() {
        let mut r = substream(0, Purpose::Test, 0, 0);
        assert!(split_estimate(&mut r, 4, 1.0, 1.0).is_err());
        assert!(split_estimate(&mut r, 4, 1.0, 0.0).is_err());
    }

    #[test]
    fn split_statistics() {
        let mut r = substream(11, Purpose::Test, 1, 0);
        let (beta, gamma) = (2.0, 1.5);
        let n = 100_000;
        let (mut vh, mut vt, mut cov, mut vs) = (0.0, 0.0, Complex64::new(0.0, 0.0), 0.0);
        for _ in 0..n {
            let (h, t) = split_estimate(&mut r, 1, beta, gamma).unwrap();
            vh += h[0].norm_sqr();
            vt += t[0].norm_sqr();
            cov += h[0] * t[0].conj();
            vs += (h[0] + t[0]).norm_sqr();
        }
        let nf = n as f64;
        assert!((vh / nf - gamma).abs() / gamma < 0.02);
        assert!((vt / nf - (beta - gamma)).abs() / (beta - gamma) < 0.03);
        assert!((vs / nf - beta).abs() / beta < 0.02);
        // |ĝ g̃*| has standard deviation sqrt(γ(β−γ)) per draw
        let se = (gamma * (beta - gamma) / nf).sqrt();
        assert!((cov / nf).norm() < 3.0 * se * std::f64::consts::SQRT_2);
    }

    #[test]
    fn vanishing_error_variance() {
        let mut r = substream(2, Purpose::Test, 0, 0);
        let (_, t) = split_estimate(&mut r, 1000, 1.0, 1.0 - 1e-12).unwrap();
        assert!(t.iter().map(|z| z.norm_sqr()).sum::<f64>() < 1e-8);
    }
}
