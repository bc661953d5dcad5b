//! Node placement on the wrap-around square, distances, and ULA steering.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::SystemConfig;
use crate::error::{Result, SimError};

pub type Point2 = [f64; 2];
pub type Point3 = [f64; 3];

/// Positions of every node for one random deployment.
///
/// Ground nodes live on the plane z = 0 of a torus of side `side_m`; the
/// target hovers at `target_pos[2]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub side_m: f64,
    pub cap_pos: Vec<Point2>,
    pub sap_tx_pos: Vec<Point2>,
    pub sap_rx_pos: Vec<Point2>,
    pub ue_pos: Vec<Point2>,
    pub target_pos: Point3,
    pub monitor_pos: Point2,
}

impl Topology {
    /// Every AP in index order: C-APs, sensing transmitters, sensing receivers.
    pub fn all_aps(&self) -> impl Iterator<Item = &Point2> {
        self.cap_pos
            .iter()
            .chain(self.sap_tx_pos.iter())
            .chain(self.sap_rx_pos.iter())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("topology serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| SimError::Parse(e.to_string()))
    }
}

fn uniform_point<R: Rng + ?Sized>(rng: &mut R, side: f64) -> Point2 {
    [rng.random::<f64>() * side, rng.random::<f64>() * side]
}

pub fn wrap_point(p: Point2, side: f64) -> Point2 {
    [p[0].rem_euclid(side), p[1].rem_euclid(side)]
}

/// Draws one deployment. The number and order of draws depends only on the
/// node counts, so two configs differing in `monitor_radius_m` or the
/// target height see the same underlying uniforms.
pub fn draw_topology<R: Rng + ?Sized>(cfg: &SystemConfig, rng: &mut R) -> Topology {
    let side = cfg.area_side_m();
    let mut many = |n: usize| (0..n).map(|_| uniform_point(rng, side)).collect::<Vec<_>>();
    let cap_pos = many(cfg.n_cap);
    let sap_tx_pos = many(cfg.n_sap_tx);
    let sap_rx_pos = many(cfg.n_sap_rx);
    let ue_pos = many(cfg.n_ue);
    let t = uniform_point(rng, side);
    let phi = rng.random::<f64>() * 2.0 * PI;
    let ue1 = ue_pos[0];
    let r = cfg.monitor_radius_m;
    let monitor_pos = wrap_point([ue1[0] + r * phi.cos(), ue1[1] + r * phi.sin()], side);
    Topology {
        side_m: side,
        cap_pos,
        sap_tx_pos,
        sap_rx_pos,
        ue_pos,
        target_pos: [t[0], t[1], cfg.target_height_m],
        monitor_pos,
    }
}

/// Minimum-image signed offset from `a` to `b` on each axis.
pub fn torus_delta(a: Point2, b: Point2, side: f64) -> Point2 {
    let wrap = |d: f64| d - side * (d / side).round();
    [wrap(b[0] - a[0]), wrap(b[1] - a[1])]
}

/// Euclidean distance with per-axis wrap-around.
pub fn torus_distance_2d(a: Point2, b: Point2, side: f64) -> f64 {
    let d = torus_delta(a, b, side);
    d[0].hypot(d[1])
}

/// Distance from a ground AP to the aerial target; the horizontal leg uses
/// the torus metric.
pub fn distance_3d_to_target(ap: Point2, target: Point3, side: f64) -> f64 {
    let horiz = torus_distance_2d(ap, [target[0], target[1]], side);
    horiz.hypot(target[2])
}

/// Azimuth in (-π, π] and elevation in [0, π/2] from a ground node to the target.
pub fn departure_angles(ap: Point2, target: Point3, side: f64) -> Result<(f64, f64)> {
    let d = torus_delta(ap, [target[0], target[1]], side);
    let horiz = d[0].hypot(d[1]);
    if horiz == 0.0 && target[2] == 0.0 {
        return Err(SimError::DegenerateGeometry(format!(
            "target coincides with node at ({}, {})",
            ap[0], ap[1]
        )));
    }
    Ok((d[1].atan2(d[0]), target[2].atan2(horiz)))
}

/// Unit-modulus ULA response along the x-axis.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringVector(pub Vec<Complex64>);

impl SteeringVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }
}

/// Entry n (0-based) is exp(j·2π·spacing·n·sin(az)·cos(el)).
pub fn steering_vector(azimuth: f64, elevation: f64, n_ant: usize, spacing_ratio: f64) -> SteeringVector {
    let step = 2.0 * PI * spacing_ratio * azimuth.sin() * elevation.cos();
    SteeringVector(
        (0..n_ant)
            .map(|n| Complex64::from_polar(1.0, step * n as f64))
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::default_config;
    use crate::rng::{substream, Purpose};
    use proptest::prelude::*;

    #[test]
    fn torus_distance_examples() {
        assert_eq!(torus_distance_2d([0.0, 0.0], [3.0, 4.0], 1000.0), 5.0);
        assert!((torus_distance_2d([10.0, 0.0], [990.0, 0.0], 1000.0) - 20.0).abs() < 1e-9);
    }

    #[test]
    fn distance_3d_examples() {
        assert_eq!(distance_3d_to_target([5.0, 5.0], [5.0, 5.0, 100.0], 1000.0), 100.0);
        assert!((distance_3d_to_target([0.0, 0.0], [30.0, 0.0, 40.0], 1000.0) - 50.0).abs() < 1e-12);
    }

    #[test]
    fn angle_examples() {
        let (az, _) = departure_angles([0.0, 0.0], [100.0, 0.0, 100.0], 1000.0).unwrap();
        assert_eq!(az, 0.0);
        let (_, el) = departure_angles([3.0, 3.0], [3.0, 3.0, 50.0], 1000.0).unwrap();
        assert!((el - PI / 2.0).abs() < 1e-15);
        let (_, el) = departure_angles([0.0, 0.0], [0.0, 70.0, 70.0], 1000.0).unwrap();
        assert!((el - PI / 4.0).abs() < 1e-15);
        assert!(departure_angles([1.0, 2.0], [1.0, 2.0, 0.0], 1000.0).is_err());
    }

    #[test]
    fn steering_examples() {
        let v = steering_vector(0.0, 0.3, 4, 0.5);
        assert!(v.0.iter().all(|z| (*z - Complex64::new(1.0, 0.0)).norm() < 1e-15));
        let v = steering_vector(PI / 2.0, 0.0, 2, 0.5);
        assert!((v.0[0] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((v.0[1] - Complex64::new(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn draw_is_deterministic_and_in_range() {
        let cfg = default_config();
        let a = draw_topology(&cfg, &mut substream(3, Purpose::Topology, 0, 0));
        let b = draw_topology(&cfg, &mut substream(3, Purpose::Topology, 0, 0));
        assert_eq!(a, b);
        for p in a.all_aps().chain(a.ue_pos.iter()).chain([&a.monitor_pos]) {
            assert!((0.0..1000.0).contains(&p[0]) && (0.0..1000.0).contains(&p[1]));
        }
        assert_eq!(a.target_pos[2], cfg.target_height_m);
        let r = torus_distance_2d(a.monitor_pos, a.ue_pos[0], a.side_m);
        assert!((r - cfg.monitor_radius_m).abs() < 1e-9);
        assert_eq!(Topology::from_json(&a.to_json()).unwrap(), a);
    }

    #[test]
    fn radius_change_keeps_other_nodes() {
        let mut cfg = default_config();
        let a = draw_topology(&cfg, &mut substream(9, Purpose::Topology, 2, 0));
        cfg.monitor_radius_m = 10.0;
        let b = draw_topology(&cfg, &mut substream(9, Purpose::Topology, 2, 0));
        assert_eq!(a.cap_pos, b.cap_pos);
        assert_eq!(a.target_pos, b.target_pos);
        assert_ne!(a.monitor_pos, b.monitor_pos);
    }

    fn pt() -> impl Strategy<Value = Point2> {
        (0.0..1000.0f64, 0.0..1000.0f64).prop_map(|(x, y)| [x, y])
    }

    proptest! {
        #[test]
        fn torus_is_a_metric(a in pt(), b in pt(), c in pt()) {
            let s = 1000.0;
            let ab = torus_distance_2d(a, b, s);
            prop_assert!((ab - torus_distance_2d(b, a, s)).abs() < 1e-9);
            prop_assert!(torus_distance_2d(a, a, s) == 0.0);
            prop_assert!(ab <= torus_distance_2d(a, c, s) + torus_distance_2d(c, b, s) + 1e-9);
            prop_assert!(ab <= ((a[0]-b[0]).powi(2) + (a[1]-b[1]).powi(2)).sqrt() + 1e-9);
        }

        #[test]
        fn height_bounds_3d_distance(a in pt(), t in pt(), h in 1.0..500.0f64) {
            prop_assert!(distance_3d_to_target(a, [t[0], t[1], h], 1000.0) >= h);
        }

        #[test]
        fn steering_is_unit_modulus(az in -PI..PI, el in 0.0..PI/2.0, n in 1usize..64) {
            let v = steering_vector(az, el, n, 0.5);
            prop_assert!(v.0.iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
            prop_assert!((v.norm_sqr() - n as f64).abs() <= 1e-12 * n as f64);
        }

        #[test]
        fn angles_invariant_under_translation(a in pt(), t in pt(), shift in pt(), h in 1.0..300.0f64) {
            let s = 1000.0;
            let (az0, el0) = departure_angles(a, [t[0], t[1], h], s).unwrap();
            let a2 = wrap_point([a[0] + shift[0], a[1] + shift[1]], s);
            let t2 = wrap_point([t[0] + shift[0], t[1] + shift[1]], s);
            let (az1, el1) = departure_angles(a2, [t2[0], t2[1], h], s).unwrap();
            let v0 = steering_vector(az0, el0, 8, 0.5);
            let v1 = steering_vector(az1, el1, 8, 0.5);
            prop_assert!((el0 - el1).abs() < 1e-9);
            for (x, y) in v0.0.iter().zip(&v1.0) {
                prop_assert!((x - y).norm() < 1e-7);
            }
        }
    }
}
