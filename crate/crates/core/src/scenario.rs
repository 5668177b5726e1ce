//! Scenario sampling for dataset generation.
//!
//! Each scenario is drawn from independent uniform ranges over initial
//! position, velocity, attitude (pitch/yaw, roll fixed at zero), body rates,
//! landing-site target, masses, gimbal limit and thrust bounds. Angular
//! rates are specified in degrees and converted to radians internally.

use crate::plan::DescentProblem;
use crate::quat::euler_to_quaternion;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
}

impl Range {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub const fn fixed(v: f64) -> Self {
        Self { lo: v, hi: v }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        if self.lo == self.hi {
            self.lo
        } else {
            rng.random_range(self.lo..self.hi)
        }
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lo && v <= self.hi
    }
}

/// Uniform ranges for every sampled scenario parameter plus the fixed
/// problem constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioDistribution {
    pub r0_vert: Range,
    pub r0_x: Range,
    pub r0_y: Range,
    pub v0_vert: Range,
    pub v0_x: Range,
    pub v0_y: Range,
    pub pitch_deg: Range,
    pub yaw_deg: Range,
    pub w0_x_deg: Range,
    pub w0_y_deg: Range,
    pub rf_x: Range,
    pub rf_y: Range,
    pub m_wet: Range,
    pub m_dry: Range,
    pub gimbal_deg: Range,
    pub t_max: Range,
    pub t_min: Range,
    // fixed problem constants
    pub gravity: [f64; 3],
    pub fuel_rate: f64,
    pub thrust_offset: [f64; 3],
    pub inertia_diag: [f64; 3],
    pub tf_guess: f64,
    pub nodes: usize,
    pub vf: [f64; 3],
    /// Pin the sampled landing x/y as terminal equalities. When false only
    /// the vertical component is constrained (to zero) and the optimizer is
    /// free to pick the landing site.
    pub constrain_landing_xy: bool,
}

impl Default for ScenarioDistribution {
    fn default() -> Self {
        Self {
            r0_vert: Range::new(1.0, 4.0),
            r0_x: Range::new(-2.0, 2.0),
            r0_y: Range::new(-2.0, 2.0),
            v0_vert: Range::new(-1.0, -0.5),
            v0_x: Range::new(-0.5, -0.2),
            v0_y: Range::new(-0.5, -0.2),
            pitch_deg: Range::new(-30.0, 30.0),
            yaw_deg: Range::new(-30.0, 30.0),
            w0_x_deg: Range::new(-20.0, 20.0),
            w0_y_deg: Range::new(-20.0, 20.0),
            rf_x: Range::new(-4.0, 4.0),
            rf_y: Range::new(-4.0, 4.0),
            m_wet: Range::new(2.0, 5.0),
            m_dry: Range::new(0.1, 2.0),
            gimbal_deg: Range::new(10.0, 90.0),
            t_max: Range::new(3.0, 10.0),
            t_min: Range::new(0.01, 1.0),
            gravity: [-1.0, 0.0, 0.0],
            fuel_rate: 0.01,
            thrust_offset: [-0.01, 0.0, 0.0],
            inertia_diag: [0.01, 0.01, 0.01],
            tf_guess: 3.0,
            nodes: 20,
            vf: [-0.1, 0.0, 0.0],
            constrain_landing_xy: true,
        }
    }
}

impl ScenarioDistribution {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let ranges = [
            ("r0_vert", self.r0_vert),
            ("r0_x", self.r0_x),
            ("r0_y", self.r0_y),
            ("v0_vert", self.v0_vert),
            ("v0_x", self.v0_x),
            ("v0_y", self.v0_y),
            ("pitch_deg", self.pitch_deg),
            ("yaw_deg", self.yaw_deg),
            ("w0_x_deg", self.w0_x_deg),
            ("w0_y_deg", self.w0_y_deg),
            ("rf_x", self.rf_x),
            ("rf_y", self.rf_y),
            ("m_wet", self.m_wet),
            ("m_dry", self.m_dry),
            ("gimbal_deg", self.gimbal_deg),
            ("t_max", self.t_max),
            ("t_min", self.t_min),
        ];
        for (name, r) in ranges {
            if !(r.lo <= r.hi) {
                return Err(ScenarioError::BadRange(name));
            }
        }
        Ok(())
    }
}

/// Derive an independent stream seed for item `index` of a batch.
pub fn stream_seed(seed: u64, index: u64) -> u64 {
    // splitmix64 on the combined value; keeps parallel draws decorrelated
    let mut z = seed
        .wrapping_add(index.wrapping_mul(0x9e37_79b9_7f4a_7c15))
        .wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Draw one scenario. Deterministic for a fixed seed.
pub fn sample_scenario(dist: &ScenarioDistribution, seed: u64) -> DescentProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r0 = [
        dist.r0_vert.sample(&mut rng),
        dist.r0_x.sample(&mut rng),
        dist.r0_y.sample(&mut rng),
    ];
    let v0 = [
        dist.v0_vert.sample(&mut rng),
        dist.v0_x.sample(&mut rng),
        dist.v0_y.sample(&mut rng),
    ];
    let pitch = dist.pitch_deg.sample(&mut rng);
    let yaw = dist.yaw_deg.sample(&mut rng);
    let q0 = euler_to_quaternion(0.0, pitch, yaw);
    // body rates: component 0 (about the thrust axis) stays zero
    let w0 = [
        0.0,
        dist.w0_x_deg.sample(&mut rng).to_radians(),
        dist.w0_y_deg.sample(&mut rng).to_radians(),
    ];
    let rf = [0.0, dist.rf_x.sample(&mut rng), dist.rf_y.sample(&mut rng)];
    let m_wet = dist.m_wet.sample(&mut rng);
    let m_dry = dist.m_dry.sample(&mut rng).min(m_wet * 0.999);
    let gimbal = dist.gimbal_deg.sample(&mut rng);
    let t_max = dist.t_max.sample(&mut rng);
    let t_min = dist.t_min.sample(&mut rng).min(t_max * 0.999);

    DescentProblem {
        gravity: dist.gravity,
        fuel_rate: dist.fuel_rate,
        thrust_offset: dist.thrust_offset,
        inertia_diag: dist.inertia_diag,
        tf_guess: dist.tf_guess,
        nodes: dist.nodes,
        m_wet,
        m_dry,
        t_min,
        t_max,
        gimbal_max_deg: gimbal,
        r0,
        v0,
        q0: [q0[0], q0[1], q0[2], q0[3]],
        w0,
        vf: dist.vf,
        qf: [1.0, 0.0, 0.0, 0.0],
        final_position: rf,
        final_pos_constrained: if dist.constrain_landing_xy {
            [true, true, true]
        } else {
            [true, false, false]
        },
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ScenarioError {
    #[error("range {0} has lo > hi")]
    BadRange(&'static str),
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_ranges_give_fixed_scenario() {
        let mut dist = ScenarioDistribution::default();
        dist.r0_vert = Range::fixed(2.0);
        dist.r0_x = Range::fixed(1.0);
        dist.r0_y = Range::fixed(-1.0);
        dist.v0_vert = Range::fixed(-0.7);
        dist.v0_x = Range::fixed(-0.3);
        dist.v0_y = Range::fixed(-0.3);
        dist.pitch_deg = Range::fixed(0.0);
        dist.yaw_deg = Range::fixed(0.0);
        dist.w0_x_deg = Range::fixed(0.0);
        dist.w0_y_deg = Range::fixed(0.0);
        dist.rf_x = Range::fixed(1.5);
        dist.rf_y = Range::fixed(0.5);
        dist.m_wet = Range::fixed(3.0);
        dist.m_dry = Range::fixed(1.0);
        dist.gimbal_deg = Range::fixed(20.0);
        dist.t_max = Range::fixed(6.0);
        dist.t_min = Range::fixed(0.3);
        let a = sample_scenario(&dist, 1);
        let b = sample_scenario(&dist, 999);
        assert_eq!(a, b);
        assert_eq!(a.r0, [2.0, 1.0, -1.0]);
        assert_eq!(a.q0, [1.0, 0.0, 0.0, 0.0]);
        assert_eq!(a.final_position, [0.0, 1.5, 0.5]);
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let dist = ScenarioDistribution::default();
        let a = sample_scenario(&dist, 42);
        let b = sample_scenario(&dist, 42);
        assert_eq!(a, b);
    }

    #[test]
    fn draws_stay_inside_ranges() {
        let dist = ScenarioDistribution::default();
        let mut min_rz = f64::INFINITY;
        let mut max_rz = f64::NEG_INFINITY;
        for i in 0..10_000 {
            let p = sample_scenario(&dist, stream_seed(7, i));
            assert!(dist.r0_vert.contains(p.r0[0]));
            assert!(dist.r0_x.contains(p.r0[1]));
            assert!(dist.v0_vert.contains(p.v0[0]));
            assert!(dist.m_wet.contains(p.m_wet));
            assert!(dist.t_max.contains(p.t_max));
            assert!(p.t_min < p.t_max && p.m_dry < p.m_wet);
            assert!(dist.gimbal_deg.contains(p.gimbal_max_deg));
            assert_eq!(p.w0[0], 0.0);
            min_rz = min_rz.min(p.r0[0]);
            max_rz = max_rz.max(p.r0[0]);
        }
        // empirical extremes land inside (and near the edges of) [1, 4]
        assert!(min_rz >= 1.0 && min_rz < 1.1);
        assert!(max_rz <= 4.0 && max_rz > 3.9);
    }

    #[test]
    fn validate_catches_inverted_range() {
        let mut dist = ScenarioDistribution::default();
        dist.m_wet = Range::new(5.0, 2.0);
        assert_eq!(dist.validate(), Err(ScenarioError::BadRange("m_wet")));
    }
}
