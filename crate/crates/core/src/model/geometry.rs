#[cfg(not(any(feature = "std", test)))]
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::geom::V3;
use crate::reward::{RewardConfig, TRIPOD};

use super::statics::static_forces;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Leg {
    FL,
    FR,
    RL,
    RR,
}

impl Leg {
    pub const ALL: [Leg; 4] = [Leg::FL, Leg::FR, Leg::RL, Leg::RR];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_left(self) -> bool {
        matches!(self, Leg::FL | Leg::RL)
    }

    pub fn is_front(self) -> bool {
        matches!(self, Leg::FL | Leg::FR)
    }

    /// Leg on the other side of the sagittal plane.
    pub fn mirror(self) -> Leg {
        match self {
            Leg::FL => Leg::FR,
            Leg::FR => Leg::FL,
            Leg::RL => Leg::RR,
            Leg::RR => Leg::RL,
        }
    }
}

/// Joint offsets within a leg triple.
pub const HIP: usize = 0;
pub const THIGH: usize = 1;
pub const CALF: usize = 2;

/// Rigid-body and link dimensions of the quadruped. The center of mass sits
/// at the base origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RobotGeometry {
    pub body_length: f64,
    pub body_width: f64,
    pub thigh_len: f64,
    pub calf_len: f64,
    pub mass: f64,
    pub g: f64,
    pub nominal_height: f64,
    /// Stage 3 target: forward shift of the FL foot from its stance (m).
    pub forward_offset: f64,
    /// Thickness of the compliant contact layer (m).
    pub contact_layer: f64,
}

impl Default for RobotGeometry {
    fn default() -> Self {
        Self {
            body_length: 0.38,
            body_width: 0.29,
            thigh_len: 0.213,
            calf_len: 0.213,
            mass: 12.0,
            g: 9.81,
            nominal_height: 0.300,
            forward_offset: 0.15,
            contact_layer: 0.003,
        }
    }
}

impl RobotGeometry {
    pub fn weight(&self) -> f64 {
        self.mass * self.g
    }

    /// Contact stiffness (N/m) at which four level feet at ground height
    /// share the weight equally.
    pub fn contact_stiffness(&self) -> f64 {
        self.weight() / (4.0 * self.contact_layer)
    }

    pub fn hip_offset(&self, leg: Leg) -> V3 {
        let x = if leg.is_front() { 0.5 } else { -0.5 } * self.body_length;
        let y = if leg.is_left() { 0.5 } else { -0.5 } * self.body_width;
        [x, y, 0.0]
    }

    /// Foot position in the body frame. Abduction rotates the sagittal
    /// thigh/calf chain about the body x axis.
    pub fn leg_fk(&self, leg: Leg, q: [f64; 3]) -> V3 {
        let (a, t1, t2) = (q[HIP], q[THIGH], q[CALF]);
        let x = -self.thigh_len * t1.sin() - self.calf_len * (t1 + t2).sin();
        let z = -self.thigh_len * t1.cos() - self.calf_len * (t1 + t2).cos();
        let (sa, ca) = a.sin_cos();
        let hip = self.hip_offset(leg);
        [hip[0] + x, hip[1] - sa * z, hip[2] + ca * z]
    }

    /// Knee position in the body frame.
    pub fn knee_fk(&self, leg: Leg, q: [f64; 3]) -> V3 {
        let x = -self.thigh_len * q[THIGH].sin();
        let z = -self.thigh_len * q[THIGH].cos();
        let (sa, ca) = q[HIP].sin_cos();
        let hip = self.hip_offset(leg);
        [hip[0] + x, hip[1] - sa * z, hip[2] + ca * z]
    }

    /// Joint angles placing the foot at `foot` (body frame), knee bent
    /// backwards. `None` when out of reach.
    pub fn leg_ik(&self, leg: Leg, foot: V3) -> Option<[f64; 3]> {
        let hip = self.hip_offset(leg);
        let (x, y, z) = (foot[0] - hip[0], foot[1] - hip[1], foot[2] - hip[2]);
        let zp = -(y * y + z * z).sqrt();
        let a = y.atan2(-z);
        let (l1, l2) = (self.thigh_len, self.calf_len);
        let d2 = x * x + zp * zp;
        let c2 = (d2 - l1 * l1 - l2 * l2) / (2.0 * l1 * l2);
        if !(-1.0..=1.0).contains(&c2) {
            return None;
        }
        let t2 = -c2.acos();
        let beta = (-x).atan2(-zp);
        let t1 = beta - (l2 * t2.sin()).atan2(l1 + l2 * t2.cos());
        Some([a, t1, t2])
    }

    /// Joint vector with every foot directly below its hip at the nominal
    /// height.
    pub fn q_nominal(&self) -> [f64; 12] {
        let mut q = [0.0; 12];
        for leg in Leg::ALL {
            let hip = self.hip_offset(leg);
            let lq = self
                .leg_ik(leg, [hip[0], hip[1], -self.nominal_height])
                .expect("nominal height within leg reach");
            q[3 * leg.index()..3 * leg.index() + 3].copy_from_slice(&lq);
        }
        q
    }

    /// Body-frame foot positions for a full joint vector.
    pub fn feet_body(&self, q: &[f64; 12]) -> [V3; 4] {
        Leg::ALL.map(|leg| self.leg_fk(leg, leg_slice(q, leg)))
    }

    /// Tripod load ratios with the center of mass at the tripod centroid.
    pub fn alpha_star(&self) -> [f64; 3] {
        let feet = self.feet_body(&self.q_nominal());
        let tri = TRIPOD.map(|i| [feet[i][0], feet[i][1]]);
        let com = [
            (tri[0][0] + tri[1][0] + tri[2][0]) / 3.0,
            (tri[0][1] + tri[1][1] + tri[2][1]) / 3.0,
        ];
        let f = static_forces(&tri, com, self.mass, self.g).expect("nominal tripod is non-degenerate");
        let total: f64 = f.iter().sum();
        [f[0] / total, f[1] / total, f[2] / total]
    }

    /// Stage 3 body-frame target for the FL foot.
    pub fn p_star_xy(&self) -> [f64; 2] {
        let hip = self.hip_offset(Leg::FL);
        [hip[0] + self.forward_offset, hip[1]]
    }

    /// Reward defaults with the geometry-derived targets filled in.
    pub fn reward_config(&self) -> RewardConfig {
        let mut cfg = RewardConfig::with_targets(self.alpha_star(), self.p_star_xy(), self.q_nominal());
        cfg.h_star = self.nominal_height;
        cfg
    }

    /// Stable fingerprint used to tie checkpoints to the geometry they were
    /// trained on.
    pub fn fingerprint(&self) -> [u8; 72] {
        let vals = [
            self.body_length,
            self.body_width,
            self.thigh_len,
            self.calf_len,
            self.mass,
            self.g,
            self.nominal_height,
            self.forward_offset,
            self.contact_layer,
        ];
        let mut out = [0u8; 72];
        for (chunk, v) in out.chunks_mut(8).zip(vals) {
            chunk.copy_from_slice(&v.to_le_bytes());
        }
        out
    }
}

pub fn leg_slice(q: &[f64; 12], leg: Leg) -> [f64; 3] {
    let i = 3 * leg.index();
    [q[i], q[i + 1], q[i + 2]]
}

/// Swap left and right legs and negate abduction.
pub fn mirror_joints(q: &[f64; 12]) -> [f64; 12] {
    let mut out = [0.0; 12];
    for leg in Leg::ALL {
        let src = leg_slice(q, leg);
        let dst = 3 * leg.mirror().index();
        out[dst + HIP] = -src[HIP];
        out[dst + THIGH] = src[THIGH];
        out[dst + CALF] = src[CALF];
    }
    out
}
