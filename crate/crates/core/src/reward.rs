//! Staged reward terms, the stability gate, and trajectory metrics.
//!
//! Every term is a pure function of a [`QuadState`] and a [`RewardConfig`].
//! Legs are indexed FL, FR, RL, RR; the support tripod for a front-left lift
//! is FR, RL, RR.

use alloc::vec::Vec;

#[cfg(not(any(feature = "std", test)))]
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::geom::{cross2, norm2, sub2, V2};

pub const FL: usize = 0;
pub const FR: usize = 1;
pub const RL: usize = 2;
pub const RR: usize = 3;
/// Support feet while the front-left leg is lifted.
pub const TRIPOD: [usize; 3] = [FR, RL, RR];

/// Supports smaller than this (m²) are treated as degenerate.
pub const MIN_SUPPORT_AREA: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RewardError {
    #[error("no foot carries load")]
    NoContact,
    #[error("support polygon is degenerate (area {area:.3e} m^2)")]
    DegenerateSupport { area: f64 },
    #[error("trajectory is empty")]
    EmptyTrajectory,
    #[error("phase mask has {mask} entries for {steps} steps")]
    PhaseMask { mask: usize, steps: usize },
    #[error("invalid reward config: {0}")]
    Config(&'static str),
}

/// Robot state as seen by the reward terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadState {
    pub p: [f64; 3],
    /// Unit quaternion, (w, x, y, z).
    pub quat: [f64; 4],
    pub v: [f64; 3],
    pub w: [f64; 3],
    pub q: [f64; 12],
    pub qd: [f64; 12],
    pub last_action: [f64; 12],
    pub foot_pos_world: [[f64; 3]; 4],
    pub foot_pos_body: [[f64; 3]; 4],
    #[serde(rename = "F_z")]
    pub f_z: [f64; 4],
    pub t_air: f64,
    #[serde(default)]
    pub self_collision: bool,
}

impl QuadState {
    pub fn height(&self) -> f64 {
        self.p[2]
    }

    /// Roll and pitch (rad) of the base, Z-Y-X convention.
    pub fn roll_pitch(&self) -> (f64, f64) {
        let [w, x, y, z] = self.quat;
        let roll = (2.0 * (w * x + y * z)).atan2(1.0 - 2.0 * (x * x + y * y));
        let pitch = (2.0 * (w * y - z * x)).clamp(-1.0, 1.0).asin();
        (roll, pitch)
    }

    /// Height of a foot above the (flat) ground.
    pub fn foot_height(&self, leg: usize) -> f64 {
        self.foot_pos_world[leg][2]
    }

    pub fn total_force(&self) -> f64 {
        self.f_z.iter().sum()
    }

    /// Force fraction carried by one foot; zero when nothing is loaded.
    pub fn force_fraction(&self, leg: usize) -> f64 {
        let total = self.total_force();
        if total > 0.0 {
            self.f_z[leg] / total
        } else {
            0.0
        }
    }

    /// Tripod force ratios (FR, RL, RR), summing to one.
    pub fn tripod_ratios(&self) -> [f64; 3] {
        let f = TRIPOD.map(|i| self.f_z[i]);
        let s: f64 = f.iter().sum();
        if s > 0.0 {
            f.map(|v| v / s)
        } else {
            [0.0; 3]
        }
    }

    pub fn in_contact(&self, leg: usize, f_thresh: f64) -> bool {
        self.f_z[leg] > f_thresh
    }
}

/// Quaternion (w, x, y, z) for a roll/pitch pair with zero yaw.
pub fn quat_from_roll_pitch(roll: f64, pitch: f64) -> [f64; 4] {
    let (sr, cr) = (roll * 0.5).sin_cos();
    let (sp, cp) = (pitch * 0.5).sin_cos();
    [cr * cp, sr * cp, cr * sp, -sr * sp]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CopMode {
    /// Penalize CoP closer than `delta` to the nearest tripod edge.
    #[default]
    Margin,
    /// Penalize the CoP's distance from the nearest edge beyond `delta`.
    Literal,
}

/// Per-term multipliers. Unit weights except the clearance hinge, whose raw
/// value is in metres and would otherwise be negligible next to the kernels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TermWeights {
    pub base: f64,
    pub distribute: f64,
    pub cop: f64,
    pub unload: f64,
    pub support: f64,
    pub no_contact: f64,
    pub clearance: f64,
    pub air_time: f64,
    pub clearance_target: f64,
    pub extend: f64,
}

impl Default for TermWeights {
    fn default() -> Self {
        Self {
            base: 1.0,
            distribute: 1.0,
            cop: 1.0,
            unload: 1.0,
            support: 1.0,
            no_contact: 1.0,
            clearance: 10.0,
            air_time: 1.0,
            clearance_target: 1.0,
            extend: 1.0,
        }
    }
}

/// Thresholds used by [`success_criterion`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SuccessConfig {
    /// Stage 1: allowed gap between mean FL force fraction and its target.
    pub phi_tolerance: f64,
    /// Stage 1: every foot must be loaded at least this fraction of steps.
    pub min_contact_fraction: f64,
    pub height_mae_max: f64,
    pub lift_success_min: f64,
    pub joint_error_max: f64,
    /// Stage 1: roll/pitch RMS bound (rad).
    pub tilt_rms_max: f64,
}

impl Default for SuccessConfig {
    fn default() -> Self {
        Self {
            phi_tolerance: 0.03,
            min_contact_fraction: 0.95,
            height_mae_max: 0.02,
            lift_success_min: 0.95,
            joint_error_max: 0.1,
            tilt_rms_max: 0.4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardConfig {
    pub k_d: f64,
    pub k_c: f64,
    pub k_u: f64,
    pub k_s: f64,
    pub k_n: f64,
    pub k_h: f64,
    pub k_p: f64,
    pub k_o: f64,
    pub k_z: f64,
    pub alpha_star: [f64; 3],
    pub phi_star: f64,
    pub z_star: f64,
    pub z_rel_star: f64,
    pub p_star_xy: [f64; 2],
    pub t_star: f64,
    pub dt: f64,
    pub f_min: f64,
    pub f_thresh: f64,
    pub delta: f64,
    pub h_star: f64,
    pub w_torque: f64,
    pub w_default: f64,
    /// Penalty on squared base linear + angular speed inside the base term.
    pub w_velocity: f64,
    /// Gain of the PD torque proxy.
    pub k_pd: f64,
    pub q_default: [f64; 12],
    pub cop_mode: CopMode,
    pub weights: TermWeights,
    pub success: SuccessConfig,
}

impl Default for RewardConfig {
    /// Defaults derived from the default robot geometry.
    fn default() -> Self {
        crate::model::RobotGeometry::default().reward_config()
    }
}

impl RewardConfig {
    /// Geometry-independent defaults; `alpha_star`, `p_star_xy` and
    /// `q_default` must be filled in by the caller.
    pub fn with_targets(alpha_star: [f64; 3], p_star_xy: [f64; 2], q_default: [f64; 12]) -> Self {
        Self {
            k_d: 5.0,
            k_c: 50.0,
            k_u: 10.0,
            k_s: 0.5,
            k_n: 0.5,
            k_h: 200.0,
            k_p: 100.0,
            k_o: 8.0,
            k_z: 1500.0,
            alpha_star,
            phi_star: 0.05,
            z_star: 0.08,
            z_rel_star: 0.05,
            p_star_xy,
            t_star: 0.5,
            dt: 0.05,
            f_min: 10.0,
            f_thresh: 5.0,
            delta: 0.03,
            h_star: 0.300,
            w_torque: 1e-4,
            w_default: 0.02,
            w_velocity: 0.01,
            k_pd: 20.0,
            q_default,
            cop_mode: CopMode::Margin,
            weights: TermWeights::default(),
            success: SuccessConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<(), RewardError> {
        let gains = [self.k_d, self.k_c, self.k_u, self.k_s, self.k_n, self.k_h, self.k_p, self.k_o, self.k_z];
        if gains.iter().any(|g| !(*g > 0.0 && g.is_finite())) {
            return Err(RewardError::Config("gains must be finite and positive"));
        }
        let sum: f64 = self.alpha_star.iter().sum();
        if self.alpha_star.iter().any(|a| !(*a > 0.0)) || (sum - 1.0).abs() > 1e-9 {
            return Err(RewardError::Config("alpha_star must be a positive 3-simplex point"));
        }
        if !(self.dt > 0.0) {
            return Err(RewardError::Config("dt must be positive"));
        }
        if self.w_torque < 0.0 || self.w_default < 0.0 || self.w_velocity < 0.0 {
            return Err(RewardError::Config("penalty weights must be non-negative"));
        }
        Ok(())
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[inline]
fn hinge(x: f64) -> f64 {
    x.max(0.0)
}

/// Center of pressure: force-weighted mean of the foot positions.
pub fn cop(f_z: &[f64; 4], foot_pos_world: &[[f64; 3]; 4]) -> Result<[f64; 2], RewardError> {
    let total: f64 = f_z.iter().sum();
    if !(total > 0.0) {
        return Err(RewardError::NoContact);
    }
    let mut c = [0.0; 2];
    for (f, p) in f_z.iter().zip(foot_pos_world) {
        c[0] += f * p[0];
        c[1] += f * p[1];
    }
    Ok([c[0] / total, c[1] / total])
}

/// Order points counter-clockwise around their centroid.
fn ccw_order(points: &[V2]) -> Vec<V2> {
    let n = points.len() as f64;
    let cx = points.iter().map(|p| p[0]).sum::<f64>() / n;
    let cy = points.iter().map(|p| p[1]).sum::<f64>() / n;
    let mut out: Vec<V2> = points.to_vec();
    out.sort_by(|a, b| {
        let ta = (a[1] - cy).atan2(a[0] - cx);
        let tb = (b[1] - cy).atan2(b[0] - cx);
        ta.total_cmp(&tb)
    });
    out
}

/// Area of a polygon given in counter-clockwise order.
pub(crate) fn polygon_area(poly: &[V2]) -> f64 {
    let mut a = 0.0;
    for i in 0..poly.len() {
        a += cross2(poly[i], poly[(i + 1) % poly.len()]);
    }
    0.5 * a
}

/// Signed distance from `point` to the nearest edge of the convex support
/// polygon; positive inside.
pub fn edge_margin(point: [f64; 2], support: &[[f64; 2]]) -> Result<f64, RewardError> {
    if support.len() < 3 {
        return Err(RewardError::DegenerateSupport { area: 0.0 });
    }
    let poly = ccw_order(support);
    let area = polygon_area(&poly);
    if !(area > MIN_SUPPORT_AREA) {
        return Err(RewardError::DegenerateSupport { area });
    }
    let mut best = f64::INFINITY;
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        let e = sub2(b, a);
        let d = cross2(e, sub2(point, a)) / norm2(e);
        best = best.min(d);
    }
    Ok(best)
}

pub fn r_distribute(alpha: &[f64; 3], cfg: &RewardConfig) -> f64 {
    let l1: f64 = alpha.iter().zip(&cfg.alpha_star).map(|(a, s)| (a - s).abs()).sum();
    (-cfg.k_d * l1).exp()
}

pub fn r_cop(s: f64, cfg: &RewardConfig) -> f64 {
    let excess = match cfg.cop_mode {
        CopMode::Margin => hinge(cfg.delta - s),
        CopMode::Literal => hinge(s.abs() - cfg.delta),
    };
    (-cfg.k_c * excess).exp()
}

pub fn r_unload(phi_fl: f64, cfg: &RewardConfig) -> f64 {
    (-cfg.k_u * hinge(phi_fl - cfg.phi_star)).exp()
}

pub fn r_support(forces: &[f64], cfg: &RewardConfig) -> f64 {
    forces.iter().map(|f| sigmoid(cfg.k_s * (f - cfg.f_min))).product()
}

pub fn r_no_contact(f_fl: f64, cfg: &RewardConfig) -> f64 {
    sigmoid(cfg.k_n * (cfg.f_thresh - f_fl))
}

pub fn r_clearance(z_rel: f64, cfg: &RewardConfig) -> f64 {
    hinge(z_rel - cfg.z_rel_star)
}

pub fn r_air_time(t_air: f64, cfg: &RewardConfig) -> f64 {
    (hinge(t_air - cfg.t_star) / cfg.dt).min(1.0)
}

pub fn r_clearance_target(z: f64, cfg: &RewardConfig) -> f64 {
    let e = z - cfg.z_star;
    (-cfg.k_h * e * e).exp()
}

pub fn r_extend(p_xy: [f64; 2], cfg: &RewardConfig) -> f64 {
    let dx = p_xy[0] - cfg.p_star_xy[0];
    let dy = p_xy[1] - cfg.p_star_xy[1];
    (-cfg.k_p * (dx * dx + dy * dy)).exp()
}

pub fn orientation_kernel(roll: f64, pitch: f64, k_o: f64) -> f64 {
    (-k_o * (roll * roll + pitch * pitch)).exp()
}

/// Signed margin of the current CoP inside the support tripod.
pub fn tripod_margin(state: &QuadState) -> Result<f64, RewardError> {
    let c = cop(&state.f_z, &state.foot_pos_world)?;
    let tri = TRIPOD.map(|i| [state.foot_pos_world[i][0], state.foot_pos_world[i][1]]);
    edge_margin(c, &tri)
}

/// Orientation stability times CoP stability. Zero when nothing is loaded
/// or the tripod is degenerate.
pub fn stability_gate(state: &QuadState, cfg: &RewardConfig) -> f64 {
    let (roll, pitch) = state.roll_pitch();
    match tripod_margin(state) {
        Ok(s) => orientation_kernel(roll, pitch, cfg.k_o) * r_cop(s, cfg),
        Err(_) => 0.0,
    }
}

/// Base stability term: height and orientation kernels minus a small
/// velocity penalty.
pub fn r_base(state: &QuadState, cfg: &RewardConfig) -> f64 {
    let (roll, pitch) = state.roll_pitch();
    let dh = state.height() - cfg.h_star;
    let speed2: f64 = state.v.iter().chain(&state.w).map(|x| x * x).sum();
    0.5 * (-cfg.k_z * dh * dh).exp() + 0.5 * orientation_kernel(roll, pitch, cfg.k_o) - cfg.w_velocity * speed2
}

/// Torque and default-pose penalty (non-positive).
pub fn regularization(state: &QuadState, cfg: &RewardConfig) -> f64 {
    let mut tau2 = 0.0;
    let mut dev2 = 0.0;
    for i in 0..12 {
        let tau = cfg.k_pd * (state.last_action[i] - state.q[i]);
        tau2 += tau * tau;
        let d = state.q[i] - cfg.q_default[i];
        dev2 += d * d;
    }
    -cfg.w_torque * tau2 - cfg.w_default * dev2
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Term {
    Base,
    Distribute,
    Cop,
    Unload,
    Support,
    NoContact,
    Clearance,
    AirTime,
    ClearanceTarget,
    Extend,
}

impl Term {
    fn weight(self, w: &TermWeights) -> f64 {
        match self {
            Term::Base => w.base,
            Term::Distribute => w.distribute,
            Term::Cop => w.cop,
            Term::Unload => w.unload,
            Term::Support => w.support,
            Term::NoContact => w.no_contact,
            Term::Clearance => w.clearance,
            Term::AirTime => w.air_time,
            Term::ClearanceTarget => w.clearance_target,
            Term::Extend => w.extend,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TermValue {
    pub term: Term,
    /// Raw term value before weighting or gating.
    pub value: f64,
    pub weight: f64,
    pub gated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub stage: u8,
    pub terms: Vec<TermValue>,
    pub gate: f64,
    pub regularization: f64,
    pub total: f64,
    /// False when the loaded feet do not match the stage's expected stance.
    pub topology_ok: bool,
}

impl RewardBreakdown {
    /// Contribution of one entry to the total.
    pub fn contribution(&self, t: &TermValue) -> f64 {
        let c = t.weight * t.value;
        if t.gated {
            self.gate * c
        } else {
            c
        }
    }

    /// Recompute the total from the entries, in stored order.
    pub fn sum_entries(&self) -> f64 {
        let mut s = 0.0;
        for t in &self.terms {
            s += self.contribution(t);
        }
        s + self.regularization
    }

    pub fn value(&self, term: Term) -> Option<f64> {
        self.terms.iter().find(|t| t.term == term).map(|t| t.value)
    }

    /// Same state re-totalled with a different gate.
    pub fn with_gate(&self, gate: f64) -> RewardBreakdown {
        let mut b = self.clone();
        b.gate = gate;
        b.total = b.sum_entries();
        b
    }
}

/// Score one state under the stage's reward. Stages outside 1..=3 are
/// clamped into range.
pub fn stage_reward(stage: u8, state: &QuadState, cfg: &RewardConfig) -> RewardBreakdown {
    let stage = stage.clamp(1, 3);
    let gate = stability_gate(state, cfg);
    let margin = tripod_margin(state).unwrap_or(f64::NEG_INFINITY);
    let alpha = state.tripod_ratios();

    let mut raw: Vec<(Term, f64, bool)> = Vec::with_capacity(8);
    raw.push((Term::Base, r_base(state, cfg), false));
    raw.push((Term::Distribute, r_distribute(&alpha, cfg), false));
    raw.push((Term::Cop, r_cop(margin, cfg), false));
    let topology_ok;
    if stage == 1 {
        raw.push((Term::Unload, r_unload(state.force_fraction(FL), cfg), false));
        topology_ok = (0..4).all(|i| state.in_contact(i, cfg.f_thresh));
    } else {
        let support = TRIPOD.map(|i| state.f_z[i]);
        raw.push((Term::Support, r_support(&support, cfg), false));
        raw.push((Term::NoContact, r_no_contact(state.f_z[FL], cfg), true));
        let fl = state.foot_pos_world[FL];
        if stage == 2 {
            raw.push((Term::Clearance, r_clearance(fl[2], cfg), true));
        } else {
            raw.push((Term::ClearanceTarget, r_clearance_target(fl[2], cfg), true));
        }
        raw.push((Term::AirTime, r_air_time(state.t_air, cfg), true));
        if stage == 3 {
            let pb = state.foot_pos_body[FL];
            raw.push((Term::Extend, r_extend([pb[0], pb[1]], cfg), true));
        }
        topology_ok = state.f_z[FL] == 0.0 && support.iter().all(|f| *f > 0.0);
    }

    let terms = raw
        .into_iter()
        .map(|(term, value, gated)| TermValue { term, value, weight: term.weight(&cfg.weights), gated })
        .collect();
    let mut b = RewardBreakdown { stage, terms, gate, regularization: regularization(state, cfg), total: 0.0, topology_ok };
    b.total = b.sum_entries();
    b
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMetrics {
    pub steps: usize,
    pub episode_s: f64,
    pub mean_height_m: f64,
    pub height_mae_m: f64,
    pub roll_rms_deg: f64,
    pub pitch_rms_deg: f64,
    /// Per-foot fraction of steps with F_z above the contact threshold.
    pub contact_fraction: [f64; 4],
    /// Fraction of steps standing on exactly the FR/RL/RR tripod.
    pub three_leg_fraction: f64,
    pub mean_contacts: f64,
    pub lift_success_rate: f64,
    pub mean_force_fractions: [f64; 4],
    pub mean_gate: f64,
    /// Filled in by the caller for Stage 3 evaluations.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extension_joint_error: Option<f64>,
}

/// Metrics over a whole trajectory, counting every step as active.
pub fn evaluate_metrics(traj: &[QuadState], cfg: &RewardConfig) -> Result<TrajectoryMetrics, RewardError> {
    evaluate_metrics_masked(traj, None, cfg)
}

/// Per-step lift predicate: FL unloaded, clear of the ground, and stable.
pub fn lift_succeeded(state: &QuadState, cfg: &RewardConfig) -> bool {
    state.f_z[FL] < cfg.f_thresh
        && state.foot_height(FL) > 0.5 * cfg.z_rel_star
        && stability_gate(state, cfg) > 0.5
}

/// Metrics where `active` selects the steps counted for lift success.
pub fn evaluate_metrics_masked(
    traj: &[QuadState],
    active: Option<&[bool]>,
    cfg: &RewardConfig,
) -> Result<TrajectoryMetrics, RewardError> {
    if traj.is_empty() {
        return Err(RewardError::EmptyTrajectory);
    }
    if let Some(mask) = active {
        if mask.len() != traj.len() {
            return Err(RewardError::PhaseMask { mask: mask.len(), steps: traj.len() });
        }
    }
    let n = traj.len() as f64;
    let mut h_sum = 0.0;
    let mut mae_sum = 0.0;
    let mut roll2 = 0.0;
    let mut pitch2 = 0.0;
    let mut contacts = [0usize; 4];
    let mut three_leg = 0usize;
    let mut contact_count = 0usize;
    let mut gate_sum = 0.0;
    let mut frac_sum = [0.0; 4];
    let mut frac_steps = 0usize;
    let mut active_steps = 0usize;
    let mut lifted = 0usize;

    for (k, s) in traj.iter().enumerate() {
        let h = s.height();
        h_sum += h;
        mae_sum += (h - cfg.h_star).abs();
        let (roll, pitch) = s.roll_pitch();
        roll2 += roll * roll;
        pitch2 += pitch * pitch;
        let c = [0, 1, 2, 3].map(|i| s.in_contact(i, cfg.f_thresh));
        for i in 0..4 {
            contacts[i] += c[i] as usize;
        }
        contact_count += c.iter().filter(|x| **x).count();
        if !c[FL] && TRIPOD.iter().all(|&i| c[i]) {
            three_leg += 1;
        }
        gate_sum += stability_gate(s, cfg);
        let total = s.total_force();
        if total > 0.0 {
            for i in 0..4 {
                frac_sum[i] += s.f_z[i] / total;
            }
            frac_steps += 1;
        }
        if active.map_or(true, |m| m[k]) {
            active_steps += 1;
            lifted += lift_succeeded(s, cfg) as usize;
        }
    }

    let fs = frac_steps.max(1) as f64;
    Ok(TrajectoryMetrics {
        steps: traj.len(),
        episode_s: n * cfg.dt,
        mean_height_m: h_sum / n,
        height_mae_m: mae_sum / n,
        roll_rms_deg: (roll2 / n).sqrt().to_degrees(),
        pitch_rms_deg: (pitch2 / n).sqrt().to_degrees(),
        contact_fraction: contacts.map(|c| c as f64 / n),
        three_leg_fraction: three_leg as f64 / n,
        mean_contacts: contact_count as f64 / n,
        lift_success_rate: if active_steps == 0 { 0.0 } else { lifted as f64 / active_steps as f64 },
        mean_force_fractions: frac_sum.map(|f| f / fs),
        mean_gate: gate_sum / n,
        extension_joint_error: None,
    })
}

/// Whether a stage's trained behaviour meets its completion criterion.
pub fn success_criterion(stage: u8, m: &TrajectoryMetrics, cfg: &RewardConfig) -> bool {
    let sc = &cfg.success;
    match stage {
        1 => {
            let tilt_bound = sc.tilt_rms_max.to_degrees();
            (m.mean_force_fractions[FL] - cfg.phi_star).abs() <= sc.phi_tolerance
                && m.contact_fraction.iter().all(|c| *c >= sc.min_contact_fraction)
                && m.height_mae_m < sc.height_mae_max
                && m.roll_rms_deg < tilt_bound
                && m.pitch_rms_deg < tilt_bound
        }
        2 => m.lift_success_rate > sc.lift_success_min && m.height_mae_m < sc.height_mae_max,
        3 => {
            success_criterion(2, m, cfg) && m.extension_joint_error.is_some_and(|e| e < sc.joint_error_max)
        }
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> RewardConfig {
        RewardConfig::with_targets([1.0 / 3.0; 3], [0.34, 0.145], [0.0; 12])
    }

    fn square_state(f: [f64; 4]) -> QuadState {
        let feet = [[0.19, 0.145, 0.0], [0.19, -0.145, 0.0], [-0.19, 0.145, 0.0], [-0.19, -0.145, 0.0]];
        QuadState {
            p: [0.0, 0.0, 0.3],
            quat: [1.0, 0.0, 0.0, 0.0],
            v: [0.0; 3],
            w: [0.0; 3],
            q: [0.0; 12],
            qd: [0.0; 12],
            last_action: [0.0; 12],
            foot_pos_world: feet,
            foot_pos_body: feet.map(|p| [p[0], p[1], -0.3]),
            f_z: f,
            t_air: 0.0,
            self_collision: false,
        }
    }

    #[test]
    fn cop_weighted_mean() {
        let feet = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 1.0, 0.0]];
        let c = cop(&[2.0, 1.0, 1.0, 0.0], &feet).unwrap();
        assert!((c[0] - 0.25).abs() < 1e-15 && (c[1] - 0.25).abs() < 1e-15);
        assert_eq!(cop(&[0.0; 4], &feet), Err(RewardError::NoContact));
        assert_eq!(cop(&[0.0, 0.0, 5.0, 0.0], &feet).unwrap(), [0.0, 1.0]);
    }

    #[test]
    fn edge_margin_signs() {
        let tri = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        assert_eq!(edge_margin([0.5, 0.0], &tri).unwrap(), 0.0);
        assert!((edge_margin([0.3, -0.05], &tri).unwrap() + 0.05).abs() < 1e-15);
        assert!(matches!(
            edge_margin([0.0, 0.0], &[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]),
            Err(RewardError::DegenerateSupport { .. })
        ));
    }

    #[test]
    fn roll_pitch_round_trip() {
        for (r, p) in [(0.1868, 0.0), (-0.3, 0.2), (0.0, -0.35)] {
            let mut s = square_state([1.0; 4]);
            s.quat = quat_from_roll_pitch(r, p);
            let (rr, pp) = s.roll_pitch();
            assert!((rr - r).abs() < 1e-14 && (pp - p).abs() < 1e-14);
        }
    }

    #[test]
    fn stage_totals_match_entries() {
        let c = cfg();
        let s = square_state([29.43; 4]);
        for stage in 1..=3 {
            let b = stage_reward(stage, &s, &c);
            assert_eq!(b.total, b.sum_entries());
        }
        let b2 = stage_reward(2, &s, &c);
        assert!(!b2.topology_ok);
        assert_eq!(b2.value(Term::Clearance), Some(0.0));
    }

    #[test]
    fn metrics_reject_empty() {
        assert_eq!(evaluate_metrics(&[], &cfg()), Err(RewardError::EmptyTrajectory));
    }
}
