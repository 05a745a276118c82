//! Cross-entropy search over static pose offsets, chained into a
//! three-stage curriculum, plus the direct-training ablation.

use alloc::vec;
use alloc::vec::Vec;

#[cfg(not(any(feature = "std", test)))]
#[allow(unused_imports)]
use num_traits::Float;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::actuator::{run_schedule, safety_check, ScheduleConfig, SafetyLimits, TerminateReason, TrajectoryError, Verdict};
use crate::reward::{evaluate_metrics_masked, stage_reward, success_criterion, RewardConfig, TrajectoryMetrics, FL};

use super::geometry::{Leg, RobotGeometry, CALF, THIGH};
use super::sim::{fl_in_contact, simulate_pose};

/// Everything a stage evaluation needs besides the policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelContext {
    pub geometry: RobotGeometry,
    pub reward: RewardConfig,
    pub schedule: ScheduleConfig,
    pub limits: SafetyLimits,
    /// Length of the held active phase when a policy is deployed (s).
    pub deploy_s: f64,
}

impl Default for ModelContext {
    fn default() -> Self {
        let geometry = RobotGeometry::default();
        let reward = geometry.reward_config();
        Self { geometry, reward, schedule: ScheduleConfig::default(), limits: SafetyLimits::default(), deploy_s: 30.0 }
    }
}

impl ModelContext {
    pub fn q_nominal(&self) -> [f64; 12] {
        self.geometry.q_nominal()
    }

    pub fn joints(&self, dq: &[f64; 12]) -> [f64; 12] {
        let qn = self.q_nominal();
        core::array::from_fn(|i| qn[i] + dq[i])
    }
}

/// A static pose offset from the nominal stance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosePolicy {
    pub dq: [f64; 12],
    /// Stage that produced this policy; 0 for the untrained nominal pose.
    pub stage: u8,
    pub parent_stage: Option<u8>,
    /// Whether the policy met its stage's success criterion.
    pub passed: bool,
}

impl PosePolicy {
    pub fn nominal() -> Self {
        Self { dq: [0.0; 12], stage: 0, parent_stage: None, passed: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StageSpec {
    pub stage: u8,
    pub max_iterations: usize,
    pub population: usize,
    pub elite_fraction: f64,
    pub noise_decay: f64,
    pub init_sigma: f64,
    /// Steps of the held pose scored per candidate.
    pub eval_steps: usize,
    /// Actuation box on each joint offset (rad).
    pub dq_limit: f64,
    /// Allow starting without a passing previous-stage policy.
    pub no_curriculum: bool,
}

impl Default for StageSpec {
    fn default() -> Self {
        Self::for_stage(1)
    }
}

impl StageSpec {
    pub fn for_stage(stage: u8) -> Self {
        Self {
            stage,
            max_iterations: 120,
            population: 128,
            elite_fraction: 0.25,
            noise_decay: 0.95,
            init_sigma: 0.15,
            eval_steps: 30,
            dq_limit: 0.8,
            no_curriculum: false,
        }
    }

    pub fn curriculum() -> [StageSpec; 3] {
        [StageSpec::for_stage(1), StageSpec::for_stage(2), StageSpec::for_stage(3)]
    }

    fn validate(&self) -> Result<(), TrainError> {
        if !(1..=3).contains(&self.stage) {
            return Err(TrainError::Config("stage must be 1, 2 or 3"));
        }
        if self.population < 2 || self.max_iterations == 0 || self.eval_steps == 0 {
            return Err(TrainError::Config("population >= 2, iterations and eval_steps > 0"));
        }
        if !(self.elite_fraction > 0.0 && self.elite_fraction <= 1.0) {
            return Err(TrainError::Config("elite_fraction must lie in (0, 1]"));
        }
        if !(self.noise_decay > 0.0 && self.noise_decay <= 1.0 && self.init_sigma > 0.0 && self.dq_limit > 0.0) {
            return Err(TrainError::Config("noise parameters must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TrainError {
    #[error("every sample was unstable for {iterations} consecutive iterations")]
    Diverged { iterations: usize },
    #[error("stage {stage} needs a passing stage {} policy to start from", stage - 1)]
    Curriculum { stage: u8 },
    #[error("invalid stage spec: {0}")]
    Config(&'static str),
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
}

/// Consecutive all-unstable iterations tolerated before giving up.
pub const DIVERGENCE_LIMIT: usize = 10;
/// Objective assigned to a stable pose that trips the safety check.
pub const TERMINATED_REWARD: f64 = -1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub iteration: usize,
    pub mean_reward: f64,
    pub best_reward: f64,
    /// Samples that could not stand or broke the stage's contact topology.
    pub unstable: usize,
}

/// Deployment result of a policy: settle, held pose, return.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageEvaluation {
    pub metrics: TrajectoryMetrics,
    pub passed: bool,
    /// Seconds completed before a safety termination (or the full length).
    pub completed_s: f64,
    pub terminated: Option<TerminateReason>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainOutcome {
    pub policy: PosePolicy,
    pub curve: Vec<CurvePoint>,
    pub best_reward: f64,
    pub evaluation: StageEvaluation,
}

/// Mean stage reward of holding `dq` for `steps` steps; `None` if the pose
/// cannot stand, or for Stage 1 if it does not keep all four feet loaded.
pub fn pose_objective(stage: u8, dq: &[f64; 12], steps: usize, ctx: &ModelContext) -> Option<f64> {
    let mut s = simulate_pose(&ctx.joints(dq), &ctx.geometry).ok()?;
    if !safety_check(&s, &ctx.limits).is_ok() {
        return Some(TERMINATED_REWARD);
    }
    // Unloading is only meaningful while the foot still touches down.
    if stage == 1 && !stage_reward(1, &s, &ctx.reward).topology_ok {
        return None;
    }
    let airborne = !fl_in_contact(&s);
    let dt = ctx.reward.dt;
    let mut total = 0.0;
    for k in 0..steps {
        s.t_air = if airborne { (k + 1) as f64 * dt } else { 0.0 };
        total += stage_reward(stage, &s, &ctx.reward).total;
    }
    Some(total / steps as f64)
}

/// FL thigh/calf angles that put the foot on the Stage 3 target, given the
/// base attitude of `state`.
pub fn extension_target(state: &crate::reward::QuadState, ctx: &ModelContext) -> Option<[f64; 3]> {
    let (roll, pitch) = state.roll_pitch();
    // Ground normal expressed in the body frame.
    let n = [-pitch.sin(), pitch.cos() * roll.sin(), pitch.cos() * roll.cos()];
    let [px, py] = ctx.reward.p_star_xy;
    let bz = (ctx.reward.z_star - state.height() - n[0] * px - n[1] * py) / n[2];
    ctx.geometry.leg_ik(Leg::FL, [px, py, bz])
}

/// Deploy a policy through the schedule and score the result.
pub fn evaluate_policy(policy: &PosePolicy, stage: u8, ctx: &ModelContext) -> Result<StageEvaluation, TrainError> {
    let target = ctx.joints(&policy.dq);
    let active_steps = ((ctx.deploy_s * ctx.schedule.rate_hz).round() as usize).max(1);
    let sched = run_schedule(&vec![target; active_steps], &ctx.q_nominal(), &ctx.schedule)?;
    let (states, mask, terminated) = execute(&sched.executed, &sched.commanded, &sched.active_mask(), ctx);
    let completed_s = states.len() as f64 * ctx.reward.dt;

    let mut metrics = if states.is_empty() {
        empty_metrics()
    } else {
        evaluate_metrics_masked(&states, Some(&mask), &ctx.reward).expect("non-empty and aligned")
    };
    // Steps lost to an early termination count as failed lifts.
    let active_done = mask.iter().filter(|m| **m).count();
    if active_steps > 0 {
        metrics.lift_success_rate *= active_done as f64 / active_steps as f64;
    }
    if stage == 3 {
        let last_active = states.iter().zip(&mask).filter(|(_, m)| **m).map(|(s, _)| s).last();
        metrics.extension_joint_error = last_active.and_then(|s| {
            let t = extension_target(s, ctx)?;
            let i = 3 * Leg::FL.index();
            Some((s.q[i + THIGH] - t[THIGH]).abs().max((s.q[i + CALF] - t[CALF]).abs()))
        });
    }
    let passed = terminated.is_none() && success_criterion(stage, &metrics, &ctx.reward);
    Ok(StageEvaluation { metrics, passed, completed_s, terminated })
}

fn empty_metrics() -> TrajectoryMetrics {
    TrajectoryMetrics {
        steps: 0,
        episode_s: 0.0,
        mean_height_m: 0.0,
        height_mae_m: f64::INFINITY,
        roll_rms_deg: 0.0,
        pitch_rms_deg: 0.0,
        contact_fraction: [0.0; 4],
        three_leg_fraction: 0.0,
        mean_contacts: 0.0,
        lift_success_rate: 0.0,
        mean_force_fractions: [0.0; 4],
        mean_gate: 0.0,
        extension_joint_error: None,
    }
}

/// Simulate executed joint targets until the end or the first safety
/// termination. Returns the states reached, their phase mask, and the
/// termination reason if any.
pub fn execute(
    executed: &[[f64; 12]],
    commanded: &[[f64; 12]],
    active: &[bool],
    ctx: &ModelContext,
) -> (Vec<crate::reward::QuadState>, Vec<bool>, Option<TerminateReason>) {
    let mut states = Vec::with_capacity(executed.len());
    let mut mask = Vec::with_capacity(executed.len());
    let mut t_air = 0.0;
    for (k, q) in executed.iter().enumerate() {
        let Ok(mut s) = simulate_pose(q, &ctx.geometry) else {
            return (states, mask, Some(TerminateReason::Fell));
        };
        t_air = if fl_in_contact(&s) { 0.0 } else { t_air + ctx.reward.dt };
        s.t_air = t_air;
        if let Some(c) = commanded.get(k) {
            s.last_action = *c;
        }
        if let Verdict::Terminate(r) = safety_check(&s, &ctx.limits) {
            return (states, mask, Some(r));
        }
        states.push(s);
        mask.push(active[k]);
    }
    (states, mask, None)
}

fn stage_rng(seed: u64, stage: u8) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ ((stage as u64) << 56))
}

/// Run the cross-entropy search for one stage starting from `init`.
pub fn optimize_stage(
    spec: &StageSpec,
    init: &PosePolicy,
    seed: u64,
    ctx: &ModelContext,
) -> Result<TrainOutcome, TrainError> {
    spec.validate()?;
    if spec.stage > 1 && !spec.no_curriculum && !(init.stage + 1 == spec.stage && init.passed) {
        return Err(TrainError::Curriculum { stage: spec.stage });
    }
    let mut rng = stage_rng(seed, spec.stage);
    let lim = spec.dq_limit;
    let n_elite = ((spec.population as f64 * spec.elite_fraction).ceil() as usize).max(1);

    let mut mean = init.dq.map(|v| v.clamp(-lim, lim));
    let mut sigma = [spec.init_sigma; 12];
    let mut best_dq = mean;
    let mut best = pose_objective(spec.stage, &mean, spec.eval_steps, ctx).unwrap_or(f64::NEG_INFINITY);
    let mut curve = Vec::with_capacity(spec.max_iterations);
    let mut unstable_run = 0;
    let mut floor = spec.init_sigma;

    for iteration in 0..spec.max_iterations {
        let mut scored: Vec<([f64; 12], f64)> = Vec::with_capacity(spec.population);
        for _ in 0..spec.population {
            let x: [f64; 12] = core::array::from_fn(|i| {
                let e: f64 = StandardNormal.sample(&mut rng);
                (mean[i] + sigma[i] * e).clamp(-lim, lim)
            });
            if let Some(r) = pose_objective(spec.stage, &x, spec.eval_steps, ctx) {
                scored.push((x, r));
            }
        }
        let unstable = spec.population - scored.len();
        floor *= spec.noise_decay;
        if scored.is_empty() {
            unstable_run += 1;
            if unstable_run >= DIVERGENCE_LIMIT {
                return Err(TrainError::Diverged { iterations: unstable_run });
            }
            curve.push(CurvePoint { iteration, mean_reward: f64::NAN, best_reward: best, unstable });
            continue;
        }
        unstable_run = 0;
        let mean_reward = scored.iter().map(|s| s.1).sum::<f64>() / scored.len() as f64;
        // Stable sort keeps sample order on ties, so results are reproducible.
        scored.sort_by(|a, b| b.1.total_cmp(&a.1));
        if scored[0].1 > best {
            best = scored[0].1;
            best_dq = scored[0].0;
        }
        // Terminated samples all tie and carry no direction; rank only the
        // safe ones and fall back to the best pose when too few remain.
        let safe = scored.iter().take_while(|s| s.1 > TERMINATED_REWARD).count();
        if safe < 2 {
            mean = best_dq;
            curve.push(CurvePoint { iteration, mean_reward, best_reward: best, unstable });
            continue;
        }
        let elites = &scored[..n_elite.min(safe)];
        let k = elites.len() as f64;
        for i in 0..12 {
            let m = elites.iter().map(|e| e.0[i]).sum::<f64>() / k;
            let var = elites.iter().map(|e| (e.0[i] - m).powi(2)).sum::<f64>() / k;
            mean[i] = m;
            sigma[i] = var.sqrt().max(floor);
        }
        curve.push(CurvePoint { iteration, mean_reward, best_reward: best, unstable });
    }

    let mut policy = PosePolicy {
        dq: best_dq,
        stage: spec.stage,
        parent_stage: (init.stage > 0).then_some(init.stage),
        passed: false,
    };
    let evaluation = evaluate_policy(&policy, spec.stage, ctx)?;
    policy.passed = evaluation.passed;
    Ok(TrainOutcome { policy, curve, best_reward: best, evaluation })
}

/// Train stages in order, each initialized from the previous result.
pub fn run_curriculum(specs: &[StageSpec], seed: u64, ctx: &ModelContext) -> Result<Vec<TrainOutcome>, TrainError> {
    let mut out: Vec<TrainOutcome> = Vec::with_capacity(specs.len());
    let mut init = PosePolicy::nominal();
    for spec in specs {
        let o = optimize_stage(spec, &init, seed, ctx)?;
        init = o.policy.clone();
        out.push(o);
    }
    Ok(out)
}

/// Table-style summary of one ablation branch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchReport {
    pub lift_success_rate: f64,
    pub success: bool,
    pub completed_s: f64,
    pub mean_contacts: f64,
    pub height_mae_m: f64,
    pub roll_rms_deg: f64,
    pub best_reward: f64,
    pub diverged: bool,
    pub terminated: Option<TerminateReason>,
    pub dq: Option<[f64; 12]>,
}

impl BranchReport {
    fn from_outcome(o: &TrainOutcome) -> Self {
        let m = &o.evaluation.metrics;
        Self {
            lift_success_rate: m.lift_success_rate,
            success: o.evaluation.passed,
            completed_s: o.evaluation.completed_s,
            mean_contacts: m.mean_contacts,
            height_mae_m: m.height_mae_m,
            roll_rms_deg: m.roll_rms_deg,
            best_reward: o.best_reward,
            diverged: false,
            terminated: o.evaluation.terminated,
            dq: Some(o.policy.dq),
        }
    }

    fn diverged() -> Self {
        Self {
            lift_success_rate: 0.0,
            success: false,
            completed_s: 0.0,
            mean_contacts: 0.0,
            height_mae_m: f64::INFINITY,
            roll_rms_deg: 0.0,
            best_reward: f64::NEG_INFINITY,
            diverged: true,
            terminated: None,
            dq: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub seed: u64,
    pub curriculum: BranchReport,
    pub direct: BranchReport,
}

fn direct_branch(spec: &StageSpec, seed: u64, ctx: &ModelContext) -> Result<BranchReport, TrainError> {
    let mut s = spec.clone();
    s.no_curriculum = true;
    match optimize_stage(&s, &PosePolicy::nominal(), seed, ctx) {
        Ok(o) => Ok(BranchReport::from_outcome(&o)),
        Err(TrainError::Diverged { .. }) => Ok(BranchReport::diverged()),
        Err(e) => Err(e),
    }
}

/// Stage 2 trained through Stage 1 versus Stage 2 trained from the nominal
/// pose with the same Stage 2 budget. With `curriculum` false both branches
/// train directly.
pub fn run_ablation(
    specs: &[StageSpec; 3],
    seed: u64,
    curriculum: bool,
    ctx: &ModelContext,
) -> Result<AblationReport, TrainError> {
    let cur = if curriculum {
        let outcomes = run_curriculum(&specs[..2], seed, ctx)?;
        BranchReport::from_outcome(&outcomes[1])
    } else {
        direct_branch(&specs[1], seed, ctx)?
    };
    let direct = direct_branch(&specs[1], seed, ctx)?;
    Ok(AblationReport { seed, curriculum: cur, direct })
}

/// Index of the FL joints inside a 12-vector.
pub(crate) fn fl_range() -> core::ops::Range<usize> {
    let i = 3 * FL;
    i..i + 3
}
