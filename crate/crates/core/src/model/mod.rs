//! Quasi-static quadruped: kinematics, static force distribution, pose
//! simulation, curriculum training and gesture composition.
//!
//! Body frame: x forward, y left, z up, origin at the center of mass. Joint
//! vectors are ordered FL, FR, RL, RR, each (hip abduction, thigh, calf).

mod geometry;
mod gesture;
mod sim;
mod statics;
mod train;

pub use geometry::{leg_slice, mirror_joints, Leg, RobotGeometry, CALF, HIP, THIGH};
pub use gesture::{
    compose_gesture, execute_gesture, ExecutedGesture, GestureError, GestureKind, GestureParams, GestureTrajectory,
    Segment, SegmentKind, StagePoses,
};
pub use sim::{fl_in_contact, rollout, simulate_pose, SimError, BODY_CLEARANCE, CONTACT_TOL, FOOT_CLEARANCE};
pub use statics::{equilibrium_residual, static_forces, StaticsError};
pub use train::{
    evaluate_policy, execute, extension_target, optimize_stage, pose_objective, run_ablation, run_curriculum,
    AblationReport, BranchReport, CurvePoint, ModelContext, PosePolicy, StageEvaluation, StageSpec, TrainError,
    TrainOutcome, DIVERGENCE_LIMIT, TERMINATED_REWARD,
};
