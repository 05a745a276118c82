use alloc::vec::Vec;

#[cfg(not(any(feature = "std", test)))]
#[allow(unused_imports)]
use num_traits::Float;

use crate::geom::{cross3, dot3, norm3, scale3, solve3, sub3, V2, V3};
use crate::reward::{edge_margin, quat_from_roll_pitch, QuadState, FL};

use super::geometry::{leg_slice, Leg, RobotGeometry};
use super::statics::static_forces;

/// Feet closer than this to the ground (m) count as touching down.
pub const CONTACT_TOL: f64 = 0.003;
/// Minimum foot separation (m) before the legs are considered colliding.
pub const FOOT_CLEARANCE: f64 = 0.05;
/// A foot this close below the base plane (m) is folded into the body.
pub const BODY_CLEARANCE: f64 = 0.05;

/// Planes steeper than this (cosine of tilt) cannot be stood on.
const MIN_PLANE_COS: f64 = 0.5;
const PLANE_TOL: f64 = 1e-9;
const SUPPORT_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("pose cannot rest on three or more feet")]
    UnstablePose,
    #[error("joint vector contains non-finite values")]
    NonFinite,
}

const TRIPLES: [[usize; 3]; 4] = [[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]];

struct Support {
    normal: V3,
    height: f64,
}

/// Find the ground plane: a face of the feet's lower hull, above which the
/// center of mass projects.
fn find_support(feet: &[V3; 4]) -> Option<Support> {
    for tri in TRIPLES {
        let [a, b, c] = tri.map(|i| feet[i]);
        let mut n = cross3(sub3(b, a), sub3(c, a));
        let len = norm3(n);
        if len < 1e-12 {
            continue;
        }
        n = scale3(n, 1.0 / len);
        if n[2] < 0.0 {
            n = scale3(n, -1.0);
        }
        if n[2] < MIN_PLANE_COS {
            continue;
        }
        let height = -dot3(n, a);
        if height <= 0.0 {
            continue;
        }
        if feet.iter().any(|f| dot3(n, *f) + height < -PLANE_TOL) {
            continue;
        }
        let (roll, pitch) = roll_pitch_from_normal(n);
        let world = tri.map(|i| body_to_world(feet[i], roll, pitch, height));
        let xy: [V2; 3] = world.map(|p| [p[0], p[1]]);
        match edge_margin([0.0, 0.0], &xy) {
            Ok(m) if m >= -PLANE_TOL => return Some(Support { normal: n, height }),
            _ => continue,
        }
    }
    None
}

fn roll_pitch_from_normal(n: V3) -> (f64, f64) {
    let pitch = (-n[0]).clamp(-1.0, 1.0).asin();
    let roll = n[1].atan2(n[2]);
    (roll, pitch)
}

/// Rotate by Ry(pitch) * Rx(roll) and lift by `height`.
fn body_to_world(p: V3, roll: f64, pitch: f64, height: f64) -> V3 {
    let (sr, cr) = roll.sin_cos();
    let (sp, cp) = pitch.sin_cos();
    let y1 = cr * p[1] - sr * p[2];
    let z1 = sr * p[1] + cr * p[2];
    [cp * p[0] + sp * z1, y1, -sp * p[0] + cp * z1 + height]
}

/// Residual of the vertical force and horizontal moment balance, scaled so
/// both parts are in newtons.
fn balance(feet: &[V3; 4], x: V3, geom: &RobotGeometry) -> ([f64; 3], [f64; 4], [V3; 4]) {
    let k = geom.contact_stiffness();
    let world = feet.map(|p| body_to_world(p, x[1], x[2], x[0]));
    let f = world.map(|p| k * (geom.contact_layer - p[2]).max(0.0));
    let w = geom.weight();
    let arm = geom.body_length.max(geom.body_width);
    let mut r = [-w, 0.0, 0.0];
    for i in 0..4 {
        r[0] += f[i];
        r[1] += f[i] * world[i][0] / arm;
        r[2] += f[i] * world[i][1] / arm;
    }
    (r, f, world)
}

fn norm_r(r: &[f64; 3]) -> f64 {
    norm3(*r)
}

/// Newton iteration on (height, roll, pitch) for the compliant contact
/// equilibrium, starting from the rigid support plane.
fn settle(feet: &[V3; 4], start: V3, geom: &RobotGeometry) -> Option<(V3, [f64; 4], [V3; 4])> {
    let tol = 1e-10 * geom.weight();
    let mut x = start;
    let (mut r, _, _) = balance(feet, x, geom);
    for _ in 0..100 {
        if norm_r(&r) < tol {
            break;
        }
        let eps = 1e-7;
        let mut jac = [[0.0; 3]; 3];
        for j in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[j] += eps;
            xm[j] -= eps;
            let (rp, _, _) = balance(feet, xp, geom);
            let (rm, _, _) = balance(feet, xm, geom);
            for i in 0..3 {
                jac[i][j] = (rp[i] - rm[i]) / (2.0 * eps);
            }
        }
        // Damped normal equations: the rotation about a loaded edge is free
        // when the center of mass sits exactly above it.
        let mut jtj = [[0.0; 3]; 3];
        let mut jtr = [0.0; 3];
        for i in 0..3 {
            for j in 0..3 {
                jtj[i][j] = (0..3).map(|k| jac[k][i] * jac[k][j]).sum();
            }
            jtr[i] = -(0..3).map(|k| jac[k][i] * r[k]).sum::<f64>();
        }
        let mu = 1e-12 * (jtj[0][0] + jtj[1][1] + jtj[2][2]).max(1e-300);
        for (i, row) in jtj.iter_mut().enumerate() {
            row[i] += mu;
        }
        let step = solve3(jtj, jtr)?;
        let mut t = 1.0;
        loop {
            let xn = [x[0] + t * step[0], x[1] + t * step[1], x[2] + t * step[2]];
            let (rn, _, _) = balance(feet, xn, geom);
            if norm_r(&rn) < norm_r(&r) || t < 1e-6 {
                x = xn;
                r = rn;
                break;
            }
            t *= 0.5;
        }
    }
    if norm_r(&r) >= tol * 10.0 {
        return None;
    }
    let (_, f, world) = balance(feet, x, geom);
    Some((x, f, world))
}

fn rigid_rest(feet: &[V3; 4], x: V3, geom: &RobotGeometry) -> Result<(V3, [f64; 4], [V3; 4]), SimError> {
    let world = feet.map(|p| body_to_world(p, x[1], x[2], x[0]));
    let touching: Vec<usize> = (0..4).filter(|&i| world[i][2] <= geom.contact_layer).collect();
    let xy: Vec<V2> = touching.iter().map(|&i| [world[i][0], world[i][1]]).collect();
    let forces = static_forces(&xy, [0.0, 0.0], geom.mass, geom.g).map_err(|_| SimError::UnstablePose)?;
    let mut f = [0.0; 4];
    for (&i, v) in touching.iter().zip(forces) {
        f[i] = v;
    }
    Ok((x, f, world))
}

/// Quasi-static resting state for absolute joint angles `q`.
///
/// Feet press into a thin compliant contact layer; a foot carries load while
/// it is within `contact_layer` of the ground. The layer stiffness is chosen
/// so the nominal stand rests at its nominal height with equal loads.
pub fn simulate_pose(q: &[f64; 12], geom: &RobotGeometry) -> Result<QuadState, SimError> {
    if q.iter().any(|v| !v.is_finite()) {
        return Err(SimError::NonFinite);
    }
    let feet_body = geom.feet_body(q);
    let support = find_support(&feet_body).ok_or(SimError::UnstablePose)?;
    let (roll0, pitch0) = roll_pitch_from_normal(support.normal);
    let start = [support.height, roll0, pitch0];
    let (x, mut f_z, feet_world) = match settle(&feet_body, start, geom) {
        Some(found) => found,
        // No isolated compliant equilibrium: the center of mass sits above a
        // support edge. Rest on the rigid plane instead.
        None => rigid_rest(&feet_body, start, geom)?,
    };
    let (h, roll, pitch) = (x[0], x[1], x[2]);
    if roll.cos() * pitch.cos() < MIN_PLANE_COS {
        return Err(SimError::UnstablePose);
    }

    let supporting = feet_world.iter().filter(|p| p[2] <= geom.contact_layer + SUPPORT_TOL).count();
    if supporting < 3 {
        return Err(SimError::UnstablePose);
    }
    // Three loaded feet: the exact equilibrium solution.
    let loaded: Vec<usize> = (0..4).filter(|&i| f_z[i] > 0.0).collect();
    if loaded.len() == 3 {
        let xy: Vec<V2> = loaded.iter().map(|&i| [feet_world[i][0], feet_world[i][1]]).collect();
        if let Ok(forces) = static_forces(&xy, [0.0, 0.0], geom.mass, geom.g) {
            for (&i, f) in loaded.iter().zip(forces) {
                f_z[i] = f;
            }
        }
    }

    let mut collision = feet_body.iter().any(|f| f[2] > -BODY_CLEARANCE);
    for i in 0..4 {
        for j in i + 1..4 {
            if norm3(sub3(feet_body[i], feet_body[j])) < FOOT_CLEARANCE {
                collision = true;
            }
        }
    }
    for leg in Leg::ALL {
        let knee = body_to_world(geom.knee_fk(leg, leg_slice(q, leg)), roll, pitch, h);
        if knee[2] < 0.0 {
            collision = true;
        }
    }

    Ok(QuadState {
        p: [0.0, 0.0, h],
        quat: quat_from_roll_pitch(roll, pitch),
        v: [0.0; 3],
        w: [0.0; 3],
        q: *q,
        qd: [0.0; 12],
        last_action: *q,
        foot_pos_world: feet_world,
        foot_pos_body: feet_body,
        f_z,
        t_air: 0.0,
        self_collision: collision,
    })
}

/// Whether the FL foot touches the ground in `s`.
pub fn fl_in_contact(s: &QuadState) -> bool {
    s.f_z[FL] > 0.0 || s.foot_pos_world[FL][2] <= 0.0
}

/// Simulate a sequence of joint targets at a fixed step, accumulating FL
/// air time (reset on touchdown).
pub fn rollout(targets: &[[f64; 12]], geom: &RobotGeometry, dt: f64) -> Result<Vec<QuadState>, SimError> {
    let mut out = Vec::with_capacity(targets.len());
    let mut t_air = 0.0;
    for q in targets {
        let mut s = simulate_pose(q, geom)?;
        t_air = if fl_in_contact(&s) { 0.0 } else { t_air + dt };
        s.t_air = t_air;
        out.push(s);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nominal_stand() {
        let g = RobotGeometry::default();
        let s = simulate_pose(&g.q_nominal(), &g).unwrap();
        assert!((s.p[2] - 0.3).abs() < 1e-9);
        let (r, p) = s.roll_pitch();
        assert!(r.abs() < 1e-12 && p.abs() < 1e-12);
        assert!(s.f_z.iter().all(|f| (f - g.weight() / 4.0).abs() < 1e-9));
        assert!(!s.self_collision);
    }

    #[test]
    fn world_transform_matches_normal() {
        let n = [-0.1f64, 0.2, (1.0f64 - 0.05).sqrt()];
        let (r, p) = roll_pitch_from_normal(n);
        let v = [0.3, -0.2, 0.1];
        let w = body_to_world(v, r, p, 0.0);
        assert!((w[2] - dot3(n, v)).abs() < 1e-12);
    }
}
