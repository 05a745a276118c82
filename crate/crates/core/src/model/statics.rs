use alloc::vec::Vec;

use crate::geom::{solve3, V2};
use crate::reward::{edge_margin, RewardError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StaticsError {
    #[error("center of mass lies outside the support polygon (margin {margin:.4} m)")]
    Infeasible { margin: f64 },
    #[error("support polygon is degenerate")]
    DegenerateSupport,
}

/// Tolerance (m) for treating a CoM on the support boundary as inside.
const BOUNDARY_TOL: f64 = 1e-9;

/// Vertical contact forces holding `mass` in static equilibrium with the
/// center of mass above `com`.
///
/// Three feet determine the forces uniquely. With more feet the
/// minimum-norm solution is taken; if that needs a pulling foot, the best
/// non-negative solution on a three-foot sub-support is returned instead.
pub fn static_forces(contacts: &[V2], com: V2, mass: f64, g: f64) -> Result<Vec<f64>, StaticsError> {
    if contacts.len() < 3 {
        return Err(StaticsError::DegenerateSupport);
    }
    let margin = match edge_margin(com, contacts) {
        Ok(m) => m,
        Err(RewardError::DegenerateSupport { .. }) => return Err(StaticsError::DegenerateSupport),
        Err(_) => unreachable!("edge_margin only fails on degenerate supports"),
    };
    if margin < -BOUNDARY_TOL {
        return Err(StaticsError::Infeasible { margin });
    }
    let w = mass * g;
    let neg_tol = 1e-9 * w;

    let mut f = if contacts.len() == 3 {
        solve_tripod(contacts, com, w).ok_or(StaticsError::DegenerateSupport)?
    } else {
        let f = min_norm(contacts, com, w).ok_or(StaticsError::DegenerateSupport)?;
        if f.iter().all(|v| *v >= -neg_tol) {
            f
        } else {
            best_sub_tripod(contacts, com, w, neg_tol).ok_or(StaticsError::Infeasible { margin })?
        }
    };
    for v in f.iter_mut() {
        if *v < 0.0 {
            if *v < -neg_tol {
                return Err(StaticsError::Infeasible { margin });
            }
            *v = 0.0;
        }
    }
    Ok(f)
}

fn equilibrium_rhs(com: V2, w: f64) -> [f64; 3] {
    [w, w * com[0], w * com[1]]
}

fn solve_tripod(p: &[V2], com: V2, w: f64) -> Option<Vec<f64>> {
    let m = [
        [1.0, 1.0, 1.0],
        [p[0][0], p[1][0], p[2][0]],
        [p[0][1], p[1][1], p[2][1]],
    ];
    solve3(m, equilibrium_rhs(com, w)).map(|f| f.to_vec())
}

/// f = A^T (A A^T)^{-1} b for the 3 x k equilibrium matrix A.
fn min_norm(p: &[V2], com: V2, w: f64) -> Option<Vec<f64>> {
    let rows = |i: usize, pt: &V2| match i {
        0 => 1.0,
        1 => pt[0],
        _ => pt[1],
    };
    let mut aat = [[0.0; 3]; 3];
    for (i, row) in aat.iter_mut().enumerate() {
        for (j, slot) in row.iter_mut().enumerate() {
            *slot = p.iter().map(|pt| rows(i, pt) * rows(j, pt)).sum();
        }
    }
    let y = solve3(aat, equilibrium_rhs(com, w))?;
    Some(p.iter().map(|pt| (0..3).map(|i| rows(i, pt) * y[i]).sum()).collect())
}

fn best_sub_tripod(p: &[V2], com: V2, w: f64, neg_tol: f64) -> Option<Vec<f64>> {
    let k = p.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for a in 0..k {
        for b in a + 1..k {
            for c in b + 1..k {
                let sub = [p[a], p[b], p[c]];
                let Some(fs) = solve_tripod(&sub, com, w) else { continue };
                if fs.iter().any(|v| *v < -neg_tol) {
                    continue;
                }
                let norm: f64 = fs.iter().map(|v| v * v).sum();
                if best.as_ref().is_none_or(|(n, _)| norm < *n) {
                    let mut full = alloc::vec![0.0; k];
                    full[a] = fs[0];
                    full[b] = fs[1];
                    full[c] = fs[2];
                    best = Some((norm, full));
                }
            }
        }
    }
    best.map(|(_, f)| f)
}

/// Force and moment residuals of a force set about `com`; a direct check
/// that does not reuse the solver.
pub fn equilibrium_residual(contacts: &[V2], forces: &[f64], com: V2, mass: f64, g: f64) -> [f64; 3] {
    let mut r = [-mass * g, 0.0, 0.0];
    for (p, f) in contacts.iter().zip(forces) {
        r[0] += f;
        r[1] += f * (p[0] - com[0]);
        r[2] += f * (p[1] - com[1]);
    }
    r
}
