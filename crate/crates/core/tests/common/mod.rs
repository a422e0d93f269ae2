//! Independent oracles shared by the integration tests.
//!
//! Nothing here calls the analytic matrices: the closure derivatives come
//! from finite differences of the residual, and ranks and singular values
//! come from a small one-sided Jacobi SVD.

#![allow(dead_code)]

use nalgebra::DMatrix;
use pkm::kinetostatics::SingularityClass;
use pkm::mechanism::{JointVector, MechanismKind, MechanismModel, Pose, WorkingMode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn bipod() -> MechanismModel {
    MechanismModel::bipod([[0.0, 0.0], [10.0, 0.0]]).unwrap()
}

pub fn biglide() -> MechanismModel {
    MechanismModel::biglide(5.0).unwrap()
}

pub fn three_rpr() -> MechanismModel {
    MechanismModel::three_rpr(
        [[0.0, 0.0], [10.0, 0.0], [5.0, 8.0]],
        [[-1.0, -0.5], [1.0, -0.5], [0.0, 1.0]],
    )
    .unwrap()
}

pub fn orthoglide() -> MechanismModel {
    MechanismModel::orthoglide(10.0).unwrap()
}

pub fn all_models() -> Vec<MechanismModel> {
    vec![bipod(), biglide(), three_rpr(), orthoglide()]
}

/// Uniform pose in a box that covers most of the model's reachable set.
pub fn random_pose(model: &MechanismModel, rng: &mut ChaCha8Rng) -> Pose {
    let mut u = |lo: f64, hi: f64| rng.random_range(lo..hi);
    match model.kind() {
        MechanismKind::Bipod => Pose::planar(u(-5.0, 15.0), u(-8.0, 8.0)),
        MechanismKind::Biglide => Pose::planar(u(-4.0, 4.0), u(-5.0, 5.0)),
        MechanismKind::PlanarThreeRpr => Pose::oriented(u(1.0, 9.0), u(0.5, 7.0), u(-1.0, 1.0)),
        MechanismKind::Orthoglide => Pose::spatial(u(-7.0, 7.0), u(-7.0, 7.0), u(-7.0, 7.0)),
    }
}

pub struct Config {
    pub model: MechanismModel,
    pub pose: Pose,
    pub mode: WorkingMode,
    pub joints: JointVector,
}

/// Random reachable configuration on a random working mode.
pub fn random_config(model: &MechanismModel, rng: &mut ChaCha8Rng) -> Config {
    let modes = model.enumerate_working_modes();
    loop {
        let pose = random_pose(model, rng);
        let mode = modes[rng.random_range(0..modes.len())].clone();
        if let Ok(joints) = model.inverse_kinematics(&pose, &mode) {
            return Config {
                model: model.clone(),
                pose,
                mode,
                joints,
            };
        }
    }
}

/// Random configuration whose oracle conditioning (J and both closure
/// derivatives, all from finite differences) is below `max_kappa`.
pub fn regular_config(model: &MechanismModel, rng: &mut ChaCha8Rng, max_kappa: f64) -> Config {
    loop {
        let c = random_config(model, rng);
        if c.model.kind().is_telescopic() && c.joints.iter().any(|&r| r < 0.05 * model.scale()) {
            continue;
        }
        // The 3-RPR Jacobian mixes units, so its conditioning alone does not
        // measure the distance to a singularity; bound the closure
        // derivatives too.
        let (dx, dq) = residual_derivatives(&c.model, &c.pose, &c.joints);
        let cond = |m: &DMatrix<f64>| {
            let s = jacobi_singular_values(m);
            s[0] / s[s.len() - 1]
        };
        if !(cond(&dx) < max_kappa && cond(&dq) < max_kappa) {
            continue;
        }
        if let Some(j) = oracle_jacobian(&c.model, &c.pose, &c.joints) {
            if cond(&j) < max_kappa {
                return c;
            }
        }
    }
}

/// `(df/dpose, df/djoints)` of the closure residual by central differences.
pub fn residual_derivatives(
    model: &MechanismModel,
    pose: &Pose,
    joints: &JointVector,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let h = 1e-5 * model.scale();
    let n = model.pose_dim();
    let m = model.leg_count();
    let f = |p: &[f64], q: &[f64]| {
        model
            .constraint_residual(&Pose::new(p.to_vec()), &JointVector::new(q.to_vec()))
            .unwrap()
    };
    let mut dx = DMatrix::zeros(m, n);
    for k in 0..n {
        let (mut p1, mut p2) = (pose.to_vec(), pose.to_vec());
        p1[k] += h;
        p2[k] -= h;
        let (a, b) = (f(&p1, joints), f(&p2, joints));
        for i in 0..m {
            dx[(i, k)] = (a[i] - b[i]) / (2.0 * h);
        }
    }
    let mut dq = DMatrix::zeros(m, m);
    for k in 0..m {
        let (mut q1, mut q2) = (joints.to_vec(), joints.to_vec());
        q1[k] += h;
        q2[k] -= h;
        let (a, b) = (f(pose, &q1), f(pose, &q2));
        for i in 0..m {
            dq[(i, k)] = (a[i] - b[i]) / (2.0 * h);
        }
    }
    (dx, dq)
}

/// `J = -(df/dpose)^-1 df/djoints`, or `None` when df/dpose is singular.
pub fn oracle_jacobian(model: &MechanismModel, pose: &Pose, joints: &JointVector) -> Option<DMatrix<f64>> {
    let (dx, dq) = residual_derivatives(model, pose, joints);
    dx.lu().solve(&(-dq))
}

/// Singular values (descending) by one-sided Jacobi rotations.
pub fn jacobi_singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    let mut u = m.clone();
    let n = u.ncols();
    for _sweep in 0..60 {
        let mut off = 0.0_f64;
        for p in 0..n {
            for q in p + 1..n {
                let alpha: f64 = u.column(p).iter().map(|v| v * v).sum();
                let beta: f64 = u.column(q).iter().map(|v| v * v).sum();
                let gamma: f64 = u.column(p).iter().zip(u.column(q).iter()).map(|(a, b)| a * b).sum();
                if gamma == 0.0 {
                    continue;
                }
                off = off.max(gamma.abs() / (alpha * beta).sqrt());
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..u.nrows() {
                    let (a, b) = (u[(i, p)], u[(i, q)]);
                    u[(i, p)] = c * a - s * b;
                    u[(i, q)] = s * a + c * b;
                }
            }
        }
        if off < 1e-15 {
            break;
        }
    }
    let mut s: Vec<f64> = (0..n).map(|k| u.column(k).norm()).collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Smallest singular value relative to the largest entry of the pair.
fn relative_min_sv(m: &DMatrix<f64>, scale: f64) -> f64 {
    let s = jacobi_singular_values(m);
    s[s.len() - 1] / scale
}

/// Brute-force classification: rank of the finite-difference closure
/// derivatives. Returns `None` inside the ambiguous band where the smallest
/// relative singular value lies between `1e-7` and `1e-4`.
pub fn oracle_class(model: &MechanismModel, pose: &Pose, joints: &JointVector) -> Option<SingularityClass> {
    let (dx, dq) = residual_derivatives(model, pose, joints);
    let scale = 1.0_f64.max(dx.amax()).max(dq.amax());
    let decide = |v: f64| {
        if v < 1e-7 {
            Some(true)
        } else if v > 1e-4 {
            Some(false)
        } else {
            None
        }
    };
    let serial = decide(relative_min_sv(&dq, scale))?;
    let parallel = decide(relative_min_sv(&dx, scale))?;
    Some(SingularityClass::from_flags(serial, parallel))
}

/// A configuration on the parallel-singularity locus: scans a random
/// segment for a sign change of the oracle `det(df/dpose)` and bisects it.
pub fn parallel_singular_config(model: &MechanismModel, rng: &mut ChaCha8Rng) -> Config {
    let det = |c: &Config| residual_derivatives(&c.model, &c.pose, &c.joints).0.determinant();
    loop {
        let start = random_config(model, rng);
        let dir: Vec<f64> = (0..model.pose_dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let at = |t: f64| -> Option<Config> {
            let p: Vec<f64> = start.pose.iter().zip(&dir).map(|(p, d)| p + t * d).collect();
            let pose = Pose::new(p);
            let joints = model.inverse_kinematics(&pose, &start.mode).ok()?;
            if model.kind().is_telescopic() && joints.iter().any(|&r| r < 0.05 * model.scale()) {
                return None;
            }
            Some(Config {
                model: model.clone(),
                pose,
                mode: start.mode.clone(),
                joints,
            })
        };
        let span = model.scale();
        let steps = 200;
        let mut prev: Option<(f64, f64)> = None;
        for k in 0..=steps {
            let t = span * (k as f64 / steps as f64 - 0.5);
            let Some(c) = at(t) else {
                prev = None;
                continue;
            };
            let d = det(&c);
            if let Some((t0, d0)) = prev {
                if d0 * d < 0.0 {
                    let (mut lo, mut hi, mut dlo) = (t0, t, d0);
                    for _ in 0..80 {
                        let mid = 0.5 * (lo + hi);
                        let Some(cm) = at(mid) else { break };
                        let dm = det(&cm);
                        if dm * dlo <= 0.0 {
                            hi = mid;
                        } else {
                            lo = mid;
                            dlo = dm;
                        }
                    }
                    if let Some(c) = at(0.5 * (lo + hi)) {
                        return c;
                    }
                }
            }
            prev = Some((t, d));
        }
    }
}

/// Largest square (2-D) or cube (3-D) of grid cells that are all `ok`,
/// by the classic dynamic program; returns `(edge_in_cells, far_corner)`.
pub fn largest_block(ok: &[bool], n: usize, dim: usize) -> (usize, Vec<usize>) {
    let idx = |v: &[usize]| v.iter().fold(0, |acc, &i| acc * n + i);
    let mut d = vec![0usize; ok.len()];
    let mut best = (0, vec![0; dim]);
    for flat in 0..ok.len() {
        if !ok[flat] {
            continue;
        }
        let mut v = vec![0; dim];
        let mut r = flat;
        for k in (0..dim).rev() {
            v[k] = r % n;
            r /= n;
        }
        let val = if v.contains(&0) {
            1
        } else {
            let mut m = usize::MAX;
            for mask in 1..(1usize << dim) {
                let w: Vec<usize> = (0..dim).map(|k| v[k] - (mask >> k & 1)).collect();
                m = m.min(d[idx(&w)]);
            }
            m + 1
        };
        d[flat] = val;
        if val > best.0 {
            best = (val, v);
        }
    }
    best
}
