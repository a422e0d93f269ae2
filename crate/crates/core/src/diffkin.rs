//! Velocity-level kinematics.
//!
//! Differentiating the closure equations `f(pose, rho) = 0` gives
//! `A * pose_rate = B * joint_rate`, where `A` (the *parallel* matrix) holds
//! half the pose-gradient of each residual and `B` (the *serial* matrix) holds
//! minus half its joint-derivative. `B` is diagonal for every model here
//! because each residual involves only its own actuator. The Jacobian
//! `J = A^-1 B` maps joint rates to tool velocities; rank loss of `B` is a
//! serial singularity and rank loss of `A` a parallel one.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::kinetostatics::{classify_configuration, SingularityClass, DEFAULT_SINGULARITY_TOL};
use crate::linalg;
use crate::mechanism::{
    normalize_angle, Geometry, JointVector, MechanismKind, MechanismModel, Pose, WorkingMode,
};

/// Closure residuals above `CLOSURE_RTOL * scale^2` reject a configuration.
pub const CLOSURE_RTOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct KinematicMatrices {
    /// Parallel matrix `A` (n×n).
    pub parallel: DMatrix<f64>,
    /// Serial matrix `B` (n×n, diagonal).
    pub serial: DMatrix<f64>,
    /// `J = A^-1 B`; `None` when `A` is singular.
    pub jacobian: Option<DMatrix<f64>>,
}

impl KinematicMatrices {
    pub fn is_parallel_singular(&self) -> bool {
        self.jacobian.is_none()
    }
}

/// `(A, B)` without checking closure.
pub(crate) fn raw_matrices(
    model: &MechanismModel,
    pose: &[f64],
    rho: &[f64],
) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = model.leg_count();
    let legs = model.leg_vectors(pose, rho);
    let mut a = DMatrix::zeros(n, n);
    let mut b = DMatrix::zeros(n, n);
    for (i, d) in legs.iter().enumerate() {
        match model.geometry() {
            Geometry::Bipod(_) => {
                a[(i, 0)] = d[0];
                a[(i, 1)] = d[1];
                b[(i, i)] = rho[i];
            }
            Geometry::Biglide(_) => {
                a[(i, 0)] = d[0];
                a[(i, 1)] = d[1];
                b[(i, i)] = d[0];
            }
            Geometry::Orthoglide(_) => {
                for k in 0..3 {
                    a[(i, k)] = d[k];
                }
                b[(i, i)] = d[i];
            }
            Geometry::PlanarThreeRpr(g) => {
                let rb = rotated(g.platform_points[i], pose[2]);
                a[(i, 0)] = d[0];
                a[(i, 1)] = d[1];
                a[(i, 2)] = -d[0] * rb[1] + d[1] * rb[0];
                b[(i, i)] = rho[i];
            }
        }
    }
    (a, b)
}

pub(crate) fn rotated(p: [f64; 2], phi: f64) -> [f64; 2] {
    let (s, c) = phi.sin_cos();
    [c * p[0] - s * p[1], s * p[0] + c * p[1]]
}

pub(crate) fn check_closure(model: &MechanismModel, pose: &Pose, joints: &JointVector) -> Result<()> {
    let scale = model.scale();
    let residual = model
        .constraint_residual(pose, joints)?
        .iter()
        .fold(0.0_f64, |m, v| m.max(v.abs()));
    if residual.is_nan() || residual > CLOSURE_RTOL * scale * scale {
        return Err(Error::InvalidConfiguration { residual });
    }
    Ok(())
}

/// `A`, `B` and `J` at a closed configuration.
pub fn kinematic_matrices(
    model: &MechanismModel,
    pose: &Pose,
    joints: &JointVector,
) -> Result<KinematicMatrices> {
    check_closure(model, pose, joints)?;
    Ok(matrices_unchecked(model, pose, joints))
}

pub(crate) fn matrices_unchecked(
    model: &MechanismModel,
    pose: &[f64],
    joints: &[f64],
) -> KinematicMatrices {
    let (a, b) = raw_matrices(model, pose, joints);
    let jacobian = linalg::invert_small(&a).map(|inv| inv * &b);
    KinematicMatrices {
        parallel: a,
        serial: b,
        jacobian,
    }
}

/// Central finite-difference estimate of `J`, obtained by perturbing each
/// joint and re-solving the forward kinematics on the current branch.
/// Differences at `step` and `step / 2` are combined by Richardson
/// extrapolation, which keeps the estimate accurate close to folds of the
/// forward kinematics.
///
/// Independent of the analytic `A^-1 B` route; used to validate it.
pub fn numeric_jacobian(
    model: &MechanismModel,
    pose: &Pose,
    joints: &JointVector,
    working_mode: &WorkingMode,
    step: f64,
) -> Result<DMatrix<f64>> {
    let scale = model.scale();
    if !(step.is_finite() && step > 0.0 && step <= scale / 1000.0) {
        return Err(Error::InvalidArgument(format!(
            "finite-difference step must lie in (0, {}], got {step}",
            scale / 1000.0
        )));
    }
    model.check_working_mode(working_mode)?;
    let class = classify_configuration(model, pose, joints, DEFAULT_SINGULARITY_TOL)?;
    if class != SingularityClass::Regular {
        return Err(Error::OracleInvalid(format!("configuration is {class:?}")));
    }
    if &model.working_mode_of(pose, joints)? != working_mode {
        return Err(Error::OracleInvalid(
            "configuration does not lie on the requested working mode".into(),
        ));
    }
    let branch = match model.kind() {
        MechanismKind::PlanarThreeRpr => None,
        _ => Some(model.assembly_mode_of(pose, joints)?),
    };

    let n = model.leg_count();
    let solve = |rho: JointVector| -> Result<Pose> {
        let moved = match branch {
            None => model
                .forward_kinematics(&rho, crate::mechanism::AssemblyMode::FIRST, Some(pose))
                .map_err(|e| Error::OracleInvalid(format!("perturbed assembly failed: {e}")))?,
            Some(mode) => {
                let sols = model.enumerate_assembly_modes(&rho)?;
                if sols.len() != 2 {
                    return Err(Error::OracleInvalid(
                        "assembly branches merge under perturbation".into(),
                    ));
                }
                if model.assembly_mode_of(&sols[mode.index() - 1], &rho)? != mode
                    || nearest(&sols, pose) != mode.index() - 1
                {
                    return Err(Error::OracleInvalid("assembly branch changed".into()));
                }
                sols[mode.index() - 1].clone()
            }
        };
        if &model.working_mode_of(&moved, &rho)? != working_mode {
            return Err(Error::OracleInvalid("working mode changed".into()));
        }
        Ok(moved)
    };

    let central = |h: f64| -> Result<DMatrix<f64>> {
        let mut jac = DMatrix::zeros(n, n);
        for j in 0..n {
            let mut plus = joints.as_slice().to_vec();
            let mut minus = plus.clone();
            plus[j] += h;
            minus[j] -= h;
            let p_plus = solve(JointVector::new(plus))?;
            let p_minus = solve(JointVector::new(minus))?;
            for i in 0..n {
                let mut delta = p_plus[i] - p_minus[i];
                if model.kind() == MechanismKind::PlanarThreeRpr && i == 2 {
                    delta = normalize_angle(delta);
                }
                jac[(i, j)] = delta / (2.0 * h);
            }
        }
        Ok(jac)
    };
    let coarse = central(step)?;
    let fine = central(0.5 * step)?;
    Ok((fine * 4.0 - coarse) / 3.0)
}

fn nearest(sols: &[Pose], pose: &Pose) -> usize {
    let dist = |q: &Pose| -> f64 { q.iter().zip(pose.iter()).map(|(a, b)| (a - b).powi(2)).sum() };
    (0..sols.len())
        .min_by(|&a, &b| dist(&sols[a]).total_cmp(&dist(&sols[b])))
        .unwrap_or(0)
}
