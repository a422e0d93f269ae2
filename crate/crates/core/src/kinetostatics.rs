//! Kinetostatic performance measures built on the Jacobian.
//!
//! The velocity amplification factors are the singular values `sigma_i` of
//! `J`; since `J^T` maps tool forces to actuator efforts, the force
//! amplification factors along the same principal axes are `1 / sigma_i`.
//! The manipulability ellipsoid is the eigen-structure of `(J J^T)^-1`, whose
//! semi-axis lengths are exactly those force factors. The conditioning index
//! `sigma_max / sigma_min` runs from 1 (isotropy) to infinity (singularity).

use nalgebra::DMatrix;

use crate::diffkin::{self, KinematicMatrices};
use crate::error::{Error, Result};
use crate::linalg::{self, RANK_RTOL};
use crate::mechanism::{Geometry, JointVector, MechanismKind, MechanismModel, Pose};

pub const DEFAULT_SINGULARITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SingularityClass {
    Regular,
    SerialSingular,
    ParallelSingular,
    Both,
}

impl SingularityClass {
    pub fn name(self) -> &'static str {
        match self {
            SingularityClass::Regular => "Regular",
            SingularityClass::SerialSingular => "SerialSingular",
            SingularityClass::ParallelSingular => "ParallelSingular",
            SingularityClass::Both => "Both",
        }
    }

    pub fn from_flags(serial: bool, parallel: bool) -> Self {
        match (serial, parallel) {
            (false, false) => SingularityClass::Regular,
            (true, false) => SingularityClass::SerialSingular,
            (false, true) => SingularityClass::ParallelSingular,
            (true, true) => SingularityClass::Both,
        }
    }
}

impl std::str::FromStr for SingularityClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "Regular" => SingularityClass::Regular,
            "SerialSingular" => SingularityClass::SerialSingular,
            "ParallelSingular" => SingularityClass::ParallelSingular,
            "Both" => SingularityClass::Both,
            other => return Err(Error::InvalidArgument(format!("unknown class {other:?}"))),
        })
    }
}

/// Manipulability ellipsoid. `axes[i]` is a unit vector with semi-axis
/// length `semi_lengths[i]`; lengths ascend, so `semi_lengths[i] * sigma[i] = 1`
/// when `sigma` is sorted descending.
#[derive(Debug, Clone, PartialEq)]
pub struct Ellipsoid {
    pub axes: Vec<Vec<f64>>,
    pub semi_lengths: Vec<f64>,
}

/// Descending singular values of `J`.
pub fn velocity_amplification_factors(j: &DMatrix<f64>) -> Vec<f64> {
    linalg::singular_values_desc(j)
}

fn is_rank_deficient(sigma: &[f64]) -> bool {
    let max = sigma.first().copied().unwrap_or(0.0);
    let min = sigma.last().copied().unwrap_or(0.0);
    !(max > 0.0 && max.is_finite()) || !(min >= RANK_RTOL * max)
}

/// Ascending force amplification factors `1 / sigma_i`.
pub fn force_amplification_factors(j: &DMatrix<f64>) -> Result<Vec<f64>> {
    let svd = j.clone().svd(true, false);
    let sv = &svd.singular_values;
    let sigma: Vec<f64> = linalg::singular_values_desc(j);
    if is_rank_deficient(&sigma) {
        let k = sv.imin();
        let u = svd.u.expect("left singular vectors requested");
        return Err(Error::InfiniteForceFactor {
            direction: u.column(k).iter().copied().collect(),
        });
    }
    Ok(sigma.iter().map(|s| 1.0 / s).collect())
}

/// `sigma_max / sigma_min`; `f64::INFINITY` when `sigma_min < 1e-12 sigma_max`.
pub fn conditioning_index(j: &DMatrix<f64>) -> f64 {
    kappa_of(&velocity_amplification_factors(j))
}

pub(crate) fn kappa_of(sigma: &[f64]) -> f64 {
    if is_rank_deficient(sigma) {
        f64::INFINITY
    } else {
        sigma[0] / sigma[sigma.len() - 1]
    }
}

/// Principal axes and semi-lengths of the ellipsoid `f^T (J J^T)^-1 f = 1`.
///
/// `(J J^T)^-1 = U S^-2 U^T` for the SVD `J = U S V^T`, so the axes are the
/// left singular vectors and the semi-lengths `1 / sigma`. Working from the
/// SVD avoids squaring the conditioning of `J`.
pub fn manipulability_ellipsoid(j: &DMatrix<f64>) -> Result<Ellipsoid> {
    if is_rank_deficient(&velocity_amplification_factors(j)) {
        return Err(Error::DegenerateEllipsoid);
    }
    let svd = j.clone().svd(true, false);
    let u = svd.u.ok_or(Error::DegenerateEllipsoid)?;
    let sv = svd.singular_values;
    let mut order: Vec<usize> = (0..sv.len()).collect();
    // ascending semi-lengths = descending singular values
    order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]));
    Ok(Ellipsoid {
        axes: order
            .iter()
            .map(|&k| u.column(k).iter().copied().collect())
            .collect(),
        semi_lengths: order.iter().map(|&k| 1.0 / sv[k]).collect(),
    })
}

/// Parallel matrix used for the parallel-singularity test.
///
/// A telescopic leg collapsed to zero length pins its platform point to the
/// base node: its single (vanishing) closure row is replaced by the two rows
/// of the point constraint, so that the pinned leg is not mistaken for a loss
/// of tool control.
fn parallel_test_matrix(
    model: &MechanismModel,
    pose: &[f64],
    joints: &[f64],
    a: &DMatrix<f64>,
    threshold: f64,
) -> DMatrix<f64> {
    if !model.kind().is_telescopic() || joints.iter().all(|&r| r >= threshold) {
        return a.clone();
    }
    let n = model.pose_dim();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, &rho) in joints.iter().enumerate() {
        if rho >= threshold {
            rows.push(a.row(i).iter().copied().collect());
            continue;
        }
        match model.geometry() {
            Geometry::PlanarThreeRpr(g) => {
                let rb = diffkin::rotated(g.platform_points[i], pose[2]);
                rows.push(vec![1.0, 0.0, -rb[1]]);
                rows.push(vec![0.0, 1.0, rb[0]]);
            }
            _ => {
                rows.push(vec![1.0, 0.0]);
                rows.push(vec![0.0, 1.0]);
            }
        }
    }
    DMatrix::from_fn(rows.len(), n, |r, c| rows[r][c])
}

fn classify_unchecked(
    model: &MechanismModel,
    pose: &[f64],
    joints: &[f64],
    km: &KinematicMatrices,
    tol: f64,
) -> SingularityClass {
    let scale = 1.0_f64
        .max(linalg::max_abs(&km.parallel))
        .max(linalg::max_abs(&km.serial));
    let threshold = tol * scale;
    let n = model.pose_dim();
    let min_sv = |m: &DMatrix<f64>| {
        let s = linalg::singular_values_desc(m);
        if s.len() < n {
            0.0
        } else {
            s[n - 1]
        }
    };
    let serial = min_sv(&km.serial) < threshold;
    let parallel = min_sv(&parallel_test_matrix(model, pose, joints, &km.parallel, threshold))
        < threshold;
    SingularityClass::from_flags(serial, parallel)
}

/// Serial / parallel singularity test at tolerance `tol * max(1, |A|, |B|)`.
pub fn classify_configuration(
    model: &MechanismModel,
    pose: &Pose,
    joints: &JointVector,
    tol: f64,
) -> Result<SingularityClass> {
    if !(tol.is_finite() && tol >= 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be >= 0, got {tol}")));
    }
    let km = diffkin::kinematic_matrices(model, pose, joints)?;
    Ok(classify_unchecked(model, pose, joints, &km, tol))
}

/// Scales the rotational row of a 3-RPR Jacobian by a characteristic length
/// so that every entry is dimensionless.
pub fn homogenize(j: &DMatrix<f64>, characteristic_length: f64) -> DMatrix<f64> {
    let mut h = j.clone();
    let last = h.nrows() - 1;
    h.row_mut(last).scale_mut(characteristic_length);
    h
}

/// Per-block conditioning for the 3-RPR, whose raw Jacobian mixes mm/mm
/// (translation rows) with rad/mm (rotation row).
#[derive(Debug, Clone, PartialEq)]
pub struct BlockConditioning {
    /// Singular values of the 2×3 translational block, descending.
    pub translational_sigma: Vec<f64>,
    pub translational_kappa: f64,
    /// Euclidean norm of the rotation row (rad per mm of joint motion).
    pub rotational_gain: f64,
}

pub fn block_conditioning(j: &DMatrix<f64>) -> BlockConditioning {
    let t = j.rows(0, 2).clone_owned();
    let translational_sigma = linalg::singular_values_desc(&t);
    BlockConditioning {
        translational_kappa: kappa_of(&translational_sigma),
        translational_sigma,
        rotational_gain: j.row(2).norm(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KinetostaticReport {
    pub matrices: KinematicMatrices,
    /// Jacobian the metrics were computed on (homogenized when a
    /// characteristic length was supplied).
    pub jacobian: Option<DMatrix<f64>>,
    /// Velocity amplification factors, descending. At a parallel singularity
    /// the leading factors are infinite; when `J` is undefined because both
    /// `A` and `B` are singular, the vector is `[inf, .., inf, 0]`.
    pub sigma: Vec<f64>,
    pub kappa: f64,
    pub ellipsoid: Option<Ellipsoid>,
    pub classification: SingularityClass,
    pub blocks: Option<BlockConditioning>,
}

/// Singular values of `J`, also when `J` itself does not exist: with `B`
/// regular they are the reciprocals of the singular values of `B^-1 A`.
pub(crate) fn sigma_of(km: &KinematicMatrices, jacobian: Option<&DMatrix<f64>>) -> Vec<f64> {
    let n = km.parallel.nrows();
    if let Some(j) = jacobian {
        return velocity_amplification_factors(j);
    }
    match linalg::invert_small(&km.serial) {
        Some(binv) => {
            let mut s: Vec<f64> = linalg::singular_values_desc(&(binv * &km.parallel))
                .iter()
                .map(|v| if *v > 0.0 { 1.0 / v } else { f64::INFINITY })
                .collect();
            s.sort_by(|a, b| b.total_cmp(a));
            s
        }
        None => {
            let mut s = vec![f64::INFINITY; n];
            s[n - 1] = 0.0;
            s
        }
    }
}

pub fn analyze(model: &MechanismModel, pose: &Pose, joints: &JointVector) -> Result<KinetostaticReport> {
    analyze_with_length(model, pose, joints, None)
}

/// Full report at one configuration; `characteristic_length` homogenizes the
/// 3-RPR Jacobian before the metrics are formed (ignored for other models).
pub fn analyze_with_length(
    model: &MechanismModel,
    pose: &Pose,
    joints: &JointVector,
    characteristic_length: Option<f64>,
) -> Result<KinetostaticReport> {
    if let Some(l) = characteristic_length {
        if !(l.is_finite() && l > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "characteristic length must be positive, got {l}"
            )));
        }
    }
    let matrices = diffkin::kinematic_matrices(model, pose, joints)?;
    let classification =
        classify_unchecked(model, pose, joints, &matrices, DEFAULT_SINGULARITY_TOL);
    let is_3rpr = model.kind() == MechanismKind::PlanarThreeRpr;
    let jacobian = match (&matrices.jacobian, characteristic_length) {
        (Some(j), Some(l)) if is_3rpr => Some(homogenize(j, l)),
        (j, _) => j.clone(),
    };
    let sigma = sigma_of(&matrices, jacobian.as_ref());
    let kappa = kappa_of(&sigma);
    let ellipsoid = jacobian.as_ref().and_then(|j| manipulability_ellipsoid(j).ok());
    let blocks = match (&matrices.jacobian, is_3rpr) {
        (Some(j), true) => Some(block_conditioning(j)),
        _ => None,
    };
    Ok(KinetostaticReport {
        matrices,
        jacobian,
        sigma,
        kappa,
        ellipsoid,
        classification,
        blocks,
    })
}

/// Lightweight metrics for workspace cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellMetrics {
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub kappa: f64,
    pub class: SingularityClass,
}

pub(crate) fn cell_metrics(model: &MechanismModel, pose: &[f64], joints: &[f64]) -> CellMetrics {
    let km = diffkin::matrices_unchecked(model, pose, joints);
    let sigma = sigma_of(&km, km.jacobian.as_ref());
    CellMetrics {
        sigma_min: sigma[sigma.len() - 1],
        sigma_max: sigma[0],
        kappa: kappa_of(&sigma),
        class: classify_unchecked(model, pose, joints, &km, DEFAULT_SINGULARITY_TOL),
    }
}
