//! Dimensional synthesis of the Orthoglide.
//!
//! The Jacobian is invariant under a uniform scaling of all lengths, so the
//! admissible cube of a leg of length `L` is the unit-leg cube scaled by `L`.
//! Synthesis therefore runs a single cube search at `L = 1` and sizes the
//! machine as `L = cube_edge / e*(1)`. Joint ranges are the extrema of the
//! inverse kinematics over the verification lattice of the final cube.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinetostatics;
use crate::mechanism::{JointRange, MechanismModel, WorkingMode};
use crate::workspace::{
    cube_lattice, largest_inscribed_cube, AxisRange, CubeSearch, FactorBounds, Region, CUBE_LATTICE,
};

/// Branch holding the isotropic configuration `rho = (L, L, L)`.
pub fn synthesis_working_mode() -> WorkingMode {
    WorkingMode::new(vec![-1, -1, -1])
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisSpec {
    pub cube_edge: f64,
    pub bounds: FactorBounds,
    /// Points per axis of the verification lattice.
    pub lattice: usize,
}

impl SynthesisSpec {
    pub fn new(cube_edge: f64, bounds: FactorBounds) -> Result<Self> {
        Self::with_lattice(cube_edge, bounds, CUBE_LATTICE)
    }

    pub fn with_lattice(cube_edge: f64, bounds: FactorBounds, lattice: usize) -> Result<Self> {
        if !(cube_edge.is_finite() && cube_edge > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "cube edge must be positive, got {cube_edge}"
            )));
        }
        if lattice < 2 {
            return Err(Error::InvalidArgument(
                "verification lattice needs at least 2 points per axis".into(),
            ));
        }
        Ok(SynthesisSpec {
            cube_edge,
            bounds,
            lattice,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisResult {
    pub leg_length: f64,
    pub cube_edge: f64,
    pub cube_center: Vec<f64>,
    pub joint_ranges: Vec<JointRange>,
    /// `[min sigma, max sigma]` over the verification lattice.
    pub achieved_factor_range: [f64; 2],
    pub lattice_density: usize,
    pub bounds: FactorBounds,
}

impl SynthesisResult {
    /// The synthesized machine, with the computed joint ranges as limits.
    pub fn model(&self) -> Result<MechanismModel> {
        MechanismModel::orthoglide(self.leg_length)?.with_joint_limits(self.joint_ranges.clone())
    }

    /// The prescribed cube sampled with `density` points per axis.
    pub fn cube_region(&self, density: usize) -> Result<Region> {
        Region::new(
            self.cube_center
                .iter()
                .map(|&c| AxisRange::new(c - self.cube_edge / 2.0, c + self.cube_edge / 2.0, density))
                .collect::<Result<Vec<_>>>()?,
        )
    }
}

pub fn synthesize_orthoglide(spec: &SynthesisSpec) -> Result<SynthesisResult> {
    if !spec.bounds.contains_one() {
        return Err(Error::InfeasibleSpec(format!(
            "bounds [{}, {}] exclude the isotropic factor 1",
            spec.bounds.lo, spec.bounds.hi
        )));
    }
    let mode = synthesis_working_mode();
    let unit = MechanismModel::orthoglide(1.0)?;
    let mut search = CubeSearch::for_model(&unit);
    search.lattice = spec.lattice;
    let cube = largest_inscribed_cube(&unit, &mode, &spec.bounds, &search)?.ok_or_else(|| {
        Error::InfeasibleSpec("no admissible cube larger than the edge tolerance".into())
    })?;

    let leg_length = spec.cube_edge / cube.edge;
    let cube_center: Vec<f64> = cube.center.iter().map(|c| c * leg_length).collect();
    let model = MechanismModel::orthoglide(leg_length)?;
    let lattice = cube_lattice(&cube_center, spec.cube_edge, spec.lattice, None);

    let mut ranges = vec![JointRange::new(f64::INFINITY, f64::NEG_INFINITY); 3];
    let (mut sigma_lo, mut sigma_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for pose in &lattice {
        let rho = model.inverse_kinematics(pose, &mode)?;
        for (r, &v) in ranges.iter_mut().zip(rho.iter()) {
            r.min = r.min.min(v);
            r.max = r.max.max(v);
        }
        let report = kinetostatics::cell_metrics(&model, pose, &rho);
        sigma_lo = sigma_lo.min(report.sigma_min);
        sigma_hi = sigma_hi.max(report.sigma_max);
    }

    Ok(SynthesisResult {
        leg_length,
        cube_edge: spec.cube_edge,
        cube_center,
        joint_ranges: ranges,
        achieved_factor_range: [sigma_lo, sigma_hi],
        lattice_density: spec.lattice,
        bounds: spec.bounds,
    })
}

/// Componentwise extrema of the inverse kinematics over every sample of
/// `region`; fails on the first unreachable sample.
pub fn joint_ranges_for_region(
    model: &MechanismModel,
    region: &Region,
    working_mode: &WorkingMode,
) -> Result<Vec<JointRange>> {
    if region.dim() != model.pose_dim() {
        return Err(Error::InvalidArgument(format!(
            "{} region needs {} axes, got {}",
            model.kind(),
            model.pose_dim(),
            region.dim()
        )));
    }
    let mut ranges = vec![JointRange::new(f64::INFINITY, f64::NEG_INFINITY); model.leg_count()];
    for p in region.points() {
        let rho = model.inverse_kinematics(&crate::mechanism::Pose::new(p), working_mode)?;
        for (r, &v) in ranges.iter_mut().zip(rho.iter()) {
            r.min = r.min.min(v);
            r.max = r.max.max(v);
        }
    }
    Ok(ranges)
}
