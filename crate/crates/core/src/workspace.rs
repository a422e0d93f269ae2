//! Workspace maps and admissible-cube search.
//!
//! A [`Region`] is a Cartesian lattice over the pose coordinates (for the
//! 3-RPR the third axis is the orientation `phi`). Sweeping it evaluates
//! reachability, joint limits and the amplification factors at every sample.
//! The dextrous mask keeps the cells whose velocity amplification factors all
//! lie within [`FactorBounds`], and [`largest_inscribed_cube`] finds the
//! biggest axis-aligned cube (square for planar models) made only of such
//! points.

use std::cell::Cell;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diffkin;
use crate::error::{Error, Result};
use crate::kinetostatics::{self, CellMetrics};
use crate::mechanism::{normalize_angle, MechanismKind, MechanismModel, Pose, WorkingMode};

/// Points per axis of the lattice used to verify a candidate cube.
pub const CUBE_LATTICE: usize = 9;

/// Relative edge resolution of the cube search (times the model scale).
pub const EDGE_RTOL: f64 = 1e-3;

/// Number of coarse centres refined by the compass search.
const REFINE_STARTS: usize = 4;

/// Bisection tolerance of the coarse scan, in edge tolerances.
const COARSE_EDGE_FACTOR: f64 = 16.0;

/// Verification lattice density of the coarse scan.
const COARSE_LATTICE: usize = 5;

/// Closed sampling interval on one pose axis.
///
/// Either `min < max` with `count >= 2` samples, or a fixed coordinate
/// `min == max` with `count == 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisRange {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl AxisRange {
    pub fn new(min: f64, max: f64, count: usize) -> Result<Self> {
        let ok = min.is_finite()
            && max.is_finite()
            && ((min < max && count >= 2) || (min == max && count == 1));
        if !ok {
            return Err(Error::InvalidArgument(format!(
                "axis range needs min < max with count >= 2 (or a single fixed value), got {min}:{max}:{count}"
            )));
        }
        Ok(AxisRange { min, max, count })
    }

    pub fn point(value: f64) -> Self {
        AxisRange {
            min: value,
            max: value,
            count: 1,
        }
    }

    pub fn sample(&self, k: usize) -> f64 {
        if self.count == 1 {
            self.min
        } else if k + 1 == self.count {
            self.max
        } else {
            self.min + (self.max - self.min) * k as f64 / (self.count - 1) as f64
        }
    }

    pub fn samples(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.count).map(|k| self.sample(k))
    }

    pub fn spacing(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.max - self.min) / (self.count - 1) as f64
        }
    }
}

/// Cartesian sampling lattice over the pose coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    axes: Vec<AxisRange>,
}

impl Region {
    pub fn new(axes: Vec<AxisRange>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::InvalidArgument("region needs at least one axis".into()));
        }
        for a in &axes {
            AxisRange::new(a.min, a.max, a.count)?;
        }
        Ok(Region { axes })
    }

    pub fn axes(&self) -> &[AxisRange] {
        &self.axes
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn cell_count(&self) -> usize {
        self.axes.iter().map(|a| a.count).product()
    }

    /// Sample coordinates in row-major order (last axis fastest).
    pub fn points(&self) -> Vec<Vec<f64>> {
        let total = self.cell_count();
        (0..total)
            .map(|mut flat| {
                let mut p = vec![0.0; self.axes.len()];
                for (d, a) in self.axes.iter().enumerate().rev() {
                    p[d] = a.sample(flat % a.count);
                    flat /= a.count;
                }
                p
            })
            .collect()
    }
}

/// Dimensionless bounds on every velocity amplification factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FactorBounds {
    pub lo: f64,
    pub hi: f64,
}

impl FactorBounds {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "factor bounds need 0 < lo <= hi, got ({lo}, {hi})"
            )));
        }
        Ok(FactorBounds { lo, hi })
    }

    pub fn contains_one(&self) -> bool {
        self.lo <= 1.0 && 1.0 <= self.hi
    }

    pub fn admits(&self, sigma_min: f64, sigma_max: f64) -> bool {
        sigma_min >= self.lo && sigma_max <= self.hi
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorkspaceCell {
    pub pose: Pose,
    pub reachable: bool,
    pub within_joint_limits: bool,
    /// `None` for unreachable cells.
    pub metrics: Option<CellMetrics>,
}

impl WorkspaceCell {
    pub fn is_dextrous(&self, bounds: &FactorBounds) -> bool {
        self.reachable
            && self.within_joint_limits
            && self
                .metrics
                .is_some_and(|m| bounds.admits(m.sigma_min, m.sigma_max))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorkspaceGrid {
    pub region: Region,
    pub working_mode: WorkingMode,
    pub cells: Vec<WorkspaceCell>,
}

fn make_pose(model: &MechanismModel, mut coords: Vec<f64>) -> Pose {
    if model.kind() == MechanismKind::PlanarThreeRpr {
        coords[2] = normalize_angle(coords[2]);
    }
    Pose::new(coords)
}

/// Evaluates one pose on `mode`. The mode must be valid for the model.
pub fn evaluate_cell(model: &MechanismModel, pose: Pose, mode: &WorkingMode) -> WorkspaceCell {
    match model.inverse_kinematics(&pose, mode) {
        Ok(joints) => {
            let metrics = kinetostatics::cell_metrics(model, &pose, &joints);
            WorkspaceCell {
                within_joint_limits: model.within_joint_limits(&joints),
                reachable: true,
                metrics: Some(metrics),
                pose,
            }
        }
        Err(_) => WorkspaceCell {
            pose,
            reachable: false,
            within_joint_limits: false,
            metrics: None,
        },
    }
}

/// Evaluates every sample of `region`; cells come back in row-major order.
pub fn sweep_grid(
    model: &MechanismModel,
    region: &Region,
    working_mode: &WorkingMode,
) -> Result<WorkspaceGrid> {
    model.check_working_mode(working_mode)?;
    if region.dim() != model.pose_dim() {
        return Err(Error::InvalidArgument(format!(
            "{} region needs {} axes, got {}",
            model.kind(),
            model.pose_dim(),
            region.dim()
        )));
    }
    let cells = region
        .points()
        .into_par_iter()
        .map(|p| evaluate_cell(model, make_pose(model, p), working_mode))
        .collect();
    Ok(WorkspaceGrid {
        region: region.clone(),
        working_mode: working_mode.clone(),
        cells,
    })
}

/// Cell-wise dextrous mask: reachable, within joint limits and every
/// velocity amplification factor inside `bounds`.
pub fn dextrous_region(grid: &WorkspaceGrid, bounds: &FactorBounds) -> Vec<bool> {
    grid.cells.iter().map(|c| c.is_dextrous(bounds)).collect()
}

/// Whether a single pose passes the dextrous predicates.
pub fn pose_is_dextrous(
    model: &MechanismModel,
    pose: &Pose,
    mode: &WorkingMode,
    bounds: &FactorBounds,
) -> bool {
    let Ok(joints) = model.inverse_kinematics(pose, mode) else {
        return false;
    };
    if !model.within_joint_limits(&joints) {
        return false;
    }
    let km = diffkin::matrices_unchecked(model, pose, &joints);
    let sigma = kinetostatics::sigma_of(&km, km.jacobian.as_ref());
    bounds.admits(sigma[sigma.len() - 1], sigma[0])
}

/// Search parameters for [`largest_inscribed_cube`].
#[derive(Debug, Clone, PartialEq)]
pub struct CubeSearch {
    /// Lattice of candidate centres over the translational axes.
    pub center_domain: Vec<AxisRange>,
    /// Bisection resolution on the edge length (mm).
    pub edge_tolerance: f64,
    /// Fixed platform orientation; required for the 3-RPR, ignored otherwise.
    pub orientation: Option<f64>,
    /// Points per axis of the verification lattice.
    pub lattice: usize,
}

impl CubeSearch {
    /// Default search: a 9-point-per-axis centre lattice around the natural
    /// home of each model and an edge tolerance of `1e-3` times its scale.
    pub fn for_model(model: &MechanismModel) -> Self {
        let s = model.scale();
        let ax = |lo: f64, hi: f64| AxisRange {
            min: lo,
            max: hi,
            count: 9,
        };
        let (center_domain, orientation) = match model.geometry() {
            crate::mechanism::Geometry::Orthoglide(_) => (vec![ax(-s / 2.0, s / 2.0); 3], None),
            crate::mechanism::Geometry::Biglide(_) => {
                (vec![ax(-s / 2.0, s / 2.0), ax(0.1 * s, 0.9 * s)], None)
            }
            crate::mechanism::Geometry::Bipod(g) => {
                let m = [
                    0.5 * (g.base_points[0][0] + g.base_points[1][0]),
                    0.5 * (g.base_points[0][1] + g.base_points[1][1]),
                ];
                (vec![ax(m[0] - s, m[0] + s), ax(m[1] - s, m[1] + s)], None)
            }
            crate::mechanism::Geometry::PlanarThreeRpr(g) => {
                let xs = g.base_points.map(|p| p[0]);
                let ys = g.base_points.map(|p| p[1]);
                let lo = |v: [f64; 3]| v.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = |v: [f64; 3]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                (vec![ax(lo(xs), hi(xs)), ax(lo(ys), hi(ys))], Some(0.0))
            }
        };
        CubeSearch {
            center_domain,
            edge_tolerance: EDGE_RTOL * s,
            orientation,
            lattice: CUBE_LATTICE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InscribedCube {
    pub center: Vec<f64>,
    pub edge: f64,
}

/// Poses of the `density^d` verification lattice of a cube (corners included).
pub fn cube_lattice(
    center: &[f64],
    edge: f64,
    density: usize,
    orientation: Option<f64>,
) -> Vec<Pose> {
    let axes: Vec<AxisRange> = center
        .iter()
        .map(|&c| {
            if edge > 0.0 && density >= 2 {
                AxisRange {
                    min: c - edge / 2.0,
                    max: c + edge / 2.0,
                    count: density,
                }
            } else {
                AxisRange::point(c)
            }
        })
        .collect();
    Region { axes }
        .points()
        .into_iter()
        .map(|mut p| {
            if let Some(phi) = orientation {
                p.push(phi);
            }
            Pose::new(p)
        })
        .collect()
}

fn corners(center: &[f64], edge: f64, orientation: Option<f64>) -> Vec<Pose> {
    let d = center.len();
    (0..1usize << d)
        .map(|bits| {
            let mut p: Vec<f64> = (0..d)
                .map(|k| {
                    let s = if bits >> k & 1 == 1 { 0.5 } else { -0.5 };
                    center[k] + s * edge
                })
                .collect();
            if let Some(phi) = orientation {
                p.push(phi);
            }
            Pose::new(p)
        })
        .collect()
}

struct CubeProblem<'a> {
    model: &'a MechanismModel,
    mode: &'a WorkingMode,
    bounds: &'a FactorBounds,
    orientation: Option<f64>,
    lattice: usize,
    edge_max: f64,
    tol: f64,
    /// Lattice index of the most recent violation; neighbouring candidate
    /// cubes tend to fail at the same place, so it is checked first.
    last_violation: Cell<Option<usize>>,
}

impl CubeProblem<'_> {
    fn coarse(&self, tol: f64, lattice: usize) -> Self {
        CubeProblem {
            tol,
            lattice: self.lattice.min(lattice),
            last_violation: Cell::new(None),
            ..*self
        }
    }

    fn admissible(&self, center: &[f64], edge: f64) -> bool {
        let (model, mode, bounds) = (self.model, self.mode, self.bounds);
        let ok = |p: &Pose| pose_is_dextrous(model, p, mode, bounds);
        if edge <= 0.0 {
            let mut p = center.to_vec();
            p.extend(self.orientation);
            return ok(&Pose::new(p));
        }
        if !corners(center, edge, self.orientation).iter().all(ok) {
            return false;
        }
        let lattice = cube_lattice(center, edge, self.lattice, self.orientation);
        if let Some(k) = self.last_violation.get() {
            if !ok(&lattice[k]) {
                return false;
            }
        }
        match lattice.par_iter().position_any(|p| !ok(p)) {
            Some(k) => {
                self.last_violation.set(Some(k));
                false
            }
            None => true,
        }
    }

    /// Largest admissible edge at `center` by bisection on `[known, edge_max]`.
    fn max_edge(&self, center: &[f64], known: f64) -> f64 {
        if self.admissible(center, self.edge_max) {
            return self.edge_max;
        }
        self.bisect(center, known, self.edge_max)
    }

    /// As [`Self::max_edge`], but growing geometrically from `known` first;
    /// cheaper when the answer is expected close to `known`.
    fn grow_edge(&self, center: &[f64], known: f64) -> f64 {
        let mut lo = known;
        let mut step = self.tol;
        loop {
            let trial = (lo + step).min(self.edge_max);
            if !self.admissible(center, trial) {
                return self.bisect(center, lo, trial);
            }
            if trial >= self.edge_max {
                return self.edge_max;
            }
            lo = trial;
            step *= 2.0;
        }
    }

    fn bisect(&self, center: &[f64], mut lo: f64, mut hi: f64) -> f64 {
        while hi - lo > self.tol {
            let mid = 0.5 * (lo + hi);
            if self.admissible(center, mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// Edge at `center` if it beats `best` by at least the tolerance.
    fn improves(&self, center: &[f64], best: Option<f64>) -> Option<f64> {
        let floor = match best {
            None => {
                if !self.admissible(center, 0.0) {
                    return None;
                }
                0.0
            }
            Some(e) => {
                let target = e + self.tol;
                if target > self.edge_max || !self.admissible(center, target) {
                    return None;
                }
                target
            }
        };
        Some(self.grow_edge(center, floor))
    }
}

/// Largest axis-aligned cube (square for planar models) whose verification
/// lattice lies entirely in the dextrous region.
///
/// Centres are scanned over `search.center_domain`, then refined by a
/// compass search whose step halves down to the edge tolerance; for every
/// centre the edge is maximized by exponential search and bisection. Returns `Ok(None)` when no
/// cube of edge at least `edge_tolerance` exists.
pub fn largest_inscribed_cube(
    model: &MechanismModel,
    working_mode: &WorkingMode,
    bounds: &FactorBounds,
    search: &CubeSearch,
) -> Result<Option<InscribedCube>> {
    model.check_working_mode(working_mode)?;
    let d = model.position_dim();
    if search.center_domain.len() != d {
        return Err(Error::InvalidArgument(format!(
            "centre domain needs {d} axes, got {}",
            search.center_domain.len()
        )));
    }
    let orientation = match model.kind() {
        MechanismKind::PlanarThreeRpr => Some(search.orientation.ok_or_else(|| {
            Error::InvalidArgument("3rpr cube search needs a fixed orientation".into())
        })?),
        _ => None,
    };
    if !(search.edge_tolerance.is_finite() && search.edge_tolerance > 0.0) {
        return Err(Error::InvalidArgument("edge tolerance must be positive".into()));
    }
    if search.lattice < 2 {
        return Err(Error::InvalidArgument("verification lattice needs >= 2 points".into()));
    }
    let domain = Region::new(search.center_domain.clone())?;
    let problem = CubeProblem {
        model,
        mode: working_mode,
        bounds,
        orientation,
        lattice: search.lattice,
        edge_max: 4.0 * model.scale(),
        tol: search.edge_tolerance,
        last_violation: Cell::new(None),
    };

    // Starts are only ranked here, so a rough edge on a sparse lattice is
    // enough.
    let coarse_problem = problem.coarse(COARSE_EDGE_FACTOR * problem.tol, COARSE_LATTICE);
    // Coarse scan: edge at every admissible centre, then compass refinement
    // from the best few starts (the dextrous region is not convex, so a
    // single start can stall on a local optimum).
    let coarse: Vec<(Vec<f64>, f64)> = domain
        .points()
        .into_iter()
        .filter(|c| problem.admissible(c, 0.0))
        .map(|c| {
            let e = coarse_problem.max_edge(&c, 0.0);
            (c, e)
        })
        .collect();
    let mut starts = coarse;
    starts.sort_by(|a, b| b.1.total_cmp(&a.1));
    starts.truncate(REFINE_STARTS);
    if starts.is_empty() {
        return Ok(None);
    }

    let step0 = domain
        .axes()
        .iter()
        .map(AxisRange::spacing)
        .filter(|s| *s > 0.0)
        .fold(f64::INFINITY, f64::min)
        / 2.0;
    let mut best: Option<(Vec<f64>, f64)> = None;
    for (mut center, mut edge) in starts {
        let mut step = if step0.is_finite() { step0 } else { search.edge_tolerance };
        while step >= search.edge_tolerance {
            let mut moved = None;
            for k in 0..d {
                for dir in [-1.0, 1.0] {
                    let mut c = center.clone();
                    c[k] += dir * step;
                    let current = moved.as_ref().map_or(edge, |m: &(Vec<f64>, f64)| m.1);
                    if let Some(e) = problem.improves(&c, Some(current)) {
                        moved = Some((c, e));
                    }
                }
            }
            match moved {
                Some((c, e)) => {
                    center = c;
                    edge = e;
                }
                None => step /= 2.0,
            }
        }
        if best.as_ref().is_none_or(|b| edge > b.1) {
            best = Some((center, edge));
        }
    }
    let (center, edge) = best.expect("at least one start");

    if edge < search.edge_tolerance {
        return Ok(None);
    }
    Ok(Some(InscribedCube { center, edge }))
}
