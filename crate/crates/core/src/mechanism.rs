//! Mechanism models and their position-level kinematics.
//!
//! Four planar/spatial parallel mechanisms are supported:
//!
//! * **bipod**: two telescopic struts from fixed base nodes to the tool point;
//! * **biglide**: two fixed-length struts whose base nodes glide on a single
//!   rail (the x-axis), slider `i` at `(rho_i, 0)`;
//! * **3-RPR**: a planar platform `(x, y, phi)` carried by three telescopic
//!   struts with revolute joints at both ends;
//! * **Orthoglide**: three orthogonal prismatic actuators along x, y, z, each
//!   connected to the tool point by a leg of fixed length `L`.
//!
//! Every leg contributes one loop-closure equation
//! `f_i(pose, rho) = |tool-side point - joint-side point|^2 - length^2`,
//! which vanishes exactly on valid configurations. Units are millimetres and
//! radians throughout.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg;

pub type Point2 = [f64; 2];

/// Relative tolerance (in units of `scale^2`) under which a discriminant is
/// treated as exactly zero, i.e. a tangential closure.
pub const TANGENT_RTOL: f64 = 1e-12;

/// Newton tolerance for 3-RPR forward kinematics, relative to `scale^2`.
pub const NEWTON_RTOL: f64 = 1e-10;
pub const NEWTON_MAX_ITERATIONS: usize = 50;
const NEWTON_POLISH_STEPS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MechanismKind {
    #[serde(rename = "bipod")]
    Bipod,
    #[serde(rename = "biglide")]
    Biglide,
    #[serde(rename = "3rpr")]
    PlanarThreeRpr,
    #[serde(rename = "orthoglide")]
    Orthoglide,
}

impl MechanismKind {
    pub fn leg_count(self) -> usize {
        match self {
            MechanismKind::Bipod | MechanismKind::Biglide => 2,
            MechanismKind::PlanarThreeRpr | MechanismKind::Orthoglide => 3,
        }
    }

    /// Legs with an actuated length (rho >= 0, unique IK branch).
    pub fn is_telescopic(self) -> bool {
        matches!(self, MechanismKind::Bipod | MechanismKind::PlanarThreeRpr)
    }

    pub fn name(self) -> &'static str {
        match self {
            MechanismKind::Bipod => "bipod",
            MechanismKind::Biglide => "biglide",
            MechanismKind::PlanarThreeRpr => "3rpr",
            MechanismKind::Orthoglide => "orthoglide",
        }
    }
}

impl fmt::Display for MechanismKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BipodGeometry {
    pub base_points: [Point2; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BiglideGeometry {
    pub strut_length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThreeRprGeometry {
    pub base_points: [Point2; 3],
    /// Strut attachment points expressed in the platform frame.
    pub platform_points: [Point2; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrthoglideGeometry {
    pub leg_length: f64,
}

/// Kind-specific geometry. Serialized as `{"kind": ..., "geometry": {...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "geometry")]
pub enum Geometry {
    #[serde(rename = "bipod")]
    Bipod(BipodGeometry),
    #[serde(rename = "biglide")]
    Biglide(BiglideGeometry),
    #[serde(rename = "3rpr")]
    PlanarThreeRpr(ThreeRprGeometry),
    #[serde(rename = "orthoglide")]
    Orthoglide(OrthoglideGeometry),
}

impl Geometry {
    pub fn kind(&self) -> MechanismKind {
        match self {
            Geometry::Bipod(_) => MechanismKind::Bipod,
            Geometry::Biglide(_) => MechanismKind::Biglide,
            Geometry::PlanarThreeRpr(_) => MechanismKind::PlanarThreeRpr,
            Geometry::Orthoglide(_) => MechanismKind::Orthoglide,
        }
    }
}

/// Closed actuator interval `[min, max]` in millimetres.
///
/// Serialized as a two-element array; `null` stands for an unbounded side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointRange {
    pub min: f64,
    pub max: f64,
}

impl JointRange {
    pub const UNBOUNDED: JointRange = JointRange {
        min: f64::NEG_INFINITY,
        max: f64::INFINITY,
    };

    pub fn new(min: f64, max: f64) -> Self {
        JointRange { min, max }
    }

    pub fn contains(&self, rho: f64) -> bool {
        rho >= self.min && rho <= self.max
    }
}

impl Serialize for JointRange {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let side = |v: f64| if v.is_finite() { Some(v) } else { None };
        [side(self.min), side(self.max)].serialize(s)
    }
}

impl<'de> Deserialize<'de> for JointRange {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let [min, max] = <[Option<f64>; 2]>::deserialize(d)?;
        Ok(JointRange {
            min: min.unwrap_or(f64::NEG_INFINITY),
            max: max.unwrap_or(f64::INFINITY),
        })
    }
}

/// On-disk shape of a mechanism description.
#[derive(Serialize, Deserialize)]
struct MechanismFile {
    #[serde(flatten)]
    geometry: Geometry,
    joint_limits: Vec<JointRange>,
}

/// A validated mechanism: geometry plus per-actuator joint limits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MechanismFile", into = "MechanismFile")]
pub struct MechanismModel {
    geometry: Geometry,
    joint_limits: Vec<JointRange>,
}

impl TryFrom<MechanismFile> for MechanismModel {
    type Error = Error;

    fn try_from(file: MechanismFile) -> Result<Self> {
        MechanismModel::new(file.geometry, file.joint_limits)
    }
}

impl From<MechanismModel> for MechanismFile {
    fn from(m: MechanismModel) -> Self {
        MechanismFile {
            geometry: m.geometry,
            joint_limits: m.joint_limits,
        }
    }
}

fn planar_distance(a: Point2, b: Point2) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

impl MechanismModel {
    pub fn new(geometry: Geometry, joint_limits: Vec<JointRange>) -> Result<Self> {
        let n = geometry.kind().leg_count();
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(invalid(format!("geometry.{name} must be a positive length, got {v}")))
            }
        };
        match &geometry {
            Geometry::Bipod(g) => {
                check_finite_points("geometry.base_points", &g.base_points)?;
                if planar_distance(g.base_points[0], g.base_points[1]) == 0.0 {
                    return Err(invalid("geometry.base_points must be distinct"));
                }
            }
            Geometry::Biglide(g) => positive("strut_length", g.strut_length)?,
            Geometry::Orthoglide(g) => positive("leg_length", g.leg_length)?,
            Geometry::PlanarThreeRpr(g) => {
                check_finite_points("geometry.base_points", &g.base_points)?;
                check_finite_points("geometry.platform_points", &g.platform_points)?;
                let [a, b, c] = g.base_points;
                let cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
                let span = planar_distance(a, b).max(planar_distance(a, c)).max(planar_distance(b, c));
                if cross.abs() <= 1e-12 * span * span {
                    return Err(invalid("geometry.base_points must not be collinear"));
                }
                let [p, q, r] = g.platform_points;
                if p == q && q == r {
                    return Err(invalid("geometry.platform_points must not all coincide"));
                }
            }
        }
        if joint_limits.len() != n {
            return Err(invalid(format!(
                "joint_limits must have {n} entries, got {}",
                joint_limits.len()
            )));
        }
        for (i, r) in joint_limits.iter().enumerate() {
            if r.min.is_nan() || r.max.is_nan() || r.min >= r.max {
                return Err(invalid(format!("joint_limits[{i}]: min must be < max")));
            }
        }
        Ok(MechanismModel {
            geometry,
            joint_limits,
        })
    }

    fn unlimited(geometry: Geometry) -> Result<Self> {
        let n = geometry.kind().leg_count();
        let limits = if geometry.kind().is_telescopic() {
            vec![JointRange::new(0.0, f64::INFINITY); n]
        } else {
            vec![JointRange::UNBOUNDED; n]
        };
        Self::new(geometry, limits)
    }

    /// Bipod with no joint limits beyond `rho >= 0`.
    pub fn bipod(base_points: [Point2; 2]) -> Result<Self> {
        Self::unlimited(Geometry::Bipod(BipodGeometry { base_points }))
    }

    pub fn biglide(strut_length: f64) -> Result<Self> {
        Self::unlimited(Geometry::Biglide(BiglideGeometry { strut_length }))
    }

    pub fn three_rpr(base_points: [Point2; 3], platform_points: [Point2; 3]) -> Result<Self> {
        Self::unlimited(Geometry::PlanarThreeRpr(ThreeRprGeometry {
            base_points,
            platform_points,
        }))
    }

    pub fn orthoglide(leg_length: f64) -> Result<Self> {
        Self::unlimited(Geometry::Orthoglide(OrthoglideGeometry { leg_length }))
    }

    pub fn with_joint_limits(self, joint_limits: Vec<JointRange>) -> Result<Self> {
        Self::new(self.geometry, joint_limits)
    }

    pub fn kind(&self) -> MechanismKind {
        self.geometry.kind()
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn joint_limits(&self) -> &[JointRange] {
        &self.joint_limits
    }

    pub fn leg_count(&self) -> usize {
        self.kind().leg_count()
    }

    /// Number of pose coordinates (equal to the leg count for all models).
    pub fn pose_dim(&self) -> usize {
        self.leg_count()
    }

    /// Number of translational pose coordinates.
    pub fn position_dim(&self) -> usize {
        match self.kind() {
            MechanismKind::Orthoglide => 3,
            _ => 2,
        }
    }

    /// Characteristic length used to scale tolerances.
    pub fn scale(&self) -> f64 {
        match &self.geometry {
            Geometry::Bipod(g) => planar_distance(g.base_points[0], g.base_points[1]),
            Geometry::Biglide(g) => g.strut_length,
            Geometry::Orthoglide(g) => g.leg_length,
            Geometry::PlanarThreeRpr(g) => {
                let [a, b, c] = g.base_points;
                planar_distance(a, b).max(planar_distance(a, c)).max(planar_distance(b, c))
            }
        }
    }

    /// The same mechanism with every length multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(invalid("scale factor must be positive"));
        }
        let sp = |p: Point2| [p[0] * factor, p[1] * factor];
        let geometry = match &self.geometry {
            Geometry::Bipod(g) => Geometry::Bipod(BipodGeometry {
                base_points: g.base_points.map(sp),
            }),
            Geometry::Biglide(g) => Geometry::Biglide(BiglideGeometry {
                strut_length: g.strut_length * factor,
            }),
            Geometry::Orthoglide(g) => Geometry::Orthoglide(OrthoglideGeometry {
                leg_length: g.leg_length * factor,
            }),
            Geometry::PlanarThreeRpr(g) => Geometry::PlanarThreeRpr(ThreeRprGeometry {
                base_points: g.base_points.map(sp),
                platform_points: g.platform_points.map(sp),
            }),
        };
        let limits = self
            .joint_limits
            .iter()
            .map(|r| JointRange::new(r.min * factor, r.max * factor))
            .collect();
        Self::new(geometry, limits)
    }

    pub fn within_joint_limits(&self, joints: &JointVector) -> bool {
        joints
            .iter()
            .zip(&self.joint_limits)
            .all(|(&rho, r)| r.contains(rho))
    }

    /// Working mode used when a caller does not choose one: the branch that
    /// contains the isotropic configuration for the Orthoglide, the spread-legs
    /// branch for the biglide, and the unique branch otherwise.
    pub fn default_working_mode(&self) -> WorkingMode {
        match self.kind() {
            MechanismKind::Orthoglide => WorkingMode::new(vec![-1, -1, -1]),
            MechanismKind::Biglide => WorkingMode::new(vec![-1, 1]),
            k => WorkingMode::new(vec![1; k.leg_count()]),
        }
    }

    pub(crate) fn check_pose(&self, pose: &Pose) -> Result<()> {
        if pose.len() != self.pose_dim() {
            return Err(invalid(format!(
                "{} pose needs {} coordinates, got {}",
                self.kind(),
                self.pose_dim(),
                pose.len()
            )));
        }
        if pose.iter().any(|v| !v.is_finite()) {
            return Err(invalid("pose coordinates must be finite"));
        }
        Ok(())
    }

    pub(crate) fn check_joints(&self, joints: &JointVector) -> Result<()> {
        if joints.len() != self.leg_count() {
            return Err(invalid(format!(
                "{} needs {} joint values, got {}",
                self.kind(),
                self.leg_count(),
                joints.len()
            )));
        }
        if joints.iter().any(|v| !v.is_finite()) {
            return Err(invalid("joint values must be finite"));
        }
        if self.kind().is_telescopic() && joints.iter().any(|&r| r < 0.0) {
            return Err(invalid("telescopic strut lengths must be non-negative"));
        }
        Ok(())
    }

    pub(crate) fn check_working_mode(&self, mode: &WorkingMode) -> Result<()> {
        if mode.signs().len() != self.leg_count() {
            return Err(invalid(format!(
                "working mode needs {} signs, got {}",
                self.leg_count(),
                mode.signs().len()
            )));
        }
        if self.kind().is_telescopic() && mode.signs().iter().any(|&s| s != 1) {
            return Err(invalid(format!(
                "{} has a unique working mode (all +1)",
                self.kind()
            )));
        }
        Ok(())
    }

    /// Per-leg vector from the joint-side point to the tool-side point.
    ///
    /// The closure residual of leg `i` is `|d_i|^2 - length_i^2`.
    pub(crate) fn leg_vectors(&self, pose: &[f64], rho: &[f64]) -> Vec<[f64; 3]> {
        match &self.geometry {
            Geometry::Bipod(g) => g
                .base_points
                .iter()
                .map(|b| [pose[0] - b[0], pose[1] - b[1], 0.0])
                .collect(),
            Geometry::Biglide(_) => rho.iter().map(|&r| [pose[0] - r, pose[1], 0.0]).collect(),
            Geometry::Orthoglide(_) => (0..3)
                .map(|i| {
                    let mut d = [pose[0], pose[1], pose[2]];
                    d[i] -= rho[i];
                    d
                })
                .collect(),
            Geometry::PlanarThreeRpr(g) => {
                let (s, c) = pose[2].sin_cos();
                (0..3)
                    .map(|i| {
                        let b = g.platform_points[i];
                        let a = g.base_points[i];
                        [
                            pose[0] + c * b[0] - s * b[1] - a[0],
                            pose[1] + s * b[0] + c * b[1] - a[1],
                            0.0,
                        ]
                    })
                    .collect()
            }
        }
    }

    /// Squared length each leg must have: `L^2` for fixed legs, `rho^2` otherwise.
    pub(crate) fn leg_length_sq(&self, rho: &[f64]) -> Vec<f64> {
        match &self.geometry {
            Geometry::Biglide(g) => vec![g.strut_length * g.strut_length; 2],
            Geometry::Orthoglide(g) => vec![g.leg_length * g.leg_length; 3],
            _ => rho.iter().map(|r| r * r).collect(),
        }
    }

    pub(crate) fn residual_raw(&self, pose: &[f64], rho: &[f64]) -> Vec<f64> {
        self.leg_vectors(pose, rho)
            .iter()
            .zip(self.leg_length_sq(rho))
            .map(|(d, l2)| d[0] * d[0] + d[1] * d[1] + d[2] * d[2] - l2)
            .collect()
    }

    /// Loop-closure residuals `f_i(pose, joints)` in mm².
    pub fn constraint_residual(&self, pose: &Pose, joints: &JointVector) -> Result<Vec<f64>> {
        self.check_pose(pose)?;
        if joints.len() != self.leg_count() {
            return Err(invalid(format!(
                "{} needs {} joint values, got {}",
                self.kind(),
                self.leg_count(),
                joints.len()
            )));
        }
        Ok(self.residual_raw(pose, joints))
    }

    /// Closed-form inverse kinematics on the branch selected by `mode`.
    ///
    /// Joint limits are not enforced here; see [`Self::within_joint_limits`].
    pub fn inverse_kinematics(&self, pose: &Pose, mode: &WorkingMode) -> Result<JointVector> {
        self.check_pose(pose)?;
        self.check_working_mode(mode)?;
        let p = pose.as_slice();
        let out_of_reach = |leg: usize| Error::OutOfReach {
            leg,
            pose: p.to_vec(),
        };
        let rho = match &self.geometry {
            Geometry::Bipod(_) | Geometry::PlanarThreeRpr(_) => self
                .leg_vectors(p, &[0.0; 3])
                .iter()
                .map(|d| d[0].hypot(d[1]))
                .collect(),
            Geometry::Biglide(g) => {
                let l2 = g.strut_length * g.strut_length;
                let root = branch_root(l2 - p[1] * p[1], l2).ok_or_else(|| out_of_reach(0))?;
                mode.signs()
                    .iter()
                    .map(|&s| p[0] - f64::from(s) * root)
                    .collect()
            }
            Geometry::Orthoglide(g) => {
                let l2 = g.leg_length * g.leg_length;
                let mut rho = Vec::with_capacity(3);
                for i in 0..3 {
                    let others: f64 = (0..3).filter(|&k| k != i).map(|k| p[k] * p[k]).sum();
                    let root = branch_root(l2 - others, l2).ok_or_else(|| out_of_reach(i))?;
                    rho.push(p[i] - f64::from(mode.signs()[i]) * root);
                }
                rho
            }
        };
        Ok(JointVector(rho))
    }

    /// Forward kinematics on assembly branch `mode`.
    ///
    /// The 3-RPR has no closed form here: it is solved by damped Newton
    /// iteration from `seed` (required), and `mode` is ignored.
    pub fn forward_kinematics(
        &self,
        joints: &JointVector,
        mode: AssemblyMode,
        seed: Option<&Pose>,
    ) -> Result<Pose> {
        self.check_joints(joints)?;
        if let Geometry::PlanarThreeRpr(_) = self.geometry {
            let seed = seed.ok_or_else(|| invalid("3rpr forward kinematics needs a seed pose"))?;
            self.check_pose(seed)?;
            return self.newton_fk(joints, seed);
        }
        if mode.index() == 0 || mode.index() > 2 {
            return Err(invalid(format!(
                "assembly mode must be 1 or 2, got {}",
                mode.index()
            )));
        }
        let solutions = self.closed_form_fk(joints)?;
        match solutions.as_slice() {
            [] => Err(Error::NoAssembly),
            [single] => Ok(single.clone()),
            pair => Ok(pair[mode.index() - 1].clone()),
        }
    }

    /// All FK solutions of the closed-form models, ordered by assembly mode.
    /// A tangential closure yields a single pose.
    fn closed_form_fk(&self, joints: &JointVector) -> Result<Vec<Pose>> {
        let rho = joints.as_slice();
        let scale = self.scale();
        let tangent = TANGENT_RTOL * scale * scale;
        match &self.geometry {
            Geometry::Biglide(g) => {
                let half = 0.5 * (rho[0] - rho[1]);
                if half.abs() <= 1e-12 * scale {
                    return Err(Error::DegenerateAssembly);
                }
                let x = 0.5 * (rho[0] + rho[1]);
                let h2 = g.strut_length * g.strut_length - half * half;
                Ok(pair_from_height(h2, tangent, |h| Pose(vec![x, h])))
            }
            Geometry::Bipod(g) => {
                let [p1, p2] = g.base_points;
                let d = planar_distance(p1, p2);
                let u = [(p2[0] - p1[0]) / d, (p2[1] - p1[1]) / d];
                let a = (rho[0] * rho[0] - rho[1] * rho[1] + d * d) / (2.0 * d);
                let h2 = rho[0] * rho[0] - a * a;
                let q = [p1[0] + a * u[0], p1[1] + a * u[1]];
                // mode 1 lies to the left of the directed base line p1 -> p2
                Ok(pair_from_height(h2, tangent, |h| {
                    Pose(vec![q[0] - h * u[1], q[1] + h * u[0]])
                }))
            }
            Geometry::Orthoglide(g) => {
                let c = [
                    [rho[0], 0.0, 0.0],
                    [0.0, rho[1], 0.0],
                    [0.0, 0.0, rho[2]],
                ];
                let u = sub3(c[1], c[0]);
                let v = sub3(c[2], c[0]);
                let w = cross3(u, v);
                let w2 = dot3(w, w);
                if w2 <= 1e-24 * scale.powi(4) {
                    return Err(Error::DegenerateAssembly);
                }
                // circumcenter of the three actuator positions
                let t1 = cross3(v, w);
                let t2 = cross3(w, u);
                let (uu, vv) = (dot3(u, u), dot3(v, v));
                let cc: [f64; 3] =
                    std::array::from_fn(|k| c[0][k] + (uu * t1[k] + vv * t2[k]) / (2.0 * w2));
                let r = sub3(cc, c[0]);
                let h2 = g.leg_length * g.leg_length - dot3(r, r);
                let wn = w2.sqrt();
                let n = [w[0] / wn, w[1] / wn, w[2] / wn];
                let mut sols = pair_from_height(h2, tangent, |h| {
                    Pose((0..3).map(|k| cc[k] + h * n[k]).collect())
                });
                sols.sort_by(|a, b| {
                    let (sa, sb): (f64, f64) = (a.iter().sum(), b.iter().sum());
                    sa.total_cmp(&sb)
                        .then_with(|| a.as_slice().partial_cmp(b.as_slice()).unwrap())
                });
                Ok(sols)
            }
            Geometry::PlanarThreeRpr(_) => Err(Error::Unsupported(
                "closed-form assembly modes are not available for the 3rpr".into(),
            )),
        }
    }

    fn newton_fk(&self, joints: &JointVector, seed: &Pose) -> Result<Pose> {
        let scale = self.scale();
        let target = NEWTON_RTOL * scale * scale;
        let rho = joints.as_slice();
        let norm = |f: &[f64]| f.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let mut pose = seed.as_slice().to_vec();
        let mut f = self.residual_raw(&pose, rho);
        for iteration in 0..=NEWTON_MAX_ITERATIONS {
            let fnorm = norm(&f);
            if fnorm <= target {
                // A small residual can still hide a sizeable pose error near a
                // parallel singularity; a few more full steps are nearly free.
                for _ in 0..NEWTON_POLISH_STEPS {
                    let (a, _) = crate::diffkin::raw_matrices(self, &pose, rho);
                    let Some(inv) = linalg::invert_small(&a) else { break };
                    let trial: Vec<f64> = (0..3)
                        .map(|r| pose[r] - 0.5 * (0..3).map(|k| inv[(r, k)] * f[k]).sum::<f64>())
                        .collect();
                    let ft = self.residual_raw(&trial, rho);
                    if norm(&ft) >= norm(&f) {
                        break;
                    }
                    pose = trial;
                    f = ft;
                }
                pose[2] = normalize_angle(pose[2]);
                return Ok(Pose(pose));
            }
            if iteration == NEWTON_MAX_ITERATIONS {
                break;
            }
            // d f = 2 A d pose
            let (a, _) = crate::diffkin::raw_matrices(self, &pose, rho);
            let inv = linalg::invert_small(&a).ok_or(Error::Convergence {
                iterations: iteration,
                residual: fnorm,
            })?;
            let step: Vec<f64> = (0..3)
                .map(|r| -0.5 * (0..3).map(|k| inv[(r, k)] * f[k]).sum::<f64>())
                .collect();
            let mut t = 1.0;
            loop {
                let trial: Vec<f64> = pose.iter().zip(&step).map(|(p, s)| p + t * s).collect();
                let ft = self.residual_raw(&trial, rho);
                if norm(&ft) < fnorm || t < 1e-6 {
                    pose = trial;
                    f = ft;
                    break;
                }
                t *= 0.5;
            }
        }
        Err(Error::Convergence {
            iterations: NEWTON_MAX_ITERATIONS,
            residual: norm(&f),
        })
    }

    /// Working modes in lexicographic order of their sign vectors (-1 < +1).
    pub fn enumerate_working_modes(&self) -> Vec<WorkingMode> {
        let n = self.leg_count();
        if self.kind().is_telescopic() {
            return vec![WorkingMode::new(vec![1; n])];
        }
        (0..1usize << n)
            .map(|bits| {
                WorkingMode::new(
                    (0..n)
                        .map(|i| if bits >> (n - 1 - i) & 1 == 1 { 1 } else { -1 })
                        .collect(),
                )
            })
            .collect()
    }

    /// Every FK solution for `joints`; empty when the loops cannot close.
    pub fn enumerate_assembly_modes(&self, joints: &JointVector) -> Result<Vec<Pose>> {
        if self.kind() == MechanismKind::PlanarThreeRpr {
            return Err(Error::Unsupported(
                "assembly-mode enumeration is not available for the 3rpr".into(),
            ));
        }
        self.check_joints(joints)?;
        self.closed_form_fk(joints)
    }

    /// IK branch signs realized by a configuration.
    pub fn working_mode_of(&self, pose: &Pose, joints: &JointVector) -> Result<WorkingMode> {
        self.check_pose(pose)?;
        self.check_joints(joints)?;
        let sign = |v: f64| if v < 0.0 { -1 } else { 1 };
        Ok(match self.kind() {
            MechanismKind::Biglide => {
                WorkingMode::new(joints.iter().map(|&r| sign(pose[0] - r)).collect())
            }
            MechanismKind::Orthoglide => {
                WorkingMode::new((0..3).map(|i| sign(pose[i] - joints[i])).collect())
            }
            k => WorkingMode::new(vec![1; k.leg_count()]),
        })
    }

    /// The assembly branch whose FK solution lies closest to `pose`.
    pub fn assembly_mode_of(&self, pose: &Pose, joints: &JointVector) -> Result<AssemblyMode> {
        self.check_pose(pose)?;
        let sols = self.enumerate_assembly_modes(joints)?;
        let dist = |q: &Pose| -> f64 {
            q.iter()
                .zip(pose.iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum()
        };
        sols.iter()
            .enumerate()
            .min_by(|a, b| dist(a.1).total_cmp(&dist(b.1)))
            .map(|(i, _)| AssemblyMode::new(i + 1))
            .ok_or(Error::NoAssembly)
    }
}

fn check_finite_points(name: &str, pts: &[Point2]) -> Result<()> {
    if pts.iter().flatten().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be finite")))
    }
}

/// `sqrt(disc)`, with discriminants within the tangent tolerance snapped to 0.
fn branch_root(disc: f64, scale2: f64) -> Option<f64> {
    if disc >= 0.0 {
        Some(disc.sqrt())
    } else if disc >= -TANGENT_RTOL * scale2 {
        Some(0.0)
    } else {
        None
    }
}

fn pair_from_height(h2: f64, tangent: f64, at: impl Fn(f64) -> Pose) -> Vec<Pose> {
    if h2.abs() <= tangent {
        vec![at(0.0)]
    } else if h2 < 0.0 {
        vec![]
    } else {
        let h = h2.sqrt();
        vec![at(h), at(-h)]
    }
}

fn sub3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Maps an angle to `(-pi, pi]`.
pub fn normalize_angle(phi: f64) -> f64 {
    let mut a = phi.rem_euclid(2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    }
    a
}

/// Tool coordinates: `(x, y)` for the bipod and biglide, `(x, y, phi)` for
/// the 3-RPR, `(x, y, z)` for the Orthoglide.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Pose(Vec<f64>);

impl Pose {
    pub fn new(coords: impl Into<Vec<f64>>) -> Self {
        Pose(coords.into())
    }

    pub fn planar(x: f64, y: f64) -> Self {
        Pose(vec![x, y])
    }

    /// Planar pose with orientation; `phi` is normalized to `(-pi, pi]`.
    pub fn oriented(x: f64, y: f64, phi: f64) -> Self {
        Pose(vec![x, y, normalize_angle(phi)])
    }

    pub fn spatial(x: f64, y: f64, z: f64) -> Self {
        Pose(vec![x, y, z])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Deref for Pose {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Actuated joint coordinates `rho`, one per leg (mm).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct JointVector(Vec<f64>);

impl JointVector {
    pub fn new(rho: impl Into<Vec<f64>>) -> Self {
        JointVector(rho.into())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Deref for JointVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// One IK branch sign per leg.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WorkingMode(Vec<i8>);

impl WorkingMode {
    /// # Panics
    /// If any sign is not -1 or +1.
    pub fn new(signs: Vec<i8>) -> Self {
        assert!(
            signs.iter().all(|s| *s == 1 || *s == -1),
            "working-mode signs must be -1 or +1"
        );
        WorkingMode(signs)
    }

    pub fn try_new(signs: Vec<i8>) -> Result<Self> {
        if signs.iter().all(|s| *s == 1 || *s == -1) {
            Ok(WorkingMode(signs))
        } else {
            Err(invalid("working-mode signs must be -1 or +1"))
        }
    }

    pub fn signs(&self) -> &[i8] {
        &self.0
    }
}

impl fmt::Display for WorkingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<&str> = self.0.iter().map(|&s| if s < 0 { "-1" } else { "+1" }).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// 1-based FK branch index. For the biglide and bipod, mode 1 is the tool
/// above (left of) the base line; for the Orthoglide, mode 1 is the solution
/// with the smaller `x + y + z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AssemblyMode(usize);

impl AssemblyMode {
    pub const FIRST: AssemblyMode = AssemblyMode(1);
    pub const SECOND: AssemblyMode = AssemblyMode(2);

    pub fn new(index: usize) -> Self {
        AssemblyMode(index)
    }

    pub fn index(self) -> usize {
        self.0
    }
}
