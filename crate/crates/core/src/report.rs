//! File formats: mechanism descriptions, JSON reports and CSV grid maps.
//!
//! Floats are written in their shortest round-trip form, so every value
//! parses back to the identical `f64`. Non-finite values are written as the
//! string `"inf"` (JSON) or the literal `inf` (CSV).

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::kinetostatics::KinetostaticReport;
use crate::mechanism::{JointVector, MechanismKind, MechanismModel, Pose, WorkingMode};
use crate::synthesis::SynthesisResult;
use crate::workspace::{FactorBounds, WorkspaceGrid};

pub fn parse_mechanism(text: &str) -> Result<MechanismModel> {
    serde_json::from_str(text).map_err(|e| Error::InvalidArgument(format!("mechanism file: {e}")))
}

pub fn load_mechanism(path: &Path) -> Result<MechanismModel> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", path.display())))?;
    parse_mechanism(&text)
}

pub fn mechanism_to_json(model: &MechanismModel) -> String {
    serde_json::to_string_pretty(model).expect("mechanism models always serialize")
}

/// JSON number, or `"inf"` / `"-inf"` / `null` for non-finite values.
pub fn num(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else if v.is_nan() {
        Value::Null
    } else if v > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

fn nums(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|&x| num(x)).collect())
}

fn matrix(m: &DMatrix<f64>) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| nums(&m.row(i).iter().copied().collect::<Vec<_>>()))
            .collect(),
    )
}

/// Axis names of the pose coordinates, in order.
pub fn pose_axes(kind: MechanismKind) -> &'static [&'static str] {
    match kind {
        MechanismKind::Orthoglide => &["x", "y", "z"],
        MechanismKind::PlanarThreeRpr => &["x", "y", "phi"],
        _ => &["x", "y"],
    }
}

pub fn analysis_json(
    model: &MechanismModel,
    pose: &Pose,
    mode: &WorkingMode,
    joints: &JointVector,
    report: &KinetostaticReport,
    characteristic_length: Option<f64>,
) -> Value {
    let mut doc = json!({
        "kind": model.kind().name(),
        "pose": nums(pose),
        "working_mode": mode.signs(),
        "joints": nums(joints),
        "within_joint_limits": model.within_joint_limits(joints),
        "matrices": {
            "A": matrix(&report.matrices.parallel),
            "B": matrix(&report.matrices.serial),
            "J": report.matrices.jacobian.as_ref().map_or(Value::Null, matrix),
        },
        "sigma": nums(&report.sigma),
        "kappa": num(report.kappa),
        "ellipsoid": report.ellipsoid.as_ref().map_or(Value::Null, |e| json!({
            "axes": Value::Array(e.axes.iter().map(|a| nums(a)).collect()),
            "semi_lengths": nums(&e.semi_lengths),
        })),
        "class": report.classification.name(),
    });
    if let Some(b) = &report.blocks {
        doc["blocks"] = json!({
            "translational_sigma": nums(&b.translational_sigma),
            "translational_kappa": num(b.translational_kappa),
            "rotational_gain": num(b.rotational_gain),
        });
        doc["characteristic_length"] = characteristic_length.map_or(Value::Null, num);
    }
    doc
}

pub fn synthesis_report_json(result: &SynthesisResult) -> Value {
    json!({
        "L": num(result.leg_length),
        "cube_edge": num(result.cube_edge),
        "cube_center": nums(&result.cube_center),
        "joint_ranges": Value::Array(result.joint_ranges.iter().map(|r| nums(&[r.min, r.max])).collect()),
        "achieved_factor_range": nums(&result.achieved_factor_range),
        "bounds": nums(&[result.bounds.lo, result.bounds.hi]),
        "lattice_density": result.lattice_density,
    })
}

pub fn csv_header(kind: MechanismKind, with_dextrous: bool) -> String {
    let mut h = pose_axes(kind).join(",");
    h.push_str(",reachable,in_limits,sigma_min,sigma_max,kappa,class");
    if with_dextrous {
        h.push_str(",dextrous");
    }
    h
}

/// One row per cell in grid order; metric fields are empty for unreachable
/// cells. With `bounds`, a trailing 0/1 `dextrous` column is added.
pub fn grid_csv(kind: MechanismKind, grid: &WorkspaceGrid, bounds: Option<&FactorBounds>) -> String {
    let mut out = csv_header(kind, bounds.is_some());
    out.push('\n');
    for cell in &grid.cells {
        for v in cell.pose.iter() {
            let _ = write!(out, "{v},");
        }
        let _ = write!(
            out,
            "{},{},",
            u8::from(cell.reachable),
            u8::from(cell.within_joint_limits)
        );
        match &cell.metrics {
            Some(m) => {
                let _ = write!(
                    out,
                    "{},{},{},{}",
                    m.sigma_min,
                    m.sigma_max,
                    m.kappa,
                    m.class.name()
                );
            }
            None => out.push_str(",,,"),
        }
        if let Some(b) = bounds {
            let _ = write!(out, ",{}", u8::from(cell.is_dextrous(b)));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanism::JointRange;

    #[test]
    fn mechanism_file_round_trip() {
        let text = r#"{"kind": "biglide", "geometry": {"strut_length": 5.0},
                       "joint_limits": [[-10, 10], [-10, null]]}"#;
        let m = parse_mechanism(text).unwrap();
        assert_eq!(m.kind(), MechanismKind::Biglide);
        assert_eq!(m.joint_limits()[1], JointRange::new(-10.0, f64::INFINITY));
        assert_eq!(parse_mechanism(&mechanism_to_json(&m)).unwrap(), m);
    }

    #[test]
    fn three_rpr_file() {
        let text = r#"{"kind": "3rpr",
            "geometry": {"base_points": [[0,0],[10,0],[5,8]],
                         "platform_points": [[-1,-0.5],[1,-0.5],[0,1]]},
            "joint_limits": [[0, 20], [0, 20], [0, 20]]}"#;
        let m = parse_mechanism(text).unwrap();
        assert_eq!(m.kind(), MechanismKind::PlanarThreeRpr);
    }

    #[test]
    fn malformed_files_name_the_field() {
        let missing = r#"{"kind": "orthoglide", "geometry": {}, "joint_limits": []}"#;
        let e = parse_mechanism(missing).unwrap_err().to_string();
        assert!(e.contains("leg_length"), "{e}");
        let bad = r#"{"kind": "orthoglide", "geometry": {"leg_length": 1},
                      "joint_limits": [[0,1],[0,1],[2,1]]}"#;
        let e = parse_mechanism(bad).unwrap_err().to_string();
        assert!(e.contains("joint_limits[2]"), "{e}");
        let e = parse_mechanism(r#"{"kind": "hexapod", "geometry": {}, "joint_limits": []}"#)
            .unwrap_err()
            .to_string();
        assert!(e.contains("hexapod"), "{e}");
    }

    #[test]
    fn infinity_is_spelled_out() {
        assert_eq!(num(f64::INFINITY), json!("inf"));
        assert_eq!(num(1.5), json!(1.5));
    }
}
