mod common;

use common::*;
use nalgebra::DMatrix;
use pkm::diffkin::{kinematic_matrices, numeric_jacobian};
use pkm::error::Error;
use pkm::kinetostatics::homogenize;
use pkm::mechanism::{JointVector, MechanismKind, MechanismModel, Pose, WorkingMode};
use proptest::prelude::*;

fn rel_err(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax() / 1.0_f64.max(b.amax())
}

#[test]
fn matrices_are_half_gradients_of_the_closure() {
    let mut r = rng(21);
    for model in all_models() {
        for _ in 0..100 {
            let c = random_config(&model, &mut r);
            let km = kinematic_matrices(&model, &c.pose, &c.joints).unwrap();
            let (dx, dq) = residual_derivatives(&model, &c.pose, &c.joints);
            assert!(rel_err(&km.parallel, &(dx * 0.5)) < 1e-7, "{}", model.kind());
            assert!(rel_err(&km.serial, &(dq * -0.5)) < 1e-7, "{}", model.kind());
        }
    }
}

#[test]
fn jacobian_matches_both_oracles() {
    let mut r = rng(22);
    for model in all_models() {
        let step = 1e-6 * model.scale();
        for _ in 0..100 {
            let c = regular_config(&model, &mut r, 1e3);
            let j = kinematic_matrices(&model, &c.pose, &c.joints).unwrap().jacobian.unwrap();
            let fd = numeric_jacobian(&model, &c.pose, &c.joints, &c.mode, step).unwrap();
            assert!(rel_err(&j, &fd) <= 1e-5, "{}: {j} vs {fd}", model.kind());
            let implicit = oracle_jacobian(&model, &c.pose, &c.joints).unwrap();
            assert!(rel_err(&j, &implicit) <= 1e-6, "{}", model.kind());
        }
    }
}

#[test]
fn worked_example() {
    let m = MechanismModel::biglide(5.0).unwrap();
    let pose = Pose::planar(0.0, 4.0);
    let joints = JointVector::new(vec![3.0, -3.0]);
    let km = kinematic_matrices(&m, &pose, &joints).unwrap();
    assert_eq!(km.parallel, DMatrix::from_row_slice(2, 2, &[-3.0, 4.0, 3.0, 4.0]));
    assert_eq!(km.serial, DMatrix::from_row_slice(2, 2, &[-3.0, 0.0, 0.0, 3.0]));
    let expected = DMatrix::from_row_slice(2, 2, &[0.5, 0.5, -0.375, 0.375]);
    assert!(rel_err(km.jacobian.as_ref().unwrap(), &expected) < 1e-12);
}

#[test]
fn scale_invariance_of_translational_models() {
    let mut r = rng(23);
    for model in [bipod(), biglide(), orthoglide()] {
        for _ in 0..100 {
            let c = regular_config(&model, &mut r, 1e3);
            let j = kinematic_matrices(&model, &c.pose, &c.joints).unwrap().jacobian.unwrap();
            for lambda in [0.1, 3.0, 1000.0] {
                let m = model.scaled(lambda).unwrap();
                let p = Pose::new(c.pose.iter().map(|v| v * lambda).collect::<Vec<_>>());
                let q = JointVector::new(c.joints.iter().map(|v| v * lambda).collect::<Vec<_>>());
                let js = kinematic_matrices(&m, &p, &q).unwrap().jacobian.unwrap();
                assert!(rel_err(&js, &j) <= 1e-12, "{} lambda={lambda}", model.kind());
            }
        }
    }
}

#[test]
fn three_rpr_scaling_keeps_the_homogenized_jacobian() {
    let model = three_rpr();
    let mut r = rng(24);
    let length = 2.0;
    for _ in 0..100 {
        let c = regular_config(&model, &mut r, 1e3);
        let j = kinematic_matrices(&model, &c.pose, &c.joints).unwrap().jacobian.unwrap();
        for lambda in [0.1, 3.0, 1000.0] {
            let m = model.scaled(lambda).unwrap();
            let p = Pose::oriented(c.pose[0] * lambda, c.pose[1] * lambda, c.pose[2]);
            let q = JointVector::new(c.joints.iter().map(|v| v * lambda).collect::<Vec<_>>());
            let js = kinematic_matrices(&m, &p, &q).unwrap().jacobian.unwrap();
            let a = homogenize(&js, length * lambda);
            let b = homogenize(&j, length);
            assert!(rel_err(&a, &b) <= 1e-12, "lambda={lambda}");
            // the rotational row carries 1/length
            let rot = js.row(2).amax() * lambda;
            assert!((rot - j.row(2).amax()).abs() <= 1e-12 * j.amax().max(1.0));
        }
    }
}

#[test]
fn open_loops_are_rejected() {
    let m = MechanismModel::biglide(5.0).unwrap();
    let err = kinematic_matrices(&m, &Pose::planar(0.0, 4.0), &JointVector::new(vec![3.5, -3.0]))
        .unwrap_err();
    assert!(matches!(err, Error::InvalidConfiguration { .. }), "{err:?}");
}

#[test]
fn finite_difference_oracle_preconditions() {
    let m = MechanismModel::biglide(5.0).unwrap();
    let mode = WorkingMode::new(vec![-1, 1]);
    let pose = Pose::planar(0.0, 4.0);
    let q = JointVector::new(vec![3.0, -3.0]);
    assert!(matches!(
        numeric_jacobian(&m, &pose, &q, &mode, 0.1),
        Err(Error::InvalidArgument(_))
    ));
    assert!(matches!(
        numeric_jacobian(&m, &pose, &q, &WorkingMode::new(vec![1, -1]), 1e-4),
        Err(Error::OracleInvalid(_))
    ));
    let flat = Pose::planar(0.0, 0.0);
    let q0 = m.inverse_kinematics(&flat, &mode).unwrap();
    assert!(matches!(
        numeric_jacobian(&m, &flat, &q0, &mode, 1e-4),
        Err(Error::OracleInvalid(_))
    ));
}

proptest! {
    #[test]
    fn orthoglide_jacobian_inverts_the_joint_map(
        x in -4.0..4.0f64, y in -4.0..4.0f64, z in -4.0..4.0f64,
    ) {
        // J^-1 = B^-1 A maps tool rates back to joint rates; compare with a
        // difference quotient of the closed-form IK.
        let m = orthoglide();
        let mode = m.default_working_mode();
        let pose = Pose::spatial(x, y, z);
        let q = m.inverse_kinematics(&pose, &mode).unwrap();
        let km = kinematic_matrices(&m, &pose, &q).unwrap();
        let j = km.jacobian.unwrap();
        let jinv = j.try_inverse().unwrap();
        let h = 1e-6;
        for k in 0..3 {
            let mut p1 = pose.to_vec();
            let mut p2 = pose.to_vec();
            p1[k] += h;
            p2[k] -= h;
            let a = m.inverse_kinematics(&Pose::new(p1), &mode).unwrap();
            let b = m.inverse_kinematics(&Pose::new(p2), &mode).unwrap();
            for i in 0..3 {
                let d = (a[i] - b[i]) / (2.0 * h);
                prop_assert!((d - jinv[(i, k)]).abs() < 1e-5 * jinv.amax().max(1.0));
            }
        }
        prop_assert_eq!(m.kind(), MechanismKind::Orthoglide);
    }
}
