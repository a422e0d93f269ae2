mod common;

use common::*;
use pkm::error::Error;
use pkm::mechanism::{AssemblyMode, JointVector, MechanismKind, MechanismModel, Pose, WorkingMode};
use pkm::report;
use proptest::prelude::*;

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn working_mode_counts() {
    let counts: Vec<usize> = all_models()
        .iter()
        .map(|m| m.enumerate_working_modes().len())
        .collect();
    assert_eq!(counts, vec![1, 4, 1, 8]);
}

#[test]
fn round_trip_every_model() {
    let mut r = rng(11);
    for model in all_models() {
        let tol = 1e-9 * model.scale();
        for _ in 0..300 {
            // Near a parallel singularity two assembly modes lie close
            // together; keep the Newton seed well inside its own basin.
            let c = regular_config(&model, &mut r, 100.0);
            let back = if model.kind() == MechanismKind::PlanarThreeRpr {
                let seed: Vec<f64> = c.pose.iter().map(|v| v + 1e-3).collect();
                model
                    .forward_kinematics(&c.joints, AssemblyMode::FIRST, Some(&Pose::new(seed)))
                    .unwrap()
            } else {
                let branch = model.assembly_mode_of(&c.pose, &c.joints).unwrap();
                model.forward_kinematics(&c.joints, branch, None).unwrap()
            };
            assert!(
                max_diff(&back, &c.pose) <= tol,
                "{}: {:?} -> {:?}",
                model.kind(),
                c.pose,
                back
            );
        }
    }
}

#[test]
fn assembly_modes_close_the_loops() {
    let mut r = rng(12);
    for model in [bipod(), biglide(), orthoglide()] {
        let tol = 1e-9 * model.scale().powi(2);
        for _ in 0..200 {
            let c = random_config(&model, &mut r);
            let Ok(sols) = model.enumerate_assembly_modes(&c.joints) else {
                continue;
            };
            assert!(!sols.is_empty() && sols.len() <= 2);
            for p in &sols {
                let f = model.constraint_residual(p, &c.joints).unwrap();
                assert!(f.iter().all(|v| v.abs() <= tol), "{f:?}");
            }
        }
    }
}

#[test]
fn biglide_assembly_modes_mirror_across_the_rail() {
    let m = biglide();
    let mut r = rng(13);
    for _ in 0..200 {
        let c = regular_config(&m, &mut r, 1e3);
        let sols = m.enumerate_assembly_modes(&c.joints).unwrap();
        assert_eq!(sols.len(), 2);
        assert!((sols[0][0] - sols[1][0]).abs() < 1e-12);
        assert!((sols[0][1] + sols[1][1]).abs() < 1e-12);
    }
}

#[test]
fn orthoglide_permutation_symmetry() {
    let m = orthoglide();
    let mut r = rng(14);
    let perms = [[0, 1, 2], [1, 2, 0], [2, 0, 1], [1, 0, 2], [0, 2, 1], [2, 1, 0]];
    for _ in 0..100 {
        let c = random_config(&m, &mut r);
        for perm in perms {
            let pose = Pose::new(perm.map(|k| c.pose[k]).to_vec());
            let mode = WorkingMode::new(perm.map(|k| c.mode.signs()[k]).to_vec());
            let joints = perm.map(|k| c.joints[k]);
            let ik = m.inverse_kinematics(&pose, &mode).unwrap();
            assert!(max_diff(&ik, &joints) < 1e-12);
            let f = m.constraint_residual(&pose, &JointVector::new(joints.to_vec())).unwrap();
            assert!(f.iter().all(|v| v.abs() < 1e-9));
        }
    }
}

#[test]
fn working_mode_is_recovered() {
    let mut r = rng(15);
    for model in [biglide(), orthoglide()] {
        for _ in 0..200 {
            let c = regular_config(&model, &mut r, 1e3);
            assert_eq!(model.working_mode_of(&c.pose, &c.joints).unwrap(), c.mode);
        }
    }
}

#[test]
fn biglide_worked_modes() {
    let m = MechanismModel::biglide(5.0).unwrap();
    let pose = Pose::planar(0.0, 4.0);
    let joints: Vec<Vec<f64>> = m
        .enumerate_working_modes()
        .iter()
        .map(|w| m.inverse_kinematics(&pose, w).unwrap().into_vec())
        .collect();
    assert_eq!(
        joints,
        vec![vec![3.0, 3.0], vec![3.0, -3.0], vec![-3.0, 3.0], vec![-3.0, -3.0]]
    );
    let sols = m.enumerate_assembly_modes(&JointVector::new(vec![3.0, -3.0])).unwrap();
    assert_eq!(sols, vec![Pose::planar(0.0, 4.0), Pose::planar(0.0, -4.0)]);
}

#[test]
fn out_of_reach_names_leg_and_pose() {
    let m = orthoglide();
    let err = m
        .inverse_kinematics(&Pose::spatial(0.0, 8.0, 8.0), &m.default_working_mode())
        .unwrap_err();
    assert_eq!(
        err,
        Error::OutOfReach {
            leg: 0,
            pose: vec![0.0, 8.0, 8.0]
        }
    );
}

#[test]
fn three_rpr_newton_reports_non_convergence() {
    let m = three_rpr();
    // Legs too short to reach from any pose.
    let err = m
        .forward_kinematics(
            &JointVector::new(vec![0.1, 0.1, 0.1]),
            AssemblyMode::FIRST,
            Some(&Pose::oriented(5.0, 3.0, 0.0)),
        )
        .unwrap_err();
    assert!(matches!(err, Error::Convergence { .. }), "{err:?}");
}

proptest! {
    #[test]
    fn ik_closes_the_loops(x in -4.0..4.0f64, y in 0.1..4.9f64, s1 in any::<bool>(), s2 in any::<bool>()) {
        let m = biglide();
        let sign = |b: bool| if b { 1 } else { -1 };
        let mode = WorkingMode::new(vec![sign(s1), sign(s2)]);
        let pose = Pose::planar(x, y);
        let rho = m.inverse_kinematics(&pose, &mode).unwrap();
        let f = m.constraint_residual(&pose, &rho).unwrap();
        prop_assert!(f.iter().all(|v| v.abs() < 1e-12 * 25.0));
    }

    #[test]
    fn orthoglide_round_trip(x in -5.0..5.0f64, y in -5.0..5.0f64, z in -5.0..5.0f64, l in 8.0..500.0f64) {
        let m = MechanismModel::orthoglide(l).unwrap();
        let pose = Pose::spatial(x, y, z);
        let mode = m.default_working_mode();
        let rho = m.inverse_kinematics(&pose, &mode).unwrap();
        let sols = m.enumerate_assembly_modes(&rho).unwrap();
        let err = sols.iter().map(|p| max_diff(p, &pose)).fold(f64::INFINITY, f64::min);
        prop_assert!(err <= 1e-9 * l, "{err}");
    }

    #[test]
    fn mechanism_files_round_trip(
        l in 0.1..1e4f64,
        bx in -100.0..100.0f64,
        by in 1.0..100.0f64,
        lo in -50.0..0.0f64,
        span in 0.1..100.0f64,
    ) {
        let models = [
            MechanismModel::biglide(l).unwrap(),
            MechanismModel::orthoglide(l).unwrap()
                .with_joint_limits(vec![pkm::mechanism::JointRange::new(lo, lo + span); 3]).unwrap(),
            MechanismModel::bipod([[0.0, 0.0], [bx, by]]).unwrap(),
            MechanismModel::three_rpr([[0.0, 0.0], [bx, 0.5], [0.3, by]], [[-1.0, 0.0], [1.0, 0.0], [0.0, l]]).unwrap(),
        ];
        for m in models {
            let text = report::mechanism_to_json(&m);
            prop_assert_eq!(report::parse_mechanism(&text).unwrap(), m);
        }
    }
}
