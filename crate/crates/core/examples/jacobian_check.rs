//! Analytic Jacobian against central differences of the kinematics.

use pkm::diffkin::{kinematic_matrices, numeric_jacobian};
use pkm::mechanism::{MechanismModel, Pose};

fn main() -> pkm::Result<()> {
    let cases = [
        (MechanismModel::bipod([[0.0, 0.0], [10.0, 0.0]])?, Pose::planar(4.0, 6.0)),
        (MechanismModel::biglide(5.0)?, Pose::planar(1.0, 3.0)),
        (
            MechanismModel::three_rpr(
                [[0.0, 0.0], [10.0, 0.0], [5.0, 8.0]],
                [[-1.0, -0.5], [1.0, -0.5], [0.0, 1.0]],
            )?,
            Pose::oriented(5.0, 3.0, 0.2),
        ),
        (MechanismModel::orthoglide(10.0)?, Pose::spatial(1.0, -2.0, 0.5)),
    ];
    for (m, p) in cases {
        let mode = m.default_working_mode();
        let q = m.inverse_kinematics(&p, &mode)?;
        let j = kinematic_matrices(&m, &p, &q)?.jacobian.expect("regular pose");
        let fd = numeric_jacobian(&m, &p, &q, &mode, 1e-6 * m.scale())?;
        println!("{:<10} max |J - J_fd| = {:.2e}", m.kind().name(), (&j - &fd).amax());
    }
    Ok(())
}
