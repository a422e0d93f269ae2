//! 3-RPR: Newton forward kinematics and homogenized conditioning.

use pkm::kinetostatics::analyze_with_length;
use pkm::mechanism::{AssemblyMode, MechanismModel, Pose};

fn main() -> pkm::Result<()> {
    let m = MechanismModel::three_rpr(
        [[0.0, 0.0], [10.0, 0.0], [5.0, 8.0]],
        [[-1.0, -0.5], [1.0, -0.5], [0.0, 1.0]],
    )?;
    let pose = Pose::oriented(5.0, 3.0, 0.3);
    let q = m.inverse_kinematics(&pose, &m.default_working_mode())?;
    let seed = Pose::oriented(4.8, 3.2, 0.25);
    let back = m.forward_kinematics(&q, AssemblyMode::FIRST, Some(&seed))?;
    println!("rho = {:?}", q.as_slice());
    println!("FK from {:?} -> {:?}", seed.as_slice(), back.as_slice());

    // kappa of a mixed-unit Jacobian depends on the length used to
    // homogenize the rotational column
    for l in [0.5, 1.0, 2.0, 5.0] {
        let rep = analyze_with_length(&m, &pose, &q, Some(l))?;
        let b = rep.blocks.expect("3rpr reports blocks");
        println!(
            "L_c = {l}: kappa = {:.3}, translation kappa = {:.3}, rotation gain = {:.4} rad/mm",
            rep.kappa, b.translational_kappa, b.rotational_gain
        );
    }
    Ok(())
}
