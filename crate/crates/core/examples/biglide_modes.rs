//! Working and assembly modes of the biglide.

use pkm::mechanism::{JointVector, MechanismModel, Pose};

fn main() -> pkm::Result<()> {
    let m = MechanismModel::biglide(5.0)?;
    let pose = Pose::planar(0.0, 4.0);
    println!("inverse kinematics of {:?}:", pose.as_slice());
    for mode in m.enumerate_working_modes() {
        let q = m.inverse_kinematics(&pose, &mode)?;
        println!("  working mode {:?}: rho = {:?}", mode.signs(), q.as_slice());
    }
    let q = JointVector::new(vec![3.0, -3.0]);
    println!("forward kinematics of {:?}:", q.as_slice());
    for p in m.enumerate_assembly_modes(&q)? {
        println!(
            "  pose {:?} (assembly mode {})",
            p.as_slice(),
            m.assembly_mode_of(&p, &q)?.index()
        );
    }
    Ok(())
}
