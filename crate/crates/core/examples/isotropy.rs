//! The Orthoglide is isotropic at the origin for any leg length.

use nalgebra::DMatrix;
use pkm::kinetostatics::analyze;
use pkm::mechanism::{JointVector, MechanismModel, Pose};

fn main() -> pkm::Result<()> {
    for l in [1.0, 200.0, 400.0] {
        let m = MechanismModel::orthoglide(l)?;
        let rep = analyze(&m, &Pose::spatial(0.0, 0.0, 0.0), &JointVector::new(vec![l; 3]))?;
        let j = rep.jacobian.expect("regular at the origin");
        println!(
            "L = {l:>5}: |J - I| = {:.1e}, kappa = {}, class {}",
            (&j - DMatrix::identity(3, 3)).amax(),
            rep.kappa,
            rep.classification.name()
        );
    }
    // away from the origin the machine loses isotropy
    let m = MechanismModel::orthoglide(1.0)?;
    let mode = m.default_working_mode();
    for x in [0.1, 0.2, 0.3] {
        let p = Pose::spatial(x, 0.0, 0.0);
        let q = m.inverse_kinematics(&p, &mode)?;
        println!("x = {x}: kappa = {:.4}", analyze(&m, &p, &q)?.kappa);
    }
    Ok(())
}
