//! Classifying configurations, and kappa blowing up near a singularity.

use pkm::kinetostatics::{analyze, classify_configuration, DEFAULT_SINGULARITY_TOL};
use pkm::mechanism::{JointVector, MechanismModel, Pose};

fn main() -> pkm::Result<()> {
    let biglide = MechanismModel::biglide(5.0)?;
    let bipod = MechanismModel::bipod([[0.0, 0.0], [10.0, 0.0]])?;
    let cases = [
        ("biglide, strut crossing y = 0", &biglide, Pose::planar(0.0, 0.0), vec![5.0, -5.0]),
        ("biglide, struts vertical", &biglide, Pose::planar(0.0, 5.0), vec![0.0, 0.0]),
        ("biglide, generic", &biglide, Pose::planar(0.0, 4.0), vec![3.0, -3.0]),
        ("bipod, leg 1 at zero length", &bipod, Pose::planar(0.0, 0.0), vec![0.0, 10.0]),
        ("bipod, generic", &bipod, Pose::planar(5.0, 5.0), vec![50f64.sqrt(), 50f64.sqrt()]),
    ];
    for (name, m, p, q) in cases {
        let class = classify_configuration(m, &p, &JointVector::new(q), DEFAULT_SINGULARITY_TOL)?;
        println!("{name:<32} {}", class.name());
    }

    let m = MechanismModel::biglide(20.0)?;
    let mode = m.default_working_mode();
    for y in [2.0, 1.0, 0.1, 0.01] {
        let p = Pose::planar(0.0, y);
        let q = m.inverse_kinematics(&p, &mode)?;
        println!("y = {y:<5} kappa = {:.1}", analyze(&m, &p, &q)?.kappa);
    }
    Ok(())
}
