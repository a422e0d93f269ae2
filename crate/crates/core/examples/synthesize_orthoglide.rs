//! Leg length of an Orthoglide whose 200 mm cube keeps the amplification
//! factors within [0.6, 1.7].

use pkm::synthesis::{synthesize_orthoglide, SynthesisSpec};
use pkm::workspace::FactorBounds;

fn main() -> pkm::Result<()> {
    let spec = SynthesisSpec::new(200.0, FactorBounds::new(0.6, 1.7)?)?;
    let res = synthesize_orthoglide(&spec)?;
    println!("L = {:.2} mm", res.leg_length);
    println!("cube centre {:?}, edge {}", res.cube_center, res.cube_edge);
    println!("factors on the lattice: {:?}", res.achieved_factor_range);
    for (i, r) in res.joint_ranges.iter().enumerate() {
        println!("rho_{} in [{:.2}, {:.2}]", i + 1, r.min, r.max);
    }
    Ok(())
}
