//! Dextrous region of the biglide drawn as text.

use pkm::workspace::{dextrous_region, sweep_grid, AxisRange, FactorBounds, Region};
use pkm::mechanism::MechanismModel;

fn main() -> pkm::Result<()> {
    let m = MechanismModel::biglide(5.0)?;
    let (nx, ny) = (41, 21);
    let region = Region::new(vec![AxisRange::new(-5.0, 5.0, nx)?, AxisRange::new(0.0, 5.0, ny)?])?;
    let grid = sweep_grid(&m, &region, &m.default_working_mode())?;
    let mask = dextrous_region(&grid, &FactorBounds::new(0.6, 1.7)?);
    // the sliders run along x, so every row is uniform;
    // '#' dextrous, '.' reachable, ' ' out of reach; y grows upwards
    for iy in (0..ny).rev() {
        let row: String = (0..nx)
            .map(|ix| {
                let k = ix * ny + iy;
                match (mask[k], grid.cells[k].reachable) {
                    (true, _) => '#',
                    (false, true) => '.',
                    _ => ' ',
                }
            })
            .collect();
        println!("{row}");
    }
    Ok(())
}
