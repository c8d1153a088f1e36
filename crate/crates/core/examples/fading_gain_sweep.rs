//! Gains of the fitted harvester under Rayleigh fading and two-antenna phase
//! sweeping over input power, with and without a sensitivity floor.

use wptlab::gain::{sweep, GainMode, QuadratureSettings};
use wptlab::harvester::LogPolyFitModel;
use wptlab::units::dbm_grid;

fn main() -> wptlab::Result<()> {
    let cw = LogPolyFitModel::new(-0.0669, -0.1317, -6.3801, (1e-7, 3.2e-4))?;
    let floored = cw.with_sensitivity(3e-7)?;
    let q = QuadratureSettings::default();
    let grid = dbm_grid(-40.0, -5.0, 5.0);

    let fading = sweep(&cw, &grid, GainMode::Fading, &q);
    let fading_floor = sweep(&floored, &grid, GainMode::Fading, &q);
    let td = sweep(&cw, &grid, GainMode::Td2, &q);

    println!("{:>8} {:>10} {:>10} {:>14} {:>10}", "P [dBm]", "e_rfdc", "e_fading", "e_fading floor", "e_td");
    for i in 0..grid.len() {
        println!(
            "{:>8} {:>10.4} {:>10.4} {:>14.4} {:>10.4}{}",
            grid[i],
            fading[i].e_rfdc,
            fading[i].gain,
            fading_floor[i].gain,
            td[i].gain,
            if fading[i].extrapolated_flag { "  (extrapolated)" } else { "" }
        );
    }
    Ok(())
}
