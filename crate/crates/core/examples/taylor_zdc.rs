//! Taylor-series harvester figure of merit for each transmission scheme at a
//! few input powers.

use wptlab::gain::g_wf;
use wptlab::harvester::{DiodeParams, Scheme, TaylorDiodeModel};
use wptlab::signal::ModulationDist;
use wptlab::units::dbm_to_watts;

fn main() -> wptlab::Result<()> {
    let diode = DiodeParams::default();
    let model = TaylorDiodeModel::from_diode(&diode, 50.0)?;
    println!("k2 = {:.5}, k4 = {:.5}, R_ant = {} ohm", model.k2, model.k4, model.r_ant);

    let schemes = [
        ("cw", Scheme::CwNoFading),
        ("cw, CSCG fading", Scheme::CwCscgFading),
        ("td-cw M=2", Scheme::TdCw { m: 2 }),
        ("td-cw M=4", Scheme::TdCw { m: 4 }),
        ("td-mod M=2 cscg", Scheme::TdMod { m: 2, dist: ModulationDist::Cscg }),
        ("td-wf M=2 N=8", Scheme::TdWf { m: 2, n: 8 }),
    ];
    println!("\n{:<18} {:>9} {:>12} {:>12} {:>12}", "scheme", "P [dBm]", "2nd order", "4th order", "z_dc");
    for dbm in [-30.0, -20.0, -10.0] {
        for (name, scheme) in schemes {
            let z = model.zdc_closed_form(dbm_to_watts(dbm), scheme)?;
            println!(
                "{name:<18} {dbm:>9} {:>12.4e} {:>12.4e} {:>12.4e}",
                z.second_order,
                z.fourth_order,
                z.total()
            );
        }
    }

    // the same numbers from the moments of an 8-tone multisine
    let p = dbm_to_watts(-20.0);
    let m4 = 1.5 * p * p * g_wf(8)?;
    let z = model.zdc_from_moments(p, m4)?;
    println!("\n8-tone multisine from moments at -20 dBm: z_dc = {:.4e}", z.total());
    Ok(())
}
