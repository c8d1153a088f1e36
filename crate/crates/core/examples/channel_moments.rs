//! Monte Carlo oracles against their closed forms and quadratures.

use num_complex::Complex64;
use wptlab::gain::{e_fading, e_td2, g_td, QuadratureSettings};
use wptlab::harvester::LogPolyFitModel;
use wptlab::monte_carlo::{mc_channel_fourth_moment, mc_fading_gain, mc_td_gain};
use wptlab::units::dbm_to_watts;

fn main() -> wptlab::Result<()> {
    let trials = 1_000_000;
    let seed = 2024;
    for m in [1, 2, 4, 8] {
        let h = vec![Complex64::new(1.0, 0.0); m];
        let r = mc_channel_fourth_moment(&h, trials, seed)?;
        println!(
            "E|h|^4/M^2, M={m}: {:.5} ± {:.5} (closed form {})",
            r.estimate,
            r.std_error,
            g_td(m as u32)?
        );
    }

    let model = LogPolyFitModel::new(-0.1105, -1.1468, -11.4342, (1e-7, 3.2e-4))?;
    let q = QuadratureSettings::default();
    let two = [Complex64::new(1.0, 0.0); 2];
    println!();
    for dbm in [-40.0, -20.0, -5.0] {
        let p = dbm_to_watts(dbm);
        let f = mc_fading_gain(&model, p, trials, seed)?;
        let t = mc_td_gain(&model, p, &two, trials, seed)?;
        println!(
            "{dbm:>5} dBm  fading {:.4} ± {:.4} vs {:.4}   td {:.4} ± {:.4} vs {:.4}",
            f.estimate,
            f.std_error,
            e_fading(&model, p, &q)?,
            t.estimate,
            t.std_error,
            e_td2(&model, p, &q)?
        );
    }
    Ok(())
}
