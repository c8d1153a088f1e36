//! Fit the log-polynomial harvester model to noisy synthetic measurements and
//! store it as JSON.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wptlab::harvester::{fit_logpoly, read_model, write_model, FitDataset, LogPolyFitModel};
use wptlab::units::{dbm_grid, dbm_to_watts, watts_to_dbm};

fn main() -> wptlab::Result<()> {
    let truth = LogPolyFitModel::new(-0.0669, -0.1317, -6.3801, (1e-7, 3.2e-4))?;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let points = dbm_grid(-40.0, -5.0, 2.5)
        .into_iter()
        .map(|dbm| {
            let p = dbm_to_watts(dbm);
            // ±0.2 dB measurement scatter
            let noise_db = 0.4 * (rng.random::<f64>() - 0.5);
            (p, truth.eval(p) * 10f64.powf(noise_db / 10.0))
        })
        .collect();
    let data = FitDataset::new(points)?;

    let report = fit_logpoly(&data, 2)?;
    let m = report.model;
    println!("true   a={:+.4} b={:+.4} c={:+.4}", truth.a, truth.b, truth.c);
    println!("fitted a={:+.4} b={:+.4} c={:+.4}  rmse(ln) = {:.4}", m.a, m.b, m.c, report.rmse_log);

    for dbm in [-40.0, -30.0, -20.0, -10.0] {
        let p = dbm_to_watts(dbm);
        println!(
            "  {dbm:>6} dBm in -> {:>7.2} dBm out, efficiency {:.3}, local exponent {:.3}",
            watts_to_dbm(m.eval(p)),
            m.eval(p) / p,
            m.local_exponent(p)
        );
    }

    let mut json = Vec::new();
    write_model(&m, &mut json)?;
    println!("\n{}", String::from_utf8_lossy(&json));
    assert_eq!(read_model(&json[..])?, m);
    Ok(())
}
