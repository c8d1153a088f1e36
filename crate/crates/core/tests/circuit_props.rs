use wptlab::circuit::{
    steady_state_pdc, steady_state_pdc_with, transient_with, CircuitParams, CircuitScheme, DriveSettings, Integrator,
    SimSettings, TransientOptions, TransientTrace,
};
use wptlab::signal::{synthesize, TransmitConfig, WaveformSpec};
use wptlab::units::dbm_to_watts;

/// Trace of the carrier-scaled circuit under a CW drive at the scaled carrier.
fn scaled_trace(dbm: f64, integrator: Integrator, cycles: f64) -> (CircuitParams, TransientTrace) {
    let c = CircuitParams::default();
    let f0 = 2.45e9 * c.freq_scale;
    let fs = 64.0 * f0;
    let duration = cycles / f0;
    let drive = synthesize(
        &WaveformSpec::cw(dbm_to_watts(dbm), f0),
        &TransmitConfig::equal_gain(1, 1e6),
        duration + 2.0 / fs,
        fs,
        0,
    )
    .unwrap();
    let scaled = c.carrier_scaled();
    let opts = TransientOptions {
        integrator,
        ..Default::default()
    };
    (scaled, transient_with(&scaled, &drive, 1.0 / fs, duration, &opts).unwrap())
}

fn trapezoid(t: &[f64], f: impl Fn(usize) -> f64) -> f64 {
    (1..t.len()).map(|k| 0.5 * (t[k] - t[k - 1]) * (f(k) + f(k - 1))).sum()
}

#[test]
fn capacitor_charge_is_conserved() {
    for integrator in [Integrator::Trapezoidal, Integrator::BackwardEuler] {
        let (c, tr) = scaled_trace(-5.0, integrator, 400.0);
        let last = tr.len() - 1;

        // C1 sits at the diode anode in the default topology
        let i_c1 = |k: usize| tr.i_l[k] - tr.i_d[k];
        let q1 = trapezoid(&tr.t, i_c1);
        let through1 = trapezoid(&tr.t, |k| i_c1(k).abs());
        let stored1 = c.c1 * (tr.v_in[last] - tr.v_in[0]);
        assert!(
            (q1 - stored1).abs() <= 1e-3 * through1,
            "{integrator:?} C1: {q1:e} vs {stored1:e} (throughput {through1:e})"
        );

        let i_c2 = |k: usize| tr.i_d[k] - tr.v_out[k] / c.r_load;
        let q2 = trapezoid(&tr.t, i_c2);
        let through2 = trapezoid(&tr.t, |k| i_c2(k).abs());
        let stored2 = c.c2 * (tr.v_out[last] - tr.v_out[0]);
        assert!(
            (q2 - stored2).abs() <= 1e-3 * through2,
            "{integrator:?} C2: {q2:e} vs {stored2:e} (throughput {through2:e})"
        );
    }
}

#[test]
fn diode_law_holds_at_every_step() {
    let (c, tr) = scaled_trace(0.0, Integrator::Trapezoidal, 200.0);
    assert!(tr.converged.iter().all(|&ok| ok));
    assert!(tr.max_residual() <= 1e-12, "residual {:e}", tr.max_residual());
    for (k, v_d) in tr.v_d().enumerate().skip(1) {
        let expect = c.diode.current(v_d);
        assert!((tr.i_d[k] - expect).abs() <= 1e-12 + 1e-9 * expect.abs());
    }
}

#[test]
fn harvested_power_never_exceeds_input() {
    let d = DriveSettings::default();
    let c = CircuitParams::default();
    for scheme in [CircuitScheme::Cw, CircuitScheme::Multisine { n: 4 }, CircuitScheme::TdCw { m: 2 }] {
        for dbm in [-30.0, -10.0, 5.0] {
            let p = dbm_to_watts(dbm);
            let (w, cfg) = scheme.drive(p, &d);
            let r = steady_state_pdc(&c, &w, &cfg, 2, 4).unwrap();
            assert!(r.p_dc >= 0.0);
            assert!(r.p_dc <= r.p_in, "{scheme} {dbm} dBm: {:e} > {:e}", r.p_dc, r.p_in);
            assert!(r.p_in <= 1.05 * p, "{scheme} {dbm} dBm: absorbed {:e} of {p:e}", r.p_in);
        }
    }
}

#[test]
fn dc_power_rises_with_input_power() {
    let c = CircuitParams::default();
    let d = DriveSettings::default();
    let mut last = 0.0;
    for dbm in [-35.0, -30.0, -25.0, -20.0, -15.0, -10.0, -5.0, 0.0] {
        let (w, cfg) = CircuitScheme::Cw.drive(dbm_to_watts(dbm), &d);
        let p_dc = steady_state_pdc(&c, &w, &cfg, 1, 0).unwrap().p_dc;
        assert!(p_dc > last, "{dbm} dBm: {p_dc:e} <= {last:e}");
        last = p_dc;
    }
}

#[test]
fn halving_the_step_barely_moves_the_result() {
    let c = CircuitParams::default();
    let d = DriveSettings::default();
    for scheme in [CircuitScheme::Cw, CircuitScheme::Multisine { n: 4 }] {
        let (w, cfg) = scheme.drive(dbm_to_watts(-10.0), &d);
        let run = |spc| {
            let s = SimSettings {
                samples_per_carrier: spc,
                ..Default::default()
            };
            steady_state_pdc_with(&c, &w, &cfg, 1, 0, &s).unwrap().p_dc
        };
        let (coarse, fine) = (run(64), run(128));
        let change = ((coarse - fine) / fine).abs();
        assert!(change < 5e-3, "{scheme}: {coarse:e} vs {fine:e} ({:.3}%)", 100.0 * change);
    }
}

#[test]
fn random_drives_are_reproducible_from_the_seed() {
    let c = CircuitParams::default();
    let (w, cfg) = CircuitScheme::TdCw { m: 2 }.drive(dbm_to_watts(-15.0), &DriveSettings::default());
    let a = steady_state_pdc(&c, &w, &cfg, 2, 11).unwrap();
    let b = steady_state_pdc(&c, &w, &cfg, 2, 11).unwrap();
    let other = steady_state_pdc(&c, &w, &cfg, 2, 12).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.p_dc, other.p_dc);
    assert!(a.p_dc_std_error > 0.0);
}
