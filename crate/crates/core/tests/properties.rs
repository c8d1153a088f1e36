use proptest::prelude::*;
use statrs::function::gamma::gamma;

use wptlab::gain::{e_fading, fading_integral, g_td, g_wf, td2_integral, QuadratureSettings};
use wptlab::harvester::{fit_logpoly, FitDataset, LogPolyFitModel, Scheme, TaylorDiodeModel, DiodeParams};
use wptlab::monte_carlo::estimate_moments;
use wptlab::signal::{synthesize, SampledSignal, TransmitConfig, WaveformSpec};
use wptlab::units::{dbm_grid, dbm_to_watts, watts_to_dbm};

fn taylor() -> TaylorDiodeModel {
    TaylorDiodeModel::from_diode(&DiodeParams::default(), 50.0).unwrap()
}

fn tight() -> QuadratureSettings {
    QuadratureSettings {
        rel_tol: 1e-13,
        abs_tol: 1e-300,
        ..Default::default()
    }
}

fn binomial(n: u64, k: u64) -> f64 {
    (1..=k).fold(1.0, |acc, i| acc * (n - k + i) as f64 / i as f64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn zdc_monotone_in_each_moment(m2 in 0.0..1e-2f64, k in 1.0..20.0f64, d2 in 0.0..1e-3f64, d4 in 0.0..1e-4f64) {
        let model = taylor();
        let m4 = k * (m2 + d2).powi(2);
        let base = model.zdc_from_moments(m2, m4).unwrap().total();
        prop_assert!(model.zdc_from_moments(m2 + d2, m4).unwrap().total() >= base);
        prop_assert!(model.zdc_from_moments(m2, m4 + d4).unwrap().total() >= base);
    }

    #[test]
    fn fading_never_hurts_the_fourth_order_model(dbm in -60.0..20.0f64) {
        let model = taylor();
        let p = dbm_to_watts(dbm);
        let faded = model.zdc_closed_form(p, Scheme::CwCscgFading).unwrap().total();
        let flat = model.zdc_closed_form(p, Scheme::CwNoFading).unwrap().total();
        prop_assert!(faded > flat);
    }

    #[test]
    fn diversity_factor_grows_below_two(m in 1u32..5000) {
        let f = Scheme::TdCw { m }.fourth_order_factor().unwrap();
        let next = Scheme::TdCw { m: m + 1 }.fourth_order_factor().unwrap();
        prop_assert!((1.0..2.0).contains(&f));
        prop_assert!(next > f);
        prop_assert_eq!(f, g_td(m).unwrap());
        let p = 1e-5;
        let model = taylor();
        let (more, fewer) = (Scheme::TdCw { m: m + 1 }, Scheme::TdCw { m });
        let z_more = model.zdc_closed_form(p, more).unwrap().total();
        let z_fewer = model.zdc_closed_form(p, fewer).unwrap().total();
        prop_assert!(z_more >= z_fewer);
    }

    #[test]
    fn waveform_gain_at_least_one(n in 1u32..10_000) {
        prop_assert!(g_wf(n).unwrap() >= 1.0);
        prop_assert!(g_wf(n + 1).unwrap() > g_wf(n).unwrap());
    }

    #[test]
    fn noiseless_fit_recovers_coefficients(
        a in -0.2..-1e-3f64,
        b in -2.0..2.0f64,
        c in -15.0..0.0f64,
        start in -50.0..-20.0f64,
        step in 1.0..5.0f64,
        n in 3usize..15,
    ) {
        let truth = LogPolyFitModel::new(a, b, c, (1e-12, 1.0)).unwrap();
        let powers: Vec<f64> = (0..n).map(|i| dbm_to_watts(start + step * i as f64)).collect();
        let data = FitDataset::synthesize(&truth, &powers).unwrap();
        let fit = fit_logpoly(&data, 2).unwrap().model;
        prop_assert!((fit.a - a).abs() <= 1e-9, "a: {} vs {}", fit.a, a);
        prop_assert!((fit.b - b).abs() <= 1e-9, "b: {} vs {}", fit.b, b);
        prop_assert!((fit.c - c).abs() <= 1e-9, "c: {} vs {}", fit.c, c);
    }

    #[test]
    fn fit_is_continuous_away_from_the_floor(dbm in -60.0..10.0f64) {
        let p_min = 1e-6;
        let p = dbm_to_watts(dbm);
        prop_assume!((p / p_min).ln().abs() > 1e-6);
        let m = LogPolyFitModel::new(-0.0669, -0.1317, -6.3801, (1e-7, 3.2e-4))
            .unwrap()
            .with_sensitivity(p_min)
            .unwrap();
        let (lo, hi) = (m.eval(p), m.eval(p * (1.0 + 1e-10)));
        prop_assert!((hi - lo).abs() <= 1e-8 * lo.abs() + 1e-300);
    }

    #[test]
    fn gamma_oracle(d in -0.9..6.0f64) {
        let v = fading_integral(0.0, d, 0.0, &tight()).unwrap();
        let expect = gamma(d + 1.0);
        prop_assert!(((v - expect) / expect).abs() <= 1e-10, "d={}: {} vs {}", d, v, expect);
    }

    #[test]
    fn raising_the_floor_never_raises_the_fading_gain(
        dbm in -40.0..-5.0f64,
        floor_lo in -60.0..-35.0f64,
        extra in 0.1..10.0f64,
    ) {
        let base = LogPolyFitModel::new(-0.0669, -0.1317, -6.3801, (1e-7, 3.2e-4)).unwrap();
        let q = QuadratureSettings::default();
        let p = dbm_to_watts(dbm);
        let lo = e_fading(&base.with_sensitivity(dbm_to_watts(floor_lo)).unwrap(), p, &q).unwrap();
        let hi = e_fading(&base.with_sensitivity(dbm_to_watts(floor_lo + extra)).unwrap(), p, &q).unwrap();
        prop_assert!(hi <= lo * (1.0 + 1e-9), "{} > {}", hi, lo);
    }

    #[test]
    fn moments_obey_jensen(samples in prop::collection::vec(-1e3..1e3f64, 2..400)) {
        let e = estimate_moments(&SampledSignal::new(1.0, samples).unwrap()).unwrap();
        prop_assert!(e.m4 >= e.m2 * e.m2 * (1.0 - 1e-12));
        prop_assert!(e.se_m2 >= 0.0 && e.se_m4 >= 0.0);
    }

    #[test]
    fn synthesis_is_pure(seed in any::<u64>(), m in 1usize..4) {
        let w = WaveformSpec::multisine(1e-4, 50e6, 3, 1e6);
        let cfg = TransmitConfig::equal_gain(m, 2e6);
        let a = synthesize(&w, &cfg, 2e-6, 4e9, seed).unwrap();
        let b = synthesize(&w, &cfg, 2e-6, 4e9, seed).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn dbm_round_trip(dbm in -150.0..60.0f64) {
        prop_assert!((watts_to_dbm(dbm_to_watts(dbm)) - dbm).abs() < 1e-9);
    }
}

#[test]
fn binomial_oracle() {
    for k in 1..=6u64 {
        let v = td2_integral(0.0, k as f64, 0.0, &tight()).unwrap();
        let expect = binomial(2 * k, k) / 2f64.powi(k as i32);
        assert!(((v - expect) / expect).abs() <= 1e-10, "k={k}: {v} vs {expect}");
    }
}

#[test]
fn average_power_is_preserved_by_phase_sweeping() {
    // E|h|²/M = 1 for unit channels, so the received power equals P/Λ
    let p = 2e-5;
    for (m, path_loss) in [(1, 1.0), (2, 1.0), (3, 4.0), (4, 10.0)] {
        let mut cfg = TransmitConfig::equal_gain(m, 1e6);
        cfg.path_loss = path_loss;
        for w in [WaveformSpec::cw(p, 20e6), WaveformSpec::multisine(p, 20e6, 4, 1e6)] {
            let sig = synthesize(&w, &cfg, 4e-3, 200e6, 17).unwrap();
            let got = sig.mean_power();
            let expect = p / path_loss;
            assert!((got - expect).abs() < 0.05 * expect, "M={m} {w:?}: {got} vs {expect}");
        }
    }
}

#[test]
fn flat_model_has_unit_gains_everywhere() {
    let m = LogPolyFitModel::new(0.0, 1.0, -2.0, (1e-9, 1.0)).unwrap();
    let q = QuadratureSettings::default();
    for dbm in dbm_grid(-50.0, 0.0, 10.0) {
        let p = dbm_to_watts(dbm);
        assert!((e_fading(&m, p, &q).unwrap() - 1.0).abs() < 1e-9);
        assert!((wptlab::gain::e_td2(&m, p, &q).unwrap() - 1.0).abs() < 1e-9);
    }
}
