//! Closed-form fourth-order gains and the quadrature-based fading and
//! transmit-diversity gains of the curve-fit harvester model.

mod closed_form;
mod integrals;

pub use closed_form::{g_mod, g_td, g_wf};
pub use integrals::{e_fading, e_td2, fading_integral, td2_integral};
pub use crate::quadrature::QuadratureSettings;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::harvester::LogPolyFitModel;
use crate::units::dbm_to_watts;

/// Which channel randomness the gain factor accounts for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GainMode {
    /// CSCG fading, `|h|² ~ Exp(1)`.
    Fading,
    /// Two antennas with independent uniform phases.
    Td2,
}

/// Efficiency without channel randomness times the gain factor it induces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainDecomposition {
    pub e_rfdc: f64,
    pub gain_factor: f64,
    pub combined: f64,
}

/// Splits the average efficiency into `e_rfdc × gain`.
///
/// `e_rfdc` uses the polynomial without the sensitivity floor, the same
/// normalization the gain integrals use, so `combined` is the average
/// efficiency even when `p_rf_avg` sits below the floor.
pub fn decompose(
    m: &LogPolyFitModel,
    p_rf_avg: f64,
    mode: GainMode,
    q: &QuadratureSettings,
) -> Result<GainDecomposition> {
    let gain_factor = match mode {
        GainMode::Fading => e_fading(m, p_rf_avg, q)?,
        GainMode::Td2 => e_td2(m, p_rf_avg, q)?,
    };
    let e_rfdc = m.polynomial_power(p_rf_avg) / p_rf_avg;
    Ok(GainDecomposition {
        e_rfdc,
        gain_factor,
        combined: e_rfdc * gain_factor,
    })
}

/// One row of a gain sweep. `std_error` is present for Monte Carlo rows;
/// `error` is set when the row could not be computed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GainRow {
    pub prf_dbm: f64,
    pub e_rfdc: f64,
    pub gain: f64,
    pub combined: f64,
    pub extrapolated_flag: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_error: Option<f64>,
    pub error: Option<String>,
}

impl GainRow {
    pub fn failed(prf_dbm: f64, extrapolated_flag: bool, message: String) -> Self {
        Self {
            prf_dbm,
            e_rfdc: f64::NAN,
            gain: f64::NAN,
            combined: f64::NAN,
            extrapolated_flag,
            std_error: None,
            error: Some(message),
        }
    }
}

/// Quadrature gains over a grid of average input powers in dBm.
pub fn sweep(m: &LogPolyFitModel, prf_dbm: &[f64], mode: GainMode, q: &QuadratureSettings) -> Vec<GainRow> {
    prf_dbm
        .par_iter()
        .map(|&dbm| {
            let p = dbm_to_watts(dbm);
            let extrapolated = !m.in_range(p);
            match decompose(m, p, mode, q) {
                Ok(g) => GainRow {
                    prf_dbm: dbm,
                    e_rfdc: g.e_rfdc,
                    gain: g.gain_factor,
                    combined: g.combined,
                    extrapolated_flag: extrapolated,
                    std_error: None,
                    error: None,
                },
                Err(e) => GainRow::failed(dbm, extrapolated, e.to_string()),
            }
        })
        .collect()
}
