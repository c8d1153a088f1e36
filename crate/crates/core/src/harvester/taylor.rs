//! Truncated (fourth-order) Taylor expansion of the diode current and the
//! `z_dc` figure of merit built from the second and fourth moments of the
//! received signal.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::gain::{g_mod, g_td, g_wf};
use crate::signal::ModulationDist;

/// Relative slack allowed on Jensen's inequality `m4 >= m2²` before moments are
/// rejected as corrupt.
pub const JENSEN_SLACK: f64 = 1e-9;

/// Ideal-exponential (Shockley) diode parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiodeParams {
    /// Reverse saturation current (A).
    pub i_s: f64,
    /// Ideality factor.
    pub n: f64,
    /// Thermal voltage (V).
    pub v_t: f64,
}

impl DiodeParams {
    pub fn new(i_s: f64, n: f64, v_t: f64) -> Result<Self> {
        let d = Self { i_s, n, v_t };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.i_s > 0.0 && self.i_s.is_finite()) {
            return Err(invalid(format!("saturation current must be > 0, got {}", self.i_s)));
        }
        if !(self.n >= 1.0 && self.n.is_finite()) {
            return Err(invalid(format!("ideality factor must be >= 1, got {}", self.n)));
        }
        if !(self.v_t > 0.0 && self.v_t.is_finite()) {
            return Err(invalid(format!("thermal voltage must be > 0, got {}", self.v_t)));
        }
        Ok(())
    }

    /// `n · v_t`.
    pub fn n_vt(&self) -> f64 {
        self.n * self.v_t
    }

    /// Shockley current `i_s (e^{v/(n v_t)} - 1)`.
    pub fn current(&self, v_d: f64) -> f64 {
        self.i_s * (v_d / self.n_vt()).exp_m1()
    }
}

impl Default for DiodeParams {
    /// 5 µA saturation current, n = 1.05, v_t = 25.86 mV.
    fn default() -> Self {
        Self {
            i_s: 5e-6,
            n: 1.05,
            v_t: 0.02586,
        }
    }
}

/// Coefficients of the fourth-order `z_dc` metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaylorDiodeModel {
    /// A/V².
    pub k2: f64,
    /// A/V⁴.
    pub k4: f64,
    /// Antenna resistance (Ω).
    pub r_ant: f64,
}

/// The two terms of `z_dc`, kept apart so gains on the fourth-order term can
/// be inspected directly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZdcTerms {
    pub second_order: f64,
    pub fourth_order: f64,
}

impl ZdcTerms {
    pub fn total(&self) -> f64 {
        self.second_order + self.fourth_order
    }
}

/// Transmission scheme for the closed-form `z_dc`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scheme {
    CwNoFading,
    CwCscgFading,
    TdCw { m: u32 },
    TdMod { m: u32, dist: ModulationDist },
    TdWf { m: u32, n: u32 },
}

impl Scheme {
    /// Multiplier `F` on the deterministic fourth-order term `(3/2) k4 R² P²`.
    pub fn fourth_order_factor(&self) -> Result<f64> {
        Ok(match *self {
            Scheme::CwNoFading => 1.0,
            Scheme::CwCscgFading => 2.0,
            Scheme::TdCw { m } => g_td(m)?,
            Scheme::TdMod { m, dist } => g_td(m)? * g_mod(dist)?,
            Scheme::TdWf { m, n } => g_td(m)? * g_wf(n)?,
        })
    }
}

impl TaylorDiodeModel {
    pub fn new(k2: f64, k4: f64, r_ant: f64) -> Result<Self> {
        if !(k2 > 0.0 && k4 > 0.0 && r_ant > 0.0) {
            return Err(invalid(format!(
                "Taylor coefficients and antenna resistance must be positive (k2={k2}, k4={k4}, r_ant={r_ant})"
            )));
        }
        Ok(Self { k2, k4, r_ant })
    }

    /// `k_i = i_s / (i! (n v_t)^i)` for i = 2, 4.
    pub fn from_diode(d: &DiodeParams, r_ant: f64) -> Result<Self> {
        d.validate()?;
        let nvt = d.n_vt();
        Self::new(d.i_s / (2.0 * nvt.powi(2)), d.i_s / (24.0 * nvt.powi(4)), r_ant)
    }

    /// `z_dc = k2 R m2 + k4 R² m4`.
    pub fn zdc_from_moments(&self, m2: f64, m4: f64) -> Result<ZdcTerms> {
        if !(m2 >= 0.0) || !m4.is_finite() {
            return Err(invalid(format!("moments must be finite with m2 >= 0 (m2={m2}, m4={m4})")));
        }
        let m2_sq = m2 * m2;
        if m4 < m2_sq * (1.0 - JENSEN_SLACK) {
            return Err(Error::InvalidMoments { m2_sq, m4 });
        }
        Ok(ZdcTerms {
            second_order: self.k2 * self.r_ant * m2,
            fourth_order: self.k4 * self.r_ant.powi(2) * m4,
        })
    }

    /// Closed-form average `z_dc` for a scheme at average RF input power `p_rf_avg`.
    pub fn zdc_closed_form(&self, p_rf_avg: f64, scheme: Scheme) -> Result<ZdcTerms> {
        if !(p_rf_avg > 0.0 && p_rf_avg.is_finite()) {
            return Err(invalid(format!("average RF power must be > 0, got {p_rf_avg}")));
        }
        let factor = scheme.fourth_order_factor()?;
        Ok(ZdcTerms {
            second_order: self.k2 * self.r_ant * p_rf_avg,
            fourth_order: 1.5 * self.k4 * self.r_ant.powi(2) * p_rf_avg.powi(2) * factor,
        })
    }
}
