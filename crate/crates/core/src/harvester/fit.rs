//! Curve-fit harvester model: a polynomial of degree 1 or 2 in the
//! natural-log-watt domain, `ln P_dc = a (ln P_rf)² + b ln P_rf + c`, with an
//! optional sensitivity floor below which no DC power is produced.
//!
//! Powers inside the logarithms are in watts. The published coefficient sets
//! only reproduce plausible efficiencies (≈11 % for the CW set at −20 dBm)
//! under that convention; it is an inferred unit, not a stated one.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::solve_dense;

/// Fitted model. Serialized with the field names used in model files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogPolyFitModel {
    pub degree: u8,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// Range of input powers (W) the model was fitted on.
    pub valid_range_w: (f64, f64),
    /// Sensitivity floor (W); inputs below it harvest nothing.
    #[serde(default)]
    pub p_rf_min_w: Option<f64>,
}

/// Result of evaluating the model at one input power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitEvaluation {
    pub p_dc: f64,
    /// True when the input lies outside `valid_range_w`.
    pub extrapolated: bool,
}

impl LogPolyFitModel {
    pub fn new(a: f64, b: f64, c: f64, valid_range_w: (f64, f64)) -> Result<Self> {
        let degree = if a == 0.0 { 1 } else { 2 };
        let m = Self {
            degree,
            a,
            b,
            c,
            valid_range_w,
            p_rf_min_w: None,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn with_sensitivity(mut self, p_rf_min_w: f64) -> Result<Self> {
        self.p_rf_min_w = Some(p_rf_min_w);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.valid_range_w;
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return Err(invalid(format!("valid range must be a nonempty positive interval, got ({lo}, {hi})")));
        }
        if !(self.a.is_finite() && self.b.is_finite() && self.c.is_finite()) {
            return Err(invalid("fit coefficients must be finite"));
        }
        match self.degree {
            1 if self.a != 0.0 => return Err(invalid("degree-1 model must have a = 0")),
            1 | 2 => {}
            d => return Err(invalid(format!("degree must be 1 or 2, got {d}"))),
        }
        if let Some(p) = self.p_rf_min_w {
            if !(p >= 0.0 && p.is_finite()) {
                return Err(invalid(format!("sensitivity floor must be >= 0, got {p}")));
            }
        }
        Ok(())
    }

    /// Polynomial prediction without the sensitivity floor.
    pub fn polynomial_power(&self, p_rf: f64) -> f64 {
        let l = p_rf.ln();
        (self.a * l * l + self.b * l + self.c).exp()
    }

    /// DC power for an input power, honoring the sensitivity floor.
    pub fn eval(&self, p_rf: f64) -> f64 {
        match self.p_rf_min_w {
            Some(floor) if p_rf < floor => 0.0,
            _ => self.polynomial_power(p_rf),
        }
    }

    pub fn evaluate(&self, p_rf: f64) -> FitEvaluation {
        FitEvaluation {
            p_dc: self.eval(p_rf),
            extrapolated: !self.in_range(p_rf),
        }
    }

    pub fn in_range(&self, p_rf: f64) -> bool {
        let (lo, hi) = self.valid_range_w;
        p_rf >= lo && p_rf <= hi
    }

    /// Local log-log slope at `p_rf_avg`: `d = 2 a ln P̄ + b`.
    pub fn local_exponent(&self, p_rf_avg: f64) -> f64 {
        2.0 * self.a * p_rf_avg.ln() + self.b
    }
}

/// Measured `(P_rf, P_dc)` pairs in watts.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FitDataset {
    points: Vec<(f64, f64)>,
}

impl FitDataset {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        for (i, &(p_rf, p_dc)) in points.iter().enumerate() {
            if !(p_rf > 0.0 && p_dc > 0.0 && p_rf.is_finite() && p_dc.is_finite()) {
                return Err(invalid(format!(
                    "point {i}: powers must be strictly positive (p_rf={p_rf}, p_dc={p_dc})"
                )));
            }
        }
        Ok(Self { points })
    }

    /// Noiseless samples of `model` at the given input powers.
    pub fn synthesize(model: &LogPolyFitModel, p_rf: &[f64]) -> Result<Self> {
        Self::new(p_rf.iter().map(|&p| (p, model.polynomial_power(p))).collect())
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn distinct_inputs(&self) -> usize {
        let mut xs: Vec<f64> = self.points.iter().map(|p| p.0).collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        xs.len()
    }
}

/// Fit summary returned next to the model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitReport {
    pub model: LogPolyFitModel,
    /// Root-mean-square residual of `ln P_dc`.
    pub rmse_log: f64,
}

/// Least-squares fit of `ln P_dc` against `ln P_rf`.
///
/// The normal equations are formed on mean-centered log inputs and the
/// coefficients are mapped back to the uncentered polynomial afterwards.
pub fn fit_logpoly(data: &FitDataset, degree: u8) -> Result<FitReport> {
    if degree != 1 && degree != 2 {
        return Err(invalid(format!("degree must be 1 or 2, got {degree}")));
    }
    let needed = degree as usize + 1;
    if data.distinct_inputs() < needed {
        return Err(Error::Fit(format!(
            "rank-deficient design: degree {degree} needs {needed} distinct input powers, got {}",
            data.distinct_inputs()
        )));
    }

    let xs: Vec<f64> = data.points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = data.points.iter().map(|p| p.1.ln()).collect();
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let spread = xs.iter().map(|x| (x - mean).abs()).fold(0.0, f64::max);
    let scale = if spread > 0.0 { spread } else { 1.0 };

    // basis on u = (x - mean) / scale
    let basis = |x: f64| -> [f64; 3] {
        let u = (x - mean) / scale;
        [u * u, u, 1.0]
    };

    let (alpha, beta, gamma) = if degree == 2 {
        let mut ata = [[0.0; 3]; 3];
        let mut aty = [0.0; 3];
        for (&x, &y) in xs.iter().zip(&ys) {
            let row = basis(x);
            for i in 0..3 {
                for j in 0..3 {
                    ata[i][j] += row[i] * row[j];
                }
                aty[i] += row[i] * y;
            }
        }
        let sol = solve_dense(ata, aty, 1e-13)
            .ok_or_else(|| Error::Fit("rank-deficient design matrix".into()))?;
        (sol[0], sol[1], sol[2])
    } else {
        let mut ata = [[0.0; 2]; 2];
        let mut aty = [0.0; 2];
        for (&x, &y) in xs.iter().zip(&ys) {
            let row = basis(x);
            let r = [row[1], row[2]];
            for i in 0..2 {
                for j in 0..2 {
                    ata[i][j] += r[i] * r[j];
                }
                aty[i] += r[i] * y;
            }
        }
        let sol = solve_dense(ata, aty, 1e-13)
            .ok_or_else(|| Error::Fit("rank-deficient design matrix".into()))?;
        (0.0, sol[0], sol[1])
    };

    // y = alpha u² + beta u + gamma, u = (x - mean)/scale
    let a = alpha / (scale * scale);
    let b = beta / scale - 2.0 * a * mean;
    let c = gamma - beta * mean / scale + a * mean * mean;

    let lo = data.points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = data.points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let model = LogPolyFitModel {
        degree,
        a,
        b,
        c,
        valid_range_w: (lo, hi),
        p_rf_min_w: None,
    };
    model.validate()?;

    let sse: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(&x, &y)| {
            let r = y - (a * x * x + b * x + c);
            r * r
        })
        .sum();
    Ok(FitReport {
        model,
        rmse_log: (sse / n).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::dbm_to_watts;

    fn cw_model() -> LogPolyFitModel {
        LogPolyFitModel::new(-0.0669, -0.1317, -6.3801, (1e-7, dbm_to_watts(-5.0))).unwrap()
    }

    #[test]
    fn cw_model_efficiency_at_minus_20_dbm() {
        let p_dc = cw_model().eval(1e-5);
        // exp(-0.0669 ln²(1e-5) - 0.1317 ln(1e-5) - 6.3801)
        assert!((p_dc - 1.0879e-6).abs() < 1e-10, "{p_dc}");
        assert!((p_dc / 1e-5 - 0.109).abs() < 0.001);
    }

    #[test]
    fn sensitivity_floor_zeroes_output() {
        let m = cw_model().with_sensitivity(1e-7).unwrap();
        assert_eq!(m.eval(1e-8), 0.0);
        assert!(m.eval(1e-7) > 0.0);
        assert!(m.evaluate(1e-8).extrapolated);
    }

    #[test]
    fn identity_model() {
        let m = LogPolyFitModel::new(0.0, 1.0, 0.0, (1e-6, 1e-3)).unwrap();
        assert_eq!(m.degree, 1);
        for p in [1e-9, 3.3e-6, 0.2] {
            assert!((m.eval(p) - p).abs() <= 1e-15 * p);
        }
    }

    #[test]
    fn invalid_models() {
        assert!(LogPolyFitModel::new(0.0, 1.0, 0.0, (1e-3, 1e-6)).is_err());
        assert!(cw_model().with_sensitivity(-1.0).is_err());
        let mut m = cw_model();
        m.degree = 1;
        assert!(m.validate().is_err());
    }

    #[test]
    fn two_point_line() {
        let data = FitDataset::new(vec![(1e-6, 1e-7), (1e-4, 1e-4)]).unwrap();
        let r = fit_logpoly(&data, 1).unwrap();
        let slope = (1e-4f64.ln() - 1e-7f64.ln()) / (1e-4f64.ln() - 1e-6f64.ln());
        let intercept = 1e-7f64.ln() - slope * 1e-6f64.ln();
        assert_eq!(r.model.a, 0.0);
        assert!((r.model.b - slope).abs() < 1e-12);
        assert!((r.model.c - intercept).abs() < 1e-10);
        assert!(r.rmse_log < 1e-12);
    }

    #[test]
    fn rank_deficiency() {
        let data = FitDataset::new(vec![(1e-5, 1e-6); 5]).unwrap();
        assert!(matches!(fit_logpoly(&data, 1), Err(Error::Fit(_))));
        let two = FitDataset::new(vec![(1e-5, 1e-6), (1e-4, 1e-5)]).unwrap();
        assert!(matches!(fit_logpoly(&two, 2), Err(Error::Fit(_))));
        assert!(fit_logpoly(&two, 3).is_err());
    }

    #[test]
    fn nonpositive_points_rejected() {
        assert!(FitDataset::new(vec![(1e-5, 0.0)]).is_err());
        assert!(FitDataset::new(vec![(-1.0, 1e-6)]).is_err());
    }
}
