//! Power unit conversions. Everything inside the library is in watts; dBm only
//! appears at I/O boundaries.

/// `P_W = 10^((dBm - 30) / 10)`.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

/// Evenly spaced grid from `start` to `stop` inclusive with the given step.
/// The last point is snapped to `stop` when it falls within half a step.
pub fn dbm_grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    if step <= 0.0 || stop < start {
        return if (stop - start).abs() < f64::EPSILON {
            vec![start]
        } else {
            Vec::new()
        };
    }
    let count = ((stop - start) / step + 0.5).floor() as usize + 1;
    (0..count).map(|i| start + step * i as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_points() {
        assert_eq!(dbm_to_watts(30.0), 1.0);
        assert!((dbm_to_watts(-20.0) - 1e-5).abs() < 1e-20);
        assert!((watts_to_dbm(1e-3)).abs() < 1e-12);
    }

    #[test]
    fn grid_is_inclusive() {
        let g = dbm_grid(-40.0, -5.0, 5.0);
        assert_eq!(g.len(), 8);
        assert_eq!(*g.last().unwrap(), -5.0);
        assert_eq!(dbm_grid(-20.0, -20.0, 1.0), vec![-20.0]);
    }
}
