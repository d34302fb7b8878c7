//! Truncated (a,b) integration windows.
//!
//! Coherent states at scale `a` spread over a b-range proportional to `a`, so
//! a rectangle either wastes nodes at small `a` or misses mass at large `a`.
//! A cone window widens the b-range (and its step) linearly with `a`.

use crate::error::{Error, Result};
use crate::grid::{LogGrid, UniformGrid};

/// One `a` row of a window: the `da` weight and the b-grid centred on `center`.
#[derive(Debug, Clone)]
pub struct WindowRow {
    pub a: f64,
    pub da: f64,
    pub b: UniformGrid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConeWindow {
    pub a_min: f64,
    pub a_max: f64,
    pub n_a: usize,
    pub b_center: f64,
    /// b half-width is `max(b_floor, b_slope·a)`.
    pub b_floor: f64,
    pub b_slope: f64,
    /// b step is `max(db_floor, db_slope·a)`.
    pub db_floor: f64,
    pub db_slope: f64,
}

impl ConeWindow {
    pub fn new(a_min: f64, a_max: f64, n_a: usize, b_center: f64) -> Result<Self> {
        if !(a_min > 0.0 && a_max > a_min && a_max.is_finite()) || n_a < 2 || !b_center.is_finite() {
            return Err(Error::Parameter(format!("cone window a ∈ [{a_min}, {a_max}] with {n_a} rows")));
        }
        Ok(Self { a_min, a_max, n_a, b_center, b_floor: 12.0, b_slope: 16.0, db_floor: 0.047, db_slope: 0.0235 })
    }

    /// Window used for resolution-of-identity and Husimi-mass checks at ħ = 1.
    /// Both the a-range and the b-extent limit the defect; the step sizes do not.
    pub fn default_identity() -> Self {
        let mut w = Self::new(0.002, 500.0, 300, 0.0).expect("valid constants");
        w.b_floor = 24.0;
        w.b_slope = 32.0;
        w
    }

    /// Coarser window for the intermediate-state integral of the evolution law.
    pub fn default_insertion(b_center: f64) -> Self {
        let mut w = Self::new(0.005, 50.0, 92, b_center).expect("valid constants");
        w.db_floor = 0.12;
        w.db_slope = 0.12;
        w
    }

    /// Scale the b-extent and step by ħ (coherent states have b-width ∝ ħ).
    pub fn scaled_for(&self, hbar: f64) -> Self {
        let mut w = self.clone();
        w.b_floor *= hbar;
        w.b_slope *= hbar;
        w.db_floor *= hbar;
        w.db_slope *= hbar;
        w
    }

    pub fn a_grid(&self) -> LogGrid {
        LogGrid::new(self.a_min, self.a_max, self.n_a).expect("validated bounds")
    }

    pub fn rows(&self) -> Vec<WindowRow> {
        let g = self.a_grid();
        g.points()
            .iter()
            .zip(g.weights())
            .map(|(&a, &da)| {
                let half = self.b_floor.max(self.b_slope * a);
                let step = self.db_floor.max(self.db_slope * a);
                let n = 2 * (half / step).ceil() as usize + 1;
                let b = UniformGrid::new(self.b_center - half, self.b_center + half, n).expect("positive width");
                WindowRow { a, da, b }
            })
            .collect()
    }

    pub fn node_count(&self) -> usize {
        self.rows().iter().map(|r| r.b.n).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_widen_with_scale() {
        let w = ConeWindow::default_identity();
        let rows = w.rows();
        assert_eq!(rows.len(), 300);
        assert!((rows[0].b.stop - 24.0).abs() < 1e-12);
        let last = rows.last().unwrap();
        assert!((last.b.stop - 16000.0).abs() < 1e-9);
        assert!(last.b.step() <= 11.75 + 1e-12);
        assert!(rows.iter().all(|r| r.b.n % 2 == 1));
    }

    #[test]
    fn da_weights_integrate_log_measure() {
        let w = ConeWindow::new(0.1, 10.0, 200, 0.0).unwrap();
        let s: f64 = w.rows().iter().map(|r| r.da / r.a).sum();
        assert!((s - 100f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn bad_bounds() {
        assert!(ConeWindow::new(1.0, 0.5, 10, 0.0).is_err());
        assert!(ConeWindow::new(0.0, 0.5, 10, 0.0).is_err());
    }
}
