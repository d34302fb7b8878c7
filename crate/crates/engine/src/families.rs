//! Named states and separable symbols with closed forms.

use num_complex::Complex64 as C64;

use crate::affine::{AffineSymbol, PhasePoint};
use crate::error::{Error, Result};
use crate::grid::{HalfLineFunction, LogGrid, PlanckScale, UniformGrid};
use crate::phase::coherent_values;

#[derive(Debug, Clone, PartialEq)]
pub enum StateSpec {
    Coherent { a: f64, b: f64 },
    /// `x^k e^{-cx}`
    MonomialExp { k: f64, c: f64 },
    /// `Σ c_j φ_{a_j,b_j}`
    Superposition(Vec<(C64, PhasePoint)>),
}

impl StateSpec {
    /// Normalised samples on `grid`.
    pub fn build(&self, grid: &LogGrid, hb: PlanckScale) -> Result<HalfLineFunction> {
        let f = match self {
            StateSpec::Coherent { a, b } => coherent_values(PhasePoint::new(*a, *b)?, hb, grid),
            StateSpec::MonomialExp { k, c } => {
                if !(*k >= 0.0 && *c > 0.0) {
                    return Err(Error::Parameter(format!("monomial-exp needs k >= 0, c > 0, got k={k}, c={c}")));
                }
                HalfLineFunction::from_fn(grid, |x| C64::new(x.powf(*k) * (-c * x).exp(), 0.0))
            }
            StateSpec::Superposition(terms) => {
                if terms.is_empty() {
                    return Err(Error::Parameter("empty superposition".into()));
                }
                let mut acc = HalfLineFunction::zeros(grid);
                for (c, p) in terms {
                    acc = acc.axpy(*c, &coherent_values(PhasePoint::new(p.a, p.b)?, hb, grid))?;
                }
                acc
            }
        };
        if f.norm() == 0.0 {
            return Err(Error::Parameter("state vanishes on the grid".into()));
        }
        Ok(f.normalized())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AFactor {
    /// `e^{-c(a + 1/a)}`
    ExpSum { c: f64 },
    /// Smooth compact bump in `ln a` around `center`, half-width `width`.
    Bump { center: f64, width: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BFactor {
    /// `e^{-((b - center)/width)²}`
    Gaussian { center: f64, width: f64 },
    Bump { center: f64, width: f64 },
}

fn bump(t: f64) -> f64 {
    if t.abs() < 1.0 {
        (1.0 - 1.0 / (1.0 - t * t)).exp()
    } else {
        0.0
    }
}

/// `amplitude · f(a) · g(b)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolSpec {
    pub a: AFactor,
    pub b: BFactor,
    pub amplitude: f64,
}

impl SymbolSpec {
    /// `e^{2 - a - 1/a} e^{-b²}`, peak 1 at `(1, 0)`.
    pub fn harmonic() -> Self {
        Self { a: AFactor::ExpSum { c: 1.0 }, b: BFactor::Gaussian { center: 0.0, width: 1.0 }, amplitude: 2f64.exp() }
    }

    /// `e^{-(a + 1/a)} e^{-b²}`
    pub fn smooth() -> Self {
        Self { amplitude: 1.0, ..Self::harmonic() }
    }

    pub fn eval(&self, a: f64, b: f64) -> f64 {
        let fa = match self.a {
            AFactor::ExpSum { c } => (-c * (a + 1.0 / a)).exp(),
            AFactor::Bump { center, width } => bump((a / center).ln() / width),
        };
        let gb = match self.b {
            BFactor::Gaussian { center, width } => (-((b - center) / width).powi(2)).exp(),
            BFactor::Bump { center, width } => bump((b - center) / width),
        };
        self.amplitude * fa * gb
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self.a {
            AFactor::ExpSum { c } => c > 0.0,
            AFactor::Bump { center, width } => center > 0.0 && width > 0.0,
        } && match self.b {
            BFactor::Gaussian { width, .. } | BFactor::Bump { width, .. } => width > 0.0,
        } && self.amplitude.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::Parameter(format!("invalid symbol parameters {self:?}")))
        }
    }

    pub fn sample(&self, a_grid: &LogGrid, b_grid: &UniformGrid) -> Result<AffineSymbol> {
        self.validate()?;
        Ok(AffineSymbol::from_fn(a_grid, b_grid, |a, b| C64::new(self.eval(a, b), 0.0)))
    }
}

/// Grids on which the smooth families decay to below `1e-10` at the edges:
/// `a ∈ [0.01, 100]` (512 points), `b ∈ [-6, 6]` (257 points).
pub fn wide_symbol_grids() -> (LogGrid, UniformGrid) {
    (
        LogGrid::new(0.01, 100.0, 512).expect("valid constants"),
        UniformGrid::symmetric(6.0, 257).expect("valid constants"),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_peak() {
        let s = SymbolSpec::harmonic();
        assert!((s.eval(1.0, 0.0) - 1.0).abs() < 1e-15);
        assert!(s.eval(2.0, 0.5) < 1.0);
    }

    #[test]
    fn bumps_are_compact() {
        let s = SymbolSpec {
            a: AFactor::Bump { center: 1.0, width: 0.5 },
            b: BFactor::Bump { center: 1.0, width: 2.0 },
            amplitude: 1.0,
        };
        assert_eq!(s.eval(2.0, 1.0), 0.0);
        assert_eq!(s.eval(1.0, 3.5), 0.0);
        assert!((s.eval(1.0, 1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn states_are_normalised() {
        let g = LogGrid::default_desk();
        let hb = PlanckScale::new(1.0).unwrap();
        for spec in [
            StateSpec::Coherent { a: 1.0, b: 0.3 },
            StateSpec::MonomialExp { k: 2.0, c: 1.0 },
            StateSpec::Superposition(vec![(C64::new(1.0, 0.0), PhasePoint { a: 1.0, b: 0.0 }), (C64::new(0.0, 1.0), PhasePoint { a: 2.0, b: 1.0 })]),
        ] {
            assert!((spec.build(&g, hb).unwrap().norm() - 1.0).abs() < 1e-12);
        }
        assert!(StateSpec::MonomialExp { k: 1.0, c: -1.0 }.build(&g, hb).is_err());
    }
}
