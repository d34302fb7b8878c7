//! Complex log-gamma and the coherent-state normalization constant.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::grid::PlanckScale;

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

// B_{2k} / (2k (2k - 1)), k = 1..10
const STIRLING: [f64; 10] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
    -3617.0 / 122_400.0,
    43867.0 / 244_188.0,
    -174_611.0 / 125_400.0,
];

/// Log-gamma continued analytically from the positive real axis, with the
/// cut on the negative real axis (same branch as `scipy.special.loggamma`).
///
/// Small arguments are pushed up by the recurrence until the Stirling series
/// converges to full precision; the logs of the shifted factors are summed
/// individually so no branch bookkeeping is needed.
pub fn log_gamma(z: C64) -> Result<C64> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::Parameter(format!("log_gamma of non-finite {z}")));
    }
    if z.im == 0.0 && z.re <= 0.0 && z.re == z.re.round() {
        return Err(Error::Pole(z.re as i64));
    }
    if z.re < -50.0 {
        return Err(Error::Parameter(format!("log_gamma validated for Re z >= -50, got {z}")));
    }
    let mut w = z;
    let mut shift = C64::new(0.0, 0.0);
    while w.re < 15.0 && !(w.re >= 0.0 && w.norm() >= 15.0) {
        shift += w.ln();
        w += 1.0;
    }
    Ok(stirling(w) - shift)
}

fn stirling(z: C64) -> C64 {
    let inv = z.inv();
    let inv2 = inv * inv;
    let mut series = C64::new(0.0, 0.0);
    let mut p = inv;
    for c in STIRLING {
        series += p * c;
        p *= inv2;
    }
    (z - 0.5) * z.ln() - z + HALF_LN_2PI + series
}

/// Real log-gamma for positive arguments.
pub fn ln_gamma_real(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Parameter(format!("ln_gamma_real needs x > 0, got {x}")));
    }
    Ok(log_gamma(C64::new(x, 0.0))?.re)
}

/// `ln C(ħ)` with `C(ħ) = (2/ħ)^{1/ħ+1/2} / sqrt(Γ(2/ħ+1))`.
pub fn log_coherent_norm_constant(hb: PlanckScale) -> f64 {
    let h = hb.value();
    let lg = ln_gamma_real(2.0 / h + 1.0).expect("positive argument");
    (1.0 / h + 0.5) * (2.0 / h).ln() - 0.5 * lg
}

/// Normalization making `‖φ_{1,0}‖ = 1` in the continuum.
pub fn coherent_norm_constant(hb: PlanckScale) -> Result<f64> {
    let l = log_coherent_norm_constant(hb);
    let c = l.exp();
    if c.is_finite() && c > 0.0 {
        Ok(c)
    } else {
        Err(Error::Range { log_value: l })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // mpmath.loggamma at 30 digits
    const REFERENCE: [(f64, f64, f64, f64); 8] = [
        (0.5, 3.0, -3.793450450436223, 0.30981927108643914),
        (2.25, 15.0, -17.900284679375673, 28.270534722292403),
        (-7.3, 0.4, -8.57182823239658, -23.75734131920661),
        (0.1, -40.0, -63.38846256993902, -106.92590126764406),
        (-35.5, 2.0, -98.314251237885, -105.92920570296336),
        (3.0, 100.0, -144.64751872380393, 364.4131790790254),
        (0.001, 0.0, 6.907178885383853, 0.0),
        (-0.5, 0.0, 1.2655121234846454, -std::f64::consts::PI),
    ];

    #[test]
    fn reference_values() {
        for (zr, zi, vr, vi) in REFERENCE {
            let v = log_gamma(C64::new(zr, zi)).unwrap();
            let e = C64::new(vr, vi);
            assert!((v - e).norm() <= 1e-12 * e.norm().max(1.0), "z=({zr},{zi}): {v} vs {e}");
        }
    }

    #[test]
    fn simple_points() {
        assert!(log_gamma(C64::new(1.0, 0.0)).unwrap().norm() < 1e-15);
        assert!(log_gamma(C64::new(2.0, 0.0)).unwrap().norm() < 1e-15);
        let half = log_gamma(C64::new(0.5, 0.0)).unwrap();
        assert!((half.re - 0.572_364_942_924_700_1).abs() < 1e-14);
    }

    #[test]
    fn modulus_from_reflection() {
        // |Γ(1/2 + 3i)|² = π / cosh(3π)
        let v = log_gamma(C64::new(0.5, 3.0)).unwrap();
        let exact = (std::f64::consts::PI / (3.0 * std::f64::consts::PI).cosh()).ln();
        assert!((2.0 * v.re - exact).abs() < 1e-13);
    }

    #[test]
    fn poles_are_reported() {
        assert_eq!(log_gamma(C64::new(0.0, 0.0)), Err(Error::Pole(0)));
        assert_eq!(log_gamma(C64::new(-3.0, 0.0)), Err(Error::Pole(-3)));
        assert!(log_gamma(C64::new(-3.0, 1e-9)).is_ok());
    }

    #[test]
    fn norm_constant_values() {
        let c1 = coherent_norm_constant(PlanckScale::new(1.0).unwrap()).unwrap();
        let c2 = coherent_norm_constant(PlanckScale::new(2.0).unwrap()).unwrap();
        assert!((c1 - 2.0).abs() < 1e-13);
        assert!((c2 - 1.0).abs() < 1e-13);
        // hbar = 1/2: C² = 4^5 / Γ(5)
        let ch = coherent_norm_constant(PlanckScale::new(0.5).unwrap()).unwrap();
        assert!((ch * ch - 1024.0 / 24.0).abs() < 1e-10);
    }

    proptest! {
        #[test]
        fn recurrence(re in -20.0f64..20.0, im in -100.0f64..100.0) {
            prop_assume!(im.abs() > 1e-6 || re > 0.0);
            let z = C64::new(re, im);
            let d = log_gamma(z + 1.0).unwrap() - log_gamma(z).unwrap() - z.ln();
            // The analytic branch makes the recurrence exact, no 2πi jumps.
            let scale = log_gamma(z).unwrap().norm().max(1.0);
            let tol = if re >= 0.5 { 1e-12 } else { 1e-10 };
            prop_assert!(d.norm() <= tol * scale, "z={z} d={d}");
        }

        #[test]
        fn conjugate_symmetry(re in -20.0f64..20.0, im in 1e-3f64..100.0) {
            let z = C64::new(re, im);
            let a = log_gamma(z.conj()).unwrap();
            let b = log_gamma(z).unwrap().conj();
            prop_assert!((a - b).norm() <= 1e-13 * b.norm().max(1.0));
        }
    }
}
