//! Mellin transform on the critical line `s = 1/2 + iτ`.
//!
//! `f_M(s) = ∫ x^s f(x) dx/x` is a Fourier transform of `e^{u/2} f(e^u)`, so on
//! a log grid it is the trapezoid rule in `u = ln x`.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::affine::AffineSymbol;
use crate::error::{Error, Result};
use crate::grid::{HalfLineFunction, LogGrid, UniformGrid};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const DECAY_TOL: f64 = 1e-10;

/// Uniform samples `τ_k ∈ [-τ_max, τ_max]` of the line `s = 1/2 + iτ`.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalLineGrid {
    pub tau_max: f64,
    pub m: usize,
}

impl CriticalLineGrid {
    pub fn new(tau_max: f64, m: usize) -> Result<Self> {
        if !(tau_max.is_finite() && tau_max > 0.0) || m < 3 {
            return Err(Error::Parameter(format!("contour needs tau_max > 0 and m >= 3, got ({tau_max}, {m})")));
        }
        Ok(Self { tau_max, m })
    }

    pub fn step(&self) -> f64 {
        2.0 * self.tau_max / (self.m - 1) as f64
    }
    pub fn tau(&self, k: usize) -> f64 {
        -self.tau_max + k as f64 * self.step()
    }
    pub fn taus(&self) -> Vec<f64> {
        (0..self.m).map(|k| self.tau(k)).collect()
    }
    pub fn s(&self, k: usize) -> C64 {
        C64::new(0.5, self.tau(k))
    }
    pub fn weight(&self, k: usize) -> f64 {
        if k == 0 || k == self.m - 1 {
            0.5 * self.step()
        } else {
            self.step()
        }
    }
}

impl Default for CriticalLineGrid {
    fn default() -> Self {
        Self { tau_max: 60.0, m: 1201 }
    }
}

/// Meaning of the second axis of a [`MellinSpectrum`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BAxis {
    /// Fourier frequency ξ of the `b` variable, kernel `e^{-iξb}`.
    Frequency,
    /// The `b` variable itself (Mellin transform in `a` only).
    Position,
}

/// `w_M(s, ξ)` on `contour × xi_grid`, row-major in τ.
#[derive(Debug, Clone)]
pub struct MellinSpectrum {
    pub contour: CriticalLineGrid,
    pub xi_grid: UniformGrid,
    pub axis: BAxis,
    pub values: Vec<C64>,
}

impl MellinSpectrum {
    pub fn zeros(contour: &CriticalLineGrid, xi_grid: &UniformGrid, axis: BAxis) -> Self {
        Self {
            contour: contour.clone(),
            xi_grid: xi_grid.clone(),
            axis,
            values: vec![ZERO; contour.m * xi_grid.n],
        }
    }
    pub fn at(&self, k: usize, l: usize) -> C64 {
        self.values[k * self.xi_grid.n + l]
    }

    /// Largest violation of `w_M(conj s, ∓ξ) = conj w_M(s, ξ)` relative to the peak
    /// (`-ξ` for the frequency axis, `ξ` for the position axis).
    pub fn conjugation_defect(&self) -> f64 {
        let (m, n) = (self.contour.m, self.xi_grid.n);
        let peak = self.values.iter().fold(0.0f64, |a, v| a.max(v.norm()));
        if peak == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for k in 0..m {
            for l in 0..n {
                let l2 = if self.axis == BAxis::Frequency { n - 1 - l } else { l };
                worst = worst.max((self.at(m - 1 - k, l2) - self.at(k, l).conj()).norm());
            }
        }
        worst / peak
    }
}

fn decay_check(what: &str, ends: f64, peak: f64) -> Result<()> {
    if peak > 0.0 && ends > DECAY_TOL * peak {
        return Err(Error::Accuracy { what: what.into(), magnitude: ends / peak });
    }
    Ok(())
}

/// Neumaier-compensated complex sum; the critical-line integrands cancel
/// by many orders of magnitude at large |τ|.
pub(crate) fn compensated_sum(it: impl Iterator<Item = C64>) -> C64 {
    let (mut s, mut c) = (ZERO, ZERO);
    for v in it {
        let t = s + v;
        for (sc, (tc, (vc, ssc))) in [(&mut c.re, (t.re, (v.re, s.re))), (&mut c.im, (t.im, (v.im, s.im)))] {
            *sc += if ssc.abs() >= vc.abs() { (ssc - tc) + vc } else { (vc - tc) + ssc };
        }
        s = t;
    }
    s + c
}

fn mellin_samples(grid: &LogGrid, values: &[C64], contour: &CriticalLineGrid) -> Vec<C64> {
    // x^{s-1} w_j = x^{-1/2} e^{iτ ln x} w_j
    let base: Vec<(C64, f64)> = (0..grid.len())
        .filter(|&j| values[j] != ZERO)
        .map(|j| (values[j] * (grid.weights()[j] / grid.points()[j].sqrt()), grid.log_point(j)))
        .collect();
    (0..contour.m)
        .into_par_iter()
        .map(|k| {
            let tau = contour.tau(k);
            compensated_sum(base.iter().map(|(v, u)| v * C64::from_polar(1.0, tau * u)))
        })
        .collect()
}

fn endpoint_ratio(grid: &LogGrid, values: &[C64]) -> (f64, f64) {
    let g: Vec<f64> = grid.points().iter().zip(values).map(|(x, v)| x.sqrt() * v.norm()).collect();
    let peak = g.iter().cloned().fold(0.0, f64::max);
    (g[0].max(g[g.len() - 1]), peak)
}

pub fn mellin_transform(f: &HalfLineFunction, contour: &CriticalLineGrid) -> Result<Vec<C64>> {
    let (ends, peak) = endpoint_ratio(&f.grid, &f.values);
    decay_check("mellin_transform endpoints", ends, peak)?;
    Ok(mellin_samples(&f.grid, &f.values, contour))
}

/// `f(x) = (2π)^{-1} ∫ x^{-1/2 - iτ} f_M(1/2 + iτ) dτ`.
pub fn inverse_mellin(spectrum: &[C64], contour: &CriticalLineGrid, grid: &LogGrid) -> Result<HalfLineFunction> {
    if spectrum.len() != contour.m {
        return Err(Error::Structural(format!("{} samples for a {}-point contour", spectrum.len(), contour.m)));
    }
    let peak = spectrum.iter().fold(0.0f64, |a, v| a.max(v.norm()));
    let ends = spectrum[0].norm().max(spectrum[contour.m - 1].norm());
    decay_check("inverse_mellin contour ends", ends, peak)?;
    let span = grid.x_max().ln() - grid.x_min().ln();
    if span >= 2.0 * PI / contour.step() {
        return Err(Error::Resolution(format!(
            "grid spans {span:.2} in ln x, beyond the alias period 2π/dτ = {:.2}",
            2.0 * PI / contour.step()
        )));
    }
    let terms: Vec<(C64, f64)> = (0..contour.m)
        .filter(|&k| spectrum[k] != ZERO)
        .map(|k| (spectrum[k] * (contour.weight(k) / (2.0 * PI)), contour.tau(k)))
        .collect();
    let values = (0..grid.len())
        .into_par_iter()
        .map(|j| {
            let u = grid.log_point(j);
            let s: C64 = terms.iter().map(|(v, tau)| v * C64::from_polar(1.0, -tau * u)).sum();
            s / grid.points()[j].sqrt()
        })
        .collect();
    HalfLineFunction::new(grid.clone(), values)
}

/// `| ‖f‖² - (2π)^{-1} ∫ |f_M(1/2 + iτ)|² dτ |`.
pub fn unitarity_defect(f: &HalfLineFunction, contour: &CriticalLineGrid) -> Result<f64> {
    let fm = mellin_transform(f, contour)?;
    let rhs: f64 = fm.iter().enumerate().map(|(k, v)| v.norm_sqr() * contour.weight(k)).sum::<f64>() / (2.0 * PI);
    Ok((f.norm().powi(2) - rhs).abs())
}

fn symbol_decay(sym: &AffineSymbol) -> Result<()> {
    let (na, nb) = (sym.n_a(), sym.n_b());
    let pts = sym.a_grid.points();
    let mut peak = 0.0f64;
    let (mut a_ends, mut b_ends) = (0.0f64, 0.0f64);
    for k in 0..na {
        for l in 0..nb {
            let v = pts[k].sqrt() * sym.at(k, l).norm();
            peak = peak.max(v);
            if k == 0 || k == na - 1 {
                a_ends = a_ends.max(v);
            }
            if l == 0 || l == nb - 1 {
                b_ends = b_ends.max(v);
            }
        }
    }
    decay_check("symbol a-window ends", a_ends, peak)?;
    decay_check("symbol b-window ends", b_ends, peak)
}

/// Mellin transform in `a` of every `b` column: `w_M(s, b)`.
pub fn symbol_mellin_in_a(sym: &AffineSymbol, contour: &CriticalLineGrid) -> Result<MellinSpectrum> {
    symbol_decay(sym)?;
    let (na, nb) = (sym.n_a(), sym.n_b());
    let columns: Vec<Vec<C64>> = (0..nb)
        .into_par_iter()
        .map(|l| {
            let col: Vec<C64> = (0..na).map(|k| sym.at(k, l)).collect();
            mellin_samples(&sym.a_grid, &col, contour)
        })
        .collect();
    let mut values = vec![ZERO; contour.m * nb];
    for (l, col) in columns.iter().enumerate() {
        for (k, v) in col.iter().enumerate() {
            values[k * nb + l] = *v;
        }
    }
    Ok(MellinSpectrum { contour: contour.clone(), xi_grid: sym.b_grid.clone(), axis: BAxis::Position, values })
}

/// Mellin in `a` composed with `∫ e^{-iξb} db` in `b`.
pub fn symbol_mellin(sym: &AffineSymbol, contour: &CriticalLineGrid, xi_grid: &UniformGrid) -> Result<MellinSpectrum> {
    let in_a = symbol_mellin_in_a(sym, contour)?;
    let bs = sym.b_grid.points();
    let wb = sym.b_grid.weights();
    let xis = xi_grid.points();
    let nb = sym.n_b();
    let rows: Vec<Vec<C64>> = (0..contour.m)
        .into_par_iter()
        .map(|k| {
            let r = &in_a.values[k * nb..(k + 1) * nb];
            xis.iter()
                .map(|&xi| r.iter().zip(&bs).zip(&wb).map(|((v, b), w)| v * C64::from_polar(*w, -xi * b)).sum())
                .collect()
        })
        .collect();
    Ok(MellinSpectrum {
        contour: contour.clone(),
        xi_grid: xi_grid.clone(),
        axis: BAxis::Frequency,
        values: rows.concat(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::log_gamma;
    use proptest::prelude::*;

    fn wide() -> LogGrid {
        LogGrid::new(1e-40, 60.0, 8000).unwrap()
    }

    fn func(g: &LogGrid, f: impl Fn(f64) -> f64) -> HalfLineFunction {
        HalfLineFunction::from_fn(g, |x| C64::new(f(x), 0.0))
    }

    #[test]
    fn gamma_on_the_line() {
        let g = wide();
        let c = CriticalLineGrid::new(20.0, 81).unwrap();
        for lam in [1.0f64, 2.0] {
            let fm = mellin_transform(&func(&g, |x| (-lam * x).exp()), &c).unwrap();
            let peak = (log_gamma(C64::new(0.5, 0.0)).unwrap() - 0.5 * lam.ln()).exp().norm();
            for (k, v) in fm.iter().enumerate() {
                let s = c.s(k);
                let want = (log_gamma(s).unwrap() - s * lam.ln()).exp();
                let err = (v - want).norm();
                // |Γ(1/2 + 20i)| ~ 5e-14 sits below the f64 summation floor, so
                // pointwise relative accuracy is only meaningful up to |τ| = 12
                if s.im.abs() <= 12.0 {
                    assert!(err <= 1e-8 * want.norm(), "λ={lam} s={s}: {v} vs {want}");
                }
                assert!(err <= 1e-8 * peak * 1e-5, "λ={lam} s={s}: abs {err}");
            }
        }
    }

    #[test]
    fn indicator_transform() {
        // Smooth the jumps out by sampling exactly at the grid ends.
        let g = LogGrid::new(1.0, std::f64::consts::E, 4001).unwrap();
        let f = func(&g, |_| 1.0);
        let c = CriticalLineGrid::new(5.0, 11).unwrap();
        let fm = mellin_samples(&g, &f.values, &c);
        for (k, v) in fm.iter().enumerate() {
            let s = c.s(k);
            let want = (s.exp() - 1.0) / s;
            assert!((v - want).norm() < 1e-6 * want.norm());
        }
    }

    #[test]
    fn decay_violation_is_reported() {
        let g = LogGrid::default_desk();
        let c = CriticalLineGrid::new(10.0, 21).unwrap();
        match mellin_transform(&func(&g, |x| (-x).exp()), &c) {
            Err(Error::Accuracy { magnitude, .. }) => assert!(magnitude > 1e-3),
            other => panic!("expected accuracy error, got {other:?}"),
        }
    }

    #[test]
    fn round_trips() {
        // the inverse is periodic in ln x with period 2π/dτ ≈ 63, so the
        // grid must span less than that
        let g = LogGrid::new(1e-22, 60.0, 6000).unwrap();
        let c = CriticalLineGrid::default();
        for f in [
            func(&g, |x| (-x).exp()),
            func(&g, |x| (-2.0 * x).exp()),
            func(&g, |x| x * (-x).exp()),
        ] {
            let back = inverse_mellin(&mellin_transform(&f, &c).unwrap(), &c, &g).unwrap();
            let rel = back.axpy(C64::new(-1.0, 0.0), &f).unwrap().norm() / f.norm();
            assert!(rel < 1e-6, "{rel}");
            for (j, &x) in g.points().iter().enumerate() {
                if (0.01..=10.0).contains(&x) {
                    assert!((back.values[j] - f.values[j]).norm() <= 1e-6 * f.values[j].norm());
                }
            }
        }
    }

    #[test]
    fn zero_spectrum() {
        let g = LogGrid::new(1e-8, 60.0, 100).unwrap();
        let c = CriticalLineGrid::new(10.0, 201).unwrap();
        let out = inverse_mellin(&vec![ZERO; 201], &c, &g).unwrap();
        assert!(out.values.iter().all(|v| *v == ZERO));
        assert_eq!(unitarity_defect(&HalfLineFunction::zeros(&g), &c).unwrap(), 0.0);
    }

    #[test]
    fn aliasing_grid_is_rejected() {
        let c = CriticalLineGrid::new(10.0, 201).unwrap();
        let g = LogGrid::new(1e-40, 60.0, 100).unwrap();
        let spec: Vec<C64> = (0..201).map(|k| C64::new((-c.tau(k).powi(2)).exp(), 0.0)).collect();
        assert!(matches!(inverse_mellin(&spec, &c, &g), Err(Error::Resolution(_))));
    }

    #[test]
    fn undecayed_spectrum_is_rejected() {
        let g = wide();
        let c = CriticalLineGrid::new(10.0, 21).unwrap();
        assert!(matches!(
            inverse_mellin(&vec![C64::new(1.0, 0.0); 21], &c, &g),
            Err(Error::Accuracy { .. })
        ));
    }

    #[test]
    fn plancherel_suite() {
        let g = wide();
        let c = CriticalLineGrid::default();
        let suite: Vec<HalfLineFunction> = vec![
            func(&g, |x| (-x).exp()),
            func(&g, |x| x * (-x).exp()),
            func(&g, |x| x * x * (-2.0 * x).exp()),
            func(&g, |x| (-x).exp() / (1.0 + x * x)),
            func(&g, |x| x.sqrt() * (-x * x).exp()),
        ];
        let exact = [0.5 * (-2e-40f64).exp(), 0.25];
        for (i, f) in suite.iter().enumerate() {
            let d = unitarity_defect(f, &c).unwrap();
            assert!(d <= 1e-6, "function {i}: defect {d}");
            if i < 2 {
                assert!((f.norm().powi(2) - exact[i]).abs() < 1e-12);
            }
        }
    }

    fn separable(ag: &LogGrid, bg: &UniformGrid, lam: f64) -> AffineSymbol {
        AffineSymbol::from_fn(ag, bg, |a, b| C64::new((-lam * a).exp() * (-b * b).exp(), 0.0))
    }

    #[test]
    fn separable_symbol_spectrum() {
        let ag = LogGrid::new(1e-40, 60.0, 4000).unwrap();
        let bg = UniformGrid::symmetric(8.0, 321).unwrap();
        let xi = UniformGrid::symmetric(6.0, 13).unwrap();
        let c = CriticalLineGrid::new(10.0, 21).unwrap();
        for lam in [1.0f64, 2.0] {
            let sp = symbol_mellin(&separable(&ag, &bg, lam), &c, &xi).unwrap();
            assert_eq!(sp.axis, BAxis::Frequency);
            for k in 0..c.m {
                let gs = (log_gamma(c.s(k)).unwrap() - c.s(k) * lam.ln()).exp();
                for (l, x) in xi.points().iter().enumerate() {
                    // ∫ e^{-b²} e^{-iξb} db = √π e^{-ξ²/4}
                    let want = gs * (PI.sqrt() * (-x * x / 4.0).exp());
                    assert!((sp.at(k, l) - want).norm() <= 1e-8 * PI.sqrt() * PI.sqrt());
                }
            }
            assert!(sp.conjugation_defect() < 1e-10);
        }
    }

    #[test]
    fn flat_b_window_concentrates_at_zero() {
        let ag = LogGrid::new(1e-22, 60.0, 2000).unwrap();
        // compact smooth b-window so the b-ends decay
        let bg = UniformGrid::symmetric(20.0, 801).unwrap();
        let s = AffineSymbol::from_fn(&ag, &bg, |a, b| {
            let t = b / 20.0;
            let w = if t.abs() < 1.0 { (1.0 - 1.0 / (1.0 - t * t)).exp() } else { 0.0 };
            C64::new((-a).exp() * w, 0.0)
        });
        let xi = UniformGrid::symmetric(3.0, 61).unwrap();
        let c = CriticalLineGrid::new(4.0, 9).unwrap();
        let sp = symbol_mellin(&s, &c, &xi).unwrap();
        let k0 = c.m / 2;
        let centre = sp.at(k0, 30).norm();
        for l in 0..61 {
            if (l as i64 - 30).abs() > 5 {
                assert!(sp.at(k0, l).norm() < 0.05 * centre);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn linearity(ar in -2.0f64..2.0, ai in -2.0f64..2.0, br in -2.0f64..2.0) {
            let g = LogGrid::new(1e-40, 60.0, 2000).unwrap();
            let c = CriticalLineGrid::new(10.0, 41).unwrap();
            let f = func(&g, |x| (-x).exp());
            let h = func(&g, |x| x * (-2.0 * x).exp());
            let (al, be) = (C64::new(ar, ai), C64::new(br, 0.3));
            let comb = f.scale(al).axpy(be, &h).unwrap();
            let lhs = mellin_transform(&comb, &c).unwrap();
            let (mf, mh) = (mellin_transform(&f, &c).unwrap(), mellin_transform(&h, &c).unwrap());
            let scale = al.norm() * mf[c.m / 2].norm() + be.norm() * mh[c.m / 2].norm();
            for k in 0..c.m {
                let rhs = al * mf[k] + be * mh[k];
                prop_assert!((lhs[k] - rhs).norm() <= 1e-14 * scale);
            }
        }
    }
}
