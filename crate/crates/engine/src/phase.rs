//! Coherent states, the resolution of identity, the affine Wigner function and
//! Husimi fields (direct and through the Mellin kernel), off-diagonal coherent
//! matrix elements and their use as the analytic continuation of the Husimi
//! field.
//!
//! Frozen conventions (README has the derivations):
//! * `φ_{a,b}(x) = C(ħ) a^{1/ħ+1/2} x^{1/ħ} e^{-(a-ib)x/ħ}`, so `φ_{a,b} = U(a,b) φ_{1,0}`
//! * `∫ |φ_{a,b}⟩⟨φ_{a,b}| da db / (2πħ a²) = Id`
//! * `W̃(a,b) = ⟨φ_{a,b}, W φ_{a,b}⟩ / ħ`, so `∫ W̃ da db / (2π a²) = Tr W`
//! * `W_ψ(a,b) = ⟨ψ, V(a,b) C(a) ψ⟩ / ħ`

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::affine::{c_multiplier, AffineSymbol, PhasePoint};
use crate::error::{Error, Result};
use crate::grid::{apply_operator, horner_phase, phase_sums, HalfLineFunction, LogGrid, OperatorMatrix, PlanckScale, UniformGrid};
use crate::mellin::{BAxis, MellinSpectrum};
use crate::special::{log_coherent_norm_constant, log_gamma};
use crate::window::ConeWindow;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Exponent `1/ħ + 1/2` of `a` in the coherent state.
#[inline]
pub(crate) fn scale_power(h: f64) -> f64 {
    1.0 / h + 0.5
}

#[derive(Debug, Clone)]
pub struct CoherentState {
    pub p: PhasePoint,
    pub hb: PlanckScale,
    pub state: HalfLineFunction,
}

/// Real envelope `C a^{1/ħ+1/2} x^{1/ħ} e^{-ax/ħ}` on the grid, built in log space.
pub fn coherent_profile(a: f64, hb: PlanckScale, grid: &LogGrid) -> Vec<f64> {
    let h = hb.value();
    let base = log_coherent_norm_constant(hb) + scale_power(h) * a.ln();
    grid.points().iter().map(|&x| (base + x.ln() / h - a * x / h).exp()).collect()
}

/// Coherent state samples with no resolution check.
pub fn coherent_values(p: PhasePoint, hb: PlanckScale, grid: &LogGrid) -> HalfLineFunction {
    let h = hb.value();
    let prof = coherent_profile(p.a, hb, grid);
    let values = prof.iter().zip(grid.points()).map(|(&r, &x)| C64::from_polar(r, p.b * x / h)).collect();
    HalfLineFunction { grid: grid.clone(), values }
}

pub fn coherent_state(p: PhasePoint, hb: PlanckScale, grid: &LogGrid) -> Result<CoherentState> {
    let peak = 1.0 / p.a;
    if peak < 10.0 * grid.x_min() || peak > grid.x_max() / 10.0 {
        return Err(Error::Resolution(format!(
            "coherent peak x* = {peak:.3e} outside [{:.1e}, {:.1e}]",
            10.0 * grid.x_min(),
            grid.x_max() / 10.0
        )));
    }
    Ok(CoherentState { p, hb, state: coherent_values(p, hb, grid) })
}

/// Product grid of target phase points.
#[derive(Debug, Clone)]
pub struct PhaseGrid {
    pub a_grid: LogGrid,
    pub b_grid: UniformGrid,
}

impl PhaseGrid {
    pub fn new(a_grid: LogGrid, b_grid: UniformGrid) -> Self {
        Self { a_grid, b_grid }
    }

    /// The default symbol window `[0.1, 10] × [-12, 12]`.
    pub fn default_window() -> Self {
        let (a_grid, b_grid) = AffineSymbol::default_grids();
        Self { a_grid, b_grid }
    }

    pub fn len(&self) -> usize {
        self.a_grid.len() * self.b_grid.n
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, k: usize, l: usize) -> PhasePoint {
        PhasePoint { a: self.a_grid.points()[k], b: self.b_grid.point(l) }
    }
}

/// Real phase-space field on a [`PhaseGrid`], row-major in `a`.
#[derive(Debug, Clone)]
pub struct HusimiField {
    pub a_grid: LogGrid,
    pub b_grid: UniformGrid,
    pub values: Vec<f64>,
}

impl HusimiField {
    pub fn n_a(&self) -> usize {
        self.a_grid.len()
    }
    pub fn n_b(&self) -> usize {
        self.b_grid.n
    }
    pub fn at(&self, k: usize, l: usize) -> f64 {
        self.values[k * self.b_grid.n + l]
    }
    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `max |self - reference| / max |reference|` over an index box.
    pub fn sup_rel_diff(&self, reference: &HusimiField, ka: (usize, usize), lb: (usize, usize)) -> Result<f64> {
        self.a_grid.check_same(&reference.a_grid)?;
        if self.b_grid != reference.b_grid {
            return Err(Error::Structural("b grids differ".into()));
        }
        let (mut num, mut den) = (0.0f64, 0.0f64);
        for k in ka.0..ka.1 {
            for l in lb.0..lb.1 {
                num = num.max((self.at(k, l) - reference.at(k, l)).abs());
                den = den.max(reference.at(k, l).abs());
            }
        }
        Ok(if den > 0.0 { num / den } else { num })
    }
}

/// `⟨φ_{a,b_l}, f⟩` along a b-grid: `Σ_j prof_j f_j w_j e^{-i b_l x_j/ħ}`.
pub(crate) fn overlap_row(prof: &[f64], f: &HalfLineFunction, b: &UniformGrid, h: f64) -> Vec<C64> {
    let (xs, ws) = (f.grid.points(), f.grid.weights());
    let mut c = Vec::new();
    let mut d = Vec::new();
    for j in 0..xs.len() {
        let v = f.values[j] * (prof[j] * ws[j]);
        if v != ZERO {
            c.push(v);
            d.push(-xs[j] / h);
        }
    }
    phase_sums(&c, &d, b)
}

/// Relative reconstruction error and captured overlap mass of the truncated
/// resolution of identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityReport {
    pub defect: f64,
    /// `Σ |⟨φ, ψ⟩|² da db / (2πħ a²)` over the window.
    pub captured: f64,
    pub norm_sq: f64,
}

pub fn identity_resolution(probe: &HalfLineFunction, window: &ConeWindow, hb: PlanckScale) -> Result<IdentityReport> {
    let norm_sq = probe.norm().powi(2);
    if norm_sq == 0.0 {
        return Ok(IdentityReport { defect: 0.0, captured: 0.0, norm_sq });
    }
    let h = hb.value();
    let grid = &probe.grid;
    let xs = grid.points();
    let n = grid.len();
    let parts: Vec<(Vec<C64>, f64)> = window
        .rows()
        .par_iter()
        .map(|row| {
            let prof = coherent_profile(row.a, hb, grid);
            let ov = overlap_row(&prof, probe, &row.b, h);
            let mu = row.da / (2.0 * PI * h * row.a * row.a);
            let wb = row.b.weights();
            let captured: f64 = ov.iter().zip(&wb).map(|(c, w)| c.norm_sqr() * w).sum::<f64>() * mu;
            let coef: Vec<C64> = ov.iter().zip(&wb).map(|(c, w)| c * (w * mu)).collect();
            let peak = prof.iter().copied().fold(0.0, f64::max);
            let rec = (0..n)
                .map(|i| if prof[i] > 1e-18 * peak { horner_phase(&coef, &row.b, xs[i] / h) * prof[i] } else { ZERO })
                .collect();
            (rec, captured)
        })
        .collect();
    let mut rec = vec![ZERO; n];
    let mut captured = 0.0;
    for (r, c) in &parts {
        for (acc, v) in rec.iter_mut().zip(r) {
            *acc += v;
        }
        captured += c;
    }
    let missing = 1.0 - captured / norm_sq;
    if missing > 1e-3 {
        return Err(Error::Coverage(missing));
    }
    let err: f64 = rec
        .iter()
        .zip(&probe.values)
        .zip(grid.weights())
        .map(|((r, p), w)| (r - p).norm_sqr() * w)
        .sum();
    Ok(IdentityReport { defect: (err / norm_sq).sqrt(), captured, norm_sq })
}

pub fn identity_resolution_defect(probe: &HalfLineFunction, window: &ConeWindow, hb: PlanckScale) -> Result<f64> {
    identity_resolution(probe, window, hb).map(|r| r.defect)
}

/// `W_ψ(a,b) = (1/ħ) Σ_i conj ψ_i (a x_i)^{-1} ψ(1/(a²x_i)) c_a(x_i) e^{ib(x_i - 1/(a²x_i))/ħ} w_i`.
fn wigner_row(psi: &HalfLineFunction, a: f64, b: &UniformGrid, h: f64) -> Vec<C64> {
    let (xs, ws) = (psi.grid.points(), psi.grid.weights());
    let mut c = Vec::new();
    let mut d = Vec::new();
    for i in 0..xs.len() {
        if psi.values[i] == ZERO {
            continue;
        }
        let y = 1.0 / (a * a * xs[i]);
        let py = psi.eval(y);
        if py == ZERO {
            continue;
        }
        c.push(psi.values[i].conj() * py * (c_multiplier(a, xs[i]) * ws[i] / (a * xs[i] * h)));
        d.push((xs[i] - y) / h);
    }
    phase_sums(&c, &d, b)
}

pub fn affine_wigner(psi: &HalfLineFunction, targets: &PhaseGrid, hb: PlanckScale) -> AffineSymbol {
    let h = hb.value();
    let values = targets
        .a_grid
        .points()
        .par_iter()
        .flat_map_iter(|&a| wigner_row(psi, a, &targets.b_grid, h))
        .collect();
    AffineSymbol { a_grid: targets.a_grid.clone(), b_grid: targets.b_grid.clone(), values }
}

/// `∫ W_ψ da db / a²` over a window, reported against both `‖ψ‖` and `‖ψ‖²`.
#[derive(Debug, Clone, Copy)]
pub struct WignerMass {
    pub integral: C64,
    pub norm: f64,
    pub norm_sq: f64,
}

pub fn wigner_window_integral(psi: &HalfLineFunction, window: &ConeWindow, hb: PlanckScale) -> WignerMass {
    let h = hb.value();
    let integral = window
        .rows()
        .par_iter()
        .map(|row| {
            let w = wigner_row(psi, row.a, &row.b, h);
            let s: C64 = w.iter().zip(row.b.weights()).map(|(v, wb)| v * wb).sum();
            s * (row.da / (row.a * row.a))
        })
        .collect::<Vec<_>>()
        .into_iter()
        .sum();
    let norm = psi.norm();
    WignerMass { integral, norm, norm_sq: norm * norm }
}

pub fn husimi_pure(psi: &HalfLineFunction, targets: &PhaseGrid, hb: PlanckScale) -> HusimiField {
    let h = hb.value();
    let values = targets
        .a_grid
        .points()
        .par_iter()
        .flat_map_iter(|&a| {
            let prof = coherent_profile(a, hb, &psi.grid);
            overlap_row(&prof, psi, &targets.b_grid, h).into_iter().map(move |c| c.norm_sqr() / h)
        })
        .collect();
    HusimiField { a_grid: targets.a_grid.clone(), b_grid: targets.b_grid.clone(), values }
}

/// Window integrals of a Husimi field under the derived measure
/// `da db / (2π a²)` and the literal `da db / a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HusimiMass {
    pub derived: f64,
    pub literal: f64,
}

pub fn husimi_pure_mass(psi: &HalfLineFunction, window: &ConeWindow, hb: PlanckScale) -> HusimiMass {
    let h = hb.value();
    let rows: Vec<(f64, f64)> = window
        .rows()
        .par_iter()
        .map(|row| {
            let prof = coherent_profile(row.a, hb, &psi.grid);
            let ov = overlap_row(&prof, psi, &row.b, h);
            let q: f64 = ov.iter().zip(row.b.weights()).map(|(c, w)| c.norm_sqr() * w / h).sum();
            (q * row.da / (2.0 * PI * row.a * row.a), q * row.da / row.a)
        })
        .collect();
    let derived = rows.iter().map(|r| r.0).sum();
    let literal = rows.iter().map(|r| r.1).sum();
    HusimiMass { derived, literal }
}

/// `⟨φ_{a,b}, W φ_{a,b}⟩` for one point, `O(n²)`.
fn diagonal_element(op: &OperatorMatrix, p: PhasePoint, hb: PlanckScale) -> C64 {
    let phi = coherent_values(p, hb, &op.grid);
    let wphi = apply_operator(op, &phi).expect("same grid");
    crate::grid::inner_product(&phi, &wphi).expect("same grid")
}

pub fn husimi_operator(op: &OperatorMatrix, targets: &PhaseGrid, hb: PlanckScale) -> HusimiField {
    let h = hb.value();
    let nb = targets.b_grid.n;
    let values = (0..targets.len())
        .into_par_iter()
        .map(|idx| diagonal_element(op, targets.point(idx / nb, idx % nb), hb).re / h)
        .collect();
    HusimiField { a_grid: targets.a_grid.clone(), b_grid: targets.b_grid.clone(), values }
}

/// Trapezoid sum `Σ_l wb_l e^{-i b_l t}` in closed form.
fn dirichlet(b: &UniformGrid, t: f64) -> C64 {
    let theta = b.step() * t;
    let n = b.n as f64;
    let half = (0.5 * theta).sin();
    let ratio = if half.abs() < 1e-300 { n } else { (0.5 * n * theta).sin() / half };
    let geometric = C64::from_polar(ratio, -0.5 * (n - 1.0) * theta);
    let ends = 0.5 * (C64::new(1.0, 0.0) + C64::from_polar(1.0, -(n - 1.0) * theta));
    (geometric - ends) * C64::from_polar(b.step(), -b.start * t)
}

/// Husimi window integral of an operator. The b-sum is done in closed form,
/// leaving `O(n²)` work per `a` row.
pub fn husimi_operator_mass(op: &OperatorMatrix, window: &ConeWindow, hb: PlanckScale) -> HusimiMass {
    let h = hb.value();
    let grid = &op.grid;
    let (xs, ws) = (grid.points(), grid.weights());
    let n = grid.len();
    let rows: Vec<(f64, f64)> = window
        .rows()
        .par_iter()
        .map(|row| {
            let prof = coherent_profile(row.a, hb, grid);
            let peak = prof.iter().copied().fold(0.0, f64::max);
            let live: Vec<usize> = (0..n).filter(|&j| prof[j] > 1e-18 * peak).collect();
            let mut q = ZERO;
            for &i in &live {
                let gi = prof[i] * ws[i];
                for &j in &live {
                    let k = op.at(i, j);
                    if k != ZERO {
                        q += k * (gi * prof[j] * ws[j]) * dirichlet(&row.b, (xs[i] - xs[j]) / h);
                    }
                }
            }
            let q = q.re / h;
            (q * row.da / (2.0 * PI * row.a * row.a), q * row.da / row.a)
        })
        .collect();
    HusimiMass { derived: rows.iter().map(|r| r.0).sum(), literal: rows.iter().map(|r| r.1).sum() }
}

/// `⟨φ_{p1}, W φ_{p2}⟩` by direct quadrature.
pub fn cross_matrix_element(p1: PhasePoint, p2: PhasePoint, op: &OperatorMatrix, hb: PlanckScale) -> C64 {
    let phi1 = coherent_values(p1, hb, &op.grid);
    let phi2 = coherent_values(p2, hb, &op.grid);
    let w2 = apply_operator(op, &phi2).expect("same grid");
    crate::grid::inner_product(&phi1, &w2).expect("same grid")
}

/// Precomputed Γ²·spectrum tables for coherent matrix elements of an operator
/// given by the Mellin spectrum of its symbol:
///
/// `⟨φ_{a,b}, W φ_{a',b'}⟩ = C² (aa')^{1/ħ+1/2} / (4ħ) · (2π)^{-1} ∫dτ ∫dξ w_M(s,ξ) Γ(k)² λ₁^{-k} λ₂^{-k}`
///
/// with `k = s/2 + 1/ħ + 1`, `λ₁ = (a + i(b-ξ))/ħ`, `λ₂ = (a' - i(b'-ξ))/ħ`.
///
/// The ξ-integrand has branch points at `b - ia` and `b' + ia'`. When one
/// of the scales is small the real-axis trapezoid rule fails, so the ξ contour
/// is shifted by `-iη` with `η ≈ (a - a')/2`, which puts both singularities at
/// distance `(a + a')/2`. The shifted samples `w_M(s, ξ - iη)` come from the
/// frequency-axis spectrum, `(2π)^{-1} ∫ F(s,ω) e^{iωξ} e^{ωη} dω`; a small
/// ladder of η values is tabulated once.
#[derive(Debug, Clone)]
pub struct MellinKernel {
    h: f64,
    xi: UniformGrid,
    m: usize,
    tau0: f64,
    dtau: f64,
    k0: f64,
    eta_step: f64,
    /// `tables[e][l·m + τ]` for `η = e_signed · eta_step`; index 0 is η = 0.
    tables: Vec<Vec<C64>>,
    n_eta: usize,
    log_pref: f64,
}

impl MellinKernel {
    /// Accepts either axis. A position-axis spectrum supports only η = 0.
    pub fn new(spec: &MellinSpectrum, hb: PlanckScale, xi_out: Option<&UniformGrid>) -> Result<Self> {
        let h = hb.value();
        let c = &spec.contour;
        let m = c.m;
        let k0 = 0.25 + 1.0 / h + 1.0;
        let lg: Vec<C64> = (0..m)
            .map(|t| log_gamma(C64::new(k0, 0.5 * c.tau(t))).map(|v| v * 2.0))
            .collect::<Result<_>>()?;
        let l_ref = lg.iter().map(|v| v.re).fold(f64::NEG_INFINITY, f64::max);
        let eta_step = 0.05;
        let (xi, shifted, n_eta): (UniformGrid, Vec<Vec<C64>>, usize) = match spec.axis {
            BAxis::Position => (spec.xi_grid.clone(), vec![spec.values.clone()], 0),
            BAxis::Frequency => {
                let om = &spec.xi_grid;
                let xi = match xi_out {
                    Some(g) => g.clone(),
                    None => {
                        let half = PI / om.step() / 2.0;
                        UniformGrid::symmetric(half, 2 * (half / 0.047).ceil() as usize + 1)?
                    }
                };
                let eta_max = shift_budget(spec);
                let n_eta = (eta_max / eta_step + 1e-9).floor() as usize;
                let mut tabs = Vec::with_capacity(2 * n_eta + 1);
                for e in 0..=2 * n_eta {
                    tabs.push(reconstruct_shifted(spec, &xi, signed_eta(e, n_eta) * eta_step));
                }
                (xi, tabs, n_eta)
            }
        };
        let nx = xi.n;
        let wx = xi.weights();
        let tables: Vec<Vec<C64>> = shifted
            .par_iter()
            .map(|vals| {
                let mut t = vec![ZERO; nx * m];
                for l in 0..nx {
                    for k in 0..m {
                        let g = (lg[k] - l_ref).exp();
                        t[l * m + k] = vals[k * nx + l] * g * (c.weight(k) * wx[l] / (2.0 * PI));
                    }
                }
                t
            })
            .collect();
        // Γ² truncation check on the zero-shift table
        let t0 = &tables[0];
        let peak = t0.iter().fold(0.0f64, |a, v| a.max(v.norm()));
        let ends = (0..nx).fold(0.0f64, |a, l| a.max(t0[l * m].norm()).max(t0[l * m + m - 1].norm()));
        if peak > 0.0 && ends > 1e-12 * peak {
            return Err(Error::Accuracy { what: "Γ²·w_M at the contour ends".into(), magnitude: ends / peak });
        }
        let log_pref = 2.0 * log_coherent_norm_constant(hb) + l_ref - (4.0 * h).ln();
        Ok(Self { h, xi, m, tau0: c.tau(0), dtau: c.step(), k0, eta_step, tables, n_eta, log_pref })
    }

    pub fn eta_max(&self) -> f64 {
        self.n_eta as f64 * self.eta_step
    }

    pub fn xi_grid(&self) -> &UniformGrid {
        &self.xi
    }

    /// `⟨φ_{p1}, W φ_{p2}⟩`.
    pub fn element(&self, p1: PhasePoint, p2: PhasePoint) -> C64 {
        let (a, b, a2, b2) = (p1.a, p1.b, p2.a, p2.b);
        let ideal = (0.5 * (a - a2)).clamp(-self.eta_max(), self.eta_max());
        let steps = (ideal / self.eta_step).trunc() as i64;
        let eta = steps as f64 * self.eta_step;
        let e = if steps >= 0 { steps as usize } else { self.n_eta + (-steps) as usize };
        let table = &self.tables[e];
        let h = self.h;
        let m = self.m;
        let mut total = ZERO;
        for l in 0..self.xi.n {
            let row = &table[l * m..(l + 1) * m];
            let xi = self.xi.point(l);
            let u1 = C64::new(a - eta, b - xi) / h;
            let u2 = C64::new(a2 + eta, xi - b2) / h;
            let lam = u1.ln() + u2.ln();
            let mut cur = (-(C64::new(self.k0, 0.5 * self.tau0)) * lam).exp();
            let rot = (C64::new(0.0, -0.5 * self.dtau) * lam).exp();
            let mut acc = ZERO;
            for v in row {
                acc += v * cur;
                cur *= rot;
            }
            total += acc;
        }
        let p = scale_power(h);
        total * (self.log_pref + p * (a.ln() + a2.ln())).exp()
    }
}

fn signed_eta(e: usize, n_eta: usize) -> f64 {
    if e <= n_eta {
        e as f64
    } else {
        -((e - n_eta) as f64)
    }
}

/// Largest η ≤ 0.5 for which `e^{|ω|η}` keeps the frequency tails below
/// `1e-10` of the peak.
fn shift_budget(spec: &MellinSpectrum) -> f64 {
    let om = &spec.xi_grid;
    let n = om.n;
    let peak = spec.values.iter().fold(0.0f64, |a, v| a.max(v.norm()));
    if peak == 0.0 {
        return 0.5;
    }
    let m = spec.contour.m;
    let edge = (0..m).fold(0.0f64, |a, k| a.max(spec.at(k, 0).norm()).max(spec.at(k, n - 1).norm()));
    let reach = om.start.abs().max(om.stop.abs());
    if edge == 0.0 {
        return 0.5;
    }
    ((1e-10 * peak / edge).ln() / reach).clamp(0.0, 0.5)
}

/// `w_M(s, ξ - iη)` on `xi`, τ-major.
fn reconstruct_shifted(spec: &MellinSpectrum, xi: &UniformGrid, eta: f64) -> Vec<C64> {
    let om = &spec.xi_grid;
    let m = spec.contour.m;
    let d: Vec<f64> = om.points();
    let damp: Vec<f64> = om.points().iter().zip(om.weights()).map(|(w, dw)| dw * (w * eta).exp() / (2.0 * PI)).collect();
    let rows: Vec<Vec<C64>> = (0..m)
        .into_par_iter()
        .map(|k| {
            let c: Vec<C64> = (0..om.n).map(|q| spec.at(k, q) * damp[q]).collect();
            phase_sums(&c, &d, xi)
        })
        .collect();
    rows.concat()
}

pub fn cross_matrix_element_mellin(p1: PhasePoint, p2: PhasePoint, spec: &MellinSpectrum, hb: PlanckScale) -> Result<C64> {
    Ok(MellinKernel::new(spec, hb, None)?.element(p1, p2))
}

/// Husimi field of the operator whose symbol has Mellin spectrum `spec`.
pub fn husimi_from_mellin(spec: &MellinSpectrum, targets: &PhaseGrid, hb: PlanckScale) -> Result<HusimiField> {
    let kernel = MellinKernel::new(spec, hb, None)?;
    Ok(husimi_from_kernel(&kernel, targets))
}

pub fn husimi_from_kernel(kernel: &MellinKernel, targets: &PhaseGrid) -> HusimiField {
    let nb = targets.b_grid.n;
    let values = (0..targets.len())
        .into_par_iter()
        .map(|idx| {
            let p = targets.point(idx / nb, idx % nb);
            kernel.element(p, p).re / kernel.h
        })
        .collect();
    HusimiField { a_grid: targets.a_grid.clone(), b_grid: targets.b_grid.clone(), values }
}

/// Displacement `(α, β)` of the complexified Husimi arguments
/// `(a + α + iβ, b + β - iα)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexDisplacement {
    pub alpha: f64,
    pub beta: f64,
}

impl ComplexDisplacement {
    pub fn zero() -> Self {
        Self { alpha: 0.0, beta: 0.0 }
    }

    /// Point of the right-hand coherent state, `(a + 2α, b + 2β)`.
    pub fn partner(self, p: PhasePoint) -> Result<PhasePoint> {
        let a2 = p.a + 2.0 * self.alpha;
        if !(a2 > 0.0) {
            return Err(Error::Domain(format!("a + 2α = {a2} must be positive")));
        }
        Ok(PhasePoint { a: a2, b: p.b + 2.0 * self.beta })
    }

    /// Complexified Husimi arguments.
    pub fn complex_point(self, p: PhasePoint) -> (C64, C64) {
        (C64::new(p.a + self.alpha, self.beta), C64::new(p.b + self.beta, -self.alpha))
    }
}

/// `ln[(A²/(a a'))^{1/ħ+1/2}]` with `A = a + α + iβ`; `Re A > 0` keeps the
/// principal log continuous along the straight path from zero displacement.
pub fn continuation_log_prefactor(p: PhasePoint, d: ComplexDisplacement, hb: PlanckScale) -> Result<C64> {
    let q = d.partner(p)?;
    let big_a = C64::new(p.a + d.alpha, d.beta);
    Ok((big_a.ln() * 2.0 - p.a.ln() - q.a.ln()) * scale_power(hb.value()))
}

/// `ħ W̃(a + α + iβ, b + β - iα)` realised as
/// `(A²/(a a'))^{1/ħ+1/2} ⟨φ_{a+2α, b+2β}, W φ_{a,b}⟩`.
pub fn husimi_continuation(p: PhasePoint, d: ComplexDisplacement, op: &OperatorMatrix, hb: PlanckScale) -> Result<C64> {
    let q = d.partner(p)?;
    let pref = continuation_log_prefactor(p, d, hb)?.exp();
    Ok(pref * cross_matrix_element(q, p, op, hb))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::affine::u_action;
    use crate::grid::inner_product;

    fn hb1() -> PlanckScale {
        PlanckScale::new(1.0).unwrap()
    }

    fn small() -> LogGrid {
        LogGrid::new(1e-4, 40.0, 1024).unwrap()
    }

    #[test]
    fn fiducial_state() {
        let g = LogGrid::default_desk();
        let s = coherent_state(PhasePoint::new(1.0, 0.0).unwrap(), hb1(), &g).unwrap();
        for (x, v) in g.points().iter().zip(&s.state.values) {
            assert!((v.re - 2.0 * x * (-x).exp()).abs() < 1e-14 && v.im == 0.0);
        }
        assert!((s.state.norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn overlaps_shrink_with_scale() {
        let g = LogGrid::default_desk();
        let f = coherent_values(PhasePoint { a: 1.0, b: 0.0 }, hb1(), &g);
        let mut last = 1.0;
        for a in [2.0, 3.0, 5.0] {
            let o = inner_product(&f, &coherent_values(PhasePoint { a, b: 0.0 }, hb1(), &g)).unwrap().norm();
            // closed form: (4a)^{3/2} / (1+a)^3
            assert!((o - (4.0 * a).powf(1.5) / (1.0 + a).powi(3)).abs() < 1e-10);
            assert!(o < last);
            last = o;
        }
    }

    #[test]
    fn unresolved_peak() {
        let g = LogGrid::default_desk();
        assert!(matches!(coherent_state(PhasePoint { a: 0.05, b: 0.0 }, hb1(), &g), Err(Error::Resolution(_))));
    }

    #[test]
    fn translated_fiducial() {
        let g = LogGrid::default_desk();
        let hb = PlanckScale::new(0.5).unwrap();
        let fid = coherent_values(PhasePoint { a: 1.0, b: 0.0 }, hb, &g);
        for (a, b) in [(0.7, 0.3), (2.0, -1.0), (1.3, 2.5)] {
            let p = PhasePoint { a, b };
            let u = u_action(p, &fid, hb);
            let c = coherent_values(p, hb, &g);
            let d = u.axpy(C64::new(-1.0, 0.0), &c).unwrap().norm();
            assert!(d < 1e-8, "{a},{b}: {d}");
        }
    }

    #[test]
    fn husimi_pure_peak_and_orthogonal() {
        let g = small();
        let p0 = PhasePoint { a: 1.2, b: 0.4 };
        let phi = coherent_values(p0, hb1(), &g);
        let tg = PhaseGrid::new(LogGrid::new(1.2, 2.0, 2).unwrap(), UniformGrid::new(0.4, 1.0, 2).unwrap());
        let f = husimi_pure(&phi, &tg, hb1());
        assert!((f.at(0, 0) - 1.0).abs() < 1e-10);
        let other = coherent_values(PhasePoint { a: 0.8, b: -0.5 }, hb1(), &g);
        let proj = inner_product(&phi, &other).unwrap();
        let orth = other.axpy(-proj, &phi).unwrap();
        assert!(husimi_pure(&orth, &tg, hb1()).at(0, 0) <= 1e-10);
        assert!(husimi_pure(&HalfLineFunction::zeros(&g), &tg, hb1()).values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn operator_and_pure_agree() {
        let g = LogGrid::new(1e-4, 40.0, 400).unwrap();
        let phi = coherent_values(PhasePoint { a: 1.0, b: 0.0 }, hb1(), &g);
        let op = OperatorMatrix::projector(&phi);
        let tg = PhaseGrid::new(LogGrid::new(0.5, 2.0, 5).unwrap(), UniformGrid::symmetric(2.0, 7).unwrap());
        let a = husimi_operator(&op, &tg, hb1());
        let b = husimi_pure(&phi, &tg, hb1());
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!(a.min() >= -1e-12);
    }

    #[test]
    fn dirichlet_closed_form() {
        let b = UniformGrid::new(-1.0, 3.0, 41).unwrap();
        for t in [0.0, 1e-9, 0.3, 7.1] {
            let want: C64 = (0..b.n).map(|l| C64::from_polar(b.weight(l), -b.point(l) * t)).sum();
            assert!((dirichlet(&b, t) - want).norm() < 1e-12, "t={t}");
        }
    }

    #[test]
    fn continuation_at_zero_is_diagonal() {
        let g = LogGrid::new(1e-4, 40.0, 300).unwrap();
        let f = coherent_values(PhasePoint { a: 0.9, b: 0.2 }, hb1(), &g);
        let op = OperatorMatrix::projector(&f);
        let p = PhasePoint { a: 1.1, b: -0.3 };
        let c = husimi_continuation(p, ComplexDisplacement::zero(), &op, hb1()).unwrap();
        let d = cross_matrix_element(p, p, &op, hb1());
        assert_eq!(c, d);
        assert!(c.im.abs() < 1e-14 && c.re >= 0.0);
        let bad = ComplexDisplacement { alpha: -0.6, beta: 0.0 };
        assert!(matches!(husimi_continuation(p, bad, &op, hb1()), Err(Error::Domain(_))));
    }

    #[test]
    fn covariance_under_translation() {
        let g = LogGrid::default_desk();
        let hb = hb1();
        let psi = HalfLineFunction::from_fn(&g, |x| C64::new(x * x * (-1.3 * x).exp(), 0.2 * x * (-x).exp()));
        let p0 = PhasePoint { a: 1.4, b: 0.6 };
        let moved = u_action(p0, &psi, hb);
        for &a in &[0.7, 1.0, 1.5, 2.0, 2.6] {
            for &b in &[-1.0, -0.3, 0.0, 0.8, 1.7] {
                let tg = PhaseGrid::new(LogGrid::new(a, a * 2.0, 2).unwrap(), UniformGrid::new(b, b + 1.0, 2).unwrap());
                let q = p0.inverse().compose(PhasePoint { a, b });
                let tq = PhaseGrid::new(LogGrid::new(q.a, q.a * 2.0, 2).unwrap(), UniformGrid::new(q.b, q.b + 1.0, 2).unwrap());
                let lhs = husimi_pure(&moved, &tg, hb).at(0, 0);
                let rhs = husimi_pure(&psi, &tq, hb).at(0, 0);
                assert!((lhs - rhs).abs() < 1e-6 * rhs.abs().max(1e-3), "({a},{b}): {lhs} vs {rhs}");
            }
        }
    }

    #[test]
    fn wigner_conjugate_in_b() {
        let g = small();
        let psi = coherent_values(PhasePoint { a: 1.0, b: 0.0 }, hb1(), &g);
        let tg = PhaseGrid::new(LogGrid::new(0.5, 2.0, 4).unwrap(), UniformGrid::symmetric(3.0, 13).unwrap());
        let w = affine_wigner(&psi, &tg, hb1());
        for k in 0..4 {
            for l in 0..13 {
                assert!((w.at(k, l) - w.at(k, 12 - l).conj()).norm() < 1e-12);
            }
        }
        let z = affine_wigner(&HalfLineFunction::zeros(&g), &tg, hb1());
        assert!(z.values.iter().all(|v| *v == ZERO));
    }
}
