//! The ax+b group on L²(ℝ⁺): U, V, C, affine Weyl quantization and its inverse.
//!
//! Conventions (see README for the derivation):
//! * `(U(a,b)f)(x) = a^{1/2} e^{ibx/ħ} f(ax)`
//! * `(V(a,b)f)(x) = (ax)^{-1} e^{ib(x - 1/(a²x))/ħ} f(1/(a²x))`, a unitary involution
//! * `W = ∫ S(a,b) V(a,b) da db / (2a²ħ)`, kernel `w(x,y) = K0 Ŝ(1/√(xy), y - x)`
//! * `S(a,b) = (4/π) Tr[W V(a,b) C(a)]`

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{cubic_stencil, HalfLineFunction, LogGrid, OperatorMatrix, PlanckScale, UniformGrid};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePoint {
    pub a: f64,
    pub b: f64,
}

impl PhasePoint {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0 && b.is_finite()) {
            return Err(Error::Parameter(format!("phase point needs a > 0, got ({a}, {b})")));
        }
        Ok(Self { a, b })
    }

    /// Group product `(a,b)·(a',b') = (aa', ab' + b)`.
    pub fn compose(self, other: PhasePoint) -> PhasePoint {
        PhasePoint { a: self.a * other.a, b: self.a * other.b + self.b }
    }

    pub fn inverse(self) -> PhasePoint {
        PhasePoint { a: 1.0 / self.a, b: -self.b / self.a }
    }
}

/// Function on the half-plane sampled on `a_grid × b_grid` (row-major in `a`).
#[derive(Debug, Clone)]
pub struct AffineSymbol {
    pub a_grid: LogGrid,
    pub b_grid: UniformGrid,
    pub values: Vec<C64>,
}

impl AffineSymbol {
    pub fn new(a_grid: LogGrid, b_grid: UniformGrid, values: Vec<C64>) -> Result<Self> {
        if values.len() != a_grid.len() * b_grid.n {
            return Err(Error::Structural(format!(
                "{} values for a {}×{} symbol grid",
                values.len(),
                a_grid.len(),
                b_grid.n
            )));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Parameter("non-finite symbol value".into()));
        }
        Ok(Self { a_grid, b_grid, values })
    }

    pub fn from_fn(a_grid: &LogGrid, b_grid: &UniformGrid, f: impl Fn(f64, f64) -> C64 + Sync) -> Self {
        let bs = b_grid.points();
        let values = a_grid
            .points()
            .par_iter()
            .flat_map_iter(|&a| bs.iter().map(move |&b| (a, b)).collect::<Vec<_>>())
            .map(|(a, b)| f(a, b))
            .collect();
        Self { a_grid: a_grid.clone(), b_grid: b_grid.clone(), values }
    }

    pub fn zeros(a_grid: &LogGrid, b_grid: &UniformGrid) -> Self {
        Self {
            a_grid: a_grid.clone(),
            b_grid: b_grid.clone(),
            values: vec![ZERO; a_grid.len() * b_grid.n],
        }
    }

    /// Default desk window: a ∈ [0.1, 10] (256, log), b ∈ [-12, 12] (512).
    pub fn default_grids() -> (LogGrid, UniformGrid) {
        (
            LogGrid::new(0.1, 10.0, 256).expect("static grid"),
            UniformGrid::symmetric(12.0, 512).expect("static grid"),
        )
    }

    pub fn n_a(&self) -> usize {
        self.a_grid.len()
    }
    pub fn n_b(&self) -> usize {
        self.b_grid.n
    }
    pub fn row(&self, k: usize) -> &[C64] {
        &self.values[k * self.n_b()..(k + 1) * self.n_b()]
    }
    pub fn at(&self, k: usize, l: usize) -> C64 {
        self.values[k * self.n_b() + l]
    }

    /// Row at an arbitrary scale by cubic interpolation in `ln a`;
    /// `None` outside the a-window (the symbol is taken to vanish there).
    pub fn row_at(&self, a: f64) -> Option<Vec<C64>> {
        let (i, w) = cubic_stencil(self.a_grid.position(a), self.n_a())?;
        let mut out = vec![ZERO; self.n_b()];
        for (k, wk) in w.iter().enumerate() {
            if *wk == 0.0 {
                continue;
            }
            for (o, v) in out.iter_mut().zip(self.row(i + k)) {
                *o += v * wk;
            }
        }
        Some(out)
    }

    pub fn scale(&self, c: C64) -> Self {
        Self { values: self.values.iter().map(|v| v * c).collect(), ..self.clone() }
    }

    pub fn add(&self, other: &AffineSymbol) -> Result<Self> {
        self.check_same(other)?;
        let values = self.values.iter().zip(&other.values).map(|(x, y)| x + y).collect();
        Ok(Self { values, ..self.clone() })
    }

    pub(crate) fn check_same(&self, other: &AffineSymbol) -> Result<()> {
        if self.a_grid != other.a_grid || self.b_grid != other.b_grid {
            return Err(Error::Structural("symbol grids differ".into()));
        }
        Ok(())
    }

    /// `Σ |S| da db / a²`, the integrability proxy.
    pub fn l1_norm(&self) -> f64 {
        let wb = self.b_grid.weights();
        let (pts, wa) = (self.a_grid.points(), self.a_grid.weights());
        (0..self.n_a())
            .map(|k| {
                self.row(k).iter().zip(&wb).map(|(v, w)| v.norm() * w).sum::<f64>() * wa[k]
                    / (pts[k] * pts[k])
            })
            .sum()
    }

    /// Share of the integrability proxy carried by the window's outer rows and columns.
    pub fn boundary_fraction(&self) -> f64 {
        let total = self.l1_norm();
        if total == 0.0 {
            return 0.0;
        }
        let wb = self.b_grid.weights();
        let (pts, wa) = (self.a_grid.points(), self.a_grid.weights());
        let (na, nb) = (self.n_a(), self.n_b());
        let mut edge = 0.0;
        for k in 0..na {
            let m = wa[k] / (pts[k] * pts[k]);
            for l in 0..nb {
                if k == 0 || k == na - 1 || l == 0 || l == nb - 1 {
                    edge += self.at(k, l).norm() * wb[l] * m;
                }
            }
        }
        edge / total
    }

    /// Sup-relative difference `‖S - T‖∞ / ‖T‖∞` restricted to an index box.
    pub fn sup_rel_diff(&self, reference: &AffineSymbol, ka: (usize, usize), lb: (usize, usize)) -> Result<f64> {
        self.check_same(reference)?;
        let (mut num, mut den) = (0.0f64, 0.0f64);
        for k in ka.0..ka.1 {
            for l in lb.0..lb.1 {
                num = num.max((self.at(k, l) - reference.at(k, l)).norm());
                den = den.max(reference.at(k, l).norm());
            }
        }
        Ok(if den == 0.0 { num } else { num / den })
    }
}

/// Index boxes covering the middle half of each axis.
pub fn inner_half(n_a: usize, n_b: usize) -> ((usize, usize), (usize, usize)) {
    ((n_a / 4, n_a - n_a / 4), (n_b / 4, n_b - n_b / 4))
}

pub fn u_action(p: PhasePoint, f: &HalfLineFunction, hb: PlanckScale) -> HalfLineFunction {
    let h = hb.value();
    let sa = p.a.sqrt();
    HalfLineFunction::from_fn(&f.grid, |x| f.eval(p.a * x) * C64::from_polar(sa, p.b * x / h))
}

pub fn v_action(p: PhasePoint, f: &HalfLineFunction, hb: PlanckScale) -> HalfLineFunction {
    let h = hb.value();
    HalfLineFunction::from_fn(&f.grid, |x| {
        let y = 1.0 / (p.a * p.a * x);
        f.eval(y) * C64::from_polar(1.0 / (p.a * x), p.b * (x - y) / h)
    })
}

/// Multiplier `½(ax + 1/(ax))` of `C(a)`.
#[inline]
pub fn c_multiplier(a: f64, x: f64) -> f64 {
    0.5 * (a * x + 1.0 / (a * x))
}

pub fn c_action(a: f64, f: &HalfLineFunction) -> Result<HalfLineFunction> {
    if !(a > 0.0) {
        return Err(Error::Parameter(format!("C(a) needs a > 0, got {a}")));
    }
    let values = f.grid.points().iter().zip(&f.values).map(|(&x, v)| v * c_multiplier(a, x)).collect();
    Ok(HalfLineFunction { grid: f.grid.clone(), values })
}

/// `(2πħ)^{1/2} ∫ V da db / (2a²ħ)`-normalised kernel constant times `(2πħ)^{-1/2}`.
fn kernel_prefactor(h: f64) -> f64 {
    1.0 / (4.0 * h)
}

fn check_b_resolution(sym: &AffineSymbol, grid: &LogGrid, h: f64) -> Result<f64> {
    let c_max = grid.x_max() - grid.x_min();
    let period = 2.0 * PI * h / sym.b_grid.step();
    if period < 2.0 * c_max {
        return Err(Error::Resolution(format!(
            "b-step {} aliases the ħ-Fourier transform: period {period:.3} < 2·(x_max - x_min) = {:.3}",
            sym.b_grid.step(),
            2.0 * c_max
        )));
    }
    Ok(c_max)
}

/// Affine Weyl quantization through the kernel formula
/// `w(x,y) = K0 Ŝ(1/√(xy), y - x)`.
///
/// `Ŝ(a, c)` is tabulated on a symmetric `c`-grid for every symbol row and
/// read back with bicubic interpolation in `(ln a, c)`.
pub fn quantize_kernel(sym: &AffineSymbol, grid: &LogGrid, hb: PlanckScale) -> Result<OperatorMatrix> {
    let h = hb.value();
    let c_max = check_b_resolution(sym, grid, h)?;
    let bs = sym.b_grid.points();
    let wb = sym.b_grid.weights();
    let b_abs = bs.iter().fold(0.0f64, |m, b| m.max(b.abs()));
    // ~24 samples per shortest oscillation 2πħ/|b|max, and never coarser than 0.02
    let hc_target = (2.0 * PI * h / (24.0 * b_abs.max(1e-12))).min(0.02);
    let half = (c_max / hc_target).ceil() as usize + 2;
    let nc = 2 * half + 1;
    let hc = (c_max + 2.0 * hc_target) / half as f64;
    let pref = kernel_prefactor(h);

    // table[k][q] = K0 Ŝ(a_k, c_q)
    let table: Vec<Vec<C64>> = (0..sym.n_a())
        .into_par_iter()
        .map(|k| {
            let row = sym.row(k);
            let mut out = vec![ZERO; nc];
            if row.iter().all(|v| *v == ZERO) {
                return out;
            }
            let c0 = -(half as f64) * hc;
            let mut phase: Vec<C64> = bs.iter().map(|&b| C64::from_polar(1.0, -b * c0 / h)).collect();
            let step: Vec<C64> = bs.iter().map(|&b| C64::from_polar(1.0, -b * hc / h)).collect();
            let sw: Vec<C64> = row.iter().zip(&wb).map(|(v, w)| v * (w * pref)).collect();
            for (q, o) in out.iter_mut().enumerate() {
                if q % 64 == 0 {
                    let c = c0 + q as f64 * hc;
                    for (p, &b) in phase.iter_mut().zip(&bs) {
                        *p = C64::from_polar(1.0, -b * c / h);
                    }
                }
                let mut acc = ZERO;
                for ((s, p), st) in sw.iter().zip(phase.iter_mut()).zip(&step) {
                    acc += s * *p;
                    *p *= st;
                }
                *o = acc;
            }
            out
        })
        .collect();

    let n = grid.len();
    let xs = grid.points();
    let mut entries = vec![ZERO; n * n];
    entries.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        for (j, e) in row.iter_mut().enumerate() {
            let a = 1.0 / (xs[i] * xs[j]).sqrt();
            let Some((ka, wa)) = cubic_stencil(sym.a_grid.position(a), sym.n_a()) else {
                continue;
            };
            let c = xs[j] - xs[i];
            let Some((qc, wc)) = cubic_stencil((c + half as f64 * hc) / hc, nc) else {
                continue;
            };
            let mut acc = ZERO;
            for (r, war) in wa.iter().enumerate() {
                if *war == 0.0 {
                    continue;
                }
                let t = &table[ka + r];
                let v = t[qc] * wc[0] + t[qc + 1] * wc[1] + t[qc + 2] * wc[2] + t[qc + 3] * wc[3];
                acc += v * war;
            }
            *e = acc;
        }
    });
    OperatorMatrix::new(grid.clone(), entries)
}

/// Result of [`quantize_superposition`] with its truncation diagnostics.
#[derive(Debug, Clone)]
pub struct Superposition {
    pub op: OperatorMatrix,
    pub boundary_fraction: f64,
    pub warnings: Vec<String>,
}

/// Affine Weyl quantization as the superposition `∫ S V da db / (2a²ħ)`.
///
/// The a-quadrature uses the nodes `a_m = (x_i x_j)^{-1/2}`, `m = i + j`, on
/// which `V(a_m, b)` maps grid points to grid points. Applied to the delta
/// surrogate `e_j / w_j` it has the single entry
/// `(a_m x_i)^{-1} e^{ib(x_i - x_j)/ħ} / w_j` at row `i = m - j`,
/// so each column is accumulated exactly from its `v_action`.
pub fn quantize_superposition(sym: &AffineSymbol, grid: &LogGrid, hb: PlanckScale) -> Result<Superposition> {
    let h = hb.value();
    check_b_resolution(sym, grid, h)?;
    let n = grid.len();
    let (xs, ws) = (grid.points(), grid.weights());
    let delta = grid.delta();
    let nb = sym.n_b();
    let wb = sym.b_grid.weights();
    let b0 = sym.b_grid.start;
    let db = sym.b_grid.step();

    // Interpolated symbol rows at the grid-aligned scales, pre-multiplied by db weights.
    let rows: Vec<Option<Vec<C64>>> = (0..2 * n - 1)
        .into_par_iter()
        .map(|m| {
            let a = 1.0 / (xs[m / 2] * xs[m - m / 2]).sqrt();
            sym.row_at(a).map(|r| r.iter().zip(&wb).map(|(v, w)| v * w).collect())
        })
        .collect();

    let mut entries = vec![ZERO; n * n];
    entries.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        for (j, e) in row.iter_mut().enumerate() {
            let m = i + j;
            let Some(s) = &rows[m] else { continue };
            // trapezoid weight of node m in ln a is Δ/2, halved at the extreme nodes
            let end = if m == 0 || m == 2 * n - 2 { 0.5 } else { 1.0 };
            // (a_m Δ/2) / (2 a_m² ħ) · 1 / (a_m x_i w_j) with a_m² x_i = 1/x_j
            let weight = end * delta * xs[j] / (4.0 * h * ws[j]);
            let d = (xs[i] - xs[j]) / h;
            let mut p = C64::from_polar(1.0, b0 * d);
            let st = C64::from_polar(1.0, db * d);
            let mut acc = ZERO;
            for (l, sv) in s.iter().enumerate() {
                if l % 128 == 0 && l > 0 {
                    p = C64::from_polar(1.0, (b0 + l as f64 * db) * d);
                }
                acc += sv * p;
                p *= st;
            }
            debug_assert!(nb == s.len());
            *e = acc * weight;
        }
    });
    let op = OperatorMatrix::new(grid.clone(), entries)?;
    let boundary_fraction = sym.boundary_fraction();
    let mut warnings = Vec::new();
    if boundary_fraction > 1e-8 {
        warnings.push(format!(
            "symbol window truncation: boundary rows/columns carry {boundary_fraction:.3e} of Σ|S| da db/a²"
        ));
    }
    Ok(Superposition { op, boundary_fraction, warnings })
}

/// Inverse map `S(a,b) = (4/π) Tr[W V(a,b) C(a)]` on the target grids.
///
/// With the kernel of `V C`, the trace reduces to the single integral
/// `∫ w(1/(a²x), x) (ax)^{-1} e^{ib(x - 1/(a²x))/ħ} ½(ax + 1/(ax)) dx`.
pub fn symbol_of(op: &OperatorMatrix, a_targets: &LogGrid, b_targets: &UniformGrid, hb: PlanckScale) -> AffineSymbol {
    let h = hb.value();
    let grid = &op.grid;
    let n = grid.len();
    let (xs, ws) = (grid.points(), grid.weights());
    let bs = b_targets.points();
    let db = b_targets.step();
    let values: Vec<C64> = a_targets
        .points()
        .par_iter()
        .flat_map_iter(|&a| {
            // g_j = w(1/(a²x_j), x_j) (a x_j)^{-1} c(x_j) w_j, phase argument d_j
            let mut g = Vec::with_capacity(n);
            let mut d = Vec::with_capacity(n);
            for j in 0..n {
                let y = 1.0 / (a * a * xs[j]);
                let Some((i0, wi)) = cubic_stencil(grid.position(y), n) else { continue };
                let mut k = ZERO;
                for (r, w) in wi.iter().enumerate() {
                    if *w != 0.0 {
                        k += op.at(i0 + r, j) * w;
                    }
                }
                if k == ZERO {
                    continue;
                }
                g.push(k * (c_multiplier(a, xs[j]) * ws[j] / (a * xs[j])));
                d.push((xs[j] - y) / h);
            }
            let mut phase: Vec<C64> = d.iter().map(|&dj| C64::from_polar(1.0, bs[0] * dj)).collect();
            let step: Vec<C64> = d.iter().map(|&dj| C64::from_polar(1.0, db * dj)).collect();
            let mut row = Vec::with_capacity(bs.len());
            for (l, &b) in bs.iter().enumerate() {
                if l % 64 == 0 && l > 0 {
                    for (p, &dj) in phase.iter_mut().zip(&d) {
                        *p = C64::from_polar(1.0, b * dj);
                    }
                }
                let mut acc = ZERO;
                for ((gj, p), st) in g.iter().zip(phase.iter_mut()).zip(&step) {
                    acc += gj * *p;
                    *p *= st;
                }
                row.push(acc * (4.0 / PI));
            }
            row
        })
        .collect();
    AffineSymbol { a_grid: a_targets.clone(), b_grid: b_targets.clone(), values }
}

/// Weak form `Σ ⟨f, V(a,b) f⟩ da db / (2 a^power ħ)` over a rectangular window.
///
/// Used to decide which Haar-type measure turns `∫ V` into a multiple of the
/// identity.
pub fn v_superposition_weak(f: &HalfLineFunction, a_grid: &LogGrid, b_grid: &UniformGrid, hb: PlanckScale, power: f64) -> C64 {
    let h = hb.value();
    let (xs, ws) = (f.grid.points(), f.grid.weights());
    let bs = b_grid.points();
    let wb = b_grid.weights();
    a_grid
        .points()
        .par_iter()
        .zip(a_grid.weights().par_iter())
        .map(|(&a, &wa)| {
            // ⟨f, V f⟩ = Σ_i conj f_i (a x_i)^{-1} f(y_i) e^{ib(x_i - y_i)/ħ} w_i
            let terms: Vec<(C64, f64)> = xs
                .iter()
                .zip(ws)
                .zip(&f.values)
                .map(|((&x, &w), fx)| {
                    let y = 1.0 / (a * a * x);
                    (fx.conj() * f.eval(y) * (w / (a * x)), (x - y) / h)
                })
                .filter(|(c, _)| *c != ZERO)
                .collect();
            let db = b_grid.step();
            let mut phase: Vec<C64> = terms.iter().map(|(_, d)| C64::from_polar(1.0, bs[0] * d)).collect();
            let step: Vec<C64> = terms.iter().map(|(_, d)| C64::from_polar(1.0, db * d)).collect();
            let mut acc = ZERO;
            for (l, w) in wb.iter().enumerate() {
                if l % 64 == 0 && l > 0 {
                    for (p, (_, d)) in phase.iter_mut().zip(&terms) {
                        *p = C64::from_polar(1.0, bs[l] * d);
                    }
                }
                let mut s = ZERO;
                for ((c, _), (p, st)) in terms.iter().zip(phase.iter_mut().zip(&step)) {
                    s += c * *p;
                    *p *= st;
                }
                acc += s * w;
            }
            acc * (wa / (2.0 * a.powf(power) * h))
        })
        .collect::<Vec<_>>()
        .into_iter()
        .sum()
}
