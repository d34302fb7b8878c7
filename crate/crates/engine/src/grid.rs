//! Logarithmic grids on the half-line, sampled functions and dense kernels.

use std::sync::Arc;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};

#[derive(Debug)]
struct GridData {
    x_min: f64,
    x_max: f64,
    delta: f64,
    points: Vec<f64>,
    weights: Vec<f64>,
}

/// Geometric grid `x_j = x_min r^j` with trapezoid weights in `ln x`.
#[derive(Debug, Clone)]
pub struct LogGrid(Arc<GridData>);

impl PartialEq for LogGrid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.0.x_min.to_bits() == other.0.x_min.to_bits()
                && self.0.x_max.to_bits() == other.0.x_max.to_bits()
                && self.len() == other.len())
    }
}

pub fn make_log_grid(x_min: f64, x_max: f64, n: usize) -> Result<LogGrid> {
    LogGrid::new(x_min, x_max, n)
}

impl LogGrid {
    pub fn new(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite() && x_min > 0.0 && x_min < x_max) {
            return Err(Error::Parameter(format!(
                "log grid needs 0 < x_min < x_max, got [{x_min}, {x_max}]"
            )));
        }
        if n < 2 {
            return Err(Error::Parameter(format!("log grid needs n >= 2, got {n}")));
        }
        let (l0, l1) = (x_min.ln(), x_max.ln());
        let delta = (l1 - l0) / (n - 1) as f64;
        let points: Vec<f64> = (0..n)
            .map(|j| {
                if j == 0 {
                    x_min
                } else if j == n - 1 {
                    x_max
                } else {
                    (l0 + j as f64 * delta).exp()
                }
            })
            .collect();
        let mut weights: Vec<f64> = points.iter().map(|x| x * delta).collect();
        weights[0] *= 0.5;
        weights[n - 1] *= 0.5;
        Ok(LogGrid(Arc::new(GridData { x_min, x_max, delta, points, weights })))
    }

    /// Desk-scale default for hbar in [0.5, 2] and a in [0.3, 3]. At hbar = 2
    /// the slow tail of coherent states loses up to ~2e-7 of the norm here.
    pub fn default_desk() -> Self {
        Self::new(1e-4, 40.0, 2048).expect("static grid")
    }

    pub fn x_min(&self) -> f64 {
        self.0.x_min
    }
    pub fn x_max(&self) -> f64 {
        self.0.x_max
    }
    pub fn len(&self) -> usize {
        self.0.points.len()
    }
    pub fn is_empty(&self) -> bool {
        false
    }
    /// Step in `ln x`.
    pub fn delta(&self) -> f64 {
        self.0.delta
    }
    pub fn ratio(&self) -> f64 {
        self.0.delta.exp()
    }
    pub fn points(&self) -> &[f64] {
        &self.0.points
    }
    pub fn weights(&self) -> &[f64] {
        &self.0.weights
    }
    pub fn log_point(&self, j: usize) -> f64 {
        self.0.x_min.ln() + j as f64 * self.0.delta
    }

    /// Fractional index of `x` in log coordinates.
    pub fn position(&self, x: f64) -> f64 {
        (x.ln() - self.0.x_min.ln()) / self.0.delta
    }

    pub(crate) fn check_same(&self, other: &LogGrid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::Structural(format!(
                "grid mismatch: [{}, {}; {}] vs [{}, {}; {}]",
                self.x_min(),
                self.x_max(),
                self.len(),
                other.x_min(),
                other.x_max(),
                other.len()
            )))
        }
    }
}

/// Four-point Lagrange stencil at fractional position `t` on a unit grid of
/// length `n`. Returns the first index and weights; `None` outside the grid.
pub(crate) fn cubic_stencil(t: f64, n: usize) -> Option<(usize, [f64; 4])> {
    let last = (n - 1) as f64;
    if !(t >= -1e-9 && t <= last + 1e-9) {
        return None;
    }
    let t = t.clamp(0.0, last);
    if n < 4 {
        let i = (t.floor() as usize).min(n - 2);
        let f = t - i as f64;
        return Some((i, [1.0 - f, f, 0.0, 0.0]));
    }
    let i = (t.floor() as usize).saturating_sub(1).min(n - 4);
    let f = t - i as f64;
    let w = [
        -(f - 1.0) * (f - 2.0) * (f - 3.0) / 6.0,
        f * (f - 2.0) * (f - 3.0) / 2.0,
        -f * (f - 1.0) * (f - 3.0) / 2.0,
        f * (f - 1.0) * (f - 2.0) / 6.0,
    ];
    Some((i, w))
}

/// Uniform real grid with trapezoid weights, used for `b`, `ξ` and `τ`.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformGrid {
    pub start: f64,
    pub stop: f64,
    pub n: usize,
}

impl UniformGrid {
    pub fn new(start: f64, stop: f64, n: usize) -> Result<Self> {
        if !(start.is_finite() && stop.is_finite() && start < stop) || n < 2 {
            return Err(Error::Parameter(format!("uniform grid [{start}, {stop}] with n = {n}")));
        }
        Ok(Self { start, stop, n })
    }
    /// Grid symmetric about zero.
    pub fn symmetric(half_width: f64, n: usize) -> Result<Self> {
        Self::new(-half_width, half_width, n)
    }
    pub fn step(&self) -> f64 {
        (self.stop - self.start) / (self.n - 1) as f64
    }
    pub fn point(&self, k: usize) -> f64 {
        if k == self.n - 1 {
            self.stop
        } else {
            self.start + k as f64 * self.step()
        }
    }
    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.point(k)).collect()
    }
    pub fn weight(&self, k: usize) -> f64 {
        if k == 0 || k == self.n - 1 {
            0.5 * self.step()
        } else {
            self.step()
        }
    }
    pub fn weights(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.weight(k)).collect()
    }
    pub fn position(&self, x: f64) -> f64 {
        (x - self.start) / self.step()
    }
}

/// Six-point Lagrange stencil, same contract as [`cubic_stencil`].
pub(crate) fn quintic_stencil(t: f64, n: usize) -> Option<(usize, [f64; 6])> {
    let last = (n - 1) as f64;
    if !(t >= -1e-9 && t <= last + 1e-9) {
        return None;
    }
    if n < 6 {
        let (i, w) = cubic_stencil(t, n)?;
        return Some((i, [w[0], w[1], w[2], w[3], 0.0, 0.0]));
    }
    let t = t.clamp(0.0, last);
    let i = (t.floor() as usize).saturating_sub(2).min(n - 6);
    let f = t - i as f64;
    let mut w = [0.0; 6];
    for (k, wk) in w.iter_mut().enumerate() {
        let mut num = 1.0;
        let mut den = 1.0;
        for m in 0..6 {
            if m != k {
                num *= f - m as f64;
                den *= k as f64 - m as f64;
            }
        }
        *wk = num / den;
    }
    Some((i, w))
}

/// Complex samples on a [`LogGrid`].
#[derive(Debug, Clone)]
pub struct HalfLineFunction {
    pub grid: LogGrid,
    pub values: Vec<C64>,
}

impl HalfLineFunction {
    pub fn new(grid: LogGrid, values: Vec<C64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Structural(format!(
                "{} values for a {}-point grid",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Parameter("non-finite sample".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: &LogGrid, f: impl Fn(f64) -> C64) -> Self {
        let values = grid.points().iter().map(|&x| f(x)).collect();
        Self { grid: grid.clone(), values }
    }

    pub fn zeros(grid: &LogGrid) -> Self {
        Self { grid: grid.clone(), values: vec![C64::new(0.0, 0.0); grid.len()] }
    }

    pub fn norm(&self) -> f64 {
        self.values
            .iter()
            .zip(self.grid.weights())
            .map(|(v, w)| v.norm_sqr() * w)
            .sum::<f64>()
            .sqrt()
    }

    /// Six-point Lagrange interpolation in `ln x`; zero outside the grid.
    pub fn eval(&self, x: f64) -> C64 {
        if !(x > 0.0) {
            return C64::new(0.0, 0.0);
        }
        match quintic_stencil(self.grid.position(x), self.grid.len()) {
            Some((i, w)) => (0..6)
                .filter(|&k| w[k] != 0.0)
                .map(|k| self.values[i + k] * w[k])
                .sum(),
            None => C64::new(0.0, 0.0),
        }
    }

    pub fn scale(&self, c: C64) -> Self {
        Self { grid: self.grid.clone(), values: self.values.iter().map(|v| v * c).collect() }
    }

    pub fn axpy(&self, c: C64, other: &HalfLineFunction) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + c * b).collect();
        Ok(Self { grid: self.grid.clone(), values })
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        if n > 0.0 {
            self.scale(C64::new(1.0 / n, 0.0))
        } else {
            self.clone()
        }
    }
}

/// `Σ conj(f_j) g_j w_j`, conjugate-linear in the first slot.
pub fn inner_product(f: &HalfLineFunction, g: &HalfLineFunction) -> Result<C64> {
    f.grid.check_same(&g.grid)?;
    Ok(f.values
        .iter()
        .zip(&g.values)
        .zip(f.grid.weights())
        .map(|((a, b), w)| a.conj() * b * w)
        .sum())
}

/// Integral kernel on a grid: `(W f)(x_i) = Σ_j entries[i][j] w_j f(x_j)`.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    pub grid: LogGrid,
    /// Row-major `n × n`.
    pub entries: Vec<C64>,
}

impl OperatorMatrix {
    pub fn new(grid: LogGrid, entries: Vec<C64>) -> Result<Self> {
        let n = grid.len();
        if entries.len() != n * n {
            return Err(Error::Structural(format!("{} entries for n = {n}", entries.len())));
        }
        if entries.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Parameter("non-finite kernel entry".into()));
        }
        Ok(Self { grid, entries })
    }

    pub fn zeros(grid: &LogGrid) -> Self {
        let n = grid.len();
        Self { grid: grid.clone(), entries: vec![C64::new(0.0, 0.0); n * n] }
    }

    /// Discrete identity: `δ_ij / w_j`.
    pub fn identity(grid: &LogGrid) -> Self {
        let mut op = Self::zeros(grid);
        let n = grid.len();
        for (j, w) in grid.weights().iter().enumerate() {
            op.entries[j * n + j] = C64::new(1.0 / w, 0.0);
        }
        op
    }

    /// `Σ_k c_k |f_k⟩⟨g_k|`.
    pub fn outer_sum(terms: &[(C64, &HalfLineFunction, &HalfLineFunction)]) -> Result<Self> {
        let grid = terms
            .first()
            .map(|t| t.1.grid.clone())
            .ok_or_else(|| Error::Parameter("empty outer-product sum".into()))?;
        for (_, f, g) in terms {
            grid.check_same(&f.grid)?;
            grid.check_same(&g.grid)?;
        }
        let n = grid.len();
        let mut entries = vec![C64::new(0.0, 0.0); n * n];
        entries.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            for (c, f, g) in terms {
                let fi = c * f.values[i];
                for (e, gj) in row.iter_mut().zip(&g.values) {
                    *e += fi * gj.conj();
                }
            }
        });
        Ok(Self { grid, entries })
    }

    pub fn projector(f: &HalfLineFunction) -> Self {
        Self::outer_sum(&[(C64::new(1.0, 0.0), f, f)]).expect("single term")
    }

    pub fn n(&self) -> usize {
        self.grid.len()
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> C64 {
        self.entries[i * self.n() + j]
    }

    pub fn adjoint(&self) -> Self {
        let n = self.n();
        let mut entries = vec![C64::new(0.0, 0.0); n * n];
        entries.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            for (j, e) in row.iter_mut().enumerate() {
                *e = self.entries[j * n + i].conj();
            }
        });
        Self { grid: self.grid.clone(), entries }
    }

    /// Hilbert–Schmidt norm of the continuum operator, `(Σ |e_ij|² w_i w_j)^{1/2}`.
    pub fn hs_norm(&self) -> f64 {
        let n = self.n();
        let w = self.grid.weights();
        self.entries
            .chunks(n)
            .zip(w)
            .map(|(row, wi)| row.iter().zip(w).map(|(e, wj)| e.norm_sqr() * wj).sum::<f64>() * wi)
            .sum::<f64>()
            .sqrt()
    }

    pub fn sub(&self, other: &OperatorMatrix) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        let entries = self.entries.iter().zip(&other.entries).map(|(a, b)| a - b).collect();
        Ok(Self { grid: self.grid.clone(), entries })
    }

    pub fn scaled(&self, c: C64) -> Self {
        Self { grid: self.grid.clone(), entries: self.entries.iter().map(|e| e * c).collect() }
    }

    /// `‖W − W†‖ / ‖W‖` in the Hilbert–Schmidt norm.
    pub fn hermiticity_defect(&self) -> f64 {
        let norm = self.hs_norm();
        if norm == 0.0 {
            return 0.0;
        }
        self.sub(&self.adjoint()).expect("same grid").hs_norm() / norm
    }

    /// Operator product as kernels: `(AB)_ik = Σ_j A_ij w_j B_jk`.
    pub fn compose(&self, other: &OperatorMatrix) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        let n = self.n();
        let w = self.grid.weights();
        let mut entries = vec![C64::new(0.0, 0.0); n * n];
        entries.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            for j in 0..n {
                let a = self.entries[i * n + j] * w[j];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for (r, b) in row.iter_mut().zip(&other.entries[j * n..(j + 1) * n]) {
                    *r += a * b;
                }
            }
        });
        Ok(Self { grid: self.grid.clone(), entries })
    }
}

pub fn apply_operator(w: &OperatorMatrix, f: &HalfLineFunction) -> Result<HalfLineFunction> {
    w.grid.check_same(&f.grid)?;
    let n = w.n();
    let wf: Vec<C64> = f.values.iter().zip(w.grid.weights()).map(|(v, q)| v * q).collect();
    let values = w
        .entries
        .par_chunks(n)
        .map(|row| row.iter().zip(&wf).map(|(e, v)| e * v).sum())
        .collect();
    Ok(HalfLineFunction { grid: w.grid.clone(), values })
}

/// Quadrature trace `Σ_j entries[j][j] w_j`.
pub fn trace(w: &OperatorMatrix) -> C64 {
    let n = w.n();
    w.grid.weights().iter().enumerate().map(|(j, q)| w.entries[j * n + j] * q).sum()
}

/// Hbar, validated against the gamma domain used by the coherent constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanckScale(f64);

impl PlanckScale {
    pub fn new(hbar: f64) -> Result<Self> {
        // 2/hbar + 1 must stay inside the log-gamma domain and exp must not
        // overflow in the normalization constant.
        if !(hbar.is_finite() && hbar > 1e-3 && hbar <= 1e3) {
            return Err(Error::Parameter(format!("hbar must lie in (1e-3, 1e3], got {hbar}")));
        }
        Ok(Self(hbar))
    }
    pub fn value(self) -> f64 {
        self.0
    }
}

/// `Σ_j c_j e^{i b_l d_j}` for every `b_l` of a uniform grid.
///
/// Phases advance by a per-term rotation and are resynchronised every 64
/// steps so the accumulated rounding stays at a few ulps.
pub(crate) fn phase_sums(c: &[C64], d: &[f64], b: &UniformGrid) -> Vec<C64> {
    let db = b.step();
    let mut phase: Vec<C64> = d.iter().map(|&dj| C64::from_polar(1.0, b.start * dj)).collect();
    let step: Vec<C64> = d.iter().map(|&dj| C64::from_polar(1.0, db * dj)).collect();
    let mut out = Vec::with_capacity(b.n);
    for l in 0..b.n {
        if l % 64 == 0 && l > 0 {
            let bl = b.start + l as f64 * db;
            for (p, &dj) in phase.iter_mut().zip(d) {
                *p = C64::from_polar(1.0, bl * dj);
            }
        }
        let mut acc = C64::new(0.0, 0.0);
        for ((cj, p), st) in c.iter().zip(phase.iter_mut()).zip(&step) {
            acc += cj * *p;
            *p *= st;
        }
        out.push(acc);
    }
    out
}

/// `Σ_l c_l e^{i b_l t}` by Horner in `e^{i db t}`; `|z| = 1` keeps it stable.
#[inline]
pub(crate) fn horner_phase(c: &[C64], b: &UniformGrid, t: f64) -> C64 {
    let z = C64::from_polar(1.0, b.step() * t);
    let mut acc = C64::new(0.0, 0.0);
    for cl in c.iter().rev() {
        acc = acc * z + cl;
    }
    acc * C64::from_polar(1.0, b.start * t)
}
