//! Spectral propagation and the evolution law of the Husimi field.
//!
//! Three rates are compared at each probe point:
//! * a centred finite difference of the propagated Husimi value,
//! * the exact rate `(2/ħ²) Im⟨φ_{a,b}, H W φ_{a,b}⟩` (the `1/ħ` of `W̃` included),
//! * the kernel rate: the identity `∫ |φ'⟩⟨φ'| da'db'/(2πħa'²)` inserted between
//!   `H` and `W`, with `⟨φ, Hφ'⟩` from the Mellin spectrum of the symbol of `H`
//!   and `⟨φ', Wφ⟩` read as the continued Husimi field.

use std::f64::consts::PI;

use ndarray::{Array1, Array2, ShapeBuilder};
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::affine::{quantize_kernel, AffineSymbol, PhasePoint};
use crate::error::{Error, Result};
use crate::grid::{apply_operator, inner_product, HalfLineFunction, LogGrid, OperatorMatrix, PlanckScale, UniformGrid};
use crate::mellin::{symbol_mellin, CriticalLineGrid};
use crate::phase::{coherent_profile, coherent_values, continuation_log_prefactor, overlap_row, scale_power, ComplexDisplacement, MellinKernel};
use crate::window::ConeWindow;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Eigendecomposition of `W^{1/2} H W^{1/2}` (W = quadrature weights), which
/// is Hermitian in the plain Euclidean sense when `H` is self-adjoint on the grid.
pub struct PropagationPlan {
    pub h: OperatorMatrix,
    pub hb: PlanckScale,
    pub t_grid: Vec<f64>,
    pub eigenvalues: Vec<f64>,
    basis: Array2<C64>,
    sqrt_w: Vec<f64>,
}

impl PropagationPlan {
    pub fn new(h: OperatorMatrix, hb: PlanckScale, t_grid: Vec<f64>) -> Result<Self> {
        let defect = h.hermiticity_defect();
        if defect > 1e-8 {
            return Err(Error::Validity(format!("H is not self-adjoint: defect {defect:e}")));
        }
        if t_grid.windows(2).any(|w| !(w[1] > w[0])) || t_grid.is_empty() {
            return Err(Error::Parameter("t_grid must be non-empty and increasing".into()));
        }
        let n = h.n();
        let sqrt_w: Vec<f64> = h.grid.weights().iter().map(|w| w.sqrt()).collect();
        let sym = |i: usize, j: usize| 0.5 * (h.at(i, j) + h.at(j, i).conj()) * (sqrt_w[i] * sqrt_w[j]);
        // The real symmetric driver loses orthogonality on rank-deficient
        // matrices of a few hundred rows with the bundled LAPACK, so the
        // Hermitian driver is used even when H is real.
        let s = Array2::from_shape_fn((n, n).f(), |(i, j)| sym(i, j));
        let (e, v) = s.eigh(UPLO::Lower).map_err(|e| Error::Linalg(e.to_string()))?;
        let (eigenvalues, basis) = (e.to_vec(), v);
        let picks: Vec<usize> = (0..8).map(|k| k * (n - 1) / 7).collect();
        for &i in &picks {
            for &j in &picks {
                let d: C64 = basis.column(i).iter().zip(basis.column(j).iter()).map(|(a, b)| a.conj() * b).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                if (d - want).norm() > 1e-10 {
                    return Err(Error::Linalg(format!("eigenvectors {i},{j} not orthonormal: {d}")));
                }
            }
        }
        Ok(Self { h, hb, t_grid, eigenvalues, basis, sqrt_w })
    }

    pub fn grid(&self) -> &LogGrid {
        &self.h.grid
    }

    fn to_coeffs(&self, psi: &HalfLineFunction) -> Vec<C64> {
        let u: Vec<C64> = psi.values.iter().zip(&self.sqrt_w).map(|(v, s)| v * s).collect();
        let u = Array1::from_vec(u);
        self.basis.t().mapv(|v| v.conj()).dot(&u).to_vec()
    }

    fn from_coeffs(&self, c: &[C64]) -> HalfLineFunction {
        let u = self.basis.dot(&Array1::from_vec(c.to_vec())).to_vec();
        let values = u.iter().zip(&self.sqrt_w).map(|(v, s)| v / s).collect();
        HalfLineFunction { grid: self.h.grid.clone(), values }
    }

    /// Normalised eigenvector `k` (ascending eigenvalues) as a grid function.
    pub fn eigenstate(&self, k: usize) -> (f64, HalfLineFunction) {
        let mut c = vec![ZERO; self.eigenvalues.len()];
        c[k] = C64::new(1.0, 0.0);
        (self.eigenvalues[k], self.from_coeffs(&c))
    }
}

/// `ψ^t = e^{-iHt/ħ} ψ⁰`.
pub fn propagate(plan: &PropagationPlan, psi0: &HalfLineFunction, t: f64) -> Result<HalfLineFunction> {
    plan.h.grid.check_same(&psi0.grid)?;
    let (lo, hi) = (plan.t_grid[0], *plan.t_grid.last().unwrap());
    if !(t >= lo && t <= hi) {
        return Err(Error::Parameter(format!("t = {t} outside the plan span [{lo}, {hi}]")));
    }
    if t == 0.0 {
        return Ok(psi0.clone());
    }
    let h = plan.hb.value();
    let c: Vec<C64> = plan
        .to_coeffs(psi0)
        .iter()
        .zip(&plan.eigenvalues)
        .map(|(c, e)| c * C64::from_polar(1.0, -e * t / h))
        .collect();
    Ok(plan.from_coeffs(&c))
}

pub fn energy(h: &OperatorMatrix, psi: &HalfLineFunction) -> Result<f64> {
    Ok(inner_product(psi, &apply_operator(h, psi)?)?.re)
}

/// Exact rate `(2/ħ²) Im⟨φ_{a,b}, H W φ_{a,b}⟩` of `W̃(a,b)` under `iħ∂_t W = [H, W]`.
pub fn husimi_rhs_direct(p: PhasePoint, w: &OperatorMatrix, h: &OperatorMatrix, hb: PlanckScale) -> Result<f64> {
    let phi = coherent_values(p, hb, &w.grid);
    let hphi = apply_operator(h, &phi)?;
    let wphi = apply_operator(w, &phi)?;
    // ⟨φ, H W φ⟩ = ⟨Hφ, Wφ⟩ for self-adjoint H
    let hv = hb.value();
    Ok(2.0 / (hv * hv) * inner_product(&hphi, &wphi)?.im)
}

/// Same rate for `W = |ψ⟩⟨ψ|` in `O(n²)` with one matrix-vector product.
pub fn husimi_rhs_pure(p: PhasePoint, psi: &HalfLineFunction, h: &OperatorMatrix, hb: PlanckScale) -> Result<f64> {
    let phi = coherent_values(p, hb, &psi.grid);
    let hphi = apply_operator(h, &phi)?;
    let hv = hb.value();
    Ok(2.0 / (hv * hv) * (inner_product(&hphi, psi)? * inner_product(psi, &phi)?).im)
}

/// `Φ(a,α;b,β) = 4/(2πħ a'²) · ⟨φ_{a,b}, H φ_{a',b'}⟩ · (a a')^{1/ħ+1/2} A^{-2/ħ-1}`
/// with `a' = a+2α`, `b' = b+2β`, `A = a+α+iβ`, so that
/// `∂_t W̃ = (2/ħ) Im ∫ Φ W̃(a+α+iβ, b+β-iα) dα dβ`.
pub fn phi_kernel(p: PhasePoint, d: ComplexDisplacement, kernel: &MellinKernel, hb: PlanckScale) -> Result<C64> {
    let q = d.partner(p)?;
    let h = hb.value();
    let x_h = kernel.element(p, q);
    let inv_pref = (-continuation_log_prefactor(p, d, hb)?).exp();
    Ok(x_h * inv_pref * (4.0 / (2.0 * PI * h * q.a * q.a)))
}

/// Measure and prefactor choices tried for the kernel rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// `da'db'/(2πħa'²)` and `(A²/(aa'))^{1/ħ+1/2}`.
    Derived,
    /// `da'db'/(a'ħ)` as printed for the identity, derived prefactor.
    PrintedMeasure,
    /// Derived measure, printed `√((a+α+i(b+β))/(a-ib))` prefactor.
    PrintedPrefactor,
    /// Both as printed.
    Printed,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Derived, Variant::PrintedMeasure, Variant::PrintedPrefactor, Variant::Printed];

    pub fn label(self) -> &'static str {
        match self {
            Variant::Derived => "V0 derived-measure derived-prefactor",
            Variant::PrintedMeasure => "V1 printed-measure derived-prefactor",
            Variant::PrintedPrefactor => "V2 derived-measure printed-prefactor",
            Variant::Printed => "V3 printed-measure printed-prefactor",
        }
    }
}

#[derive(Debug, Clone)]
pub struct KernelRate {
    /// Indexed like [`Variant::ALL`].
    pub rates: [f64; 4],
    /// `1 - Σ μ |⟨φ', Wφ⟩|² / ‖Wφ‖²` over the insertion window.
    pub missing_mass: f64,
    pub nodes: usize,
}

/// Kernel rate at `p` for the density operator `w`, all variants in one pass.
pub fn husimi_rhs_kernel(p: PhasePoint, w: &OperatorMatrix, kernel: &MellinKernel, window: &ConeWindow, hb: PlanckScale) -> Result<KernelRate> {
    let phi = coherent_values(p, hb, &w.grid);
    let wphi = apply_operator(w, &phi)?;
    let norm_sq = wphi.norm().powi(2);
    let h = hb.value();
    let pw = scale_power(h);
    let rows = window.rows();
    let parts: Vec<([C64; 4], f64, usize)> = rows
        .par_iter()
        .map(|row| {
            let prof = coherent_profile(row.a, hb, &w.grid);
            let y = overlap_row(&prof, &wphi, &row.b, h);
            let wb = row.b.weights();
            let mut acc = [ZERO; 4];
            let mut cap = 0.0;
            let derived_mu = row.da / (2.0 * PI * h * row.a * row.a);
            let printed_mu = row.da / (row.a * h);
            for (l, yl) in y.iter().enumerate() {
                let q = PhasePoint { a: row.a, b: row.b.point(l) };
                cap += yl.norm_sqr() * wb[l] * derived_mu;
                if *yl == ZERO {
                    continue;
                }
                let xy = kernel.element(p, q) * yl * wb[l];
                let d = ComplexDisplacement { alpha: 0.5 * (q.a - p.a), beta: 0.5 * (q.b - p.b) };
                // printed prefactor over the exact one that cancels against Φ
                let big_a = C64::new(p.a + d.alpha, d.beta);
                let exact = (big_a.ln() * 2.0 - p.a.ln() - q.a.ln()) * pw;
                let printed = 0.5 * (C64::new(p.a + d.alpha, p.b + d.beta).ln() - C64::new(p.a, -p.b).ln());
                let ratio = (printed - exact).exp();
                acc[0] += xy * derived_mu;
                acc[1] += xy * printed_mu;
                acc[2] += xy * ratio * derived_mu;
                acc[3] += xy * ratio * printed_mu;
            }
            (acc, cap, row.b.n)
        })
        .collect();
    let mut sums = [ZERO; 4];
    let mut cap = 0.0;
    let mut nodes = 0;
    for (a, c, n) in &parts {
        for k in 0..4 {
            sums[k] += a[k];
        }
        cap += c;
        nodes += n;
    }
    let missing_mass = if norm_sq > 0.0 { 1.0 - cap / norm_sq } else { 0.0 };
    if missing_mass > 1e-3 {
        return Err(Error::Coverage(missing_mass));
    }
    let scale = 2.0 / (h * h);
    Ok(KernelRate { rates: sums.map(|s| scale * s.im), missing_mass, nodes })
}

/// Numerical settings for [`verify_evolution`].
#[derive(Debug, Clone)]
pub struct VerifySettings {
    pub grid: LogGrid,
    pub contour: CriticalLineGrid,
    pub omega: UniformGrid,
    /// ξ nodes of the shifted-contour kernel quadrature.
    pub xi: UniformGrid,
    pub delta: f64,
    /// Rates are compared at this time along the propagation.
    pub t_eval: f64,
    pub insertion: fn(f64) -> ConeWindow,
}

impl Default for VerifySettings {
    fn default() -> Self {
        Self {
            grid: LogGrid::new(1e-4, 40.0, 1024).expect("valid constants"),
            contour: CriticalLineGrid::new(30.0, 201).expect("valid constants"),
            omega: UniformGrid::symmetric(14.0, 113).expect("valid constants"),
            xi: UniformGrid::symmetric(6.0, 129).expect("valid constants"),
            delta: 1e-3,
            t_eval: 0.0,
            insertion: ConeWindow::default_insertion,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ProbeReport {
    pub p: PhasePoint,
    pub finite_difference: f64,
    /// Same difference with δ/2; the pair gauges the O(δ²) error.
    pub finite_difference_half: f64,
    pub direct: f64,
    pub kernel: Option<KernelRate>,
    pub error: Option<String>,
}

impl ProbeReport {
    pub fn fd_gap(&self) -> f64 {
        (self.finite_difference - self.direct).abs()
    }
    pub fn kernel_gap(&self, v: usize) -> Option<f64> {
        self.kernel.as_ref().map(|k| (k.rates[v] - self.direct).abs())
    }
}

#[derive(Debug, Clone)]
pub struct EvolutionReport {
    pub probes: Vec<ProbeReport>,
    pub conventions: Vec<(String, String)>,
    pub max_fd_gap: f64,
    /// Max |kernel − direct| per variant; infinite if any probe failed.
    pub max_kernel_gap: [f64; 4],
    pub energy: f64,
}

impl EvolutionReport {
    pub fn fd_gate(&self, tol: f64) -> bool {
        self.max_fd_gap <= tol
    }
    /// Index of the first variant meeting `tol`, if any.
    pub fn kernel_gate(&self, tol: f64) -> Option<usize> {
        (0..4).find(|&v| self.max_kernel_gap[v] <= tol)
    }
}

pub fn conventions_ledger(hb: PlanckScale) -> Vec<(String, String)> {
    let h = hb.value();
    [
        ("coherent_state", "C(hbar) a^(1/hbar+1/2) x^(1/hbar) exp(-(a-ib)x/hbar), C = (2/hbar)^(1/hbar+1/2)/sqrt(Gamma(2/hbar+1))"),
        ("U", "(U(a,b)f)(x) = a^(1/2) exp(+ibx/hbar) f(ax)"),
        ("V", "(V(a,b)f)(x) = (ax)^(-1) exp(ib(x-1/(a^2 x))/hbar) f(1/(a^2 x))"),
        ("quantization", "W = int S V da db/(2 a^2 hbar); S = (4/pi) Tr[W V C]"),
        ("identity", "int |phi><phi| da db/(2 pi hbar a^2) = Id"),
        ("husimi", "W~ = <phi,W phi>/hbar; int W~ da db/(2 pi a^2) = Tr W"),
        ("wigner", "W_psi = <psi, V C psi>/hbar; int W_psi da db/a^2 = pi |psi|^2"),
        ("mellin_symbol", "w_M(s,xi) = int a^(s-1) S(a,xi) da, xi = b; frequency form shifted to xi - i eta"),
        ("cross_element", "<phi_ab,W phi_a'b'> = C^2 (aa')^(1/hbar+1/2)/(4hbar) (2pi)^-1 int int w_M Gamma(k)^2 l1^-k l2^-k, k = s/2+1/hbar+1"),
        ("continuation", "hbar W~(a+al+i be, b+be-i al) = (A^2/(a a'))^(1/hbar+1/2) <phi_(a+2al,b+2be), W phi_ab>, A = a+al+i be"),
        ("rate_direct", "dW~/dt = (2/hbar^2) Im <phi, H W phi>"),
        ("rate_kernel", "dW~/dt = (2/hbar) Im int Phi W~(complex) dal dbe"),
    ]
    .iter()
    .map(|(k, v)| (k.to_string(), v.to_string()))
    .chain(std::iter::once(("hbar".to_string(), format!("{h}"))))
    .collect()
}

/// Three-way comparison of Husimi rates for `W = |ψ^t⟩⟨ψ^t|` under the
/// Hamiltonian with symbol `h_symbol`. Per-probe failures are recorded.
pub fn verify_evolution(
    h_symbol: &AffineSymbol,
    psi0: &HalfLineFunction,
    probes: &[PhasePoint],
    hb: PlanckScale,
    settings: &VerifySettings,
) -> Result<EvolutionReport> {
    let h_op = quantize_kernel(h_symbol, &settings.grid, hb)?;
    let span = settings.t_eval.abs() + 2.0 * settings.delta;
    let plan = PropagationPlan::new(h_op, hb, vec![-span, span])?;
    let spec = symbol_mellin(h_symbol, &settings.contour, &settings.omega)?;
    let kernel = MellinKernel::new(&spec, hb, Some(&settings.xi))?;
    evolution_with(&plan, &kernel, psi0, probes, settings)
}

/// [`verify_evolution`] with a prebuilt plan and kernel.
pub fn evolution_with(
    plan: &PropagationPlan,
    kernel: &MellinKernel,
    psi0: &HalfLineFunction,
    probes: &[PhasePoint],
    settings: &VerifySettings,
) -> Result<EvolutionReport> {
    let hb = plan.hb;
    let h = hb.value();
    let t0 = settings.t_eval;
    let dl = settings.delta;
    let psi = propagate(plan, psi0, t0)?;
    let states: Vec<HalfLineFunction> =
        [t0 - dl, t0 + dl, t0 - 0.5 * dl, t0 + 0.5 * dl].iter().map(|&t| propagate(plan, psi0, t)).collect::<Result<_>>()?;
    let w = OperatorMatrix::projector(&psi);
    let energy = energy(&plan.h, &psi)?;
    let husimi = |f: &HalfLineFunction, p: PhasePoint| inner_product(&coherent_values(p, hb, &f.grid), f).map(|c| c.norm_sqr() / h);
    let mut out = Vec::with_capacity(probes.len());
    for &p in probes {
        let fd = (|| -> Result<(f64, f64, f64)> {
            let fd = (husimi(&states[1], p)? - husimi(&states[0], p)?) / (2.0 * dl);
            let fd2 = (husimi(&states[3], p)? - husimi(&states[2], p)?) / dl;
            Ok((fd, fd2, husimi_rhs_pure(p, &psi, &plan.h, hb)?))
        })();
        let (finite_difference, finite_difference_half, direct) = match fd {
            Ok(v) => v,
            Err(e) => {
                out.push(ProbeReport {
                    p,
                    finite_difference: f64::NAN,
                    finite_difference_half: f64::NAN,
                    direct: f64::NAN,
                    kernel: None,
                    error: Some(e.to_string()),
                });
                continue;
            }
        };
        let (kernel_rate, error) = match husimi_rhs_kernel(p, &w, kernel, &(settings.insertion)(p.b), hb) {
            Ok(k) => (Some(k), None),
            Err(e) => (None, Some(e.to_string())),
        };
        out.push(ProbeReport { p, finite_difference, finite_difference_half, direct, kernel: kernel_rate, error });
    }
    let max_fd_gap = out.iter().map(|r| if r.direct.is_finite() { r.fd_gap() } else { f64::INFINITY }).fold(0.0, f64::max);
    let mut max_kernel_gap = [0.0f64; 4];
    for (v, g) in max_kernel_gap.iter_mut().enumerate() {
        *g = out.iter().map(|r| r.kernel_gap(v).unwrap_or(f64::INFINITY)).fold(0.0, f64::max);
    }
    Ok(EvolutionReport { probes: out, conventions: conventions_ledger(hb), max_fd_gap, max_kernel_gap, energy })
}
